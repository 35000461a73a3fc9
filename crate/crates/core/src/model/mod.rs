//! Distributions, channels, posteriors, estimator kernels and distortion measures.

mod alphabet;
mod degradation;
mod distortion;
mod distribution;
mod estimator;
mod file;
mod kernel;
mod noise;

pub use alphabet::{format_value, Alphabet};
pub use degradation::{CostTable, DegradationModel};
pub use distortion::DistortionMeasure;
pub use distribution::{validate_distribution, DiscreteDistribution, SUM_TOL};
pub use estimator::Estimator;
pub use file::{ModelFile, DEFAULT_GAUSSIAN_BINS};
pub use kernel::{ConditionalKernel, JointDistribution};
pub use noise::{gaussian_channel, gaussian_noise_channel, Grid, GRID_SPAN_SIGMAS};
