use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    gaussian_noise_channel, Alphabet, ConditionalKernel, DegradationModel, DiscreteDistribution,
    Grid,
};
use crate::error::{Error, Result};

/// Default number of observation bins for Gaussian models without a grid.
pub const DEFAULT_GAUSSIAN_BINS: usize = 1401;

/// JSON description of a degradation model.
///
/// ```json
/// {"type": "discrete", "x_labels": ["a", "b"], "x_values": [0, 1],
///  "prior": [0.5, 0.5], "channel": [[0.9, 0.1], [0.2, 0.8]]}
/// {"type": "gaussian", "x_values": [-1, 0, 1], "prior": [0.45, 0.1, 0.45],
///  "sigma": 1.0, "grid": {"lo": -7, "hi": 7, "n_bins": 1401}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelFile {
    Discrete {
        x_labels: Vec<String>,
        /// Scalar value per X symbol; required for square error.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_values: Option<Vec<f64>>,
        /// Defaults to "0", "1", ...
        #[serde(default, skip_serializing_if = "Option::is_none")]
        y_labels: Option<Vec<String>>,
        prior: Vec<f64>,
        /// One row p(·|x) per X symbol.
        channel: Vec<Vec<f64>>,
    },
    /// Scalar prior observed through additive Gaussian noise, binned on a grid.
    Gaussian {
        x_values: Vec<f64>,
        prior: Vec<f64>,
        sigma: f64,
        /// Defaults to ±6σ beyond the extreme values with 1401 bins.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<Grid>,
    },
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    pub fn build(&self) -> Result<DegradationModel> {
        match self {
            ModelFile::Discrete {
                x_labels,
                x_values,
                y_labels,
                prior,
                channel,
            } => {
                let x = match x_values {
                    Some(v) => {
                        if v.len() != x_labels.len() {
                            return Err(Error::LengthMismatch {
                                expected: x_labels.len(),
                                got: v.len(),
                            });
                        }
                        Alphabet::with_values(
                            x_labels.clone(),
                            v.iter().map(|&s| vec![s]).collect(),
                        )?
                    }
                    None => Alphabet::new(x_labels.clone())?,
                };
                let n_y = channel.first().map_or(0, Vec::len);
                let y = match y_labels {
                    Some(l) => Alphabet::new(l.clone())?,
                    None => Alphabet::indexed(n_y)?,
                };
                let x = Arc::new(x);
                let prior = DiscreteDistribution::new(x.clone(), prior.clone())?;
                DegradationModel::new(prior, ConditionalKernel::new(x, y, channel.clone())?)
            }
            ModelFile::Gaussian {
                x_values,
                prior,
                sigma,
                grid,
            } => {
                let x = Alphabet::from_scalars(x_values)?;
                let prior = DiscreteDistribution::new(x, prior.clone())?;
                let grid = match grid {
                    Some(g) => *g,
                    None => Grid::covering(x_values, *sigma, DEFAULT_GAUSSIAN_BINS)?,
                };
                gaussian_noise_channel(prior, *sigma, &grid)
            }
        }
    }
}
