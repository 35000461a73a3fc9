use std::f64::consts::SQRT_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Alphabet, ConditionalKernel, DegradationModel, DiscreteDistribution};
use crate::error::{Error, Result};

/// Number of noise standard deviations the grid must extend beyond the extreme signal values.
pub const GRID_SPAN_SIGMAS: f64 = 6.0;

/// Uniform binning of the real line segment `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n_bins: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        let g = Self { lo, hi, n_bins };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidGrid(format!(
                "bounds [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.n_bins < 3 {
            return Err(Error::InvalidGrid(format!(
                "{} bins, need at least 3",
                self.n_bins
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n_bins as f64
    }

    pub fn edge(&self, k: usize) -> f64 {
        if k == self.n_bins {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * k as f64 / self.n_bins as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        0.5 * (self.edge(k) + self.edge(k + 1))
    }

    /// Default grid for scalar signal values: ±6σ beyond the extremes.
    pub fn covering(x_values: &[f64], sigma: f64, n_bins: usize) -> Result<Self> {
        let (lo, hi) = extremes(x_values);
        Self::new(
            lo - GRID_SPAN_SIGMAS * sigma,
            hi + GRID_SPAN_SIGMAS * sigma,
            n_bins,
        )
    }
}

fn extremes(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        })
}

fn std_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

fn std_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Mass of N(0,1) on [a, b], evaluated on the side of zero that avoids cancellation.
fn interval_mass(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        std_cdf(b) - std_cdf(a)
    } else if a >= 0.0 {
        std_sf(a) - std_sf(b)
    } else {
        0.5 * (libm::erf(b / SQRT_2) - libm::erf(a / SQRT_2))
    }
}

/// Channel Y = X + N, N ~ N(0, σ²), with Y binned on `grid`; tail mass is
/// folded into the two end bins. Observation values are bin centers.
pub fn gaussian_channel(
    x: impl Into<Arc<Alphabet>>,
    sigma: f64,
    grid: &Grid,
) -> Result<ConditionalKernel> {
    let x = x.into();
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    grid.check()?;
    let xs = x.require_scalars("Gaussian channel signal alphabet")?;
    let (min_x, max_x) = extremes(&xs);
    let need_lo = min_x - GRID_SPAN_SIGMAS * sigma;
    let need_hi = max_x + GRID_SPAN_SIGMAS * sigma;
    let slack = 1e-12 * (1.0 + need_lo.abs().max(need_hi.abs()));
    if grid.lo > need_lo + slack || grid.hi < need_hi - slack {
        return Err(Error::GridTooNarrow {
            lo: grid.lo,
            hi: grid.hi,
            need_lo,
            need_hi,
        });
    }

    let n = grid.n_bins;
    let centers: Vec<f64> = (0..n).map(|k| grid.center(k)).collect();
    let y = Alphabet::with_values(
        (0..n).map(|k| format!("y{k}")).collect(),
        centers.iter().map(|&c| vec![c]).collect(),
    )?;
    let mut table = Vec::with_capacity(xs.len() * n);
    for &xv in &xs {
        let z: Vec<f64> = (0..=n).map(|k| (grid.edge(k) - xv) / sigma).collect();
        table.push(std_cdf(z[1]));
        for k in 1..n - 1 {
            table.push(interval_mass(z[k], z[k + 1]));
        }
        table.push(std_sf(z[n - 1]));
    }
    ConditionalKernel::from_flat(x, y, table)
}

/// Degradation model with a Gaussian-noise channel over `prior`'s scalar values.
pub fn gaussian_noise_channel(
    prior: DiscreteDistribution,
    sigma: f64,
    grid: &Grid,
) -> Result<DegradationModel> {
    let channel = gaussian_channel(prior.alphabet_arc().clone(), sigma, grid)?;
    DegradationModel::new(prior, channel)
}
