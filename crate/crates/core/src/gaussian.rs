//! Closed-form perception-distortion function for a unit-variance Gaussian
//! signal in additive Gaussian noise, over linear estimators x̂ = a·y with
//! KL divergence as the perceptual index.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tradeoff::curve_csv;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSetting {
    sigma_n: f64,
}

impl GaussianSetting {
    pub fn new(sigma_n: f64) -> Result<Self> {
        if !(sigma_n > 0.0 && sigma_n.is_finite()) {
            return Err(Error::NonPositiveSigma(sigma_n));
        }
        Ok(Self { sigma_n })
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    /// Variance of the observation, 1 + σ_N².
    fn obs_var(&self) -> f64 {
        1.0 + self.sigma_n * self.sigma_n
    }

    /// KL between N(0, 1) and N(0, a²(1 + σ_N²)).
    pub fn dkl_linear(&self, a: f64) -> Result<f64> {
        if a == 0.0 {
            return Err(Error::ZeroA);
        }
        let v = self.obs_var();
        Ok((a.abs() * v.sqrt()).ln() + 1.0 / (2.0 * a * a * v) - 0.5)
    }

    /// d/da of [`Self::dkl_linear`] for a > 0.
    fn dkl_slope(&self, a: f64) -> f64 {
        1.0 / a - 1.0 / (self.obs_var() * a * a * a)
    }

    /// Mean square error of x̂ = a·y.
    pub fn mse_linear(&self, a: f64) -> f64 {
        1.0 + a * a * self.obs_var() - 2.0 * a
    }

    pub fn d_min(&self) -> f64 {
        let s2 = self.sigma_n * self.sigma_n;
        s2 / (1.0 + s2)
    }

    /// Smallest distortion with zero perceptual index: the MSE of the variance-matching gain.
    pub fn d_zero(&self) -> f64 {
        self.mse_linear(1.0 / self.obs_var().sqrt())
    }

    /// Gains a₋ ≤ a₊ with mse_linear(a) = D.
    pub fn feasible_interval(&self, d: f64) -> Result<(f64, f64)> {
        let v = self.obs_var();
        let disc = (d * v - self.sigma_n * self.sigma_n).max(0.0);
        if !(d >= self.d_min()) {
            return Err(Error::InfeasibleDistortion {
                requested: d,
                minimum: self.d_min(),
            });
        }
        let r = disc.sqrt();
        Ok(((1.0 - r) / v, (1.0 + r) / v))
    }

    pub fn perception(&self, d: f64) -> Result<f64> {
        let (_, a_plus) = self.feasible_interval(d)?;
        if d >= self.d_zero() {
            return Ok(0.0);
        }
        self.dkl_linear(a_plus).map(|p| p.max(0.0))
    }

    /// dP/dD; −∞ at D_min and 0 from D_0 on.
    pub fn perception_slope(&self, d: f64) -> Result<f64> {
        let (_, a_plus) = self.feasible_interval(d)?;
        if d >= self.d_zero() {
            return Ok(0.0);
        }
        let r = d * self.obs_var() - self.sigma_n * self.sigma_n;
        if r <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.dkl_slope(a_plus) / (2.0 * r.sqrt()))
    }

    pub fn sample_curve(&self, d_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        d_grid
            .iter()
            .map(|&d| Ok((d, self.perception(d)?)))
            .collect()
    }

    /// Curve CSV with the same columns as traced curves; λ = −1/P'(D) and the gap is 0.
    pub fn write_curve_csv<W: std::io::Write>(&self, d_grid: &[f64], out: W) -> Result<()> {
        let rows = d_grid
            .iter()
            .map(|&d| {
                let slope = self.perception_slope(d)?;
                let lambda = if slope == 0.0 {
                    f64::INFINITY
                } else {
                    -1.0 / slope
                };
                Ok((lambda, d, self.perception(d)?, 0.0, false))
            })
            .collect::<Result<Vec<_>>>()?;
        curve_csv(out, &rows, false)
    }
}

/// KL between N(0, 1) and the law of a·y, y ~ N(0, 1 + σ_N²).
pub fn dkl_linear(a: f64, sigma_n: f64) -> Result<f64> {
    GaussianSetting::new(sigma_n)?.dkl_linear(a)
}

pub fn mse_linear(a: f64, sigma_n: f64) -> Result<f64> {
    Ok(GaussianSetting::new(sigma_n)?.mse_linear(a))
}

pub fn feasible_interval(d: f64, sigma_n: f64) -> Result<(f64, f64)> {
    GaussianSetting::new(sigma_n)?.feasible_interval(d)
}

pub fn perception_distortion_closed_form(d: f64, sigma_n: f64) -> Result<f64> {
    GaussianSetting::new(sigma_n)?.perception(d)
}

pub fn sample_curve(sigma_n: f64, d_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    GaussianSetting::new(sigma_n)?.sample_curve(d_grid)
}
