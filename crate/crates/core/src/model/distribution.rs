use std::sync::Arc;

use super::Alphabet;
use crate::error::{Error, Result};

/// Tolerance on probability sums.
pub const SUM_TOL: f64 = 1e-9;

/// Probability vector over a labeled alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    alphabet: Arc<Alphabet>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates without renormalizing.
    pub fn new(alphabet: impl Into<Arc<Alphabet>>, weights: Vec<f64>) -> Result<Self> {
        let alphabet = alphabet.into();
        check_simplex(&weights, alphabet.len())?;
        Ok(Self { alphabet, weights })
    }

    /// Explicit normalization of nonnegative masses (e.g. a histogram).
    pub fn from_masses(alphabet: impl Into<Arc<Alphabet>>, masses: Vec<f64>) -> Result<Self> {
        let alphabet = alphabet.into();
        check_len(masses.len(), alphabet.len())?;
        check_entries(&masses)?;
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::SumNotOne { sum: total });
        }
        let weights = masses.into_iter().map(|m| m / total).collect();
        Self::new(alphabet, weights)
    }

    pub fn point_mass(alphabet: impl Into<Arc<Alphabet>>, index: usize) -> Result<Self> {
        let alphabet = alphabet.into();
        if index >= alphabet.len() {
            return Err(Error::LengthMismatch {
                expected: alphabet.len(),
                got: index + 1,
            });
        }
        let mut w = vec![0.0; alphabet.len()];
        w[index] = 1.0;
        Ok(Self {
            alphabet,
            weights: w,
        })
    }

    pub fn uniform(alphabet: impl Into<Arc<Alphabet>>) -> Self {
        let alphabet = alphabet.into();
        let n = alphabet.len();
        Self {
            alphabet,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn alphabet_arc(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Mean of the value vectors.
    pub fn mean(&self) -> Result<Vec<f64>> {
        let values = self.alphabet.require_values("mean")?;
        let mut m = vec![0.0; values[0].len()];
        for (w, v) in self.weights.iter().zip(values) {
            for (acc, x) in m.iter_mut().zip(v) {
                *acc += w * x;
            }
        }
        Ok(m)
    }
}

/// Validates `weights` as a distribution over `alphabet`.
pub fn validate_distribution(
    weights: Vec<f64>,
    alphabet: impl Into<Arc<Alphabet>>,
) -> Result<DiscreteDistribution> {
    DiscreteDistribution::new(alphabet, weights)
}

pub(crate) fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn check_entries(weights: &[f64]) -> Result<()> {
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite { index: i, value: w });
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight { index: i, value: w });
        }
    }
    Ok(())
}

pub(crate) fn check_simplex(weights: &[f64], n: usize) -> Result<()> {
    check_len(weights.len(), n)?;
    check_entries(weights)?;
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::SumNotOne { sum });
    }
    Ok(())
}
