use std::sync::Arc;

use super::{Alphabet, ConditionalKernel};
use crate::error::{Error, Result};

/// Conditional kernel from observations to reconstructions.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    kernel: ConditionalKernel,
}

impl Estimator {
    pub fn new(kernel: ConditionalKernel) -> Self {
        Self { kernel }
    }

    pub fn deterministic(
        input: impl Into<Arc<Alphabet>>,
        output: impl Into<Arc<Alphabet>>,
        choice: &[usize],
    ) -> Result<Self> {
        ConditionalKernel::deterministic(input, output, choice).map(Self::new)
    }

    pub fn kernel(&self) -> &ConditionalKernel {
        &self.kernel
    }

    pub fn into_kernel(self) -> ConditionalKernel {
        self.kernel
    }

    pub fn input(&self) -> &Alphabet {
        self.kernel.input()
    }

    pub fn output(&self) -> &Alphabet {
        self.kernel.output()
    }

    pub fn is_deterministic(&self) -> bool {
        self.kernel.deterministic_choice().is_some()
    }

    /// Convex combination `w·self + (1−w)·other` of two kernels on shared alphabets.
    pub fn mix(&self, other: &Estimator, w: f64) -> Result<Estimator> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "mixture weight {w} outside [0, 1]"
            )));
        }
        if !self.input().same_labels(other.input()) || !self.output().same_labels(other.output()) {
            return Err(Error::AlphabetMismatch("mixture of estimators".into()));
        }
        if w == 0.0 {
            return Ok(other.clone());
        }
        if w == 1.0 {
            return Ok(self.clone());
        }
        let table = self
            .kernel
            .table()
            .iter()
            .zip(other.kernel.table())
            .map(|(a, b)| w * a + (1.0 - w) * b)
            .collect();
        ConditionalKernel::from_flat(
            self.kernel.input_arc().clone(),
            self.kernel.output_arc().clone(),
            table,
        )
        .map(Self::new)
    }
}

impl From<ConditionalKernel> for Estimator {
    fn from(kernel: ConditionalKernel) -> Self {
        Self::new(kernel)
    }
}
