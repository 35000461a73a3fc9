use std::sync::Arc;

use super::distribution::{check_entries, check_len, SUM_TOL};
use super::{Alphabet, DiscreteDistribution};
use crate::error::{Error, Result};

/// Row-stochastic table: one distribution over `output` per symbol of `input`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalKernel {
    input: Arc<Alphabet>,
    output: Arc<Alphabet>,
    table: Vec<f64>,
}

impl ConditionalKernel {
    pub fn new(
        input: impl Into<Arc<Alphabet>>,
        output: impl Into<Arc<Alphabet>>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let input = input.into();
        check_len(rows.len(), input.len())?;
        let table = rows.into_iter().flatten().collect();
        Self::from_flat(input, output, table)
    }

    /// `table` is row-major, `input.len()` rows of `output.len()` entries.
    pub fn from_flat(
        input: impl Into<Arc<Alphabet>>,
        output: impl Into<Arc<Alphabet>>,
        table: Vec<f64>,
    ) -> Result<Self> {
        let input = input.into();
        let output = output.into();
        let m = output.len();
        check_len(table.len(), input.len() * m)?;
        check_entries(&table)?;
        for (row, chunk) in table.chunks(m).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::RowNotStochastic { row, sum });
            }
        }
        Ok(Self {
            input,
            output,
            table,
        })
    }

    /// Deterministic kernel mapping input `i` to output `choice[i]`.
    pub fn deterministic(
        input: impl Into<Arc<Alphabet>>,
        output: impl Into<Arc<Alphabet>>,
        choice: &[usize],
    ) -> Result<Self> {
        let input = input.into();
        let output = output.into();
        check_len(choice.len(), input.len())?;
        let m = output.len();
        let mut table = vec![0.0; input.len() * m];
        for (i, &c) in choice.iter().enumerate() {
            if c >= m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    got: c + 1,
                });
            }
            table[i * m + c] = 1.0;
        }
        Ok(Self {
            input,
            output,
            table,
        })
    }

    /// Every row equal to `row`.
    pub fn constant(input: impl Into<Arc<Alphabet>>, row: &DiscreteDistribution) -> Self {
        let input = input.into();
        let table = (0..input.len())
            .flat_map(|_| row.weights().iter().copied())
            .collect();
        Self {
            input,
            output: row.alphabet_arc().clone(),
            table,
        }
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn input_arc(&self) -> &Arc<Alphabet> {
        &self.input
    }

    pub fn output_arc(&self) -> &Arc<Alphabet> {
        &self.output
    }

    pub fn n_inputs(&self) -> usize {
        self.input.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.output.len();
        &self.table[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.table.chunks(self.output.len())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.output.len() + j]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row_distribution(&self, i: usize) -> DiscreteDistribution {
        DiscreteDistribution::new(self.output.clone(), self.row(i).to_vec())
            .expect("kernel rows are validated")
    }

    /// Output index per row when every row is a point mass.
    pub fn deterministic_choice(&self) -> Option<Vec<usize>> {
        self.rows()
            .map(|r| {
                let mut nz = r.iter().enumerate().filter(|(_, &v)| v != 0.0);
                match (nz.next(), nz.next()) {
                    (Some((j, &1.0)), None) => Some(j),
                    _ => None,
                }
            })
            .collect()
    }

    /// Σ_i w_i · row_i.
    pub fn push_forward(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output.len()];
        for (w, row) in weights.iter().zip(self.rows()) {
            if *w == 0.0 {
                continue;
            }
            for (o, q) in out.iter_mut().zip(row) {
                *o += w * q;
            }
        }
        out
    }
}

/// Joint probability table over two alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    first: Arc<Alphabet>,
    second: Arc<Alphabet>,
    table: Vec<f64>,
}

impl JointDistribution {
    pub fn new(
        first: impl Into<Arc<Alphabet>>,
        second: impl Into<Arc<Alphabet>>,
        table: Vec<f64>,
    ) -> Result<Self> {
        let first = first.into();
        let second = second.into();
        super::distribution::check_simplex(&table, first.len() * second.len())?;
        Ok(Self {
            first,
            second,
            table,
        })
    }

    pub fn first(&self) -> &Alphabet {
        &self.first
    }

    pub fn second(&self) -> &Alphabet {
        &self.second
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.second.len() + j]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn first_marginal(&self) -> DiscreteDistribution {
        let m = self.second.len();
        let w = self.table.chunks(m).map(|r| r.iter().sum()).collect();
        DiscreteDistribution::new(self.first.clone(), w).expect("marginal of a valid joint")
    }

    pub fn second_marginal(&self) -> DiscreteDistribution {
        let m = self.second.len();
        let mut w = vec![0.0; m];
        for row in self.table.chunks(m) {
            for (acc, v) in w.iter_mut().zip(row) {
                *acc += v;
            }
        }
        DiscreteDistribution::new(self.second.clone(), w).expect("marginal of a valid joint")
    }
}
