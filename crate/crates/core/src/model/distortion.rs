use std::collections::HashMap;
use std::sync::Arc;

use super::Alphabet;
use crate::error::{Error, Result};

/// Cost table Δ(x, x̂) indexed by source × reconstruction alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMeasure {
    name: String,
    source: Arc<Alphabet>,
    target: Arc<Alphabet>,
    cost: Vec<f64>,
}

impl DistortionMeasure {
    pub fn from_table(
        name: impl Into<String>,
        source: impl Into<Arc<Alphabet>>,
        target: impl Into<Arc<Alphabet>>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let source = source.into();
        let target = target.into();
        if rows.len() != source.len() {
            return Err(Error::LengthMismatch {
                expected: source.len(),
                got: rows.len(),
            });
        }
        let mut cost = Vec::with_capacity(source.len() * target.len());
        for row in rows {
            if row.len() != target.len() {
                return Err(Error::LengthMismatch {
                    expected: target.len(),
                    got: row.len(),
                });
            }
            cost.extend(row);
        }
        let m = Self {
            name: name.into(),
            source,
            target,
            cost,
        };
        m.check()?;
        Ok(m)
    }

    /// Δ(x, x̂) = ||x − x̂||².
    pub fn square_error(
        source: impl Into<Arc<Alphabet>>,
        target: impl Into<Arc<Alphabet>>,
    ) -> Result<Self> {
        let source = source.into();
        let target = target.into();
        let xs = source.require_values("square error source alphabet")?;
        let ys = target.require_values("square error target alphabet")?;
        if xs[0].len() != ys[0].len() {
            return Err(Error::AlphabetMismatch(format!(
                "value dimensions {} and {}",
                xs[0].len(),
                ys[0].len()
            )));
        }
        let cost = xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| squared_distance(x, y)))
            .collect();
        let m = Self {
            name: "square".into(),
            source,
            target,
            cost,
        };
        m.check()?;
        Ok(m)
    }

    /// Δ(x, x̂) = 1 − [label(x) = label(x̂)].
    pub fn zero_one(source: impl Into<Arc<Alphabet>>, target: impl Into<Arc<Alphabet>>) -> Self {
        let source = source.into();
        let target = target.into();
        let cost = source
            .labels()
            .iter()
            .flat_map(|a| {
                target
                    .labels()
                    .iter()
                    .map(move |b| if a == b { 0.0 } else { 1.0 })
            })
            .collect();
        Self {
            name: "zero-one".into(),
            source,
            target,
            cost,
        }
    }

    /// Δ(x, x̂) = ||ψ(x) − ψ(x̂)||² for a per-label feature table ψ.
    pub fn feature_map(
        source: impl Into<Arc<Alphabet>>,
        target: impl Into<Arc<Alphabet>>,
        features: &HashMap<String, Vec<f64>>,
    ) -> Result<Self> {
        let source = source.into();
        let target = target.into();
        let lookup = |label: &str| {
            features
                .get(label)
                .ok_or_else(|| Error::MissingValues(format!("feature for label {label:?}")))
        };
        let fx: Vec<&Vec<f64>> = source
            .labels()
            .iter()
            .map(|l| lookup(l))
            .collect::<Result<_>>()?;
        let fy: Vec<&Vec<f64>> = target
            .labels()
            .iter()
            .map(|l| lookup(l))
            .collect::<Result<_>>()?;
        let dim = fx[0].len();
        if fx.iter().chain(&fy).any(|f| f.len() != dim) {
            return Err(Error::InvalidDistortion("feature dimensions differ".into()));
        }
        let cost = fx
            .iter()
            .flat_map(|a| fy.iter().map(move |b| squared_distance(a, b)))
            .collect();
        let m = Self {
            name: "feature-map".into(),
            source,
            target,
            cost,
        };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        let n = self.target.len();
        for (k, &c) in self.cost.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidDistortion(format!(
                    "cost {c} at ({}, {})",
                    k / n,
                    k % n
                )));
            }
        }
        for (i, l) in self.source.labels().iter().enumerate() {
            if let Some(j) = self.target.index_of(l) {
                if self.cost[i * n + j] != 0.0 {
                    return Err(Error::InvalidDistortion(format!(
                        "nonzero self-cost for label {l:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same cost rule evaluated against another reconstruction alphabet.
    pub fn retarget(&self, target: impl Into<Arc<Alphabet>>) -> Result<Self> {
        match self.name.as_str() {
            "square" => Self::square_error(self.source.clone(), target),
            "zero-one" => Ok(Self::zero_one(self.source.clone(), target)),
            _ => Err(Error::NotApplicable(format!(
                "measure {:?} cannot be re-targeted",
                self.name
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Alphabet {
        &self.source
    }

    pub fn target(&self) -> &Alphabet {
        &self.target
    }

    pub fn target_arc(&self) -> &Arc<Alphabet> {
        &self.target
    }

    pub fn get(&self, x: usize, xhat: usize) -> f64 {
        self.cost[x * self.target.len() + xhat]
    }

    pub fn table(&self) -> &[f64] {
        &self.cost
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
