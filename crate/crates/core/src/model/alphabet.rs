use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Finite set of labeled symbols, optionally carrying a real vector per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    labels: Vec<String>,
    values: Option<Vec<Vec<f64>>>,
}

impl Alphabet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        check_labels(&labels)?;
        Ok(Self {
            labels,
            values: None,
        })
    }

    pub fn with_values(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_labels(&labels)?;
        if values.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                got: values.len(),
            });
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::InvalidAlphabet("value vectors are empty".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidAlphabet(format!(
                    "value {i} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if let Some(&bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    index: i,
                    value: bad,
                });
            }
        }
        Ok(Self {
            labels,
            values: Some(values),
        })
    }

    /// Scalar-valued alphabet labeled by the shortest decimal form of each value.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let labels = values.iter().map(|&v| format_value(&[v])).collect();
        Self::with_values(labels, values.iter().map(|&v| vec![v]).collect())
    }

    pub fn from_vectors(values: Vec<Vec<f64>>) -> Result<Self> {
        let labels = values.iter().map(|v| format_value(v)).collect();
        Self::with_values(labels, values)
    }

    /// Labels "0", "1", ..., n-1 without values.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn values(&self) -> Option<&[Vec<f64>]> {
        self.values.as_deref()
    }

    pub fn value(&self, i: usize) -> Option<&[f64]> {
        self.values.as_ref().map(|v| v[i].as_slice())
    }

    pub fn dim(&self) -> Option<usize> {
        self.values.as_ref().map(|v| v[0].len())
    }

    /// Values as scalars; `None` when absent or not one-dimensional.
    pub fn scalar_values(&self) -> Option<Vec<f64>> {
        match &self.values {
            Some(v) if v[0].len() == 1 => Some(v.iter().map(|x| x[0]).collect()),
            _ => None,
        }
    }

    pub fn require_values(&self, what: &str) -> Result<&[Vec<f64>]> {
        self.values()
            .ok_or_else(|| Error::MissingValues(what.to_string()))
    }

    pub fn require_scalars(&self, what: &str) -> Result<Vec<f64>> {
        self.scalar_values()
            .ok_or_else(|| Error::MissingValues(format!("{what} (scalar values)")))
    }

    pub fn same_labels(&self, other: &Alphabet) -> bool {
        self.labels == other.labels
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidAlphabet("alphabet is empty".into()));
    }
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if l.is_empty() {
            return Err(Error::InvalidAlphabet("empty label".into()));
        }
        if !seen.insert(l.as_str()) {
            return Err(Error::InvalidAlphabet(format!("duplicate label {l:?}")));
        }
    }
    Ok(())
}

/// Shortest round-trip decimal form; vectors are written as "(a,b,...)".
pub fn format_value(v: &[f64]) -> String {
    let fmt = |x: f64| {
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x}")
    };
    if v.len() == 1 {
        return fmt(v[0]);
    }
    let mut s = String::from("(");
    for (i, &x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{}", fmt(x));
    }
    s.push(')');
    s
}
