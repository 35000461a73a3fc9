use std::sync::Arc;

use super::{
    Alphabet, ConditionalKernel, DiscreteDistribution, DistortionMeasure, Estimator,
    JointDistribution,
};
use crate::error::{Error, Result};

/// Prior over X plus channel p(y|x), with the observation marginal and
/// posterior computed once at construction.
///
/// Observation symbols with zero marginal probability are dropped from the
/// observation alphabet used by estimators; their labels are kept in
/// [`DegradationModel::dropped`].
#[derive(Debug, Clone)]
pub struct DegradationModel {
    prior: DiscreteDistribution,
    channel: ConditionalKernel,
    observed: Arc<Alphabet>,
    observed_index: Vec<usize>,
    p_y: DiscreteDistribution,
    posterior: ConditionalKernel,
    dropped: Vec<String>,
}

impl DegradationModel {
    pub fn new(prior: DiscreteDistribution, channel: ConditionalKernel) -> Result<Self> {
        if !prior.alphabet().same_labels(channel.input()) {
            return Err(Error::AlphabetMismatch(
                "channel input alphabet differs from prior alphabet".into(),
            ));
        }
        let full_y = channel.push_forward(prior.weights());
        let mut observed_index = Vec::new();
        let mut dropped = Vec::new();
        for (j, &p) in full_y.iter().enumerate() {
            if p > 0.0 {
                observed_index.push(j);
            } else {
                dropped.push(channel.output().label(j).to_string());
            }
        }
        let y_all = channel.output();
        let labels = observed_index
            .iter()
            .map(|&j| y_all.label(j).to_string())
            .collect();
        let observed = match y_all.values() {
            Some(v) => Alphabet::with_values(
                labels,
                observed_index.iter().map(|&j| v[j].clone()).collect(),
            )?,
            None => Alphabet::new(labels)?,
        };
        let observed = Arc::new(observed);
        let p_y = DiscreteDistribution::new(
            observed.clone(),
            observed_index.iter().map(|&j| full_y[j]).collect(),
        )?;

        let nx = prior.len();
        let mut table = Vec::with_capacity(observed_index.len() * nx);
        for &j in &observed_index {
            let start = table.len();
            table.extend((0..nx).map(|i| channel.get(i, j) * prior.get(i)));
            let s: f64 = table[start..].iter().sum();
            for v in &mut table[start..] {
                *v /= s;
            }
        }
        let posterior =
            ConditionalKernel::from_flat(observed.clone(), prior.alphabet_arc().clone(), table)?;
        Ok(Self {
            prior,
            channel,
            observed,
            observed_index,
            p_y,
            posterior,
            dropped,
        })
    }

    pub fn prior(&self) -> &DiscreteDistribution {
        &self.prior
    }

    pub fn channel(&self) -> &ConditionalKernel {
        &self.channel
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        self.prior.alphabet()
    }

    pub fn x_alphabet_arc(&self) -> &Arc<Alphabet> {
        self.prior.alphabet_arc()
    }

    /// Observation alphabet with zero-probability symbols removed.
    pub fn y_alphabet(&self) -> &Alphabet {
        &self.observed
    }

    pub fn y_alphabet_arc(&self) -> &Arc<Alphabet> {
        &self.observed
    }

    /// Index of each retained observation in the channel's output alphabet.
    pub fn observed_index(&self) -> &[usize] {
        &self.observed_index
    }

    /// Labels of observation symbols with zero marginal probability.
    pub fn dropped(&self) -> &[String] {
        &self.dropped
    }

    pub fn p_y(&self) -> &DiscreteDistribution {
        &self.p_y
    }

    /// p(x|y) over retained observations.
    pub fn posterior(&self) -> &ConditionalKernel {
        &self.posterior
    }

    pub fn n_x(&self) -> usize {
        self.prior.len()
    }

    pub fn n_y(&self) -> usize {
        self.p_y.len()
    }

    fn check_estimator(&self, est: &Estimator) -> Result<()> {
        if !est.input().same_labels(&self.observed) {
            return Err(Error::AlphabetMismatch(
                "estimator input alphabet differs from the retained observation alphabet".into(),
            ));
        }
        Ok(())
    }

    fn check_measure(&self, dist: &DistortionMeasure) -> Result<()> {
        if !dist.source().same_labels(self.x_alphabet()) {
            return Err(Error::AlphabetMismatch(
                "distortion source alphabet differs from X alphabet".into(),
            ));
        }
        Ok(())
    }

    /// p_X̂(x̂) = Σ_y q(x̂|y) p_Y(y).
    pub fn output_distribution(&self, est: &Estimator) -> Result<DiscreteDistribution> {
        self.check_estimator(est)?;
        let w = est.kernel().push_forward(self.p_y.weights());
        DiscreteDistribution::new(est.kernel().output_arc().clone(), w)
    }

    /// p(x, x̂) = Σ_y p(x|y) q(x̂|y) p_Y(y).
    pub fn induced_joint(&self, est: &Estimator) -> Result<JointDistribution> {
        self.check_estimator(est)?;
        let nx = self.n_x();
        let m = est.output().len();
        let mut table = vec![0.0; nx * m];
        for (y, &py) in self.p_y.weights().iter().enumerate() {
            let post = self.posterior.row(y);
            let q = est.kernel().row(y);
            for (x, &px) in post.iter().enumerate() {
                let a = px * py;
                if a == 0.0 {
                    continue;
                }
                for (k, &qk) in q.iter().enumerate() {
                    table[x * m + k] += a * qk;
                }
            }
        }
        JointDistribution::new(
            self.prior.alphabet_arc().clone(),
            est.kernel().output_arc().clone(),
            table,
        )
    }

    /// f(x̂, y) = Σ_x Δ(x, x̂) p(x|y), stored with one row per retained y.
    pub fn conditional_cost(&self, dist: &DistortionMeasure) -> Result<CostTable> {
        self.check_measure(dist)?;
        let m = dist.target().len();
        let mut values = vec![0.0; self.n_y() * m];
        for y in 0..self.n_y() {
            let row = &mut values[y * m..(y + 1) * m];
            for (x, &px) in self.posterior.row(y).iter().enumerate() {
                if px == 0.0 {
                    continue;
                }
                for (k, r) in row.iter_mut().enumerate() {
                    *r += dist.get(x, k) * px;
                }
            }
        }
        Ok(CostTable {
            n_y: self.n_y(),
            n_xhat: m,
            values,
        })
    }

    /// Σ_y p_Y(y) Σ_x̂ f(x̂, y) q(x̂|y).
    pub fn mean_distortion(&self, est: &Estimator, dist: &DistortionMeasure) -> Result<f64> {
        self.check_estimator(est)?;
        if !est.output().same_labels(dist.target()) {
            return Err(Error::AlphabetMismatch(
                "estimator output alphabet differs from distortion target alphabet".into(),
            ));
        }
        let f = self.conditional_cost(dist)?;
        Ok(f.expected(self.p_y.weights(), est.kernel()))
    }
}

/// Conditional cost table f(x̂, y): one row per retained observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    n_y: usize,
    n_xhat: usize,
    values: Vec<f64>,
}

impl CostTable {
    pub fn new(n_y: usize, n_xhat: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_y * n_xhat {
            return Err(Error::LengthMismatch {
                expected: n_y * n_xhat,
                got: values.len(),
            });
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, value: v });
        }
        Ok(Self {
            n_y,
            n_xhat,
            values,
        })
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_xhat(&self) -> usize {
        self.n_xhat
    }

    pub fn get(&self, y: usize, xhat: usize) -> f64 {
        self.values[y * self.n_xhat + xhat]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.values[y * self.n_xhat..(y + 1) * self.n_xhat]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lowest-index minimizer and minimum of row `y`.
    pub fn argmin(&self, y: usize) -> (usize, f64) {
        let row = self.row(y);
        let mut best = 0;
        for (k, &v) in row.iter().enumerate().skip(1) {
            if v < row[best] {
                best = k;
            }
        }
        (best, row[best])
    }

    pub fn expected(&self, p_y: &[f64], kernel: &ConditionalKernel) -> f64 {
        p_y.iter()
            .enumerate()
            .map(|(y, &py)| {
                py * self
                    .row(y)
                    .iter()
                    .zip(kernel.row(y))
                    .map(|(f, q)| f * q)
                    .sum::<f64>()
            })
            .sum()
    }
}
