//! Canonical estimators and the distribution-preservation machinery.

use serde::Serialize;

use crate::bounds::{self, is_tie, InfeasibilityCertificate, TransportProblem};
use crate::divergence::total_variation_by_label;
use crate::error::{Error, Result};
use crate::model::{
    format_value, Alphabet, ConditionalKernel, DegradationModel, DiscreteDistribution,
    DistortionMeasure, Estimator,
};

/// Posterior means closer than this (max-abs) share one output symbol.
pub const MEAN_MERGE_TOL: f64 = 1e-12;
/// Default slack τ in the optimal-support sets.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Threshold above which a marginal mismatch counts as broken preservation.
pub const PRESERVATION_TV_TOL: f64 = 1e-6;
/// Default mixing weights for [`stability_probe`].
pub const DEFAULT_ALPHAS: [f64; 3] = [0.9, 0.5, 0.1];
/// Posterior entries above this count toward a non-degenerate posterior.
pub const POSTERIOR_SUPPORT_TOL: f64 = 1e-12;

fn posterior_means(model: &DegradationModel) -> Result<Vec<Vec<f64>>> {
    let values = model.x_alphabet().require_values("posterior mean")?;
    let dim = values[0].len();
    Ok(model
        .posterior()
        .rows()
        .map(|row| {
            let mut m = vec![0.0; dim];
            for (p, v) in row.iter().zip(values) {
                for (acc, x) in m.iter_mut().zip(v) {
                    *acc += p * x;
                }
            }
            m
        })
        .collect())
}

/// Deterministic posterior-mean estimator. Its output alphabet holds the
/// distinct posterior means in increasing (lexicographic) order.
pub fn mmse_estimator(model: &DegradationModel) -> Result<Estimator> {
    let means = posterior_means(model)?;
    let mut reps: Vec<Vec<f64>> = Vec::new();
    let mut slot = Vec::with_capacity(means.len());
    for m in &means {
        let found = reps.iter().position(|r| {
            r.iter()
                .zip(m)
                .all(|(a, b)| (a - b).abs() <= MEAN_MERGE_TOL)
        });
        slot.push(found.unwrap_or_else(|| {
            reps.push(m.clone());
            reps.len() - 1
        }));
    }
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by(|&a, &b| {
        reps[a]
            .iter()
            .zip(&reps[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut rank = vec![0; reps.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| reps[i].clone()).collect();
    let labels = sorted.iter().map(|v| format_value(v)).collect();
    let output = Alphabet::with_values(labels, sorted)?;
    let choice: Vec<usize> = slot.iter().map(|&s| rank[s]).collect();
    Estimator::deterministic(model.y_alphabet_arc().clone(), output, &choice)
}

#[derive(Debug, Clone)]
pub struct MapEstimate {
    pub estimator: Estimator,
    /// Observations (retained-alphabet indices) where the mode was not unique.
    pub ties: Vec<usize>,
}

/// Posterior-mode estimator over the X alphabet; ties go to the lowest index.
pub fn map_estimator(model: &DegradationModel) -> Result<MapEstimate> {
    let mut choice = Vec::with_capacity(model.n_y());
    let mut ties = Vec::new();
    for (y, row) in model.posterior().rows().enumerate() {
        let mut best = 0;
        for (k, &p) in row.iter().enumerate().skip(1) {
            if p > row[best] {
                best = k;
            }
        }
        if row
            .iter()
            .enumerate()
            .any(|(k, &p)| k != best && is_tie(p, row[best]))
        {
            ties.push(y);
        }
        choice.push(best);
    }
    let estimator = Estimator::deterministic(
        model.y_alphabet_arc().clone(),
        model.x_alphabet_arc().clone(),
        &choice,
    )?;
    Ok(MapEstimate { estimator, ties })
}

/// Draws the reconstruction from the posterior.
pub fn posterior_sampling_estimator(model: &DegradationModel) -> Estimator {
    Estimator::new(model.posterior().clone())
}

/// Draws the reconstruction from the prior, ignoring the observation.
pub fn random_draw_estimator(model: &DegradationModel) -> Estimator {
    Estimator::new(ConditionalKernel::constant(
        model.y_alphabet_arc().clone(),
        model.prior(),
    ))
}

/// Half-width of the observation bracket used when inverting the posterior mean, in noise units.
const TRINARY_BRACKET: f64 = 60.0;
const TRINARY_INVERSE_TOL: f64 = 1e-10;
const TRINARY_STEP: f64 = 1e-5;

struct Trinary {
    p1: f64,
    p0: f64,
    sigma: f64,
}

impl Trinary {
    fn log_terms(&self, y: f64) -> [f64; 3] {
        let s2 = 2.0 * self.sigma * self.sigma;
        [
            self.p1.ln() - (y + 1.0) * (y + 1.0) / s2,
            if self.p0 > 0.0 {
                self.p0.ln() - y * y / s2
            } else {
                f64::NEG_INFINITY
            },
            self.p1.ln() - (y - 1.0) * (y - 1.0) / s2,
        ]
    }

    fn posterior_mean(&self, y: f64) -> f64 {
        let l = self.log_terms(y);
        let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = l.map(|v| (v - m).exp());
        (w[2] - w[0]) / (w[0] + w[1] + w[2])
    }

    fn density_y(&self, y: f64) -> f64 {
        let norm = 1.0 / (self.sigma * (2.0 * std::f64::consts::PI).sqrt());
        self.log_terms(y).iter().map(|v| v.exp()).sum::<f64>() * norm
    }
}

/// Density of the posterior-mean estimate for the prior P(±1) = p1, P(0) = p0
/// under additive N(0, σ²) noise with continuous observations, evaluated at
/// each point of `xhat`. Uses a bisection inverse of the posterior mean and a
/// central-difference derivative.
pub fn trinary_mmse_density(p1: f64, p0: f64, sigma: f64, xhat: &[f64]) -> Result<Vec<f64>> {
    if !(p1 > 0.0 && p0 >= 0.0 && (2.0 * p1 + p0 - 1.0).abs() <= 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "trinary prior needs 2·p1 + p0 = 1 with p1 > 0 (p1 = {p1}, p0 = {p0})"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let model = Trinary { p1, p0, sigma };
    let bound = TRINARY_BRACKET * sigma.max(1.0);
    let (g_lo, g_hi) = (model.posterior_mean(-bound), model.posterior_mean(bound));
    xhat.iter()
        .map(|&t| {
            if !(t > g_lo && t < g_hi) {
                return Ok(0.0);
            }
            let (mut lo, mut hi) = (-bound, bound);
            while hi - lo > TRINARY_INVERSE_TOL {
                let mid = 0.5 * (lo + hi);
                if model.posterior_mean(mid) < t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let y = 0.5 * (lo + hi);
            let py = model.density_y(y);
            if py < 1e-200 {
                return Ok(0.0);
            }
            let slope = (model.posterior_mean(y + TRINARY_STEP)
                - model.posterior_mean(y - TRINARY_STEP))
                / (2.0 * TRINARY_STEP);
            if !(slope > 0.0) {
                return Err(Error::NonMonotoneRegion { at: t });
            }
            Ok(py / slope)
        })
        .collect()
}

/// S_min(y) = {x̂ : f(x̂, y) ≤ min f(·, y) + τ} for each retained observation.
pub fn optimal_support(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    tau: f64,
) -> Result<Vec<Vec<usize>>> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "support tolerance {tau} must be nonnegative"
        )));
    }
    let f = model.conditional_cost(dist)?;
    Ok((0..f.n_y())
        .map(|y| {
            let (_, min) = f.argmin(y);
            f.row(y)
                .iter()
                .enumerate()
                .filter(|(_, &c)| c <= min + tau)
                .map(|(k, _)| k)
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct PreservationReport {
    pub is_preserving_possible: bool,
    /// Optimal estimator with output law p_X, when one exists.
    pub witness: Option<Estimator>,
    pub certificate: Option<InfeasibilityCertificate>,
    pub support: Vec<Vec<usize>>,
    /// max |p_X̂ − p_X| of the witness.
    pub marginal_error: Option<f64>,
}

/// Decides whether some optimal estimator reproduces the prior, by a
/// transportation problem restricted to the optimal-support sets.
pub fn preservation_check(
    model: &DegradationModel,
    dist: &DistortionMeasure,
) -> Result<PreservationReport> {
    bounds::require_x_output(model, dist)?;
    let support = optimal_support(model, dist, SUPPORT_TOL)?;
    let f = model.conditional_cost(dist)?;
    let m = dist.target().len();
    let mut allowed = vec![false; model.n_y() * m];
    for (y, s) in support.iter().enumerate() {
        for &k in s {
            allowed[y * m + k] = true;
        }
    }
    let target =
        DiscreteDistribution::new(dist.target_arc().clone(), model.prior().weights().to_vec())?;
    let problem = TransportProblem::new(model.p_y().clone(), target, f)?.with_allowed(allowed)?;
    let solution = problem.solve();
    if let Some(cert) = solution.certificate {
        return Ok(PreservationReport {
            is_preserving_possible: false,
            witness: None,
            certificate: Some(cert),
            support,
            marginal_error: None,
        });
    }
    let kernel = ConditionalKernel::from_flat(
        model.y_alphabet_arc().clone(),
        dist.target_arc().clone(),
        solution.kernel_rows(&problem),
    )?;
    let witness = Estimator::new(kernel);
    let out = model.output_distribution(&witness)?;
    let err = out
        .weights()
        .iter()
        .zip(model.prior().weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(PreservationReport {
        is_preserving_possible: true,
        witness: Some(witness),
        certificate: None,
        support,
        marginal_error: Some(err),
    })
}

/// Some retained observation has at least two non-negligible posterior entries.
pub fn is_non_invertible(model: &DegradationModel) -> bool {
    model
        .posterior()
        .rows()
        .any(|row| row.iter().filter(|&&p| p > POSTERIOR_SUPPORT_TOL).count() >= 2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ProbeOutcome {
    /// The optimal estimator already fails to reproduce the prior.
    BaselineNonPreserving {
        tv: f64,
    },
    /// Mixing the observation law toward a point mass on `y` breaks preservation.
    Breaking {
        alpha: f64,
        y: usize,
        y_label: String,
        tv: f64,
    },
    NoneFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub baseline_tv: f64,
    pub outcome: ProbeOutcome,
    /// Number of perturbations evaluated.
    pub checked: usize,
}

impl ProbeReport {
    /// True when the probe exhibits a law under which the optimal estimator is not preserving.
    pub fn found_counterexample(&self) -> bool {
        !matches!(self.outcome, ProbeOutcome::NoneFound)
    }
}

/// Holds the posterior fixed and mixes the observation law toward a point
/// mass, p̃_Y = α p_Y + (1 − α) δ_y, for every retained y and every α. Reports
/// the first perturbation where the lowest-index optimal estimator's output
/// law differs from the implied prior by more than 1e-6 in total variation.
pub fn stability_probe(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    alphas: &[f64],
) -> Result<ProbeReport> {
    for &a in alphas {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mixing weight {a} outside (0, 1]"
            )));
        }
    }
    if !is_non_invertible(model) {
        return Err(Error::InvertibleDegradation);
    }
    let opt = bounds::d_min(model, dist)?.estimator;
    let tv_at = |p_y: &[f64]| -> Result<f64> {
        let implied = DiscreteDistribution::new(
            model.x_alphabet_arc().clone(),
            model.posterior().push_forward(p_y),
        )?;
        let out = DiscreteDistribution::new(
            opt.kernel().output_arc().clone(),
            opt.kernel().push_forward(p_y),
        )?;
        Ok(total_variation_by_label(&implied, &out))
    };
    let base = model.p_y().weights();
    let baseline_tv = tv_at(base)?;
    if baseline_tv > PRESERVATION_TV_TOL {
        return Ok(ProbeReport {
            baseline_tv,
            outcome: ProbeOutcome::BaselineNonPreserving { tv: baseline_tv },
            checked: 1,
        });
    }
    let mut checked = 1;
    for &alpha in alphas {
        for y in 0..model.n_y() {
            let mut p: Vec<f64> = base.iter().map(|w| alpha * w).collect();
            p[y] += 1.0 - alpha;
            checked += 1;
            let tv = tv_at(&p)?;
            if tv > PRESERVATION_TV_TOL {
                return Ok(ProbeReport {
                    baseline_tv,
                    outcome: ProbeOutcome::Breaking {
                        alpha,
                        y,
                        y_label: model.y_alphabet().label(y).to_string(),
                        tv,
                    },
                    checked,
                });
            }
        }
    }
    Ok(ProbeReport {
        baseline_tv,
        outcome: ProbeOutcome::NoneFound,
        checked,
    })
}

/// Two optimal estimators with different output laws, built by splitting
/// every non-singleton optimal-support set around a pivot symbol: the first
/// spreads mass uniformly over the set minus the pivot, the second puts all
/// mass on the pivot. Elsewhere both pick the lowest-index minimizer.
pub fn divergent_optima(
    model: &DegradationModel,
    dist: &DistortionMeasure,
) -> Result<(Estimator, Estimator)> {
    let support = optimal_support(model, dist, SUPPORT_TOL)?;
    let pivot = support
        .iter()
        .find(|s| s.len() >= 2)
        .map(|s| s[0])
        .ok_or_else(|| Error::NotApplicable("every optimal-support set is a singleton".into()))?;
    let m = dist.target().len();
    let mut a = vec![0.0; model.n_y() * m];
    let mut b = vec![0.0; model.n_y() * m];
    for (y, s) in support.iter().enumerate() {
        let (ra, rb) = (&mut a[y * m..(y + 1) * m], &mut b[y * m..(y + 1) * m]);
        if s.len() >= 2 && s.contains(&pivot) {
            let rest: Vec<usize> = s.iter().copied().filter(|&k| k != pivot).collect();
            for &k in &rest {
                ra[k] = 1.0 / rest.len() as f64;
            }
            rb[pivot] = 1.0;
        } else {
            ra[s[0]] = 1.0;
            rb[s[0]] = 1.0;
        }
    }
    let make = |t| {
        ConditionalKernel::from_flat(model.y_alphabet_arc().clone(), dist.target_arc().clone(), t)
            .map(Estimator::new)
    };
    Ok((make(a)?, make(b)?))
}
