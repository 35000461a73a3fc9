//! Distortion bounds: the unconstrained minimum, the minimum under an exact
//! marginal match, and the exact transportation solver behind the latter.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators;
use crate::flow::{MinCostFlow, INF_CAP};
use crate::model::{
    ConditionalKernel, CostTable, DegradationModel, DiscreteDistribution, DistortionMeasure,
    Estimator,
};

/// Probability mass is routed in integer quanta of 2^-50.
pub const QUANTUM_BITS: u32 = 50;
pub(crate) const TOTAL_QUANTA: i64 = 1 << QUANTUM_BITS;

/// Unroutable mass below this is attributed to quantization, not infeasibility.
pub const ROUTING_TOL: f64 = 1e-12;

/// Rounds weights to quanta summing exactly to [`TOTAL_QUANTA`]; the rounding
/// residual goes to the largest atom.
pub(crate) fn quantize(weights: &[f64]) -> Vec<i64> {
    let scale = TOTAL_QUANTA as f64;
    let mut q: Vec<i64> = weights
        .iter()
        .map(|&w| (w * scale).round() as i64)
        .collect();
    let residual = TOTAL_QUANTA - q.iter().sum::<i64>();
    let largest = (0..weights.len())
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)))
        .expect("non-empty weights");
    q[largest] += residual;
    q
}

/// Transport of `source` mass onto `target` mass with per-pair cost, optionally
/// restricted to an allowed set of pairs.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    source: DiscreteDistribution,
    target: DiscreteDistribution,
    cost: CostTable,
    allowed: Option<Vec<bool>>,
}

/// Source-side set whose mass exceeds what its allowed targets can absorb.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasibilityCertificate {
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    /// source mass of `sources` minus target mass of `targets`.
    pub deficit: f64,
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    n_target: usize,
    /// Coupling masses, row-major (source × target).
    pub plan: Vec<f64>,
    pub cost: f64,
    /// Mass that could not be routed through allowed pairs.
    pub unrouted: f64,
    pub certificate: Option<InfeasibilityCertificate>,
    flows: Vec<i64>,
}

impl TransportProblem {
    pub fn new(
        source: DiscreteDistribution,
        target: DiscreteDistribution,
        cost: CostTable,
    ) -> Result<Self> {
        if cost.n_y() != source.len() || cost.n_xhat() != target.len() {
            return Err(Error::LengthMismatch {
                expected: source.len() * target.len(),
                got: cost.n_y() * cost.n_xhat(),
            });
        }
        Ok(Self {
            source,
            target,
            cost,
            allowed: None,
        })
    }

    /// Restricts transport to pairs with `allowed[i * n_target + j]`.
    pub fn with_allowed(mut self, allowed: Vec<bool>) -> Result<Self> {
        let n = self.source.len() * self.target.len();
        if allowed.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: allowed.len(),
            });
        }
        self.allowed = Some(allowed);
        Ok(self)
    }

    fn is_allowed(&self, i: usize, j: usize) -> bool {
        self.allowed
            .as_ref()
            .map_or(true, |a| a[i * self.target.len() + j])
    }

    pub fn solve(&self) -> TransportSolution {
        let n = self.source.len();
        let m = self.target.len();
        let s = 0;
        let t = n + m + 1;
        let supply = quantize(self.source.weights());
        let demand = quantize(self.target.weights());
        let mut g = MinCostFlow::new(n + m + 2);
        for (i, &q) in supply.iter().enumerate() {
            g.add_edge(s, 1 + i, q, 0.0);
        }
        let mut arcs = vec![usize::MAX; n * m];
        for i in 0..n {
            for j in 0..m {
                if self.is_allowed(i, j) {
                    arcs[i * m + j] = g.add_edge(1 + i, 1 + n + j, INF_CAP, self.cost.get(i, j));
                }
            }
        }
        for (j, &q) in demand.iter().enumerate() {
            g.add_edge(1 + n + j, t, q, 0.0);
        }
        let sent = g.flow(s, t, TOTAL_QUANTA);

        let flows: Vec<i64> = arcs
            .iter()
            .map(|&e| if e == usize::MAX { 0 } else { g.edge_flow(e) })
            .collect();
        let scale = TOTAL_QUANTA as f64;
        let plan: Vec<f64> = flows.iter().map(|&f| f as f64 / scale).collect();
        let cost = plan
            .iter()
            .enumerate()
            .map(|(k, &p)| p * self.cost.get(k / m, k % m))
            .sum();
        let unrouted = (TOTAL_QUANTA - sent) as f64 / scale;
        let certificate = (unrouted > ROUTING_TOL).then(|| {
            let reach = g.residual_reachable(s);
            let sources: Vec<usize> = (0..n).filter(|&i| reach[1 + i]).collect();
            let targets: Vec<usize> = (0..m).filter(|&j| reach[1 + n + j]).collect();
            let deficit = sources.iter().map(|&i| self.source.get(i)).sum::<f64>()
                - targets.iter().map(|&j| self.target.get(j)).sum::<f64>();
            InfeasibilityCertificate {
                sources,
                targets,
                deficit,
            }
        });
        TransportSolution {
            n_target: m,
            plan,
            cost,
            unrouted,
            certificate,
            flows,
        }
    }
}

impl TransportSolution {
    pub fn is_feasible(&self) -> bool {
        self.certificate.is_none()
    }

    /// Conditional kernel q(j|i) = plan(i, j) / source(i). Rows that carry no
    /// quanta fall back to the cheapest allowed target.
    pub(crate) fn kernel_rows(&self, problem: &TransportProblem) -> Vec<f64> {
        let m = self.n_target;
        let mut table = vec![0.0; self.flows.len()];
        for (i, row) in table.chunks_mut(m).enumerate() {
            let f = &self.flows[i * m..(i + 1) * m];
            let total: i64 = f.iter().sum();
            if total > 0 {
                for (r, &x) in row.iter_mut().zip(f) {
                    *r = x as f64 / total as f64;
                }
            } else {
                let best = (0..m)
                    .filter(|&j| problem.is_allowed(i, j))
                    .min_by(|&a, &b| {
                        problem
                            .cost
                            .get(i, a)
                            .total_cmp(&problem.cost.get(i, b))
                            .then(a.cmp(&b))
                    })
                    .unwrap_or(0);
                row[best] = 1.0;
            }
        }
        table
    }
}

/// A bound value and an estimator attaining it.
#[derive(Debug, Clone)]
pub struct Bound {
    pub value: f64,
    pub estimator: Estimator,
    /// Observations (retained-alphabet indices) whose minimizer was not unique.
    pub ties: Vec<usize>,
}

/// Relative tolerance for reporting a tie between minimal costs.
pub const TIE_TOL: f64 = 1e-12;

pub(crate) fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Σ_y p_Y(y) min_x̂ f(x̂, y), with the lowest-index argmin estimator.
pub fn d_min(model: &DegradationModel, dist: &DistortionMeasure) -> Result<Bound> {
    let f = model.conditional_cost(dist)?;
    let mut choice = Vec::with_capacity(model.n_y());
    let mut ties = Vec::new();
    let mut value = 0.0;
    for (y, &py) in model.p_y().weights().iter().enumerate() {
        let (best, v) = f.argmin(y);
        if f.row(y)
            .iter()
            .enumerate()
            .any(|(k, &c)| k != best && is_tie(c, v))
        {
            ties.push(y);
        }
        choice.push(best);
        value += py * v;
    }
    let estimator = Estimator::deterministic(
        model.y_alphabet_arc().clone(),
        dist.target_arc().clone(),
        &choice,
    )?;
    Ok(Bound {
        value,
        estimator,
        ties,
    })
}

pub(crate) fn require_x_output(model: &DegradationModel, dist: &DistortionMeasure) -> Result<()> {
    if !dist.target().same_labels(model.x_alphabet()) {
        return Err(Error::AlphabetMismatch(
            "a marginal match with p_X needs the reconstruction alphabet to equal the X alphabet"
                .into(),
        ));
    }
    Ok(())
}

/// Minimal distortion among estimators whose output law equals the prior:
/// an optimal transport between p_Y and p_X with cost f.
pub fn d_max(model: &DegradationModel, dist: &DistortionMeasure) -> Result<Bound> {
    require_x_output(model, dist)?;
    let f = model.conditional_cost(dist)?;
    let target =
        DiscreteDistribution::new(dist.target_arc().clone(), model.prior().weights().to_vec())?;
    let problem = TransportProblem::new(model.p_y().clone(), target, f)?;
    let solution = problem.solve();
    let table = solution.kernel_rows(&problem);
    let kernel = ConditionalKernel::from_flat(
        model.y_alphabet_arc().clone(),
        dist.target_arc().clone(),
        table,
    )?;
    let estimator = Estimator::new(kernel);
    let value = model.mean_distortion(&estimator, dist)?;
    Ok(Bound {
        value,
        estimator,
        ties: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem4Report {
    /// Distortion of the posterior-mean estimator.
    pub d_min: f64,
    pub posterior_sampling_mse: f64,
    pub d_max: f64,
    /// posterior_sampling_mse / d_min (NaN when d_min = 0).
    pub ratio: f64,
    /// posterior_sampling_mse = 2 · d_min within relative 1e-9.
    pub identity_holds: bool,
    /// d_max ≤ posterior_sampling_mse + 1e-9.
    pub bound_holds: bool,
}

/// Square-error check that posterior sampling costs exactly twice the
/// minimum and that the perfect-quality minimum lies below it.
pub fn verify_theorem4(model: &DegradationModel) -> Result<Theorem4Report> {
    let x = model.x_alphabet_arc().clone();
    x.require_values("square-error bound check")?;
    let mmse = estimators::mmse_estimator(model)?;
    let to_means = DistortionMeasure::square_error(x.clone(), mmse.output().clone())?;
    let d_min = model.mean_distortion(&mmse, &to_means)?;
    let square = DistortionMeasure::square_error(x.clone(), x)?;
    let ps = estimators::posterior_sampling_estimator(model);
    let posterior_sampling_mse = model.mean_distortion(&ps, &square)?;
    let d_max = d_max(model, &square)?.value;
    let ratio = if d_min > 0.0 {
        posterior_sampling_mse / d_min
    } else {
        f64::NAN
    };
    Ok(Theorem4Report {
        d_min,
        posterior_sampling_mse,
        d_max,
        ratio,
        identity_holds: (posterior_sampling_mse - 2.0 * d_min).abs() <= 1e-9 * 2.0 * d_min + 1e-15,
        bound_holds: d_max <= posterior_sampling_mse + 1e-9,
    })
}
