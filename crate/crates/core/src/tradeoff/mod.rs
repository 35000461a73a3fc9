//! The perception-distortion function: Lagrangian traversal, constrained
//! solves, curve tracing with a lower convex envelope, and a brute-force
//! grid oracle for small instances.

mod curve;
mod exact;
mod iterative;
mod oracle;
mod problem;

use serde::{Deserialize, Serialize};

pub use curve::{curve_csv, lower_convex_envelope, TradeoffCurve};
pub use oracle::{MAX_ORACLE_CELLS, MAX_ORACLE_KERNELS, MAX_ORACLE_RESOLUTION};

use crate::bounds;
use crate::divergence::{self, bin_onto_common_grid, DivergenceKind, COMMON_GRID_BINS};
use crate::error::{Error, Result};
use crate::estimators::{optimal_support, SUPPORT_TOL};
use crate::model::{ConditionalKernel, DegradationModel, DistortionMeasure, Estimator};
use problem::Lagrangian;

/// Largest multiplier tried when bisecting for a distortion level.
pub const LAMBDA_MAX: f64 = 1e8;
pub const BISECTION_DEPTH: usize = 60;
/// Distortion tolerance at which bisection stops early.
pub const DISTORTION_TOL: f64 = 1e-6;
/// Distortion levels this far below the minimum are still accepted.
pub const INFEASIBILITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Min-cost-flow formulation (exact for TV and W1, refined and polished for smooth kinds).
    Exact,
    /// Conditional gradient for smooth kinds, projected subgradient otherwise.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Iteration cap for the iterative method (defaults depend on the kind).
    pub max_iters: Option<usize>,
    /// A point is flagged as not converged when its certificate exceeds this.
    pub tol: f64,
    pub method: SolverMethod,
    /// Floor on reconstruction masses inside divergence derivatives.
    pub epsilon: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: None,
            tol: 1e-6,
            method: SolverMethod::Exact,
            epsilon: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TradeoffPoint {
    pub lambda: f64,
    pub distortion: f64,
    pub perception: f64,
    /// Optimality certificate (see [`SolverMethod`]).
    pub duality_gap: f64,
    /// False when the certificate exceeds the requested tolerance.
    pub converged: bool,
    pub kernel: ConditionalKernel,
}

impl TradeoffPoint {
    pub fn estimator(&self) -> Estimator {
        Estimator::new(self.kernel.clone())
    }
}

fn run(prob: &Lagrangian, opts: &SolverOptions, warm: Option<&[f64]>) -> exact::Solved {
    match opts.method {
        SolverMethod::Exact => exact::solve(prob, 1e-3 * opts.tol),
        SolverMethod::Iterative => {
            let init = match warm {
                Some(q) => q.to_vec(),
                None => {
                    exact::solve(
                        &Lagrangian {
                            lambda: 0.0,
                            ..prob.clone()
                        },
                        0.0,
                    )
                    .q
                }
            };
            if prob.kind.is_smooth() {
                let iters = opts
                    .max_iters
                    .unwrap_or(iterative::CONDITIONAL_GRADIENT_ITERS);
                iterative::conditional_gradient(prob, init, iters, opts.tol)
            } else {
                let iters = opts.max_iters.unwrap_or(iterative::SUBGRADIENT_ITERS);
                iterative::projected_subgradient(prob, init, iters)
            }
        }
    }
}

fn to_point(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    prob: &Lagrangian,
    solved: exact::Solved,
    tol: f64,
) -> Result<TradeoffPoint> {
    let kernel = ConditionalKernel::from_flat(
        model.y_alphabet_arc().clone(),
        dist.target_arc().clone(),
        solved.q,
    )?;
    let distortion = prob.distortion(kernel.table());
    let perception = prob.perception(&prob.marginal(kernel.table()));
    Ok(TradeoffPoint {
        lambda: prob.lambda,
        distortion,
        perception,
        duality_gap: solved.gap,
        converged: solved.gap <= tol,
        kernel,
    })
}

/// Minimizes E[Δ] + λ·d(p_X, p_X̂) over kernels onto the distortion measure's
/// reconstruction alphabet.
pub fn lagrangian_solve(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    kind: DivergenceKind,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<TradeoffPoint> {
    lagrangian_solve_from(model, dist, kind, lambda, opts, None)
}

/// As [`lagrangian_solve`], starting the iterative method from `warm`.
pub fn lagrangian_solve_from(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    kind: DivergenceKind,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&ConditionalKernel>,
) -> Result<TradeoffPoint> {
    let prob = Lagrangian::new(model, dist, kind, lambda, opts.epsilon)?;
    let solved = run(&prob, opts, warm.map(|k| k.table()));
    to_point(model, dist, &prob, solved, opts.tol)
}

/// Solves every λ of an ascending schedule (warm-starting from the previous
/// kernel when `warm_start`) and reports the lower convex envelope.
pub fn trace_curve(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    kind: DivergenceKind,
    schedule: &[f64],
    opts: &SolverOptions,
    warm_start: bool,
) -> Result<TradeoffCurve> {
    if schedule.len() < 2 {
        return Err(Error::InvalidParameter(
            "a curve needs at least two multipliers".into(),
        ));
    }
    if schedule.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter(
            "multiplier schedule must be ascending".into(),
        ));
    }
    let mut points: Vec<TradeoffPoint> = Vec::with_capacity(schedule.len());
    for &lambda in schedule {
        let warm = if warm_start {
            points.last().map(|p| &p.kernel)
        } else {
            None
        };
        points.push(lagrangian_solve_from(
            model, dist, kind, lambda, opts, warm,
        )?);
    }
    Ok(TradeoffCurve::new(kind, dist.name(), points))
}

#[derive(Debug, Clone)]
pub struct ConstrainedSolution {
    pub target: f64,
    pub distortion: f64,
    pub perception: f64,
    pub kernel: ConditionalKernel,
    /// Multipliers of the two Lagrangian solutions mixed to meet the target.
    pub lambda_bracket: (f64, f64),
}

/// P(D): minimal perception subject to E[Δ] ≤ D.
pub fn constrained_solve(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    kind: DivergenceKind,
    d: f64,
    opts: &SolverOptions,
) -> Result<ConstrainedSolution> {
    let lower = bounds::d_min(model, dist)?.value;
    if !(d >= lower - INFEASIBILITY_SLACK) {
        return Err(Error::InfeasibleDistortion {
            requested: d,
            minimum: lower,
        });
    }
    let base = Lagrangian::new(model, dist, kind, 0.0, opts.epsilon)?;
    let finish = |q: Vec<f64>, bracket: (f64, f64)| -> Result<ConstrainedSolution> {
        let kernel = ConditionalKernel::from_flat(
            model.y_alphabet_arc().clone(),
            dist.target_arc().clone(),
            q,
        )?;
        Ok(ConstrainedSolution {
            target: d,
            distortion: base.distortion(kernel.table()),
            perception: base.perception(&base.marginal(kernel.table())),
            kernel,
            lambda_bracket: bracket,
        })
    };

    if kind.is_separable() {
        let upper = bounds::d_max(model, dist)?;
        if d >= upper.value {
            return finish(
                upper.estimator.into_kernel().table().to_vec(),
                (f64::INFINITY, f64::INFINITY),
            );
        }
    }
    if d <= lower {
        // only distortion-minimizing kernels qualify: minimize perception over them
        let support = optimal_support(model, dist, SUPPORT_TOL)?;
        let m = dist.target().len();
        let mut allowed = vec![false; model.n_y() * m];
        for (y, s) in support.iter().enumerate() {
            for &k in s {
                allowed[y * m + k] = true;
            }
        }
        let restricted = Lagrangian {
            lambda: 1.0,
            allowed: Some(allowed),
            ..base.clone()
        };
        return finish(run(&restricted, opts, None).q, (0.0, 0.0));
    }

    let solve_at = |lambda: f64| {
        run(
            &Lagrangian {
                lambda,
                ..base.clone()
            },
            opts,
            None,
        )
        .q
    };
    let (mut lo, mut hi) = (0.0, LAMBDA_MAX);
    let mut q_lo = solve_at(lo);
    let mut q_hi = solve_at(hi);
    let mut e_lo = base.distortion(&q_lo);
    let mut e_hi = base.distortion(&q_hi);
    if e_hi <= d {
        return finish(q_hi, (hi, hi));
    }
    for _ in 0..BISECTION_DEPTH {
        let mid = 0.5 * (lo + hi);
        let q = solve_at(mid);
        let e = base.distortion(&q);
        if e <= d {
            lo = mid;
            q_lo = q;
            e_lo = e;
        } else {
            hi = mid;
            q_hi = q;
            e_hi = e;
        }
        if (e - d).abs() <= DISTORTION_TOL {
            break;
        }
    }
    // mix the bracketing solutions so the distortion meets the target exactly
    let w = if e_hi > e_lo {
        ((e_hi - d) / (e_hi - e_lo)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let q: Vec<f64> = q_lo
        .iter()
        .zip(&q_hi)
        .map(|(a, b)| w * a + (1.0 - w) * b)
        .collect();
    finish(q, (lo, hi))
}

/// Grid-search upper bound on P(D) over kernels whose rows lie on the grid
/// {0, 1/(resolution−1), ..., 1}. Returns +∞ when no grid kernel meets D.
pub fn brute_force_oracle(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    kind: DivergenceKind,
    d: f64,
    resolution: usize,
) -> Result<f64> {
    Ok(brute_force_oracle_levels(model, dist, kind, &[d], resolution)?[0])
}

/// [`brute_force_oracle`] for several distortion levels in one enumeration.
pub fn brute_force_oracle_levels(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    kind: DivergenceKind,
    levels: &[f64],
    resolution: usize,
) -> Result<Vec<f64>> {
    oracle::check_size(model.n_x(), model.n_y(), dist.target().len(), resolution)?;
    let prob = Lagrangian::new(model, dist, kind, 0.0, 0.0)?;
    Ok(oracle::search(&prob, levels, resolution))
}

/// Upper bound on P(D) from mixtures of grid kernels: the lower convex
/// envelope of the (distortion, perception) pairs of every grid kernel, for
/// divergences convex in the reconstruction law. Never above
/// [`brute_force_oracle`] at the same resolution.
pub fn brute_force_mixture_oracle(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    kind: DivergenceKind,
    levels: &[f64],
    resolution: usize,
) -> Result<Vec<f64>> {
    if !kind.is_convex_in_second_arg() {
        return Err(Error::NotApplicable(format!(
            "{kind} is not convex in the reconstruction law"
        )));
    }
    oracle::check_size(model.n_x(), model.n_y(), dist.target().len(), resolution)?;
    let prob = Lagrangian::new(model, dist, kind, 0.0, 0.0)?;
    Ok(oracle::mixture_search(&prob, levels, resolution))
}

/// λ·q1 + (1 − λ)·q2.
pub fn mixture_estimator(e1: &Estimator, e2: &Estimator, lambda: f64) -> Result<Estimator> {
    e1.mix(e2, lambda)
}

/// d(p_X, p_X̂) for an estimator. Reconstruction alphabets other than X are
/// compared through their values: directly for Wasserstein-1, otherwise after
/// histogramming both laws onto a common grid.
pub fn perceptual_index(
    model: &DegradationModel,
    kind: DivergenceKind,
    est: &Estimator,
) -> Result<f64> {
    let out = model.output_distribution(est)?;
    let prior = model.prior();
    if kind == DivergenceKind::Wasserstein1 || out.alphabet().same_labels(prior.alphabet()) {
        return divergence::divergence(kind, prior, &out);
    }
    let (p, q) = bin_onto_common_grid(prior, &out, COMMON_GRID_BINS)?;
    divergence::divergence(kind, &p, &q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureReport {
    pub lambda: f64,
    pub distortions: [f64; 3],
    pub perceptions: [f64; 3],
    /// D_mix − (λ·D1 + (1 − λ)·D2).
    pub distortion_excess: f64,
    /// P_mix − (λ·P1 + (1 − λ)·P2); −∞ when the right side is infinite.
    pub perception_excess: f64,
    pub distortion_bound_holds: bool,
    pub convexity_holds: bool,
}

/// Checks that mixing two estimators mixes their distortions linearly and
/// does not increase the perceptual index beyond the mixed values.
pub fn mixture_checks(
    model: &DegradationModel,
    dist: &DistortionMeasure,
    kind: DivergenceKind,
    e1: &Estimator,
    e2: &Estimator,
    lambda: f64,
) -> Result<MixtureReport> {
    let mix = mixture_estimator(e1, e2, lambda)?;
    let d = [e1, e2, &mix]
        .map(|e| model.mean_distortion(e, dist))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let p = [e1, e2, &mix]
        .map(|e| perceptual_index(model, kind, e))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let combine = |a: f64, b: f64| {
        // 0·∞ terms vanish at the endpoints
        let left = if lambda == 0.0 { 0.0 } else { lambda * a };
        let right = if lambda == 1.0 {
            0.0
        } else {
            (1.0 - lambda) * b
        };
        left + right
    };
    let d_excess = d[2] - combine(d[0], d[1]);
    let p_rhs = combine(p[0], p[1]);
    let p_excess = if p_rhs.is_infinite() {
        f64::NEG_INFINITY
    } else {
        p[2] - p_rhs
    };
    let scale = 1.0 + d[0].abs().max(d[1].abs());
    Ok(MixtureReport {
        lambda,
        distortions: [d[0], d[1], d[2]],
        perceptions: [p[0], p[1], p[2]],
        distortion_excess: d_excess,
        perception_excess: p_excess,
        distortion_bound_holds: d_excess <= 1e-10 * scale,
        convexity_holds: p_excess <= 1e-10,
    })
}
