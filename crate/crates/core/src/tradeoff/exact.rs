//! Exact Lagrangian solver.
//!
//! Every kernel q induces a flow s → y → x̂ → t carrying p_Y(y)·q(x̂|y) on the
//! middle arcs and r = p_X̂ into the sink. For separable divergences the
//! perception term is a convex function of each r_x̂ alone, so it becomes a
//! convex cost on the x̂ → t arcs. Total variation is piecewise linear with a
//! single kink at p_X and is solved exactly. Smooth kinds use a
//! piecewise-linear model refined around the current solution, followed by a
//! polish step that solves the optimality conditions exactly on the support
//! found by the flow. Wasserstein-1 adds a transport layer x̂ → x with costs
//! λ|x̂ − x| and sink capacities p_X.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::problem::Lagrangian;
use crate::bounds::{quantize, TOTAL_QUANTA};
use crate::divergence::{self, DivergenceKind};
use crate::flow::{MinCostFlow, INF_CAP};

const COOLING: f64 = 0.5;
/// Cooling stops after this many stages without mass balance.
const MAX_STALLS: usize = 12;
const COARSE_SEGMENTS: i64 = 16;
const GEOMETRIC_SHIFT: u32 = 4;
const REFINE_HALF_WIDTH: i64 = 16;
/// Relative window steps 2^-s around the estimated masses.
const REFINE_SHIFTS: [u32; 4] = [6, 12, 18, 24];
/// Arcs below this fraction of their row's largest weight leave the band.
const BAND: f64 = 1e-12;
const SPARSE_BAND: usize = 3;
const COOLING_STAGES: usize = 60;
/// Polishing starts once the temperature is below 1/64 of the cost scale.
const POLISH_FROM_STAGE: usize = 6;
const POLISH_THRESHOLDS: [f64; 3] = [1e-2, 1e-5, 1e-9];
/// exp(−UNDERFLOW) is far below the weights that matter.
const UNDERFLOW: f64 = 745.0;
const NEWTON_ITERS: usize = 100;
const RIDGE: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-15;
/// Relative resolution of the dual value.
const ROUNDOFF: f64 = 1e-13;
const MIN_STEP: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct Solved {
    pub q: Vec<f64>,
    /// Optimality certificate: 0 for the exactly solved linear programs,
    /// the conditional-gradient gap for smooth kinds.
    pub gap: f64,
}

pub(crate) fn solve(prob: &Lagrangian, target_gap: f64) -> Solved {
    if prob.lambda == 0.0 {
        return Solved {
            q: argmin_kernel(prob, &vec![0.0; prob.n_xhat()]),
            gap: 0.0,
        };
    }
    match prob.kind {
        DivergenceKind::Wasserstein1 => Solved {
            q: solve_transport_layer(prob),
            gap: 0.0,
        },
        DivergenceKind::TotalVariation => {
            let bps = (0..prob.n_xhat())
                .map(|k| BTreeSet::from([0, quantize_mass(prob.p_x[k]), TOTAL_QUANTA]))
                .collect::<Vec<_>>();
            Solved {
                q: solve_piecewise(prob, &bps).q,
                gap: 0.0,
            }
        }
        _ => solve_smooth(prob, target_gap),
    }
}

fn quantize_mass(p: f64) -> i64 {
    ((p * TOTAL_QUANTA as f64).round() as i64).clamp(0, TOTAL_QUANTA)
}

/// Each row on its cheapest allowed symbol under per-symbol offsets `psi`.
fn argmin_kernel(prob: &Lagrangian, psi: &[f64]) -> Vec<f64> {
    let m = prob.n_xhat();
    let mut q = vec![0.0; prob.n_y() * m];
    for y in 0..prob.n_y() {
        let k = best_symbol(prob, y, psi);
        q[y * m + k] = 1.0;
    }
    q
}

fn best_symbol(prob: &Lagrangian, y: usize, psi: &[f64]) -> usize {
    (0..prob.n_xhat())
        .filter(|&k| prob.is_allowed(y, k))
        .min_by(|&a, &b| {
            (prob.f.get(y, a) + psi[a])
                .total_cmp(&(prob.f.get(y, b) + psi[b]))
                .then(a.cmp(&b))
        })
        .unwrap_or(0)
}

fn add_observation_layer(prob: &Lagrangian, g: &mut MinCostFlow) -> Vec<usize> {
    let n = prob.n_y();
    let m = prob.n_xhat();
    for (y, &q) in quantize(&prob.p_y).iter().enumerate() {
        g.add_edge(0, 1 + y, q, 0.0);
    }
    let mut arcs = vec![usize::MAX; n * m];
    for y in 0..n {
        for k in 0..m {
            if prob.is_allowed(y, k) {
                arcs[y * m + k] = g.add_edge(1 + y, 1 + n + k, INF_CAP, prob.f.get(y, k));
            }
        }
    }
    arcs
}

fn kernel_from_flows(prob: &Lagrangian, flows: &[i64], psi: &[f64]) -> Vec<f64> {
    let m = prob.n_xhat();
    let mut q = vec![0.0; flows.len()];
    for (y, (row, f)) in q.chunks_mut(m).zip(flows.chunks(m)).enumerate() {
        let total: i64 = f.iter().sum();
        if total > 0 {
            for (r, &v) in row.iter_mut().zip(f) {
                *r = v as f64 / total as f64;
            }
        } else {
            row[best_symbol(prob, y, psi)] = 1.0;
        }
    }
    q
}

struct Piecewise {
    q: Vec<f64>,
    /// Routed quanta per (y, x̂).
    flows: Vec<i64>,
    /// Marginal price of each symbol at the sink, from the final potentials.
    psi: Vec<f64>,
}

fn solve_piecewise(prob: &Lagrangian, breakpoints: &[BTreeSet<i64>]) -> Piecewise {
    let n = prob.n_y();
    let m = prob.n_xhat();
    let sink = n + m + 1;
    let mut g = MinCostFlow::new(n + m + 2);
    let arcs = add_observation_layer(prob, &mut g);
    let scale = TOTAL_QUANTA as f64;
    for (k, bps) in breakpoints.iter().enumerate() {
        let pts: Vec<i64> = bps.iter().copied().collect();
        for w in pts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]) as f64 / scale;
            g.add_edge(1 + n + k, sink, w[1] - w[0], prob.slope(k, mid));
        }
    }
    g.flow(0, sink, TOTAL_QUANTA);
    let psi: Vec<f64> = (0..m)
        .map(|k| g.potential(sink) - g.potential(1 + n + k))
        .collect();
    let flows: Vec<i64> = arcs
        .iter()
        .map(|&e| if e == usize::MAX { 0 } else { g.edge_flow(e) })
        .collect();
    Piecewise {
        q: kernel_from_flows(prob, &flows, &psi),
        flows,
        psi,
    }
}

fn solve_transport_layer(prob: &Lagrangian) -> Vec<f64> {
    let geo = prob
        .geometry
        .as_ref()
        .expect("transport layer needs values");
    let n = prob.n_y();
    let m = prob.n_xhat();
    let kx = geo.x.len();
    let sink = n + m + kx + 1;
    let mut g = MinCostFlow::new(sink + 1);
    let arcs = add_observation_layer(prob, &mut g);
    for (k, &v) in geo.xhat.iter().enumerate() {
        for (j, &u) in geo.x.iter().enumerate() {
            g.add_edge(
                1 + n + k,
                1 + n + m + j,
                INF_CAP,
                prob.lambda * (v - u).abs(),
            );
        }
    }
    for (j, &q) in quantize(&prob.p_x).iter().enumerate() {
        g.add_edge(1 + n + m + j, sink, q, 0.0);
    }
    g.flow(0, sink, TOTAL_QUANTA);
    let psi: Vec<f64> = (0..m)
        .map(|k| g.potential(sink) - g.potential(1 + n + k))
        .collect();
    let flows: Vec<i64> = arcs
        .iter()
        .map(|&e| if e == usize::MAX { 0 } else { g.edge_flow(e) })
        .collect();
    kernel_from_flows(prob, &flows, &psi)
}

/// Prices of symbols whose perception term is linear in r_x̂; such a symbol
/// is a plain extra cost and its price never moves.
fn fixed_price(prob: &Lagrangian, k: usize) -> Option<f64> {
    (prob.p_x[k] == 0.0).then(|| prob.slope(k, 1.0))
}

struct Smoothed<'a> {
    prob: &'a Lagrangian,
    /// Symbols with a strictly convex term, carrying the free prices.
    free: Vec<usize>,
    fixed: Vec<Option<f64>>,
    /// λ·sup φ'; free prices must stay below it.
    ceiling: f64,
}

impl Smoothed<'_> {
    fn prices(&self, v: &[f64]) -> Vec<f64> {
        let mut psi: Vec<f64> = self.fixed.iter().map(|p| p.unwrap_or(0.0)).collect();
        for (&k, &x) in self.free.iter().zip(v) {
            psi[k] = x;
        }
        psi
    }

    /// Mass r > 0 at which λ·φ'(r) = psi, unconstrained above.
    fn supply(&self, k: usize, psi: f64) -> f64 {
        let prob = self.prob;
        divergence::term_derivative_inverse(prob.kind, prob.p_x[k], psi / prob.lambda)
    }

    /// dr/dψ = 1 / (λ·φ''(r)).
    fn supply_slope(&self, k: usize, r: f64) -> f64 {
        let prob = self.prob;
        1.0 / (prob.lambda * divergence::term_second_derivative(prob.kind, prob.p_x[k], r))
    }

    /// Row softmin weights of −(f + ψ)/ε over allowed symbols, and the
    /// smoothed row minimum −ε·log Σ exp.
    fn row(&self, y: usize, psi: &[f64], eps: f64, w: &mut [f64]) -> f64 {
        let prob = self.prob;
        let mut lo = f64::INFINITY;
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = if prob.is_allowed(y, k) {
                prob.f.get(y, k) + psi[k]
            } else {
                f64::INFINITY
            };
            lo = lo.min(*wk);
        }
        let mut z = 0.0;
        let cutoff = UNDERFLOW * eps;
        for wk in w.iter_mut() {
            let d = *wk - lo;
            *wk = if d > cutoff { 0.0 } else { (-d / eps).exp() };
            z += *wk;
        }
        w.iter_mut().for_each(|wk| *wk /= z);
        lo - eps * z.ln()
    }

    /// Smoothed dual value, the demand on every symbol and the supplied
    /// masses; `None` outside the domain of the conjugate.
    fn evaluate(&self, v: &[f64], eps: f64) -> Option<(f64, Vec<f64>, Vec<f64>)> {
        if v.iter().any(|&x| !(x < self.ceiling)) {
            return None;
        }
        let prob = self.prob;
        let m = prob.n_xhat();
        let psi = self.prices(v);
        let mut w = vec![0.0; m];
        let mut demand = vec![0.0; m];
        let mut value = 0.0;
        for y in 0..prob.n_y() {
            value += prob.p_y[y] * self.row(y, &psi, eps, &mut w);
            for (d, wk) in demand.iter_mut().zip(&w) {
                *d += prob.p_y[y] * wk;
            }
        }
        let supply: Vec<f64> = self
            .free
            .iter()
            .zip(v)
            .map(|(&k, &x)| self.supply(k, x))
            .collect();
        for ((&k, &x), &r) in self.free.iter().zip(v).zip(&supply) {
            value -= x * r - prob.lambda * divergence::term(prob.kind, prob.p_x[k], r);
        }
        value.is_finite().then_some((value, demand, supply))
    }

    fn kernel(&self, v: &[f64], eps: f64) -> Vec<f64> {
        let m = self.prob.n_xhat();
        let psi = self.prices(v);
        let mut q = vec![0.0; self.prob.n_y() * m];
        for (y, row) in q.chunks_mut(m).enumerate() {
            self.row(y, &psi, eps, row);
        }
        q
    }

    /// Damped Newton ascent on the smoothed dual at temperature `eps`.
    /// Returns whether the mass balance was reached.
    fn maximize(&self, v: &mut Vec<f64>, eps: f64) -> bool {
        let prob = self.prob;
        let m = prob.n_xhat();
        let u = self.free.len();
        let mut slot = vec![usize::MAX; m];
        for (i, &k) in self.free.iter().enumerate() {
            slot[k] = i;
        }
        let Some((mut value, mut demand, mut supply)) = self.evaluate(v, eps) else {
            return false;
        };
        for _ in 0..NEWTON_ITERS {
            let grad: Vec<f64> = self
                .free
                .iter()
                .zip(&supply)
                .map(|(&k, &r)| demand[k] - r)
                .collect();
            if grad.iter().map(|g| g.abs()).sum::<f64>() <= NEWTON_TOL {
                return true;
            }
            // negative Hessian: (1/ε)·Σ p_y Cov(π_y) on the free block + diag(r'(ψ))
            let mut h = DMatrix::<f64>::zeros(u, u);
            let psi = self.prices(v);
            let mut w = vec![0.0; m];
            for y in 0..prob.n_y() {
                self.row(y, &psi, eps, &mut w);
                let c = prob.p_y[y] / eps;
                let idx: Vec<(usize, f64)> = (0..m)
                    .filter(|&k| slot[k] != usize::MAX && w[k] > 1e-300)
                    .map(|k| (slot[k], w[k]))
                    .collect();
                for &(i, a) in &idx {
                    h[(i, i)] += c * a;
                    for &(j, b) in &idx {
                        h[(i, j)] -= c * a * b;
                    }
                }
            }
            for (i, (&k, &r)) in self.free.iter().zip(&supply).enumerate() {
                h[(i, i)] += self.supply_slope(k, r);
            }
            for i in 0..u {
                h[(i, i)] = h[(i, i)] * (1.0 + RIDGE) + f64::MIN_POSITIVE;
            }
            let Some(chol) = h.cholesky() else {
                return false;
            };
            let step = chol.solve(&DVector::from_vec(grad.clone()));
            let slope: f64 = step.iter().zip(&grad).map(|(a, b)| a * b).sum();
            if !(slope > 0.0) {
                return true;
            }
            let norm = |d: &[f64], r: &[f64]| -> f64 {
                self.free
                    .iter()
                    .zip(r)
                    .map(|(&k, &x)| (d[k] - x).abs())
                    .sum()
            };
            let current = norm(&demand, &supply);
            let noise = ROUNDOFF * (1.0 + value.abs());
            let mut t = 1.0;
            let mut moved = false;
            while t > MIN_STEP {
                let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
                // below roundoff in the value, progress is judged by mass balance
                let accept = |e: &(f64, Vec<f64>, Vec<f64>)| {
                    e.0 >= value + 1e-4 * t * slope
                        || (e.0 >= value - noise && norm(&e.1, &e.2) < current)
                };
                if let Some((tv, td, ts)) = self.evaluate(&trial, eps).filter(accept) {
                    *v = trial;
                    (value, demand, supply) = (tv, td, ts);
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                return false;
            }
        }
        false
    }
}

/// Smooth kinds: Newton ascent on the entropically smoothed dual over the
/// symbol prices, cooled geometrically, with the support of each smoothed
/// kernel handed to the exact polish step.
fn solve_smooth(prob: &Lagrangian, target_gap: f64) -> Solved {
    let m = prob.n_xhat();
    let fixed: Vec<Option<f64>> = (0..m).map(|k| fixed_price(prob, k)).collect();
    let free: Vec<usize> = (0..m).filter(|&k| fixed[k].is_none()).collect();
    let ceiling = prob.lambda * divergence::term_derivative_sup(prob.kind);
    let sm = Smoothed {
        prob,
        free,
        fixed,
        ceiling,
    };
    // start where every free symbol supplies its reference mass
    let mut v: Vec<f64> = sm
        .free
        .iter()
        .map(|&k| prob.lambda * divergence::term_derivative(prob.kind, prob.p_x[k], prob.p_x[k]))
        .collect();
    let spread = prob.f.values().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut eps = (spread + prob.lambda).max(f64::MIN_POSITIVE);
    let mut best: Option<Solved> = None;
    let consider = |c: Solved, best: &mut Option<Solved>| {
        if c.gap.is_finite() && best.as_ref().map_or(true, |b| c.gap < b.gap) {
            *best = Some(c);
        }
    };
    let done = |best: &Option<Solved>| best.as_ref().is_some_and(|b| b.gap <= target_gap);
    let mut q = sm.kernel(&v, eps);
    let mut stalls = 0;
    let mut refined = false;
    for stage in 0..COOLING_STAGES {
        let balanced = sm.maximize(&mut v, eps);
        q = sm.kernel(&v, eps);
        if stage >= POLISH_FROM_STAGE {
            for tau in POLISH_THRESHOLDS {
                if let Some(p) = polish(prob, &support_arcs(prob, &q, tau)) {
                    consider(
                        Solved {
                            gap: prob.fw_gap(&p),
                            q: p,
                        },
                        &mut best,
                    );
                }
            }
        }
        consider(
            Solved {
                gap: prob.fw_gap(&q),
                q: q.clone(),
            },
            &mut best,
        );
        if !balanced && stage >= POLISH_FROM_STAGE {
            stalls += 1;
            if !refined && band_is_sparse(prob, &q) {
                refined = true;
                if let Some(r) = flow_refine(prob, &q, target_gap) {
                    consider(r, &mut best);
                }
            }
        }
        if done(&best) || stalls >= MAX_STALLS {
            break;
        }
        eps *= COOLING;
    }
    if !done(&best) && band_is_sparse(prob, &q) {
        if let Some(r) = flow_refine(prob, &q, target_gap) {
            consider(r, &mut best);
        }
    }
    best.unwrap_or_else(|| Solved {
        gap: prob.fw_gap(&q),
        q,
    })
}

/// Piecewise-linear flows with breakpoints packed around the masses of `q`,
/// over the arcs `q` uses. The flow solution is a vertex, so its support is a
/// forest and the polish step can solve the optimality conditions on it.
fn flow_refine(prob: &Lagrangian, q: &[f64], target_gap: f64) -> Option<Solved> {
    let m = prob.n_xhat();
    let mut band = prob.clone();
    band.allowed = Some(
        q.chunks(m)
            .enumerate()
            .flat_map(|(y, row)| {
                let top = row.iter().copied().fold(0.0, f64::max);
                row.iter()
                    .enumerate()
                    .map(move |(k, &w)| prob.is_allowed(y, k) && w >= BAND * top)
                    .collect::<Vec<_>>()
            })
            .collect(),
    );
    let mut center = prob.marginal(q);
    let mut best: Option<Solved> = None;
    for shift in REFINE_SHIFTS {
        let bps: Vec<BTreeSet<i64>> = (0..m)
            .map(|k| {
                let mut s = coarse_breakpoints(prob.p_x[k]);
                let c = center[k];
                let step = c * f64::from(shift).exp2().recip();
                for j in -REFINE_HALF_WIDTH..=REFINE_HALF_WIDTH {
                    s.insert(quantize_mass(c + j as f64 * step));
                }
                s
            })
            .collect();
        let pl = solve_piecewise(&band, &bps);
        let mut arcs = Vec::new();
        for (y, row) in pl.flows.chunks(m).enumerate() {
            if row.iter().all(|&v| v == 0) {
                arcs.push((y, best_symbol(&band, y, &pl.psi)));
            } else {
                arcs.extend(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &v)| v > 0)
                        .map(|(k, _)| (y, k)),
                );
            }
        }
        let mut candidates = vec![pl.q];
        candidates.extend(polish(prob, &arcs));
        for c in candidates {
            let gap = prob.fw_gap(&c);
            if gap.is_finite() && best.as_ref().map_or(true, |b| gap < b.gap) {
                best = Some(Solved { q: c, gap });
            }
        }
        let b = best.as_ref()?;
        if b.gap <= target_gap {
            break;
        }
        center = prob.marginal(&b.q);
    }
    best
}

/// Whether the arcs in the band of `q` average at most `SPARSE_BAND` per row.
fn band_is_sparse(prob: &Lagrangian, q: &[f64]) -> bool {
    let m = prob.n_xhat();
    let arcs: usize = q
        .chunks(m)
        .map(|row| {
            let top = row.iter().copied().fold(0.0, f64::max);
            row.iter().filter(|&&w| w >= BAND * top).count()
        })
        .sum();
    arcs <= SPARSE_BAND * prob.n_y()
}

fn coarse_breakpoints(p_x: f64) -> BTreeSet<i64> {
    let mut s: BTreeSet<i64> = (0..=COARSE_SEGMENTS)
        .map(|i| TOTAL_QUANTA / COARSE_SEGMENTS * i)
        .collect();
    s.insert(TOTAL_QUANTA);
    // geometric points resolve symbols whose mass is tiny
    let mut g = TOTAL_QUANTA;
    while g > 1 {
        g >>= GEOMETRIC_SHIFT;
        s.insert(g);
    }
    s.insert(quantize_mass(p_x));
    s
}

/// Arcs with weight at least `tau`, strongest first.
fn support_arcs(prob: &Lagrangian, q: &[f64], tau: f64) -> Vec<(usize, usize)> {
    let m = prob.n_xhat();
    let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
    for (y, row) in q.chunks(m).enumerate() {
        let top = row.iter().copied().fold(0.0, f64::max);
        for (k, &w) in row.iter().enumerate() {
            if w >= tau * top && prob.is_allowed(y, k) {
                arcs.push((y, k, w));
            }
        }
    }
    arcs.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    arcs.into_iter().map(|(y, k, _)| (y, k)).collect()
}

/// Largest r ∈ [0, 1] with slope(k, r) ≤ psi (slopes are nondecreasing in r).
fn inverse_slope(prob: &Lagrangian, k: usize, psi: f64) -> f64 {
    if prob.slope(k, 0.0) >= psi {
        return 0.0;
    }
    if prob.slope(k, 1.0) <= psi {
        return 1.0;
    }
    divergence::term_derivative_inverse(prob.kind, prob.p_x[k], psi / prob.lambda).clamp(0.0, 1.0)
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Solves the optimality conditions exactly on a spanning forest of the
/// piecewise-linear solution's support: within each tree the symbol prices
/// differ by fixed cost differences, a common shift is fixed by the tree's
/// total mass, and arc flows follow by peeling leaves.
fn polish(prob: &Lagrangian, arcs: &[(usize, usize)]) -> Option<Vec<f64>> {
    let n = prob.n_y();
    let m = prob.n_xhat();
    let node_x = |k: usize| n + k;
    let mut parent: Vec<usize> = (0..n + m).collect();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + m];
    let mut forest = Vec::new();
    for &(y, k) in arcs {
        let (a, b) = (find(&mut parent, y), find(&mut parent, node_x(k)));
        if a != b {
            parent[a] = b;
            let id = forest.len();
            forest.push((y, k));
            adj[y].push((node_x(k), id));
            adj[node_x(k)].push((y, id));
        }
    }

    // relative prices: offset of x̂ nodes, and u_y = f(y, x̂) + price(x̂)
    let mut rel = vec![f64::NAN; n + m];
    let mut comp = vec![usize::MAX; n + m];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for k in 0..m {
        let root = node_x(k);
        if comp[root] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![root];
        comp[root] = id;
        rel[root] = 0.0;
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            i += 1;
            for &(w, _) in &adj[v] {
                if comp[w] != usize::MAX {
                    continue;
                }
                comp[w] = id;
                rel[w] = if v >= n {
                    prob.f.get(w, v - n) + rel[v]
                } else {
                    rel[v] - prob.f.get(v, w - n)
                };
                members.push(w);
            }
        }
        components.push(members);
    }

    let mut r = vec![0.0; m];
    for members in &components {
        let supply: f64 = members
            .iter()
            .filter(|&&v| v < n)
            .map(|&v| prob.p_y[v])
            .sum();
        let xs: Vec<usize> = members
            .iter()
            .filter(|&&v| v >= n)
            .map(|&v| v - n)
            .collect();
        if xs.len() == 1 {
            let k = xs[0];
            r[k] = supply;
            continue;
        }
        // a linear term pins the component's price and absorbs the remainder
        if let Some(&sink) = xs.iter().find(|&&k| fixed_price(prob, k).is_some()) {
            let c = prob.slope(sink, 0.0) - rel[node_x(sink)];
            let mut rest = supply;
            for &k in &xs {
                if k == sink {
                    continue;
                }
                if fixed_price(prob, k).is_some() {
                    let other = prob.slope(k, 0.0) - rel[node_x(k)];
                    if (other - c).abs() > 1e-12 * (1.0 + c.abs()) {
                        return None;
                    }
                    continue;
                }
                r[k] = inverse_slope(prob, k, c + rel[node_x(k)]);
                rest -= r[k];
            }
            if rest < -1e-12 {
                return None;
            }
            r[sink] = rest.max(0.0);
            continue;
        }
        let total = |c: f64| {
            xs.iter()
                .map(|&k| inverse_slope(prob, k, c + rel[node_x(k)]))
                .sum::<f64>()
        };
        let mut lo = xs
            .iter()
            .map(|&k| prob.slope(k, 0.0) - rel[node_x(k)])
            .fold(f64::INFINITY, f64::min);
        let mut hi = xs
            .iter()
            .map(|&k| prob.slope(k, 1.0) - rel[node_x(k)])
            .fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if total(mid) < supply {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = 0.5 * (lo + hi);
        for &k in &xs {
            r[k] = inverse_slope(prob, k, c + rel[node_x(k)]);
        }
        // spread the bisection residual over the component's symbols
        let err = supply - xs.iter().map(|&k| r[k]).sum::<f64>();
        if err.abs() > 1e-9 * supply.max(1e-300) {
            return None;
        }
        let last = *xs.iter().max_by(|&&a, &&b| r[a].total_cmp(&r[b])).unwrap();
        r[last] += err;
    }

    // leaf peeling for arc flows
    let mut remaining: Vec<f64> = (0..n + m)
        .map(|v| if v < n { prob.p_y[v] } else { r[v - n] })
        .collect();
    let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut used = vec![false; forest.len()];
    let mut flow = vec![0.0; forest.len()];
    let mut stack: Vec<usize> = (0..n + m).filter(|&v| degree[v] == 1).collect();
    while let Some(v) = stack.pop() {
        if degree[v] != 1 {
            continue;
        }
        let &(w, id) = adj[v]
            .iter()
            .find(|(_, id)| !used[*id])
            .expect("leaf has one open arc");
        used[id] = true;
        let amount = remaining[v];
        flow[id] = amount;
        remaining[v] = 0.0;
        remaining[w] -= amount;
        degree[v] = 0;
        degree[w] -= 1;
        if degree[w] == 1 {
            stack.push(w);
        }
    }
    let scale = prob.p_y.iter().fold(0.0f64, |a, &b| a.max(b));
    if flow.iter().any(|&f| f < -1e-12 * scale) {
        return None;
    }

    let mut q = vec![0.0; n * m];
    for (&(y, k), &f) in forest.iter().zip(&flow) {
        q[y * m + k] = f.max(0.0);
    }
    for (y, row) in q.chunks_mut(m).enumerate() {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            // massless observation: keep its strongest arc
            let &(_, k) = arcs.iter().find(|a| a.0 == y)?;
            row[k] = 1.0;
        }
    }
    Some(q)
}
