//! First-order Lagrangian solvers: conditional gradient (step 2/(t+2), per-row
//! point-mass minimization) for smooth divergences and projected subgradient
//! (step c/√t, iterate averaging) for the nonsmooth ones.

use super::exact::Solved;
use super::problem::Lagrangian;

pub(crate) const CONDITIONAL_GRADIENT_ITERS: usize = 5_000;
pub(crate) const SUBGRADIENT_ITERS: usize = 20_000;

fn row_gradient(prob: &Lagrangian, psi: &[f64], y: usize) -> Vec<f64> {
    prob.f.row(y).iter().zip(psi).map(|(f, p)| f + p).collect()
}

pub(crate) fn conditional_gradient(
    prob: &Lagrangian,
    init: Vec<f64>,
    max_iters: usize,
    tol: f64,
) -> Solved {
    let m = prob.n_xhat();
    let mut q = init;
    let mut best = Solved {
        q: q.clone(),
        gap: f64::INFINITY,
    };
    let mut best_obj = f64::INFINITY;
    for t in 0..max_iters {
        let psi = prob.perception_gradient(&prob.marginal(&q));
        let mut gap = 0.0;
        let mut vertex = vec![0usize; prob.n_y()];
        for y in 0..prob.n_y() {
            let g = row_gradient(prob, &psi, y);
            let mut b = usize::MAX;
            for k in 0..m {
                if prob.is_allowed(y, k) && (b == usize::MAX || g[k] < g[b]) {
                    b = k;
                }
            }
            let inner: f64 = q[y * m..(y + 1) * m]
                .iter()
                .zip(&g)
                .map(|(a, c)| a * c)
                .sum();
            gap += prob.p_y[y] * (inner - g[b]).max(0.0);
            vertex[y] = b;
        }
        let obj = prob.objective(&q);
        if gap < best.gap || (gap == best.gap && obj < best_obj) {
            best = Solved { q: q.clone(), gap };
            best_obj = obj;
        }
        if gap <= tol {
            break;
        }
        let step = 2.0 / (t as f64 + 2.0);
        for (y, &b) in vertex.iter().enumerate() {
            for (k, v) in q[y * m..(y + 1) * m].iter_mut().enumerate() {
                *v = (1.0 - step) * *v + if k == b { step } else { 0.0 };
            }
        }
    }
    best
}

/// Euclidean projection onto the simplex restricted to `mask`.
fn project_row(v: &mut [f64], mask: &[bool]) {
    let mut u: Vec<f64> = v
        .iter()
        .zip(mask)
        .filter(|(_, &a)| a)
        .map(|(&x, _)| x)
        .collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for (x, &a) in v.iter_mut().zip(mask) {
        *x = if a { (*x - theta).max(0.0) } else { 0.0 };
    }
}

/// Returns the better of the best and averaged iterates; the certificate is
/// the objective spread between them.
pub(crate) fn projected_subgradient(prob: &Lagrangian, init: Vec<f64>, max_iters: usize) -> Solved {
    let m = prob.n_xhat();
    let masks: Vec<Vec<bool>> = (0..prob.n_y())
        .map(|y| (0..m).map(|k| prob.is_allowed(y, k)).collect())
        .collect();
    let fmax = prob.f.values().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let c = 1.0 / (1.0 + fmax + prob.lambda);
    let mut q = init;
    let mut avg = vec![0.0; q.len()];
    let mut best_q = q.clone();
    let mut best_obj = prob.objective(&q);
    for t in 0..max_iters {
        let psi = prob.perception_gradient(&prob.marginal(&q));
        let eta = c / ((t + 1) as f64).sqrt();
        for y in 0..prob.n_y() {
            let g = row_gradient(prob, &psi, y);
            let row = &mut q[y * m..(y + 1) * m];
            for (v, gk) in row.iter_mut().zip(&g) {
                *v -= eta * gk;
            }
            project_row(row, &masks[y]);
        }
        let w = 1.0 / (t + 1) as f64;
        for (a, v) in avg.iter_mut().zip(&q) {
            *a += w * (v - *a);
        }
        let obj = prob.objective(&q);
        if obj < best_obj {
            best_obj = obj;
            best_q.clone_from(&q);
        }
    }
    let avg_obj = prob.objective(&avg);
    let spread = (avg_obj - best_obj).abs();
    if avg_obj < best_obj {
        Solved {
            q: avg,
            gap: spread,
        }
    } else {
        Solved {
            q: best_q,
            gap: spread,
        }
    }
}
