//! Exhaustive grid search over kernels for tiny instances.

use super::problem::Lagrangian;
use crate::error::{Error, Result};

pub const MAX_ORACLE_CELLS: usize = 64;
pub const MAX_ORACLE_RESOLUTION: usize = 21;
/// Upper bound on the number of grid kernels enumerated.
pub const MAX_ORACLE_KERNELS: f64 = 1e9;
/// Slack on the distortion constraint, absorbing rounding in the grid sums.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// All points of the simplex in `m` coordinates with entries in {0, 1/s, ..., 1}.
fn simplex_grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == m - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(m, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, steps, steps, &mut Vec::with_capacity(m), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn check_size(n_x: usize, n_y: usize, n_xhat: usize, resolution: usize) -> Result<()> {
    if n_x * n_y * n_xhat > MAX_ORACLE_CELLS {
        return Err(Error::TooLarge(format!(
            "|X|·|Y|·|X̂| = {} exceeds {MAX_ORACLE_CELLS}",
            n_x * n_y * n_xhat
        )));
    }
    if !(2..=MAX_ORACLE_RESOLUTION).contains(&resolution) {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} outside [2, {MAX_ORACLE_RESOLUTION}]"
        )));
    }
    let per_row = binomial(resolution - 1 + n_xhat - 1, n_xhat - 1);
    if per_row.powi(n_y as i32) > MAX_ORACLE_KERNELS {
        return Err(Error::TooLarge(format!(
            "{per_row}^{n_y} grid kernels exceed the enumeration budget"
        )));
    }
    Ok(())
}

/// Minimal perception over grid kernels with distortion ≤ each level
/// (+∞ where no grid kernel qualifies).
pub(crate) fn search(prob: &Lagrangian, levels: &[f64], resolution: usize) -> Vec<f64> {
    let m = prob.n_xhat();
    let n = prob.n_y();
    let rows = simplex_grid(m, resolution - 1);
    let row_cost: Vec<Vec<f64>> = (0..n)
        .map(|y| {
            rows.iter()
                .map(|r| prob.p_y[y] * prob.f.row(y).iter().zip(r).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        })
        .collect();
    // cheapest possible completion from row y onward
    let mut tail_min = vec![0.0; n + 1];
    for y in (0..n).rev() {
        tail_min[y] = tail_min[y + 1] + row_cost[y].iter().copied().fold(f64::INFINITY, f64::min);
    }
    let cap = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max) + FEASIBILITY_SLACK;
    let mut best = vec![f64::INFINITY; levels.len()];

    struct Walk<'a> {
        prob: &'a Lagrangian,
        rows: &'a [Vec<f64>],
        row_cost: &'a [Vec<f64>],
        tail_min: &'a [f64],
        levels: &'a [f64],
        cap: f64,
        best: &'a mut [f64],
    }

    /// `stack[y]` holds the marginal of rows before y; rebuilding each level
    /// from its parent avoids drift from repeated add/subtract.
    fn walk(w: &mut Walk, y: usize, cost: f64, stack: &mut [Vec<f64>]) {
        if y == w.row_cost.len() {
            let p = w.prob.perception(&stack[y]);
            for (b, &d) in w.best.iter_mut().zip(w.levels) {
                if cost <= d + FEASIBILITY_SLACK && p < *b {
                    *b = p;
                }
            }
            return;
        }
        let py = w.prob.p_y[y];
        for (i, row) in w.rows.iter().enumerate() {
            let c = cost + w.row_cost[y][i];
            if c + w.tail_min[y + 1] > w.cap {
                continue;
            }
            let (done, rest) = stack.split_at_mut(y + 1);
            for ((acc, base), v) in rest[0].iter_mut().zip(&done[y]).zip(row) {
                *acc = base + py * v;
            }
            walk(w, y + 1, c, stack);
        }
    }

    let mut w = Walk {
        prob,
        rows: &rows,
        row_cost: &row_cost,
        tail_min: &tail_min,
        levels,
        cap,
        best: &mut best,
    };
    walk(&mut w, 0, 0.0, &mut vec![vec![0.0; m]; n + 1]);
    best
}

/// Number of distortion bins in which the mixture search keeps its best point.
const MIXTURE_BINS: usize = 1 << 14;

/// Upper bound on P(D) from time-sharing between grid kernels: the lower
/// convex envelope of all grid (distortion, perception) pairs. Mixing two
/// kernels mixes their distortions linearly and, for divergences convex in
/// the reconstruction law, bounds the mixed perception by the chord.
pub(crate) fn mixture_search(prob: &Lagrangian, levels: &[f64], resolution: usize) -> Vec<f64> {
    let m = prob.n_xhat();
    let n = prob.n_y();
    let rows = simplex_grid(m, resolution - 1);
    let row_cost: Vec<Vec<f64>> = (0..n)
        .map(|y| {
            rows.iter()
                .map(|r| prob.p_y[y] * prob.f.row(y).iter().zip(r).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        })
        .collect();
    let span: f64 = row_cost
        .iter()
        .map(|c| c.iter().copied().fold(0.0, f64::max))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut bins = vec![(f64::INFINITY, f64::INFINITY); MIXTURE_BINS];

    #[allow(clippy::too_many_arguments)]
    fn walk(
        prob: &Lagrangian,
        rows: &[Vec<f64>],
        row_cost: &[Vec<f64>],
        span: f64,
        bins: &mut [(f64, f64)],
        y: usize,
        cost: f64,
        stack: &mut [Vec<f64>],
    ) {
        if y == row_cost.len() {
            let p = prob.perception(&stack[y]);
            if p.is_finite() {
                let b = ((cost / span * bins.len() as f64) as usize).min(bins.len() - 1);
                if p < bins[b].1 || (p == bins[b].1 && cost < bins[b].0) {
                    bins[b] = (cost, p);
                }
            }
            return;
        }
        let py = prob.p_y[y];
        for (i, row) in rows.iter().enumerate() {
            let (done, rest) = stack.split_at_mut(y + 1);
            for ((acc, base), v) in rest[0].iter_mut().zip(&done[y]).zip(row) {
                *acc = base + py * v;
            }
            walk(
                prob,
                rows,
                row_cost,
                span,
                bins,
                y + 1,
                cost + row_cost[y][i],
                stack,
            );
        }
    }

    walk(
        prob,
        &rows,
        &row_cost,
        span,
        &mut bins,
        0,
        0.0,
        &mut vec![vec![0.0; m]; n + 1],
    );
    let pts: Vec<(f64, f64)> = bins.into_iter().filter(|b| b.1.is_finite()).collect();
    let hull = super::curve::lower_convex_envelope(&pts);
    levels
        .iter()
        .map(|&d| match hull.first() {
            Some(first) if d + FEASIBILITY_SLACK >= first.0 => {
                super::curve::envelope_at(&hull, d.max(first.0))
            }
            _ => f64::INFINITY,
        })
        .collect()
}
