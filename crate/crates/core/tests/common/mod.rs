#![allow(dead_code)]

use std::sync::Arc;

use pdtradeoff::model::{
    Alphabet, ConditionalKernel, DegradationModel, DiscreteDistribution, DistortionMeasure,
    Estimator,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive weights summing to one.
pub fn simplex_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Weights on the simplex, some of which may be zero.
pub fn sparse_simplex_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let s: f64 = raw.iter().sum();
        if s > 0.0 {
            return raw.into_iter().map(|v| v / s).collect();
        }
    }
}

/// Distinct sorted scalar values.
pub fn scalar_alphabet(rng: &mut impl Rng, n: usize) -> Arc<Alphabet> {
    let mut vals: Vec<f64> = Vec::with_capacity(n);
    while vals.len() < n {
        let v = (rng.gen_range(-4.0..4.0f64) * 8.0).round() / 8.0;
        if !vals.contains(&v) {
            vals.push(v);
        }
    }
    vals.sort_by(f64::total_cmp);
    Arc::new(Alphabet::from_scalars(&vals).unwrap())
}

pub fn distribution(alphabet: Arc<Alphabet>, w: Vec<f64>) -> DiscreteDistribution {
    DiscreteDistribution::from_masses(alphabet, w).unwrap()
}

pub fn random_model(rng: &mut impl Rng, n_x: usize, n_y: usize) -> DegradationModel {
    let x = scalar_alphabet(rng, n_x);
    let y = Arc::new(Alphabet::indexed(n_y).unwrap());
    let prior = distribution(x.clone(), simplex_point(rng, n_x));
    let rows = (0..n_x).map(|_| simplex_point(rng, n_y)).collect();
    DegradationModel::new(prior, ConditionalKernel::new(x, y, rows).unwrap()).unwrap()
}

pub fn square_error(model: &DegradationModel) -> DistortionMeasure {
    DistortionMeasure::square_error(
        model.x_alphabet_arc().clone(),
        model.x_alphabet_arc().clone(),
    )
    .unwrap()
}

pub fn random_estimator(rng: &mut impl Rng, model: &DegradationModel) -> Estimator {
    let rows = (0..model.n_y())
        .map(|_| sparse_simplex_point(rng, model.n_x()))
        .collect();
    Estimator::new(
        ConditionalKernel::new(
            model.y_alphabet_arc().clone(),
            model.x_alphabet_arc().clone(),
            rows,
        )
        .unwrap(),
    )
}

/// Binary symmetric channel over X = {0, 1}.
pub fn binary_symmetric(p1: f64, flip: f64) -> DegradationModel {
    let x = Arc::new(Alphabet::from_scalars(&[0.0, 1.0]).unwrap());
    let y = Arc::new(Alphabet::indexed(2).unwrap());
    let prior = distribution(x.clone(), vec![1.0 - p1, p1]);
    let ch =
        ConditionalKernel::new(x, y, vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]]).unwrap();
    DegradationModel::new(prior, ch).unwrap()
}

/// Minimum-cost transport between `a` and `b` by enumerating vertices of the
/// transportation polytope: every vertex is the unique solution on a spanning
/// tree of the bipartite graph, so try all (n+m−1)-subsets of cells.
pub fn transport_vertex_oracle(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let k = n + m - 1;
    let cells = n * m;
    let mut best = f64::INFINITY;
    let mut choice: Vec<usize> = (0..k).collect();
    loop {
        if let Some(plan) = tree_solution(a, b, &choice, m) {
            let c: f64 = choice
                .iter()
                .zip(&plan)
                .map(|(&cell, &f)| cost[cell] * f)
                .sum();
            best = best.min(c);
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if choice[i] < cells - k + i {
                choice[i] += 1;
                for j in i + 1..k {
                    choice[j] = choice[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Flows on the chosen cells meeting both marginals, if the cells form a
/// spanning tree and the flows are nonnegative.
fn tree_solution(a: &[f64], b: &[f64], cells: &[usize], m: usize) -> Option<Vec<f64>> {
    let n = a.len();
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut deg = vec![0usize; n + m];
    for &c in cells {
        deg[c / m] += 1;
        deg[n + c % m] += 1;
    }
    let mut flow = vec![f64::NAN; cells.len()];
    let mut done = vec![false; cells.len()];
    for _ in 0..cells.len() {
        // peel a leaf node
        let leaf = (0..n + m).find(|&v| deg[v] == 1)?;
        let idx = (0..cells.len())
            .find(|&i| !done[i] && (cells[i] / m == leaf || n + cells[i] % m == leaf))?;
        let (r, c) = (cells[idx] / m, cells[idx] % m);
        let f = if leaf < n { ra[r] } else { rb[c] };
        if f < -1e-12 {
            return None;
        }
        flow[idx] = f;
        ra[r] -= f;
        rb[c] -= f;
        done[idx] = true;
        deg[r] -= 1;
        deg[n + c] -= 1;
    }
    if ra.iter().chain(&rb).any(|v| v.abs() > 1e-9) {
        return None;
    }
    Some(flow)
}
