mod common;

use std::sync::Arc;

use pdtradeoff::bounds::{d_max, d_min, verify_theorem4, TransportProblem};
use pdtradeoff::estimators::{mmse_estimator, preservation_check};
use pdtradeoff::model::{
    gaussian_noise_channel, Alphabet, ConditionalKernel, CostTable, DegradationModel,
    DiscreteDistribution, DistortionMeasure, Grid,
};
use proptest::prelude::*;

fn noiseless() -> DegradationModel {
    let x = Arc::new(Alphabet::from_scalars(&[-1.0, 0.0, 1.0]).unwrap());
    let y = Arc::new(Alphabet::indexed(3).unwrap());
    let prior = common::distribution(x.clone(), vec![0.45, 0.1, 0.45]);
    DegradationModel::new(
        prior,
        ConditionalKernel::deterministic(x, y, &[0, 1, 2]).unwrap(),
    )
    .unwrap()
}

fn gaussian_trinary(sigma: f64) -> DegradationModel {
    let x = Arc::new(Alphabet::from_scalars(&[-1.0, 0.0, 1.0]).unwrap());
    let prior = common::distribution(x, vec![0.45, 0.1, 0.45]);
    gaussian_noise_channel(prior, sigma, &Grid::new(-7.0, 7.0, 1401).unwrap()).unwrap()
}

#[test]
fn noiseless_bounds_vanish() {
    let m = noiseless();
    let dist = common::square_error(&m);
    assert_eq!(d_min(&m, &dist).unwrap().value, 0.0);
    assert_eq!(d_max(&m, &dist).unwrap().value, 0.0);
    let r = verify_theorem4(&m).unwrap();
    assert_eq!((r.d_min, r.posterior_sampling_mse), (0.0, 0.0));
    assert!(r.identity_holds && r.bound_holds);
}

#[test]
fn minimum_over_posterior_means_is_posterior_variance() {
    let mut r = common::rng(7);
    for _ in 0..20 {
        let m = common::random_model(&mut r, 4, 6);
        let mmse = mmse_estimator(&m).unwrap();
        let dist =
            DistortionMeasure::square_error(m.x_alphabet_arc().clone(), mmse.output().clone())
                .unwrap();
        let xs = m.x_alphabet().scalar_values().unwrap();
        let mut expected_var = 0.0;
        for y in 0..m.n_y() {
            let row = m.posterior().row(y);
            let mean: f64 = row.iter().zip(&xs).map(|(p, x)| p * x).sum();
            let var: f64 = row
                .iter()
                .zip(&xs)
                .map(|(p, x)| p * (x - mean).powi(2))
                .sum();
            expected_var += m.p_y().get(y) * var;
        }
        let lo = d_min(&m, &dist).unwrap().value;
        assert!((lo - expected_var).abs() < 1e-12, "{lo} vs {expected_var}");
    }
}

#[test]
fn trinary_minimum_matches_the_mmse_estimator() {
    let m = gaussian_trinary(1.0);
    let mmse = mmse_estimator(&m).unwrap();
    let dist =
        DistortionMeasure::square_error(m.x_alphabet_arc().clone(), mmse.output().clone()).unwrap();
    let lo = d_min(&m, &dist).unwrap().value;
    assert!((lo - m.mean_distortion(&mmse, &dist).unwrap()).abs() < 1e-10);
}

#[test]
fn gaussian_bound_is_not_tight() {
    let r = verify_theorem4(&gaussian_trinary(1.0)).unwrap();
    assert!(r.identity_holds && r.bound_holds);
    assert!(r.d_max < 2.0 * r.d_min - 1e-6, "{r:?}");
}

#[test]
fn transport_matches_vertex_enumeration() {
    for seed in 0..20u64 {
        for n in [3usize, 4] {
            let mut r = common::rng(1000 + seed);
            let a = common::simplex_point(&mut r, n);
            let b = common::sparse_simplex_point(&mut r, n);
            let cost: Vec<f64> = (0..n * n).map(|_| r.gen_range(0.0..5.0)).collect();
            let oracle = common::transport_vertex_oracle(&a, &b, &cost);
            let al = Arc::new(Alphabet::indexed(n).unwrap());
            let problem = TransportProblem::new(
                DiscreteDistribution::new(al.clone(), a).unwrap(),
                DiscreteDistribution::new(al, b).unwrap(),
                CostTable::new(n, n, cost).unwrap(),
            )
            .unwrap();
            let sol = problem.solve();
            assert!(sol.is_feasible());
            assert!(
                (sol.cost - oracle).abs() <= 1e-6,
                "seed {seed} n {n}: {} vs {oracle}",
                sol.cost
            );
        }
    }
}

use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn perfect_quality_bound_holds_on_random_models(seed in any::<u64>(), nx in 2usize..7, ny in 2usize..41) {
        let mut r = common::rng(seed);
        let m = common::random_model(&mut r, nx, ny);
        let rep = verify_theorem4(&m).unwrap();
        prop_assert!(rep.identity_holds, "{rep:?}");
        prop_assert!(rep.bound_holds, "{rep:?}");
        prop_assert!((rep.ratio - 2.0).abs() <= 1e-9);
        prop_assert!(rep.d_max <= 2.0 * rep.d_min + 1e-9);
    }

    #[test]
    fn bound_invariants(seed in any::<u64>(), nx in 2usize..6, ny in 1usize..8) {
        let mut r = common::rng(seed);
        let m = common::random_model(&mut r, nx, ny);
        let dist = common::square_error(&m);
        let lo = d_min(&m, &dist).unwrap();
        let hi = d_max(&m, &dist).unwrap();
        prop_assert!(lo.value <= hi.value + 1e-12);
        for _ in 0..10 {
            let e = common::random_estimator(&mut r, &m);
            prop_assert!(lo.value <= m.mean_distortion(&e, &dist).unwrap() + 1e-10);
        }
        let out = m.output_distribution(&hi.estimator).unwrap();
        for (a, b) in out.weights().iter().zip(m.prior().weights()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        let pres = preservation_check(&m, &dist).unwrap();
        prop_assert_eq!(pres.is_preserving_possible, (hi.value - lo.value).abs() <= 1e-9);
    }

    #[test]
    fn transport_cost_ignores_ordering(seed in any::<u64>(), n in 2usize..6, m in 2usize..6) {
        let mut r = common::rng(seed);
        let a = common::simplex_point(&mut r, n);
        let b = common::sparse_simplex_point(&mut r, m);
        let cost: Vec<f64> = (0..n * m).map(|_| r.gen_range(0.0..3.0)).collect();
        let solve = |a: &[f64], b: &[f64], cost: Vec<f64>| {
            TransportProblem::new(
                DiscreteDistribution::new(Arc::new(Alphabet::indexed(a.len()).unwrap()), a.to_vec()).unwrap(),
                DiscreteDistribution::new(Arc::new(Alphabet::indexed(b.len()).unwrap()), b.to_vec()).unwrap(),
                CostTable::new(a.len(), b.len(), cost).unwrap(),
            )
            .unwrap()
            .solve()
            .cost
        };
        let base = solve(&a, &b, cost.clone());
        let ra: Vec<usize> = (0..n).rev().collect();
        let rb: Vec<usize> = (0..m).map(|j| (j + 1) % m).collect();
        let pa: Vec<f64> = ra.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = rb.iter().map(|&j| b[j]).collect();
        let pc: Vec<f64> = ra.iter().flat_map(|&i| rb.iter().map(move |&j| (i, j))).map(|(i, j)| cost[i * m + j]).collect();
        prop_assert!((solve(&pa, &pb, pc) - base).abs() <= 1e-12);
    }
}
