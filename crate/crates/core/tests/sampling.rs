mod common;

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use coupling_core::optimizer::{solve, LevelMap};
use coupling_core::povm::{average_cost, PhaseVector};
use coupling_core::simulate::{estimator_stats, sample};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const BINS: usize = 64;
const COUNT: usize = 100_000;

fn p_value(stat: f64) -> f64 {
    1.0 - ChiSquared::new((BINS - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn single_eigenspace_is_uniform() {
    let run = sample(&PhaseVector::single(3), 0.4, COUNT, 1).unwrap();
    let stat = common::chi_square(&run.samples, BINS, |lo, hi| (hi - lo) / TAU);
    assert!(p_value(stat) > 1e-3, "chi2 {stat}");

    let stats = estimator_stats(&run).unwrap();
    assert!((stats.mean_cost - 2.0).abs() <= 3.0 * stats.cost_stderr);
}

#[test]
fn two_components_follow_one_plus_cosine() {
    let pv = PhaseVector::new(0, vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
    let theta = 1.0;
    let run = sample(&pv, theta, COUNT, 2).unwrap();
    // ∫ (1 + cos(φ − θ))/2π dφ
    let cell = |lo: f64, hi: f64| ((hi - lo) + (hi - theta).sin() - (lo - theta).sin()) / TAU;
    let stat = common::chi_square(&run.samples, BINS, cell);
    assert!(p_value(stat) > 1e-3, "chi2 {stat}");
}

#[test]
fn optimal_state_cost_matches_analytic_value() {
    let r = solve(0.5, &LevelMap::ground(), 0).unwrap();
    let run = sample(&r.vector, 0.0, COUNT, 3).unwrap();
    let stats = estimator_stats(&run).unwrap();
    let analytic = average_cost(&r.vector).average_cost;
    assert!((stats.mean_cost - analytic).abs() <= 3.0 * stats.cost_stderr);
    assert!((stats.delta_psi_hat.powi(2) - analytic).abs() <= 3.0 * stats.cost_stderr);
}

#[test]
fn empirical_cdf_converges() {
    let pv = PhaseVector::from_unnormalized(-1, vec![0.3, 0.9, 0.5]).unwrap();
    for (theta, count) in [(0.0, 10_000), (2.2, 50_000)] {
        let run = sample(&pv, theta, count, 4).unwrap();
        let ks = common::ks_statistic(&run.samples, |phi| common::analytic_cdf(&pv, theta, phi));
        assert!(ks < 1.63 / (count as f64).sqrt(), "ks {ks}");
    }
}
