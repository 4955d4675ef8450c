#![allow(dead_code)]

use std::f64::consts::TAU;

use coupling_core::fock::{BasisLabel, TwoModeState};
use coupling_core::povm::PhaseVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cyclic Jacobi diagonalization of a dense symmetric matrix. Returns the
/// eigenvalues in ascending order with the eigenvectors as columns.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let akp = row[p];
                    let akq = row[q];
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = c * apk - s * aqk;
                    *y = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

pub fn dense_tridiagonal(diag: &[f64], off: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = diag[i];
        if i + 1 < n {
            a[i][i + 1] = off[i];
            a[i + 1][i] = off[i];
        }
    }
    a
}

/// Random normalized state with every label inside the window populated.
pub fn random_state(rng: &mut ChaCha8Rng, n_max: u32, d_max: u32) -> TwoModeState {
    let mut s = TwoModeState::new(n_max, d_max);
    for n in 0..=n_max {
        for d in -(d_max as i32)..=d_max as i32 {
            let amp = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            s.set(BasisLabel::new(n, d), amp).unwrap();
        }
    }
    s.normalize().unwrap()
}

/// Exact CDF of `|Σψ_d e^{id(φ−θ)}|²/2π` from `0` to `phi`.
pub fn analytic_cdf(pv: &PhaseVector, theta: f64, phi: f64) -> f64 {
    let terms: Vec<(i64, f64)> = pv.iter().collect();
    let mut acc = 0.0;
    for &(d1, a1) in &terms {
        for &(d2, a2) in &terms {
            let k = (d1 - d2) as f64;
            acc += a1
                * a2
                * if k == 0.0 {
                    phi
                } else {
                    ((k * (phi - theta)).sin() - (-k * theta).sin()) / k
                };
        }
    }
    acc / TAU
}

/// Largest gap between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Pearson statistic of `samples` on `bins` equal bins of `[0, 2π)` against
/// the expected cell probabilities.
pub fn chi_square(samples: &[f64], bins: usize, cell_probability: impl Fn(f64, f64) -> f64) -> f64 {
    let mut counts = vec![0usize; bins];
    for &x in samples {
        counts[((x / TAU * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let n = samples.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let lo = TAU * i as f64 / bins as f64;
            let hi = TAU * (i + 1) as f64 / bins as f64;
            let expected = n * cell_probability(lo, hi);
            (c as f64 - expected).powi(2) / expected
        })
        .sum()
}
