//! Monte Carlo draws from the outcome density and circular estimator statistics.
//!
//! Randomness comes from ChaCha8 seeded with the user seed. Each shard of
//! [`SHARD_SIZE`] draws uses its own stream of the same seed, so results do
//! not depend on thread scheduling.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::povm::{cost_function, PhaseVector};

pub const DEFAULT_SAMPLE_GRID: usize = 1 << 14;
pub const SHARD_SIZE: usize = 1 << 16;
/// Largest density change across one cell, relative to the peak density.
pub const MAX_CELL_VARIATION: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum SimulateError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("grid of {grid} cells is too coarse: density changes by {variation:.3} of its peak across one cell")]
    GridTooCoarse { grid: usize, variation: f64 },
    #[error("grid needs at least 2 cells, got {0}")]
    GridTooSmall(usize),
    #[error("theta must be finite")]
    NonFiniteTheta,
    #[error("empty sample run")]
    EmptyRun,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRun {
    pub theta_true: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
    pub grid_size: usize,
}

/// Inverse CDF of the `θ = 0` density, tabulated on a uniform grid of `φ`
/// with the density linear inside each cell.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    density: Vec<f64>,
    cumulative: Vec<f64>,
    step: f64,
}

impl InverseCdf {
    pub fn new(pv: &PhaseVector, grid: usize) -> Result<Self, SimulateError> {
        if grid < 2 {
            return Err(SimulateError::GridTooSmall(grid));
        }
        let step = TAU / grid as f64;
        let density: Vec<f64> = (0..=grid)
            .map(|i| crate::povm::conditional_density(pv, i as f64 * step, 0.0))
            .collect();
        let peak = density.iter().cloned().fold(0.0, f64::max);
        let variation = density.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) / peak;
        if variation > MAX_CELL_VARIATION {
            return Err(SimulateError::GridTooCoarse { grid, variation });
        }
        let mut cumulative = Vec::with_capacity(grid + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in density.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            cumulative.push(acc);
        }
        Ok(Self {
            density,
            cumulative,
            step,
        })
    }

    pub fn grid(&self) -> usize {
        self.density.len() - 1
    }

    /// Maps `u ∈ [0, 1)` to `φ ∈ [0, 2π)`.
    pub fn invert(&self, u: f64) -> f64 {
        let total = self.cumulative[self.grid()];
        let target = u * total;
        let cell = (self.cumulative.partition_point(|&c| c <= target) - 1).min(self.grid() - 1);
        let rest = target - self.cumulative[cell];
        let p0 = self.density[cell];
        let slope = (self.density[cell + 1] - p0) / self.step;
        // solve p0·t + slope·t²/2 = rest in the cancellation-free form
        let root = (p0 * p0 + 2.0 * slope * rest).max(0.0).sqrt();
        let denom = p0 + root;
        let t = if denom > 0.0 {
            2.0 * rest / denom
        } else {
            0.5 * self.step
        };
        cell as f64 * self.step + t.clamp(0.0, self.step)
    }
}

fn wrap(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

pub fn sample(pv: &PhaseVector, theta: f64, count: usize, seed: u64) -> Result<SampleRun, SimulateError> {
    sample_with_grid(pv, theta, count, seed, DEFAULT_SAMPLE_GRID)
}

/// Draws `count` outcomes from `p(φ|θ)`. The samples for `θ` are the samples
/// for `0` shifted by `θ` modulo `2π`.
pub fn sample_with_grid(
    pv: &PhaseVector,
    theta: f64,
    count: usize,
    seed: u64,
    grid: usize,
) -> Result<SampleRun, SimulateError> {
    if count == 0 {
        return Err(SimulateError::NoSamples);
    }
    if !theta.is_finite() {
        return Err(SimulateError::NonFiniteTheta);
    }
    let table = InverseCdf::new(pv, grid)?;
    let shards = count.div_ceil(SHARD_SIZE);
    let samples: Vec<f64> = (0..shards)
        .into_par_iter()
        .flat_map_iter(|s| {
            let len = SHARD_SIZE.min(count - s * SHARD_SIZE);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let table = &table;
            (0..len).map(move |_| wrap(table.invert(rng.random::<f64>()) + theta))
        })
        .collect();
    Ok(SampleRun {
        theta_true: theta,
        samples,
        seed,
        grid_size: grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorStats {
    /// `arg Σ e^{iφ_k}` in `[0, 2π)`; `None` when the resultant vanishes.
    pub circular_mean: Option<f64>,
    pub circular_stderr: Option<f64>,
    pub mean_cost: f64,
    pub cost_stderr: f64,
    pub delta_psi_hat: f64,
}

pub fn estimator_stats(run: &SampleRun) -> Result<EstimatorStats, SimulateError> {
    let n = run.samples.len();
    if n == 0 {
        return Err(SimulateError::EmptyRun);
    }
    let m = n as f64;
    let (s, c) = run
        .samples
        .iter()
        .fold((0.0, 0.0), |(s, c), phi| (s + phi.sin(), c + phi.cos()));
    let resultant = s.hypot(c);
    let (circular_mean, circular_stderr) = if resultant < 1e-12 {
        (None, None)
    } else {
        let mean = wrap(s.atan2(c));
        let r_bar = resultant / m;
        let rho2 = run.samples.iter().map(|phi| (2.0 * (phi - mean)).cos()).sum::<f64>() / m;
        let var = ((1.0 - rho2) / (2.0 * r_bar * r_bar)).max(0.0) / m;
        (Some(mean), Some(var.sqrt()))
    };

    let costs: Vec<f64> = run
        .samples
        .iter()
        .map(|phi| cost_function(phi - run.theta_true))
        .collect();
    let mean_cost = costs.iter().sum::<f64>() / m;
    let cost_stderr = if n > 1 {
        let var = costs.iter().map(|c| (c - mean_cost).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Ok(EstimatorStats {
        circular_mean,
        circular_stderr,
        mean_cost,
        cost_stderr,
        delta_psi_hat: mean_cost.sqrt(),
    })
}

/// Signed circular distance `a − b` in `(−π, π]`.
pub fn circular_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// True when the `θ = 0` density on `grid_size` nodes `φ_i = 2πi/grid_size`
/// has exactly one local maximum, sitting within one node of `φ = 0`.
pub fn peak_check(pv: &PhaseVector, grid_size: usize) -> bool {
    if grid_size < 3 {
        return false;
    }
    let step = TAU / grid_size as f64;
    let p: Vec<f64> = (0..grid_size)
        .map(|i| crate::povm::conditional_density(pv, i as f64 * step, 0.0))
        .collect();
    let peak = p.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-12 * peak;
    let signs: Vec<(usize, i8)> = (0..grid_size)
        .filter_map(|i| {
            let diff = p[(i + 1) % grid_size] - p[i];
            if diff > tol {
                Some((i, 1))
            } else if diff < -tol {
                Some((i, -1))
            } else {
                None
            }
        })
        .collect();
    if signs.is_empty() {
        return false;
    }
    let mut maxima = Vec::new();
    for k in 0..signs.len() {
        let (_, s0) = signs[k];
        let (i1, s1) = signs[(k + 1) % signs.len()];
        if s0 == 1 && s1 == -1 {
            maxima.push(i1);
        }
    }
    if maxima.len() != 1 {
        return false;
    }
    let argmax = (0..grid_size).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
    let offset = argmax.min(grid_size - argmax);
    offset <= 1
}
