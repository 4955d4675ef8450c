//! Energy-constrained minimization of the average cost.
//!
//! Stationary states of `C̄ + μ′N − λ⟨ψ|ψ⟩` with one radial level `n(d)` per
//! eigenspace are eigenvectors of the symmetric tridiagonal matrix
//!
//! ```text
//! A_{d,d} = 2 + μ′(2n(d) + |d|),   A_{d,d±1} = −1,
//! ```
//!
//! and each eigenpair satisfies `C̄ = λ − μ′N`. The ground vector is the
//! optimum at the energy it produces; excited vectors are the other
//! stationary points. Sweeping `μ′ > 0` traces `C̄` against `N`.

pub mod bessel;
pub mod fit;
pub mod tridiag;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use crate::povm::LevelMap;
use crate::povm::{PhaseVector, PovmError};
pub use bessel::{bessel_j, BesselError};
pub use fit::{fit_power_law, FitError, ScalingFit};
pub use tridiag::{EigenError, SymTridiagonal};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("mu' must be positive and finite, got {0}")]
    NonPositiveMu(f64),
    #[error("truncation grew to d_max = {d_max} (cap {cap}) at mu' = {mu_prime}")]
    TruncationCap { mu_prime: f64, d_max: usize, cap: usize },
    #[error("no root of the boundary condition J(l+1) = J(l-1) for mu' = {0}")]
    NoBoundaryRoot(f64),
    #[error("closed-form vector is not normalizable")]
    NotNormalizable,
    #[error("target energy must be positive and finite, got {0}")]
    BadEnergy(f64),
    #[error("mu' grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Povm(#[from] PovmError),
}

fn check_mu(mu_prime: f64) -> Result<(), OptimizeError> {
    if !(mu_prime > 0.0 && mu_prime.is_finite()) {
        return Err(OptimizeError::NonPositiveMu(mu_prime));
    }
    Ok(())
}

/// `A` over `d ∈ [−d_max, d_max]`; row `i` holds `d = i − d_max`.
pub fn build_matrix(mu_prime: f64, d_max: usize, levels: &LevelMap) -> Result<SymTridiagonal, OptimizeError> {
    check_mu(mu_prime)?;
    let dm = d_max as i64;
    let diag = (-dm..=dm).map(|d| 2.0 + mu_prime * levels.energy(d)).collect();
    Ok(SymTridiagonal::new(diag, vec![-1.0; 2 * d_max])?)
}

/// Single-mode analogue on `n = 0..=n_max`: diagonal `2 + μ′n`.
pub fn build_half_line_matrix(mu_prime: f64, n_max: usize) -> Result<SymTridiagonal, OptimizeError> {
    check_mu(mu_prime)?;
    let diag = (0..=n_max).map(|n| 2.0 + mu_prime * n as f64).collect();
    Ok(SymTridiagonal::new(diag, vec![-1.0; n_max])?)
}

pub fn eigen_lowest(matrix: &SymTridiagonal, k: usize) -> Result<Vec<(f64, Vec<f64>)>, OptimizeError> {
    Ok(matrix.eigen_lowest(k)?)
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Fixed truncation instead of the adaptive one.
    pub pinned_d_max: Option<usize>,
    pub max_d_max: usize,
    /// Accept a truncation once `|ψ_{±d_max}| < tail_tolerance · max|ψ|`.
    pub tail_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            pinned_d_max: None,
            max_d_max: 1 << 22,
            tail_tolerance: 1e-12,
        }
    }
}

impl SolveOptions {
    pub fn pinned(d_max: usize) -> Self {
        Self {
            pinned_d_max: Some(d_max),
            ..Self::default()
        }
    }
}

/// Starting truncation. The ground vector spreads over `|d| ~ μ′^{−1/3}`
/// and decays like `exp(−(2/3)(|d|μ′^{1/3})^{3/2})` beyond it.
pub fn initial_d_max(mu_prime: f64) -> usize {
    16usize.max((16.0 * mu_prime.powf(-1.0 / 3.0)).ceil() as usize)
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub mu_prime: f64,
    pub branch_index: usize,
    pub lambda: f64,
    pub energy: f64,
    pub average_cost: f64,
    pub eigen_residual: f64,
    pub d_max: usize,
    #[serde(skip)]
    pub vector: PhaseVector,
    #[serde(skip)]
    pub levels: LevelMap,
}

impl OptimizationResult {
    pub fn delta_psi(&self) -> f64 {
        self.average_cost.sqrt()
    }

    /// `λ′ = (2 − λ)/μ′`, the order offset of the Bessel form.
    pub fn lambda_prime(&self) -> f64 {
        (2.0 - self.lambda) / self.mu_prime
    }

    /// `λ − μ′N − C̄`, zero for an exact eigenpair.
    pub fn bookkeeping_gap(&self) -> f64 {
        self.lambda - self.mu_prime * self.energy - self.average_cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lattice {
    /// `d ∈ [−d_max, d_max]`
    Full,
    /// `n ∈ [0, d_max]`
    HalfLine,
}

fn solve_lattice(
    lattice: Lattice,
    mu_prime: f64,
    levels: &LevelMap,
    count: usize,
    opts: &SolveOptions,
) -> Result<Vec<OptimizationResult>, OptimizeError> {
    check_mu(mu_prime)?;
    let mut d_max = opts.pinned_d_max.unwrap_or_else(|| initial_d_max(mu_prime));
    loop {
        let (matrix, d_min) = match lattice {
            Lattice::Full => (build_matrix(mu_prime, d_max, levels)?, -(d_max as i64)),
            Lattice::HalfLine => (build_half_line_matrix(mu_prime, d_max)?, 0),
        };
        let pairs = matrix.eigen_lowest(count.min(matrix.dim()))?;
        let tails_ok = pairs.iter().all(|(_, v)| {
            let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let last = v[v.len() - 1].abs();
            let first = if lattice == Lattice::Full { v[0].abs() } else { 0.0 };
            first.max(last) < opts.tail_tolerance * peak
        });
        if opts.pinned_d_max.is_some() || tails_ok {
            return pairs
                .into_iter()
                .enumerate()
                .map(|(branch, (lambda, v))| {
                    let eigen_residual = matrix.residual(lambda, &v);
                    let vector = PhaseVector::from_unnormalized(d_min, v)?;
                    let energy = vector.energy(levels);
                    let average_cost = 2.0 - 2.0 * vector.neighbour_overlap();
                    Ok(OptimizationResult {
                        mu_prime,
                        branch_index: branch,
                        lambda,
                        energy,
                        average_cost,
                        eigen_residual,
                        d_max,
                        vector,
                        levels: levels.clone(),
                    })
                })
                .collect();
        }
        d_max *= 2;
        if d_max > opts.max_d_max {
            return Err(OptimizeError::TruncationCap {
                mu_prime,
                d_max,
                cap: opts.max_d_max,
            });
        }
    }
}

/// Stationary state number `branch` (0 = optimum) at multiplier `μ′`.
pub fn solve(mu_prime: f64, levels: &LevelMap, branch: usize) -> Result<OptimizationResult, OptimizeError> {
    solve_with(mu_prime, levels, branch, &SolveOptions::default())
}

pub fn solve_with(
    mu_prime: f64,
    levels: &LevelMap,
    branch: usize,
    opts: &SolveOptions,
) -> Result<OptimizationResult, OptimizeError> {
    let mut all = solve_branches(mu_prime, levels, branch + 1, opts)?;
    if all.len() <= branch {
        return Err(EigenError::TooMany {
            requested: branch + 1,
            dim: all.len(),
        }
        .into());
    }
    Ok(all.swap_remove(branch))
}

/// The `count` lowest stationary states sharing one truncation.
pub fn solve_branches(
    mu_prime: f64,
    levels: &LevelMap,
    count: usize,
    opts: &SolveOptions,
) -> Result<Vec<OptimizationResult>, OptimizeError> {
    solve_lattice(Lattice::Full, mu_prime, levels, count, opts)
}

/// Ground state of the single-mode problem, where the phase generator has
/// the spectrum `{0, 1, 2, …}` and `n` photons cost energy `n`.
pub fn solve_half_line(mu_prime: f64, opts: &SolveOptions) -> Result<OptimizationResult, OptimizeError> {
    let mut all = solve_lattice(Lattice::HalfLine, mu_prime, &LevelMap::ground(), 1, opts)?;
    Ok(all.swap_remove(0))
}

/// Optimal results for several candidate level maps at one `μ′`.
pub fn compare_levels(mu_prime: f64, candidates: &[LevelMap]) -> Result<Vec<OptimizationResult>, OptimizeError> {
    candidates.iter().map(|lm| solve(mu_prime, lm, 0)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub d_min: i64,
    /// `(2 − λ)ψ_d − ψ_{d−1} − ψ_{d+1} − μ(2n(d) + |d|)ψ_d` with `μ = −μ′`.
    pub residuals: Vec<f64>,
    /// `ν^(d) = −ψ_d(ψ_{d+1} + ψ_{d−1})`.
    pub nu: BTreeMap<i64, f64>,
}

impl StationarityReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub fn stationarity_check(result: &OptimizationResult) -> StationarityReport {
    stationarity_of(&result.vector, result.lambda, result.mu_prime, &result.levels)
}

pub fn stationarity_of(vector: &PhaseVector, lambda: f64, mu_prime: f64, levels: &LevelMap) -> StationarityReport {
    let mu = -mu_prime;
    let mut residuals = Vec::with_capacity(vector.amps().len());
    let mut nu = BTreeMap::new();
    for (d, psi) in vector.iter() {
        let left = vector.get(d - 1);
        let right = vector.get(d + 1);
        residuals.push((2.0 - lambda) * psi - left - right - mu * levels.energy(d) * psi);
        nu.insert(d, -psi * (left + right));
    }
    StationarityReport {
        d_min: vector.d_min(),
        residuals,
        nu,
    }
}

/// `J_{λ′+1}(2/μ′) − J_{λ′−1}(2/μ′)`; for `λ′ < 1` the lower order is
/// eliminated with the three-term recurrence.
pub fn boundary_mismatch(mu_prime: f64, lambda_prime: f64) -> Result<f64, OptimizeError> {
    check_mu(mu_prime)?;
    let x = 2.0 / mu_prime;
    if lambda_prime >= 1.0 {
        Ok(bessel_j(lambda_prime + 1.0, x)? - bessel_j(lambda_prime - 1.0, x)?)
    } else {
        let up = bessel_j(lambda_prime + 1.0, x)?;
        Ok(2.0 * up - 2.0 * lambda_prime / x * bessel_j(lambda_prime, x)?)
    }
}

/// Largest root of [`boundary_mismatch`] in `(0, 2/μ′)`, by a downward scan
/// followed by bisection. It corresponds to the lowest eigenvalue
/// `λ = 2 − μ′λ′`.
pub fn boundary_root(mu_prime: f64) -> Result<f64, OptimizeError> {
    check_mu(mu_prime)?;
    let top = 2.0 / mu_prime;
    let steps = 4000;
    let h = top / steps as f64;
    let mut upper = top;
    let mut f_upper = boundary_mismatch(mu_prime, upper)?;
    for i in 1..steps {
        let lower = top - i as f64 * h;
        let f_lower = boundary_mismatch(mu_prime, lower)?;
        if f_lower == 0.0 {
            return Ok(lower);
        }
        if f_lower.signum() != f_upper.signum() {
            let (mut a, mut b, mut fa) = (lower, upper, f_lower);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if b - a <= 4.0 * f64::EPSILON * b.abs() || mid == a || mid == b {
                    break;
                }
                let fm = boundary_mismatch(mu_prime, mid)?;
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        upper = lower;
        f_upper = f_lower;
    }
    Err(OptimizeError::NoBoundaryRoot(mu_prime))
}

/// `ψ_d ∝ J_{λ′+|d|}(2/μ′)`, cut where the terms drop below `1e−16` of the
/// largest one past the turning point.
pub fn bessel_solution(mu_prime: f64, lambda_prime: f64) -> Result<PhaseVector, OptimizeError> {
    check_mu(mu_prime)?;
    let x = 2.0 / mu_prime;
    let mut half = Vec::new();
    let mut peak = 0.0f64;
    for d in 0.. {
        let order = lambda_prime + d as f64;
        let j = bessel_j(order, x)?;
        peak = peak.max(j.abs());
        half.push(j);
        if order > x && j.abs() < 1e-16 * peak {
            break;
        }
    }
    if peak == 0.0 {
        return Err(OptimizeError::NotNormalizable);
    }
    let d_max = half.len() as i64 - 1;
    let amps: Vec<f64> = (-d_max..=d_max).map(|d| half[d.unsigned_abs() as usize]).collect();
    PhaseVector::from_unnormalized(-d_max, amps).map_err(|_| OptimizeError::NotNormalizable)
}

/// Largest `|2(λ′+|d|)/(2/μ′) ψ_d − ψ_{d−1} − ψ_{d+1}|` over `d ≠ 0`.
pub fn bessel_recursion_residual(pv: &PhaseVector, mu_prime: f64, lambda_prime: f64) -> f64 {
    let x = 2.0 / mu_prime;
    pv.iter()
        .filter(|(d, _)| *d != 0)
        .map(|(d, psi)| {
            let coeff = 2.0 * (lambda_prime + d.unsigned_abs() as f64) / x;
            (coeff * psi - pv.get(d - 1) - pv.get(d + 1)).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct BesselCheck {
    pub mu_prime: f64,
    pub lambda_prime: f64,
    /// `2 − μ′λ′` from the root.
    pub lambda_from_root: f64,
    pub eigen_lambda: f64,
    pub recursion_residual: f64,
    pub max_deviation: f64,
}

/// Compares the Bessel closed form, with `λ′` from the boundary condition,
/// against the ground eigenvector.
pub fn bessel_check(mu_prime: f64) -> Result<BesselCheck, OptimizeError> {
    let lambda_prime = boundary_root(mu_prime)?;
    let closed = bessel_solution(mu_prime, lambda_prime)?;
    let ground = solve(mu_prime, &LevelMap::ground(), 0)?;
    Ok(BesselCheck {
        mu_prime,
        lambda_prime,
        lambda_from_root: 2.0 - mu_prime * lambda_prime,
        eigen_lambda: ground.lambda,
        recursion_residual: bessel_recursion_residual(&closed, mu_prime, lambda_prime),
        max_deviation: closed.max_abs_diff(&ground.vector),
    })
}

/// `steps` points from `lo` to `hi`, evenly spaced in `ln μ′`.
pub fn log_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..steps)
        .map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[steps - 1] = hi;
    g
}

pub fn lin_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFailure {
    pub mu_prime: f64,
    pub grid_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    /// Sorted by energy; ties keep grid order.
    pub results: Vec<OptimizationResult>,
    pub failures: Vec<SweepFailure>,
}

impl SweepOutcome {
    pub fn branch(&self, b: usize) -> impl Iterator<Item = &OptimizationResult> {
        self.results.iter().filter(move |r| r.branch_index == b)
    }

    /// `(N, C̄)` pairs of one branch.
    pub fn curve(&self, b: usize) -> Vec<(f64, f64)> {
        self.branch(b).map(|r| (r.energy, r.average_cost)).collect()
    }
}

/// Solves every grid point for branches `0..branches`, in parallel. Points
/// that fail are recorded and the sweep continues.
pub fn sweep(mu_grid: &[f64], levels: &LevelMap, branches: usize) -> Result<SweepOutcome, OptimizeError> {
    if mu_grid.is_empty() {
        return Err(OptimizeError::EmptyGrid);
    }
    for &mu in mu_grid {
        check_mu(mu)?;
    }
    let count = branches.max(1);
    let per_point: Vec<Result<Vec<OptimizationResult>, OptimizeError>> = mu_grid
        .par_iter()
        .map(|&mu| solve_branches(mu, levels, count, &SolveOptions::default()))
        .collect();

    let mut outcome = SweepOutcome::default();
    for (grid_index, (mu, res)) in mu_grid.iter().zip(per_point).enumerate() {
        match res {
            Ok(rs) => outcome.results.extend(rs),
            Err(e) => outcome.failures.push(SweepFailure {
                mu_prime: *mu,
                grid_index,
                message: e.to_string(),
            }),
        }
    }
    outcome.results.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(outcome)
}

/// Ground state whose energy equals `energy`, found by bisection in `ln μ′`
/// (the ground energy decreases monotonically with `μ′`).
pub fn ground_at_energy(energy: f64, levels: &LevelMap) -> Result<OptimizationResult, OptimizeError> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(OptimizeError::BadEnergy(energy));
    }
    let at = |mu: f64| solve(mu, levels, 0);
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while at(lo)?.energy < energy {
        lo /= 8.0;
    }
    while at(hi)?.energy > energy {
        hi *= 8.0;
    }
    let mut best = at(lo)?;
    for _ in 0..200 {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        if mid <= lo || mid >= hi {
            break;
        }
        let r = at(mid)?;
        if r.energy > energy {
            lo = mid;
        } else {
            hi = mid;
        }
        best = r;
        if (best.energy - energy).abs() <= 1e-13 * energy {
            break;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub points: Vec<(f64, f64)>,
    pub fixed: ScalingFit,
    pub free: ScalingFit,
}

/// Single-mode scaling: ground states of the half-line problem over the grid,
/// fitted over `range` with the slope fixed at `fix_slope` and free.
pub fn single_mode_baseline(
    mu_grid: &[f64],
    range: (f64, f64),
    fix_slope: f64,
) -> Result<BaselineReport, OptimizeError> {
    if mu_grid.is_empty() {
        return Err(OptimizeError::EmptyGrid);
    }
    for &mu in mu_grid {
        check_mu(mu)?;
    }
    let results: Vec<OptimizationResult> = mu_grid
        .par_iter()
        .map(|&mu| solve_half_line(mu, &SolveOptions::default()))
        .collect::<Result<_, _>>()?;
    let mut points: Vec<(f64, f64)> = results.iter().map(|r| (r.energy, r.average_cost)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let fixed = fit_power_law(&points, range, Some(fix_slope))?;
    let free = fit_power_law(&points, range, None)?;
    Ok(BaselineReport { points, fixed, free })
}
