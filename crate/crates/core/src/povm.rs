//! The state-adapted covariant measurement and its figures of merit.
//!
//! For a pure state the optimal measurement only sees the weights `γ_d` of
//! the state across the eigenspaces of `D = a†a − b†b`. Outcome densities
//! and the average cost are therefore computed from a [`PhaseVector`] and
//! the measurement operators are never materialized. The measurement is
//! only specified on the span of the `|d⟩⟩` vectors; states produced here
//! have no component outside it.
//!
//! Convention: the outcome density for a shift `θ` is
//! `|Σ_d ψ_d e^{id(φ−θ)}|²/2π`, which is the projection of the shifted state
//! on `|E_φ⟩⟩ = Σ_d e^{idφ}|d⟩⟩` when the shift multiplies `|d⟩⟩` by
//! `e^{idθ}`. In the rotated frame `exp(−iJ_xψ)` becomes `exp(−iJ_zψ)`, and
//! `D = 2J_z`, so the coupling that realizes `θ` is `ψ = −2θ`
//! ([`generator_angle`]).

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{decompose, BasisLabel, EigenspaceDecomposition, StateError, TwoModeState, INPUT_NORM_TOL};
use crate::schwinger::{coupling_evolution, rotate_to_z, SchwingerError, ShiftParameter};

/// Default number of quadrature nodes on the circle.
pub const DEFAULT_GRID: usize = 4096;

#[derive(Debug, Error)]
pub enum PovmError {
    #[error("phase vector is not normalized: sum psi_d^2 = {0}")]
    Unnormalized(f64),
    #[error("phase vector is empty or all zero")]
    Zero,
    #[error("phase vector has a non-finite entry")]
    NonFinite,
    #[error("malformed phase vector file: {0}")]
    Format(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Schwinger(#[from] SchwingerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Radial level `n(d)` occupied in each eigenspace; absent entries are 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelMap {
    n_of_d: BTreeMap<i64, u32>,
}

impl LevelMap {
    pub fn ground() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (i64, u32)>>(pairs: I) -> Self {
        Self {
            n_of_d: pairs.into_iter().filter(|(_, n)| *n != 0).collect(),
        }
    }

    /// Same level in every eigenspace.
    pub fn uniform(n: u32, d_max: i64) -> Self {
        Self::from_pairs((-d_max..=d_max).map(|d| (d, n)))
    }

    pub fn level(&self, d: i64) -> u32 {
        self.n_of_d.get(&d).copied().unwrap_or(0)
    }

    /// Photon number `2n(d) + |d|` carried by eigenspace `d`.
    pub fn energy(&self, d: i64) -> f64 {
        2.0 * f64::from(self.level(d)) + d.unsigned_abs() as f64
    }

    pub fn is_ground(&self) -> bool {
        self.n_of_d.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_of_d.iter().all(|(d, n)| self.level(-d) == *n)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.n_of_d.iter().map(|(d, n)| (*d, *n))
    }
}

/// Real amplitudes `ψ_d` on a contiguous range of `d`.
///
/// Vectors derived from states are non-negative by the rephasing convention.
/// Excited optimizer branches keep their signs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    d_min: i64,
    amps: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseVectorFile {
    pub d_min: i64,
    pub d_max: i64,
    pub amps: Vec<f64>,
}

impl PhaseVector {
    /// Accepts amplitudes whose squared norm is within `1e−9` of one and
    /// renormalizes them exactly.
    pub fn new(d_min: i64, amps: Vec<f64>) -> Result<Self, PovmError> {
        let norm_sqr = checked_norm_sqr(&amps)?;
        if (norm_sqr - 1.0).abs() > INPUT_NORM_TOL {
            return Err(PovmError::Unnormalized(norm_sqr));
        }
        Self::from_unnormalized(d_min, amps)
    }

    pub fn from_unnormalized(d_min: i64, mut amps: Vec<f64>) -> Result<Self, PovmError> {
        let norm = checked_norm_sqr(&amps)?.sqrt();
        if norm == 0.0 {
            return Err(PovmError::Zero);
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { d_min, amps })
    }

    /// The weights `γ_d` of a decomposition.
    pub fn from_decomposition(dec: &EigenspaceDecomposition) -> Self {
        let d_min = *dec.weights.keys().next().expect("decomposition of a nonzero state") as i64;
        let d_max = *dec.weights.keys().last().expect("nonzero") as i64;
        let amps = (d_min..=d_max).map(|d| dec.weight(d as i32)).collect();
        Self::from_unnormalized(d_min, amps).expect("weights of a normalized state")
    }

    pub fn single(d: i64) -> Self {
        Self {
            d_min: d,
            amps: vec![1.0],
        }
    }

    pub fn d_min(&self) -> i64 {
        self.d_min
    }

    pub fn d_max(&self) -> i64 {
        self.d_min + self.amps.len() as i64 - 1
    }

    pub fn amps(&self) -> &[f64] {
        &self.amps
    }

    pub fn get(&self, d: i64) -> f64 {
        if d < self.d_min || d > self.d_max() {
            return 0.0;
        }
        self.amps[(d - self.d_min) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.amps
            .iter()
            .enumerate()
            .map(move |(i, a)| (self.d_min + i as i64, *a))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.amps.iter().all(|a| *a >= 0.0)
    }

    /// `Σ_d ψ_d ψ_{d+1}`, the expectation of `E₊` (and of `E₋`).
    pub fn neighbour_overlap(&self) -> f64 {
        self.amps.windows(2).map(|w| w[0] * w[1]).sum()
    }

    pub fn energy(&self, levels: &LevelMap) -> f64 {
        self.iter().map(|(d, a)| a * a * levels.energy(d)).sum()
    }

    /// Largest entrywise difference, aligning both vectors on `d`.
    pub fn max_abs_diff(&self, other: &PhaseVector) -> f64 {
        let lo = self.d_min.min(other.d_min);
        let hi = self.d_max().max(other.d_max());
        (lo..=hi)
            .map(|d| (self.get(d) - other.get(d)).abs())
            .fold(0.0, f64::max)
    }

    /// Embeds the vector as `Σ_d ψ_d |n(d), d⟩⟩`.
    pub fn embed(&self, levels: &LevelMap) -> Result<TwoModeState, StateError> {
        let n_max = self.iter().map(|(d, _)| levels.level(d)).max().unwrap_or(0);
        let d_max = self.d_min.unsigned_abs().max(self.d_max().unsigned_abs()) as u32;
        TwoModeState::from_amplitudes(
            n_max,
            d_max,
            self.iter()
                .filter(|(_, a)| *a != 0.0)
                .map(|(d, a)| (BasisLabel::new(levels.level(d), d as i32), Complex64::new(a, 0.0))),
        )
    }

    pub fn to_file_repr(&self) -> PhaseVectorFile {
        PhaseVectorFile {
            d_min: self.d_min,
            d_max: self.d_max(),
            amps: self.amps.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_repr()).expect("phase vector serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PovmError> {
        let file: PhaseVectorFile = serde_json::from_str(text).map_err(|e| PovmError::Format(e.to_string()))?;
        if file.d_max - file.d_min + 1 != file.amps.len() as i64 {
            return Err(PovmError::Format(format!(
                "range {}..={} does not match {} amplitudes",
                file.d_min,
                file.d_max,
                file.amps.len()
            )));
        }
        Self::new(file.d_min, file.amps)
    }
}

fn checked_norm_sqr(amps: &[f64]) -> Result<f64, PovmError> {
    if amps.is_empty() {
        return Err(PovmError::Zero);
    }
    if amps.iter().any(|a| !a.is_finite()) {
        return Err(PovmError::NonFinite);
    }
    Ok(amps.iter().map(|a| a * a).sum())
}

/// Average cost, energy and the derived precision `δψ = √C̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    pub average_cost: f64,
    pub energy: f64,
    pub delta_psi: f64,
}

/// `C(δ) = 4 sin²(δ/2)`.
pub fn cost_function(delta: f64) -> f64 {
    let s = (0.5 * delta).sin();
    4.0 * s * s
}

/// `C̄ = ⟨2 − E₊ − E₋⟩ = 2 − 2Σ_d ψ_d ψ_{d+1}` with the energy for `n(d) = 0`.
pub fn average_cost(pv: &PhaseVector) -> CostReport {
    average_cost_with_levels(pv, &LevelMap::ground())
}

pub fn average_cost_with_levels(pv: &PhaseVector, levels: &LevelMap) -> CostReport {
    let average_cost = (2.0 - 2.0 * pv.neighbour_overlap()).clamp(0.0, 4.0);
    CostReport {
        average_cost,
        energy: pv.energy(levels),
        delta_psi: average_cost.sqrt(),
    }
}

/// `p(φ|θ) = |Σ_d ψ_d e^{id(φ−θ)}|² / 2π`.
pub fn conditional_density(pv: &PhaseVector, phi: f64, theta: f64) -> f64 {
    relative_density(pv, phi - theta)
}

fn relative_density(pv: &PhaseVector, delta: f64) -> f64 {
    let mut acc = Complex64::default();
    for (d, a) in pv.iter() {
        if a != 0.0 {
            let (s, c) = (d as f64 * delta).sin_cos();
            acc += Complex64::new(a * c, a * s);
        }
    }
    acc.norm_sqr() / TAU
}

/// Midpoint nodes `(j + ½)·2π/grid` on the circle.
pub fn midpoint_grid(grid: usize) -> Vec<f64> {
    let h = TAU / grid as f64;
    (0..grid).map(|j| (j as f64 + 0.5) * h).collect()
}

/// Density sampled at the midpoint nodes.
pub fn density_on_grid(pv: &PhaseVector, theta: f64, grid: usize) -> Vec<(f64, f64)> {
    midpoint_grid(grid)
        .into_iter()
        .map(|phi| (phi, conditional_density(pv, phi, theta)))
        .collect()
}

/// `∫₀^{2π} p(φ|θ) dφ` by the midpoint rule.
pub fn integrate_density(pv: &PhaseVector, theta: f64, grid: usize) -> f64 {
    let h = TAU / grid as f64;
    density_on_grid(pv, theta, grid).iter().map(|(_, p)| p * h).sum()
}

/// `∫ C(φ−θ) p(φ|θ) dφ` by the midpoint rule. By covariance this equals the
/// average over `θ` as well.
pub fn quadrature_average_cost(pv: &PhaseVector, theta: f64, grid: usize) -> f64 {
    let h = TAU / grid as f64;
    density_on_grid(pv, theta, grid)
        .iter()
        .map(|(phi, p)| cost_function(phi - theta) * p * h)
        .sum()
}

/// `arg ∫ e^{iφ} p(φ|θ) dφ`, mapped to `[0, 2π)`.
pub fn density_circular_mean(pv: &PhaseVector, theta: f64, grid: usize) -> f64 {
    let m: Complex64 = density_on_grid(pv, theta, grid)
        .iter()
        .map(|(phi, p)| Complex64::from_polar(*p, *phi))
        .sum();
    m.arg().rem_euclid(TAU)
}

/// `ψ = 2κΔt`.
pub fn coupling_to_shift(kappa: f64, delta_t: f64) -> Result<ShiftParameter, SchwingerError> {
    ShiftParameter::new(2.0 * kappa * delta_t)
}

/// Coupling `ψ` of `exp(−iJ_xψ)` whose rotated image shifts `|d⟩⟩` by `e^{idθ}`.
pub fn generator_angle(theta: f64) -> f64 {
    -2.0 * theta
}

/// Inverse of [`generator_angle`]: the phase `θ` estimated for coupling `ψ`.
pub fn estimated_phase(psi: f64) -> f64 {
    -0.5 * psi
}

/// Weights `γ_d` of a two-mode input state, read in the frame where the
/// coupling acts as a `J_z` shift.
pub fn phase_vector_of_state(state: &TwoModeState) -> Result<PhaseVector, PovmError> {
    let closed = state.block_closure();
    let rotated = rotate_to_z(&closed, false)?;
    Ok(PhaseVector::from_decomposition(&decompose(&rotated)?))
}

/// Two-mode state whose rotated-frame weights are `pv`: the embedding
/// `Σ_d ψ_d |n(d), d⟩⟩` taken back to the lab frame by `𝒰†`.
pub fn lab_frame_state(pv: &PhaseVector, levels: &LevelMap) -> Result<TwoModeState, PovmError> {
    let embedded = pv.embed(levels)?.block_closure();
    Ok(rotate_to_z(&embedded, true)?)
}

/// Outcome density evaluated in the two-mode space.
///
/// The input is evolved by the coupling, rotated into the `J_z` frame and
/// projected on `|E_φ⟩⟩ = Σ_d e^{idφ}|d⟩⟩`, with `|d⟩⟩` built from the
/// unshifted rotated state. The window is enlarged to whole photon-number
/// blocks first.
#[derive(Debug, Clone)]
pub struct FullPicture {
    state: TwoModeState,
    decomposition: EigenspaceDecomposition,
}

impl FullPicture {
    pub fn new(state: &TwoModeState) -> Result<Self, PovmError> {
        state.check_normalized()?;
        let state = state.block_closure();
        let rotated = rotate_to_z(&state, false)?;
        let decomposition = decompose(&rotated)?;
        Ok(Self { state, decomposition })
    }

    pub fn decomposition(&self) -> &EigenspaceDecomposition {
        &self.decomposition
    }

    /// `⟨⟨d | 𝒰 U_ψ | ψ₀⟩⟩` for every `d` in the support, with `ψ` the
    /// coupling angle that realizes the shift `θ`.
    fn shifted_overlaps(&self, theta: f64) -> Result<Vec<(i64, Complex64)>, PovmError> {
        let evolved = coupling_evolution(&self.state, ShiftParameter::new(generator_angle(theta))?)?;
        let rotated = rotate_to_z(&evolved, false)?;
        Ok(self
            .decomposition
            .projections
            .iter()
            .map(|(d, proj)| {
                let overlap: Complex64 = proj
                    .eigenvector()
                    .map(|(n, c)| c.conj() * rotated.amplitude(BasisLabel::new(n, *d)))
                    .sum();
                (i64::from(*d), overlap)
            })
            .collect())
    }

    pub fn densities(&self, theta: f64, phis: &[f64]) -> Result<Vec<f64>, PovmError> {
        let overlaps = self.shifted_overlaps(theta)?;
        Ok(phis
            .iter()
            .map(|phi| {
                let amp: Complex64 = overlaps
                    .iter()
                    .map(|(d, o)| Complex64::from_polar(1.0, -(*d as f64) * phi) * o)
                    .sum();
                amp.norm_sqr() / TAU
            })
            .collect())
    }
}

pub fn full_picture_density(state: &TwoModeState, theta: f64, phi: f64) -> Result<f64, PovmError> {
    Ok(FullPicture::new(state)?.densities(theta, &[phi])?[0])
}

/// Largest absolute gap between the reduced and the two-mode densities on a
/// midpoint grid.
pub fn route_discrepancy(state: &TwoModeState, theta: f64, grid: usize) -> Result<f64, PovmError> {
    let full = FullPicture::new(state)?;
    let pv = PhaseVector::from_decomposition(full.decomposition());
    let phis = midpoint_grid(grid);
    let long = full.densities(theta, &phis)?;
    Ok(phis
        .iter()
        .zip(long)
        .map(|(phi, p)| (p - conditional_density(&pv, *phi, theta)).abs())
        .fold(0.0, f64::max))
}

/// Flat density value `1/2π`.
pub const FLAT_DENSITY: f64 = 1.0 / (2.0 * PI);
