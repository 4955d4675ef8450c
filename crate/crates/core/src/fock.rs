//! Truncated two-mode Fock space in the `(n, d)` labelling.
//!
//! A two-mode number state `|a⟩_a |b⟩_b` is relabelled by the eigenvalue
//! `d = a − b` of `D = a†a − b†b` and the radial index `n = min(a, b)`.
//! States are stored sparsely since the optimal states live on `n = 0`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Norm deviation accepted on input states.
pub const INPUT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("label (n={n}, d={d}) lies outside the truncation n <= {n_max}, |d| <= {d_max}")]
    OutOfBounds { n: u32, d: i32, n_max: u32, d_max: u32 },
    #[error("state is not normalized: |psi|^2 = {norm_sqr}")]
    Unnormalized { norm_sqr: f64 },
    #[error("cannot normalize the zero vector")]
    ZeroState,
    #[error("non-finite amplitude at (n={n}, d={d})")]
    NonFinite { n: u32, d: i32 },
    #[error("malformed state file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Basis label `|n, d⟩⟩`.
///
/// For `d ≥ 0` this is `|n + d⟩_a |n⟩_b`, for `d < 0` it is `|n⟩_a |n − d⟩_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub n: u32,
    pub d: i32,
}

impl BasisLabel {
    pub fn new(n: u32, d: i32) -> Self {
        Self { n, d }
    }

    /// Photon numbers `(a, b)` of the two modes.
    pub fn to_modes(self) -> (u32, u32) {
        let shift = self.d.unsigned_abs();
        if self.d >= 0 {
            (self.n + shift, self.n)
        } else {
            (self.n, self.n + shift)
        }
    }

    pub fn from_modes(a: u32, b: u32) -> Self {
        Self {
            n: a.min(b),
            d: a as i32 - b as i32,
        }
    }

    /// Total photon number `2n + |d|`.
    pub fn energy(self) -> u32 {
        2 * self.n + self.d.unsigned_abs()
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>>", self.n, self.d)
    }
}

/// Photon numbers of the two modes for a basis label.
pub fn basis_label_to_modes(label: BasisLabel) -> (u32, u32) {
    label.to_modes()
}

/// Pure two-mode state on the window `0 ≤ n ≤ n_max`, `|d| ≤ d_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    n_max: u32,
    d_max: u32,
    amplitudes: BTreeMap<BasisLabel, Complex64>,
}

impl TwoModeState {
    pub fn new(n_max: u32, d_max: u32) -> Self {
        Self {
            n_max,
            d_max,
            amplitudes: BTreeMap::new(),
        }
    }

    pub fn vacuum() -> Self {
        let mut s = Self::new(0, 0);
        s.amplitudes.insert(BasisLabel::new(0, 0), Complex64::new(1.0, 0.0));
        s
    }

    pub fn from_amplitudes<I>(n_max: u32, d_max: u32, amps: I) -> Result<Self, StateError>
    where
        I: IntoIterator<Item = (BasisLabel, Complex64)>,
    {
        let mut s = Self::new(n_max, d_max);
        for (label, amp) in amps {
            s.add(label, amp)?;
        }
        Ok(s)
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    pub fn contains(&self, label: BasisLabel) -> bool {
        label.n <= self.n_max && label.d.unsigned_abs() <= self.d_max
    }

    fn check(&self, label: BasisLabel, amp: Complex64) -> Result<(), StateError> {
        if !self.contains(label) {
            return Err(StateError::OutOfBounds {
                n: label.n,
                d: label.d,
                n_max: self.n_max,
                d_max: self.d_max,
            });
        }
        if !amp.re.is_finite() || !amp.im.is_finite() {
            return Err(StateError::NonFinite { n: label.n, d: label.d });
        }
        Ok(())
    }

    /// Overwrites the amplitude at `label`. Zero amplitudes are dropped.
    pub fn set(&mut self, label: BasisLabel, amp: Complex64) -> Result<(), StateError> {
        self.check(label, amp)?;
        if amp == Complex64::new(0.0, 0.0) {
            self.amplitudes.remove(&label);
        } else {
            self.amplitudes.insert(label, amp);
        }
        Ok(())
    }

    /// Adds `amp` to the amplitude at `label`.
    pub fn add(&mut self, label: BasisLabel, amp: Complex64) -> Result<(), StateError> {
        self.check(label, amp)?;
        let total = self.amplitude(label) + amp;
        self.set(label, total)
    }

    pub fn amplitude(&self, label: BasisLabel) -> Complex64 {
        self.amplitudes.get(&label).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisLabel, Complex64)> + '_ {
        self.amplitudes.iter().map(|(l, a)| (*l, *a))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<(), StateError> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > INPUT_NORM_TOL {
            return Err(StateError::Unnormalized { norm_sqr });
        }
        Ok(())
    }

    pub fn normalize(&self) -> Result<Self, StateError> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(StateError::ZeroState);
        }
        Ok(self.scale(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            n_max: self.n_max,
            d_max: self.d_max,
            amplitudes: self.amplitudes.iter().map(|(l, a)| (*l, a * factor)).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &TwoModeState) -> Complex64 {
        self.amplitudes
            .iter()
            .map(|(l, a)| a.conj() * other.amplitude(*l))
            .sum()
    }

    /// Largest amplitude difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &TwoModeState) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, a) in self.iter() {
            worst = worst.max((a - other.amplitude(l)).norm());
        }
        for (l, b) in other.iter() {
            if !self.amplitudes.contains_key(&l) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Same amplitudes on a larger (or equal) window.
    pub fn with_window(&self, n_max: u32, d_max: u32) -> Result<Self, StateError> {
        Self::from_amplitudes(n_max, d_max, self.iter())
    }

    /// Highest total photon number `2n_max + d_max` reachable inside the window.
    pub fn max_block(&self) -> u32 {
        2 * self.n_max + self.d_max
    }

    /// True when every photon-number block touched by the support lies
    /// entirely inside the window.
    pub fn blocks_closed(&self) -> bool {
        self.amplitudes.keys().all(|l| self.block_fits(l.energy()))
    }

    /// Whether every basis state with total photon number `total` fits the window.
    pub fn block_fits(&self, total: u32) -> bool {
        total / 2 <= self.n_max && total <= self.d_max
    }

    /// Enlarges the window so that it holds every block up to `2n_max + d_max`.
    pub fn block_closure(&self) -> Self {
        let top = self.max_block();
        Self {
            n_max: top / 2,
            d_max: top,
            amplitudes: self.amplitudes.clone(),
        }
    }

    pub fn to_file_repr(&self) -> StateFile {
        StateFile {
            n_max: self.n_max,
            d_max: self.d_max,
            amplitudes: self
                .iter()
                .map(|(l, a)| AmplitudeEntry {
                    n: l.n,
                    d: l.d,
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }

    pub fn from_file_repr(file: &StateFile, normalize: bool) -> Result<Self, StateError> {
        let state = Self::from_amplitudes(
            file.n_max,
            file.d_max,
            file.amplitudes
                .iter()
                .map(|e| (BasisLabel::new(e.n, e.d), Complex64::new(e.re, e.im))),
        )?;
        if normalize {
            state.normalize()
        } else {
            state.check_normalized()?;
            Ok(state)
        }
    }

    pub fn from_json(text: &str, normalize: bool) -> Result<Self, StateError> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| StateError::Format(e.to_string()))?;
        Self::from_file_repr(&file, normalize)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_repr()).expect("state serializes")
    }

    pub fn load(path: &Path, normalize: bool) -> Result<Self, StateError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, normalize)
    }

    pub fn save(&self, path: &Path) -> Result<(), StateError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// On-disk layout of a [`TwoModeState`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n_max: u32,
    pub d_max: u32,
    pub amplitudes: Vec<AmplitudeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeEntry {
    pub n: u32,
    pub d: i32,
    pub re: f64,
    pub im: f64,
}

/// Unit vector of `c_{n,d}` within one eigenspace `H_d`, stored with the
/// first nonzero coefficient real-positive. `phase` restores the original.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub phase: Complex64,
    pub coeffs: BTreeMap<u32, Complex64>,
}

impl Projection {
    /// The normalized projection of the state onto `H_d`, phase included.
    /// This is the vector `|d⟩⟩` the optimal measurement is built from.
    pub fn eigenvector(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        self.coeffs.iter().map(move |(n, c)| (*n, c * self.phase))
    }
}

/// Split of a state into eigenspaces of `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenspaceDecomposition {
    pub n_max: u32,
    pub d_max: u32,
    pub weights: BTreeMap<i32, f64>,
    pub projections: BTreeMap<i32, Projection>,
}

impl EigenspaceDecomposition {
    pub fn weight(&self, d: i32) -> f64 {
        self.weights.get(&d).copied().unwrap_or(0.0)
    }

    /// `Σ_d γ_d e^{iφ_d} Σ_n c_{n,d} |n,d⟩⟩`.
    pub fn reconstruct(&self) -> TwoModeState {
        let mut state = TwoModeState::new(self.n_max, self.d_max);
        for (d, proj) in &self.projections {
            let gamma = self.weights[d];
            for (n, c) in proj.eigenvector() {
                state
                    .set(BasisLabel::new(n, *d), c * gamma)
                    .expect("decomposition stays inside its window");
            }
        }
        state
    }
}

/// Weights `γ_d` and normalized projections of a normalized state.
pub fn decompose(state: &TwoModeState) -> Result<EigenspaceDecomposition, StateError> {
    state.check_normalized()?;
    let total = state.norm_sqr().sqrt();

    let mut by_d: BTreeMap<i32, Vec<(u32, Complex64)>> = BTreeMap::new();
    for (label, amp) in state.iter() {
        by_d.entry(label.d).or_default().push((label.n, amp));
    }

    let mut weights = BTreeMap::new();
    let mut projections = BTreeMap::new();
    for (d, entries) in by_d {
        let norm = entries.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        // entries are sorted by n, so the first one is the first nonzero coefficient
        let lead = entries[0].1;
        let phase = lead / lead.norm();
        let mut coeffs: BTreeMap<u32, Complex64> = entries.iter().map(|(n, a)| (*n, a * phase.conj() / norm)).collect();
        coeffs.insert(entries[0].0, Complex64::new(lead.norm() / norm, 0.0));
        weights.insert(d, norm / total);
        projections.insert(d, Projection { phase, coeffs });
    }

    Ok(EigenspaceDecomposition {
        n_max: state.n_max,
        d_max: state.d_max,
        weights,
        projections,
    })
}

/// Mean total photon number `Σ |ψ|² (2n + |d|)`.
pub fn energy_expectation(state: &TwoModeState) -> f64 {
    state.iter().map(|(l, a)| a.norm_sqr() * f64::from(l.energy())).sum()
}
