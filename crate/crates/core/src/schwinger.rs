//! Schwinger two-boson realization of SU(2).
//!
//! `J_x = (a†b + b†a)/2`, `J_y = (a†b − b†a)/(2i)`, `J_z = (a†a − b†b)/2`.
//! All three conserve the total photon number, so every operator here acts
//! block by block. Inside the block with `N` photons the basis is
//! `|k⟩_a |N − k⟩_b`, `k = 0..=N`.
//!
//! Unitaries are built from the spectral decomposition of the real
//! tridiagonal `J_x` block. `J_y` is a `J_z`-rotation of `J_x`, so the same
//! decomposition serves both.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, LazyLock, RwLock};

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{BasisLabel, StateError, TwoModeState};
use crate::optimizer::tridiag::{EigenError, SymTridiagonal};

#[derive(Debug, Error)]
pub enum SchwingerError {
    #[error("photon-number block {block} does not fit the window n <= {n_max}, |d| <= {d_max}")]
    TruncationOverflow { block: u32, n_max: u32, d_max: u32 },
    #[error("generator block is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("shift parameter must be finite, got {0}")]
    NonFiniteShift(f64),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    Jx,
    Jy,
    Jz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Jx,
    Jy,
    Jz,
    /// `exp(−iψJ_x)`
    Evolution,
    /// `exp(+i(π/2)J_y)`, mapping `J_x` onto `J_z`
    FrameRotation,
    /// inverse of [`BlockKind::FrameRotation`]
    FrameRotationInverse,
}

impl From<Generator> for BlockKind {
    fn from(g: Generator) -> Self {
        match g {
            Generator::Jx => BlockKind::Jx,
            Generator::Jy => BlockKind::Jy,
            Generator::Jz => BlockKind::Jz,
        }
    }
}

/// Coupling constant `ψ` of `U_ψ = exp(−iJ_xψ)`, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftParameter(f64);

impl ShiftParameter {
    pub fn new(psi: f64) -> Result<Self, SchwingerError> {
        if !psi.is_finite() {
            return Err(SchwingerError::NonFiniteShift(psi));
        }
        Ok(Self(psi))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Beam-splitter transmittivity `cos²ψ` as it is usually quoted for this
    /// coupling. Note that `exp(−iJ_xψ)` itself transmits a single photon with
    /// probability `cos²(ψ/2)`, see [`ShiftParameter::single_photon_transmission`];
    /// the two differ by the factor two between `ψ` and the mixing angle.
    pub fn transmittivity(self) -> f64 {
        self.0.cos().powi(2)
    }

    /// `|⟨1_a 0_b| exp(−iJ_xψ) |1_a 0_b⟩|² = cos²(ψ/2)`.
    pub fn single_photon_transmission(self) -> f64 {
        (0.5 * self.0).cos().powi(2)
    }
}

/// Dense complex square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::default() {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |B†B − I|`.
    pub fn unitarity_residual(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.dim))
    }

    /// `max |B − B†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Basis label of position `k` inside block `total`.
pub fn block_label(total: u32, k: u32) -> BasisLabel {
    BasisLabel::from_modes(k, total - k)
}

/// `⟨k+1| a†b |k⟩` inside block `total`.
fn raising_element(total: u32, k: u32) -> f64 {
    (f64::from(k + 1) * f64::from(total - k)).sqrt()
}

/// `J_x` on block `total` as a real tridiagonal matrix.
pub fn jx_tridiagonal(total: u32) -> SymTridiagonal {
    let diag = vec![0.0; total as usize + 1];
    let off = (0..total).map(|k| 0.5 * raising_element(total, k)).collect();
    SymTridiagonal::new(diag, off).expect("well-formed block")
}

/// Dense generator block built directly from ladder-operator matrix elements.
pub fn generator_block(g: Generator, total: u32) -> CMatrix {
    let dim = total as usize + 1;
    let mut m = CMatrix::zeros(dim);
    match g {
        Generator::Jz => {
            for k in 0..=total {
                m[(k as usize, k as usize)] = Complex64::new(f64::from(2 * k) - f64::from(total), 0.0) * 0.5;
            }
        }
        Generator::Jx | Generator::Jy => {
            for k in 0..total {
                let r = 0.5 * raising_element(total, k);
                let (up, down) = match g {
                    Generator::Jx => (Complex64::new(r, 0.0), Complex64::new(r, 0.0)),
                    // a†b/(2i) raises with −i/2, −b†a/(2i) lowers with +i/2
                    _ => (Complex64::new(0.0, -r), Complex64::new(0.0, r)),
                };
                m[(k as usize + 1, k as usize)] = up;
                m[(k as usize, k as usize + 1)] = down;
            }
        }
    }
    m
}

/// `exp(−iGθ)` for a real symmetric tridiagonal generator, from its spectral
/// decomposition `G = VΛVᵀ`.
pub fn blockwise_exponential(generator: &SymTridiagonal, angle: f64) -> Result<CMatrix, SchwingerError> {
    let pairs = generator.eigen_all()?;
    let dim = generator.dim();
    let mut out = CMatrix::zeros(dim);
    for (lambda, v) in &pairs {
        let phase = Complex64::from_polar(1.0, -lambda * angle);
        for i in 0..dim {
            if v[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[(i, j)] += phase * (v[i] * v[j]);
            }
        }
    }
    Ok(out)
}

/// Diagonal of `exp(−i(π/2)J_z)`, which rotates `J_x` onto `J_y`.
fn quarter_turn_z(total: u32) -> Vec<Complex64> {
    (0..=total)
        .map(|k| Complex64::from_polar(1.0, -FRAC_PI_2 * 0.5 * (f64::from(2 * k) - f64::from(total))))
        .collect()
}

/// `exp(−iθJ_y)` on block `total`.
fn jy_exponential(total: u32, angle: f64) -> Result<CMatrix, SchwingerError> {
    let ux = blockwise_exponential(&jx_tridiagonal(total), angle)?;
    let r = quarter_turn_z(total);
    let mut out = ux;
    let dim = total as usize + 1;
    for i in 0..dim {
        for j in 0..dim {
            out[(i, j)] *= r[i] * r[j].conj();
        }
    }
    Ok(out)
}

type CacheKey = (BlockKind, u64, u32);

static BLOCK_CACHE: LazyLock<RwLock<HashMap<CacheKey, Arc<CMatrix>>>> = LazyLock::new(|| RwLock::new(HashMap::new()));
const CACHE_LIMIT: usize = 16_384;

fn compute_block(kind: BlockKind, angle: f64, total: u32) -> Result<CMatrix, SchwingerError> {
    match kind {
        BlockKind::Jx => Ok(generator_block(Generator::Jx, total)),
        BlockKind::Jy => Ok(generator_block(Generator::Jy, total)),
        BlockKind::Jz => Ok(generator_block(Generator::Jz, total)),
        BlockKind::Evolution => blockwise_exponential(&jx_tridiagonal(total), angle),
        BlockKind::FrameRotation => jy_exponential(total, -FRAC_PI_2),
        BlockKind::FrameRotationInverse => jy_exponential(total, FRAC_PI_2),
    }
}

/// Block of `kind` at `angle` (ignored for generators and rotations), cached.
pub fn block(kind: BlockKind, angle: f64, total: u32) -> Result<Arc<CMatrix>, SchwingerError> {
    let angle = match kind {
        BlockKind::Evolution => angle,
        _ => 0.0,
    };
    let key = (kind, angle.to_bits(), total);
    if let Some(m) = BLOCK_CACHE.read().expect("cache lock").get(&key) {
        return Ok(Arc::clone(m));
    }
    // computed outside the lock; a concurrent duplicate computes the same matrix
    let m = Arc::new(compute_block(kind, angle, total)?);
    let mut cache = BLOCK_CACHE.write().expect("cache lock");
    if cache.len() >= CACHE_LIMIT {
        cache.clear();
    }
    Ok(Arc::clone(cache.entry(key).or_insert(m)))
}

/// Block-diagonal operator materialized up to a maximum photon number.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    pub kind: BlockKind,
    pub angle: f64,
    pub blocks: BTreeMap<u32, Arc<CMatrix>>,
}

impl BlockOperator {
    pub fn materialize(kind: BlockKind, angle: f64, max_block: u32) -> Result<Self, SchwingerError> {
        let blocks = (0..=max_block)
            .map(|n| block(kind, angle, n).map(|m| (n, m)))
            .collect::<Result<_, _>>()?;
        Ok(Self { kind, angle, blocks })
    }

    pub fn is_unitary_kind(&self) -> bool {
        matches!(
            self.kind,
            BlockKind::Evolution | BlockKind::FrameRotation | BlockKind::FrameRotationInverse
        )
    }
}

fn group_by_block(state: &TwoModeState) -> BTreeMap<u32, Vec<Complex64>> {
    let mut blocks: BTreeMap<u32, Vec<Complex64>> = BTreeMap::new();
    for (label, amp) in state.iter() {
        let total = label.energy();
        let (a, _) = label.to_modes();
        blocks
            .entry(total)
            .or_insert_with(|| vec![Complex64::default(); total as usize + 1])[a as usize] = amp;
    }
    blocks
}

fn overflow(state: &TwoModeState, block: u32) -> SchwingerError {
    SchwingerError::TruncationOverflow {
        block,
        n_max: state.n_max(),
        d_max: state.d_max(),
    }
}

/// Applies `kind` block by block. Unitaries need every touched block to fit
/// the window; generators only need their image to fit.
fn apply_blocks(kind: BlockKind, angle: f64, state: &TwoModeState) -> Result<TwoModeState, SchwingerError> {
    let unitary = matches!(
        kind,
        BlockKind::Evolution | BlockKind::FrameRotation | BlockKind::FrameRotationInverse
    );
    let mut out = TwoModeState::new(state.n_max(), state.d_max());
    for (total, vec) in group_by_block(state) {
        if unitary && !state.block_fits(total) {
            return Err(overflow(state, total));
        }
        let m = block(kind, angle, total)?;
        for (k, amp) in m.mul_vec(&vec).into_iter().enumerate() {
            if amp == Complex64::default() {
                continue;
            }
            let label = block_label(total, k as u32);
            if !out.contains(label) {
                return Err(overflow(state, total));
            }
            out.set(label, amp)?;
        }
    }
    Ok(out)
}

/// `J_k |state⟩` (not normalized).
pub fn apply_generator(g: Generator, state: &TwoModeState) -> Result<TwoModeState, SchwingerError> {
    apply_blocks(g.into(), 0.0, state)
}

/// `exp(−iJ_xψ) |state⟩`.
pub fn coupling_evolution(state: &TwoModeState, shift: ShiftParameter) -> Result<TwoModeState, SchwingerError> {
    state.check_normalized()?;
    apply_blocks(BlockKind::Evolution, shift.radians(), state)
}

/// Frame rotation taking the `J_x` shift onto a `J_z` shift, or its inverse.
///
/// The rotation is `exp(+i(π/2)J_y)`, the sign for which `𝒰 J_x 𝒰† = J_z`
/// holds with `J_y = (a†b − b†a)/(2i)`. With the opposite sign one gets
/// `𝒰 J_x 𝒰† = −J_z` instead.
pub fn rotate_to_z(state: &TwoModeState, inverse: bool) -> Result<TwoModeState, SchwingerError> {
    state.check_normalized()?;
    let kind = if inverse {
        BlockKind::FrameRotationInverse
    } else {
        BlockKind::FrameRotation
    };
    apply_blocks(kind, 0.0, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_photon_a() -> TwoModeState {
        TwoModeState::from_amplitudes(0, 1, [(BasisLabel::from_modes(1, 0), c(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn jz_scales_by_half_d() {
        let s = TwoModeState::from_amplitudes(3, 2, [(BasisLabel::new(3, 2), c(0.6, 0.8))]).unwrap();
        let out = apply_generator(Generator::Jz, &s).unwrap();
        assert_eq!(out.amplitude(BasisLabel::new(3, 2)), c(0.6, 0.8));

        let s0 = TwoModeState::from_amplitudes(2, 0, [(BasisLabel::new(2, 0), c(1.0, 0.0))]).unwrap();
        assert!(apply_generator(Generator::Jz, &s0).unwrap().is_empty());
    }

    #[test]
    fn jx_on_single_photon() {
        let out = apply_generator(Generator::Jx, &one_photon_a()).unwrap();
        // b†a|1,0⟩ = |0,1⟩, so J_x|1,0⟩ = |0,1⟩/2
        assert_eq!(out.len(), 1);
        assert_abs_diff_eq!(out.amplitude(BasisLabel::from_modes(0, 1)).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn generator_overflow() {
        // |1,1⟩ (n=1, d=0) with d_max = 0: J_x would create d = ±2
        let s = TwoModeState::from_amplitudes(1, 0, [(BasisLabel::new(1, 0), c(1.0, 0.0))]).unwrap();
        assert!(matches!(
            apply_generator(Generator::Jx, &s),
            Err(SchwingerError::TruncationOverflow { block: 2, .. })
        ));
        assert!(matches!(
            coupling_evolution(&s, ShiftParameter::new(0.3).unwrap()),
            Err(SchwingerError::TruncationOverflow { .. })
        ));
    }

    #[test]
    fn evolution_identity_and_swap() {
        let s = one_photon_a();
        let same = coupling_evolution(&s, ShiftParameter::new(0.0).unwrap()).unwrap();
        assert!(same.max_abs_diff(&s) < 1e-15);
        // exp(−iπσ_x/2) = −iσ_x
        let swapped = coupling_evolution(&s, ShiftParameter::new(PI).unwrap()).unwrap();
        let want = TwoModeState::from_amplitudes(0, 1, [(BasisLabel::from_modes(0, 1), c(0.0, -1.0))]).unwrap();
        assert!(swapped.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn single_photon_transmission_is_half_angle() {
        for &psi in &[0.1, 0.7, 1.3, 2.9] {
            let out = coupling_evolution(&one_photon_a(), ShiftParameter::new(psi).unwrap()).unwrap();
            let stay = out.amplitude(BasisLabel::from_modes(1, 0)).norm_sqr();
            let shift = ShiftParameter::new(psi).unwrap();
            assert_abs_diff_eq!(stay, shift.single_photon_transmission(), epsilon = 1e-14);
            assert_abs_diff_eq!(shift.transmittivity(), psi.cos().powi(2), epsilon = 1e-15);
        }
    }

    #[test]
    fn exponential_cases() {
        let zero = SymTridiagonal::new(vec![0.0; 3], vec![0.0; 2]).unwrap();
        let id = blockwise_exponential(&zero, 1.3).unwrap();
        assert!(id.max_abs_diff(&CMatrix::identity(3)) < 1e-15);

        let d = SymTridiagonal::new(vec![1.0, -2.0, 0.5], vec![0.0; 2]).unwrap();
        let e = blockwise_exponential(&d, 0.7).unwrap();
        for (i, l) in [1.0f64, -2.0, 0.5].iter().enumerate() {
            assert!((e[(i, i)] - Complex64::from_polar(1.0, -l * 0.7)).norm() < 1e-14);
        }

        // exp(−i(π/2)σ_x/2) = (I − iσ_x)/√2
        let u = blockwise_exponential(&jx_tridiagonal(1), PI / 2.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[(0, 0)] - c(h, 0.0)).norm() < 1e-15);
        assert!((u[(0, 1)] - c(0.0, -h)).norm() < 1e-15);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(u[(i, j)].norm(), h, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn frame_rotation_conjugation() {
        for total in 0..=8 {
            let u = block(BlockKind::FrameRotation, 0.0, total).unwrap();
            let jx = generator_block(Generator::Jx, total);
            let jz = generator_block(Generator::Jz, total);
            let ud = u.adjoint();
            assert!(u.matmul(&jx).matmul(&ud).max_abs_diff(&jz) < 1e-10, "block {total}");
            assert!(u.matmul(&jz).matmul(&ud).max_abs_diff(&jx.scaled(-1.0)) < 1e-10);
            assert!(u.unitarity_residual() < 1e-10);
        }
    }

    #[test]
    fn jy_exponential_matches_generator() {
        // derivative of exp(−iθJ_y) at θ = 0 recovers −iJ_y
        let total = 5;
        let h = 1e-6;
        let plus = jy_exponential(total, h).unwrap();
        let minus = jy_exponential(total, -h).unwrap();
        let jy = generator_block(Generator::Jy, total);
        let dim = total as usize + 1;
        for i in 0..dim {
            for j in 0..dim {
                let deriv = (plus[(i, j)] - minus[(i, j)]) / (2.0 * h);
                assert!((deriv - c(0.0, -1.0) * jy[(i, j)]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn vacuum_is_rotation_invariant() {
        let v = TwoModeState::vacuum();
        let r = rotate_to_z(&v, false).unwrap();
        assert!(r.max_abs_diff(&v) < 1e-15);
        let back = rotate_to_z(&r, true).unwrap();
        assert!(back.max_abs_diff(&v) < 1e-15);
    }

    #[test]
    fn generator_blocks_are_hermitian() {
        for total in 0..=10 {
            for g in [Generator::Jx, Generator::Jy, Generator::Jz] {
                assert!(generator_block(g, total).hermiticity_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_shift_rejected() {
        assert!(ShiftParameter::new(f64::INFINITY).is_err());
    }
}
