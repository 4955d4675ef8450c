//! Symmetric tridiagonal eigensolver.
//!
//! Eigenvalues come from bisection on Sturm counts, eigenvectors from inverse
//! iteration with a pivoted tridiagonal LU. Eigenvalues that sit close
//! together are re-orthogonalized against each other while iterating.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("matrix has {dim} rows but {offdiag} off-diagonal entries")]
    Shape { dim: usize, offdiag: usize },
    #[error("matrix must have at least one row")]
    Empty,
    #[error("requested {requested} eigenpairs from a {dim}x{dim} matrix")]
    TooMany { requested: usize, dim: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("inverse iteration did not converge for eigenvalue {index} (residual {residual:e})")]
    Convergence { index: usize, residual: f64 },
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self, EigenError> {
        if diag.is_empty() {
            return Err(EigenError::Empty);
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(EigenError::Shape {
                dim: diag.len(),
                offdiag: offdiag.len(),
            });
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(EigenError::NonFinite);
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.offdiag[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// `‖Tx − λx‖₂`.
    pub fn residual(&self, lambda: f64, x: &[f64]) -> f64 {
        self.mul_vec(x)
            .iter()
            .zip(x)
            .map(|(tx, xi)| (tx - lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn rayleigh_quotient(&self, x: &[f64]) -> f64 {
        let tx = self.mul_vec(x);
        let num: f64 = tx.iter().zip(x).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|v| v * v).sum();
        num / den
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    fn pivot_min(&self) -> f64 {
        let emax = self.offdiag.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let pivmin = self.pivot_min();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let e = self.offdiag[i - 1];
            q = (self.diag[i] - x) - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * self.norm_bound().max(1.0) * 4.0;
        lo -= pad;
        hi += pad;
        let atol = 2.0 * f64::MIN_POSITIVE;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= atol + 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) || mid == lo || mid == hi {
                break;
            }
            if self.sturm_count(mid) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `k` lowest eigenpairs in ascending order with unit eigenvectors.
    ///
    /// The largest-magnitude entry of each eigenvector is made positive. When
    /// every off-diagonal entry is negative the ground vector is entrywise
    /// non-negative.
    pub fn eigen_lowest(&self, k: usize) -> Result<Vec<(f64, Vec<f64>)>, EigenError> {
        if k > self.dim() {
            return Err(EigenError::TooMany {
                requested: k,
                dim: self.dim(),
            });
        }
        let values: Vec<f64> = (0..k).map(|i| self.eigenvalue(i)).collect();
        self.eigenvectors(&values)
    }

    /// Every eigenpair, ascending.
    pub fn eigen_all(&self) -> Result<Vec<(f64, Vec<f64>)>, EigenError> {
        self.eigen_lowest(self.dim())
    }

    fn eigenvectors(&self, values: &[f64]) -> Result<Vec<(f64, Vec<f64>)>, EigenError> {
        let n = self.dim();
        if n == 1 {
            return Ok(vec![(self.diag[0], vec![1.0])]);
        }
        let norm = self.norm_bound().max(f64::MIN_POSITIVE);
        let cluster_tol = 1e-3 * norm;
        let perron = self.offdiag.iter().all(|e| *e < 0.0);
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;

        for (idx, &lambda) in values.iter().enumerate() {
            if idx > 0 && lambda - values[idx - 1] > cluster_tol {
                cluster_start = idx;
            }
            // separate coincident shifts so every factorization differs
            let mut shift = lambda;
            if idx > cluster_start {
                let prev = values[idx - 1];
                if shift - prev < 10.0 * f64::EPSILON * norm {
                    shift = prev + 10.0 * f64::EPSILON * norm;
                }
            }
            let lu = TridiagLu::factor(self, shift, norm);
            let mut x = start_vector(n, idx as u64);
            let mut converged_at = None;
            let tol = 1e-10 * (1.0 + lambda.abs());
            let mut residual = f64::INFINITY;
            for iter in 0..12 {
                lu.solve(&mut x);
                for (_, prev) in &out[cluster_start..] {
                    let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                    x.iter_mut().zip(prev).for_each(|(xi, pi)| *xi -= dot * pi);
                }
                normalize(&mut x);
                residual = self.residual(lambda, &x);
                if residual <= tol {
                    match converged_at {
                        None => converged_at = Some(iter),
                        // one extra sweep after convergence cleans the direction
                        Some(_) => break,
                    }
                }
            }
            if converged_at.is_none() {
                return Err(EigenError::Convergence { index: idx, residual });
            }
            fix_sign(&mut x);
            if idx == 0 && perron {
                x.iter_mut().for_each(|v| *v = v.abs());
            }
            out.push((lambda, x));
        }
        Ok(out)
    }
}

fn normalize(x: &mut [f64]) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return;
    }
    x.iter_mut().for_each(|v| *v /= scale);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

fn fix_sign(x: &mut [f64]) {
    let lead = x
        .iter()
        .copied()
        .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
    if lead < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Deterministic, non-symmetric starting vector (splitmix64 stream).
fn start_vector(n: usize, salt: u64) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            0.5 + (z >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// LU factorization with partial pivoting of `T − σI`.
struct TridiagLu {
    // upper factor: main, first and second superdiagonals
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &SymTridiagonal, shift: f64, norm: f64) -> Self {
        let n = t.dim();
        let tiny = f64::EPSILON * norm;
        let mut u0: Vec<f64> = t.diag.iter().map(|d| d - shift).collect();
        let mut u1: Vec<f64> = t.offdiag.clone();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        for i in 0..n - 1 {
            let sub = t.offdiag[i];
            if u0[i].abs() >= sub.abs() {
                if u0[i] == 0.0 {
                    u0[i] = tiny;
                }
                let l = sub / u0[i];
                mult[i] = l;
                u0[i + 1] -= l * u1[i];
            } else {
                // swap rows i and i+1
                let l = u0[i] / sub;
                mult[i] = l;
                swapped[i] = true;
                let c_i = u1[i];
                let (b_n, c_n) = (u0[i + 1], u1[i + 1]);
                u0[i] = sub;
                u1[i] = b_n;
                u2[i] = c_n;
                u0[i + 1] = c_i - l * b_n;
                u1[i + 1] = -l * c_n;
            }
        }
        if u0[n - 1] == 0.0 {
            u0[n - 1] = tiny;
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                x.swap(i, i + 1);
                x[i + 1] -= self.mult[i] * x[i];
            } else {
                x[i + 1] -= self.mult[i] * x[i];
            }
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            if i + 1 < n {
                v -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                v -= self.u2[i] * x[i + 2];
            }
            x[i] = v / self.u0[i];
        }
        // keep magnitudes in range between sweeps
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 1e100 {
            x.iter_mut().for_each(|v| *v /= scale);
        }
    }
}
