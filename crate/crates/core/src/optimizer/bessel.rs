//! Bessel functions of the first kind for real, non-negative order.
//!
//! Small arguments use the ascending series with log-gamma prefactors. Larger
//! arguments use Miller's backward recurrence normalized by the Neumann sum
//! `(x/2)^α = Σ_k (α + 2k) Γ(α + k) / k! · J_{α+2k}(x)`, `α ∈ [0, 1)`.

use statrs::function::gamma::ln_gamma;
use thiserror::Error;

pub const MAX_ORDER: f64 = 1e4;
pub const MAX_ARG: f64 = 1e3;

#[derive(Debug, Error, PartialEq)]
pub enum BesselError {
    #[error("J_nu(x) requested outside the validated domain: nu = {nu}, x = {x}")]
    Domain { nu: f64, x: f64 },
}

/// `J_ν(x)` for `0 ≤ ν ≤ 10⁴`, `0 ≤ x ≤ 10³`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64, BesselError> {
    if !(nu.is_finite() && x.is_finite()) || nu < 0.0 || x < 0.0 || nu > MAX_ORDER || x > MAX_ARG {
        return Err(BesselError::Domain { nu, x });
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x < 10f64.max(0.5 * nu) {
        Ok(series(nu, x))
    } else {
        Ok(miller(nu, x))
    }
}

fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let log_lead = nu * half.ln() - ln_gamma(nu + 1.0);
    if log_lead < -745.0 {
        return 0.0;
    }
    let q = half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (k + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 500.0 {
            break;
        }
    }
    sum * log_lead.exp()
}

fn miller(nu: f64, x: f64) -> f64 {
    let alpha = nu.fract();
    let target = nu.trunc() as usize;
    let scale = nu.max(x);
    let start = scale.ceil() as usize + 40 + (3.0 * scale.sqrt()).ceil() as usize;

    // backward recurrence J_{k-1} = 2(α+k)/x · J_k − J_{k+1}
    let mut next = 0.0; // J_{start+1}
    let mut cur = 1e-300; // J_{start}
    let mut at_target = if start == target { cur } else { 0.0 };
    let mut norm = neumann_weight(alpha, start) * cur;
    for k in (1..=start).rev() {
        let prev = 2.0 * (alpha + k as f64) / x * cur - next;
        next = cur;
        cur = prev;
        let order = k - 1;
        if order == target {
            at_target = cur;
        }
        norm += neumann_weight(alpha, order) * cur;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            at_target *= s;
            norm *= s;
        }
    }
    let lead = if alpha == 0.0 {
        1.0
    } else {
        (alpha * (0.5 * x).ln()).exp()
    };
    lead * at_target / norm
}

/// Coefficient of `J_{α+m}` in the Neumann sum; zero for odd `m`.
fn neumann_weight(alpha: f64, m: usize) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let k = (m / 2) as f64;
    if m == 0 {
        return (ln_gamma(alpha + 1.0)).exp();
    }
    (alpha + 2.0 * k) * (ln_gamma(alpha + k) - ln_gamma(k + 1.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn j0_at_zero() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(2.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_order_closed_form() {
        let want = (2.0 / PI).sqrt() * 1f64.sin();
        let got = bessel_j(0.5, 1.0).unwrap();
        assert!(rel(got, want) < 1e-13, "{got} vs {want}");
        assert!(rel(got, 0.671_396_707_141_803_9) < 1e-14);
    }

    #[test]
    fn half_integer_orders_at_large_argument() {
        for &x in &[12.3, 47.0, 250.5, 999.0] {
            let j_half = (2.0 / (PI * x)).sqrt() * x.sin();
            let j_3half = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            let a = bessel_j(0.5, x).unwrap();
            let b = bessel_j(1.5, x).unwrap();
            assert!(
                (a - j_half).abs() < 1e-12 * (1.0 + j_half.abs()),
                "x={x}: {a} vs {j_half}"
            );
            assert!(
                (b - j_3half).abs() < 1e-12 * (1.0 + j_3half.abs()),
                "x={x}: {b} vs {j_3half}"
            );
        }
    }

    #[test]
    fn recursion_identity() {
        let (nu, x) = (2.7, 5.3);
        let lhs = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap();
        let rhs = 2.0 * nu / x * bessel_j(nu, x).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn series_and_miller_agree_in_overlap() {
        for &nu in &[0.0, 0.3, 1.0, 4.75, 17.2, 30.0] {
            for &x in &[10.5, 12.0, 14.0] {
                let s = series(nu, x);
                let m = miller(nu, x);
                assert!((s - m).abs() < 1e-10 * s.abs().max(1e-3), "nu={nu} x={x}: {s} vs {m}");
            }
        }
    }

    #[test]
    fn integer_order_reference_values() {
        // reference values from scipy.special.jv
        assert!(rel(bessel_j(0.0, 1.0).unwrap(), 0.765_197_686_557_966_6) < 1e-14);
        assert!(rel(bessel_j(1.0, 10.0).unwrap(), 0.043_472_746_168_861_44) < 1e-10);
        assert!(rel(bessel_j(0.0, 10.0).unwrap(), -0.245_935_764_451_348_3) < 1e-12);
    }

    #[test]
    fn large_order_small_argument_underflows_cleanly() {
        let v = bessel_j(9_000.0, 1.0).unwrap();
        assert_eq!(v, 0.0);
        let w = bessel_j(60.0, 40.0).unwrap();
        assert!(rel(w, 1.309_267_138_298_205e-7) < 1e-10);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(-0.5, 1.0).is_err());
        assert!(bessel_j(1.0, -1.0).is_err());
        assert!(bessel_j(2e4, 1.0).is_err());
        assert!(bessel_j(1.0, 2e3).is_err());
        assert!(bessel_j(f64::NAN, 1.0).is_err());
    }
}
