//! Bessel function of the first kind. Verification use only; accuracy is
//! about 1e-10 relative over the tested range.

use std::f64::consts::PI;

use super::gamma::ln_gamma;
use crate::error::{Error, Result};

/// Switch from the ascending series to the Hankel expansion.
const SERIES_LIMIT: f64 = 12.0;

/// J_q(x) for q ≥ 0, x ≥ 0.
pub fn bessel_j(q: f64, x: f64) -> Result<f64> {
    if !(q >= 0.0) || !(x >= 0.0) || !q.is_finite() || !x.is_finite() {
        return Err(Error::domain("bessel_j", format!("q = {q}, x = {x}")));
    }
    Ok(bessel_j_unchecked(q, x))
}

/// J_q(x) for any order q > −1 and x ≥ 0.
pub(crate) fn bessel_j_unchecked(q: f64, x: f64) -> f64 {
    if x < SERIES_LIMIT {
        series(q, x)
    } else {
        hankel(q, x)
    }
}

fn series(q: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if q == 0.0 {
            1.0
        } else if q > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let half = 0.5 * x;
    let mut term = (q * half.ln() - ln_gamma(q + 1.0).expect("q > -1")).exp();
    let mut sum = term;
    let h2 = half * half;
    for k in 1..500 {
        let k = k as f64;
        term *= -h2 / (k * (k + q));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() && k > half {
            break;
        }
    }
    sum
}

fn hankel(q: f64, x: f64) -> f64 {
    let mu = 4.0 * q * q;
    let mut p = 1.0;
    let mut qq = 0.0;
    let mut a: f64 = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = a * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() > a.abs() {
            break;
        }
        a = next;
        // a_k contributes to Q for odd k and to P for even k, with
        // alternating signs inside each.
        match k % 4 {
            1 => qq += a,
            2 => p -= a,
            3 => qq -= a,
            _ => p += a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * q + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - qq * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_at_zero() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(2.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_order_closed_forms() {
        for i in 1..120 {
            let x = 0.25 * i as f64;
            let j = bessel_j(0.5, x).unwrap();
            let expected = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((j - expected).abs() < 1e-10, "x = {x}: {j} vs {expected}");
            let jm = bessel_j_unchecked(-0.5, x);
            let expected = (2.0 / (PI * x)).sqrt() * x.cos();
            assert!((jm - expected).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn tabulated_values() {
        // Abramowitz & Stegun tables
        assert!((bessel_j(1.0, 1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-12);
        assert!((bessel_j(0.0, 5.0).unwrap() - -0.177_596_771_314_338_3).abs() < 1e-12);
        assert!((bessel_j(0.0, 20.0).unwrap() - 0.167_024_664_340_583_1).abs() < 1e-10);
        assert!((bessel_j(1.0, 15.0).unwrap() - 0.205_104_038_613_522_8).abs() < 1e-10);
    }

    #[test]
    fn branches_meet() {
        for &q in &[0.0, 0.5, 1.0, 1.5, 2.5] {
            let a = series(q, SERIES_LIMIT);
            let b = hankel(q, SERIES_LIMIT);
            assert!((a - b).abs() < 1e-10, "q = {q}: {a} vs {b}");
        }
    }

    #[test]
    fn domain() {
        assert!(bessel_j(-0.5, 1.0).is_err());
        assert!(bessel_j(1.0, -1.0).is_err());
    }
}
