//! Confluent hypergeometric function of the first kind, ₁F₁(a; b; x).

use super::gamma::gamma;
use crate::error::{Error, Result};

const MAX_TERMS: usize = 100_000;
const EPS: f64 = 1e-17;
/// Beyond this positive argument the power series is replaced by the
/// large-argument expansion.
const ASYMPTOTIC_FROM: f64 = 300.0;

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v == v.floor()
}

/// ₁F₁(a; b; x).
///
/// Negative arguments go through Kummer's transformation
/// ₁F₁(a; b; −x) = e^{−x} ₁F₁(b − a; b; x) so that only series with a
/// positive argument are ever summed.
pub fn hyp1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() || x.is_nan() {
        return Err(Error::domain("hyp1f1", "non-finite argument"));
    }
    if is_nonpositive_integer(b) {
        return Err(Error::domain("hyp1f1", format!("b = {b} is a non-positive integer")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if a == b {
        return Ok(x.exp());
    }
    if is_nonpositive_integer(a) {
        return Ok(polynomial(a, b, x));
    }
    if x > 0.0 {
        let (value, shift) = positive(a, b, x)?;
        Ok(value * shift.exp())
    } else {
        let c = b - a;
        if is_nonpositive_integer(c) {
            return Ok(x.exp() * polynomial(c, b, -x));
        }
        let (value, shift) = positive(c, b, -x)?;
        Ok(value * (shift + x).exp())
    }
}

/// Terminating series for a non-positive integer `a`.
fn polynomial(a: f64, b: f64, x: f64) -> f64 {
    let n = (-a) as usize;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n {
        let k = k as f64;
        term *= (a + k) / (b + k) * x / (k + 1.0);
        sum += term;
    }
    sum
}

/// ₁F₁(a; b; x) for x > 0 as `value · e^{shift}`.
fn positive(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    if x > ASYMPTOTIC_FROM {
        if let Some(r) = asymptotic(a, b, x)? {
            return Ok(r);
        }
    }
    series(a, b, x).map(|v| (v, 0.0))
}

fn series(a: f64, b: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let ratio = (a + kf) / (b + kf) * x / (kf + 1.0);
        term *= ratio;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Only stop once the terms are shrinking for good.
        if ratio.abs() < 1.0 && term.abs() <= EPS * sum.abs() {
            return Ok(sum);
        }
        if !sum.is_finite() {
            break;
        }
    }
    Err(Error::Convergence {
        method: "hyp1f1 power series",
        iterations: MAX_TERMS,
        achieved: term.abs() / sum.abs(),
    })
}

/// Large-x expansion ₁F₁ ≈ Γ(b)/Γ(a) e^x x^{a−b} Σ (b−a)_k (1−a)_k / (k! x^k).
/// Returns `None` if the divergent tail is reached before the tolerance.
fn asymptotic(a: f64, b: f64, x: f64) -> Result<Option<(f64, f64)>> {
    let mut term: f64 = 1.0;
    let mut sum = 1.0;
    let mut converged = false;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let next = term * (b - a + kf) * (1.0 - a + kf) / ((kf + 1.0) * x);
        if next.abs() > term.abs() && k > 0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Ok(None);
    }
    let prefactor = gamma(b)? / gamma(a)?;
    Ok(Some((prefactor * sum * x.powf(a - b), x)))
}
