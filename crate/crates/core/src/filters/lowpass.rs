//! The closed form |m0(ξ)|² = cos^{2K}(πξ) Σ_{n<L} C(K−1+n, n) sin^{2n}(πξ).

use crate::{Error, Result};

/// Parameter mode: strict enforces L ≥ 10 and 3L/2 ≤ K ≤ 3L−2; relaxed accepts any K, L ≥ 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ParamMode {
    #[default]
    Strict,
    Relaxed,
}

pub fn check_params(k: usize, l: usize, mode: ParamMode) -> Result<()> {
    if k == 0 || l == 0 {
        return Err(Error::Constraint(format!("K={k}, L={l}: both must be at least 1")));
    }
    if mode == ParamMode::Strict {
        if l < 10 {
            return Err(Error::Constraint(format!("L={l} < 10")));
        }
        // 3L/2 ≤ K  ⇔  3L ≤ 2K
        if 3 * l > 2 * k || k + 2 > 3 * l {
            return Err(Error::Constraint(format!(
                "K={k} outside [3L/2, 3L−2] = [{}, {}] for L={l}",
                3.0 * l as f64 / 2.0,
                3 * l - 2
            )));
        }
    }
    if k + l > 90 {
        // keeps the integer binomial path far from u128 overflow
        return Err(Error::Constraint(format!("K+L={} too large (max 90)", k + l)));
    }
    Ok(())
}

/// Coefficients C(K−1+n, n), n = 0..L, as exact integers.
pub fn binomial_coefficients(k: usize, l: usize) -> Vec<u128> {
    let mut out = Vec::with_capacity(l);
    let mut b: u128 = 1;
    for n in 0..l {
        if n > 0 {
            b = b * (k - 1 + n) as u128 / n as u128;
        }
        out.push(b);
    }
    out
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Compensated Horner evaluation of Σ coeffs[n] xⁿ (about twice working precision).
pub fn compensated_horner(coeffs: &[f64], x: f64) -> f64 {
    let Some((&last, rest)) = coeffs.split_last() else { return 0.0 };
    let mut r = last;
    let mut c: f64 = 0.0;
    for &a in rest.iter().rev() {
        let (p, pi) = two_prod(r, x);
        let (s, sigma) = two_sum(p, a);
        r = s;
        c = c.mul_add(x, pi + sigma);
    }
    r + c
}

/// Σ_{n<L} C(K−1+n, n) yⁿ — the sine-series factor, as a polynomial in y = sin²(πξ).
pub fn sine_series(k: usize, l: usize, y: f64) -> f64 {
    let coeffs: Vec<f64> = binomial_coefficients(k, l).into_iter().map(|b| b as f64).collect();
    compensated_horner(&coeffs, y)
}

/// |m0(ξ)|² in strict mode.
pub fn squared_lowpass_magnitude(k: usize, l: usize, xi: f64) -> Result<f64> {
    squared_lowpass_magnitude_mode(k, l, xi, ParamMode::Strict)
}

pub fn squared_lowpass_magnitude_mode(k: usize, l: usize, xi: f64, mode: ParamMode) -> Result<f64> {
    check_params(k, l, mode)?;
    Ok(squared_lowpass_unchecked(k, l, xi))
}

pub(crate) fn squared_lowpass_unchecked(k: usize, l: usize, xi: f64) -> f64 {
    let (s, c) = (std::f64::consts::PI * xi).sin_cos();
    let y = s * s;
    (c * c).powi(k as i32) * sine_series(k, l, y)
}
