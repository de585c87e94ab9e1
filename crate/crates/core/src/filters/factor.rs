//! Fejér–Riesz factorisation of |m0|² into a real minimum-phase FIR low-pass.
//!
//! Roots are found in y = sin²(πξ) rather than in z: the sine series P(y) has
//! degree L−1 only, and every root y_i maps to a reciprocal pair {r, 1/r} of
//! z² − (2 − 4y_i)z + 1. Keeping the root inside the unit circle gives the
//! minimum-phase half; the cosine factor contributes the K-fold zero at z = −1.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::lowpass::{binomial_coefficients, check_params, squared_lowpass_unchecked, ParamMode};
use crate::{Error, Result};

/// Real FIR pair: h0 low-pass, h1[n] = (−1)ⁿ h0[n] so that Ĥ1(ξ) = Ĥ0(ξ + 1/2).
#[derive(Clone, Debug, PartialEq)]
pub struct FilterPair {
    pub k: usize,
    pub l: usize,
    pub mode: ParamMode,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    /// Max |·| deviation of |Ĥ0|² from the closed form on the 4096-point check grid.
    pub residual: f64,
}

/// Grid used by the factorisation self-check.
pub const CHECK_GRID: usize = 4096;
/// Accepted max deviation of |Ĥ0|² from the closed form.
pub const FACTOR_TOL: f64 = 1e-8;

pub fn spectral_factorize(k: usize, l: usize) -> Result<FilterPair> {
    spectral_factorize_mode(k, l, ParamMode::Strict)
}

pub fn spectral_factorize_mode(k: usize, l: usize, mode: ParamMode) -> Result<FilterPair> {
    check_params(k, l, mode)?;
    let ys = sine_series_roots(k, l)?;

    // Q(w) = Π (1 − r_i w) / (1 − r_i), built in complex arithmetic.
    let mut q = vec![Complex64::new(1.0, 0.0)];
    for y in &ys {
        let b = Complex64::new(1.0, 0.0) - 2.0 * y;
        let disc = (b * b - 1.0).sqrt();
        let (z1, z2) = (b + disc, b - disc);
        let r = if z1.norm() < z2.norm() { z1 } else { z2 };
        let scale = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) - r);
        let mut next = vec![Complex64::new(0.0, 0.0); q.len() + 1];
        for (i, &c) in q.iter().enumerate() {
            next[i] += c * scale;
            next[i + 1] -= c * r * scale;
        }
        q = next;
    }

    // ((1 + w)/2)^K
    let mut h: Vec<f64> = q.iter().map(|c| c.re).collect();
    for _ in 0..k {
        let mut next = vec![0.0; h.len() + 1];
        for (i, &c) in h.iter().enumerate() {
            next[i] += 0.5 * c;
            next[i + 1] += 0.5 * c;
        }
        h = next;
    }
    let dc: f64 = h.iter().sum();
    for v in &mut h {
        *v /= dc;
    }

    let residual = (0..CHECK_GRID)
        .map(|i| {
            let xi = i as f64 / CHECK_GRID as f64 - 0.5;
            (lowpass_response(&h, xi).norm_sqr() - squared_lowpass_unchecked(k, l, xi)).abs()
        })
        .fold(0.0, f64::max);
    if !(residual < FACTOR_TOL) {
        return Err(Error::Factorization {
            message: format!("|Ĥ0|² deviates from the closed form for K={k}, L={l}"),
            residual,
        });
    }
    let h1 = h
        .iter()
        .enumerate()
        .map(|(n, &v)| if n % 2 == 0 { v } else { -v })
        .collect();
    Ok(FilterPair { k, l, mode, h0: h, h1, residual })
}

/// Ĥ(ξ) = Σ h[n] e^{−2πinξ}.
pub fn lowpass_response(h: &[f64], xi: f64) -> Complex64 {
    let z = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * xi);
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in h.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

impl FilterPair {
    /// m0(ξ) = Ĥ0(ξ).
    pub fn m0(&self, xi: f64) -> Complex64 {
        lowpass_response(&self.h0, xi)
    }

    /// m1(ξ) = Ĥ1(ξ) = m0(ξ + 1/2).
    pub fn m1(&self, xi: f64) -> Complex64 {
        lowpass_response(&self.h1, xi)
    }

    /// Σ n h0[n]: the centre of mass of the low-pass taps.
    pub fn centroid(&self) -> f64 {
        self.h0.iter().enumerate().map(|(n, &v)| n as f64 * v).sum()
    }

    /// Roots of the z-polynomial z^D Ĥ0 with z = e^{2πiξ}, i.e. of Σ h0[n] z^{D−n}.
    pub fn zeros(&self) -> Vec<Complex64> {
        let d = self.h0.len() - 1;
        let lead = self.h0[0];
        let mut m = DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            // monic: z^D + Σ_{n≥1} (h[n]/h[0]) z^{D−n}
            m[(0, i)] = -self.h0[i + 1] / lead;
        }
        m.complex_eigenvalues().iter().copied().collect()
    }
}

/// Roots of P(y) = Σ_{n<L} C(K−1+n, n) yⁿ by companion eigenvalues plus Newton polishing.
fn sine_series_roots(k: usize, l: usize) -> Result<Vec<Complex64>> {
    let deg = l - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let b: Vec<f64> = binomial_coefficients(k, l).into_iter().map(|v| v as f64).collect();
    let lead = b[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -b[i] / lead;
    }
    let mut roots: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();

    let eval = |y: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in b.iter().rev() {
            dp = dp * y + p;
            p = p * y + c;
        }
        (p, dp)
    };
    let mut worst: f64 = 0.0;
    for r in &mut roots {
        for _ in 0..50 {
            let (p, dp) = eval(*r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *r -= step;
            if step.norm() <= 1e-15 * r.norm().max(1e-300) {
                break;
            }
        }
        let (p, _) = eval(*r);
        let scale: f64 = b.iter().enumerate().map(|(n, c)| c * r.norm().powi(n as i32)).sum();
        worst = worst.max(p.norm() / scale);
    }
    if !(worst < 1e-10) {
        return Err(Error::Factorization {
            message: format!("sine-series roots did not converge for K={k}, L={l}"),
            residual: worst,
        });
    }
    // Pair conjugates exactly so the product stays real.
    for r in &mut roots {
        if r.im.abs() < 1e-12 * r.norm() {
            r.im = 0.0;
        }
    }
    Ok(roots)
}
