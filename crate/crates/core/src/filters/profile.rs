//! Fast evaluators for m0, φ̂ and the 1D factors of the separable generators.
//!
//! m0 is tabulated over one period and φ̂ over [0, PHI_TABLE_MAX]; both tables
//! store demodulated values (the linear phase of the taps' centre of mass is
//! removed) so that six-point Lagrange interpolation stays accurate to ~1e−11.
//! Beyond the table range φ̂ is continued exactly through the refinement
//! relation. Exact evaluators (Horner products) are kept for checks.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::factor::FilterPair;
use super::interp::UniformTable;
use super::lowpass::sine_series;

pub const DEFAULT_J_TRUNC: u32 = 30;
const M0_TABLE_LEN: usize = 1 << 16;
const PHI_TABLE_STEP: f64 = 1.0 / 4096.0;
pub const PHI_TABLE_MAX: f64 = 64.0;

#[derive(Debug)]
pub struct CompactProfile {
    pub pair: FilterPair,
    pub j_trunc: u32,
    shift: f64,
    t0: f64,
    m0_table: UniformTable,
    phi_table: UniformTable,
}

/// Exact truncated product φ̂_J(ξ) = Π_{j<J} Ĥ0(2^{−j}ξ). The omitted factors are
/// e^{−2πi·centroid·2^{−J+1}ξ}(1 + O(2^{−2KJ})): the modulus converges much faster
/// than the phase.
pub fn scaling_spectrum(pair: &FilterPair, xi: f64, j_trunc: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut x = xi;
    for _ in 0..j_trunc {
        acc *= pair.m0(x);
        x *= 0.5;
    }
    acc
}

/// |m0(y)| from the closed form — accurate near the K-fold zero where Horner is not.
pub fn m0_abs_closed(pair: &FilterPair, y: f64) -> f64 {
    let (s, c) = (PI * y).sin_cos();
    (c * c).powi(pair.k as i32).sqrt() * sine_series(pair.k, pair.l, s * s).sqrt()
}

/// |φ̂_J(ξ)| from closed-form factor magnitudes.
pub fn scaling_abs_closed(pair: &FilterPair, xi: f64, j_trunc: u32) -> f64 {
    let mut acc = 1.0;
    let mut x = xi;
    for _ in 0..j_trunc {
        acc *= m0_abs_closed(pair, x);
        x *= 0.5;
    }
    acc
}

impl CompactProfile {
    /// Shared, lazily built profile for a filter pair (tables cost a fraction of a second).
    pub fn shared(pair: &FilterPair, j_trunc: u32) -> Arc<CompactProfile> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize, u32), Vec<Arc<CompactProfile>>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (pair.k, pair.l, j_trunc);
        if let Some(list) = cache.lock().unwrap().get(&key) {
            if let Some(p) = list.iter().find(|p| p.pair.h0 == pair.h0) {
                return p.clone();
            }
        }
        let built = Arc::new(Self::build(pair.clone(), j_trunc));
        cache.lock().unwrap().entry(key).or_default().push(built.clone());
        built
    }

    pub fn build(pair: FilterPair, j_trunc: u32) -> Self {
        let shift = pair.centroid().round();
        let n = M0_TABLE_LEN;
        let m0_vals = (0..n)
            .map(|i| {
                let y = i as f64 / n as f64;
                pair.m0(y) * Complex64::from_polar(1.0, 2.0 * PI * y * shift)
            })
            .collect();
        let m0_table = UniformTable::new(0.0, 1.0 / n as f64, true, m0_vals);
        let t0 = shift * (2.0 - 2f64.powi(1 - j_trunc as i32));

        let h = PHI_TABLE_STEP;
        let pad = 3usize;
        let count = (PHI_TABLE_MAX / h).round() as usize + 2 * pad + 1;
        let x0 = -(pad as f64) * h;
        let phi_vals = (0..count)
            .map(|i| {
                let x = x0 + i as f64 * h;
                let mut acc = Complex64::new(1.0, 0.0);
                let mut y = x;
                for _ in 0..j_trunc {
                    acc *= m0_table.eval(y).unwrap();
                    y *= 0.5;
                }
                acc
            })
            .collect();
        let phi_table = UniformTable::new(x0, h, false, phi_vals);
        Self { pair, j_trunc, shift, t0, m0_table, phi_table }
    }

    #[inline]
    pub fn m0(&self, y: f64) -> Complex64 {
        self.m0_table.eval(y).unwrap() * Complex64::from_polar(1.0, -2.0 * PI * y * self.shift)
    }

    #[inline]
    pub fn m1(&self, y: f64) -> Complex64 {
        self.m0(y + 0.5)
    }

    #[inline]
    fn phi_demod_nonneg(&self, x: f64) -> Option<Complex64> {
        if x <= PHI_TABLE_MAX {
            self.phi_table.eval(x)
        } else {
            None
        }
    }

    /// φ̂_J(ξ) via tables.
    pub fn phi(&self, xi: f64) -> Complex64 {
        if xi < 0.0 {
            return self.phi(-xi).conj();
        }
        if let Some(v) = self.phi_demod_nonneg(xi) {
            return v * Complex64::from_polar(1.0, -2.0 * PI * xi * self.t0);
        }
        // φ̂_J(x) = Π_{j<q} m0(2^{−j}x) · φ̂_J(2^{−q}x) / Π_{j=J}^{J+q−1} m0(2^{−j}x)
        let mut q: u32 = 0;
        let mut x = xi;
        while x > PHI_TABLE_MAX {
            x *= 0.5;
            q += 1;
        }
        let mut acc = self.phi(x);
        for j in 0..q {
            acc *= self.m0(xi * 2f64.powi(-(j as i32)));
        }
        for j in self.j_trunc..self.j_trunc + q {
            acc /= self.m0(xi * 2f64.powi(-(j as i32)));
        }
        acc
    }

    /// |φ̂_J(ξ)| via tables (no phase evaluation).
    pub fn phi_abs(&self, xi: f64) -> f64 {
        let x = xi.abs();
        match self.phi_demod_nonneg(x) {
            Some(v) => v.norm(),
            None => self.phi(x).norm(),
        }
    }

    /// Wavelet factor w(x) = m1(4x)·φ̂(x).
    pub fn wavelet(&self, x: f64) -> Complex64 {
        self.m1(4.0 * x) * self.phi(x)
    }

    pub fn wavelet_abs(&self, x: f64) -> f64 {
        self.m0_table.eval(4.0 * x + 0.5).unwrap().norm() * self.phi_abs(x)
    }

    /// Bump factor b(y) = φ̂(2y).
    pub fn bump(&self, y: f64) -> Complex64 {
        self.phi(2.0 * y)
    }

    pub fn bump_abs(&self, y: f64) -> f64 {
        self.phi_abs(2.0 * y)
    }

    /// Exact (Horner) counterparts.
    pub fn phi_exact(&self, xi: f64) -> Complex64 {
        scaling_spectrum(&self.pair, xi, self.j_trunc)
    }

    pub fn wavelet_exact(&self, x: f64) -> Complex64 {
        self.pair.m1(4.0 * x) * self.phi_exact(x)
    }

    /// Spatial support of φ (taps 0..D, refinement by 2 starting at j = 0): [0, 2D].
    pub fn phi_support(&self) -> (f64, f64) {
        (0.0, 2.0 * (self.pair.h0.len() - 1) as f64)
    }
}
