//! Six-point Lagrange interpolation on uniform grids.

use num_complex::Complex64;

/// Weights for nodes at offsets −2..=3 around the cell containing fractional position `u ∈ [0,1)`.
#[inline]
pub fn lagrange6(u: f64) -> [f64; 6] {
    let d = [u + 2.0, u + 1.0, u, u - 1.0, u - 2.0, u - 3.0];
    let mut pre = [1.0; 6];
    for i in 1..6 {
        pre[i] = pre[i - 1] * d[i - 1];
    }
    let mut suf = [1.0; 6];
    for i in (0..5).rev() {
        suf[i] = suf[i + 1] * d[i + 1];
    }
    const DEN: [f64; 6] = [-120.0, 24.0, -12.0, 12.0, -24.0, 120.0];
    let mut w = [0.0; 6];
    for i in 0..6 {
        w[i] = pre[i] * suf[i] / DEN[i];
    }
    w
}

/// Complex samples on x0 + i·h, optionally periodic with period n·h.
#[derive(Clone, Debug)]
pub struct UniformTable {
    x0: f64,
    inv_h: f64,
    periodic: bool,
    values: Vec<Complex64>,
}

impl UniformTable {
    pub fn new(x0: f64, h: f64, periodic: bool, values: Vec<Complex64>) -> Self {
        assert!(values.len() >= 6);
        Self { x0, inv_h: 1.0 / h, periodic, values }
    }

    /// Upper end of the range where a full stencil is available (non-periodic tables).
    pub fn x_max(&self) -> f64 {
        self.x0 + (self.values.len() as f64 - 4.0) / self.inv_h
    }

    pub fn x_min(&self) -> f64 {
        self.x0 + 2.0 / self.inv_h
    }

    #[inline]
    pub fn eval(&self, x: f64) -> Option<Complex64> {
        let t = (x - self.x0) * self.inv_h;
        let i = t.floor();
        let u = t - i;
        let w = lagrange6(u);
        let n = self.values.len() as i64;
        let i = i as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        if self.periodic {
            for (m, wm) in w.iter().enumerate() {
                let idx = (i + m as i64 - 2).rem_euclid(n) as usize;
                acc += self.values[idx] * wm;
            }
        } else {
            if i - 2 < 0 || i + 3 >= n {
                return None;
            }
            let base = (i - 2) as usize;
            for (m, wm) in w.iter().enumerate() {
                acc += self.values[base + m] * wm;
            }
        }
        Some(acc)
    }
}
