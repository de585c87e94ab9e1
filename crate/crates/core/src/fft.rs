//! Unnormalized N-d complex FFTs on row-major arrays (rustfft along each axis).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftNd {
    extents: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(extents: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            extents: extents.to_vec(),
            forward: extents.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: extents.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// X[ω] = Σ x[n] e^{−2πi⟨ω,n/N⟩}.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// x[n] = Σ X[ω] e^{+2πi⟨ω,n/N⟩} (no 1/N factor).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len(), "FFT buffer does not match extents");
        let d = self.extents.len();
        let mut scratch = Vec::new();
        let mut lines = Vec::new();
        for axis in 0..d {
            let n = self.extents[axis];
            if n == 1 {
                continue;
            }
            let plan = &plans[axis];
            let need = plan.get_inplace_scratch_len();
            if scratch.len() < need {
                scratch.resize(need, Complex64::new(0.0, 0.0));
            }
            let inner: usize = self.extents[axis + 1..].iter().product();
            if inner == 1 {
                plan.process_with_scratch(data, &mut scratch[..need]);
                continue;
            }
            let block = n * inner;
            lines.resize(block, Complex64::new(0.0, 0.0));
            for chunk in data.chunks_mut(block) {
                // transpose n × inner into inner × n, transform, transpose back
                for t in 0..n {
                    for i in 0..inner {
                        lines[i * n + t] = chunk[t * inner + i];
                    }
                }
                plan.process_with_scratch(&mut lines, &mut scratch[..need]);
                for t in 0..n {
                    for i in 0..inner {
                        chunk[t * inner + i] = lines[i * n + t];
                    }
                }
            }
        }
    }
}

/// Signed frequency of bin `w` on an axis of length `n` (Nyquist bin is −n/2).
#[inline]
pub fn signed_bin(w: usize, n: usize) -> i64 {
    if w < n.div_ceil(2) {
        w as i64
    } else {
        w as i64 - n as i64
    }
}
