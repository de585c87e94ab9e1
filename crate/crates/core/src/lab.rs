//! Experiment harness: N-term error curves, a separable orthonormal wavelet baseline,
//! least-squares rate fits and a hard-thresholding denoising demo.

use std::fmt::Write as _;

use crate::filters::{spectral_factorize_mode, ParamMode};
use crate::io::fmt_f64;
use crate::transform::{
    invert_frame, prefix_set, ranked_largest, CoefficientSet, Entries, Raster, SolveOptions, TransformPlan,
};
use crate::{Error, Result};

/// CG tolerance used for every point of an error curve.
pub const CURVE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct RateCurve {
    pub ns: Vec<usize>,
    /// ‖f − f_N‖² (L² on the unit cube: pixel sums times pixel volume).
    pub errors: Vec<f64>,
    pub window: (usize, usize),
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub label: String,
}

impl RateCurve {
    pub fn new(label: &str, ns: Vec<usize>, errors: Vec<f64>, window: (usize, usize)) -> Result<Self> {
        if ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Fit("N values must be strictly increasing".into()));
        }
        let fit = fit_rate(&ns, &errors, window)?;
        Ok(Self {
            ns,
            errors,
            window,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            label: label.to_string(),
        })
    }

    pub fn error_at(&self, n: usize) -> Option<f64> {
        self.ns.iter().position(|&m| m == n).map(|i| self.errors[i])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# curve={}", self.label);
        let _ = writeln!(s, "# slope={}", fmt_f64(self.slope));
        let _ = writeln!(s, "# intercept={}", fmt_f64(self.intercept));
        let _ = writeln!(s, "# r_squared={}", fmt_f64(self.r_squared));
        let _ = writeln!(s, "# window={},{}", self.window.0, self.window.1);
        let _ = writeln!(s, "N,error");
        for (n, e) in self.ns.iter().zip(&self.errors) {
            let _ = writeln!(s, "{n},{}", fmt_f64(*e));
        }
        s
    }

    /// gnuplot script plotting the curve from `csv_path` on log-log axes.
    pub fn gnuplot(&self, csv_path: &str) -> String {
        format!(
            "set logscale xy\nset datafile separator ','\nset xlabel 'N'\nset ylabel 'squared error'\n\
             plot '{csv_path}' every ::1 using 1:2 with linespoints title '{} (slope {:.3})'\n",
            self.label, self.slope
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of log(error) on log(N) over the points with N in the window.
pub fn fit_rate(ns: &[usize], errors: &[f64], window: (usize, usize)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter(|(&n, _)| n >= window.0 && n <= window.1)
        .map(|(&n, &e)| ((n as f64).ln(), e))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Fit(format!("{} points in window {window:?}, need at least 4", pts.len())));
    }
    if pts.iter().any(|&(_, e)| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Fit("errors must be positive and finite".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1.ln() - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("degenerate window".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RateFit { slope, intercept: my - slope * mx, r_squared })
}

/// Dyadic N values 2^lo ..= 2^hi with `per_octave` points per octave.
pub fn dyadic_ns(lo: u32, hi: u32, per_octave: u32) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=(hi - lo) * per_octave)
        .map(|i| 2f64.powf(lo as f64 + i as f64 / per_octave as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

fn squared_l2(a: &Raster, b: &Raster) -> f64 {
    let sum: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum();
    sum / a.len() as f64
}

/// Shearlet N-term curve: f_N = S^{−1} Σ_{i∈I_N} ⟨f,σ_i⟩σ_i, solved with warm starts in N.
pub fn nterm_curve(plan: &TransformPlan, f: &Raster, ns: &[usize], window: (usize, usize)) -> Result<RateCurve> {
    let coeffs = plan.analyze(f)?;
    nterm_curve_from(plan, f, &coeffs, ns, window)
}

pub fn nterm_curve_from(
    plan: &TransformPlan,
    f: &Raster,
    coeffs: &CoefficientSet,
    ns: &[usize],
    window: (usize, usize),
) -> Result<RateCurve> {
    let max_n = ns.iter().copied().max().unwrap_or(0);
    let ranked = ranked_largest(coeffs, max_n);
    let opts = SolveOptions { tol: CURVE_TOL, max_iter: 500, precondition: true };
    let mut warm: Option<Raster> = None;
    let mut errors = Vec::with_capacity(ns.len());
    for &n in ns {
        let kept = prefix_set(plan.layout.clone(), &ranked[..n.min(ranked.len())]);
        let y = plan.synthesize(&kept)?;
        let sol = invert_frame(plan, &y, &opts, warm.as_ref()).map_err(|e| e.with_context(format!("N = {n}")))?;
        errors.push(squared_l2(f, &sol.x));
        warm = Some(sol.x);
    }
    RateCurve::new("shearlet", ns.to_vec(), errors, window)
}

/// Periodic orthonormal separable wavelet transform (Mallat ordering) from an orthogonal
/// low-pass filter with taps summing to 1.
#[derive(Clone, Debug)]
pub struct WaveletBasis {
    lo: Vec<f64>,
    hi: Vec<f64>,
    pub levels: usize,
}

/// Daubechies-type baseline filter (K = L = 4, eight taps).
pub const BASELINE_ORDER: usize = 4;

impl WaveletBasis {
    pub fn new(h0: &[f64], levels: usize) -> Self {
        let lo: Vec<f64> = h0.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
        let n = lo.len();
        let hi = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * lo[n - 1 - k]).collect();
        Self { lo, hi, levels }
    }

    pub fn standard(extents: &[usize]) -> Result<Self> {
        let pair = spectral_factorize_mode(BASELINE_ORDER, BASELINE_ORDER, ParamMode::Relaxed)?;
        let min = *extents.iter().min().unwrap();
        let levels = (min.trailing_zeros() as usize).saturating_sub(3).max(1);
        Ok(Self::new(&pair.h0, levels))
    }

    fn step_forward(&self, line: &mut [f64], tmp: &mut Vec<f64>) {
        let n = line.len();
        let h = n / 2;
        tmp.clear();
        tmp.resize(n, 0.0);
        for i in 0..h {
            let (mut a, mut d) = (0.0, 0.0);
            for (k, (l, g)) in self.lo.iter().zip(&self.hi).enumerate() {
                let x = line[(2 * i + k) % n];
                a += l * x;
                d += g * x;
            }
            tmp[i] = a;
            tmp[h + i] = d;
        }
        line.copy_from_slice(tmp);
    }

    fn step_inverse(&self, line: &mut [f64], tmp: &mut Vec<f64>) {
        let n = line.len();
        let h = n / 2;
        tmp.clear();
        tmp.resize(n, 0.0);
        for i in 0..h {
            for (k, (l, g)) in self.lo.iter().zip(&self.hi).enumerate() {
                tmp[(2 * i + k) % n] += l * line[i] + g * line[h + i];
            }
        }
        line.copy_from_slice(tmp);
    }

    fn apply(&self, data: &mut [f64], extents: &[usize], inverse: bool) {
        let d = extents.len();
        let strides: Vec<usize> = (0..d).map(|a| extents[a + 1..].iter().product()).collect();
        let order: Vec<usize> = if inverse { (0..self.levels).rev().collect() } else { (0..self.levels).collect() };
        let mut line = Vec::new();
        let mut tmp = Vec::new();
        for lev in order {
            let sub: Vec<usize> = extents.iter().map(|&n| n >> lev).collect();
            for ax in 0..d {
                let n = sub[ax];
                // every line of the sub-block along `ax`
                let others: Vec<usize> = (0..d).filter(|&a| a != ax).collect();
                let count: usize = others.iter().map(|&a| sub[a]).product();
                for c in 0..count {
                    let mut rem = c;
                    let mut base = 0;
                    for &a in others.iter().rev() {
                        base += (rem % sub[a]) * strides[a];
                        rem /= sub[a];
                    }
                    line.clear();
                    line.extend((0..n).map(|t| data[base + t * strides[ax]]));
                    if inverse {
                        self.step_inverse(&mut line, &mut tmp);
                    } else {
                        self.step_forward(&mut line, &mut tmp);
                    }
                    for (t, v) in line.iter().enumerate() {
                        data[base + t * strides[ax]] = *v;
                    }
                }
            }
        }
    }

    pub fn forward(&self, f: &Raster) -> Vec<f64> {
        let mut d = f.data.clone();
        self.apply(&mut d, &f.extents, false);
        d
    }

    pub fn inverse(&self, c: &[f64], extents: &[usize]) -> Raster {
        let mut d = c.to_vec();
        self.apply(&mut d, extents, true);
        Raster { extents: extents.to_vec(), data: d }
    }
}

/// Orthonormal wavelet N-term curve (the error is the energy of the discarded coefficients).
pub fn wavelet_baseline_curve(f: &Raster, ns: &[usize], window: (usize, usize)) -> Result<RateCurve> {
    let basis = WaveletBasis::standard(&f.extents)?;
    let c = basis.forward(f);
    let mut mags: Vec<f64> = c.iter().map(|v| v * v).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    // tail[n] = Σ_{i≥n} sorted energies, summed from the small end for accuracy
    let mut tail = vec![0.0; mags.len() + 1];
    for i in (0..mags.len()).rev() {
        tail[i] = tail[i + 1] + mags[i];
    }
    let errors = ns.iter().map(|&n| tail[n.min(mags.len())] / f.len() as f64).collect();
    RateCurve::new("wavelet", ns.to_vec(), errors, window)
}

/// 10·log10(peak²/MSE).
pub fn psnr(reference: &Raster, x: &Raster, peak: f64) -> f64 {
    let mse = squared_l2(reference, x);
    10.0 * (peak * peak / mse).log10()
}

/// Dynamic range max − min used as PSNR peak.
pub fn peak_of(f: &Raster) -> f64 {
    let hi = f.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = f.data.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

#[derive(Clone, Debug)]
pub struct DenoiseResult {
    pub denoised: Raster,
    pub threshold: f64,
    pub kept: usize,
    pub iterations: usize,
}

/// Default κ of the threshold rule τ = κσ√(2 log M) (M = coefficient count), applied to
/// coefficients divided by their element norm.
pub const DEFAULT_KAPPA: f64 = 0.5;

/// Keep ⟨y,σ_i⟩ with |⟨y,σ_i⟩|/‖σ_i‖ > κσ√(2 log M), then invert the frame operator.
pub fn denoise(plan: &TransformPlan, noisy: &Raster, sigma: f64, kappa: f64, opts: &SolveOptions) -> Result<DenoiseResult> {
    let c = plan.analyze(noisy)?;
    let threshold = kappa * sigma * (2.0 * (plan.total() as f64).ln()).sqrt();
    let kept = normalized_threshold(plan, &c, threshold);
    let count = kept.stored();
    let y = plan.synthesize(&kept)?;
    let sol = invert_frame(plan, &y, opts, None)?;
    Ok(DenoiseResult { denoised: sol.x, threshold, kept: count, iterations: sol.iterations })
}

/// Keep entries whose value divided by the element norm exceeds τ.
pub fn normalized_threshold(plan: &TransformPlan, c: &CoefficientSet, tau: f64) -> CoefficientSet {
    let norms = plan.element_norms();
    let layout = &plan.layout;
    let kept: Vec<(usize, f64)> = match &c.entries {
        Entries::Dense(v) => {
            let mut out = Vec::new();
            for (b, w) in layout.offsets.windows(2).enumerate() {
                let t = tau * norms[b];
                out.extend((w[0]..w[1]).filter(|&i| v[i].abs() > t).map(|i| (i, v[i])));
            }
            out
        }
        Entries::Sparse(e) => e
            .iter()
            .copied()
            .filter(|&(i, v)| v.abs() > tau * norms[layout.locate(i).unwrap().0])
            .collect(),
    };
    CoefficientSet::sparse(layout.clone(), kept).expect("subset of a valid set")
}

/// Noise level giving the requested input PSNR for a given peak.
pub fn sigma_for_psnr(peak: f64, psnr_db: f64) -> f64 {
    peak * 10f64.powf(-psnr_db / 20.0)
}

/// J_max of the N-term and denoising experiments for a raster of side `n`. In 2D this keeps
/// the scaling band at 64 lattice points per axis (J = 6 at 512², measured best in a sweep
/// J = 5..9). In 3D the 64³ sweep J = 3..5 kept improving up to J = log2 N − 1.
pub fn experiment_j_max(dim: usize, n: usize) -> u32 {
    let log2 = n.max(1).trailing_zeros();
    match dim {
        3 => log2.saturating_sub(1),
        _ => log2.saturating_sub(3),
    }
}

/// log2 of the smallest and largest N of the rate fit window.
pub fn experiment_window(dim: usize) -> (u32, u32) {
    if dim == 3 {
        (7, 11)
    } else {
        (7, 12)
    }
}

/// Gaussian noise with standard deviation sigma, seeded.
pub fn add_noise(f: &Raster, sigma: f64, seed: u64) -> Raster {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    Raster { extents: f.extents.clone(), data: f.data.iter().map(|v| v + normal.sample(&mut rng)).collect() }
}
