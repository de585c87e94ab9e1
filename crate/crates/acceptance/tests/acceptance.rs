//! Acceptance suite: one PASS/FAIL line per criterion on stdout (written past the test
//! harness capture), and the test fails when its criterion fails. Tolerances are pinned below.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shearlet_core::cartoon::{rasterize_cartoon, surface_cartoon_3d, CartoonSpec};
use shearlet_core::filters::{filters_csv, lowpass_response, spectral_factorize, ParamMode};
use shearlet_core::framebounds::{empirical_frame_check, estimate_bounds, FreqGrid};
use shearlet_core::io::fmt_f64;
use shearlet_core::lab;
use shearlet_core::systems::{Region, SystemSpec};
use shearlet_core::transform::{invert_frame, CoefficientSet, Precision, Raster, SolveOptions, TransformPlan};

// 1
const FILTER_MAX_ERR: f64 = 1e-8;
const FILTER_MAX_SECS: f64 = 10.0;
// 2
const PARSEVAL_RATIO: f64 = 1.01;
const PARSEVAL_REL_ERR: f64 = 1e-3;
const PARSEVAL_RASTERS: usize = 50;
// 3
const CERT_T_MAX: u32 = 6;
const SANDWICH_SLACK: f64 = 0.05;
const CERT_M_RADIUS: i64 = 8;
// 4
const ADJOINT_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-8;
// 5
const CG_TOL: f64 = 1e-6;
const CG_MAX_ITER: usize = 200;
// 6
const SLOPE_2D: f64 = -1.7;
const WAVELET_SLOPE_2D: f64 = -1.3;
// 7
const SLOPE_3D: f64 = -0.8;
// 8
const DENOISE_GAIN_DB: f64 = 5.0;
const DENOISE_INPUT_DB: f64 = 20.0;

const SEED: u64 = 1;
const NU: f64 = 10.0;

/// The heavy criteria run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    let line = format!(
        "criterion {id} [{name}]: {} ({detail}; {:.1} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
    assert!(pass, "{line}");
}

fn random_raster(extents: &[usize], seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = extents.iter().product();
    Raster::new(extents.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn compact(dim: usize, j: u32, c: f64) -> SystemSpec {
    SystemSpec::compact(dim, 39, 19, ParamMode::Strict, j, (c, c)).unwrap()
}

fn rel_diff(a: &Raster, b: &Raster) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() / b.norm()
}

// ---------------------------------------------------------------- 1: filters

fn binom(n: u64, k: u64) -> BigInt {
    let mut b = BigInt::one();
    for i in 0..k {
        b = b * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    b
}

/// (1 − y)^K Σ_{n<L} C(K−1+n, n) yⁿ in exact rational arithmetic.
fn closed_form_exact(k: usize, l: usize, y: &BigRational) -> BigRational {
    let mut sum = BigRational::zero();
    let mut yn = BigRational::one();
    for n in 0..l as u64 {
        sum += BigRational::from_integer(binom(k as u64 - 1 + n, n)) * &yn;
        yn *= y;
    }
    let one_minus = BigRational::one() - y;
    let mut c = BigRational::one();
    for _ in 0..k {
        c *= &one_minus;
    }
    c * sum
}

fn filter_error(k: usize, l: usize) -> (f64, f64, String) {
    let t = Instant::now();
    let pair = spectral_factorize(k, l).unwrap();
    let grid: Vec<f64> = (0..4096).map(|i| i as f64 / 4096.0).collect();
    let got: Vec<f64> = grid.iter().map(|&xi| lowpass_response(&pair.h0, xi).norm_sqr()).collect();
    let secs = t.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for (&xi, g) in grid.iter().zip(got) {
        let s = (std::f64::consts::PI * xi).sin();
        let oracle = closed_form_exact(k, l, &BigRational::from_float(s * s).unwrap()).to_f64().unwrap();
        worst = worst.max((g - oracle).abs());
    }
    (worst, secs, filters_csv(&pair))
}

#[test]
fn criterion_1_filter_correctness() {
    let t = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, l) in [(15, 10), (30, 15), (39, 19)] {
        let (err, secs, _) = filter_error(k, l);
        pass &= err < FILTER_MAX_ERR && secs < FILTER_MAX_SECS;
        detail.push(format!("({k},{l}) max err {err:.1e} in {secs:.2} s"));
    }
    verdict(1, "filter closed form", pass, &detail.join(", "), t.elapsed());
}

// ---------------------------------------------------------------- 2: Parseval

fn parseval_check() -> (f64, f64, f64) {
    let spec = SystemSpec::classical(lab::experiment_j_max(2, 64), (1.0, 1.0)).unwrap();
    let plan = TransformPlan::new(&spec, &[64, 64]).unwrap();
    let (a, b) = empirical_frame_check(&plan, PARSEVAL_RASTERS, SEED).unwrap();
    let mut worst: f64 = 0.0;
    for s in 0..PARSEVAL_RASTERS as u64 {
        let f = random_raster(&[64, 64], 1000 + s);
        worst = worst.max(rel_diff(&plan.frame_operator(&f).unwrap(), &f));
    }
    (a, b, worst)
}

#[test]
fn criterion_2_calderon_parseval_oracle() {
    let t = Instant::now();
    let (a, b, worst) = parseval_check();
    let pass = b / a <= PARSEVAL_RATIO && worst <= PARSEVAL_REL_ERR && t.elapsed().as_secs() < 60;
    let detail = format!("B_emp/A_emp = {:.6}, max ‖Sf−f‖/‖f‖ = {worst:.1e} over {PARSEVAL_RASTERS} rasters", b / a);
    verdict(2, "classical Parseval", pass, &detail, t.elapsed());
}

// ---------------------------------------------------------------- 3: certification

fn certification() -> (Option<(f64, f64)>, String) {
    let grid = FreqGrid { per_octave: 8, ..FreqGrid::default() };
    for t in 0..=CERT_T_MAX {
        let c = 2f64.powi(-(t as i32));
        let rep = estimate_bounds(&compact(2, 3, c), &grid, CERT_M_RADIUS).unwrap();
        if rep.certified && rep.l_inf - rep.r_c - rep.r_tail > 0.0 {
            let plan = TransformPlan::new(&compact(2, lab::experiment_j_max(2, 64), c), &[64, 64]).unwrap();
            let (lo, hi) = empirical_frame_check(&plan, 20, SEED).unwrap();
            let text = format!(
                "t = {t}: L_inf = {:.4}, R(c) = {:.2e}, [A, B] = [{:.4}, {:.4}], Rayleigh [{lo:.4}, {hi:.4}]",
                rep.l_inf,
                rep.r_c + rep.r_tail,
                rep.a_lower,
                rep.b_upper
            );
            return (Some((lo / rep.a_lower, hi / rep.b_upper)), format!("{text}\n{}", rep.to_csv()));
        }
    }
    (None, format!("no t ≤ {CERT_T_MAX} certified"))
}

#[test]
fn criterion_3_frame_certification() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (found, text) = certification();
    let pass = match found {
        Some((lo_ratio, hi_ratio)) => {
            lo_ratio >= 1.0 - SANDWICH_SLACK && hi_ratio <= 1.0 + SANDWICH_SLACK && t.elapsed().as_secs() < 600
        }
        None => false,
    };
    verdict(3, "compact (39,19) certified, sandwich holds", pass, text.lines().next().unwrap(), t.elapsed());
}

// ---------------------------------------------------------------- 4: adjoint and oracle

fn adjoint_gap(spec: &SystemSpec, extents: &[usize]) -> f64 {
    let plan = TransformPlan::with_precision(spec, extents, Precision::F64).unwrap();
    let f = random_raster(extents, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let c = CoefficientSet::dense(plan.layout.clone(), (0..plan.total()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .unwrap();
    let tf = plan.analyze(&f).unwrap();
    let tsc = plan.synthesize(&c).unwrap();
    (tf.dot(&c) - f.dot(&tsc)).abs() / (tf.energy().sqrt() * c.energy().sqrt())
}

fn signed(w: usize, n: usize) -> f64 {
    if 2 * w < n {
        w as f64
    } else {
        w as f64 - n as f64
    }
}

/// Inner products with elements rendered from the definition by direct (non-FFT) sums.
fn brute_force_coefficients(spec: &SystemSpec, f: &Raster) -> Vec<f64> {
    let n = f.extents[0];
    let delta = spec.pixel_size();
    let mut out = Vec::new();
    for band in spec.bands(&f.extents).unwrap() {
        let gen = match band.region {
            Region::Scaling => spec.scaling(),
            Region::Cone(a) => spec.shearlet(a),
        };
        let mut g_hat = vec![Complex64::new(0.0, 0.0); n * n];
        for w0 in 0..n {
            for w1 in 0..n {
                let xi = [signed(w0, n) / (n as f64 * delta), signed(w1, n) / (n as f64 * delta)];
                let eta = [band.b[0][0] * xi[0] + band.b[0][1] * xi[1], band.b[1][0] * xi[0] + band.b[1][1] * xi[1]];
                let inside = match band.region {
                    Region::Scaling => true,
                    Region::Cone(0) => xi[1].abs() <= xi[0].abs(),
                    Region::Cone(_) => xi[0].abs() < xi[1].abs(),
                };
                let v = if gen.is_cone_masked() && !inside { Complex64::new(0.0, 0.0) } else { gen.spectrum(&eta) };
                g_hat[w0 * n + w1] = v * band.beta;
            }
        }
        // Hermitian completion on the Nyquist lines: the lower flat index wins
        for w0 in 0..n {
            for w1 in 0..n {
                if w0 != n / 2 && w1 != n / 2 {
                    continue;
                }
                let (a, b) = (w0 * n + w1, ((n - w0) % n) * n + (n - w1) % n);
                if a == b {
                    g_hat[a].im = 0.0;
                } else if a > b {
                    g_hat[a] = g_hat[b].conj();
                }
            }
        }
        let mut g = vec![0.0; n * n];
        for x0 in 0..n {
            for x1 in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for w0 in 0..n {
                    for w1 in 0..n {
                        let ph = 2.0 * std::f64::consts::PI * ((w0 * x0 + w1 * x1) % n) as f64 / n as f64;
                        acc += g_hat[w0 * n + w1] * Complex64::from_polar(1.0, ph);
                    }
                }
                g[x0 * n + x1] = acc.re / (n * n) as f64;
            }
        }
        for m0 in 0..band.counts[0] {
            for m1 in 0..band.counts[1] {
                let (t0, t1) = (m0 * band.strides[0], m1 * band.strides[1]);
                let mut acc = 0.0;
                for x0 in 0..n {
                    for x1 in 0..n {
                        acc += f.data[x0 * n + x1] * g[((x0 + n - t0) % n) * n + (x1 + n - t1) % n];
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

fn oracle_gap() -> f64 {
    let spec = compact(2, 2, 1.0);
    let f = random_raster(&[16, 16], 5);
    let fast = TransformPlan::with_precision(&spec, &[16, 16], Precision::F64).unwrap().analyze(&f).unwrap().to_dense();
    let slow = brute_force_coefficients(&spec, &f);
    assert_eq!(fast.len(), slow.len());
    let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn criterion_4_adjoint_and_oracle() {
    let t = Instant::now();
    let gaps = [
        adjoint_gap(&compact(2, 2, 1.0), &[16, 16]),
        adjoint_gap(&compact(2, 3, 1.0), &[32, 32]),
        adjoint_gap(&compact(3, 2, 1.0), &[16, 16, 16]),
    ];
    let oracle = oracle_gap();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let pass = worst < ADJOINT_TOL && oracle < ORACLE_TOL && t.elapsed().as_secs() < 60;
    let detail = format!("adjoint gaps 16²/32²/16³ = {:.1e}/{:.1e}/{:.1e}, FFT vs direct {oracle:.1e}", gaps[0], gaps[1], gaps[2]);
    verdict(4, "adjoint identity and brute-force oracle", pass, &detail, t.elapsed());
}

// ---------------------------------------------------------------- 5: inversion

fn cg_roundtrip() -> (f64, usize, bool) {
    let plan = TransformPlan::new(&compact(2, lab::experiment_j_max(2, 128), 1.0), &[128, 128]).unwrap();
    let f = random_raster(&[128, 128], 9);
    let y = plan.frame_operator(&f).unwrap();
    let opts = SolveOptions { tol: CG_TOL, max_iter: CG_MAX_ITER, precondition: false };
    let sol = invert_frame(&plan, &y, &opts, None).unwrap();
    let monotone = sol.history.windows(2).all(|w| w[1] <= w[0]);
    (rel_diff(&sol.x, &f), sol.iterations, monotone)
}

#[test]
fn criterion_5_iterative_inversion() {
    let t = Instant::now();
    let (err, iters, monotone) = cg_roundtrip();
    let pass = err <= 10.0 * CG_TOL && iters <= CG_MAX_ITER && monotone;
    let detail = format!("relative error {err:.1e} after {iters} iterations, residual monotone: {monotone}");
    verdict(5, "S-roundtrip at 128²", pass, &detail, t.elapsed());
}

// ---------------------------------------------------------------- 6, 7: sparsity proxies

fn rate_curves(dim: usize, side: usize, pieces: usize) -> (lab::RateCurve, lab::RateCurve) {
    let cs = if dim == 2 { CartoonSpec::random_2d(NU, SEED) } else { surface_cartoon_3d(NU, pieces, SEED).unwrap() };
    let f = rasterize_cartoon(&cs, &vec![side; dim]).unwrap();
    let plan = TransformPlan::new(&compact(dim, lab::experiment_j_max(dim, side), 1.0), &f.extents).unwrap();
    let (lo, hi) = lab::experiment_window(dim);
    let ns = lab::dyadic_ns(lo, hi, 2);
    let window = (1usize << lo, 1usize << hi);
    (lab::nterm_curve(&plan, &f, &ns, window).unwrap(), lab::wavelet_baseline_curve(&f, &ns, window).unwrap())
}

#[test]
fn criterion_6_2d_sparsity_proxy() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (sh, wv) = rate_curves(2, 512, 1);
    let pass = sh.slope <= SLOPE_2D && wv.slope >= WAVELET_SLOPE_2D && t.elapsed().as_secs() <= 1800;
    let detail = format!(
        "shearlet slope {:.3} (need ≤ {SLOPE_2D}, r² {:.3}), wavelet slope {:.3} (need ≥ {WAVELET_SLOPE_2D})",
        sh.slope, sh.r_squared, wv.slope
    );
    verdict(6, "2D cartoon 512²", pass, &detail, t.elapsed());
}

#[test]
fn criterion_7_3d_sparsity_proxy_slow() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (smooth, _) = rate_curves(3, 64, 1);
    let (pieces, wv) = rate_curves(3, 64, 6);
    let pass = smooth.slope <= SLOPE_3D && pieces.slope <= SLOPE_3D && t.elapsed().as_secs() <= 3600;
    let detail = format!(
        "smooth surface slope {:.3}, 6-piece slope {:.3} (need both ≤ {SLOPE_3D}; wavelet on 6-piece {:.3})",
        smooth.slope, pieces.slope, wv.slope
    );
    verdict(7, "3D cartoons 64³", pass, &detail, t.elapsed());
}

// ---------------------------------------------------------------- 8: denoising

fn denoise_run(side: usize) -> (f64, f64, String) {
    let f = rasterize_cartoon(&CartoonSpec::random_2d(NU, SEED), &[side, side]).unwrap();
    let peak = lab::peak_of(&f);
    let sigma = lab::sigma_for_psnr(peak, DENOISE_INPUT_DB);
    let noisy = lab::add_noise(&f, sigma, SEED + 1);
    let plan = TransformPlan::new(&compact(2, lab::experiment_j_max(2, side), 1.0), &[side, side]).unwrap();
    let opts = SolveOptions { tol: CG_TOL, max_iter: 500, precondition: true };
    let res = lab::denoise(&plan, &noisy, sigma, lab::DEFAULT_KAPPA, &opts).unwrap();
    let (before, after) = (lab::psnr(&f, &noisy, peak), lab::psnr(&f, &res.denoised, peak));
    let csv = format!("psnr_noisy,{}\npsnr_denoised,{}\nkept,{}\n", fmt_f64(before), fmt_f64(after), res.kept);
    (before, after, csv)
}

#[test]
fn criterion_8_denoising() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (before, after, _) = denoise_run(256);
    let pass = after - before >= DENOISE_GAIN_DB;
    let detail = format!(
        "PSNR {before:.2} → {after:.2} dB (+{:.2}); reference figures 20.17/28.70/29.20 dB are context only",
        after - before
    );
    verdict(8, "denoising at 256²", pass, &detail, t.elapsed());
}

// ---------------------------------------------------------------- 9: determinism

/// CSV outputs of criteria 1–8 at reduced size.
fn all_outputs() -> Vec<String> {
    let mut out = vec![filter_error(15, 10).2, filter_error(39, 19).2];
    let (a, b, w) = parseval_check();
    out.push(format!("{},{},{}", fmt_f64(a), fmt_f64(b), fmt_f64(w)));
    out.push(certification().1);
    out.push(format!("{},{}", fmt_f64(adjoint_gap(&compact(2, 2, 1.0), &[16, 16])), fmt_f64(oracle_gap())));
    let (err, iters, _) = cg_roundtrip();
    out.push(format!("{},{iters}", fmt_f64(err)));
    let (sh, wv) = rate_curves(2, 128, 1);
    out.extend([sh.to_csv(), wv.to_csv()]);
    let cs = surface_cartoon_3d(NU, 6, SEED).unwrap();
    let f = rasterize_cartoon(&cs, &[16, 16, 16]).unwrap();
    let plan = TransformPlan::new(&compact(3, 3, 1.0), &f.extents).unwrap();
    let ns = lab::dyadic_ns(4, 8, 1);
    out.push(lab::nterm_curve(&plan, &f, &ns, (16, 256)).unwrap().to_csv());
    out.push(denoise_run(64).2);
    out
}

#[test]
fn criterion_9_determinism() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (first, second) = (all_outputs(), all_outputs());
    let differing: Vec<usize> = (0..first.len()).filter(|&i| first[i] != second[i]).collect();
    let detail = format!("{} CSV outputs compared byte for byte, {} differ {differing:?}", first.len(), differing.len());
    verdict(9, "repeat runs identical", differing.is_empty(), &detail, t.elapsed());
}
