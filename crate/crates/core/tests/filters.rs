//! Filter design against an exact-arithmetic evaluation of the squared-magnitude closed form.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use shearlet_core::filters::{
    lowpass_response, spectral_factorize, spectral_factorize_mode, squared_lowpass_magnitude,
    squared_lowpass_magnitude_mode, ParamMode,
};

fn binom(n: u64, k: u64) -> BigInt {
    let mut b = BigInt::one();
    for i in 0..k {
        b = b * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    b
}

/// (1 − y)^K Σ_{n<L} C(K−1+n, n) yⁿ evaluated exactly for rational y = sin²(πξ).
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

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

#[test]
fn closed_form_at_rational_sine_points() {
    // sin²(π/4) = 1/2, sin²(π/6) = 1/4, sin²(π/3) = 3/4
    for (k, l) in [(15, 10), (30, 15), (39, 19), (4, 4)] {
        let mode = if l >= 10 { ParamMode::Strict } else { ParamMode::Relaxed };
        for (xi, y) in [(0.25, rat(1, 2)), (1.0 / 6.0, rat(1, 4)), (1.0 / 3.0, rat(3, 4))] {
            let exact = closed_form_exact(k, l, &y).to_f64().unwrap();
            let got = squared_lowpass_magnitude_mode(k, l, xi, mode).unwrap();
            // ξ itself is rounded; (1−y)^K amplifies that by ~2K·y/(1−y) ≤ 180 here
            assert!((got - exact).abs() <= 1e-13 * exact, "K={k} L={l} ξ={xi}: {got} vs {exact}");
        }
    }
}

#[test]
fn closed_form_daubechies_case_is_power_complementary() {
    // K = L is the orthogonal Daubechies family: |m0(ξ)|² + |m0(ξ+½)|² = 1 exactly
    let y = rat(1, 7);
    let a = closed_form_exact(6, 6, &y);
    let b = closed_form_exact(6, 6, &(BigRational::one() - &y));
    assert_eq!(a + b, BigRational::one());
}

/// Max over a 4096-point grid on [0, 1) of ||Ĥ0(ξ)|² − closed form|, oracle in exact arithmetic
/// at the f64 value of sin²(πξ). Returns the error and the seconds spent in the library
/// (factorization plus evaluation of the filter on the grid).
fn factorization_error(k: usize, l: usize) -> (f64, f64) {
    let t = Instant::now();
    let pair = spectral_factorize(k, l).unwrap();
    let grid: Vec<f64> = (0..4096).map(|i| i as f64 / 4096.0).collect();
    let got: Vec<f64> = grid.iter().map(|&xi| lowpass_response(&pair.h0, xi).norm_sqr()).collect();
    let secs = t.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for (&xi, g) in grid.iter().zip(got) {
        let s = (std::f64::consts::PI * xi).sin();
        let y = BigRational::from_float(s * s).unwrap();
        let oracle = closed_form_exact(k, l, &y).to_f64().unwrap();
        worst = worst.max((g - oracle).abs());
    }
    (worst, secs)
}

#[test]
fn factorized_filters_match_closed_form_on_4096_grid() {
    for (k, l) in [(15, 10), (30, 15), (39, 19)] {
        let (err, secs) = factorization_error(k, l);
        assert!(err < 1e-8, "K={k} L={l}: max error {err:e}");
        assert!(secs < 10.0, "K={k} L={l}: {secs} s");
    }
}

#[test]
fn strict_mode_rejects_out_of_range_pairs() {
    assert!(spectral_factorize(9, 7).is_err());
    assert!(spectral_factorize(28, 19).is_err());
    assert!(spectral_factorize_mode(9, 7, ParamMode::Relaxed).is_ok());
    assert!(squared_lowpass_magnitude(56, 19, 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_is_even_periodic_and_bounded(xi in -2.0f64..2.0) {
        let v = squared_lowpass_magnitude(15, 10, xi).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        prop_assert!((v - squared_lowpass_magnitude(15, 10, -xi).unwrap()).abs() < 1e-12);
        prop_assert!((v - squared_lowpass_magnitude(15, 10, xi + 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn factorized_filter_matches_closed_form(xi in 0.0f64..1.0) {
        let pair = spectral_factorize(15, 10).unwrap();
        let got = lowpass_response(&pair.h0, xi).norm_sqr();
        let want = squared_lowpass_magnitude(15, 10, xi).unwrap();
        prop_assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn high_pass_is_shifted_mirror(xi in 0.0f64..1.0) {
        let pair = spectral_factorize(15, 10).unwrap();
        let a = pair.m1(xi).norm();
        let b = pair.m0(xi + 0.5).norm();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
