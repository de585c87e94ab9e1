use proptest::prelude::*;
use shearlet_core::cartoon::{
    l2_squared_error, rasterize_cartoon, surface_cartoon_3d, Boundary, CartoonSpec, RadiusFunction, RHO0,
};

#[test]
fn rasterization_error_halves_when_extents_double() {
    // the jump set costs O(h) in squared L²; the smooth part only O(h²)
    for seed in [1, 4, 9] {
        let spec = CartoonSpec::random_2d(10.0, seed);
        let e = |n: usize| l2_squared_error(&spec, &rasterize_cartoon(&spec, &[n, n]).unwrap(), 8);
        let (e64, e128, e256) = (e(64), e(128), e(256));
        for ratio in [e128 / e64, e256 / e128] {
            assert!((0.3..=0.7).contains(&ratio), "seed {seed}: {e64:e} {e128:e} {e256:e}");
        }
    }
}

#[test]
fn smooth_part_converges_faster_than_the_jump() {
    let spec = CartoonSpec::random_2d(10.0, 2).smooth_part();
    let e = |n: usize| l2_squared_error(&spec, &rasterize_cartoon(&spec, &[n, n]).unwrap(), 4);
    let ratio = e(128) / e(64);
    assert!(ratio < 0.3, "{ratio}");
}

#[test]
fn circle_raster_area_matches_pi_r_squared() {
    let mut spec = CartoonSpec::random_2d(10.0, 0);
    spec.boundary = Boundary::Star(RadiusFunction::circle(RHO0));
    // f1 ≡ 1 inside: compare the indicator mass with the disc area
    spec.f0.amplitude = 0.0;
    let n = 256;
    let r = rasterize_cartoon(&spec, &[n, n]).unwrap();
    let ind: f64 = r
        .data
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = [(i / n) as f64 / n as f64 + 0.5 / n as f64, (i % n) as f64 / n as f64 + 0.5 / n as f64];
            let f1 = spec.f1.value(&x);
            if f1 > 0.0 {
                v / f1
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / (n * n) as f64;
    let area = std::f64::consts::PI * RHO0 * RHO0;
    assert!((ind - area).abs() < 2e-3, "{ind} vs {area}");
}

#[test]
fn rounded_cluster_faces_respect_the_curvature_bound() {
    for seed in 0..5 {
        let spec = surface_cartoon_3d(10.0, 6, seed).unwrap();
        spec.validate().unwrap();
        let Boundary::Balls(b) = &spec.boundary else { panic!("expected a ball cluster") };
        assert_eq!(b.faces.len(), 6);
        assert!(1.0 / b.radius <= 10.0);
        // each face crosses its axis at the half width
        for &(axis, sign, hw) in &b.faces {
            let mut x = [0.0; 3];
            x[axis] = sign * hw;
            assert!(b.level(&x).abs() < 1e-12);
        }
    }
}

#[test]
fn three_d_raster_has_the_jump() {
    let spec = surface_cartoon_3d(10.0, 1, 5).unwrap();
    let r = rasterize_cartoon(&spec, &[32, 32, 32]).unwrap();
    // a voxel well inside B carries f0 + f1, the far corner nothing
    let x = [16.5 / 32.0; 3];
    let centre = r.data[16 * 32 * 32 + 16 * 32 + 16];
    assert!((centre - spec.value(&x)).abs() < 1e-14);
    assert!(spec.f1.value(&x) > 0.0 && spec.inside(&x));
    assert_eq!(r.data[0], 0.0);
    assert_eq!(r, rasterize_cartoon(&spec, &[32, 32, 32]).unwrap());
}

#[test]
fn config_records_the_seed_and_boundary() {
    let text = CartoonSpec::random_2d(10.0, 7).to_config();
    assert!(text.contains("seed=7") && text.contains("boundary=star"), "{text}");
    assert_eq!(text, CartoonSpec::random_2d(10.0, 7).to_config());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_specs_validate_and_stay_in_range(seed in 0u64..10_000, nu in 4.0f64..40.0) {
        let spec = CartoonSpec::random_2d(nu, seed);
        prop_assert!(spec.validate().is_ok());
        let r = rasterize_cartoon(&spec, &[32, 32]).unwrap();
        prop_assert!(r.data.iter().all(|v| v.is_finite() && *v >= -1e-12 && *v <= 2.0 + 1e-12));
    }
}
