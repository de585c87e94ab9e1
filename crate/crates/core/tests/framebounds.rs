use proptest::test_runner::{Config, TestRunner};
use shearlet_core::filters::ParamMode;
use shearlet_core::framebounds::{
    effective_box, empirical_frame_check, estimate_bounds, gamma, r_of_c, theta, FreqGrid, ThetaContext,
};
use shearlet_core::systems::SystemSpec;
use shearlet_core::transform::TransformPlan;

fn compact(k: usize, l: usize, c: f64) -> SystemSpec {
    SystemSpec::compact(2, k, l, ParamMode::Strict, 3, (c, c)).unwrap()
}

/// Θ(ξ, ω) for scales j < 2 written out term by term: the scaling term, then for each cone
/// j = 0 (|k| ≤ 1) and j = 1 (|k| ≤ 2). Returns the value and the number of terms.
fn theta_hand_loop(spec: &SystemSpec, xi: [f64; 2], w: [f64; 2]) -> (f64, usize) {
    let phi = spec.scaling();
    let mut terms = 1;
    let mut sum = phi.spectrum(&xi).norm() * phi.spectrum(&[xi[0] + w[0], xi[1] + w[1]]).norm();
    for (j, cap) in [(0i32, 1i64), (1, 2)] {
        let a = 2f64.powi(-j);
        let s = 2f64.powf(-j as f64 / 2.0);
        for k in -cap..=cap {
            let kf = k as f64;
            // first cone: S_kᵀ A ξ with A = diag(2^{−j}, 2^{−j/2})
            let e1 = [a * xi[0], kf * a * xi[0] + s * xi[1]];
            let g1 = spec.shearlet(0);
            sum += g1.spectrum(&e1).norm() * g1.spectrum(&[e1[0] + w[0], e1[1] + w[1]]).norm();
            // second cone: roles of the axes swapped
            let e2 = [kf * a * xi[1] + s * xi[0], a * xi[1]];
            let g2 = spec.shearlet(1);
            sum += g2.spectrum(&e2).norm() * g2.spectrum(&[e2[0] + w[0], e2[1] + w[1]]).norm();
            terms += 2;
        }
    }
    (sum, terms)
}

#[test]
fn theta_matches_explicit_hand_loop_at_j_cap_2() {
    let spec = compact(15, 10, 1.0);
    let ctx = ThetaContext::new(&spec).unwrap();
    let points = [[0.3, -0.2], [1.7, 0.4], [-0.9, 2.1], [0.05, 0.0], [3.0, -3.0], [0.0, 0.0]];
    let shifts = [[0.0, 0.0], [0.25, 0.0], [-0.5, 0.75]];
    for xi in points {
        for w in shifts {
            let (want, terms) = theta_hand_loop(&spec, xi, w);
            assert_eq!(terms, 17);
            let got = ctx.theta(xi, w, 2).total();
            assert!((got - want).abs() < 1e-9 * (1.0 + want), "ξ={xi:?} ω={w:?}: {got} vs {want}");
        }
    }
}

#[test]
fn theta_rejects_3d_systems() {
    let spec = SystemSpec::compact(3, 15, 10, ParamMode::Strict, 2, (1.0, 1.0)).unwrap();
    assert!(ThetaContext::new(&spec).is_err());
    assert!(gamma(&compact(15, 10, 1.0), 3, [0.0, 0.0], &FreqGrid::default()).is_err());
}

#[test]
fn grid_refinement_widens_extrema() {
    // the refined axis contains the coarse one, so its extrema can only move outward
    let spec = compact(15, 10, 1.0);
    let coarse = FreqGrid { g_min: -4, g_max: 4, per_octave: 4 };
    let fine = coarse.refined();
    let a = estimate_bounds(&spec, &coarse, 2).unwrap();
    let b = estimate_bounds(&spec, &fine, 2).unwrap();
    assert!(b.l_inf <= a.l_inf);
    assert!(b.l_sup >= a.l_sup);
    assert!(fine.points_per_axis() > coarse.points_per_axis());
}

#[test]
fn aliasing_sum_shrinks_when_c_halves() {
    // With the radius covering every shift that can overlap the generator box, the shifts
    // m/(c/2) are the even-m subset of the shifts m/c, so R(c/2) ≤ R(c) exactly.
    let grid = FreqGrid { g_min: -3, g_max: 3, per_octave: 1 };
    let spec = compact(15, 10, 1.0);
    let reach = [spec.scaling(), spec.shearlet(0), spec.shearlet(1)]
        .iter()
        .flat_map(|g| effective_box(g))
        .fold(0.0f64, f64::max)
        * 2.0;
    let r = |c: f64| {
        let s = r_of_c(&compact(15, 10, c), &grid, (reach * c).ceil() as i64 + 1).unwrap();
        s.value + s.tail
    };
    let (r1, r_half) = (r(1.0), r(0.5));
    assert!(r_half <= r1, "R(1/2) = {r_half:e} > R(1) = {r1:e}");
    assert!(r1 > 0.0);
}

#[test]
fn classical_system_is_parseval_in_the_continuum() {
    let spec = SystemSpec::classical(3, (1.0, 1.0)).unwrap();
    let rep = estimate_bounds(&spec, &FreqGrid { per_octave: 8, ..FreqGrid::default() }, 4).unwrap();
    assert!(rep.certified);
    assert!((rep.a_lower - 1.0).abs() < 1e-9 && (rep.b_upper - 1.0).abs() < 1e-9, "{}", rep.to_text());
}

#[test]
fn empirical_quotients_respect_the_certified_sandwich() {
    let spec = compact(39, 19, 1.0);
    let rep = estimate_bounds(&spec, &FreqGrid { per_octave: 8, ..FreqGrid::default() }, 8).unwrap();
    assert!(rep.certified, "{}", rep.to_text());
    let plan = TransformPlan::new(&spec, &[64, 64]).unwrap();
    let (lo, hi) = empirical_frame_check(&plan, 20, 3).unwrap();
    assert!(lo >= 0.95 * rep.a_lower && hi <= 1.05 * rep.b_upper, "[{lo}, {hi}] vs [{}, {}]", rep.a_lower, rep.b_upper);
}

#[test]
fn report_serializations_carry_the_verdict() {
    let rep = estimate_bounds(&compact(15, 10, 1.0), &FreqGrid { g_min: -3, g_max: 3, per_octave: 4 }, 2).unwrap();
    let csv = rep.to_csv();
    assert!(csv.starts_with('#'));
    assert!(csv.contains(&format!("certified,{}", rep.certified)));
    assert!(rep.to_text().contains(if rep.certified { "frame certified" } else { "not certified" }));
}

#[test]
fn theta_grows_with_the_scale_cap() {
    let spec = compact(15, 10, 1.0);
    let ctx = ThetaContext::new(&spec).unwrap();
    let strategy = (-40.0f64..40.0, -40.0f64..40.0, -1.0f64..1.0, -1.0f64..1.0, 1u32..10);
    TestRunner::new(Config::with_cases(256))
        .run(&strategy, |(x, y, a, b, j)| {
            let t = ctx.theta([x, y], [a, b], j).total();
            let t_next = ctx.theta([x, y], [a, b], j + 1).total();
            assert!(t >= 0.0 && t_next >= t, "{t} {t_next}");
            Ok(())
        })
        .unwrap();
}

#[test]
fn theta_is_symmetric_under_negation() {
    let spec = compact(15, 10, 1.0);
    let ctx = ThetaContext::new(&spec).unwrap();
    TestRunner::new(Config::with_cases(256))
        .run(&(-4.0f64..4.0, -4.0f64..4.0), |(x, y)| {
            let a = ctx.theta([x, y], [0.0, 0.0], 8).total();
            let b = ctx.theta([-x, -y], [0.0, 0.0], 8).total();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a), "{a} {b}");
            Ok(())
        })
        .unwrap();
}

#[test]
fn free_theta_agrees_with_context() {
    let spec = compact(15, 10, 1.0);
    let ctx = ThetaContext::new(&spec).unwrap();
    assert_eq!(theta(&spec, [0.7, -0.3], [0.1, 0.2], 5).unwrap(), ctx.theta([0.7, -0.3], [0.1, 0.2], 5).total());
}
