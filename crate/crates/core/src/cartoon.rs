//! Cartoon-like test images f = f0 + f1·χ_B: star-shaped sets with bounded ρ'' in 2D,
//! perturbed spheres and piecewise-smooth ball intersections ("rounded cubes") in 3D,
//! with C² polynomial bumps for the smooth parts.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::io::{fmt_f64, KeyValues};
use crate::transform::Raster;
use crate::{Error, Result};

/// Largest radius of the 2D star set; keeps B + (1/2, 1/2) inside [0.1, 0.9]².
pub const RHO0: f64 = 0.4;
pub const THETA_GRID: usize = 4096;
const MAX_HARMONIC: usize = 6;

/// ρ(θ) = base + Σ a_n cos nθ + b_n sin nθ, with max ρ = ρ0 (the all-zero draw is the circle of radius ρ0).
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusFunction {
    pub rho0: f64,
    pub base: f64,
    /// (n, a_n, b_n)
    pub harmonics: Vec<(usize, f64, f64)>,
}

impl RadiusFunction {
    pub fn circle(rho0: f64) -> Self {
        Self { rho0, base: rho0, harmonics: Vec::new() }
    }

    fn from_harmonics(rho0: f64, harmonics: Vec<(usize, f64, f64)>) -> Self {
        let mut r = Self { rho0, base: 0.0, harmonics };
        let hi = r.grid_extrema(0).1;
        r.base = rho0 - hi;
        r
    }

    fn series(&self, theta: f64, deriv: u32) -> f64 {
        self.harmonics
            .iter()
            .map(|&(n, a, b)| {
                let nf = n as f64;
                let (s, c) = (nf * theta).sin_cos();
                // d^k/dθ^k of a cos + b sin
                let (x, y) = match deriv % 4 {
                    0 => (a * c + b * s, 1.0),
                    1 => (-a * s + b * c, 1.0),
                    2 => (-(a * c + b * s), 1.0),
                    _ => (a * s - b * c, 1.0),
                };
                x * y * nf.powi(deriv as i32)
            })
            .sum()
    }

    pub fn rho(&self, theta: f64) -> f64 {
        self.base + self.series(theta, 0)
    }

    pub fn rho_d1(&self, theta: f64) -> f64 {
        self.series(theta, 1)
    }

    pub fn rho_d2(&self, theta: f64) -> f64 {
        self.series(theta, 2)
    }

    /// (min, max) of the k-th derivative of the harmonic part on the θ grid.
    fn grid_extrema(&self, deriv: u32) -> (f64, f64) {
        (0..THETA_GRID).map(|i| self.series(2.0 * PI * i as f64 / THETA_GRID as f64, deriv)).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
    }

    /// Rigorous sup|ρ''|: grid maximum plus half a grid step times Σ n³(|a|+|b|).
    pub fn curvature_bound(&self) -> f64 {
        let (lo, hi) = self.grid_extrema(2);
        let third: f64 = self.harmonics.iter().map(|&(n, a, b)| (n as f64).powi(3) * (a.abs() + b.abs())).sum();
        lo.abs().max(hi.abs()) + PI / THETA_GRID as f64 * third
    }

    pub fn grid_max_d2(&self) -> f64 {
        let (lo, hi) = self.grid_extrema(2);
        lo.abs().max(hi.abs())
    }

    /// Independent re-check of the star-set invariants.
    pub fn validate(&self, nu: f64) -> Result<()> {
        let third: f64 = self.harmonics.iter().map(|&(n, a, b)| (n as f64).powi(3) * (a.abs() + b.abs())).sum();
        let first: f64 = self.harmonics.iter().map(|&(n, a, b)| n as f64 * (a.abs() + b.abs())).sum();
        let h = 2.0 * PI / THETA_GRID as f64;
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        let mut d2 = 0f64;
        for i in 0..THETA_GRID {
            let t = i as f64 * h;
            let r = self.rho(t);
            hi = hi.max(r);
            lo = lo.min(r);
            d2 = d2.max(self.rho_d2(t).abs());
        }
        if hi > self.rho0 + h * first + 1e-12 || self.rho0 >= 0.5 {
            return Err(Error::Constraint(format!("ρ exceeds ρ0 = {}", self.rho0)));
        }
        if lo - h * first <= 0.0 {
            return Err(Error::Constraint("ρ must stay positive".into()));
        }
        if d2 + h / 2.0 * third > nu {
            return Err(Error::Constraint(format!("sup|ρ''| {:.4} exceeds ν = {nu}", d2 + h / 2.0 * third)));
        }
        Ok(())
    }
}

/// Seeded star set: harmonics of degree ≤ 6, rescaled so sup|ρ''| ≤ 0.9ν, max ρ = ρ0 and ρ ≥ ρ0/2.
pub fn random_star_set(nu: f64, seed: u64) -> RadiusFunction {
    assert!(nu > 0.0, "curvature bound must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let raw: Vec<(usize, f64, f64)> = (1..=MAX_HARMONIC)
        .map(|n| {
            let w = 1.0 / (n * n) as f64;
            (n, w * normal.sample(&mut rng), w * normal.sample(&mut rng))
        })
        .collect();
    let unit = RadiusFunction::from_harmonics(RHO0, raw.clone());
    let curv = unit.curvature_bound();
    let (lo, hi) = unit.grid_extrema(0);
    let first: f64 = raw.iter().map(|&(n, a, b)| n as f64 * (a.abs() + b.abs())).sum();
    let spread = hi - lo + 2.0 * PI / THETA_GRID as f64 * first;
    let mut s = f64::INFINITY;
    if curv > 0.0 {
        s = s.min(0.9 * nu / curv);
    }
    if spread > 0.0 {
        s = s.min(0.5 * RHO0 / spread);
    }
    if !s.is_finite() {
        s = 0.0;
    }
    RadiusFunction::from_harmonics(RHO0, raw.into_iter().map(|(n, a, b)| (n, s * a, s * b)).collect())
}

/// Polynomial bump A(1 − |x − x0|²/r²)³₊.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn value(&self, x: &[f64]) -> f64 {
        let u: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (self.radius * self.radius);
        if u >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - u).powi(3)
        }
    }

    /// Σ_{|α|≤2} ‖D^α f‖∞ from the closed-form maxima: |f| ≤ A, |∂_i f| ≤ 96A/(25√5 r),
    /// |∂_ii f| ≤ 6A/r², |∂_ij f| ≤ 3A/r².
    pub fn c2_norm(&self) -> f64 {
        let d = self.center.len() as f64;
        let r = self.radius;
        self.amplitude.abs()
            * (1.0 + d * 96.0 / (25.0 * 5f64.sqrt() * r) + d * 6.0 / (r * r) + d * (d - 1.0) / 2.0 * 3.0 / (r * r))
    }

    pub fn support_inside_unit_cube(&self) -> bool {
        self.center.iter().all(|&c| c - self.radius >= -1e-12 && c + self.radius <= 1.0 + 1e-12)
    }

    fn normalized(center: Vec<f64>, radius: f64, fraction: f64) -> Self {
        let mut b = Self { center, radius, amplitude: 1.0 };
        b.amplitude = fraction / b.c2_norm();
        b
    }
}

/// Perturbed sphere: R(u) = r0(1 + Σ c_α u^α) over monomials of degree 1..=3 in the unit direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceField {
    pub r0: f64,
    /// (exponents, coefficient)
    pub terms: Vec<([u32; 3], f64)>,
}

impl SurfaceField {
    pub fn radius(&self, u: &[f64; 3]) -> f64 {
        let p: f64 = self
            .terms
            .iter()
            .map(|(e, c)| c * u[0].powi(e[0] as i32) * u[1].powi(e[1] as i32) * u[2].powi(e[2] as i32))
            .sum();
        self.r0 * (1.0 + p)
    }

    /// Implicit function F(x) = |x| − R(x/|x|) (x relative to the center).
    fn implicit(&self, x: &Vector3<f64>) -> f64 {
        let n = x.norm();
        let u = [x[0] / n, x[1] / n, x[2] / n];
        n - self.radius(&u)
    }

    /// Largest |principal curvature| over a Fibonacci sphere of `samples` directions.
    pub fn max_curvature(&self, samples: usize) -> f64 {
        fibonacci_sphere(samples)
            .iter()
            .map(|u| {
                let p = Vector3::from(*u) * self.radius(u);
                implicit_curvatures(|x| self.implicit(x), &p).iter().fold(0.0f64, |m, k| m.max(k.abs()))
            })
            .fold(0.0, f64::max)
    }

    pub fn radius_range(&self, samples: usize) -> (f64, f64) {
        fibonacci_sphere(samples)
            .iter()
            .map(|u| self.radius(u))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }
}

pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Principal curvatures of the level set {F = 0} at p: eigenvalues of P H P / |∇F| on the
/// tangent plane (finite-difference gradient and Hessian).
pub fn implicit_curvatures(f: impl Fn(&Vector3<f64>) -> f64, p: &Vector3<f64>) -> [f64; 2] {
    let h = 1e-4;
    let e = |i: usize| {
        let mut v = Vector3::zeros();
        v[i] = h;
        v
    };
    let f0 = f(p);
    let mut g = Vector3::zeros();
    let mut hess = Matrix3::zeros();
    for i in 0..3 {
        let (fp, fm) = (f(&(p + e(i))), f(&(p - e(i))));
        g[i] = (fp - fm) / (2.0 * h);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let v = (f(&(p + e(i) + e(j))) - f(&(p + e(i) - e(j))) - f(&(p - e(i) + e(j))) + f(&(p - e(i) - e(j))))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let gn = g.norm();
    let n = g / gn;
    let proj = Matrix3::identity() - n * n.transpose();
    let shape = proj * hess * proj / gn;
    let eig = SymmetricEigen::new(shape).eigenvalues;
    // drop the eigenvalue belonging to the normal direction (≈ 0)
    let mut v = [eig[0], eig[1], eig[2]];
    v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    [v[1], v[2]]
}

/// Intersection of balls whose boundaries pass through center ± half_width·e_axis.
#[derive(Clone, Debug, PartialEq)]
pub struct BallCluster {
    pub radius: f64,
    /// (axis, sign, half_width) per face.
    pub faces: Vec<(usize, f64, f64)>,
}

impl BallCluster {
    fn ball_center(&self, face: &(usize, f64, f64)) -> [f64; 3] {
        let mut c = [0.0; 3];
        c[face.0] = -face.1 * (self.radius - face.2);
        c
    }

    /// max over faces of |x − c_f| − R (≤ 0 inside); x relative to the cluster center.
    pub fn level(&self, x: &[f64; 3]) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let c = self.ball_center(f);
                ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt() - self.radius
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Star(RadiusFunction),
    Surface(SurfaceField),
    Balls(BallCluster),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartoonSpec {
    pub dim: usize,
    pub nu: f64,
    /// Translate y of the set B.
    pub center: Vec<f64>,
    pub boundary: Boundary,
    pub f0: Bump,
    pub f1: Bump,
    /// Number of C² boundary pieces.
    pub pieces: usize,
    pub seed: u64,
}

fn draw_bumps(rng: &mut ChaCha8Rng, dim: usize, center: &[f64]) -> (Bump, Bump) {
    let c0: Vec<f64> = (0..dim).map(|_| rng.random_range(0.35..0.65)).collect();
    let r0 = rng.random_range(0.2..0.3);
    let f0 = Bump::normalized(c0, r0, rng.random_range(0.5..1.0));
    // f1 is centred on B so the jump is present along the whole boundary
    let f1 = Bump::normalized(center.to_vec(), 0.5, 1.0);
    (f0, f1)
}

impl CartoonSpec {
    /// 2D cartoon with a seeded star set and bumps.
    pub fn random_2d(nu: f64, seed: u64) -> Self {
        let boundary = Boundary::Star(random_star_set(nu, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let center = vec![0.5, 0.5];
        let (f0, f1) = draw_bumps(&mut rng, 2, &center);
        Self { dim: 2, nu, center, boundary, f0, f1, pieces: 1, seed }
    }

    /// The same image without the jump (f1 ≡ 0).
    pub fn smooth_part(&self) -> Self {
        let mut s = self.clone();
        s.f1.amplitude = 0.0;
        s
    }

    /// True when x − y ∈ B.
    pub fn inside(&self, x: &[f64]) -> bool {
        self.level(x) <= 0.0
    }

    /// Signed membership quantity (≤ 0 inside).
    fn level(&self, x: &[f64]) -> f64 {
        match &self.boundary {
            Boundary::Star(r) => {
                let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
                (dx * dx + dy * dy).sqrt() - r.rho(dy.atan2(dx))
            }
            Boundary::Surface(s) => {
                let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if n == 0.0 {
                    return -s.r0;
                }
                n - s.radius(&[d[0] / n, d[1] / n, d[2] / n])
            }
            Boundary::Balls(b) => b.level(&[x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]]),
        }
    }

    /// Analytic reference f0(x) + f1(x)·χ_B(x − y).
    pub fn value(&self, x: &[f64]) -> f64 {
        self.f0.value(x) + if self.inside(x) { self.f1.value(x) } else { 0.0 }
    }

    /// Independent check of containment, C² norms and curvature.
    pub fn validate(&self) -> Result<()> {
        for f in [&self.f0, &self.f1] {
            if f.c2_norm() > 1.0 + 1e-12 {
                return Err(Error::Constraint(format!("bump C² norm {} > 1", f.c2_norm())));
            }
            if !f.support_inside_unit_cube() {
                return Err(Error::Constraint("bump support leaves the unit cube".into()));
            }
        }
        match &self.boundary {
            Boundary::Star(r) => {
                r.validate(self.nu)?;
                if self.center.iter().any(|&c| c - r.rho0 < 0.0 || c + r.rho0 > 1.0) {
                    return Err(Error::Constraint("star set leaves [0,1]²".into()));
                }
            }
            Boundary::Surface(s) => {
                let k = s.max_curvature(2000);
                if k > self.nu {
                    return Err(Error::Constraint(format!("principal curvature {k:.4} exceeds ν = {}", self.nu)));
                }
                let (lo, hi) = s.radius_range(2000);
                if lo <= 0.0 || self.center.iter().any(|&c| c - hi < 0.0 || c + hi > 1.0) {
                    return Err(Error::Constraint("surface leaves [0,1]³".into()));
                }
            }
            Boundary::Balls(b) => {
                if 1.0 / b.radius > self.nu {
                    return Err(Error::Constraint(format!("face curvature {} exceeds ν = {}", 1.0 / b.radius, self.nu)));
                }
                if b.faces.len() > self.pieces {
                    return Err(Error::Constraint("more faces than allowed pieces".into()));
                }
                // an axis with both faces is bounded by the half widths; any other axis by R,
                // since every ball is centred on a face axis
                let per_axis: Vec<f64> = (0..3)
                    .map(|ax| {
                        let sides: Vec<_> = b.faces.iter().filter(|f| f.0 == ax).collect();
                        if sides.len() == 2 {
                            sides.iter().map(|f| f.2).fold(0.0, f64::max)
                        } else {
                            b.radius
                        }
                    })
                    .collect();
                if self.center.iter().zip(&per_axis).any(|(&c, &r)| c - r < 0.0 || c + r > 1.0) {
                    return Err(Error::Constraint("ball cluster leaves [0,1]³".into()));
                }
            }
        }
        Ok(())
    }

    pub fn to_config(&self) -> String {
        let mut kv = KeyValues::default();
        kv.set("dim", self.dim);
        kv.set("nu", fmt_f64(self.nu));
        kv.set("seed", self.seed);
        kv.set("pieces", self.pieces);
        kv.set("center", self.center.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","));
        for (name, b) in [("f0", &self.f0), ("f1", &self.f1)] {
            kv.set(&format!("{name}.center"), b.center.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","));
            kv.set(&format!("{name}.radius"), fmt_f64(b.radius));
            kv.set(&format!("{name}.amplitude"), fmt_f64(b.amplitude));
        }
        match &self.boundary {
            Boundary::Star(r) => {
                kv.set("boundary", "star");
                kv.set("rho0", fmt_f64(r.rho0));
                kv.set("base", fmt_f64(r.base));
                for &(n, a, b) in &r.harmonics {
                    kv.set(&format!("harmonic.{n}"), format!("{},{}", fmt_f64(a), fmt_f64(b)));
                }
            }
            Boundary::Surface(s) => {
                kv.set("boundary", "surface");
                kv.set("r0", fmt_f64(s.r0));
                for (e, c) in &s.terms {
                    kv.set(&format!("term.{}{}{}", e[0], e[1], e[2]), fmt_f64(*c));
                }
            }
            Boundary::Balls(b) => {
                kv.set("boundary", "balls");
                kv.set("ball_radius", fmt_f64(b.radius));
                for (i, f) in b.faces.iter().enumerate() {
                    kv.set(&format!("face.{i}"), format!("{},{},{}", f.0, f.1, fmt_f64(f.2)));
                }
            }
        }
        kv.to_string()
    }
}

/// 3D cartoon: `pieces == 1` gives a perturbed sphere with principal curvatures ≤ ν;
/// `pieces > 1` intersects min(pieces, 6) balls of radius R ≥ 1/ν (each face has curvature 1/R).
pub fn surface_cartoon_3d(nu: f64, pieces: usize, seed: u64) -> Result<CartoonSpec> {
    if pieces == 0 {
        return Err(Error::Constraint("need at least one boundary piece".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = vec![0.5; 3];
    let boundary = if pieces == 1 {
        let r0 = 0.35;
        if 1.0 / r0 > 0.9 * nu {
            return Err(Error::Constraint(format!("ν = {nu} is below the curvature 1/{r0} of the base sphere")));
        }
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut terms = Vec::new();
        for deg in 1..=3u32 {
            for a in 0..=deg {
                for b in 0..=deg - a {
                    let e = [a, b, deg - a - b];
                    terms.push((e, normal.sample(&mut rng) * 0.1 / deg as f64));
                }
            }
        }
        let base = SurfaceField { r0, terms };
        // shrink the perturbation until curvature ≤ 0.9ν and radius stays in [0.7 r0, 0.4]
        let mut s = 1.0;
        loop {
            let f = SurfaceField { r0, terms: base.terms.iter().map(|(e, c)| (*e, c * s)).collect() };
            let (lo, hi) = f.radius_range(2000);
            if f.max_curvature(2000) <= 0.9 * nu && lo >= 0.7 * r0 && hi <= 0.4 {
                break Boundary::Surface(f);
            }
            s *= 0.8;
        }
    } else {
        let count = pieces.min(6);
        let radius = if count == 6 { (1.1 / nu).max(1.0) } else { (1.1 / nu).max(0.3) };
        if radius > 0.45 && count < 6 || 1.0 / radius > nu {
            return Err(Error::Constraint(format!("ν = {nu} too small for a {count}-face cluster in [0,1]³")));
        }
        let faces = (0..count)
            .map(|i| {
                let hw = rng.random_range(0.25..0.3_f64).min(radius);
                (i / 2, if i % 2 == 0 { 1.0 } else { -1.0 }, hw)
            })
            .collect();
        Boundary::Balls(BallCluster { radius, faces })
    };
    let mut bump_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let (f0, f1) = draw_bumps(&mut bump_rng, 3, &center);
    Ok(CartoonSpec { dim: 3, nu, center, boundary, f0, f1, pieces: if pieces == 1 { 1 } else { pieces.min(6) }, seed })
}

/// Pixel (voxel) centers sample f0 and f1; the indicator is the fraction of a 4^d sub-grid inside B.
pub fn rasterize_cartoon(spec: &CartoonSpec, extents: &[usize]) -> Result<Raster> {
    if extents.len() != spec.dim || extents.iter().any(|&n| n == 0 || !n.is_power_of_two()) {
        return Err(Error::Shape(format!("extents {extents:?} must be {} powers of two", spec.dim)));
    }
    const SUB: usize = 4;
    let d = spec.dim;
    let inner: usize = extents[1..].iter().product();
    let mut data = vec![0.0; extents.iter().product()];
    data.par_chunks_mut(inner).enumerate().for_each(|(i0, chunk)| {
        let mut x = vec![0.0; d];
        let mut sub = vec![0.0; d];
        for (r, out) in chunk.iter_mut().enumerate() {
            let mut idx = vec![i0; d];
            let mut rem = r;
            for ax in (1..d).rev() {
                idx[ax] = rem % extents[ax];
                rem /= extents[ax];
            }
            for ax in 0..d {
                x[ax] = (idx[ax] as f64 + 0.5) / extents[ax] as f64;
            }
            let f1 = spec.f1.value(&x);
            let mut v = spec.f0.value(&x);
            if f1 != 0.0 {
                let mut hits = 0usize;
                let total = SUB.pow(d as u32);
                for s in 0..total {
                    let mut q = s;
                    for ax in 0..d {
                        let t = q % SUB;
                        q /= SUB;
                        sub[ax] = (idx[ax] as f64 + (t as f64 + 0.5) / SUB as f64) / extents[ax] as f64;
                    }
                    if spec.inside(&sub) {
                        hits += 1;
                    }
                }
                v += f1 * hits as f64 / total as f64;
            }
            *out = v;
        }
    });
    Raster::new(extents.to_vec(), data)
}

/// ∫(raster − f)² over [0,1]^d, the raster read as piecewise constant, by a q^d midpoint rule per pixel.
pub fn l2_squared_error(spec: &CartoonSpec, raster: &Raster, q: usize) -> f64 {
    let d = spec.dim;
    let ext = &raster.extents;
    let cell: f64 = ext.iter().map(|&n| 1.0 / n as f64).product::<f64>() / (q.pow(d as u32)) as f64;
    let inner: usize = ext[1..].iter().product();
    raster
        .data
        .par_chunks(inner)
        .enumerate()
        .map(|(i0, chunk)| {
            let mut acc = 0.0;
            let mut x = vec![0.0; d];
            for (r, &pv) in chunk.iter().enumerate() {
                let mut idx = vec![i0; d];
                let mut rem = r;
                for ax in (1..d).rev() {
                    idx[ax] = rem % ext[ax];
                    rem /= ext[ax];
                }
                for s in 0..q.pow(d as u32) {
                    let mut t = s;
                    for ax in 0..d {
                        x[ax] = (idx[ax] as f64 + ((t % q) as f64 + 0.5) / q as f64) / ext[ax] as f64;
                        t /= q;
                    }
                    let e = pv - spec.value(&x);
                    acc += e * e;
                }
            }
            acc
        })
        .sum::<f64>()
        * cell
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_when_harmonics_vanish() {
        let r = RadiusFunction::circle(RHO0);
        assert_eq!(r.rho(1.234), RHO0);
        assert_eq!(r.rho_d2(0.5), 0.0);
        r.validate(1e-9).unwrap();
    }

    #[test]
    fn star_set_bounds_and_determinism() {
        for seed in 0..20 {
            let r = random_star_set(10.0, seed);
            assert_eq!(r, random_star_set(10.0, seed));
            assert!(r.grid_max_d2() <= 9.0 + 1e-12);
            assert!(r.curvature_bound() <= 9.0 + 1e-9);
            r.validate(10.0).unwrap();
            let lo = (0..4096).map(|i| r.rho(i as f64 * 2.0 * PI / 4096.0)).fold(f64::INFINITY, f64::min);
            assert!(lo >= RHO0 / 2.0 - 1e-3);
        }
    }

    #[test]
    fn analytic_second_derivative_matches_finite_difference() {
        let r = random_star_set(10.0, 3);
        let h = 1e-4;
        for i in 0..50 {
            let t = i as f64 * 0.13;
            let fd = (r.rho(t + h) - 2.0 * r.rho(t) + r.rho(t - h)) / (h * h);
            assert!((fd - r.rho_d2(t)).abs() < 1e-5);
            let fd1 = (r.rho(t + h) - r.rho(t - h)) / (2.0 * h);
            assert!((fd1 - r.rho_d1(t)).abs() < 1e-7);
        }
    }

    #[test]
    fn bump_c2_norm_matches_numeric_derivatives() {
        let b = Bump { center: vec![0.5, 0.5], radius: 0.3, amplitude: 1.0 };
        // numeric sup of each derivative on a fine grid
        let h = 1e-4;
        let mut sup = [0f64; 6];
        let n = 240;
        for i in 0..=n {
            for j in 0..=n {
                let x = [0.2 + 0.6 * i as f64 / n as f64, 0.2 + 0.6 * j as f64 / n as f64];
                let f = |dx: f64, dy: f64| b.value(&[x[0] + dx, x[1] + dy]);
                let vals = [
                    f(0.0, 0.0),
                    (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h),
                    (f(0.0, h) - f(0.0, -h)) / (2.0 * h),
                    (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h),
                    (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h),
                    (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h),
                ];
                for (s, v) in sup.iter_mut().zip(vals) {
                    *s = s.max(v.abs());
                }
            }
        }
        let numeric = sup[0] + sup[1] + sup[2] + sup[3] + sup[4] + sup[5];
        assert!((numeric - b.c2_norm()).abs() / b.c2_norm() < 5e-3, "{numeric} vs {}", b.c2_norm());
    }

    #[test]
    fn point_membership_against_polar_inequality() {
        let spec = CartoonSpec::random_2d(10.0, 5);
        let Boundary::Star(r) = &spec.boundary else { panic!() };
        for i in 0..10 {
            let t = i as f64 * 0.628;
            for (scale, inside) in [(0.9, true), (1.1, false)] {
                let rad = r.rho(t) * scale;
                let p = [0.5 + rad * t.cos(), 0.5 + rad * t.sin()];
                assert_eq!(spec.inside(&p), inside);
            }
        }
    }

    #[test]
    fn sphere_curvature_is_inverse_radius() {
        let s = SurfaceField { r0: 0.3, terms: vec![] };
        assert!((s.max_curvature(200) - 1.0 / 0.3).abs() < 1e-4);
        let k = implicit_curvatures(|x| x.norm() - 0.3, &Vector3::new(0.3, 0.0, 0.0));
        assert!((k[0] - 1.0 / 0.3).abs() < 1e-4 && (k[1] - 1.0 / 0.3).abs() < 1e-4);
    }

    #[test]
    fn cartoon_specs_validate() {
        CartoonSpec::random_2d(10.0, 1).validate().unwrap();
        surface_cartoon_3d(10.0, 1, 2).unwrap().validate().unwrap();
        let cube = surface_cartoon_3d(10.0, 6, 3).unwrap();
        cube.validate().unwrap();
        assert_eq!(cube.pieces, 6);
        assert!(surface_cartoon_3d(1.0, 1, 0).is_err());
        assert_eq!(surface_cartoon_3d(10.0, 1, 4).unwrap(), surface_cartoon_3d(10.0, 1, 4).unwrap());
    }

    #[test]
    fn jump_along_a_ray() {
        let spec = CartoonSpec::random_2d(10.0, 11);
        let Boundary::Star(r) = &spec.boundary else { panic!() };
        let t: f64 = 0.7;
        let crossing = r.rho(t);
        let at = |s: f64| spec.value(&[0.5 + s * t.cos(), 0.5 + s * t.sin()]);
        let eps = 1e-9;
        let jump = at(crossing - eps) - at(crossing + eps);
        let p = [0.5 + crossing * t.cos(), 0.5 + crossing * t.sin()];
        assert!((jump - spec.f1.value(&p)).abs() < 1e-6);
        assert!(jump > 0.0);
    }
}
