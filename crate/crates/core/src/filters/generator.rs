//! Shearlet and scaling generators, compact (separable, from a filter pair) and
//! band-limited classical (Meyer-type, Parseval reference).

use std::sync::Arc;

use num_complex::Complex64;

use super::classical;
use super::factor::FilterPair;
use super::profile::{m0_abs_closed, scaling_abs_closed, CompactProfile, DEFAULT_J_TRUNC};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    CompactSeparable,
    BandLimitedClassical,
    /// Identically zero; used for degenerate-system checks.
    Zero,
}

/// Scaling generator, or shearlet whose wavelet direction is `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Scaling,
    Shearlet { axis: usize },
}

/// Decay exponents of |ψ̂(ξ)| ≤ C min{1,|ξ_a|^α} min{1,|ξ_a|^{−γ}} Π_{i≠a} min{1,|ξ_i|^{−γ}}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayParams {
    pub alpha: f64,
    pub gamma: f64,
    pub c: f64,
    /// α > γ > 3 (frame hypothesis).
    pub frame_grade: bool,
    /// α > 5, γ ≥ 4 in 2D; α > 8, γ ≥ 4 in 3D.
    pub sparsity_grade: bool,
}

impl DecayParams {
    fn infinite() -> Self {
        Self { alpha: f64::INFINITY, gamma: f64::INFINITY, c: 1.0, frame_grade: true, sparsity_grade: true }
    }

    /// The envelope min{1,|x_a|^α} min{1,|x_a|^{−γ}} Π_{i≠a} min{1,|x_i|^{−γ}}.
    pub fn envelope(&self, xi: &[f64], axis: usize) -> f64 {
        let mut e = 1.0;
        for (i, &x) in xi.iter().enumerate() {
            let ax = x.abs();
            if i == axis && ax < 1.0 {
                e *= ax.powf(self.alpha);
            }
            if ax > 1.0 {
                e *= ax.powf(-self.gamma);
            }
        }
        e
    }
}

#[derive(Clone, Debug)]
enum Body {
    Compact(Arc<CompactProfile>),
    Classical,
    Zero,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub dim: usize,
    pub kind: GeneratorKind,
    pub role: Role,
    /// Spatial support box per axis (compact kind only).
    pub support_hint: Option<Vec<(f64, f64)>>,
    pub decay: DecayParams,
    body: Body,
}

impl Generator {
    pub fn zero(dim: usize, role: Role) -> Self {
        Self {
            dim,
            kind: GeneratorKind::Zero,
            role,
            support_hint: Some(vec![(0.0, 0.0); dim]),
            decay: DecayParams::infinite(),
            body: Body::Zero,
        }
    }

    pub fn compact_profile(&self) -> Option<&Arc<CompactProfile>> {
        match &self.body {
            Body::Compact(p) => Some(p),
            _ => None,
        }
    }

    /// Exact spectrum (Horner products for compact generators).
    pub fn spectrum(&self, xi: &[f64]) -> Complex64 {
        assert_eq!(xi.len(), self.dim);
        match &self.body {
            Body::Zero => Complex64::new(0.0, 0.0),
            Body::Compact(p) => match self.role {
                Role::Scaling => xi.iter().map(|&x| p.phi_exact(x)).product(),
                Role::Shearlet { axis } => xi
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if i == axis { p.wavelet_exact(x) } else { p.phi_exact(2.0 * x) })
                    .product(),
            },
            Body::Classical => Complex64::new(self.classical_value(xi), 0.0),
        }
    }

    /// Table-driven spectrum used by the transform and the frame-bound estimates.
    pub fn spectrum_fast(&self, xi: &[f64]) -> Complex64 {
        match &self.body {
            Body::Zero => Complex64::new(0.0, 0.0),
            Body::Compact(p) => match self.role {
                Role::Scaling => xi.iter().map(|&x| p.phi(x)).product(),
                Role::Shearlet { axis } => xi
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if i == axis { p.wavelet(x) } else { p.bump(x) })
                    .product(),
            },
            Body::Classical => Complex64::new(self.classical_value(xi), 0.0),
        }
    }

    pub fn abs_fast(&self, xi: &[f64]) -> f64 {
        match &self.body {
            Body::Zero => 0.0,
            Body::Compact(p) => match self.role {
                Role::Scaling => xi.iter().map(|&x| p.phi_abs(x)).product(),
                Role::Shearlet { axis } => xi
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if i == axis { p.wavelet_abs(x) } else { p.bump_abs(x) })
                    .product(),
            },
            Body::Classical => self.classical_value(xi).abs(),
        }
    }

    fn classical_value(&self, xi: &[f64]) -> f64 {
        match self.role {
            Role::Scaling => classical::scaling_hat(xi[0], xi[1]),
            Role::Shearlet { axis } => {
                let (a, b) = if axis == 0 { (xi[0], xi[1]) } else { (xi[1], xi[0]) };
                classical::shearlet_hat(a, b)
            }
        }
    }

    /// Spectra of band-limited generators are cut along the cone seams in ξ-space.
    pub fn is_cone_masked(&self) -> bool {
        self.kind == GeneratorKind::BandLimitedClassical
    }

    /// Generator-frequency at which the finest scale meets the raster Nyquist frequency.
    /// The compact wavelet factor vanishes on η ∈ Z/4, so its main lobe peak 1/8 is used;
    /// the classical partition is exact up to 1/4.
    pub fn nyquist_eta(&self) -> f64 {
        match self.kind {
            GeneratorKind::BandLimitedClassical => classical::NYQUIST_ETA,
            _ => 0.125,
        }
    }
}

/// ψ̂(ξ) = m1(4ξ1) φ̂(ξ1) φ̂(2ξ2) and the matching scaling generator φ̂(ξ1)φ̂(ξ2).
pub fn compact_shearlet_2d(pair: &FilterPair) -> Generator {
    compact_generators(pair, 2).remove(1)
}

/// ψ, ψ̃, ψ̆ of the separable 3D construction (wavelet along axis 0, 1, 2).
pub fn compact_shearlets_3d(pair: &FilterPair) -> (Generator, Generator, Generator) {
    let mut g = compact_generators(pair, 3);
    let c = g.remove(3);
    let b = g.remove(2);
    let a = g.remove(1);
    (a, b, c)
}

/// [φ, ψ_axis0, ψ_axis1, (ψ_axis2)] sharing one profile.
pub fn compact_generators(pair: &FilterPair, dim: usize) -> Vec<Generator> {
    assert!(dim == 2 || dim == 3);
    let profile = CompactProfile::shared(pair, DEFAULT_J_TRUNC);
    let decay = fit_decay(pair, dim);
    let d = (pair.h0.len() - 1) as f64;
    let phi_box = (0.0, 2.0 * d);
    let mut out = vec![Generator {
        dim,
        kind: GeneratorKind::CompactSeparable,
        role: Role::Scaling,
        support_hint: Some(vec![phi_box; dim]),
        decay,
        body: Body::Compact(profile.clone()),
    }];
    for axis in 0..dim {
        // wavelet factor: Σ h1[n] φ(x − 4n) → [0, 4D + 2D]; bump factor φ(x/2)/2 → [0, D]
        let support = (0..dim).map(|i| if i == axis { (0.0, 6.0 * d) } else { (0.0, d) }).collect();
        out.push(Generator {
            dim,
            kind: GeneratorKind::CompactSeparable,
            role: Role::Shearlet { axis },
            support_hint: Some(support),
            decay,
            body: Body::Compact(profile.clone()),
        });
    }
    out
}

/// (φ, ψ, ψ̃) of the band-limited classical construction.
pub fn classical_bandlimited_2d() -> (Generator, Generator, Generator) {
    let make = |role| Generator {
        dim: 2,
        kind: GeneratorKind::BandLimitedClassical,
        role,
        support_hint: None,
        decay: DecayParams::infinite(),
        body: Body::Classical,
    };
    (make(Role::Scaling), make(Role::Shearlet { axis: 0 }), make(Role::Shearlet { axis: 1 }))
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fits α near the origin of the wavelet factor and γ from the dyadic-shell envelope of |φ̂|.
pub fn fit_decay(pair: &FilterPair, dim: usize) -> DecayParams {
    let j = DEFAULT_J_TRUNC;
    // |w(x)| = |m1(4x)||φ̂(x)|, with |m1(y)| = |m0(y + 1/2)| in closed form.
    let w_abs = |x: f64| m0_abs_closed(pair, 4.0 * x + 0.5) * scaling_abs_closed(pair, x, j);

    let (lx, ly): (Vec<f64>, Vec<f64>) = (0..12)
        .map(|i| {
            let x = 1e-4 * 10f64.powf(i as f64 / 11.0);
            (x.ln(), w_abs(x).ln())
        })
        .unzip();
    let alpha = least_squares_slope(&lx, &ly);

    let shells = 2..=9;
    let per_shell = 512;
    let (sx, sy): (Vec<f64>, Vec<f64>) = shells
        .map(|a| {
            let lo = 2f64.powi(a);
            let m = (0..per_shell)
                .map(|i| scaling_abs_closed(pair, lo * 2f64.powf((i as f64 + 0.318) / per_shell as f64), j))
                .fold(0.0, f64::max);
            ((lo * 1.5).ln(), m.ln())
        })
        .unzip();
    let gamma = -least_squares_slope(&sx, &sy);

    // C: sup of |w| / envelope times sup of |φ̂(2y)| / envelope, on dense 1D grids.
    let env = |x: f64, with_alpha: bool| {
        let ax = x.abs();
        let mut e = 1.0;
        if with_alpha && ax < 1.0 {
            e *= ax.powf(alpha);
        }
        if ax > 1.0 {
            e *= ax.powf(-gamma);
        }
        e
    };
    let grid: Vec<f64> = (0..4000).map(|i| 1e-4 * (1e7f64).powf(i as f64 / 3999.0)).collect();
    let cw = grid.iter().map(|&x| w_abs(x) / env(x, true)).fold(0.0, f64::max);
    let cb = grid
        .iter()
        .map(|&y| scaling_abs_closed(pair, 2.0 * y, j) / env(y, false))
        .fold(1.0f64, f64::max);
    let c = 1.5 * cw * cb.powi(dim as i32 - 1);

    let frame_grade = alpha > gamma && gamma > 3.0;
    let sparsity_grade = if dim == 2 { alpha > 5.0 && gamma >= 4.0 } else { alpha > 8.0 && gamma >= 4.0 };
    DecayParams { alpha, gamma, c, frame_grade, sparsity_grade }
}
