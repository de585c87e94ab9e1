//! Frame-bound estimates for 2D cone-adapted systems: the Calderón-type sum Θ, its
//! cross-correlation suprema Γ0..Γ2, the lattice sum R(c) and the resulting sandwich
//! (L_inf − R)/det M_c ≤ A ≤ B ≤ (L_sup + R)/det M_c, all from grid extrema.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::filters::Generator;
use crate::io::fmt_f64;
use crate::systems::SystemSpec;
use crate::transform::{Raster, TransformPlan};
use crate::{Error, Result};

/// Relative level below which a generator spectrum counts as zero when pruning terms.
pub const PRUNE_EPS: f64 = 1e-13;
pub const DEFAULT_M_RADIUS: i64 = 32;
/// Scales beyond the grid extent that are still summed (the wavelet factor needs
/// 2^{−j}|ξ| down to 1/32 before it is negligible).
pub const J_MARGIN: u32 = 6;

/// Nested product grid: each axis holds 0 and ±2^{g_min + i/per_octave} up to 2^{g_max}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqGrid {
    pub g_min: i32,
    pub g_max: i32,
    pub per_octave: usize,
}

impl Default for FreqGrid {
    fn default() -> Self {
        Self { g_min: -5, g_max: 5, per_octave: 26 }
    }
}

impl FreqGrid {
    pub fn axis(&self) -> Vec<f64> {
        let steps = (self.g_max - self.g_min) as usize * self.per_octave;
        let pos: Vec<f64> = (0..=steps)
            .map(|i| 2f64.powf(self.g_min as f64 + i as f64 / self.per_octave as f64))
            .collect();
        let mut out: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
        out.push(0.0);
        out.extend(pos);
        out
    }

    pub fn points_per_axis(&self) -> usize {
        2 * ((self.g_max - self.g_min) as usize * self.per_octave + 1) + 1
    }

    /// Scales summed in Θ for this grid.
    pub fn j_cap(&self) -> u32 {
        self.g_max.max(0) as u32 + J_MARGIN
    }

    pub fn refined(&self) -> Self {
        Self { per_octave: self.per_octave * 2, ..*self }
    }

    pub fn describe(&self) -> String {
        format!(
            "log-product grid 0,±2^[{},{}] with {} points/octave ({} per axis)",
            self.g_min,
            self.g_max,
            self.per_octave,
            self.points_per_axis()
        )
    }
}

/// Half-widths of the box outside which |ĝ| < PRUNE_EPS·max|ĝ|, from a scan of [−8, 8]².
pub fn effective_box(g: &Generator) -> [f64; 2] {
    const N: usize = 2048;
    const R: f64 = 8.0;
    let h = 2.0 * R / N as f64;
    let coord = |i: usize| -R + i as f64 * h;
    let vals: Vec<f64> = (0..=N)
        .into_par_iter()
        .flat_map_iter(|a| (0..=N).map(move |b| (a, b)))
        .map(|(a, b)| g.abs_fast(&[coord(a), coord(b)]))
        .collect();
    let max = vals.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return [0.0, 0.0];
    }
    let mut r = [0.0f64; 2];
    for a in 0..=N {
        for b in 0..=N {
            if vals[a * (N + 1) + b] >= PRUNE_EPS * max {
                r[0] = r[0].max(coord(a).abs() + h);
                r[1] = r[1].max(coord(b).abs() + h);
            }
        }
    }
    r
}

/// Generators and pruning boxes of a 2D system.
pub struct ThetaContext<'a> {
    pub spec: &'a SystemSpec,
    phi_box: [f64; 2],
    psi_box: [[f64; 2]; 2],
    masked: bool,
}

/// Θ(ξ,ω) split into the scaling term |φ̂(ξ)||φ̂(ξ+ω)| and the two cone sums Θ1, Θ2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ThetaParts {
    pub scaling: f64,
    pub cones: [f64; 2],
    /// Σ|ĝ| of the first factors over the evaluated terms.
    pub linear: f64,
}

impl ThetaParts {
    pub fn total(&self) -> f64 {
        self.scaling + self.cones[0] + self.cones[1]
    }

    /// Θ0 = scaling, Θ1, Θ2 = cones.
    pub fn part(&self, i: usize) -> f64 {
        if i == 0 {
            self.scaling
        } else {
            self.cones[i - 1]
        }
    }
}

fn in_cone(axis: usize, xi: [f64; 2]) -> bool {
    let a = xi[axis].abs();
    let b = xi[1 - axis].abs();
    if axis == 0 {
        b <= a
    } else {
        b < a
    }
}

fn shear_cap(j: u32) -> i64 {
    crate::systems::shear_range(j)
}

impl<'a> ThetaContext<'a> {
    pub fn new(spec: &'a SystemSpec) -> Result<Self> {
        if spec.dim != 2 {
            return Err(Error::Constraint("frame-bound estimates are implemented for 2D systems".into()));
        }
        Ok(Self {
            spec,
            phi_box: effective_box(spec.scaling()),
            psi_box: [effective_box(spec.shearlet(0)), effective_box(spec.shearlet(1))],
            masked: spec.shearlet(0).is_cone_masked(),
        })
    }

    fn inside(b: [f64; 2], x: [f64; 2]) -> bool {
        x[0].abs() <= b[0] && x[1].abs() <= b[1]
    }

    /// True when the cross term with shift ω can be nonzero somewhere.
    fn overlaps(b: [f64; 2], omega: [f64; 2]) -> bool {
        omega[0].abs() <= 2.0 * b[0] && omega[1].abs() <= 2.0 * b[1]
    }

    pub fn theta(&self, xi: [f64; 2], omega: [f64; 2], j_cap: u32) -> ThetaParts {
        self.theta_parts(xi, omega, j_cap, [true; 3])
    }

    /// Θ with only the selected parts (scaling, cone 1, cone 2) evaluated.
    pub fn theta_parts(&self, xi: [f64; 2], omega: [f64; 2], j_cap: u32, which: [bool; 3]) -> ThetaParts {
        let phi = self.spec.scaling();
        let mut out = ThetaParts::default();
        let shifted = [xi[0] + omega[0], xi[1] + omega[1]];
        if which[0] && Self::inside(self.phi_box, xi) {
            let a = phi.abs_fast(&xi);
            out.linear += a;
            if Self::inside(self.phi_box, shifted) {
                out.scaling = a * phi.abs_fast(&shifted);
            }
        }
        for axis in 0..2 {
            if which[axis + 1] {
                let (v, l) = self.cone_sum(axis, xi, omega, j_cap);
                out.cones[axis] = v;
                out.linear += l;
            }
        }
        out
    }

    /// Σ_{j<j_cap} Σ_{|k|≤⌈2^{j/2}⌉} |ψ̂(B_{jk}ξ)||ψ̂(B_{jk}ξ + ω)| with B_{jk} = S_kᵀA_{2^{−j}} for the
    /// first cone and S_kÃ_{2^{−j}} for the second (coordinates written along the cone axis).
    /// Returns the cross sum and Σ|ψ̂(B_{jk}ξ)| over the same terms.
    fn cone_sum(&self, axis: usize, xi: [f64; 2], omega: [f64; 2], j_cap: u32) -> (f64, f64) {
        let g = self.spec.shearlet(axis);
        let bx = self.psi_box[axis];
        let o = 1 - axis;
        let (ra, ro) = (bx[axis], bx[o]);
        if !Self::overlaps(bx, omega) || (self.masked && !in_cone(axis, xi)) {
            return (0.0, 0.0);
        }
        let (wa, wo) = (omega[axis], omega[o]);
        let mut sum = (0.0, 0.0);
        for j in 0..j_cap {
            let sa = 2f64.powi(-(j as i32));
            let so = 2f64.powf(-(j as f64) / 2.0);
            let ea = sa * xi[axis];
            if ea.abs() > ra || (ea + wa).abs() > ra {
                continue;
            }
            let y0 = so * xi[o];
            // η_o = k·ea + y0 must lie in [−ro, ro] ∩ [−ro − wo, ro − wo]
            let lo = (-ro).max(-ro - wo);
            let hi = ro.min(ro - wo);
            if lo > hi {
                continue;
            }
            let cap = shear_cap(j);
            let (k0, k1) = if ea == 0.0 {
                if y0 < lo || y0 > hi {
                    continue;
                }
                (-cap, cap)
            } else {
                let (p, q) = ((lo - y0) / ea, (hi - y0) / ea);
                let (p, q) = if p <= q { (p, q) } else { (q, p) };
                ((p.ceil() as i64).max(-cap), (q.floor() as i64).min(cap))
            };
            for k in k0..=k1 {
                let eo = k as f64 * ea + y0;
                let mut eta = [0.0; 2];
                eta[axis] = ea;
                eta[o] = eo;
                let mut eta2 = [0.0; 2];
                eta2[axis] = ea + wa;
                eta2[o] = eo + wo;
                if self.masked && (wa != 0.0 || wo != 0.0) {
                    // the second factor belongs to the element at ξ' = ξ + B⁻¹ω
                    let mut xi2 = xi;
                    xi2[axis] += wa / sa;
                    xi2[o] += (wo - k as f64 * wa) / so;
                    if !in_cone(axis, xi2) {
                        continue;
                    }
                }
                let a = g.abs_fast(&eta);
                sum.0 += a * g.abs_fast(&eta2);
                sum.1 += a;
            }
        }
        sum
    }

    /// Θ(·, ω) on the whole grid, reduced to (min, max) of each part and of the total.
    fn grid_extrema(&self, omega: [f64; 2], grid: &FreqGrid, which: [bool; 3]) -> GridExtrema {
        let axis = grid.axis();
        let j_cap = grid.j_cap();
        // rows in parallel; each row reduced in order, rows combined in order
        let rows: Vec<GridExtrema> = axis
            .par_iter()
            .map(|&x| {
                let mut e = GridExtrema::empty();
                for &y in &axis {
                    e.push(&self.theta_parts([x, y], omega, j_cap, which));
                }
                e
            })
            .collect();
        rows.into_iter().fold(GridExtrema::empty(), |a, b| a.merge(&b))
    }

    /// Γ_i(ω) = sup_ξ Θ_i(ξ, ω) on the grid (i = 0: scaling term).
    pub fn gamma(&self, i: usize, omega: [f64; 2], grid: &FreqGrid) -> f64 {
        assert!(i < 3);
        let skip = match i {
            0 => !Self::overlaps(self.phi_box, omega),
            _ => !Self::overlaps(self.psi_box[i - 1], omega),
        };
        if skip {
            return 0.0;
        }
        let mut which = [false; 3];
        which[i] = true;
        self.grid_extrema(omega, grid, which).max[i]
    }
}

#[derive(Clone, Copy, Debug)]
struct GridExtrema {
    /// Θ0, Θ1, Θ2, Θ, Σ|ĝ|
    min: [f64; 5],
    max: [f64; 5],
}

impl GridExtrema {
    fn empty() -> Self {
        Self { min: [f64::INFINITY; 5], max: [f64::NEG_INFINITY; 5] }
    }

    fn push(&mut self, t: &ThetaParts) {
        let v = [t.scaling, t.cones[0], t.cones[1], t.total(), t.linear];
        for i in 0..5 {
            self.min[i] = self.min[i].min(v[i]);
            self.max[i] = self.max[i].max(v[i]);
        }
    }

    fn merge(mut self, o: &Self) -> Self {
        for i in 0..5 {
            self.min[i] = self.min[i].min(o.min[i]);
            self.max[i] = self.max[i].max(o.max[i]);
        }
        self
    }
}

/// Θ(ξ, ω) of a 2D system with scales j < j_cap.
pub fn theta(spec: &SystemSpec, xi: [f64; 2], omega: [f64; 2], j_cap: u32) -> Result<f64> {
    Ok(ThetaContext::new(spec)?.theta(xi, omega, j_cap).total())
}

/// Γ_i(ω), i ∈ {0, 1, 2}, as a grid supremum.
pub fn gamma(spec: &SystemSpec, i: usize, omega: [f64; 2], grid: &FreqGrid) -> Result<f64> {
    if i > 2 {
        return Err(Error::Constraint(format!("Γ index {i} not in 0..=2")));
    }
    Ok(ThetaContext::new(spec)?.gamma(i, omega, grid))
}

/// R(c) split into the truncated lattice sum and an estimate of the remainder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSum {
    pub value: f64,
    pub tail: f64,
}

/// Σ_{0<|m|∞≤radius} (Γ0(m/c1)Γ0(−m/c1))^{1/2} + (Γ1(M_c⁻¹m)Γ1(−M_c⁻¹m))^{1/2}
/// + (Γ2(M̃_c⁻¹m)Γ2(−M̃_c⁻¹m))^{1/2}.
pub fn r_of_c(spec: &SystemSpec, grid: &FreqGrid, m_radius: i64) -> Result<LatticeSum> {
    if !(spec.c.0 > 0.0 && spec.c.1 > 0.0) || m_radius < 1 {
        return Err(Error::Constraint("need c1, c2 > 0 and m_radius ≥ 1".into()));
    }
    let ctx = ThetaContext::new(spec)?;
    let linear = ctx.grid_extrema([0.0, 0.0], grid, [true; 3]).max[4];
    Ok(lattice_sum(&ctx, grid, m_radius, linear))
}

fn lattice_sum(ctx: &ThetaContext, grid: &FreqGrid, m_radius: i64, linear: f64) -> LatticeSum {
    let (c1, c2) = ctx.spec.c;
    let mut value = 0.0;
    for m1 in -m_radius..=m_radius {
        for m2 in -m_radius..=m_radius {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            let (a, b) = (m1 as f64, m2 as f64);
            let args = [[a / c1, b / c1], [a / c1, b / c2], [a / c2, b / c1]];
            for (i, w) in args.iter().enumerate() {
                let p = ctx.gamma(i, *w, grid);
                if p > 0.0 {
                    value += (p * ctx.gamma(i, [-w[0], -w[1]], grid)).sqrt();
                }
            }
        }
    }
    LatticeSum { value, tail: lattice_tail(ctx, m_radius, linear) }
}

/// Remainder over |m|∞ > radius. For |ω|∞ = W one of η, η + ω has a coordinate ≥ W/2, so
/// Γ(ω) ≤ S·sup_{|ζ|∞≥W/2}|ĝ(ζ)| with S the grid sup of Σ|ĝ|. Outside the pruning box
/// |ĝ| < PRUNE_EPS·max|ĝ| (checked on [−8, 8]²); beyond 8 the fitted γ-decay is assumed.
/// The shell |m|∞ = r holds 8r points.
fn lattice_tail(ctx: &ThetaContext, m_radius: i64, linear: f64) -> f64 {
    let spec = ctx.spec;
    let gens = [spec.scaling(), spec.shearlet(0), spec.shearlet(1)];
    let gamma = gens.iter().map(|g| g.decay.gamma).fold(f64::INFINITY, f64::min);
    let gmax = gens.iter().map(|g| g.abs_fast(&[0.0, 0.0]).max(max_on_axis(g))).fold(0.0, f64::max);
    if gmax == 0.0 || linear <= 0.0 {
        return 0.0;
    }
    let boxmax = ctx.psi_box.iter().flatten().chain(&ctx.phi_box).copied().fold(0.0, f64::max);
    let cmax = spec.c.0.max(spec.c.1);
    let far = |w: f64| -> f64 {
        if w < boxmax {
            gmax
        } else if !gamma.is_finite() {
            // band-limited: nothing outside the box (up to the pruning level)
            if w > 8.0 { 0.0 } else { PRUNE_EPS * gmax }
        } else {
            PRUNE_EPS * gmax * (w / 8.0).max(1.0).powf(-gamma)
        }
    };
    let mut tail = 0.0;
    let mut r = m_radius + 1;
    loop {
        let term = 3.0 * 8.0 * r as f64 * linear * far(r as f64 / cmax / 2.0);
        tail += term;
        if term <= 1e-16 * tail || term == 0.0 || r > m_radius + 1_000_000 {
            if gamma.is_finite() && term > 0.0 {
                tail += term * r as f64 / (gamma - 2.0).max(1e-3);
            }
            break;
        }
        r += 1;
    }
    tail
}

fn max_on_axis(g: &Generator) -> f64 {
    (0..=512).map(|i| g.abs_fast(&[i as f64 / 512.0, 0.0]).max(g.abs_fast(&[0.0, i as f64 / 512.0]))).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameBoundsReport {
    pub c: (f64, f64),
    pub l_inf: f64,
    pub l_sup: f64,
    pub r_c: f64,
    pub r_tail: f64,
    pub det: f64,
    pub a_lower: f64,
    pub b_upper: f64,
    pub certified: bool,
    pub grid: FreqGrid,
    pub j_cap: u32,
    pub m_radius: i64,
}

impl FrameBoundsReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# frame bounds, grid {}\nquantity,value\n", self.grid.describe());
        let rows: [(&str, String); 13] = [
            ("c1", fmt_f64(self.c.0)),
            ("c2", fmt_f64(self.c.1)),
            ("L_inf", fmt_f64(self.l_inf)),
            ("L_sup", fmt_f64(self.l_sup)),
            ("R_c", fmt_f64(self.r_c)),
            ("R_tail", fmt_f64(self.r_tail)),
            ("det_Mc", fmt_f64(self.det)),
            ("A_lower", fmt_f64(self.a_lower)),
            ("B_upper", fmt_f64(self.b_upper)),
            ("certified", self.certified.to_string()),
            ("J_cap", self.j_cap.to_string()),
            ("m_radius", self.m_radius.to_string()),
            ("grid_points_per_axis", self.grid.points_per_axis().to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sampling c = ({}, {})", fmt_f64(self.c.0), fmt_f64(self.c.1));
        let _ = writeln!(s, "L_inf  = {}", fmt_f64(self.l_inf));
        let _ = writeln!(s, "L_sup  = {}", fmt_f64(self.l_sup));
        let _ = writeln!(s, "R(c)   = {} (+ tail estimate {})", fmt_f64(self.r_c), fmt_f64(self.r_tail));
        let _ = writeln!(s, "det Mc = {}", fmt_f64(self.det));
        let _ = writeln!(s, "A >= {}", fmt_f64(self.a_lower));
        let _ = writeln!(s, "B <= {}", fmt_f64(self.b_upper));
        let _ = writeln!(s, "grid: {}, J_cap = {}, m_radius = {}", self.grid.describe(), self.j_cap, self.m_radius);
        let _ = writeln!(s, "{}", if self.certified { "frame certified" } else { "not certified" });
        s
    }
}

/// L_inf, L_sup as grid extrema of Θ(ξ,0); R(c) from the lattice sum (its tail estimate is
/// added before forming the sandwich).
pub fn estimate_bounds(spec: &SystemSpec, grid: &FreqGrid, m_radius: i64) -> Result<FrameBoundsReport> {
    let ctx = ThetaContext::new(spec)?;
    let e = ctx.grid_extrema([0.0, 0.0], grid, [true; 3]);
    let (l_inf, l_sup) = (e.min[3], e.max[3]);
    let r = lattice_sum(&ctx, grid, m_radius, e.max[4]);
    Ok(assemble(spec, grid, m_radius, l_inf, l_sup, r))
}

fn assemble(spec: &SystemSpec, grid: &FreqGrid, m_radius: i64, l_inf: f64, l_sup: f64, r: LatticeSum) -> FrameBoundsReport {
    let det = spec.det_mc();
    let r_c = r.value + r.tail;
    FrameBoundsReport {
        c: spec.c,
        l_inf,
        l_sup,
        r_c,
        r_tail: r.tail,
        det,
        a_lower: (l_inf - r_c) / det,
        b_upper: (l_sup + r_c) / det,
        certified: l_inf - r_c > 0.0,
        grid: *grid,
        j_cap: grid.j_cap(),
        m_radius,
    }
}

/// Coarsest sampling tried by [`bisect_c`]: c = 2^{T_COARSE}.
pub const T_COARSE: u32 = 3;

/// Largest c = 2^{−t} (c1 = c2) that certifies: integer t = 0..=t_max first (and, when t = 0
/// already certifies, t = −1..=−T_COARSE), then bisection in t between the last failure and
/// the first success down to `t_tol`.
pub fn bisect_c(spec: &SystemSpec, grid: &FreqGrid, m_radius: i64, t_max: u32, t_tol: f64) -> Result<Option<FrameBoundsReport>> {
    let ctx = ThetaContext::new(spec)?;
    let e = ctx.grid_extrema([0.0, 0.0], grid, [true; 3]);
    let (l_inf, l_sup, linear) = (e.min[3], e.max[3], e.max[4]);
    let at = |t: f64| -> Result<FrameBoundsReport> {
        let c = 2f64.powf(-t);
        let s = spec.clone().with_c((c, c));
        let cx = ThetaContext::new(&s)?;
        let r = lattice_sum(&cx, grid, m_radius, linear);
        Ok(assemble(&s, grid, m_radius, l_inf, l_sup, r))
    };
    let mut found = None;
    for t in 0..=t_max {
        let rep = at(t as f64)?;
        if rep.certified {
            found = Some((t as f64, rep));
            break;
        }
    }
    let Some((mut t_hi, mut best)) = found else { return Ok(None) };
    // t_hi certifies; look for a failing t_lo just below it
    let mut t_lo = None;
    if t_hi == 0.0 {
        for t in 1..=T_COARSE {
            let rep = at(-(t as f64))?;
            if rep.certified {
                t_hi = -(t as f64);
                best = rep;
            } else {
                t_lo = Some(-(t as f64));
                break;
            }
        }
    } else {
        t_lo = Some(t_hi - 1.0);
    }
    let Some(mut lo) = t_lo else { return Ok(Some(best)) };
    let mut hi = t_hi;
    while hi - lo > t_tol {
        let mid = 0.5 * (lo + hi);
        let rep = at(mid)?;
        if rep.certified {
            hi = mid;
            best = rep;
        } else {
            lo = mid;
        }
    }
    Ok(Some(best))
}

/// Extremes of the Rayleigh quotient ‖analyze f‖²/‖f‖² (ℓ² on the raster) over `n_random`
/// seeded probes, alternating white noise and plane waves at random frequencies (the latter
/// sample the frame operator's Fourier diagonal, where the extremes sit).
pub fn empirical_frame_check(plan: &TransformPlan, n_random: usize, seed: u64) -> Result<(f64, f64)> {
    if n_random == 0 {
        return Err(Error::Constraint("need at least one random raster".into()));
    }
    let ext = plan.extents().to_vec();
    let n: usize = ext.iter().product();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n_random {
        let data: Vec<f64> = if i % 2 == 0 {
            (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
        } else {
            let w: Vec<f64> = ext.iter().map(|&e| rng.random_range(0..e) as f64 / e as f64).collect();
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            let mut out = Vec::with_capacity(n);
            crate::systems::for_each_multi(&ext, |x| {
                let t: f64 = x.iter().zip(&w).map(|(&xi, wi)| xi as f64 * wi).sum();
                out.push((std::f64::consts::TAU * t + phase).cos());
            });
            out
        };
        let f = Raster::new(ext.clone(), data)?;
        let q = plan.analyze(&f)?.energy() / f.dot(&f);
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok((lo, hi))
}
