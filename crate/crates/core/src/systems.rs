//! Index geometry: scaling and shear matrices, cone/pyramid partitions, system
//! descriptions (SystemSpec) and index enumeration.
//!
//! Conventions. Regions are labelled by the axis of the wavelet direction:
//! `Cone(0)` is the horizontal pair (C1/C3 in 2D, P1/P4 in 3D), `Cone(1)` the
//! vertical pair (C2/C4, P2/P5) and `Cone(2)` the pair P3/P6. The element of
//! band (axis, j, k) is 2^{dj/4}ψ_axis(S_k A_{2^j} x − m) with m on the lattice
//! M_c Z^d (axis-permuted), and its spectrum is ψ̂_axis((S_k A_{2^j})^{−T} ξ).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::filters::{
    classical_bandlimited_2d, compact_generators, spectral_factorize_mode, Generator, GeneratorKind, ParamMode, Role,
};
use crate::io::KeyValues;
use crate::{Error, Result};

/// ⌈2^{j/2}⌉, computed in integers.
pub fn shear_range(j: u32) -> i64 {
    let target: u128 = 1u128 << j;
    let mut r = (target as f64).sqrt().floor() as u128;
    while r * r < target {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= target {
        r -= 1;
    }
    r as i64
}

/// Paraboloidal scaling: 2^{s} on `axis`, 2^{s/2} elsewhere (s may be negative).
pub fn scaling_matrix(dim: usize, axis: usize, j: f64) -> DMatrix<f64> {
    assert!(axis < dim);
    DMatrix::from_fn(dim, dim, |r, c| {
        if r != c {
            0.0
        } else if r == axis {
            2f64.powf(j)
        } else {
            2f64.powf(j / 2.0)
        }
    })
}

/// Shear matrix: identity with the row `axis` carrying k in the remaining columns.
pub fn shear_matrix(dim: usize, axis: usize, k: &[i64]) -> DMatrix<i64> {
    assert_eq!(k.len(), dim - 1);
    let mut m = DMatrix::<i64>::identity(dim, dim);
    let mut it = k.iter();
    for c in 0..dim {
        if c != axis {
            m[(axis, c)] = *it.next().unwrap();
        }
    }
    m
}

/// Labelled frequency regions: the central box R, cones C1..C4 (2D) or pyramids P1..P6 (3D).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreqRegion {
    Central,
    Cone { dim: usize, index: u8 },
}

impl fmt::Display for FreqRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreqRegion::Central => write!(f, "R"),
            FreqRegion::Cone { dim: 2, index } => write!(f, "C{index}"),
            FreqRegion::Cone { index, .. } => write!(f, "P{index}"),
        }
    }
}

impl FreqRegion {
    /// Axis of the cone pair this region belongs to (None for R).
    pub fn axis(&self) -> Option<usize> {
        match self {
            FreqRegion::Central => None,
            FreqRegion::Cone { dim, index } => Some((*index as usize - 1) % dim),
        }
    }
}

/// Region of a frequency point; the dominant axis decides, ties go to the lower axis
/// (so the diagonal seams belong to the horizontal pair).
pub fn frequency_region(point: &[f64]) -> FreqRegion {
    let dim = point.len();
    let mut axis = 0;
    for i in 1..dim {
        if point[i].abs() > point[axis].abs() {
            axis = i;
        }
    }
    if point[axis].abs() < 1.0 {
        return FreqRegion::Central;
    }
    let index = if point[axis] >= 0.0 { axis + 1 } else { axis + 1 + dim };
    FreqRegion::Cone { dim, index: index as u8 }
}

/// Frequency-plane region of an index: scaling, or the cone pair with wavelet axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Scaling,
    Cone(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShearletIndex {
    pub region: Region,
    pub j: u32,
    /// k[0] in 2D; (k1, k2) in 3D.
    pub k: [i64; 2],
    /// Translation lattice coordinates (unused trailing entries are 0).
    pub m: [i64; 3],
}

/// Generator family of a system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Compact { k: usize, l: usize, mode: ParamMode },
    Classical,
    Zero,
}

/// How translations are enumerated.
#[derive(Clone, Debug, PartialEq)]
pub enum Translations {
    /// Continuum lattice points whose element support box meets the domain box.
    SupportBox(Vec<(f64, f64)>),
    /// Digital layout on a periodic raster of the given extents.
    Periodic(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub dim: usize,
    pub j_max: u32,
    pub c: (f64, f64),
    pub kind: SystemKind,
    pub translations: Translations,
    /// [φ, ψ_axis0, ψ_axis1, (ψ_axis2)].
    pub generators: Arc<Vec<Generator>>,
}

/// One (region, j, k) band of the digital system on a raster.
#[derive(Clone, Debug)]
pub struct Band {
    pub region: Region,
    pub j: u32,
    pub k: [i64; 2],
    /// η = B ξ maps raster frequencies (generator units) to generator arguments.
    pub b: [[f64; 3]; 3],
    /// Subsampling stride per axis (pixels).
    pub strides: Vec<usize>,
    /// Coefficient sub-raster extents (extents / strides).
    pub counts: Vec<usize>,
    /// Continuum lattice spacing per axis, in pixels (before power-of-two flooring).
    pub exact_strides: Vec<f64>,
    /// Element weight: β² = Π strides / det(lattice matrix).
    pub beta: f64,
}

impl Band {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn k_list(dim: usize, j: u32) -> Vec<[i64; 2]> {
    let r = shear_range(j);
    if dim == 2 {
        (-r..=r).map(|k| [k, 0]).collect()
    } else {
        let mut out = Vec::new();
        for k1 in -r..=r {
            for k2 in -r..=r {
                out.push([k1, k2]);
            }
        }
        out
    }
}

/// (region, j, k) triples in enumeration order.
pub fn band_keys(dim: usize, j_max: u32) -> Vec<(Region, u32, [i64; 2])> {
    let mut out = vec![(Region::Scaling, 0, [0, 0])];
    for axis in 0..dim {
        for j in 0..j_max {
            for k in k_list(dim, j) {
                out.push((Region::Cone(axis), j, k));
            }
        }
    }
    out
}

impl SystemSpec {
    pub fn compact(dim: usize, k: usize, l: usize, mode: ParamMode, j_max: u32, c: (f64, f64)) -> Result<Self> {
        check_dim(dim)?;
        let pair = spectral_factorize_mode(k, l, mode)?;
        let spec = Self {
            dim,
            j_max,
            c,
            kind: SystemKind::Compact { k, l, mode },
            translations: Translations::SupportBox(vec![(0.0, 1.0); dim]),
            generators: Arc::new(compact_generators(&pair, dim)),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn classical(j_max: u32, c: (f64, f64)) -> Result<Self> {
        let (phi, psi, psit) = classical_bandlimited_2d();
        let spec = Self {
            dim: 2,
            j_max,
            c,
            kind: SystemKind::Classical,
            translations: Translations::SupportBox(vec![(0.0, 1.0); 2]),
            generators: Arc::new(vec![phi, psi, psit]),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zero(dim: usize, j_max: u32, c: (f64, f64)) -> Result<Self> {
        check_dim(dim)?;
        let mut g = vec![Generator::zero(dim, Role::Scaling)];
        for axis in 0..dim {
            g.push(Generator::zero(dim, Role::Shearlet { axis }));
        }
        let spec = Self {
            dim,
            j_max,
            c,
            kind: SystemKind::Zero,
            translations: Translations::SupportBox(vec![(0.0, 1.0); dim]),
            generators: Arc::new(g),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_translations(mut self, t: Translations) -> Self {
        self.translations = t;
        self
    }

    pub fn with_c(mut self, c: (f64, f64)) -> Self {
        self.c = c;
        self
    }

    pub fn with_j_max(mut self, j_max: u32) -> Self {
        self.j_max = j_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        let (c1, c2) = self.c;
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::Constraint(format!("sampling constants must be positive, got ({c1}, {c2})")));
        }
        if matches!(self.kind, SystemKind::Compact { .. }) && self.dim == 2 && c2 > c1 {
            return Err(Error::Constraint(format!("compact 2D systems need c2 ≤ c1, got ({c1}, {c2})")));
        }
        if self.kind == SystemKind::Classical && self.dim != 2 {
            return Err(Error::Constraint("classical band-limited systems are 2D only".into()));
        }
        if self.generators.len() != self.dim + 1 {
            return Err(Error::Constraint("generator list must be [φ, ψ per axis]".into()));
        }
        Ok(())
    }

    pub fn scaling(&self) -> &Generator {
        &self.generators[0]
    }

    pub fn shearlet(&self, axis: usize) -> &Generator {
        &self.generators[axis + 1]
    }

    pub fn generator_kind(&self) -> GeneratorKind {
        self.generators[0].kind
    }

    /// det M_c: c1·c2 (2D), c1·c2² (3D).
    pub fn det_mc(&self) -> f64 {
        self.c.0 * self.c.1.powi(self.dim as i32 - 1)
    }

    /// Generator units per pixel on a raster with `j_max` scales: the finest scale's
    /// main band reaches the Nyquist frequency.
    pub fn pixel_size(&self) -> f64 {
        1.0 / (2f64.powi(self.j_max as i32) * self.shearlet(0).nyquist_eta())
    }

    /// Band matrix B with η = Bξ.
    pub fn band_matrix(&self, region: Region, j: u32, k: [i64; 2]) -> [[f64; 3]; 3] {
        let d = self.dim;
        let mut out = [[0.0; 3]; 3];
        match region {
            Region::Scaling => {
                for (i, row) in out.iter_mut().enumerate().take(d) {
                    row[i] = 1.0;
                }
            }
            Region::Cone(axis) => {
                let s = shear_matrix(d, axis, &k[..d - 1]).map(|v| v as f64);
                let a = scaling_matrix(d, axis, j as f64);
                let m = (s * a).try_inverse().expect("shear·scale is invertible").transpose();
                for r in 0..d {
                    for c in 0..d {
                        out[r][c] = m[(r, c)];
                    }
                }
            }
        }
        out
    }

    /// Continuum lattice spacing (generator units) per axis for a band.
    pub fn lattice_spacing(&self, region: Region, j: u32) -> Vec<f64> {
        let (c1, c2) = self.c;
        match region {
            Region::Scaling => vec![c1; self.dim],
            Region::Cone(axis) => (0..self.dim)
                .map(|i| if i == axis { c1 * 2f64.powi(-(j as i32)) } else { c2 * 2f64.powf(-(j as f64) / 2.0) })
                .collect(),
        }
    }

    /// Digital bands on a periodic raster.
    pub fn bands(&self, extents: &[usize]) -> Result<Vec<Band>> {
        if extents.len() != self.dim {
            return Err(Error::Shape(format!("raster has {} axes, system has {}", extents.len(), self.dim)));
        }
        let delta = self.pixel_size();
        let det_region = |region: Region| match region {
            Region::Scaling => self.c.0.powi(self.dim as i32),
            Region::Cone(_) => self.det_mc(),
        };
        Ok(band_keys(self.dim, self.j_max)
            .into_iter()
            .map(|(region, j, k)| {
                let exact: Vec<f64> = self.lattice_spacing(region, j).iter().map(|s| s / delta).collect();
                let mut strides: Vec<usize> = exact
                    .iter()
                    .zip(extents)
                    .map(|(&s, &n)| {
                        let mut p = 1usize;
                        while (2 * p) as f64 <= s * (1.0 + 1e-12) && 2 * p <= n {
                            p *= 2;
                        }
                        p
                    })
                    .collect();
                // Sub-pixel spacings clamp to 1; a sheared lattice then is not representable,
                // so keep the sampling density at least the continuum density.
                let target: f64 = exact.iter().product::<f64>() * (1.0 + 1e-12);
                while strides.iter().map(|&s| s as f64).product::<f64>() > target {
                    let (ax, _) = strides.iter().enumerate().max_by_key(|(i, &s)| (s, usize::MAX - i)).unwrap();
                    if strides[ax] == 1 {
                        break;
                    }
                    strides[ax] /= 2;
                }
                let counts = extents.iter().zip(&strides).map(|(n, s)| n / s).collect();
                let prod: f64 = strides.iter().map(|&s| s as f64).product();
                Band {
                    region,
                    j,
                    k,
                    b: self.band_matrix(region, j, k),
                    beta: (prod / det_region(region)).sqrt(),
                    strides,
                    counts,
                    exact_strides: exact,
                }
            })
            .collect())
    }

    /// Key=value serialization (keys: dim, J_max, c1, c2, generator, K, L, relaxed, domain).
    pub fn to_config(&self) -> String {
        let mut kv = KeyValues::default();
        kv.set("dim", self.dim);
        kv.set("J_max", self.j_max);
        kv.set("c1", format!("{:.16e}", self.c.0));
        kv.set("c2", format!("{:.16e}", self.c.1));
        match self.kind {
            SystemKind::Compact { k, l, mode } => {
                kv.set("generator", "compact");
                kv.set("K", k);
                kv.set("L", l);
                kv.set("relaxed", mode == ParamMode::Relaxed);
            }
            SystemKind::Classical => kv.set("generator", "classical"),
            SystemKind::Zero => kv.set("generator", "zero"),
        }
        match &self.translations {
            Translations::SupportBox(b) => kv.set(
                "domain",
                b.iter().map(|(lo, hi)| format!("{lo}:{hi}")).collect::<Vec<_>>().join(","),
            ),
            Translations::Periodic(e) => kv.set(
                "domain",
                format!("periodic:{}", e.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("x")),
            ),
        }
        kv.to_string()
    }

    pub fn from_config(kv: &KeyValues) -> Result<Self> {
        let dim: usize = kv.get_parsed("dim")?.unwrap_or(2);
        let j_max: u32 = kv.get_parsed("J_max")?.unwrap_or(3);
        let c1: f64 = kv.get_parsed("c1")?.unwrap_or(0.5);
        let c2: f64 = kv.get_parsed("c2")?.unwrap_or(c1);
        let generator = kv.get("generator").unwrap_or("compact");
        let mut spec = match generator {
            "compact" => {
                let k: usize = kv.get_parsed("K")?.unwrap_or(39);
                let l: usize = kv.get_parsed("L")?.unwrap_or(19);
                let relaxed: bool = kv.get_parsed("relaxed")?.unwrap_or(false);
                let mode = if relaxed { ParamMode::Relaxed } else { ParamMode::Strict };
                Self::compact(dim, k, l, mode, j_max, (c1, c2))?
            }
            "classical" => Self::classical(j_max, (c1, c2))?,
            "zero" => Self::zero(dim, j_max, (c1, c2))?,
            other => return Err(Error::Constraint(format!("unknown generator kind '{other}'"))),
        };
        if let Some(d) = kv.get("domain") {
            spec.translations = parse_domain(d, dim)?;
        }
        Ok(spec)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::Constraint(format!("dimension must be 2 or 3, got {dim}")))
    }
}

fn parse_domain(s: &str, dim: usize) -> Result<Translations> {
    let bad = || Error::Constraint(format!("bad domain '{s}'"));
    if let Some(rest) = s.strip_prefix("periodic:") {
        let e: Vec<usize> = rest.split('x').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        if e.len() != dim {
            return Err(bad());
        }
        return Ok(Translations::Periodic(e));
    }
    let b: Vec<(f64, f64)> = s
        .split(',')
        .map(|p| {
            let (lo, hi) = p.split_once(':').ok_or_else(bad)?;
            Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
        })
        .collect::<Result<_>>()?;
    if b.len() != dim {
        return Err(bad());
    }
    Ok(Translations::SupportBox(b))
}

/// Spatial box of a generator: the compact support, or for band-limited generators the
/// box where |ψ| ≥ 1e−8·max (estimated once from a rendered spectrum).
pub fn generator_box(g: &Generator) -> Vec<(f64, f64)> {
    if let Some(b) = &g.support_hint {
        return b.clone();
    }
    effective_box_classical(g)
}

fn effective_box_classical(g: &Generator) -> Vec<(f64, f64)> {
    use crate::fft::FftNd;
    use num_complex::Complex64;
    let n = 256usize;
    let h = 4.0 / n as f64; // frequency step; spectrum lives in [−1, 1]²
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in 0..n {
            let fa = if a < n / 2 { a as f64 } else { a as f64 - n as f64 } * h;
            let fb = if b < n / 2 { b as f64 } else { b as f64 - n as f64 } * h;
            data[a * n + b] = g.spectrum(&[fa, fb]);
        }
    }
    FftNd::new(&[n, n]).inverse(&mut data);
    let peak = data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dx = 1.0 / (n as f64 * h);
    let mut r = [0usize; 2];
    for a in 0..n {
        for b in 0..n {
            if data[a * n + b].norm() >= 1e-8 * peak {
                let da = a.min(n - a);
                let db = b.min(n - b);
                r[0] = r[0].max(da);
                r[1] = r[1].max(db);
            }
        }
    }
    r.iter().map(|&v| (-(v as f64 + 1.0) * dx, (v as f64 + 1.0) * dx)).collect()
}

/// Deterministic enumeration: region, then j, then k lexicographic, then m lexicographic.
pub fn enumerate_indices(spec: &SystemSpec) -> Result<Vec<ShearletIndex>> {
    let mut out = Vec::new();
    match &spec.translations {
        Translations::Periodic(extents) => {
            for band in spec.bands(extents)? {
                for_each_multi(&band.counts, |n| {
                    let mut m = [0i64; 3];
                    for (i, &v) in n.iter().enumerate() {
                        m[i] = v as i64;
                    }
                    out.push(ShearletIndex { region: band.region, j: band.j, k: band.k, m });
                });
            }
        }
        Translations::SupportBox(domain) => {
            if domain.iter().any(|(lo, hi)| !(hi > lo)) {
                return Ok(out);
            }
            for (region, j, k) in band_keys(spec.dim, spec.j_max) {
                enumerate_support_box(spec, region, j, k, domain, &mut out);
            }
        }
    }
    Ok(out)
}

fn enumerate_support_box(
    spec: &SystemSpec,
    region: Region,
    j: u32,
    k: [i64; 2],
    domain: &[(f64, f64)],
    out: &mut Vec<ShearletIndex>,
) {
    let d = spec.dim;
    let (gen, lattice, m_mat) = match region {
        Region::Scaling => (spec.scaling(), vec![spec.c.0; d], DMatrix::<f64>::identity(d, d)),
        Region::Cone(axis) => {
            let s = shear_matrix(d, axis, &k[..d - 1]).map(|v| v as f64);
            let lat = (0..d).map(|i| if i == axis { spec.c.0 } else { spec.c.1 }).collect();
            (spec.shearlet(axis), lat, s * scaling_matrix(d, axis, j as f64))
        }
    };
    let gbox = generator_box(gen);
    let inv = m_mat.clone().try_inverse().unwrap();
    // bbox(M^{-1}(gbox + m)) = bbox(M^{-1} gbox) + M^{-1} m meets the domain iff M^{-1} m lies in
    // the Minkowski box `shifted`
    let mut e_lo = vec![f64::INFINITY; d];
    let mut e_hi = vec![f64::NEG_INFINITY; d];
    for g in box_corners(&gbox) {
        let x = &inv * nalgebra::DVector::from_column_slice(&g);
        for i in 0..d {
            e_lo[i] = e_lo[i].min(x[i]);
            e_hi[i] = e_hi[i].max(x[i]);
        }
    }
    let shifted: Vec<(f64, f64)> = (0..d).map(|i| (domain[i].0 - e_hi[i], domain[i].1 - e_lo[i])).collect();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in box_corners(&shifted) {
        let y = &m_mat * nalgebra::DVector::from_column_slice(&x);
        for i in 0..d {
            lo[i] = lo[i].min(y[i]);
            hi[i] = hi[i].max(y[i]);
        }
    }
    let n_lo: Vec<i64> = (0..d).map(|i| (lo[i] / lattice[i]).ceil() as i64).collect();
    let n_hi: Vec<i64> = (0..d).map(|i| (hi[i] / lattice[i]).floor() as i64).collect();
    if n_lo.iter().zip(&n_hi).any(|(a, b)| a > b) {
        return;
    }
    let counts: Vec<usize> = n_lo.iter().zip(&n_hi).map(|(a, b)| (b - a + 1) as usize).collect();
    for_each_multi(&counts, |n| {
        let m: Vec<f64> = (0..d).map(|i| (n_lo[i] + n[i] as i64) as f64 * lattice[i]).collect();
        let x = &inv * nalgebra::DVector::from_column_slice(&m);
        if (0..d).all(|i| x[i] >= shifted[i].0 && x[i] <= shifted[i].1) {
            let mut mi = [0i64; 3];
            for i in 0..d {
                mi[i] = n_lo[i] + n[i] as i64;
            }
            out.push(ShearletIndex { region, j, k, m: mi });
        }
    });
}

fn box_corners(b: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let d = b.len();
    (0..1usize << d)
        .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { b[i].1 } else { b[i].0 }).collect())
        .collect()
}

/// Visit all multi-indices of a box in row-major (lexicographic) order.
pub fn for_each_multi(counts: &[usize], mut f: impl FnMut(&[usize])) {
    if counts.iter().any(|&c| c == 0) {
        return;
    }
    let mut idx = vec![0usize; counts.len()];
    loop {
        f(&idx);
        let mut ax = counts.len();
        loop {
            if ax == 0 {
                return;
            }
            ax -= 1;
            idx[ax] += 1;
            if idx[ax] < counts[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
}
