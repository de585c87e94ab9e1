//! FFT analysis/synthesis plan: band spectra on the raster frequency grid.
//!
//! Element (band b, lattice point n) is σ[x] = g_b[x − s_b∘n], g_b = IDFT(G_b) with
//! G_b(ω) = β_b ψ̂(B_b ξ(ω)), ξ(ω) = ω/(NΔ). Then
//!   ⟨f, σ⟩ = IDFT_M(fold_M(F·conj G_b))[n] / N,    Σ c_n σ_n = IDFT(G_b · DFT_M(c)[ω mod M]) / N,
//! with M = N/s the band's sub-raster. The frame operator's Fourier diagonal (aliasing
//! ignored) is Σ_b |G_b|²/Π s_b = Θ_digital/det M_c.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::{Complex, Complex32, Complex64};
use rayon::prelude::*;

use super::coeffs::{CoefficientSet, Entries, Layout};
use crate::fft::{signed_bin, FftNd};
use crate::filters::Role;
use crate::systems::{Band, Region, SystemSpec, Translations};
use crate::{Error, Result};

/// Row-major real raster; axis 0 is x1.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub extents: Vec<usize>,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn new(extents: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = extents.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!("extents {extents:?} need {n} values, got {}", data.len())));
        }
        Ok(Self { extents, data })
    }

    pub fn zeros(extents: &[usize]) -> Self {
        Self { extents: extents.to_vec(), data: vec![0.0; extents.iter().product()] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Raster) -> f64 {
        self.data.iter().zip(&o.data).map(|(a, b)| a * b).sum()
    }

    /// Pixel spacing when the raster covers [0,1]^d.
    pub fn spacing(&self) -> Vec<f64> {
        self.extents.iter().map(|&n| 1.0 / n as f64).collect()
    }
}

/// Spectra storage precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F64,
    F32,
    /// f64 while the cache stays under 512 MiB.
    Auto,
}

const AUTO_F64_BYTES: usize = 512 << 20;

trait SpecVal: Copy + Send + Sync {
    fn c64(self) -> Complex64;
    fn from_c64(v: Complex64) -> Self;
}

impl SpecVal for Complex64 {
    #[inline(always)]
    fn c64(self) -> Complex64 {
        self
    }
    fn from_c64(v: Complex64) -> Self {
        v
    }
}

impl SpecVal for Complex32 {
    #[inline(always)]
    fn c64(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }
    fn from_c64(v: Complex64) -> Self {
        Complex::new(v.re as f32, v.im as f32)
    }
}

enum Spectra {
    F64(Vec<Vec<Complex64>>),
    F32(Vec<Vec<Complex32>>),
}

pub struct TransformPlan {
    pub spec: SystemSpec,
    pub layout: Arc<Layout>,
    fft: FftNd,
    /// Padded to three axes (leading 1 in 2D).
    ext3: [usize; 3],
    small: Vec<Arc<FftNd>>,
    spectra: Spectra,
    diag: Vec<f64>,
}

fn check_extents(extents: &[usize], dim: usize) -> Result<()> {
    if extents.len() != dim {
        return Err(Error::Shape(format!("raster has {} axes, system is {dim}D", extents.len())));
    }
    if extents.iter().any(|&n| n < 8 || !n.is_power_of_two()) {
        return Err(Error::Shape(format!("extents {extents:?} must be powers of two ≥ 8")));
    }
    Ok(())
}

fn pad3<T: Copy>(v: &[T], fill: T) -> [T; 3] {
    let mut out = [fill; 3];
    let off = 3 - v.len();
    out[off..].copy_from_slice(v);
    out
}

impl TransformPlan {
    pub fn new(spec: &SystemSpec, extents: &[usize]) -> Result<Self> {
        Self::with_precision(spec, extents, Precision::Auto)
    }

    pub fn with_precision(spec: &SystemSpec, extents: &[usize], precision: Precision) -> Result<Self> {
        spec.validate()?;
        check_extents(extents, spec.dim)?;
        if let Translations::Periodic(e) = &spec.translations {
            if e != extents {
                return Err(Error::Shape(format!("system raster {e:?} differs from {extents:?}")));
            }
        }
        let mut spec = spec.clone();
        spec.translations = Translations::Periodic(extents.to_vec());
        let bands = spec.bands(extents)?;
        let signature = spec.to_config();
        let layout = Arc::new(Layout::new(spec.dim, extents.to_vec(), bands, signature));
        let n: usize = extents.iter().product();
        let use_f64 = match precision {
            Precision::F64 => true,
            Precision::F32 => false,
            Precision::Auto => layout.bands.len() * n * 16 <= AUTO_F64_BYTES,
        };
        let spectra = if use_f64 {
            Spectra::F64(build_spectra::<Complex64>(&spec, &layout.bands, extents))
        } else {
            Spectra::F32(build_spectra::<Complex32>(&spec, &layout.bands, extents))
        };
        let mut diag = vec![0.0; n];
        match &spectra {
            Spectra::F64(s) => accumulate_diag(&mut diag, s, &layout.bands),
            Spectra::F32(s) => accumulate_diag(&mut diag, s, &layout.bands),
        }
        let mut cache: HashMap<Vec<usize>, Arc<FftNd>> = HashMap::new();
        let small = layout
            .bands
            .iter()
            .map(|b| cache.entry(b.counts.clone()).or_insert_with(|| Arc::new(FftNd::new(&b.counts))).clone())
            .collect();
        Ok(Self { ext3: pad3(extents, 1), fft: FftNd::new(extents), spec, layout, small, spectra, diag })
    }

    pub fn extents(&self) -> &[usize] {
        &self.layout.extents
    }

    pub fn total(&self) -> usize {
        self.layout.total
    }

    /// Fourier diagonal of the frame operator (aliasing terms dropped).
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn is_f64(&self) -> bool {
        matches!(self.spectra, Spectra::F64(_))
    }

    /// Band spectrum G_b on the full grid (row-major, FFT bin order).
    pub fn band_spectrum(&self, b: usize) -> Vec<Complex64> {
        match &self.spectra {
            Spectra::F64(s) => s[b].clone(),
            Spectra::F32(s) => s[b].iter().map(|v| v.c64()).collect(),
        }
    }

    fn check_raster(&self, f: &Raster) -> Result<()> {
        if f.extents != self.layout.extents {
            return Err(Error::Shape(format!("raster {:?} vs plan {:?}", f.extents, self.layout.extents)));
        }
        if f.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("raster contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn spectrum_of(&self, f: &Raster) -> Vec<Complex64> {
        let mut fh: Vec<Complex64> = f.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut fh);
        fh
    }

    pub fn analyze(&self, f: &Raster) -> Result<CoefficientSet> {
        self.check_raster(f)?;
        let fh = self.spectrum_of(f);
        let mut out = vec![0.0; self.layout.total];
        self.analyze_spectrum(&fh, &mut out);
        CoefficientSet::dense(self.layout.clone(), out)
    }

    fn analyze_spectrum(&self, fh: &[Complex64], out: &mut [f64]) {
        let mut slices: Vec<&mut [f64]> = Vec::with_capacity(self.layout.bands.len());
        let mut rest = out;
        for b in &self.layout.bands {
            let (head, tail) = rest.split_at_mut(b.len());
            slices.push(head);
            rest = tail;
        }
        let norm = 1.0 / fh.len() as f64;
        slices.into_par_iter().enumerate().for_each(|(bi, dst)| {
            let band = &self.layout.bands[bi];
            let m3 = pad3(&band.counts, 1);
            let mut z = vec![Complex64::new(0.0, 0.0); dst.len()];
            match &self.spectra {
                Spectra::F64(s) => fold(&mut z, fh, &s[bi], self.ext3, m3),
                Spectra::F32(s) => fold(&mut z, fh, &s[bi], self.ext3, m3),
            }
            self.small[bi].inverse(&mut z);
            for (d, v) in dst.iter_mut().zip(&z) {
                *d = v.re * norm;
            }
        });
    }

    pub fn synthesize(&self, c: &CoefficientSet) -> Result<Raster> {
        if c.layout.signature != self.layout.signature || c.layout.total != self.layout.total {
            return Err(Error::Consistency("coefficients belong to a different system or raster".into()));
        }
        let mut xh = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        self.synthesize_spectrum(c, &mut xh);
        self.fft.inverse(&mut xh);
        let norm = 1.0 / xh.len() as f64;
        Raster::new(self.layout.extents.clone(), xh.iter().map(|v| v.re * norm).collect())
    }

    fn synthesize_spectrum(&self, c: &CoefficientSet, xh: &mut [Complex64]) {
        let layout = &self.layout;
        let mut band_entries: Vec<Vec<(usize, f64)>> = Vec::new();
        let dense = match &c.entries {
            Entries::Dense(v) => Some(v),
            Entries::Sparse(e) => {
                band_entries = vec![Vec::new(); layout.bands.len()];
                for &(i, v) in e {
                    let (b, local) = layout.locate(i).expect("checked against layout");
                    band_entries[b].push((local, v));
                }
                None
            }
        };
        for (bi, band) in layout.bands.iter().enumerate() {
            let mut cb = vec![Complex64::new(0.0, 0.0); band.len()];
            match dense {
                Some(v) => {
                    let o = layout.offsets[bi];
                    if v[o..o + band.len()].iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    for (d, &x) in cb.iter_mut().zip(&v[o..o + band.len()]) {
                        d.re = x;
                    }
                }
                None => {
                    if band_entries[bi].is_empty() {
                        continue;
                    }
                    for &(l, x) in &band_entries[bi] {
                        cb[l].re = x;
                    }
                }
            }
            self.small[bi].forward(&mut cb);
            let m3 = pad3(&band.counts, 1);
            match &self.spectra {
                Spectra::F64(s) => unfold(xh, &cb, &s[bi], self.ext3, m3),
                Spectra::F32(s) => unfold(xh, &cb, &s[bi], self.ext3, m3),
            }
        }
    }

    /// S f = synthesize(analyze(f)).
    pub fn frame_operator(&self, f: &Raster) -> Result<Raster> {
        let c = self.analyze(f)?;
        self.synthesize(&c)
    }

    /// Multiply by the inverse Fourier diagonal (preconditioner; zero where the diagonal vanishes).
    pub fn apply_inverse_diagonal(&self, r: &Raster) -> Raster {
        let mut h = self.spectrum_of(r);
        let peak = self.diag.iter().copied().fold(0.0, f64::max);
        for (v, &d) in h.iter_mut().zip(&self.diag) {
            *v = if d > 1e-12 * peak { *v / d } else { Complex64::new(0.0, 0.0) };
        }
        self.fft.inverse(&mut h);
        let norm = 1.0 / h.len() as f64;
        Raster { extents: r.extents.clone(), data: h.iter().map(|v| v.re * norm).collect() }
    }

    /// ℓ² norm of the elements of each band (all translates share it).
    pub fn element_norms(&self) -> Vec<f64> {
        let n = self.fft.len() as f64;
        (0..self.layout.bands.len())
            .map(|b| {
                let e: f64 = match &self.spectra {
                    Spectra::F64(s) => s[b].iter().map(|v| v.norm_sqr()).sum(),
                    Spectra::F32(s) => s[b].iter().map(|v| v.c64().norm_sqr()).sum(),
                };
                (e / n).sqrt()
            })
            .collect()
    }

    /// The frame element with flat index `flat`, rendered on the raster.
    pub fn element(&self, flat: usize) -> Result<Raster> {
        let c = CoefficientSet::sparse(self.layout.clone(), vec![(flat, 1.0)])?;
        self.synthesize(&c)
    }
}

/// z[ω mod M] += F[ω]·conj(G[ω]).
fn fold<T: SpecVal>(z: &mut [Complex64], fh: &[Complex64], g: &[T], e: [usize; 3], m: [usize; 3]) {
    let (m1, m2) = (m[1], m[2]);
    for i0 in 0..e[0] {
        let r0 = (i0 & (m[0] - 1)) * m1 * m2;
        for i1 in 0..e[1] {
            let r1 = r0 + (i1 & (m1 - 1)) * m2;
            let base = (i0 * e[1] + i1) * e[2];
            let frow = &fh[base..base + e[2]];
            let grow = &g[base..base + e[2]];
            let zrow = &mut z[r1..r1 + m2];
            for (chunk_f, chunk_g) in frow.chunks(m2).zip(grow.chunks(m2)) {
                for ((zv, fv), gv) in zrow.iter_mut().zip(chunk_f).zip(chunk_g) {
                    *zv += fv * gv.c64().conj();
                }
            }
        }
    }
}

/// X[ω] += G[ω]·C[ω mod M].
fn unfold<T: SpecVal>(xh: &mut [Complex64], cb: &[Complex64], g: &[T], e: [usize; 3], m: [usize; 3]) {
    let (m1, m2) = (m[1], m[2]);
    let row = e[2];
    xh.par_chunks_mut(row).zip(g.par_chunks(row)).enumerate().for_each(|(r, (xrow, grow))| {
        let (i0, i1) = (r / e[1], r % e[1]);
        let r1 = (i0 & (m[0] - 1)) * m1 * m2 + (i1 & (m1 - 1)) * m2;
        let crow = &cb[r1..r1 + m2];
        for (chunk_x, chunk_g) in xrow.chunks_mut(m2).zip(grow.chunks(m2)) {
            for ((xv, gv), cv) in chunk_x.iter_mut().zip(chunk_g).zip(crow) {
                *xv += gv.c64() * cv;
            }
        }
    });
}

fn accumulate_diag<T: SpecVal>(diag: &mut [f64], spectra: &[Vec<T>], bands: &[Band]) {
    for (g, b) in spectra.iter().zip(bands) {
        let w = 1.0 / b.strides.iter().product::<usize>() as f64;
        for (d, v) in diag.iter_mut().zip(g) {
            *d += v.c64().norm_sqr() * w;
        }
    }
}

fn build_spectra<T: SpecVal>(spec: &SystemSpec, bands: &[Band], extents: &[usize]) -> Vec<Vec<T>> {
    bands.par_iter().map(|b| band_values(spec, b, extents).into_iter().map(T::from_c64).collect()).collect()
}

/// Raster frequency (generator units) of bin w on an axis of length n.
fn axis_freqs(n: usize, dom: f64) -> Vec<f64> {
    (0..n).map(|w| signed_bin(w, n) as f64 / dom).collect()
}

/// G_b(ω) on the full grid, Hermitian-symmetrized on the Nyquist planes.
fn band_values(spec: &SystemSpec, band: &Band, extents: &[usize]) -> Vec<Complex64> {
    let d = spec.dim;
    let delta = spec.pixel_size();
    let freqs: Vec<Vec<f64>> = extents.iter().map(|&n| axis_freqs(n, n as f64 * delta)).collect();
    let gen = match band.region {
        Region::Scaling => spec.scaling(),
        Region::Cone(a) => spec.shearlet(a),
    };
    let e3 = pad3(extents, 1);
    let total: usize = extents.iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    match gen.compact_profile() {
        Some(p) => {
            // η_i depends on ξ_i and ξ_axis only: loop over ω_axis and use 1D factor arrays.
            let axis = match gen.role {
                Role::Scaling => 0,
                Role::Shearlet { axis } => axis,
            };
            let factor = |i: usize, eta: f64| -> Complex64 {
                match gen.role {
                    Role::Scaling => p.phi(eta),
                    Role::Shearlet { axis } if i == axis => p.wavelet(eta),
                    Role::Shearlet { .. } => p.bump(eta),
                }
            };
            let off = 3 - d;
            for (wa, &xa) in freqs[axis].iter().enumerate() {
                let arrays: Vec<Vec<Complex64>> = (0..d)
                    .map(|i| {
                        if i == axis {
                            vec![factor(i, band.b[i][i] * xa)]
                        } else {
                            freqs[i].iter().map(|&xi| factor(i, band.b[i][i] * xi + band.b[i][axis] * xa)).collect()
                        }
                    })
                    .collect();
                let get = |i3: usize, w: usize| -> Complex64 {
                    if i3 < off {
                        Complex64::new(1.0, 0.0)
                    } else if i3 - off == axis {
                        arrays[axis][0]
                    } else {
                        arrays[i3 - off][w]
                    }
                };
                let ax3 = axis + off;
                let range = |i3: usize| if i3 == ax3 { wa..wa + 1 } else { 0..e3[i3] };
                for w0 in range(0) {
                    let a0 = get(0, w0);
                    for w1 in range(1) {
                        let a01 = a0 * get(1, w1);
                        if a01 == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for w2 in range(2) {
                            out[(w0 * e3[1] + w1) * e3[2] + w2] = a01 * get(2, w2);
                        }
                    }
                }
            }
        }
        None => {
            let mut xi = vec![0.0; d];
            let mut eta = vec![0.0; d];
            crate::systems::for_each_multi(extents, |w| {
                for i in 0..d {
                    xi[i] = freqs[i][w[i]];
                }
                for i in 0..d {
                    eta[i] = (0..d).map(|c| band.b[i][c] * xi[c]).sum();
                }
                let mut v = gen.spectrum_fast(&eta);
                if gen.is_cone_masked() && !in_cone(band.region, &xi) {
                    v = Complex64::new(0.0, 0.0);
                }
                let flat = w.iter().zip(extents).fold(0, |acc, (&wi, &n)| acc * n + wi);
                out[flat] = v;
            });
        }
    }
    symmetrize_nyquist(&mut out, extents);
    for v in out.iter_mut() {
        *v *= band.beta;
    }
    out
}

/// Cone membership of a frequency for masked (band-limited) generators: the seam
/// |ξ_a| = max belongs to the lowest axis.
fn in_cone(region: Region, xi: &[f64]) -> bool {
    match region {
        Region::Scaling => true,
        Region::Cone(axis) => {
            let a = xi[axis].abs();
            xi.iter().enumerate().all(|(i, v)| if i < axis { v.abs() < a } else { v.abs() <= a })
        }
    }
}

/// Real elements need G(−ω) = conj G(ω). Off the Nyquist planes this holds already; on
/// them ±ξ_N are the same bin, so each conjugate pair keeps the value of its first member
/// (a valid representative of the aliased frequency) and self-conjugate bins keep Re G.
fn symmetrize_nyquist(g: &mut [Complex64], extents: &[usize]) {
    let d = extents.len();
    let flat_of = |w: &[usize]| w.iter().zip(extents).fold(0, |acc, (&wi, &n)| acc * n + wi);
    let mut pairs = Vec::new();
    crate::systems::for_each_multi(extents, |w| {
        if !w.iter().zip(extents).any(|(&wi, &n)| wi == n / 2) {
            return;
        }
        let neg: Vec<usize> = (0..d).map(|i| (extents[i] - w[i]) % extents[i]).collect();
        let (a, b) = (flat_of(w), flat_of(&neg));
        if a <= b {
            pairs.push((a, b));
        }
    });
    for (a, b) in pairs {
        if a == b {
            g[a] = Complex64::new(g[a].re, 0.0);
        } else {
            g[b] = g[a].conj();
        }
    }
}
