//! Coefficient containers, band layout, N-term selection and thresholding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::systems::{Band, Region, ShearletIndex};
use crate::{Error, Result};

/// Flat coefficient order: bands in (region, j, k) order, each band's sub-raster row-major.
#[derive(Clone, Debug)]
pub struct Layout {
    pub dim: usize,
    pub extents: Vec<usize>,
    pub bands: Vec<Band>,
    pub offsets: Vec<usize>,
    pub total: usize,
    /// Identifies the system and raster the layout belongs to.
    pub signature: String,
}

impl Layout {
    pub fn new(dim: usize, extents: Vec<usize>, bands: Vec<Band>, signature: String) -> Self {
        let mut offsets = Vec::with_capacity(bands.len() + 1);
        let mut acc = 0;
        for b in &bands {
            offsets.push(acc);
            acc += b.len();
        }
        offsets.push(acc);
        Self { dim, extents, bands, offsets, total: acc, signature }
    }

    /// Band number and local row-major position of a flat index.
    pub fn locate(&self, flat: usize) -> Option<(usize, usize)> {
        if flat >= self.total {
            return None;
        }
        let b = self.offsets.partition_point(|&o| o <= flat) - 1;
        Some((b, flat - self.offsets[b]))
    }

    pub fn index_of(&self, flat: usize) -> Option<ShearletIndex> {
        let (b, mut local) = self.locate(flat)?;
        let band = &self.bands[b];
        let mut m = [0i64; 3];
        for ax in (0..band.counts.len()).rev() {
            m[ax] = (local % band.counts[ax]) as i64;
            local /= band.counts[ax];
        }
        Some(ShearletIndex { region: band.region, j: band.j, k: band.k, m })
    }

    pub fn flat_of(&self, idx: &ShearletIndex) -> Option<usize> {
        let b = self.bands.iter().position(|b| b.region == idx.region && b.j == idx.j && b.k == idx.k)?;
        let band = &self.bands[b];
        let mut local = 0usize;
        for (ax, &c) in band.counts.iter().enumerate() {
            let m = idx.m[ax];
            if m < 0 || m as usize >= c {
                return None;
            }
            local = local * c + m as usize;
        }
        Some(self.offsets[b] + local)
    }

    /// Plain-text sidecar: one line per band.
    pub fn sidecar(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# signature {}", self.signature.replace('\n', ";"));
        let _ = writeln!(s, "# region j k1 k2 offset extents strides beta");
        for (b, o) in self.bands.iter().zip(&self.offsets) {
            let region = match b.region {
                Region::Scaling => "scaling".to_string(),
                Region::Cone(a) => format!("cone{a}"),
            };
            let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x");
            let _ = writeln!(
                s,
                "{region} {} {} {} {o} {} {} {:.16e}",
                b.j,
                b.k[0],
                b.k[1],
                join(&b.counts),
                join(&b.strides),
                b.beta
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Dense(Vec<f64>),
    /// (flat index, value), strictly increasing in flat index.
    Sparse(Vec<(usize, f64)>),
}

#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub layout: Arc<Layout>,
    pub entries: Entries,
    /// Set when a selection asked for more entries than exist.
    pub saturated: bool,
}

impl CoefficientSet {
    pub fn dense(layout: Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total {
            return Err(Error::Consistency(format!("{} values for {} coefficients", values.len(), layout.total)));
        }
        Ok(Self { layout, entries: Entries::Dense(values), saturated: false })
    }

    pub fn zeros(layout: Arc<Layout>) -> Self {
        let n = layout.total;
        Self { layout, entries: Entries::Dense(vec![0.0; n]), saturated: false }
    }

    pub fn sparse(layout: Arc<Layout>, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Consistency("duplicate coefficient index".into()));
        }
        if let Some(&(last, _)) = entries.last() {
            if last >= layout.total {
                return Err(Error::Consistency(format!("index {last} outside system of {}", layout.total)));
            }
        }
        Ok(Self { layout, entries: Entries::Sparse(entries), saturated: false })
    }

    pub fn total(&self) -> usize {
        self.layout.total
    }

    /// Number of stored entries.
    pub fn stored(&self) -> usize {
        match &self.entries {
            Entries::Dense(v) => v.len(),
            Entries::Sparse(v) => v.len(),
        }
    }

    pub fn get(&self, flat: usize) -> f64 {
        match &self.entries {
            Entries::Dense(v) => v.get(flat).copied().unwrap_or(0.0),
            Entries::Sparse(v) => v.binary_search_by_key(&flat, |e| e.0).map(|i| v[i].1).unwrap_or(0.0),
        }
    }

    /// Stored (flat, value) pairs in flat order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match &self.entries {
            Entries::Dense(v) => Box::new(v.iter().copied().enumerate()),
            Entries::Sparse(v) => Box::new(v.iter().copied()),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match &self.entries {
            Entries::Dense(v) => v.clone(),
            Entries::Sparse(v) => {
                let mut out = vec![0.0; self.layout.total];
                for &(i, x) in v {
                    out[i] = x;
                }
                out
            }
        }
    }

    pub fn energy(&self) -> f64 {
        self.iter().map(|(_, v)| v * v).sum()
    }

    pub fn dot(&self, other: &CoefficientSet) -> f64 {
        match (&self.entries, &other.entries) {
            (Entries::Dense(a), Entries::Dense(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Entries::Sparse(a), _) => a.iter().map(|&(i, x)| x * other.get(i)).sum(),
            (_, Entries::Sparse(b)) => b.iter().map(|&(i, y)| y * self.get(i)).sum(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Cand {
    mag: f64,
    flat: usize,
}

impl PartialEq for Cand {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cand {}
impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cand {
    /// Greater = worse: smaller magnitude, then later flat index.
    fn cmp(&self, o: &Self) -> Ordering {
        o.mag.total_cmp(&self.mag).then(self.flat.cmp(&o.flat))
    }
}

/// The n best entries by (|value| descending, flat index ascending), in rank order.
pub fn ranked_largest(c: &CoefficientSet, n: usize) -> Vec<(usize, f64)> {
    if n == 0 {
        return Vec::new();
    }
    let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(n + 1);
    for (flat, v) in c.iter() {
        let cand = Cand { mag: v.abs(), flat };
        if heap.len() < n {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }
    }
    heap.into_sorted_vec().into_iter().map(|k| (k.flat, c.get(k.flat))).collect()
}

/// Sparse set with exactly min(n, total) entries of largest magnitude; ties go to the
/// earlier index. `saturated` is set when n exceeds the coefficient count.
pub fn n_largest(c: &CoefficientSet, n: usize) -> CoefficientSet {
    let saturated = n > c.total();
    let kept = ranked_largest(c, n.min(c.stored()));
    let mut out = prefix_set(c.layout.clone(), &kept);
    out.saturated = saturated;
    out
}

/// Sparse set from the first entries of a ranking.
pub fn prefix_set(layout: Arc<Layout>, ranked: &[(usize, f64)]) -> CoefficientSet {
    let mut e = ranked.to_vec();
    e.sort_by_key(|x| x.0);
    CoefficientSet { layout, entries: Entries::Sparse(e), saturated: false }
}

/// Keep entries with |value| > τ.
pub fn hard_threshold(c: &CoefficientSet, tau: f64) -> CoefficientSet {
    let kept = c.iter().filter(|(_, v)| v.abs() > tau).collect();
    CoefficientSet { layout: c.layout.clone(), entries: Entries::Sparse(kept), saturated: false }
}
