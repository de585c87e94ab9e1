//! Digital shearlet analysis and synthesis on periodic rasters, frame inversion,
//! N-term selection and thresholding.

mod coeffs;
mod plan;
mod solver;

pub use coeffs::{hard_threshold, n_largest, prefix_set, ranked_largest, CoefficientSet, Entries, Layout};
pub use plan::{Precision, Raster, TransformPlan};
pub use solver::{invert_frame, SolveOptions, Solution};


use crate::systems::SystemSpec;
use crate::Result;

/// One-shot analysis (builds a plan; reuse a [`TransformPlan`] for repeated calls).
pub fn analyze(f: &Raster, spec: &SystemSpec) -> Result<CoefficientSet> {
    TransformPlan::new(spec, &f.extents)?.analyze(f)
}

pub fn synthesize(c: &CoefficientSet, spec: &SystemSpec) -> Result<Raster> {
    TransformPlan::new(spec, &c.layout.extents)?.synthesize(c)
}

pub fn frame_operator(f: &Raster, spec: &SystemSpec) -> Result<Raster> {
    TransformPlan::new(spec, &f.extents)?.frame_operator(f)
}

/// Σ_{i∈I_N} ⟨f,σ_i⟩ σ̃_i = S^{−1} Σ_{i∈I_N} ⟨f,σ_i⟩ σ_i.
pub fn reconstruct_nterm(plan: &TransformPlan, f: &Raster, n: usize, opts: &SolveOptions) -> Result<Raster> {
    let c = plan.analyze(f)?;
    let kept = n_largest(&c, n);
    let y = plan.synthesize(&kept)?;
    Ok(invert_frame(plan, &y, opts, None).map_err(|e| e.with_context(format!("N = {n}")))?.x)
}
