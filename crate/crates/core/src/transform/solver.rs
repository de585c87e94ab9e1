//! Frame inversion S x = y by the conjugate residual method (a CG-family Krylov solver
//! whose residual norm is non-increasing for symmetric positive semi-definite S).

use super::plan::{Raster, TransformPlan};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Precondition with the inverse Fourier diagonal of S (residual then decreases in the
    /// preconditioned norm only).
    pub precondition: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200, precondition: false }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Raster,
    pub iterations: usize,
    /// Relative residual ‖y − Sx‖/‖y‖, starting with the initial guess.
    pub history: Vec<f64>,
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve S x = y starting from `x0` (zero when None).
pub fn invert_frame(plan: &TransformPlan, y: &Raster, opts: &SolveOptions, x0: Option<&Raster>) -> Result<Solution> {
    if opts.tol <= 0.0 || opts.tol.is_nan() {
        return Err(Error::Constraint(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let ynorm = y.norm();
    let mut x = match x0 {
        Some(x0) => x0.clone(),
        None => Raster::zeros(&y.extents),
    };
    if ynorm == 0.0 {
        return Ok(Solution { x: Raster::zeros(&y.extents), iterations: 0, history: vec![0.0] });
    }
    let mut r = y.clone();
    if x0.is_some() {
        let sx = plan.frame_operator(&x)?;
        axpy(-1.0, &sx.data, &mut r.data);
    }
    let precond = |v: &Raster| if opts.precondition { plan.apply_inverse_diagonal(v) } else { v.clone() };
    let mut history = vec![r.norm() / ynorm];
    if history[0] <= opts.tol {
        return Ok(Solution { x, iterations: 0, history });
    }
    // z = M r, w = S z, p = z, q = w; α = (z,w)/(q,Mq)
    let mut z = precond(&r);
    let mut w = plan.frame_operator(&z)?;
    let mut p = z.clone();
    let mut q = w.clone();
    let mut zw = dot(&z.data, &w.data);
    for it in 1..=opts.max_iter {
        let mq = precond(&q);
        let denom = dot(&q.data, &mq.data);
        if !(denom > 0.0) || !(zw > 0.0) {
            break;
        }
        let alpha = zw / denom;
        axpy(alpha, &p.data, &mut x.data);
        axpy(-alpha, &q.data, &mut r.data);
        axpy(-alpha, &mq.data, &mut z.data);
        let rel = r.norm() / ynorm;
        history.push(rel);
        if rel <= opts.tol {
            return Ok(Solution { x, iterations: it, history });
        }
        w = plan.frame_operator(&z)?;
        let zw_new = dot(&z.data, &w.data);
        let beta = zw_new / zw;
        zw = zw_new;
        for (pi, zi) in p.data.iter_mut().zip(&z.data) {
            *pi = zi + beta * *pi;
        }
        for (qi, wi) in q.data.iter_mut().zip(&w.data) {
            *qi = wi + beta * *qi;
        }
    }
    Err(Error::Solver { iterations: history.len() - 1, last: *history.last().unwrap(), history, context: None })
}
