//! Picard iteration on the SPD cone with optional Anderson acceleration.
//!
//! Every accepted iterate has a smaller Thompson residual `d_T(X, F(X))`
//! than the one before. An Anderson candidate that is not positive definite
//! or does not improve the residual is discarded in favour of the plain
//! Picard step `F(X)`, whose residual cannot exceed the current one because
//! the maps solved here are non-expansive.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::matrix_mean::SolveReport;
use crate::spd::{thompson_dist, SpdMatrix};

pub(crate) struct Driver {
    pub tol: f64,
    pub max_iter: usize,
    pub depth: usize,
}

fn flatten(m: &SpdMatrix) -> DVector<f64> {
    DVector::from_column_slice(m.as_matrix().as_slice())
}

impl Driver {
    pub fn solve<F>(&self, map: F, x0: SpdMatrix) -> Result<(SpdMatrix, SolveReport)>
    where
        F: Fn(&SpdMatrix) -> Result<SpdMatrix>,
    {
        self.solve_observed(map, x0, |_| {})
    }

    /// As [`Driver::solve`], calling `observe` on every accepted iterate
    /// (including the start).
    pub fn solve_observed<F, O>(
        &self,
        map: F,
        x0: SpdMatrix,
        mut observe: O,
    ) -> Result<(SpdMatrix, SolveReport)>
    where
        F: Fn(&SpdMatrix) -> Result<SpdMatrix>,
        O: FnMut(&SpdMatrix),
    {
        let dim = x0.dim();
        let mut x = x0;
        let mut fx = map(&x)?;
        let mut res = thompson_dist(&x, &fx)?;
        observe(&x);
        // (iterate, residual vector F(x) − x) pairs, oldest first
        let mut hist: VecDeque<(DVector<f64>, DVector<f64>)> = VecDeque::new();
        let mut iterations = 0;
        while res > self.tol {
            if iterations >= self.max_iter {
                return Ok((
                    x,
                    SolveReport {
                        iterations,
                        residual: res,
                        converged: false,
                    },
                ));
            }
            iterations += 1;
            let xv = flatten(&x);
            let gv = flatten(&fx);
            let rv = &gv - &xv;
            if self.depth > 0 {
                hist.push_back((gv.clone(), rv.clone()));
                if hist.len() > self.depth + 1 {
                    hist.pop_front();
                }
            }

            let mut accepted = false;
            if hist.len() >= 2 {
                if let Some(cand) = anderson_candidate(&hist, dim) {
                    if let Ok(c) = SpdMatrix::new(cand) {
                        if let Ok(fc) = map(&c) {
                            let rc = thompson_dist(&c, &fc)?;
                            if rc < res {
                                x = c;
                                fx = fc;
                                res = rc;
                                accepted = true;
                            }
                        }
                    }
                }
            }
            if !accepted {
                hist.clear();
                if self.depth > 0 {
                    hist.push_back((gv, rv));
                }
                let next = fx;
                fx = map(&next)?;
                res = thompson_dist(&next, &fx)?;
                x = next;
            }
            observe(&x);
        }
        Ok((
            x,
            SolveReport {
                iterations,
                residual: res,
                converged: true,
            },
        ))
    }
}

/// Type-II Anderson mixing over the stored history `(g_i, r_i)`:
/// `x = g_k − ΔG γ` with `γ = argmin ‖r_k − ΔR γ‖`.
fn anderson_candidate(
    hist: &VecDeque<(DVector<f64>, DVector<f64>)>,
    dim: usize,
) -> Option<DMatrix<f64>> {
    let m = hist.len() - 1;
    let n = hist[0].0.len();
    let mut dr = DMatrix::zeros(n, m);
    let mut dg = DMatrix::zeros(n, m);
    for i in 0..m {
        dr.set_column(i, &(&hist[i + 1].1 - &hist[i].1));
        dg.set_column(i, &(&hist[i + 1].0 - &hist[i].0));
    }
    let (gk, rk) = &hist[m];
    let scale = dr.norm();
    if !(scale > 0.0) {
        return None;
    }
    let svd = dr.svd(true, true);
    let gamma = svd.solve(rk, 1e-12 * scale).ok()?;
    let x = gk - dg * gamma;
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mat = DMatrix::from_column_slice(dim, dim, x.as_slice());
    Some((&mat + mat.transpose()) * 0.5)
}
