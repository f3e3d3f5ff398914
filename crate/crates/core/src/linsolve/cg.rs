//! Conjugate gradient on the multiplier (dual) problem.
//!
//! Eliminating `y = A^{-1} (l - B^T lambda)` from the mixed system leaves
//! `M lambda = B A^{-1} l` with `M = B A^{-1} B^T`. The operator
//! `P = J^{-1} M` is symmetric and positive definite for the `J` inner
//! product, so CG applies in that inner product. Each iteration costs one
//! solve with `A` and one with the mass matrix `J`; the residual
//! `g = J^{-1} B y` is the `L^2` projection of `L y` on the multiplier space.

use crate::error::{config, Result};
use crate::linsolve::spd::SpdFactor;
use crate::linsolve::{SolveDiagnostics, SolveMethod};
use crate::sparse::{axpy, dot, CsrMatrix};

use serde::{Deserialize, Serialize};

/// Stopping rule of the dual CG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    /// Stop when `||g_n||_J <= tol ||g_0||_J`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

/// The blocks of the dual problem.
pub struct DualProblem<'a> {
    pub a: &'a SpdFactor,
    pub b: &'a CsrMatrix,
    pub j: &'a SpdFactor,
    pub l: &'a [f64],
}

impl DualProblem<'_> {
    /// `P lambda = J^{-1} B A^{-1} B^T lambda`.
    pub fn apply(&self, lambda: &[f64]) -> Vec<f64> {
        let y = self.a.solve(&self.b.tr_mul_vec(lambda));
        self.j.solve(&self.b.mul_vec(&y))
    }

    /// `<u, v>_J`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.j.matrix().mul_vec(v))
    }
}

/// Result of [`cg_dual`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCgSolution {
    pub state: Vec<f64>,
    pub multiplier: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

/// Dual conjugate gradient from `lambda_0 = 0`. Non-convergence within
/// `max_iter` is reported through `diagnostics.converged`, not as an error.
pub fn cg_dual(problem: &DualProblem<'_>, opts: CgOptions) -> Result<DualCgSolution> {
    if !(opts.tol > 0.0) {
        return config(format!("CG tolerance must be positive, got {}", opts.tol));
    }
    let m = problem.b.nrows();
    let jm = problem.j.matrix();
    let mut lambda = vec![0.0; m];
    let mut y = problem.a.solve(problem.l);
    let mut g = problem.j.solve(&problem.b.mul_vec(&y));
    let mut gg = dot(&g, &jm.mul_vec(&g));
    let g0 = gg.sqrt();
    let mut history = vec![g0];
    let mut iterations = 0;
    let mut converged = g0 == 0.0;
    let mut w = g.clone();
    while !converged && iterations < opts.max_iter {
        let yhat = problem.a.solve(&problem.b.tr_mul_vec(&w));
        let bw = problem.b.mul_vec(&yhat);
        let pw = problem.j.solve(&bw);
        let curvature = dot(&w, &bw);
        if !(curvature > 0.0) {
            break;
        }
        let rho = gg / curvature;
        axpy(rho, &w, &mut lambda);
        axpy(-rho, &yhat, &mut y);
        axpy(-rho, &pw, &mut g);
        let gg_new = dot(&g, &jm.mul_vec(&g));
        iterations += 1;
        history.push(gg_new.sqrt());
        if gg_new.sqrt() <= opts.tol * g0 {
            converged = true;
            break;
        }
        let gamma = gg_new / gg;
        gg = gg_new;
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi = gi + gamma * *wi;
        }
    }
    let final_residual = if g0 > 0.0 { history.last().unwrap() / g0 } else { 0.0 };
    Ok(DualCgSolution {
        state: y,
        multiplier: lambda,
        diagnostics: SolveDiagnostics {
            method: SolveMethod::CgDual,
            iterations,
            final_residual,
            converged,
            factorization_reused: true,
            residual_history: history,
        },
    })
}
