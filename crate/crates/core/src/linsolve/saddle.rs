use serde::{Deserialize, Serialize};

use crate::assembly::BlockSaddleSystem;
use crate::error::Result;
use crate::linsolve::envelope::{EnvelopeLdl, PivotCheck};
use crate::linsolve::{SolveDiagnostics, SolveMethod};
use crate::sparse::norm2;

/// Ordering for the KKT matrix that keeps every leading block nonsingular.
///
/// Primal dofs keep their (banded) order. Each multiplier is placed right
/// after the last primal column its constraint row touches, so a leading
/// block always has the form `[[A11, B1^T], [B1, -C11]]` with `B1` made of
/// complete rows of `B`. With `A` positive definite and `B` of full row rank
/// (the discrete inf-sup condition), each such block is nonsingular. Border
/// primal dofs, which couple to everything, go last to keep the envelope
/// narrow; their constraint contributions are excluded from the placement.
pub fn kkt_ordering(sys: &BlockSaddleSystem) -> Vec<usize> {
    let n = sys.n_primal();
    let m = sys.n_dual();
    let inner = n - sys.primal_border;
    let mut slots: Vec<Vec<usize>> = vec![Vec::new(); inner];
    let mut orphans = Vec::new();
    for k in 0..m {
        let (cols, _) = sys.b.row(k);
        match cols.iter().rev().find(|&&j| j < inner) {
            Some(&j) => slots[j].push(n + k),
            None => orphans.push(n + k),
        }
    }
    let mut perm = Vec::with_capacity(n + m);
    for (j, after) in slots.into_iter().enumerate() {
        perm.push(j);
        perm.extend(after);
    }
    perm.extend(inner..n);
    perm.extend(orphans);
    perm
}

/// Factorized KKT system ready for repeated solves.
#[derive(Debug)]
pub struct SaddleFactor<'a> {
    sys: &'a BlockSaddleSystem,
    ldl: EnvelopeLdl,
}

/// Solution of a saddle-point system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub state: Vec<f64>,
    pub multiplier: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

impl<'a> SaddleFactor<'a> {
    /// Factorizes `[[A, B^T], [B, -C]]`; a vanishing pivot is reported as
    /// [`crate::Error::SingularSaddle`], the symptom of a failing inf-sup condition.
    pub fn new(sys: &'a BlockSaddleSystem) -> Result<Self> {
        let kkt = sys.kkt_matrix();
        let ldl = EnvelopeLdl::factor(&kkt, Some(kkt_ordering(sys)), PivotCheck::Nonzero)?;
        Ok(Self { sys, ldl })
    }

    pub fn system(&self) -> &BlockSaddleSystem {
        self.sys
    }

    pub fn envelope_size(&self) -> usize {
        self.ldl.envelope_size()
    }

    /// Number of negative pivots; equals the multiplier count for a
    /// well-posed saddle-point system.
    pub fn negative_pivots(&self) -> usize {
        self.ldl.negative_pivots()
    }

    /// Solves with right-hand side `(f, g)` and iterative refinement against the
    /// original blocks. Returns `(y, lambda, relative residual, refinement steps)`.
    pub fn solve_with(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>, f64, usize) {
        let n = self.sys.n_primal();
        let rhs: Vec<f64> = f.iter().chain(g).cloned().collect();
        let scale = norm2(&rhs);
        let mut sol = self.ldl.solve(&rhs);
        let mut rel = 0.0;
        let mut steps = 0;
        if scale == 0.0 {
            return (vec![0.0; n], vec![0.0; g.len()], 0.0, 0);
        }
        for step in 0..=3 {
            let (r1, r2) = self.sys.residuals_with(&sol[..n], &sol[n..], f, g);
            let r: Vec<f64> = r1.into_iter().chain(r2).map(|v| -v).collect();
            rel = norm2(&r) / scale;
            steps = step;
            if rel < 1e-14 || step == 3 {
                break;
            }
            let dx = self.ldl.solve(&r);
            sol.iter_mut().zip(dx).for_each(|(s, d)| *s += d);
        }
        let lambda = sol.split_off(n);
        (sol, lambda, rel, steps)
    }

    pub fn solve(&self) -> SaddleSolution {
        let (state, multiplier, rel, steps) = self.solve_with(&self.sys.rhs_primal, &self.sys.rhs_dual);
        SaddleSolution {
            state,
            multiplier,
            diagnostics: SolveDiagnostics {
                method: SolveMethod::Direct,
                iterations: steps,
                final_residual: rel,
                converged: rel < 1e-10,
                factorization_reused: false,
                residual_history: Vec::new(),
            },
        }
    }
}

/// Factorizes and solves the KKT system once.
pub fn solve_saddle(sys: &BlockSaddleSystem) -> Result<SaddleSolution> {
    Ok(SaddleFactor::new(sys)?.solve())
}
