//! Solvers for the assembled systems: a direct symmetric-indefinite KKT
//! solve, SPD solves, the dual conjugate gradient and the inf-sup estimator.

pub mod cg;
pub mod envelope;
pub mod infsup;
pub mod saddle;
pub mod spd;

use serde::{Deserialize, Serialize};

pub use cg::{cg_dual, CgOptions, DualCgSolution, DualProblem};
pub use envelope::{EnvelopeLdl, PivotCheck};
pub use infsup::{infsup_estimate, InfSupEstimate, InfSupOptions};
pub use saddle::{kkt_ordering, solve_saddle, SaddleFactor, SaddleSolution};
pub use spd::{solve_spd, SpdFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Direct,
    CgDual,
    InverseIteration,
}

/// What a solver did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub method: SolveMethod,
    /// Refinement steps (direct), CG iterations or eigen-iterations.
    pub iterations: usize,
    /// Relative residual at exit.
    pub final_residual: f64,
    pub converged: bool,
    /// Whether one factorization served all the inner solves.
    pub factorization_reused: bool,
    /// Residual norms per iteration (CG only), starting with the initial one.
    pub residual_history: Vec<f64>,
}
