//! End-to-end reconstruction experiments: build the observation, assemble,
//! solve, and measure every error against the exact solution.

mod config;
pub mod metrics;
pub mod table;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_ar, assemble_b, assemble_j, assemble_mixed, assemble_source_blocks, assemble_stabilized, q1_l2_norm, residual_norm, Coefficients,
    ObservationTrace, Sigma,
};
use crate::error::{config, Result};
use crate::linsolve::{
    cg_dual, infsup_estimate, solve_saddle, CgOptions, DualProblem, InfSupEstimate, InfSupOptions, SolveDiagnostics,
    SpdFactor,
};
use crate::manufactured::{ex1_series, sample_observation, source_series, FourierState, MuSpec};
use crate::mesh::{DofMap, MeshSpec, SpaceKind};

pub use config::{Example, Formulation, ProblemConfig, RPolicy};
pub use table::{Rates, CONVERGENCE_COLUMNS};
pub use metrics::{error_l2_qt, error_mu_hminus1, hermite_l2_norm, rate_fit, trace_error, ErrorNorms};

/// Exact solution of an experiment.
#[derive(Debug, Clone)]
pub struct Oracle {
    /// Series for field values (moderate mode count).
    pub field: FourierState,
    /// Series for boundary traces (possibly many more modes).
    pub trace: FourierState,
    pub mu: Option<MuSpec>,
}

/// Every quantity reported for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub example: Example,
    pub formulation: Formulation,
    pub nx: usize,
    pub nt: usize,
    pub h: f64,
    pub r: f64,
    pub alpha: Option<f64>,
    pub state_dofs: usize,
    pub source_dofs: usize,
    pub multiplier_dofs: usize,
    pub state_error: Option<ErrorNorms>,
    pub trace_error: Option<ErrorNorms>,
    /// `||L y_h||`, or `||L y_h - sigma mu_h||` for source runs.
    pub norm_residual: f64,
    /// `||lambda_h||_{L^2(Q_T)}`.
    pub norm_multiplier: f64,
    /// `sqrt(lambda^T C lambda)`, stabilized runs only.
    pub norm_multiplier_stabilized: Option<f64>,
    pub mu_error: Option<ErrorNorms>,
    pub diagnostics: SolveDiagnostics,
    /// Wall-clock time of assembly, solve and error evaluation.
    pub elapsed_seconds: f64,
}

impl ReconstructionReport {
    pub fn rel_state_error(&self) -> Option<f64> {
        self.state_error.and_then(|e| e.rel)
    }

    pub fn rel_trace_error(&self) -> Option<f64> {
        self.trace_error.and_then(|e| e.rel)
    }

    pub fn rel_mu_error(&self) -> Option<f64> {
        self.mu_error.and_then(|e| e.rel)
    }
}

/// A report together with the discrete solution.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub mesh: MeshSpec,
    pub report: ReconstructionReport,
    pub state: Vec<f64>,
    pub multiplier: Vec<f64>,
    /// Nodal values of `mu_h` (source runs).
    pub source: Option<Vec<f64>>,
}

/// Mesh with `dt = dx` covering `(0,1) x (0,T)`.
pub fn mesh_for(cfg: &ProblemConfig) -> Result<MeshSpec> {
    MeshSpec::square_cells(cfg.nx, cfg.t_final)
}

/// The exact solution of the configured example, if it has one.
pub fn oracle_for(cfg: &ProblemConfig) -> Result<Option<Oracle>> {
    Ok(match cfg.example {
        Example::Ex1 => Some(Oracle {
            field: ex1_series(cfg.field_modes)?,
            trace: ex1_series(cfg.trace_modes)?,
            mu: None,
        }),
        Example::SingleMode => Some(Oracle {
            field: FourierState::single_mode(),
            trace: FourierState::single_mode(),
            mu: None,
        }),
        Example::Ex3 | Example::Ex4 | Example::Ex5 => {
            let mu = cfg.example.mu().expect("driven example");
            let series = source_series(&mu, Sigma::one_plus_t(), cfg.field_modes)?;
            Some(Oracle {
                field: series.clone(),
                trace: series,
                mu: Some(mu),
            })
        }
        Example::File => None,
    })
}

/// The observation of the configured example (exact trace plus optional noise,
/// or the contents of the observation file).
pub fn observation_for(cfg: &ProblemConfig, mesh: &MeshSpec, oracle: Option<&Oracle>) -> Result<ObservationTrace> {
    match (oracle, &cfg.obs_file) {
        (_, Some(path)) if cfg.example == Example::File => {
            let obs = ObservationTrace::load_csv(path, cfg.side, cfg.t_final)?;
            match cfg.noise {
                Some(n) => obs.with_noise(cfg.t_final, 0, n),
                None => Ok(obs),
            }
        }
        (Some(o), _) => sample_observation(&o.trace, mesh, cfg.side, cfg.noise),
        _ => config("no observation available: set an example with an exact solution or an observation file"),
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &ProblemConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    let mesh = mesh_for(cfg)?;
    let oracle = oracle_for(cfg)?;
    let obs = observation_for(cfg, &mesh, oracle.as_ref())?;
    reconstruct_with(cfg, &obs, oracle.as_ref())
}

/// Runs the configured formulation on a given observation; errors are measured
/// when an oracle is supplied.
pub fn reconstruct_with(cfg: &ProblemConfig, obs: &ObservationTrace, oracle: Option<&Oracle>) -> Result<Reconstruction> {
    cfg.validate()?;
    if obs.side() != cfg.side {
        return config(format!("observation is on the {} side, configuration says {}", obs.side(), cfg.side));
    }
    match cfg.formulation {
        Formulation::Mixed | Formulation::DualCg => reconstruct_state(cfg, obs, oracle),
        Formulation::Stabilized => reconstruct_state_stabilized(cfg, obs, oracle),
        Formulation::Source => reconstruct_state_source(cfg, obs, oracle),
    }
}

struct Metrics {
    state_error: Option<ErrorNorms>,
    trace_error: Option<ErrorNorms>,
}

fn state_metrics(cfg: &ProblemConfig, mesh: &MeshSpec, zmap: &DofMap, y: &[f64], oracle: Option<&Oracle>) -> Metrics {
    match oracle {
        Some(o) => Metrics {
            state_error: Some(error_l2_qt(mesh, zmap, y, &o.field, cfg.error_order)),
            trace_error: Some(trace_error(mesh, zmap, y, &o.trace, cfg.side, 8)),
        },
        None => Metrics {
            state_error: None,
            trace_error: None,
        },
    }
}

/// Mixed formulation on `(Z_h, Q1)`, solved directly or by dual CG.
pub fn reconstruct_state(cfg: &ProblemConfig, obs: &ObservationTrace, oracle: Option<&Oracle>) -> Result<Reconstruction> {
    let start = Instant::now();
    let mesh = mesh_for(cfg)?;
    let r = cfg.r.value(mesh.h);
    let coeffs = Coefficients::default();
    let zmap = DofMap::new(&mesh, SpaceKind::ZhState);
    let lmap = DofMap::new(&mesh, SpaceKind::Q1Multiplier);
    let sys = assemble_mixed(&mesh, &zmap, &lmap, &coeffs, r, std::slice::from_ref(obs))?;
    let (state, multiplier, diagnostics) = match cfg.formulation {
        Formulation::DualCg => {
            if !(r > 0.0) {
                return config("dual conjugate gradient needs r > 0");
            }
            let a = SpdFactor::new(&sys.a)?;
            let j = SpdFactor::new(&assemble_j(&mesh, &lmap))?;
            let problem = DualProblem {
                a: &a,
                b: &sys.b,
                j: &j,
                l: &sys.rhs_primal,
            };
            let sol = cg_dual(
                &problem,
                CgOptions {
                    tol: cfg.cg_tol,
                    max_iter: cfg.cg_max_iter,
                },
            )?;
            (sol.state, sol.multiplier, sol.diagnostics)
        }
        _ => {
            let sol = solve_saddle(&sys)?;
            (sol.state, sol.multiplier, sol.diagnostics)
        }
    };
    let metrics = state_metrics(cfg, &mesh, &zmap, &state, oracle);
    let report = ReconstructionReport {
        example: cfg.example,
        formulation: cfg.formulation,
        nx: mesh.nx,
        nt: mesh.nt,
        h: mesh.h,
        r,
        alpha: None,
        state_dofs: zmap.n_free(),
        source_dofs: 0,
        multiplier_dofs: lmap.n_free(),
        state_error: metrics.state_error,
        trace_error: metrics.trace_error,
        norm_residual: residual_norm(&mesh, &zmap, &coeffs, &state, None, cfg.error_order),
        norm_multiplier: q1_l2_norm(&mesh, &lmap, &multiplier),
        norm_multiplier_stabilized: None,
        mu_error: None,
        diagnostics,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Reconstruction {
        mesh,
        report,
        state,
        multiplier,
        source: None,
    })
}

/// Stabilized formulation with multipliers in the BFS space with zero initial data.
pub fn reconstruct_state_stabilized(
    cfg: &ProblemConfig,
    obs: &ObservationTrace,
    oracle: Option<&Oracle>,
) -> Result<Reconstruction> {
    let start = Instant::now();
    let mesh = mesh_for(cfg)?;
    let r = cfg.r.value(mesh.h);
    let coeffs = Coefficients::default();
    let zmap = DofMap::new(&mesh, SpaceKind::ZhState);
    let lmap = DofMap::new(&mesh, SpaceKind::ZhZeroInitial);
    let sys = assemble_stabilized(
        &mesh,
        &zmap,
        &lmap,
        &coeffs,
        r,
        cfg.alpha,
        std::slice::from_ref(obs),
        cfg.hminus1_refine,
    )?;
    let sol = solve_saddle(&sys)?;
    let c_norm = sys.c.as_ref().map(|c| c.bilinear(&sol.multiplier, &sol.multiplier).max(0.0).sqrt());
    let metrics = state_metrics(cfg, &mesh, &zmap, &sol.state, oracle);
    let report = ReconstructionReport {
        example: cfg.example,
        formulation: cfg.formulation,
        nx: mesh.nx,
        nt: mesh.nt,
        h: mesh.h,
        r,
        alpha: Some(cfg.alpha),
        state_dofs: zmap.n_free(),
        source_dofs: 0,
        multiplier_dofs: lmap.n_free(),
        state_error: metrics.state_error,
        trace_error: metrics.trace_error,
        norm_residual: residual_norm(&mesh, &zmap, &coeffs, &sol.state, None, cfg.error_order),
        norm_multiplier: hermite_l2_norm(&mesh, &lmap, &sol.multiplier, cfg.error_order),
        norm_multiplier_stabilized: c_norm,
        mu_error: None,
        diagnostics: sol.diagnostics,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Reconstruction {
        mesh,
        report,
        state: sol.state,
        multiplier: sol.multiplier,
        source: None,
    })
}

/// Joint reconstruction of `y` (zero initial data) and `mu` (P1 in `x`),
/// with the source profile `sigma(t) = 1 + t`.
pub fn reconstruct_state_source(
    cfg: &ProblemConfig,
    obs: &ObservationTrace,
    oracle: Option<&Oracle>,
) -> Result<Reconstruction> {
    let start = Instant::now();
    let mesh = mesh_for(cfg)?;
    let r = cfg.r.value(mesh.h);
    let coeffs = Coefficients::default().with_sigma(Sigma::one_plus_t());
    let zmap = DofMap::new(&mesh, SpaceKind::ZhZeroInitial);
    let smap = DofMap::new(&mesh, SpaceKind::P1Source);
    let lmap = DofMap::new(&mesh, SpaceKind::Q1Multiplier);
    let sys = assemble_source_blocks(&mesh, &zmap, &smap, &lmap, &coeffs, r, std::slice::from_ref(obs))?;
    let sol = solve_saddle(&sys)?;
    let ny = zmap.n_free();
    let mut state = sol.state;
    let source = state.split_off(ny);
    let metrics = state_metrics(cfg, &mesh, &zmap, &state, oracle);
    let mu_error = match oracle.and_then(|o| o.mu.as_ref()) {
        Some(mu) => Some(error_mu_hminus1(&mesh, &source, mu, cfg.mu_cells)?),
        None => None,
    };
    let report = ReconstructionReport {
        example: cfg.example,
        formulation: cfg.formulation,
        nx: mesh.nx,
        nt: mesh.nt,
        h: mesh.h,
        r,
        alpha: None,
        state_dofs: ny,
        source_dofs: source.len(),
        multiplier_dofs: lmap.n_free(),
        state_error: metrics.state_error,
        trace_error: metrics.trace_error,
        norm_residual: residual_norm(&mesh, &zmap, &coeffs, &state, Some(&source), cfg.error_order),
        norm_multiplier: q1_l2_norm(&mesh, &lmap, &sol.multiplier),
        norm_multiplier_stabilized: None,
        mu_error,
        diagnostics: sol.diagnostics,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Reconstruction {
        mesh,
        report,
        state,
        multiplier: sol.multiplier,
        source: Some(source),
    })
}

/// Discrete inf-sup constant of one mesh and augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSupReport {
    pub nx: usize,
    pub nt: usize,
    pub h: f64,
    pub r: f64,
    #[serde(flatten)]
    pub estimate: InfSupEstimate,
}

/// `delta_h` of the mixed pair on the mesh of `cfg`, with its augmentation and side.
pub fn infsup_for(cfg: &ProblemConfig, opts: InfSupOptions) -> Result<InfSupReport> {
    let mesh = mesh_for(cfg)?;
    let r = cfg.r.value(mesh.h);
    let coeffs = Coefficients::default();
    let zmap = DofMap::new(&mesh, SpaceKind::ZhState);
    let lmap = DofMap::new(&mesh, SpaceKind::Q1Multiplier);
    let a = assemble_ar(&mesh, &zmap, &coeffs, r, &[cfg.side])?;
    let b = assemble_b(&mesh, &zmap, &lmap, &coeffs)?;
    let j = assemble_j(&mesh, &lmap);
    Ok(InfSupReport {
        nx: mesh.nx,
        nt: mesh.nt,
        h: mesh.h,
        r,
        estimate: infsup_estimate(&a, &b, &j, opts)?,
    })
}

#[cfg(test)]
mod tests;
