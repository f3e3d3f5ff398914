use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assembly::NoiseSpec;
use crate::error::{config, Error, Result};
use crate::manufactured::{MuSpec, FIELD_MODES, TRACE_MODES};
use crate::mesh::Side;

/// Source of the observation (and of the exact solution, when known).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    /// Free wave from `y_0 = 1 - |2x - 1|` with an indicator-like velocity.
    Ex1,
    /// Driven from rest by `(1 + t) mu(x)`, hat-shaped `mu`.
    Ex3,
    /// Same, with `mu` the indicator of `[0.2, 0.5]`.
    Ex4,
    /// Same, with `mu = 1 / sqrt(x)`.
    Ex5,
    /// `sin(pi x) cos(pi t)`.
    SingleMode,
    /// Observation read from a CSV file; no exact solution.
    File,
}

impl Example {
    pub const ALL: [Example; 6] = [
        Example::Ex1,
        Example::Ex3,
        Example::Ex4,
        Example::Ex5,
        Example::SingleMode,
        Example::File,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Example::Ex1 => "ex1",
            Example::Ex3 => "ex3",
            Example::Ex4 => "ex4",
            Example::Ex5 => "ex5",
            Example::SingleMode => "single-mode",
            Example::File => "file",
        }
    }

    /// The source profile of the driven examples.
    pub fn mu(self) -> Option<MuSpec> {
        match self {
            Example::Ex3 => Some(MuSpec::ex3()),
            Example::Ex4 => Some(MuSpec::ex4()),
            Example::Ex5 => Some(MuSpec::ex5()),
            _ => None,
        }
    }
}

/// Which discrete problem is solved, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// Mixed problem, direct KKT solve.
    Mixed,
    /// Mixed problem with an `alpha`-weighted coercive multiplier term.
    Stabilized,
    /// Mixed problem, conjugate gradient on the multiplier.
    DualCg,
    /// Joint reconstruction of the state and the source `mu`.
    Source,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [
        Formulation::Mixed,
        Formulation::Stabilized,
        Formulation::DualCg,
        Formulation::Source,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Mixed => "mixed",
            Formulation::Stabilized => "stabilized",
            Formulation::DualCg => "dual-cg",
            Formulation::Source => "source",
        }
    }
}

fn parse_named<T: Copy>(s: &str, all: &[T], name: impl Fn(T) -> &'static str, what: &str) -> Result<T> {
    let key = s.trim().to_ascii_lowercase().replace('_', "-");
    all.iter().copied().find(|&v| name(v) == key).ok_or_else(|| {
        let valid: Vec<&str> = all.iter().map(|&v| name(v)).collect();
        Error::Config(format!("unknown {what} '{s}' (valid: {})", valid.join(", ")))
    })
}

impl FromStr for Example {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_named(s, &Example::ALL, Example::name, "example")
    }
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_named(s, &Formulation::ALL, Formulation::name, "formulation")
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Augmentation parameter as a function of the mesh size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RPolicy {
    Const(f64),
    H,
    H2,
    H4,
}

impl RPolicy {
    pub fn value(self, h: f64) -> f64 {
        match self {
            RPolicy::Const(v) => v,
            RPolicy::H => h,
            RPolicy::H2 => h * h,
            RPolicy::H4 => h.powi(4),
        }
    }
}

impl FromStr for RPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h" => Ok(RPolicy::H),
            "h2" | "h^2" => Ok(RPolicy::H2),
            "h4" | "h^4" => Ok(RPolicy::H4),
            other => match other.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.is_finite() => Ok(RPolicy::Const(v)),
                _ => config(format!("invalid r '{s}' (expected h, h2, h4 or a number >= 0)")),
            },
        }
    }
}

impl fmt::Display for RPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RPolicy::Const(v) => write!(f, "{v}"),
            RPolicy::H => f.write_str("h"),
            RPolicy::H2 => f.write_str("h2"),
            RPolicy::H4 => f.write_str("h4"),
        }
    }
}

impl TryFrom<String> for RPolicy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RPolicy> for String {
    fn from(r: RPolicy) -> String {
        r.to_string()
    }
}

/// Everything needed to run one reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemConfig {
    /// Space cells; time cells follow from `dt = dx`.
    pub nx: usize,
    pub t_final: f64,
    pub example: Example,
    pub formulation: Formulation,
    pub r: RPolicy,
    /// Stabilization weight in `(0, 1)`; used by the stabilized formulation only.
    pub alpha: f64,
    pub side: Side,
    pub noise: Option<NoiseSpec>,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub field_modes: usize,
    pub trace_modes: usize,
    /// Refinement of the grid carrying the `H^{-1}` product of the stabilized block.
    pub hminus1_refine: usize,
    /// Minimum cell count of the grid measuring `H^{-1}` source errors.
    pub mu_cells: usize,
    /// Gauss points per direction and element for error integrals.
    pub error_order: usize,
    pub obs_file: Option<PathBuf>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            nx: 20,
            t_final: 2.0,
            example: Example::Ex1,
            formulation: Formulation::Mixed,
            r: RPolicy::H2,
            alpha: 0.5,
            side: Side::Right,
            noise: None,
            cg_tol: 1e-10,
            cg_max_iter: 5000,
            field_modes: FIELD_MODES,
            trace_modes: TRACE_MODES,
            hminus1_refine: 4,
            mu_cells: 100_000,
            error_order: 5,
            obs_file: None,
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 {
            return config(format!("nx must be at least 2, got {}", self.nx));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return config(format!("T must be positive, got {}", self.t_final));
        }
        let driven = self.example.mu().is_some();
        match self.formulation {
            Formulation::Source if !(driven || self.example == Example::File) => {
                return config(format!(
                    "source formulation needs a driven example (ex3, ex4, ex5) or an observation file, got {}",
                    self.example
                ));
            }
            Formulation::Mixed | Formulation::Stabilized | Formulation::DualCg if driven => {
                return config(format!(
                    "{} is driven by a source; use the source formulation",
                    self.example
                ));
            }
            Formulation::Stabilized if !(self.alpha > 0.0 && self.alpha < 1.0) => {
                return config(format!("alpha must lie in (0,1), got {}", self.alpha));
            }
            _ => {}
        }
        if matches!(self.formulation, Formulation::DualCg | Formulation::Stabilized) && self.r == RPolicy::Const(0.0) {
            return config(format!("the {} formulation needs r > 0", self.formulation));
        }
        if self.example == Example::File && self.obs_file.is_none() {
            return config("example 'file' needs an observation file");
        }
        if !(self.cg_tol > 0.0) {
            return config(format!("CG tolerance must be positive, got {}", self.cg_tol));
        }
        if self.field_modes == 0 || self.trace_modes == 0 {
            return config("mode counts must be positive");
        }
        if !(1..=10).contains(&self.error_order) {
            return config(format!("error quadrature order must be in 1..=10, got {}", self.error_order));
        }
        if self.hminus1_refine == 0 || self.mu_cells < 2 {
            return config("H^-1 grids need positive refinement and at least two cells");
        }
        Ok(())
    }
}
