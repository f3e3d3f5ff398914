//! Command-line front end of `wave-recon`: resolves flags, presets and config
//! files into a [`RunManifest`], runs the level sweep and writes the outputs.

pub mod flags;
pub mod manifest;
mod outputs;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub use flags::{Flags, Task, OUT_DIR_ENV};
pub use manifest::{preset, RunManifest, PRESETS};
pub use outputs::{execute, Summary};

/// Reasons a run stops, with their process exit codes.
#[derive(Debug, Error)]
pub enum Failure {
    /// Bad flags, config, observation data or output directory (exit 2).
    #[error("{0}")]
    Usage(String),
    /// Factorization breakdown, quadrature failure or an iteration that did not converge (exit 3).
    #[error("solver failure: {0}")]
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl From<wave_recon::Error> for Failure {
    fn from(e: wave_recon::Error) -> Self {
        use wave_recon::Error as E;
        match e {
            E::NotPositiveDefinite { .. } | E::SingularSaddle { .. } | E::Quadrature(_) => Failure::Solver(e.to_string()),
            E::Config(_) | E::Data(_) | E::Io(_) | E::Csv(_) => Failure::Usage(e.to_string()),
        }
    }
}

/// Runs the program on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = match Flags::try_parse_from(argv) {
        Ok(f) => f,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    let jobs = flags.jobs;
    let result = RunManifest::resolve(flags).and_then(|m| execute(&m, jobs, stdout));
    match result {
        Ok(_) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {f}");
            f.exit_code()
        }
    }
}
