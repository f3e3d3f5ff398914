//! Command-line flags and the `key = value` config format that mirrors them.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use wave_recon::driver::{Example, Formulation, RPolicy};
use wave_recon::mesh::Side;

use crate::Failure;

/// Environment variable overriding the output directory (flags still win).
pub const OUT_DIR_ENV: &str = "WAVE_RECON_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Reconstruct the state (and source) at every level.
    Reconstruct,
    /// Estimate the discrete inf-sup constant for every `(r, level)` pair.
    Infsup,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Reconstruct => "reconstruct",
            Task::Infsup => "infsup",
        }
    }
}

/// Every flag is optional so that presets and config files can fill the gaps.
#[derive(Debug, Clone, Default, PartialEq, Parser)]
#[command(
    name = "wave-recon",
    version,
    about = "Reconstruct 1D wave solutions and sources from a boundary flux observation",
    after_help = "Precedence: preset < --config file < WAVE_RECON_OUT (output dir only) < flags.\n\
                  Config files hold one `flag = value` pair per line, '#' starts a comment."
)]
pub struct Flags {
    /// Named experiment reproducing a convergence table.
    #[arg(long)]
    pub preset: Option<String>,
    /// `key = value` file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    /// ex1, ex3, ex4, ex5, single-mode or file.
    #[arg(long)]
    pub example: Option<Example>,
    /// mixed, dual-cg, stabilized or source.
    #[arg(long)]
    pub formulation: Option<Formulation>,
    /// Augmentation parameter: h, h2, h4 or a number.
    #[arg(long)]
    pub r: Option<RPolicy>,
    /// Space cells per level, comma separated (dt = dx).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Final time.
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// Stabilization weight in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Observed boundary: left or right.
    #[arg(long)]
    pub side: Option<Side>,
    /// Relative amplitude of Gaussian noise added to the observation.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Seed of the observation noise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Observation CSV with columns t, value (implies the `file` example).
    #[arg(long)]
    pub obs_file: Option<PathBuf>,
    /// r values of an inf-sup sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub r_sweep: Option<Vec<RPolicy>>,
    /// Relative tolerance of the dual CG.
    #[arg(long)]
    pub cg_tol: Option<f64>,
    #[arg(long)]
    pub cg_max_iter: Option<usize>,
    /// Worker threads for level sweeps (default: all cores). Does not affect results.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Flags {
    /// Fields of `other` that are set replace those of `self`.
    pub fn overlay(self, other: Flags) -> Flags {
        Flags {
            preset: other.preset.or(self.preset),
            config: other.config.or(self.config),
            out: other.out.or(self.out),
            task: other.task.or(self.task),
            example: other.example.or(self.example),
            formulation: other.formulation.or(self.formulation),
            r: other.r.or(self.r),
            levels: other.levels.or(self.levels),
            t_final: other.t_final.or(self.t_final),
            alpha: other.alpha.or(self.alpha),
            side: other.side.or(self.side),
            noise: other.noise.or(self.noise),
            seed: other.seed.or(self.seed),
            obs_file: other.obs_file.or(self.obs_file),
            r_sweep: other.r_sweep.or(self.r_sweep),
            cg_tol: other.cg_tol.or(self.cg_tol),
            cg_max_iter: other.cg_max_iter.or(self.cg_max_iter),
            jobs: other.jobs.or(self.jobs),
        }
    }

    /// Parses a config file. Relative `obs-file` paths resolve against the file's directory.
    pub fn from_config_file(path: &Path) -> Result<Flags, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        let mut flags = Self::from_config_text(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if let (Some(obs), Some(dir)) = (&flags.obs_file, path.parent()) {
            if obs.is_relative() {
                flags.obs_file = Some(dir.join(obs));
            }
        }
        Ok(flags)
    }

    pub fn from_config_text(text: &str) -> Result<Flags, String> {
        let mut argv = vec!["wave-recon".to_string()];
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`, got `{line}`", n + 1))?;
            let key = key.trim();
            if key == "config" {
                return Err(format!("line {}: config files cannot include other config files", n + 1));
            }
            argv.push(format!("--{key}"));
            argv.push(value.split(',').map(str::trim).collect::<Vec<_>>().join(","));
        }
        Flags::try_parse_from(argv).map_err(|e| e.to_string().trim_end().to_string())
    }
}
