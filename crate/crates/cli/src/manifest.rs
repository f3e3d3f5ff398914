//! Fully resolved run descriptions and the named presets.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use wave_recon::assembly::NoiseSpec;
use wave_recon::driver::{Example, Formulation, ProblemConfig, RPolicy};
use wave_recon::mesh::Side;

use crate::flags::{Flags, Task};
use crate::Failure;

/// Everything that determines the outputs of a run. Writing it back as
/// flags (or as a config file) and resolving again gives the same manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub preset: Option<String>,
    pub config_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub task: Task,
    pub example: Example,
    pub formulation: Formulation,
    pub r: RPolicy,
    pub levels: Vec<usize>,
    pub t_final: f64,
    pub alpha: f64,
    pub side: Side,
    /// Relative noise amplitude; zero means exact data.
    pub noise: f64,
    pub seed: u64,
    pub obs_file: Option<PathBuf>,
    /// r values of an inf-sup sweep.
    pub r_sweep: Vec<RPolicy>,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for RunManifest {
    fn default() -> Self {
        let base = ProblemConfig::default();
        Self {
            preset: None,
            config_file: None,
            out_dir: PathBuf::from("out"),
            task: Task::Reconstruct,
            example: base.example,
            formulation: base.formulation,
            r: base.r,
            levels: vec![base.nx],
            t_final: base.t_final,
            alpha: base.alpha,
            side: base.side,
            noise: 0.0,
            seed: 0,
            obs_file: None,
            r_sweep: vec![base.r],
            cg_tol: base.cg_tol,
            cg_max_iter: base.cg_max_iter,
        }
    }
}

/// Preset names with what they reproduce. Levels are space cells with
/// `dt = dx`, so `nx = 10, 20, 40, 80, 160` means `h = 1.41e-1 ... 8.84e-3`.
pub const PRESETS: [(&str, &str); 7] = [
    ("table-ex1-rh2", "EX1, mixed, r = h^2, nx = 10..160"),
    ("table-ex1-r1", "EX1, mixed, r = 1, nx = 10..160"),
    ("table-infsup", "inf-sup constant for r in {100, 1, 0.01, h, h^2}, nx = 10..160"),
    ("table-ex3", "EX3 source, r = h^4, nx = 20..160"),
    ("table-ex4", "EX4 source, r = h^4, nx = 20..160"),
    ("table-ex5", "EX5 source, r = h^4, nx = 20..160"),
    ("stab-ex1", "EX1, stabilized with alpha = 1/2, r = h^2, nx = 10..80"),
];

pub fn preset_names() -> String {
    PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", ")
}

/// The manifest of a named preset (output directory left at its default).
pub fn preset(name: &str) -> Result<RunManifest, Failure> {
    let base = RunManifest {
        preset: Some(name.to_string()),
        ..RunManifest::default()
    };
    let ex1_levels = vec![10, 20, 40, 80, 160];
    let source_levels = vec![20, 40, 80, 160];
    let source = |example| RunManifest {
        example,
        formulation: Formulation::Source,
        r: RPolicy::H4,
        levels: source_levels.clone(),
        ..base.clone()
    };
    Ok(match name {
        "table-ex1-rh2" => RunManifest {
            levels: ex1_levels,
            ..base
        },
        "table-ex1-r1" => RunManifest {
            r: RPolicy::Const(1.0),
            levels: ex1_levels,
            ..base
        },
        "table-infsup" => RunManifest {
            task: Task::Infsup,
            levels: ex1_levels,
            r_sweep: vec![
                RPolicy::Const(100.0),
                RPolicy::Const(1.0),
                RPolicy::Const(0.01),
                RPolicy::H,
                RPolicy::H2,
            ],
            ..base
        },
        "table-ex3" => source(Example::Ex3),
        "table-ex4" => source(Example::Ex4),
        "table-ex5" => source(Example::Ex5),
        "stab-ex1" => RunManifest {
            formulation: Formulation::Stabilized,
            alpha: 0.5,
            levels: vec![10, 20, 40, 80],
            ..base
        },
        other => {
            return Err(Failure::Usage(format!(
                "unknown preset '{other}'; valid presets: {}",
                preset_names()
            )))
        }
    })
}

impl RunManifest {
    /// Resolves command-line flags: preset, then config file, then the flags themselves.
    pub fn resolve(cli: Flags) -> Result<RunManifest, Failure> {
        let merged = match &cli.config {
            Some(path) => Flags::from_config_file(path)?.overlay(cli),
            None => cli,
        };
        let mut m = match &merged.preset {
            Some(name) => preset(name)?,
            None => RunManifest::default(),
        };
        m.config_file = merged.config;
        if let Some(v) = merged.out {
            m.out_dir = v;
        }
        if let Some(v) = merged.task {
            m.task = v;
        }
        if let Some(v) = merged.example {
            m.example = v;
        }
        if let Some(v) = merged.formulation {
            m.formulation = v;
        }
        if let Some(v) = merged.r {
            m.r = v;
        }
        if let Some(v) = merged.levels {
            m.levels = v;
        }
        if let Some(v) = merged.t_final {
            m.t_final = v;
        }
        if let Some(v) = merged.alpha {
            m.alpha = v;
        }
        if let Some(v) = merged.side {
            m.side = v;
        }
        if let Some(v) = merged.noise {
            m.noise = v;
        }
        if let Some(v) = merged.seed {
            m.seed = v;
        }
        if let Some(v) = merged.obs_file {
            // absolute, so the manifest copy in the output directory still finds it
            let path = std::path::absolute(&v)
                .map_err(|e| Failure::Usage(format!("observation file {}: {e}", v.display())))?;
            m.obs_file = Some(path);
            if merged.example.is_none() {
                m.example = Example::File;
            }
        }
        if let Some(v) = merged.r_sweep {
            m.r_sweep = v;
        }
        if let Some(v) = merged.cg_tol {
            m.cg_tol = v;
        }
        if let Some(v) = merged.cg_max_iter {
            m.cg_max_iter = v;
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.levels.is_empty() {
            return Err(Failure::Usage("at least one mesh level is needed".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Failure::Usage(format!("noise must be a finite amplitude >= 0, got {}", self.noise)));
        }
        match self.task {
            Task::Reconstruct => {
                for &nx in &self.levels {
                    self.config_for(nx).validate()?;
                }
            }
            Task::Infsup => {
                if self.r_sweep.is_empty() {
                    return Err(Failure::Usage("an inf-sup sweep needs at least one r".into()));
                }
                if self.r_sweep.contains(&RPolicy::Const(0.0)) {
                    return Err(Failure::Usage("the inf-sup estimate needs r > 0".into()));
                }
                for &nx in &self.levels {
                    ProblemConfig {
                        formulation: Formulation::Mixed,
                        example: Example::Ex1,
                        ..self.config_for(nx)
                    }
                    .validate()?;
                }
            }
        }
        Ok(())
    }

    /// The library configuration of one level.
    pub fn config_for(&self, nx: usize) -> ProblemConfig {
        ProblemConfig {
            nx,
            t_final: self.t_final,
            example: self.example,
            formulation: self.formulation,
            r: self.r,
            alpha: self.alpha,
            side: self.side,
            noise: (self.noise > 0.0).then_some(NoiseSpec {
                amplitude: self.noise,
                seed: self.seed,
            }),
            cg_tol: self.cg_tol,
            cg_max_iter: self.cg_max_iter,
            obs_file: self.obs_file.clone(),
            ..ProblemConfig::default()
        }
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let join = |v: Vec<String>| v.join(",");
        let mut out = Vec::new();
        if let Some(p) = &self.preset {
            out.push(("preset", p.clone()));
        }
        out.push(("out", self.out_dir.display().to_string()));
        out.push(("task", self.task.name().to_string()));
        out.push(("example", self.example.to_string()));
        out.push(("formulation", self.formulation.to_string()));
        out.push(("r", self.r.to_string()));
        out.push(("levels", join(self.levels.iter().map(|l| l.to_string()).collect())));
        out.push(("T", self.t_final.to_string()));
        out.push(("alpha", self.alpha.to_string()));
        out.push(("side", self.side.to_string()));
        out.push(("noise", self.noise.to_string()));
        out.push(("seed", self.seed.to_string()));
        if let Some(p) = &self.obs_file {
            out.push(("obs-file", p.display().to_string()));
        }
        out.push(("r-sweep", join(self.r_sweep.iter().map(|r| r.to_string()).collect())));
        out.push(("cg-tol", format!("{:e}", self.cg_tol)));
        out.push(("cg-max-iter", self.cg_max_iter.to_string()));
        out
    }

    /// Flags reproducing this manifest.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = Vec::new();
        if let Some(c) = &self.config_file {
            args.push("--config".to_string());
            args.push(c.display().to_string());
        }
        for (k, v) in self.pairs() {
            args.push(format!("--{k}"));
            args.push(v);
        }
        args
    }

    /// Config file reproducing this manifest.
    pub fn to_config_text(&self) -> String {
        let mut text = String::from("# wave-recon run manifest; rerun with --config <this file>\n");
        if let Some(c) = &self.config_file {
            let _ = writeln!(text, "# resolved from {}", c.display());
        }
        for (k, v) in self.pairs() {
            let _ = writeln!(text, "{k} = {v}");
        }
        text
    }
}
