//! Running a manifest and writing its files.
//!
//! Levels run on a worker pool; each level writes its own report atomically
//! and the tables are merged in level order, so outputs do not depend on
//! scheduling.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use wave_recon::driver::{infsup_for, run, table, Example, Formulation, InfSupReport, Rates, ReconstructionReport};
use wave_recon::linsolve::InfSupOptions;
use wave_recon::mesh::MeshSpec;

use crate::flags::Task;
use crate::manifest::RunManifest;
use crate::Failure;

pub const MANIFEST_FILE: &str = "manifest.conf";
pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

/// Files written by a run, in writing order.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct ReconstructionOutput<'a> {
    manifest: &'a RunManifest,
    levels: &'a [ReconstructionReport],
    rates: Rates,
}

#[derive(Serialize)]
struct InfSupRow<'a> {
    r_policy: String,
    #[serde(flatten)]
    report: &'a InfSupReport,
}

#[derive(Serialize)]
struct InfSupOutput<'a> {
    manifest: &'a RunManifest,
    infsup: Vec<InfSupRow<'a>>,
}

fn unwritable(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("cannot write {}: {e}", path.display()))
}

/// Writes through a temporary sibling and a rename, so readers never see partial files.
fn write_atomic(path: &Path, bytes: &[u8], summary: &mut Summary) -> Result<(), Failure> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path)).map_err(|e| unwritable(path, e))?;
    summary.files.push(path.to_path_buf());
    Ok(())
}

fn to_csv(f: impl FnOnce(&mut Vec<u8>) -> wave_recon::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    bytes
}

fn worker_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))
}

/// Runs the manifest and writes its outputs under `manifest.out_dir`.
pub fn execute(manifest: &RunManifest, jobs: Option<usize>, log: &mut dyn Write) -> Result<Summary, Failure> {
    let dir = &manifest.out_dir;
    fs::create_dir_all(dir).map_err(|e| unwritable(dir, e))?;
    let mut summary = Summary::default();
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_config_text().as_bytes(), &mut summary)?;
    let pool = worker_pool(jobs)?;
    match manifest.task {
        Task::Reconstruct => reconstruct(manifest, &pool, log, &mut summary)?,
        Task::Infsup => infsup(manifest, &pool, log, &mut summary)?,
    }
    Ok(summary)
}

/// One finished level: its report, the source values (if any) and the files it wrote.
type LevelOutcome = Result<(ReconstructionReport, Option<Vec<f64>>, Summary), Failure>;

fn reconstruct(m: &RunManifest, pool: &rayon::ThreadPool, log: &mut dyn Write, summary: &mut Summary) -> Result<(), Failure> {
    let level_dir = m.out_dir.join("levels");
    fs::create_dir_all(&level_dir).map_err(|e| unwritable(&level_dir, e))?;
    let results: Vec<LevelOutcome> = pool.install(|| {
        m.levels
            .par_iter()
            .map(|&nx| {
                let rec = run(&m.config_for(nx))?;
                let mut files = Summary::default();
                write_atomic(&level_dir.join(format!("nx{nx:04}.json")), &json(&rec.report), &mut files)?;
                Ok((rec.report, rec.source, files))
            })
            .collect()
    });
    let mut reports = Vec::with_capacity(results.len());
    for result in results {
        let (report, source, files) = result?;
        summary.files.extend(files.files);
        if let Some(mu_h) = source {
            let path = m.out_dir.join(format!("source_nx{:04}.csv", report.nx));
            write_atomic(&path, &source_profile(m, report.nx, &mu_h)?, summary)?;
        }
        let _ = writeln!(
            log,
            "nx={:<4} h={:.3e} state_err={} lambda={:.3e} mu_err={} iters={}",
            report.nx,
            report.h,
            table::sci(report.rel_state_error()),
            report.norm_multiplier,
            table::sci(report.rel_mu_error()),
            report.diagnostics.iterations
        );
        reports.push(report);
    }
    let dir = &m.out_dir;
    write_atomic(&dir.join(CONVERGENCE_FILE), &to_csv(|b| table::write_convergence_csv(&reports, b))?, summary)?;
    write_atomic(&dir.join(TABLE_FILE), &to_csv(|b| table::write_table_csv(&reports, b))?, summary)?;
    let output = ReconstructionOutput {
        manifest: m,
        levels: &reports,
        rates: Rates::fit(&reports),
    };
    write_atomic(&dir.join(REPORT_FILE), &json(&output), summary)?;
    if let Some(bad) = reports.iter().find(|r| !r.diagnostics.converged) {
        return Err(Failure::Solver(format!(
            "{} did not converge at nx={} (relative residual {:.3e} after {} iterations)",
            m.formulation, bad.nx, bad.diagnostics.final_residual, bad.diagnostics.iterations
        )));
    }
    Ok(())
}

/// Nodal source values `x, mu_h, mu` (the exact column empty when unknown or singular).
fn source_profile(m: &RunManifest, nx: usize, mu_h: &[f64]) -> Result<Vec<u8>, Failure> {
    let exact = m.example.mu();
    let mesh = MeshSpec::square_cells(nx, m.t_final)?;
    let mut w = Vec::new();
    writeln!(w, "x,mu_h,mu").expect("in-memory write");
    for (i, v) in mu_h.iter().enumerate() {
        let x = i as f64 * mesh.dx;
        let mu = exact
            .as_ref()
            .map(|e| e.eval(x))
            .filter(|v| v.is_finite())
            .map(|v| format!("{v:.5e}"))
            .unwrap_or_default();
        writeln!(w, "{x:.5e},{v:.5e},{mu}").expect("in-memory write");
    }
    Ok(w)
}

fn infsup(m: &RunManifest, pool: &rayon::ThreadPool, log: &mut dyn Write, summary: &mut Summary) -> Result<(), Failure> {
    let jobs: Vec<_> = m.r_sweep.iter().flat_map(|&r| m.levels.iter().map(move |&nx| (r, nx))).collect();
    let results: Vec<Result<(String, InfSupReport), Failure>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(r, nx)| {
                let cfg = wave_recon::driver::ProblemConfig {
                    r,
                    example: Example::Ex1,
                    formulation: Formulation::Mixed,
                    ..m.config_for(nx)
                };
                Ok((r.to_string(), infsup_for(&cfg, InfSupOptions::default())?))
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for (policy, rep) in &rows {
        let _ = writeln!(
            log,
            "r={policy:<5} nx={:<4} h={:.3e} delta_h={:.5e} iters={}",
            rep.nx, rep.h, rep.estimate.delta_h, rep.estimate.iterations
        );
    }
    let dir = &m.out_dir;
    write_atomic(&dir.join(CONVERGENCE_FILE), &to_csv(|b| table::write_infsup_csv(&rows, b))?, summary)?;
    write_atomic(&dir.join(TABLE_FILE), &to_csv(|b| table::write_infsup_table_csv(&rows, b))?, summary)?;
    let output = InfSupOutput {
        manifest: m,
        infsup: rows
            .iter()
            .map(|(p, report)| InfSupRow {
                r_policy: p.clone(),
                report,
            })
            .collect(),
    };
    write_atomic(&dir.join(REPORT_FILE), &json(&output), summary)?;
    if let Some((p, bad)) = rows.iter().find(|(_, r)| !r.estimate.converged) {
        return Err(Failure::Solver(format!(
            "inf-sup iteration did not converge for r={p}, nx={} (residual {:.3e})",
            bad.nx, bad.estimate.residual
        )));
    }
    Ok(())
}
