//! Convergence tables: per-level CSV rows, transposed tables in the layout
//! of a printed results table, and fitted rates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{rate_fit, InfSupReport, ReconstructionReport};
use crate::error::Result;

/// Columns of the per-level convergence file.
pub const CONVERGENCE_COLUMNS: [&str; 7] =
    ["h", "rel_state_err", "rel_trace_err", "norm_Ly", "norm_lambda", "rel_mu_err", "iters"];

/// Six significant digits in scientific notation; empty for missing values.
pub fn sci(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.5e}"),
        None => String::new(),
    }
}

/// Least-squares rates `e ~ h^p` of every quantity that is available and
/// positive at three or more levels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub state: Option<f64>,
    pub trace: Option<f64>,
    pub residual: Option<f64>,
    pub multiplier: Option<f64>,
    pub mu: Option<f64>,
}

impl Rates {
    pub fn fit(reports: &[ReconstructionReport]) -> Self {
        let fit = |f: &dyn Fn(&ReconstructionReport) -> Option<f64>| {
            let pts: Option<Vec<(f64, f64)>> = reports.iter().map(|r| f(r).map(|v| (r.h, v))).collect();
            pts.and_then(|p| rate_fit(&p).ok())
        };
        Self {
            state: fit(&|r| r.rel_state_error()),
            trace: fit(&|r| r.rel_trace_error()),
            residual: fit(&|r| Some(r.norm_residual)),
            multiplier: fit(&|r| Some(r.norm_multiplier)),
            mu: fit(&|r| r.rel_mu_error()),
        }
    }
}

fn row_values(r: &ReconstructionReport, with_mu: bool) -> Vec<String> {
    let mut row = vec![
        sci(Some(r.h)),
        sci(r.rel_state_error()),
        sci(r.rel_trace_error()),
        sci(Some(r.norm_residual)),
        sci(Some(r.norm_multiplier)),
    ];
    if with_mu {
        row.push(sci(r.rel_mu_error()));
    }
    row.push(r.diagnostics.iterations.to_string());
    row
}

fn has_mu(reports: &[ReconstructionReport]) -> bool {
    reports.iter().any(|r| r.mu_error.is_some())
}

/// One row per level; the `rel_mu_err` column only when some run has a source.
pub fn write_convergence_csv<W: Write>(reports: &[ReconstructionReport], out: W) -> Result<()> {
    let with_mu = has_mu(reports);
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = CONVERGENCE_COLUMNS
        .iter()
        .copied()
        .filter(|c| with_mu || *c != "rel_mu_err")
        .collect();
    w.write_record(&header)?;
    for r in reports {
        w.write_record(row_values(r, with_mu))?;
    }
    w.flush()?;
    Ok(())
}

/// Quantities as rows and levels as columns, followed by a `rate` column.
pub fn write_table_csv<W: Write>(reports: &[ReconstructionReport], out: W) -> Result<()> {
    let with_mu = has_mu(reports);
    let rates = Rates::fit(reports);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["quantity".to_string()];
    header.extend(reports.iter().map(|r| sci(Some(r.h))));
    header.push("rate".to_string());
    w.write_record(&header)?;
    type Getter = fn(&ReconstructionReport) -> Option<f64>;
    let mut rows: Vec<(&str, Getter, Option<f64>)> = vec![
        ("rel_state_err", |r| r.rel_state_error(), rates.state),
        ("rel_trace_err", |r| r.rel_trace_error(), rates.trace),
        ("norm_Ly", |r| Some(r.norm_residual), rates.residual),
        ("norm_lambda", |r| Some(r.norm_multiplier), rates.multiplier),
    ];
    if with_mu {
        rows.push(("rel_mu_err", |r| r.rel_mu_error(), rates.mu));
    }
    for (name, get, rate) in rows {
        let mut rec = vec![name.to_string()];
        rec.extend(reports.iter().map(|r| sci(get(r))));
        rec.push(rate.map(|p| format!("{p:.3}")).unwrap_or_default());
        w.write_record(&rec)?;
    }
    let mut dofs = vec!["multiplier_dofs".to_string()];
    dofs.extend(reports.iter().map(|r| r.multiplier_dofs.to_string()));
    dofs.push(String::new());
    w.write_record(&dofs)?;
    let mut iters = vec!["iters".to_string()];
    iters.extend(reports.iter().map(|r| r.diagnostics.iterations.to_string()));
    iters.push(String::new());
    w.write_record(&iters)?;
    w.flush()?;
    Ok(())
}

/// One row per `(r, level)` of an inf-sup sweep.
pub fn write_infsup_csv<W: Write>(rows: &[(String, InfSupReport)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r_policy", "h", "r", "delta_h", "iters", "converged"])?;
    for (policy, rep) in rows {
        w.write_record([
            policy.clone(),
            sci(Some(rep.h)),
            sci(Some(rep.r)),
            sci(Some(rep.estimate.delta_h)),
            rep.estimate.iterations.to_string(),
            rep.estimate.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `delta_h` with r-policies as rows and mesh sizes as columns.
pub fn write_infsup_table_csv<W: Write>(rows: &[(String, InfSupReport)], out: W) -> Result<()> {
    let mut hs: Vec<f64> = Vec::new();
    let mut policies: Vec<&str> = Vec::new();
    for (p, rep) in rows {
        if !hs.contains(&rep.h) {
            hs.push(rep.h);
        }
        if !policies.contains(&p.as_str()) {
            policies.push(p);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["r".to_string()];
    header.extend(hs.iter().map(|h| sci(Some(*h))));
    w.write_record(&header)?;
    for p in policies {
        let mut rec = vec![p.to_string()];
        rec.extend(hs.iter().map(|h| {
            let hit = rows.iter().find(|(q, rep)| q == p && rep.h == *h);
            sci(hit.map(|(_, rep)| rep.estimate.delta_h))
        }));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
