//! Error measures of a reconstruction against an exact solution.

use serde::{Deserialize, Serialize};

use crate::assembly::tables::ElementTable;
use crate::assembly::DirichletLaplacian;
use crate::basis::gauss_legendre;
use crate::error::{config, Result};
use crate::field::local_hermite;
use crate::manufactured::{FourierState, MuSpec};
use crate::mesh::{DofMap, MeshSpec, Side};

/// An absolute error and, when the reference norm is nonzero, the relative one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub abs: f64,
    pub rel: Option<f64>,
}

impl ErrorNorms {
    fn new(abs: f64, reference: f64) -> Self {
        Self {
            abs,
            rel: (reference > 0.0).then(|| abs / reference),
        }
    }
}

/// Physical Gauss points of every element, per direction.
fn gauss_points(cells: usize, width: f64, order: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (g, w) = gauss_legendre(order);
    let pts = (0..cells).flat_map(|e| g.iter().map(move |p| (e as f64 + p) * width)).collect();
    (g, w, pts)
}

/// `||y_h - y||_{L^2(Q_T)}` by `order x order` Gauss points per element; the
/// relative error divides by the series norm of `y`.
pub fn error_l2_qt(mesh: &MeshSpec, zmap: &DofMap, y_h: &[f64], oracle: &FourierState, order: usize) -> ErrorNorms {
    let (g, w, xs) = gauss_points(mesh.nx, mesh.dx, order);
    let (_, _, ts) = gauss_points(mesh.nt, mesh.dt, order);
    let exact = oracle.eval_grid(&xs, &ts, (0, 0));
    let table = ElementTable::new(mesh, &g, &g);
    let area = mesh.dx * mesh.dt;
    let mut sum = 0.0;
    for ke in 0..mesh.nt {
        for ie in 0..mesh.nx {
            let u = local_hermite(mesh, zmap, y_h, ie, ke);
            for (qt, wt) in w.iter().enumerate() {
                for (qx, wx) in w.iter().enumerate() {
                    let q = qt * order + qx;
                    let v: f64 = table.val[q].iter().zip(&u).map(|(a, b)| a * b).sum();
                    let e = v - exact[(ke * order + qt, ie * order + qx)];
                    sum += wt * wx * area * e * e;
                }
            }
        }
    }
    ErrorNorms::new(sum.sqrt(), oracle.l2_norm_sq(mesh.t_final).sqrt())
}

/// `||y_h||_{L^2(Q_T)}` of a BFS field.
pub fn hermite_l2_norm(mesh: &MeshSpec, map: &DofMap, u: &[f64], order: usize) -> f64 {
    let (g, w) = gauss_legendre(order);
    let table = ElementTable::new(mesh, &g, &g);
    let area = mesh.dx * mesh.dt;
    let mut sum = 0.0;
    for ke in 0..mesh.nt {
        for ie in 0..mesh.nx {
            let local = local_hermite(mesh, map, u, ie, ke);
            for (qt, wt) in w.iter().enumerate() {
                for (qx, wx) in w.iter().enumerate() {
                    let v: f64 = table.val[qt * order + qx].iter().zip(&local).map(|(a, b)| a * b).sum();
                    sum += wt * wx * area * v * v;
                }
            }
        }
    }
    sum.sqrt()
}

/// `||dn y_h - dn y||_{L^2(0,T)}` on `side`; the relative error divides by the
/// series norm of the exact trace.
pub fn trace_error(mesh: &MeshSpec, zmap: &DofMap, y_h: &[f64], oracle: &FourierState, side: Side, order: usize) -> ErrorNorms {
    let (g, w, ts) = gauss_points(mesh.nt, mesh.dt, order);
    let exact = oracle.normal_trace_many(side, &ts);
    let (ie, xi) = match side {
        Side::Left => (0, 0.0),
        Side::Right => (mesh.nx - 1, 1.0),
    };
    let table = ElementTable::new(mesh, &[xi], &g);
    let mut sum = 0.0;
    for ke in 0..mesh.nt {
        let u = local_hermite(mesh, zmap, y_h, ie, ke);
        for (q, wq) in w.iter().enumerate() {
            let v: f64 = side.normal() * table.dx[q].iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
            let e = v - exact[ke * order + q];
            sum += wq * mesh.dt * e * e;
        }
    }
    ErrorNorms::new(sum.sqrt(), oracle.trace_norm_sq(mesh.t_final).sqrt())
}

/// Cells of the grid measuring `H^{-1}` errors: at least `min_cells`, a multiple of `nx`.
pub fn hminus1_grid_cells(nx: usize, min_cells: usize) -> usize {
    min_cells.div_ceil(nx).max(2) * nx
}

/// Galerkin loads `<mu, phi_i>` of the interior hats of a uniform grid.
fn exact_loads(mu: &MuSpec, cells: usize) -> Vec<f64> {
    let h = 1.0 / cells as f64;
    // per cell: (int over cell of mu * left hat, ... * right hat)
    let halves: Vec<(f64, f64)> = (0..cells)
        .map(|c| {
            let (x0, x1) = (c as f64 * h, (c + 1) as f64 * h);
            let (m0, m1) = mu.moments(x0, x1);
            ((x1 * m0 - m1) / h, (m1 - x0 * m0) / h)
        })
        .collect();
    (1..cells).map(|i| halves[i - 1].1 + halves[i].0).collect()
}

/// `||mu - mu_h||_{H^{-1}(0,1)}` for a P1 `mu_h` given by its `nx + 1` nodal
/// values, computed with Galerkin loads and the Dirichlet Laplacian on a
/// uniform grid of at least `min_cells` cells (a refinement of the mesh).
pub fn error_mu_hminus1(mesh: &MeshSpec, mu_h: &[f64], mu: &MuSpec, min_cells: usize) -> Result<ErrorNorms> {
    if mu_h.len() != mesh.nx + 1 {
        return config(format!("source needs {} nodal values, got {}", mesh.nx + 1, mu_h.len()));
    }
    mu.validate()?;
    let cells = hminus1_grid_cells(mesh.nx, min_cells);
    let lap = DirichletLaplacian::new(cells);
    let h = lap.spacing();
    let refine = cells / mesh.nx;
    // mu_h at fine nodes, then its exact P1 mass-matrix loads
    let fine: Vec<f64> = (0..=cells)
        .map(|j| {
            let (ie, s) = (j / refine, (j % refine) as f64 / refine as f64);
            if ie == mesh.nx {
                mu_h[mesh.nx]
            } else {
                mu_h[ie] * (1.0 - s) + mu_h[ie + 1] * s
            }
        })
        .collect();
    let exact = exact_loads(mu, cells);
    let mut diff: Vec<f64> = (1..cells)
        .map(|i| exact[i - 1] - h / 6.0 * (fine[i - 1] + 4.0 * fine[i] + fine[i + 1]))
        .collect();
    let mut reference = exact;
    lap.whiten(&mut diff);
    lap.whiten(&mut reference);
    let abs = crate::sparse::dot(&diff, &diff).sqrt();
    let norm = crate::sparse::dot(&reference, &reference).sqrt();
    Ok(ErrorNorms::new(abs, norm))
}

/// `||mu||_{H^{-1}}` on the same kind of grid as [`error_mu_hminus1`].
pub fn mu_hminus1_norm(mu: &MuSpec, cells: usize) -> f64 {
    let lap = DirichletLaplacian::new(cells);
    let mut loads = exact_loads(mu, cells);
    lap.whiten(&mut loads);
    crate::sparse::dot(&loads, &loads).sqrt()
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return config("a rate fit needs at least three points");
    }
    if points.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return config("rate fit needs positive mesh sizes and errors");
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return config("rate fit needs distinct mesh sizes");
    }
    Ok(sxy / sxx)
}
