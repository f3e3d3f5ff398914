//! Sparse matrices and load vectors of the space-time formulations.
//!
//! With `L y = y_tt - c y_xx - c' y_x + d y` and an observed boundary
//! `Gamma_T`, the forms assembled here are
//!
//! * `a_r(y, z) = w_b int_{Gamma_T} c^2 dn y dn z + r int int L y L z`,
//! * `b(y, lambda) = int int lambda L y`,
//! * `l(y) = int_{Gamma_T} c^2 y_obs dn y`,
//! * the Q1 mass matrix `J`,
//!
//! plus the variants of the stabilized problem and the source problem, where
//! the residual `L y` becomes `L y - sigma(t) mu(x)`.

pub mod coefficients;
pub mod hminus1;
pub mod observation;
pub(crate) mod tables;

use crate::basis::{gauss_legendre, BFS_DOFS};
use crate::error::{config, Error, Result};
use crate::field::{local_hermite, local_q1};
use crate::mesh::{DofMap, MeshSpec, Side, SpaceKind};
use crate::sparse::{CsrMatrix, TripletBuilder};

pub use coefficients::{CoefficientSummary, Coefficients, Sigma};
pub use hminus1::{hminus1_inner, DirichletLaplacian};
pub use observation::{NoiseSpec, ObservationTrace, Pchip};
use tables::ElementTable;

/// Block KKT system `[[A, B^T], [B, -C]] (y, lambda) = (rhs_primal, rhs_dual)`.
#[derive(Debug, Clone)]
pub struct BlockSaddleSystem {
    /// Symmetric positive definite primal block.
    pub a: CsrMatrix,
    /// Constraint block, one row per multiplier dof.
    pub b: CsrMatrix,
    /// Stabilization block; absent for the plain mixed problem.
    pub c: Option<CsrMatrix>,
    pub rhs_primal: Vec<f64>,
    pub rhs_dual: Vec<f64>,
    /// The last `primal_border` primal unknowns couple to every row
    /// (the source coefficients); solvers order them last.
    pub primal_border: usize,
}

impl BlockSaddleSystem {
    pub fn n_primal(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_dual(&self) -> usize {
        self.b.nrows()
    }

    /// The assembled symmetric KKT matrix.
    pub fn kkt_matrix(&self) -> CsrMatrix {
        let n = self.n_primal();
        let m = self.n_dual();
        let extra = self.c.as_ref().map_or(0, |c| c.nnz());
        let mut t = TripletBuilder::with_capacity(n + m, n + m, self.a.nnz() + 2 * self.b.nnz() + extra);
        for i in 0..n {
            let (cols, vals) = self.a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(i, j, v);
            }
        }
        for i in 0..m {
            let (cols, vals) = self.b.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(n + i, j, v);
                t.push(j, n + i, v);
            }
        }
        if let Some(c) = &self.c {
            for i in 0..m {
                let (cols, vals) = c.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    t.push(n + i, n + j, -v);
                }
            }
        }
        t.build()
    }

    /// Block residuals `(A y + B^T l - f, B y - C l - g)` for the system's own loads.
    pub fn residuals(&self, y: &[f64], lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.residuals_with(y, lambda, &self.rhs_primal, &self.rhs_dual)
    }

    /// Block residuals for arbitrary loads `(f, g)`.
    pub fn residuals_with(&self, y: &[f64], lambda: &[f64], f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r1 = self.a.mul_vec(y);
        for (ri, (bi, fi)) in r1.iter_mut().zip(self.b.tr_mul_vec(lambda).iter().zip(f)) {
            *ri += bi - fi;
        }
        let mut r2 = self.b.mul_vec(y);
        let cl = self.c.as_ref().map(|c| c.mul_vec(lambda));
        for (k, (ri, gi)) in r2.iter_mut().zip(g).enumerate() {
            *ri -= gi + cl.as_ref().map_or(0.0, |v| v[k]);
        }
        (r1, r2)
    }
}

fn gauss_table(mesh: &MeshSpec, n: usize) -> (ElementTable, Vec<f64>) {
    let (g, w) = gauss_legendre(n);
    let table = ElementTable::new(mesh, &g, &g);
    let weights = w.iter().flat_map(|wt| w.iter().map(move |wx| wx * wt)).collect();
    (table, weights)
}

fn boundary_element(mesh: &MeshSpec, side: Side) -> (usize, f64) {
    match side {
        Side::Left => (0, 0.0),
        Side::Right => (mesh.nx - 1, 1.0),
    }
}

fn check_bfs(map: &DofMap, what: &str) -> Result<()> {
    match map.kind() {
        SpaceKind::ZhState | SpaceKind::ZhZeroInitial => Ok(()),
        other => config(format!("{what} must be a BFS space, got {other:?}")),
    }
}

fn distinct_sides(obs: &[ObservationTrace]) -> Result<Vec<Side>> {
    let mut sides: Vec<Side> = Vec::new();
    for o in obs {
        if sides.contains(&o.side()) {
            return config(format!("two observations given on the {} side", o.side()));
        }
        sides.push(o.side());
    }
    Ok(sides)
}

/// Coefficient values `(c, c', d)` at a physical point.
fn coeff_at(coeffs: &Coefficients, mesh: &MeshSpec, x: f64, t: f64) -> (f64, f64, f64) {
    (coeffs.c(x), coeffs.c_prime(x, mesh.dx / 100.0), coeffs.d(x, t))
}

/// Coefficients of `(L y_h)(x, t)` on element `(ie, ke)` at reference point
/// `(xi, tau)` as `(global index, weight)` pairs over the free dofs.
pub fn wave_residual_row(
    mesh: &MeshSpec,
    map: &DofMap,
    coeffs: &Coefficients,
    ie: usize,
    ke: usize,
    point: (f64, f64),
) -> Vec<(usize, f64)> {
    let table = ElementTable::new(mesh, &[point.0], &[point.1]);
    let x = (ie as f64 + point.0) * mesh.dx;
    let t = (ke as f64 + point.1) * mesh.dt;
    let (c, cp, d) = coeff_at(coeffs, mesh, x, t);
    let row = table.wave_row(0, c, cp, d);
    map.element_dofs(mesh, ie, ke)
        .into_iter()
        .zip(row)
        .filter_map(|(g, v)| g.map(|g| (g, v)))
        .collect()
}

fn scatter_sym<const N: usize>(t: &mut TripletBuilder, dofs: &[Option<usize>], local: &[[f64; N]; N]) {
    for (a, ga) in dofs.iter().enumerate() {
        let Some(ga) = ga else { continue };
        for (b, gb) in dofs.iter().enumerate() {
            if let Some(gb) = gb {
                t.push(*ga, *gb, local[a][b]);
            }
        }
    }
}

/// Adds `weight * u u^T` to the upper triangle of `m`.
fn rank_one_upper<const N: usize>(m: &mut [[f64; N]; N], u: &[f64; N], weight: f64) {
    for a in 0..N {
        let s = weight * u[a];
        for b in a..N {
            m[a][b] += s * u[b];
        }
    }
}

fn mirror_upper<const N: usize>(m: &mut [[f64; N]; N]) {
    for a in 0..N {
        for b in 0..a {
            m[a][b] = m[b][a];
        }
    }
}

/// Normal derivatives of the BFS basis on the boundary edge of element row `ke`,
/// at 1D Gauss times, together with the times and weights (already times `dt`).
struct EdgeTrace {
    ie: usize,
    x: f64,
    times: Vec<f64>,
    weights: Vec<f64>,
    normal: Vec<[f64; BFS_DOFS]>,
    value: Vec<[f64; BFS_DOFS]>,
}

impl EdgeTrace {
    fn new(mesh: &MeshSpec, side: Side, ke: usize, order: usize) -> Self {
        Self::composite(mesh, side, ke, order, 1)
    }

    /// Gauss rule of `order` points on each of `panels` equal pieces of the edge.
    fn composite(mesh: &MeshSpec, side: Side, ke: usize, order: usize, panels: usize) -> Self {
        let (ie, xi) = boundary_element(mesh, side);
        let (g1, w1) = gauss_legendre(order);
        let p = panels as f64;
        let g: Vec<f64> = (0..panels).flat_map(|j| g1.iter().map(move |s| (j as f64 + s) / p)).collect();
        let w: Vec<f64> = (0..panels).flat_map(|_| w1.iter().map(move |w| w / p)).collect();
        let table = ElementTable::new(mesh, &[xi], &g);
        let n = side.normal();
        Self {
            ie,
            x: side.x(),
            times: g.iter().map(|s| (ke as f64 + s) * mesh.dt).collect(),
            weights: w.iter().map(|w| w * mesh.dt).collect(),
            normal: table.dx.iter().map(|d| d.map(|v| n * v)).collect(),
            value: table.val.clone(),
        }
    }
}

/// `a_r` with boundary weight `w_b`: `w_b int_Gamma c^2 dn y dn z + r int int L y L z`.
pub fn assemble_ar_weighted(
    mesh: &MeshSpec,
    map: &DofMap,
    coeffs: &Coefficients,
    boundary_weight: f64,
    r: f64,
    sides: &[Side],
) -> Result<CsrMatrix> {
    check_bfs(map, "state space")?;
    coeffs.validate(mesh)?;
    if !(r >= 0.0) || !r.is_finite() {
        return config(format!("augmentation parameter r must be >= 0, got {r}"));
    }
    let (table, weights) = gauss_table(mesh, coeffs.quad_order());
    let area = mesh.dx * mesh.dt;
    let n = map.n_free();
    let mut t = TripletBuilder::with_capacity(n, n, mesh.n_elements() * BFS_DOFS * BFS_DOFS);
    for ke in 0..mesh.nt {
        let edges: Vec<EdgeTrace> = sides.iter().map(|&s| EdgeTrace::new(mesh, s, ke, coeffs.quad_order())).collect();
        for ie in 0..mesh.nx {
            let mut local = [[0.0; BFS_DOFS]; BFS_DOFS];
            if r > 0.0 {
                for (q, w) in weights.iter().enumerate() {
                    let x = (ie as f64 + table.xs[q % table.xs.len()]) * mesh.dx;
                    let tq = (ke as f64 + table.ts[q / table.xs.len()]) * mesh.dt;
                    let (c, cp, d) = coeff_at(coeffs, mesh, x, tq);
                    rank_one_upper(&mut local, &table.wave_row(q, c, cp, d), r * w * area);
                }
            }
            for edge in edges.iter().filter(|e| e.ie == ie) {
                let c2 = coeffs.c(edge.x).powi(2);
                for (q, w) in edge.weights.iter().enumerate() {
                    rank_one_upper(&mut local, &edge.normal[q], boundary_weight * c2 * w);
                }
            }
            mirror_upper(&mut local);
            scatter_sym(&mut t, &map.element_dofs(mesh, ie, ke), &local);
        }
    }
    Ok(t.build())
}

/// `A_r`: boundary form on the observed sides plus `r` times the residual form.
pub fn assemble_ar(mesh: &MeshSpec, map: &DofMap, coeffs: &Coefficients, r: f64, sides: &[Side]) -> Result<CsrMatrix> {
    assemble_ar_weighted(mesh, map, coeffs, 1.0, r, sides)
}

/// Values of the multiplier basis at table point `q`.
fn multiplier_values(table: &ElementTable, kind: SpaceKind, q: usize) -> &[f64] {
    match kind {
        SpaceKind::Q1Multiplier => &table.q1[q],
        _ => &table.val[q],
    }
}

/// `B` with entries `int int phi_i^lambda L phi_j^y`, optionally minus
/// `boundary_weight int_Gamma c^2 dn phi_j lambda_i` on the given sides.
fn assemble_b_general(
    mesh: &MeshSpec,
    zmap: &DofMap,
    lmap: &DofMap,
    coeffs: &Coefficients,
    boundary: Option<(f64, &[Side])>,
) -> Result<CsrMatrix> {
    check_bfs(zmap, "state space")?;
    if lmap.kind() == SpaceKind::P1Source {
        return config("multiplier space cannot be the source space");
    }
    if boundary.is_some() {
        check_bfs(lmap, "multiplier space with trace terms")?;
    }
    coeffs.validate(mesh)?;
    let (table, weights) = gauss_table(mesh, coeffs.quad_order());
    let area = mesh.dx * mesh.dt;
    let nl = if lmap.dofs_per_node() == 1 { 4 } else { BFS_DOFS };
    let mut t = TripletBuilder::with_capacity(lmap.n_free(), zmap.n_free(), mesh.n_elements() * nl * BFS_DOFS);
    let mut local = vec![[0.0; BFS_DOFS]; nl];
    for ke in 0..mesh.nt {
        let edges: Vec<EdgeTrace> = match boundary {
            Some((_, sides)) => sides.iter().map(|&s| EdgeTrace::new(mesh, s, ke, coeffs.quad_order())).collect(),
            None => Vec::new(),
        };
        for ie in 0..mesh.nx {
            local.iter_mut().for_each(|row| *row = [0.0; BFS_DOFS]);
            for (q, w) in weights.iter().enumerate() {
                let x = (ie as f64 + table.xs[q % table.xs.len()]) * mesh.dx;
                let tq = (ke as f64 + table.ts[q / table.xs.len()]) * mesh.dt;
                let (c, cp, d) = coeff_at(coeffs, mesh, x, tq);
                let lrow = table.wave_row(q, c, cp, d);
                for (a, &la) in multiplier_values(&table, lmap.kind(), q).iter().enumerate() {
                    let s = w * area * la;
                    for b in 0..BFS_DOFS {
                        local[a][b] += s * lrow[b];
                    }
                }
            }
            if let Some((bw, _)) = boundary {
                for edge in edges.iter().filter(|e| e.ie == ie) {
                    let c2 = coeffs.c(edge.x).powi(2);
                    for (q, w) in edge.weights.iter().enumerate() {
                        for (a, la) in edge.value[q].iter().enumerate() {
                            for b in 0..BFS_DOFS {
                                local[a][b] -= bw * c2 * w * la * edge.normal[q][b];
                            }
                        }
                    }
                }
            }
            let ldofs = lmap.element_dofs(mesh, ie, ke);
            let zdofs = zmap.element_dofs(mesh, ie, ke);
            for (a, ga) in ldofs.iter().enumerate() {
                let Some(ga) = ga else { continue };
                for (b, gb) in zdofs.iter().enumerate() {
                    if let Some(gb) = gb {
                        t.push(*ga, *gb, local[a][b]);
                    }
                }
            }
        }
    }
    Ok(t.build())
}

/// `B`: rows are multiplier dofs, columns state dofs.
pub fn assemble_b(mesh: &MeshSpec, zmap: &DofMap, lmap: &DofMap, coeffs: &Coefficients) -> Result<CsrMatrix> {
    assemble_b_general(mesh, zmap, lmap, coeffs, None)
}

/// Mass matrix of the multiplier space.
pub fn assemble_j(mesh: &MeshSpec, lmap: &DofMap) -> CsrMatrix {
    let (table, weights) = gauss_table(mesh, 4);
    let area = mesh.dx * mesh.dt;
    let mut t = TripletBuilder::new(lmap.n_free(), lmap.n_free());
    for ke in 0..mesh.nt {
        for ie in 0..mesh.nx {
            let dofs = lmap.element_dofs(mesh, ie, ke);
            if lmap.dofs_per_node() == 1 {
                let mut local = [[0.0; 4]; 4];
                for (q, w) in weights.iter().enumerate() {
                    rank_one_upper(&mut local, &table.q1[q], w * area);
                }
                mirror_upper(&mut local);
                scatter_sym(&mut t, &dofs, &local);
            } else {
                let mut local = [[0.0; BFS_DOFS]; BFS_DOFS];
                for (q, w) in weights.iter().enumerate() {
                    rank_one_upper(&mut local, &table.val[q], w * area);
                }
                mirror_upper(&mut local);
                scatter_sym(&mut t, &dofs, &local);
            }
        }
    }
    t.build()
}

/// Gauss panels per boundary edge for the load. Observations are typically
/// only piecewise smooth (the free-wave traces jump), so one rule per edge
/// would integrate them to O(dt) only.
pub const LOAD_PANELS: usize = 16;

/// Load vector `l(y) = sum over traces of int_Gamma c^2 y_obs dn y`.
pub fn assemble_l(mesh: &MeshSpec, map: &DofMap, coeffs: &Coefficients, obs: &[ObservationTrace]) -> Result<Vec<f64>> {
    check_bfs(map, "state space")?;
    distinct_sides(obs)?;
    let mut l = vec![0.0; map.n_free()];
    for trace in obs {
        for ke in 0..mesh.nt {
            let edge = EdgeTrace::composite(mesh, trace.side(), ke, coeffs.quad_order(), LOAD_PANELS);
            let c2 = coeffs.c(edge.x).powi(2);
            let dofs = map.element_dofs(mesh, edge.ie, ke);
            for (q, w) in edge.weights.iter().enumerate() {
                let v = trace.eval(edge.times[q]);
                if !v.is_finite() {
                    return Err(Error::Data(format!("observation is not finite at t = {}", edge.times[q])));
                }
                for (b, g) in dofs.iter().enumerate() {
                    if let Some(g) = g {
                        l[*g] += w * c2 * v * edge.normal[q][b];
                    }
                }
            }
        }
    }
    Ok(l)
}

/// Plain mixed problem on `(Z_h, Q1)` with the augmented form `a_r`.
pub fn assemble_mixed(
    mesh: &MeshSpec,
    zmap: &DofMap,
    lmap: &DofMap,
    coeffs: &Coefficients,
    r: f64,
    obs: &[ObservationTrace],
) -> Result<BlockSaddleSystem> {
    let sides = distinct_sides(obs)?;
    Ok(BlockSaddleSystem {
        a: assemble_ar(mesh, zmap, coeffs, r, &sides)?,
        b: assemble_b(mesh, zmap, lmap, coeffs)?,
        c: None,
        rhs_primal: assemble_l(mesh, zmap, coeffs, obs)?,
        rhs_dual: vec![0.0; lmap.n_free()],
        primal_border: 0,
    })
}

/// Source problem with primal unknowns `(y, mu)`; `mu` occupies the last
/// `smap.n_free()` primal slots.
///
/// `a_r((y,mu),(z,nu)) = int_Gamma c^2 dn y dn z + r int int (L y - sigma mu)(L z - sigma nu)`
/// and `b((y,mu), lambda) = int int lambda (L y - sigma mu)`.
pub fn assemble_source_blocks(
    mesh: &MeshSpec,
    zmap: &DofMap,
    smap: &DofMap,
    lmap: &DofMap,
    coeffs: &Coefficients,
    r: f64,
    obs: &[ObservationTrace],
) -> Result<BlockSaddleSystem> {
    check_bfs(zmap, "state space")?;
    if smap.kind() != SpaceKind::P1Source {
        return config("source unknown must live in the P1 source space");
    }
    coeffs.validate(mesh)?;
    coeffs.validate_source()?;
    let sigma = coeffs.sigma().expect("validated above");
    if !(r >= 0.0) || !r.is_finite() {
        return config(format!("augmentation parameter r must be >= 0, got {r}"));
    }
    let sides = distinct_sides(obs)?;
    let ny = zmap.n_free();
    let np = ny + smap.n_free();
    let (table, weights) = gauss_table(mesh, coeffs.quad_order());
    let area = mesh.dx * mesh.dt;
    const N: usize = BFS_DOFS + 2;
    let mut ta = TripletBuilder::with_capacity(np, np, mesh.n_elements() * N * N);
    let mut tb = TripletBuilder::with_capacity(lmap.n_free(), np, mesh.n_elements() * 4 * N);
    for ke in 0..mesh.nt {
        let edges: Vec<EdgeTrace> = sides.iter().map(|&s| EdgeTrace::new(mesh, s, ke, coeffs.quad_order())).collect();
        for ie in 0..mesh.nx {
            let mut a_loc = [[0.0; N]; N];
            let mut b_loc = [[0.0; N]; 4];
            for (q, w) in weights.iter().enumerate() {
                let xi = table.xs[q % table.xs.len()];
                let x = (ie as f64 + xi) * mesh.dx;
                let tq = (ke as f64 + table.ts[q / table.xs.len()]) * mesh.dt;
                let (c, cp, d) = coeff_at(coeffs, mesh, x, tq);
                let lrow = table.wave_row(q, c, cp, d);
                let s = sigma.eval(tq);
                let mut row = [0.0; N];
                row[..BFS_DOFS].copy_from_slice(&lrow);
                row[BFS_DOFS] = -s * (1.0 - xi);
                row[BFS_DOFS + 1] = -s * xi;
                if r > 0.0 {
                    rank_one_upper(&mut a_loc, &row, r * w * area);
                }
                for (a, la) in table.q1[q].iter().enumerate() {
                    for b in 0..N {
                        b_loc[a][b] += w * area * la * row[b];
                    }
                }
            }
            for edge in edges.iter().filter(|e| e.ie == ie) {
                let c2 = coeffs.c(edge.x).powi(2);
                for (q, w) in edge.weights.iter().enumerate() {
                    let mut row = [0.0; N];
                    row[..BFS_DOFS].copy_from_slice(&edge.normal[q]);
                    rank_one_upper(&mut a_loc, &row, c2 * w);
                }
            }
            mirror_upper(&mut a_loc);
            let mut dofs = zmap.element_dofs(mesh, ie, ke);
            dofs.extend(smap.element_dofs(mesh, ie, ke).into_iter().map(|g| g.map(|g| ny + g)));
            scatter_sym(&mut ta, &dofs, &a_loc);
            for (a, ga) in lmap.element_dofs(mesh, ie, ke).iter().enumerate() {
                let Some(ga) = ga else { continue };
                for (b, gb) in dofs.iter().enumerate() {
                    if let Some(gb) = gb {
                        tb.push(*ga, *gb, b_loc[a][b]);
                    }
                }
            }
        }
    }
    let mut rhs_primal = assemble_l(mesh, zmap, coeffs, obs)?;
    rhs_primal.resize(np, 0.0);
    Ok(BlockSaddleSystem {
        a: ta.build(),
        b: tb.build(),
        c: None,
        rhs_primal,
        rhs_dual: vec![0.0; lmap.n_free()],
        primal_border: smap.n_free(),
    })
}

/// `alpha int_0^T <L lambda, L lambda'>_{H^{-1}} dt + alpha int_Gamma c^2 lambda lambda'`.
///
/// The `H^{-1}` product uses Galerkin loads on a P1 grid `refine` times finer
/// than the element grid; each time-quadrature layer contributes a dense
/// block over the multiplier dofs of one element row.
pub fn assemble_c_stabilized(
    mesh: &MeshSpec,
    lmap: &DofMap,
    coeffs: &Coefficients,
    alpha: f64,
    sides: &[Side],
    refine: usize,
) -> Result<CsrMatrix> {
    check_bfs(lmap, "stabilized multiplier space")?;
    if refine == 0 {
        return config("H^-1 refinement factor must be positive");
    }
    let order = coeffs.quad_order();
    let (g, gw) = gauss_legendre(order);
    let xs: Vec<f64> = (0..refine)
        .flat_map(|sub| g.iter().map(move |p| (sub as f64 + p) / refine as f64))
        .collect();
    let table = ElementTable::new(mesh, &xs, &g);
    let cells = refine * mesh.nx;
    let lap = DirichletLaplacian::new(cells);
    let hf = lap.spacing();
    let n_int = lap.len();
    let m = lmap.n_free();
    let mut t = TripletBuilder::new(m, m);

    for ke in 0..mesh.nt {
        let mut layer: Vec<usize> = (0..mesh.nx)
            .flat_map(|ie| lmap.element_dofs(mesh, ie, ke))
            .flatten()
            .collect();
        layer.sort_unstable();
        layer.dedup();
        let nl = layer.len();
        // whitened loads, one column per (time point, layer dof)
        let mut gram = vec![0.0; nl * nl];
        for (qt, wt) in gw.iter().enumerate() {
            let tq = (ke as f64 + g[qt]) * mesh.dt;
            let mut cols = vec![vec![0.0; n_int]; nl];
            for ie in 0..mesh.nx {
                let dofs = lmap.element_dofs(mesh, ie, ke);
                let locals: Vec<Option<usize>> =
                    dofs.iter().map(|d| d.map(|g| layer.binary_search(&g).unwrap())).collect();
                for sub in 0..refine {
                    let cell = ie * refine + sub;
                    for (p, wp) in gw.iter().enumerate() {
                        let q = qt * xs.len() + sub * order + p;
                        let x = (ie as f64 + xs[sub * order + p]) * mesh.dx;
                        let (c, cp, d) = coeff_at(coeffs, mesh, x, tq);
                        let lrow = table.wave_row(q, c, cp, d);
                        // hats at fine nodes `cell` (value 1-p) and `cell+1` (value p)
                        let hats = [(cell, 1.0 - g[p]), (cell + 1, g[p])];
                        for (l, loc) in locals.iter().enumerate() {
                            let Some(loc) = loc else { continue };
                            let v = wp * hf * lrow[l];
                            for &(node, phi) in &hats {
                                if node >= 1 && node < cells {
                                    cols[*loc][node - 1] += v * phi;
                                }
                            }
                        }
                    }
                }
            }
            for col in cols.iter_mut() {
                lap.whiten(col);
            }
            let s = wt * mesh.dt;
            for a in 0..nl {
                for b in a..nl {
                    gram[a * nl + b] += s * crate::sparse::dot(&cols[a], &cols[b]);
                }
            }
        }
        for a in 0..nl {
            for b in 0..nl {
                let v = if a <= b { gram[a * nl + b] } else { gram[b * nl + a] };
                if v != 0.0 {
                    t.push(layer[a], layer[b], alpha * v);
                }
            }
        }
        for &side in sides {
            let edge = EdgeTrace::new(mesh, side, ke, order);
            let c2 = coeffs.c(edge.x).powi(2);
            let mut local = [[0.0; BFS_DOFS]; BFS_DOFS];
            for (q, w) in edge.weights.iter().enumerate() {
                rank_one_upper(&mut local, &edge.value[q], alpha * c2 * w);
            }
            mirror_upper(&mut local);
            scatter_sym(&mut t, &lmap.element_dofs(mesh, edge.ie, ke), &local);
        }
    }
    Ok(t.build())
}

/// Stabilized mixed problem with multipliers in a BFS space with zero initial data.
///
/// Blocks: `A = (1-alpha) boundary + r L L`, `B = b - alpha int_Gamma c^2 dn y lambda`,
/// `C = c_alpha`, loads `(1-alpha) l` and `-alpha int_Gamma c^2 y_obs lambda`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_stabilized(
    mesh: &MeshSpec,
    zmap: &DofMap,
    lmap: &DofMap,
    coeffs: &Coefficients,
    r: f64,
    alpha: f64,
    obs: &[ObservationTrace],
    refine: usize,
) -> Result<BlockSaddleSystem> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return config(format!("stabilization parameter alpha must lie in (0,1), got {alpha}"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return config(format!("stabilized problem needs r > 0, got {r}"));
    }
    check_bfs(lmap, "stabilized multiplier space")?;
    let sides = distinct_sides(obs)?;
    let a = assemble_ar_weighted(mesh, zmap, coeffs, 1.0 - alpha, r, &sides)?;
    let b = assemble_b_general(mesh, zmap, lmap, coeffs, Some((alpha, &sides)))?;
    let c = assemble_c_stabilized(mesh, lmap, coeffs, alpha, &sides, refine)?;
    let mut rhs_primal = assemble_l(mesh, zmap, coeffs, obs)?;
    rhs_primal.iter_mut().for_each(|v| *v *= 1.0 - alpha);
    let mut rhs_dual = vec![0.0; lmap.n_free()];
    for trace in obs {
        for ke in 0..mesh.nt {
            let edge = EdgeTrace::composite(mesh, trace.side(), ke, coeffs.quad_order(), LOAD_PANELS);
            let c2 = coeffs.c(edge.x).powi(2);
            let dofs = lmap.element_dofs(mesh, edge.ie, ke);
            for (q, w) in edge.weights.iter().enumerate() {
                let v = trace.eval(edge.times[q]);
                for (a, g) in dofs.iter().enumerate() {
                    if let Some(g) = g {
                        rhs_dual[*g] -= alpha * c2 * w * v * edge.value[q][a];
                    }
                }
            }
        }
    }
    Ok(BlockSaddleSystem {
        a,
        b,
        c: Some(c),
        rhs_primal,
        rhs_dual,
        primal_border: 0,
    })
}

/// `||L y_h - sigma mu_h||_{L^2(Q_T)}` (without the source term when `mu` is `None`),
/// integrated with `order x order` Gauss points per element.
pub fn residual_norm(
    mesh: &MeshSpec,
    zmap: &DofMap,
    coeffs: &Coefficients,
    y: &[f64],
    mu: Option<&[f64]>,
    order: usize,
) -> f64 {
    let (table, weights) = gauss_table(mesh, order);
    let area = mesh.dx * mesh.dt;
    let sigma = coeffs.sigma();
    let mut sum = 0.0;
    for ke in 0..mesh.nt {
        for ie in 0..mesh.nx {
            let u = local_hermite(mesh, zmap, y, ie, ke);
            for (q, w) in weights.iter().enumerate() {
                let xi = table.xs[q % table.xs.len()];
                let x = (ie as f64 + xi) * mesh.dx;
                let tq = (ke as f64 + table.ts[q / table.xs.len()]) * mesh.dt;
                let (c, cp, d) = coeff_at(coeffs, mesh, x, tq);
                let row = table.wave_row(q, c, cp, d);
                let mut v: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
                if let (Some(m), Some(s)) = (mu, sigma) {
                    v -= s.eval(tq) * (m[ie] * (1.0 - xi) + m[ie + 1] * xi);
                }
                sum += w * area * v * v;
            }
        }
    }
    sum.sqrt()
}

/// `||lambda_h||_{L^2(Q_T)}` for a Q1 multiplier, by quadrature.
pub fn q1_l2_norm(mesh: &MeshSpec, lmap: &DofMap, lambda: &[f64]) -> f64 {
    let (table, weights) = gauss_table(mesh, 2);
    let area = mesh.dx * mesh.dt;
    let mut sum = 0.0;
    for ke in 0..mesh.nt {
        for ie in 0..mesh.nx {
            let u = local_q1(mesh, lmap, lambda, ie, ke);
            for (q, w) in weights.iter().enumerate() {
                let v: f64 = table.q1[q].iter().zip(&u).map(|(a, b)| a * b).sum();
                sum += w * area * v * v;
            }
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests;
