//! Physical shape-function values at tensor quadrature points of one element.
//!
//! Every element of a uniform mesh has the same size, so one table serves all
//! of them; only the coefficient values change from element to element.

use crate::basis::{bfs_derivative_kind, bfs_factors, hermite1d, lagrange1d, BFS_DOFS, Q1_DOFS};
use crate::mesh::MeshSpec;

/// BFS and Q1 values on the tensor grid `xs x ts` (reference coordinates),
/// with the element scaling already applied. Point `q = it * xs.len() + ix`.
#[derive(Debug, Clone)]
pub struct ElementTable {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub val: Vec<[f64; BFS_DOFS]>,
    pub dx: Vec<[f64; BFS_DOFS]>,
    pub dt: Vec<[f64; BFS_DOFS]>,
    pub dxx: Vec<[f64; BFS_DOFS]>,
    pub dtt: Vec<[f64; BFS_DOFS]>,
    pub q1: Vec<[f64; Q1_DOFS]>,
}

/// Scaling of BFS local dof `l` so that nodal dofs are physical derivatives.
pub fn dof_scale(mesh: &MeshSpec, l: usize) -> f64 {
    let (sx, st) = bfs_derivative_kind(l);
    (if sx { mesh.dx } else { 1.0 }) * (if st { mesh.dt } else { 1.0 })
}

impl ElementTable {
    pub fn new(mesh: &MeshSpec, xs: &[f64], ts: &[f64]) -> Self {
        let n = xs.len() * ts.len();
        let mut table = Self {
            xs: xs.to_vec(),
            ts: ts.to_vec(),
            val: Vec::with_capacity(n),
            dx: Vec::with_capacity(n),
            dt: Vec::with_capacity(n),
            dxx: Vec::with_capacity(n),
            dtt: Vec::with_capacity(n),
            q1: Vec::with_capacity(n),
        };
        let (ix, it) = (1.0 / mesh.dx, 1.0 / mesh.dt);
        for &t in ts {
            for &x in xs {
                let mut v = [0.0; BFS_DOFS];
                let mut vx = [0.0; BFS_DOFS];
                let mut vt = [0.0; BFS_DOFS];
                let mut vxx = [0.0; BFS_DOFS];
                let mut vtt = [0.0; BFS_DOFS];
                for l in 0..BFS_DOFS {
                    let (fx, ft) = bfs_factors(l);
                    let s = dof_scale(mesh, l);
                    let hx = [0, 1, 2].map(|d| hermite1d(fx, d, x));
                    let ht = [0, 1, 2].map(|d| hermite1d(ft, d, t));
                    v[l] = s * hx[0] * ht[0];
                    vx[l] = s * ix * hx[1] * ht[0];
                    vt[l] = s * it * hx[0] * ht[1];
                    vxx[l] = s * ix * ix * hx[2] * ht[0];
                    vtt[l] = s * it * it * hx[0] * ht[2];
                }
                table.val.push(v);
                table.dx.push(vx);
                table.dt.push(vt);
                table.dxx.push(vxx);
                table.dtt.push(vtt);
                table.q1.push(std::array::from_fn(|c| lagrange1d(c & 1, 0, x) * lagrange1d(c >> 1, 0, t)));
            }
        }
        table
    }

    /// `L phi_l` at point `q` for local coefficient values `c, c', d`.
    pub fn wave_row(&self, q: usize, c: f64, cp: f64, d: f64) -> [f64; BFS_DOFS] {
        std::array::from_fn(|l| self.dtt[q][l] - c * self.dxx[q][l] - cp * self.dx[q][l] + d * self.val[q][l])
    }
}
