//! Interpolation into, and pointwise evaluation of, discrete fields.

use crate::assembly::tables::dof_scale;
use crate::basis::{bfs_eval, q1_eval, BFS_DOFS};
use crate::mesh::{DofMap, MeshSpec, SpaceKind};

/// Hermite interpolant: `f(x, t)` returns `[g, g_x, g_t, g_xt]`.
/// Constrained dofs are dropped, so `f` should respect the essential conditions.
pub fn interpolate_hermite(mesh: &MeshSpec, map: &DofMap, f: impl Fn(f64, f64) -> [f64; 4]) -> Vec<f64> {
    assert_eq!(map.dofs_per_node(), 4, "Hermite interpolation needs a BFS space");
    let mut u = vec![0.0; map.n_free()];
    for node in 0..map.n_nodes() {
        let (i, k) = mesh.node_coords(node);
        let data = f(mesh.x(i), mesh.t(k));
        for (local, value) in data.iter().enumerate() {
            if let Some(g) = map.global(node, local) {
                u[g] = *value;
            }
        }
    }
    u
}

/// Nodal interpolant for Q1 (function of `(x, t)`) or P1 source spaces (`t` ignored).
pub fn interpolate_nodal(mesh: &MeshSpec, map: &DofMap, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(map.dofs_per_node(), 1, "nodal interpolation needs a Lagrange space");
    let mut u = vec![0.0; map.n_free()];
    for node in 0..map.n_nodes() {
        let (x, t) = match map.kind() {
            SpaceKind::P1Source => (mesh.x(node), 0.0),
            _ => {
                let (i, k) = mesh.node_coords(node);
                (mesh.x(i), mesh.t(k))
            }
        };
        if let Some(g) = map.global(node, 0) {
            u[g] = f(x, t);
        }
    }
    u
}

/// Local BFS coefficients of element `(ie, ke)`, zero at constrained dofs.
pub fn local_hermite(mesh: &MeshSpec, map: &DofMap, u: &[f64], ie: usize, ke: usize) -> [f64; BFS_DOFS] {
    let nodes = mesh.element_nodes(ie, ke);
    std::array::from_fn(|l| map.global(nodes[l / 4], l % 4).map_or(0.0, |g| u[g]))
}

/// Local Q1 coefficients of element `(ie, ke)`.
pub fn local_q1(mesh: &MeshSpec, map: &DofMap, u: &[f64], ie: usize, ke: usize) -> [f64; 4] {
    let nodes = mesh.element_nodes(ie, ke);
    std::array::from_fn(|c| map.global(nodes[c], 0).map_or(0.0, |g| u[g]))
}

/// Evaluates a BFS field or one of its physical derivatives `(a, b)` with `a, b <= 2`.
pub fn eval_hermite(mesh: &MeshSpec, map: &DofMap, u: &[f64], x: f64, t: f64, deriv: (usize, usize)) -> f64 {
    let (ie, ke, xi, tau) = mesh.locate(x, t);
    let local = local_hermite(mesh, map, u, ie, ke);
    let scale = mesh.dx.powi(-(deriv.0 as i32)) * mesh.dt.powi(-(deriv.1 as i32));
    (0..BFS_DOFS)
        .map(|l| local[l] * dof_scale(mesh, l) * bfs_eval(l, deriv, (xi, tau)))
        .sum::<f64>()
        * scale
}

/// Evaluates a Q1 field.
pub fn eval_q1(mesh: &MeshSpec, map: &DofMap, u: &[f64], x: f64, t: f64) -> f64 {
    let (ie, ke, xi, tau) = mesh.locate(x, t);
    let local = local_q1(mesh, map, u, ie, ke);
    (0..4).map(|c| local[c] * q1_eval(c, (0, 0), (xi, tau))).sum()
}

/// Evaluates a P1 function of `x` given its nodal values.
pub fn eval_p1(mesh: &MeshSpec, u: &[f64], x: f64) -> f64 {
    let (ie, _, xi, _) = mesh.locate(x, 0.0);
    u[ie] * (1.0 - xi) + u[ie + 1] * xi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_round_trip_on_bicubic() {
        let mesh = MeshSpec::new(3, 5, 2.0).unwrap();
        let map = DofMap::new(&mesh, SpaceKind::ZhState);
        // x(1-x) t^3 vanishes at x = 0, 1 together with its t-derivative
        let g = |x: f64, t: f64| x * (1.0 - x) * t.powi(3);
        let u = interpolate_hermite(&mesh, &map, |x, t| {
            [g(x, t), (1.0 - 2.0 * x) * t.powi(3), 3.0 * x * (1.0 - x) * t * t, 3.0 * (1.0 - 2.0 * x) * t * t]
        });
        for &(x, t) in &[(0.1, 0.2), (0.77, 1.93), (0.5, 1.0), (0.999, 0.01)] {
            assert!((eval_hermite(&mesh, &map, &u, x, t, (0, 0)) - g(x, t)).abs() < 1e-13);
            let gxx = -2.0 * t.powi(3);
            assert!((eval_hermite(&mesh, &map, &u, x, t, (2, 0)) - gxx).abs() < 1e-11);
            let gtt = 6.0 * x * (1.0 - x) * t;
            assert!((eval_hermite(&mesh, &map, &u, x, t, (0, 2)) - gtt).abs() < 1e-11);
        }
    }

    #[test]
    fn bilinear_and_p1_evaluation() {
        let mesh = MeshSpec::new(4, 4, 1.0).unwrap();
        let map = DofMap::new(&mesh, SpaceKind::Q1Multiplier);
        let u = interpolate_nodal(&mesh, &map, |x, t| 1.0 + 2.0 * x - t + x * t);
        assert!((eval_q1(&mesh, &map, &u, 0.33, 0.71) - (1.0 + 0.66 - 0.71 + 0.33 * 0.71)).abs() < 1e-14);
        let src = DofMap::new(&mesh, SpaceKind::P1Source);
        let m = interpolate_nodal(&mesh, &src, |x, _| 3.0 * x);
        assert!((eval_p1(&mesh, &m, 0.6) - 1.8).abs() < 1e-14);
    }
}
