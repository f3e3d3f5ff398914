//! Uniform space-time meshes of `(0,1) x (0,T)` and degree-of-freedom maps.
//!
//! Nodes are numbered lexicographically with `x` running fastest:
//! node `(i, k)` (position `x = i dx`, `t = k dt`) has index `k (nx + 1) + i`.
//! Essential constraints are imposed by elimination, so a constrained
//! degree of freedom simply has no global index.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Uniform rectangular triangulation of the space-time cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub nx: usize,
    pub nt: usize,
    pub t_final: f64,
    pub dx: f64,
    pub dt: f64,
    /// Element diameter `sqrt(dx^2 + dt^2)`.
    pub h: f64,
}

impl MeshSpec {
    pub fn new(nx: usize, nt: usize, t_final: f64) -> Result<Self> {
        if nx < 2 {
            return config(format!("nx must be at least 2, got {nx}"));
        }
        if nt < 2 {
            return config(format!("nt must be at least 2, got {nt}"));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return config(format!("final time must be positive, got {t_final}"));
        }
        let dx = 1.0 / nx as f64;
        let dt = t_final / nt as f64;
        Ok(Self {
            nx,
            nt,
            t_final,
            dx,
            dt,
            h: dx.hypot(dt),
        })
    }

    /// Mesh with `dx = dt`, i.e. `nt = round(T nx)`.
    pub fn square_cells(nx: usize, t_final: f64) -> Result<Self> {
        let nt = (t_final * nx as f64).round() as usize;
        Self::new(nx, nt, t_final)
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.nt + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.nt
    }

    pub fn node_index(&self, i: usize, k: usize) -> usize {
        k * (self.nx + 1) + i
    }

    pub fn node_coords(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            1.0
        } else {
            i as f64 * self.dx
        }
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.nt {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }

    /// Corner nodes of element `(ie, ke)` in reference order
    /// `(0,0), (1,0), (0,1), (1,1)`.
    pub fn element_nodes(&self, ie: usize, ke: usize) -> [usize; 4] {
        [
            self.node_index(ie, ke),
            self.node_index(ie + 1, ke),
            self.node_index(ie, ke + 1),
            self.node_index(ie + 1, ke + 1),
        ]
    }

    /// Element containing `(x, t)` and the reference coordinates inside it.
    pub fn locate(&self, x: f64, t: f64) -> (usize, usize, f64, f64) {
        let ie = ((x / self.dx).floor().max(0.0) as usize).min(self.nx - 1);
        let ke = ((t / self.dt).floor().max(0.0) as usize).min(self.nt - 1);
        let xi = (x - ie as f64 * self.dx) / self.dx;
        let tau = (t - ke as f64 * self.dt) / self.dt;
        (ie, ke, xi, tau)
    }
}

/// Lateral side of the spatial interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Outward normal in 1D: `-1` at `x = 0`, `+1` at `x = 1`.
    pub fn normal(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn x(self) -> f64 {
        match self {
            Side::Left => 0.0,
            Side::Right => 1.0,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => config(format!("unknown side '{other}' (expected left or right)")),
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// The discrete function spaces used by the formulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    /// C1 Bogner-Fox-Schmit space vanishing on the lateral boundary.
    ZhState,
    /// [`SpaceKind::ZhState`] with zero position and velocity at `t = 0`.
    ZhZeroInitial,
    /// Continuous bilinear functions, one value per node.
    Q1Multiplier,
    /// Continuous piecewise-affine functions of `x`, one value per spatial node.
    P1Source,
}

impl SpaceKind {
    pub fn dofs_per_node(self) -> usize {
        match self {
            SpaceKind::ZhState | SpaceKind::ZhZeroInitial => 4,
            SpaceKind::Q1Multiplier | SpaceKind::P1Source => 1,
        }
    }
}

/// Hermite nodal degrees of freedom, in local order.
pub mod hermite_dof {
    pub const VALUE: usize = 0;
    pub const DX: usize = 1;
    pub const DT: usize = 2;
    pub const DXT: usize = 3;
}

/// Numbering of the free degrees of freedom of one discrete space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    kind: SpaceKind,
    per_node: usize,
    n_nodes: usize,
    table: Vec<Option<usize>>,
    n_free: usize,
}

impl DofMap {
    pub fn new(mesh: &MeshSpec, kind: SpaceKind) -> Self {
        let per_node = kind.dofs_per_node();
        let n_nodes = match kind {
            SpaceKind::P1Source => mesh.nx + 1,
            _ => mesh.n_nodes(),
        };
        let mut table = Vec::with_capacity(n_nodes * per_node);
        let mut next = 0;
        for node in 0..n_nodes {
            let (i, k) = match kind {
                SpaceKind::P1Source => (node, 0),
                _ => mesh.node_coords(node),
            };
            for local in 0..per_node {
                if Self::is_constrained(mesh, kind, i, k, local) {
                    table.push(None);
                } else {
                    table.push(Some(next));
                    next += 1;
                }
            }
        }
        Self {
            kind,
            per_node,
            n_nodes,
            table,
            n_free: next,
        }
    }

    fn is_constrained(mesh: &MeshSpec, kind: SpaceKind, i: usize, k: usize, local: usize) -> bool {
        use hermite_dof::*;
        let lateral = i == 0 || i == mesh.nx;
        match kind {
            SpaceKind::ZhState => lateral && (local == VALUE || local == DT),
            SpaceKind::ZhZeroInitial => k == 0 || (lateral && (local == VALUE || local == DT)),
            SpaceKind::Q1Multiplier | SpaceKind::P1Source => false,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dofs_per_node(&self) -> usize {
        self.per_node
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of free (unknown) degrees of freedom.
    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Global index of the local dof `local` at `node`, `None` if constrained.
    pub fn global(&self, node: usize, local: usize) -> Option<usize> {
        self.table[node * self.per_node + local]
    }

    /// Number of eliminated degrees of freedom.
    pub fn n_constrained(&self) -> usize {
        self.table.len() - self.n_free
    }

    /// Iterator over `(node, local, global)` for the free dofs in global order.
    pub fn free_dofs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.table
            .iter()
            .enumerate()
            .filter_map(move |(slot, g)| g.map(|g| (slot / self.per_node, slot % self.per_node, g)))
    }

    /// Global indices of the 16 BFS (or 4 bilinear) local dofs of an element.
    pub fn element_dofs(&self, mesh: &MeshSpec, ie: usize, ke: usize) -> Vec<Option<usize>> {
        match self.kind {
            SpaceKind::P1Source => vec![self.global(ie, 0), self.global(ie + 1, 0)],
            _ => mesh
                .element_nodes(ie, ke)
                .iter()
                .flat_map(|&node| (0..self.per_node).map(move |l| self.global(node, l)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_spacings() {
        let m = MeshSpec::new(20, 40, 2.0).unwrap();
        assert_eq!(m.dx, 0.05);
        assert_eq!(m.dt, 0.05);
        assert!((m.h - 7.07e-2).abs() < 5e-5);
        let m = MeshSpec::new(2, 2, 2.0).unwrap();
        assert_eq!((m.dx, m.dt), (0.5, 1.0));
        assert_eq!(m.h, 1.25f64.sqrt());
        let m = MeshSpec::new(160, 320, 2.0).unwrap();
        assert!((m.h - 8.83e-3).abs() < 1e-5, "three printed digits");
        assert!((m.nx as f64 * m.dx - 1.0).abs() < 1e-15);
        assert!((m.nt as f64 * m.dt - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(MeshSpec::new(1, 4, 2.0).is_err());
        assert!(MeshSpec::new(4, 1, 2.0).is_err());
        assert!(MeshSpec::new(4, 4, 0.0).is_err());
        assert!(MeshSpec::new(4, 4, -1.0).is_err());
    }

    #[test]
    fn dof_counts_on_coarsest_mesh() {
        let m = MeshSpec::new(2, 2, 2.0).unwrap();
        assert_eq!(DofMap::new(&m, SpaceKind::ZhState).n_free(), 24);
        assert_eq!(DofMap::new(&m, SpaceKind::Q1Multiplier).n_free(), 9);
        assert_eq!(DofMap::new(&m, SpaceKind::ZhZeroInitial).n_free(), 16);
        assert_eq!(DofMap::new(&m, SpaceKind::P1Source).n_free(), 3);
    }

    #[test]
    fn multiplier_dimension_never_exceeds_state_dimension() {
        for (nx, nt) in [(2, 2), (3, 7), (10, 20), (20, 40)] {
            let m = MeshSpec::new(nx, nt, 2.0).unwrap();
            let mh = DofMap::new(&m, SpaceKind::Q1Multiplier).n_free();
            assert!(mh <= DofMap::new(&m, SpaceKind::ZhState).n_free());
            assert!(mh <= DofMap::new(&m, SpaceKind::ZhZeroInitial).n_free());
        }
        // 21 x 41 nodes at h = 7.07e-2
        let m = MeshSpec::square_cells(20, 2.0).unwrap();
        assert_eq!(DofMap::new(&m, SpaceKind::Q1Multiplier).n_free(), 861);
    }

    #[test]
    fn numbering_is_a_bijection() {
        let m = MeshSpec::new(5, 7, 1.5).unwrap();
        for kind in [
            SpaceKind::ZhState,
            SpaceKind::ZhZeroInitial,
            SpaceKind::Q1Multiplier,
            SpaceKind::P1Source,
        ] {
            let map = DofMap::new(&m, kind);
            let globals: Vec<usize> = map.free_dofs().map(|(_, _, g)| g).collect();
            assert_eq!(globals, (0..map.n_free()).collect::<Vec<_>>());
            assert_eq!(map, DofMap::new(&m, kind));
        }
    }
}
