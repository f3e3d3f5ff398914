//! Shape functions on the reference square `[0,1]^2` and Gauss quadrature.
//!
//! The Bogner-Fox-Schmit element is the tensor product of cubic Hermite
//! factors. Its 16 local dofs are numbered `corner * 4 + kind` with corners
//! `(0,0), (1,0), (0,1), (1,1)` and kinds `v, v_x, v_t, v_xt`.
//!
//! Derivatives returned here are with respect to the reference coordinates.
//! Mapping to an element of size `dx x dt` multiplies a derivative dof basis
//! function by `dx` (x-derivative dofs) and/or `dt` (t-derivative dofs), and
//! each physical derivative `d^a/dx^a d^b/dt^b` by `dx^-a dt^-b`.

use crate::error::{config, Result};

/// The four cubic Hermite functions on `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hermite {
    /// Value one at 0, zero value and slope elsewhere.
    Val0,
    /// Unit slope at 0.
    Der0,
    Val1,
    Der1,
}

impl Hermite {
    pub const ALL: [Hermite; 4] = [Hermite::Val0, Hermite::Der0, Hermite::Val1, Hermite::Der1];

    /// The factor attached to end `side` (0 or 1), value-type or slope-type.
    pub fn at(side: usize, slope: bool) -> Self {
        match (side, slope) {
            (0, false) => Hermite::Val0,
            (0, true) => Hermite::Der0,
            (_, false) => Hermite::Val1,
            (_, true) => Hermite::Der1,
        }
    }
}

/// Cubic Hermite function `kind` or its derivative of order `deriv` at `xi`.
pub fn hermite1d(kind: Hermite, deriv: usize, xi: f64) -> f64 {
    let x = xi;
    let x2 = x * x;
    match (kind, deriv) {
        (Hermite::Val0, 0) => 2.0 * x2 * x - 3.0 * x2 + 1.0,
        (Hermite::Val0, 1) => 6.0 * x2 - 6.0 * x,
        (Hermite::Val0, 2) => 12.0 * x - 6.0,
        (Hermite::Der0, 0) => x2 * x - 2.0 * x2 + x,
        (Hermite::Der0, 1) => 3.0 * x2 - 4.0 * x + 1.0,
        (Hermite::Der0, 2) => 6.0 * x - 4.0,
        (Hermite::Val1, 0) => -2.0 * x2 * x + 3.0 * x2,
        (Hermite::Val1, 1) => -6.0 * x2 + 6.0 * x,
        (Hermite::Val1, 2) => -12.0 * x + 6.0,
        (Hermite::Der1, 0) => x2 * x - x2,
        (Hermite::Der1, 1) => 3.0 * x2 - 2.0 * x,
        (Hermite::Der1, 2) => 6.0 * x - 2.0,
        (Hermite::Val0, 3) => 12.0,
        (Hermite::Val1, 3) => -12.0,
        (_, 3) => 6.0,
        _ => 0.0,
    }
}

/// Number of BFS local dofs.
pub const BFS_DOFS: usize = 16;
/// Number of bilinear local dofs.
pub const Q1_DOFS: usize = 4;

/// The pair of 1D Hermite factors `(x factor, t factor)` of a BFS local dof.
pub fn bfs_factors(local_dof: usize) -> (Hermite, Hermite) {
    let corner = local_dof / 4;
    let kind = local_dof % 4;
    let (cx, ct) = (corner & 1, corner >> 1);
    (Hermite::at(cx, kind & 1 == 1), Hermite::at(ct, kind & 2 == 2))
}

/// Whether a BFS local dof carries an x-derivative (resp. t-derivative).
pub fn bfs_derivative_kind(local_dof: usize) -> (bool, bool) {
    let kind = local_dof % 4;
    (kind & 1 == 1, kind & 2 == 2)
}

/// Reference BFS shape function `local_dof` differentiated `deriv.0` times in
/// `xi` and `deriv.1` times in `tau`.
pub fn bfs_eval(local_dof: usize, deriv: (usize, usize), point: (f64, f64)) -> f64 {
    let (fx, ft) = bfs_factors(local_dof);
    hermite1d(fx, deriv.0, point.0) * hermite1d(ft, deriv.1, point.1)
}

/// Linear Lagrange factor on `[0,1]`: `1 - xi` for side 0, `xi` for side 1.
pub fn lagrange1d(side: usize, deriv: usize, xi: f64) -> f64 {
    match (side, deriv) {
        (0, 0) => 1.0 - xi,
        (0, 1) => -1.0,
        (_, 0) => xi,
        (_, 1) => 1.0,
        _ => 0.0,
    }
}

/// Reference bilinear shape function at corner `local_dof`.
pub fn q1_eval(local_dof: usize, deriv: (usize, usize), point: (f64, f64)) -> f64 {
    let (cx, ct) = (local_dof & 1, local_dof >> 1);
    lagrange1d(cx, deriv.0, point.0) * lagrange1d(ct, deriv.1, point.1)
}

/// Gauss-Legendre nodes and weights on `[0,1]` (weights sum to 1).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tensor-product quadrature rule on the reference square.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    /// Points per direction.
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integral of `f` over `[0,1]^2`.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&(x, t), w)| w * f(x, t))
            .sum()
    }
}

/// Tensor `n x n` Gauss-Legendre rule, exact for degree `2n - 1` per direction.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    if !(1..=10).contains(&n) {
        return config(format!("quadrature order must lie in 1..=10, got {n}"));
    }
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&t, &wt) in x.iter().zip(&w) {
        for (&s, &ws) in x.iter().zip(&w) {
            points.push((s, t));
            weights.push(ws * wt);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        order: n,
    })
}

/// Hermite factor values and derivatives (orders 0..=2) at 1D quadrature nodes.
///
/// Indexed as `table[kind][deriv][q]` with `kind` in [`Hermite::ALL`] order.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    values: [[Vec<f64>; 3]; 4],
}

impl HermiteTable {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        let values = Hermite::ALL.map(|kind| {
            [0, 1, 2].map(|d| nodes.iter().map(|&x| hermite1d(kind, d, x)).collect())
        });
        Self {
            nodes,
            weights,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, kind: Hermite, deriv: usize, q: usize) -> f64 {
        self.values[kind as usize][deriv][q]
    }
}
