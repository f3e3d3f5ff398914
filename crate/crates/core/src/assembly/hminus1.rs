//! Discrete `H^{-1}(0,1)` inner products from the P1 Dirichlet Laplacian.
//!
//! On a uniform grid of `n` cells the stiffness matrix of the interior hats is
//! `K = tridiag(-1, 2, -1) / h`. For a load vector `b_i = <f, phi_i>` the
//! quantity `b^T K^{-1} b` equals `||w_h'||^2`, where `w_h` is the Galerkin
//! approximation of `-w'' = f, w(0) = w(1) = 0`; it converges to
//! `||f||^2_{H^{-1}}` as the grid is refined.

/// Factorized P1 Dirichlet Laplacian on a uniform grid of `(0,1)`.
#[derive(Debug, Clone)]
pub struct DirichletLaplacian {
    cells: usize,
    h: f64,
    // Cholesky factor of tridiag(-1,2,-1): diagonal and subdiagonal
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl DirichletLaplacian {
    pub fn new(cells: usize) -> Self {
        assert!(cells >= 2, "need at least two cells");
        let n = cells - 1;
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        diag[0] = 2f64.sqrt();
        for i in 1..n {
            sub[i - 1] = -1.0 / diag[i - 1];
            diag[i] = (2.0 - sub[i - 1] * sub[i - 1]).sqrt();
        }
        Self {
            cells,
            h: 1.0 / cells as f64,
            diag,
            sub,
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.cells - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Overwrites `b` with `R^{-1} b` where `K h = R R^T`.
    fn forward(&self, b: &mut [f64]) {
        b[0] /= self.diag[0];
        for i in 1..b.len() {
            b[i] = (b[i] - self.sub[i - 1] * b[i - 1]) / self.diag[i];
        }
    }

    fn backward(&self, b: &mut [f64]) {
        let n = b.len();
        b[n - 1] /= self.diag[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.sub[i] * b[i + 1]) / self.diag[i];
        }
    }

    /// Solves `K w = b` for the interior nodal values of `w`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.len());
        let mut w = b.to_vec();
        self.forward(&mut w);
        self.backward(&mut w);
        // K = tridiag / h, so K^{-1} = h tridiag^{-1}
        w.iter_mut().for_each(|x| *x *= self.h);
        w
    }

    /// `b1^T K^{-1} b2` for two load vectors.
    pub fn inner_loads(&self, b1: &[f64], b2: &[f64]) -> f64 {
        let w = self.solve(b2);
        crate::sparse::dot(b1, &w)
    }

    /// Whitened loads `v = sqrt(h) R^{-1} b`, so that `v1 . v2 = b1^T K^{-1} b2`.
    pub fn whiten(&self, b: &mut [f64]) {
        self.forward(b);
        let s = self.h.sqrt();
        b.iter_mut().for_each(|x| *x *= s);
    }

    /// `(f, (-Delta)^{-1} g)` for fields sampled at the `cells + 1` grid nodes,
    /// with lumped loads `h f_i` at the interior nodes.
    pub fn inner_nodal(&self, f: &[f64], g: &[f64]) -> f64 {
        assert_eq!(f.len(), self.cells + 1);
        assert_eq!(g.len(), self.cells + 1);
        let bf: Vec<f64> = f[1..self.cells].iter().map(|v| v * self.h).collect();
        let bg: Vec<f64> = g[1..self.cells].iter().map(|v| v * self.h).collect();
        self.inner_loads(&bf, &bg)
    }

    /// `||f||_{H^{-1}}` from nodal samples.
    pub fn norm_nodal(&self, f: &[f64]) -> f64 {
        self.inner_nodal(f, f).max(0.0).sqrt()
    }
}

/// Convenience wrapper: `(f, (-Delta)^{-1} g)` for nodal samples on a uniform grid.
pub fn hminus1_inner(f: &[f64], g: &[f64]) -> f64 {
    assert_eq!(f.len(), g.len());
    DirichletLaplacian::new(f.len() - 1).inner_nodal(f, g)
}
