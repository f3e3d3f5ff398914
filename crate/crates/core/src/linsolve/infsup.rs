//! Discrete inf-sup constant
//! `delta_h = min { sqrt(delta) : B A^{-1} B^T lambda = delta J lambda }`.
//!
//! The smallest eigenvalue of the pencil `(M, J)`, `M = B A^{-1} B^T`, is the
//! inverse of the largest eigenvalue of `K = M^{-1} J`, which is self-adjoint
//! for the `J` inner product. Inverse iteration applies `K` repeatedly; here
//! the inverse iterates are not discarded but span a Krylov space on which a
//! Rayleigh-Ritz projection (Lanczos with full reorthogonalization) extracts
//! the extreme eigenpair. Each application of `M^{-1}` is one solve with the
//! factorized KKT matrix and right-hand side `(0, z)`, which returns
//! `lambda = -M^{-1} z`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::BlockSaddleSystem;
use crate::error::{config, Result};
use crate::linsolve::saddle::SaddleFactor;
use crate::linsolve::spd::SpdFactor;
use crate::sparse::{dot, norm2, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfSupOptions {
    /// Target relative residual `||M u - delta J u|| / ||delta J u||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for InfSupOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 400,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSupEstimate {
    /// `sqrt(delta_min)`.
    pub delta_h: f64,
    /// Smallest generalized eigenvalue.
    pub delta_min: f64,
    /// Applications of `M^{-1}`.
    pub iterations: usize,
    /// Relative eigen-residual of the returned pair.
    pub residual: f64,
    pub converged: bool,
}

/// Estimates `delta_h` for the pencil built from `A` (SPD), `B` and `J` (SPD).
/// Stagnation is reported through `converged = false` with the best estimate.
pub fn infsup_estimate(a: &CsrMatrix, b: &CsrMatrix, j: &CsrMatrix, opts: InfSupOptions) -> Result<InfSupEstimate> {
    let m = b.nrows();
    if b.ncols() != a.nrows() || j.nrows() != m || j.ncols() != m {
        return config(format!(
            "inf-sup pencil dimensions disagree: A {}x{}, B {}x{}, J {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            j.nrows(),
            j.ncols()
        ));
    }
    if m == 0 {
        return config("inf-sup estimate needs at least one multiplier dof");
    }
    if !(opts.tol > 0.0) {
        return config(format!("inf-sup tolerance must be positive, got {}", opts.tol));
    }
    let sys = BlockSaddleSystem {
        a: a.clone(),
        b: b.clone(),
        c: None,
        rhs_primal: vec![0.0; a.nrows()],
        rhs_dual: vec![0.0; m],
        primal_border: 0,
    };
    let kkt = SaddleFactor::new(&sys)?;
    let a_fac = SpdFactor::new(a)?;
    let zero = vec![0.0; a.nrows()];
    // K v = M^{-1} J v
    let apply_k = |jv: &[f64]| -> Vec<f64> {
        let (_, lambda, _, _) = kkt.solve_with(&zero, jv);
        lambda.into_iter().map(|v| -v).collect()
    };
    let apply_m = |u: &[f64]| -> Vec<f64> { b.mul_vec(&a_fac.solve(&b.tr_mul_vec(u))) };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut jq = j.mul_vec(&q);
    let s = dot(&q, &jq).sqrt();
    q.iter_mut().for_each(|v| *v /= s);
    jq.iter_mut().for_each(|v| *v /= s);

    let steps = opts.max_iter.min(m).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut jbasis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    let mut best = InfSupEstimate {
        delta_h: f64::NAN,
        delta_min: f64::NAN,
        iterations: 0,
        residual: f64::INFINITY,
        converged: false,
    };

    for k in 0..steps {
        basis.push(q);
        jbasis.push(jq);
        let mut w = apply_k(&jbasis[k]);
        let alpha = dot(&w, &jbasis[k]);
        alphas.push(alpha);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for (qi, jqi) in basis.iter().zip(&jbasis) {
                let c = dot(&w, jqi);
                w.iter_mut().zip(qi).for_each(|(wv, qv)| *wv -= c * qv);
            }
        }
        let jw = j.mul_vec(&w);
        let beta = dot(&w, &jw).max(0.0).sqrt();

        let dim = k + 1;
        let check = dim < 40 || dim % 5 == 0 || dim == steps || beta == 0.0;
        if check {
            let mut t = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                t[(i, i)] = alphas[i];
                if i + 1 < dim {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imax, theta) = eig
                .eigenvalues
                .iter()
                .cloned()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            let s = eig.eigenvectors.column(imax);
            let ritz_estimate = beta * s[dim - 1].abs() / theta.abs();
            if theta > 0.0 && (ritz_estimate < opts.tol || beta == 0.0 || dim == steps) {
                let mut u = vec![0.0; m];
                let mut ju = vec![0.0; m];
                for i in 0..dim {
                    u.iter_mut().zip(&basis[i]).for_each(|(a, b)| *a += s[i] * b);
                    ju.iter_mut().zip(&jbasis[i]).for_each(|(a, b)| *a += s[i] * b);
                }
                let delta = 1.0 / theta;
                let mu = apply_m(&u);
                let res: Vec<f64> = mu.iter().zip(&ju).map(|(a, b)| a - delta * b).collect();
                let rel = norm2(&res) / (delta * norm2(&ju));
                if rel < best.residual {
                    best = InfSupEstimate {
                        delta_h: delta.sqrt(),
                        delta_min: delta,
                        iterations: dim,
                        residual: rel,
                        converged: rel < opts.tol,
                    };
                }
                if best.converged || beta == 0.0 {
                    break;
                }
            }
        }
        if beta == 0.0 || dim == steps {
            break;
        }
        betas.push(beta);
        q = w.into_iter().map(|v| v / beta).collect();
        jq = jw.into_iter().map(|v| v / beta).collect();
    }
    Ok(best)
}
