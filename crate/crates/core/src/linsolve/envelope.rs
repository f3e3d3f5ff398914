//! Envelope (profile) `L D L^T` factorization without pivoting.
//!
//! Row `i` of the factor is stored densely from its first nonzero column
//! `first[i]` up to the diagonal. Fill-in never leaves this envelope, so the
//! storage is fixed by the ordering. Banded finite element matrices in
//! lexicographic order have a narrow envelope.
//!
//! Without pivoting the factorization exists exactly when every leading
//! principal submatrix of the permuted matrix is nonsingular. For positive
//! definite matrices that always holds; for saddle-point matrices the caller
//! must pick an ordering with that property.

use crate::error::{Error, Result};
use crate::sparse::{dot, CsrMatrix};

/// How pivots are checked during factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotCheck {
    /// Every pivot must be positive (matrix positive definite).
    Positive,
    /// Pivots may have either sign but must not vanish.
    Nonzero,
}

#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
    d: Vec<f64>,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl EnvelopeLdl {
    /// Factorizes `P A P^T` where `perm[new] = old` (identity if `None`).
    /// Only the lower triangle of the permuted matrix is read.
    pub fn factor(a: &CsrMatrix, perm: Option<Vec<usize>>, check: PivotCheck) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "factorization needs a square matrix");
        let perm = perm.unwrap_or_else(|| (0..n).collect());
        assert_eq!(perm.len(), n);
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        debug_assert!(inv.iter().all(|&v| v != usize::MAX), "not a permutation");

        let mut first = vec![0; n];
        let mut row_scale = vec![0.0f64; n];
        for (i, fi) in first.iter_mut().enumerate() {
            let (cols, vals) = a.row(perm[i]);
            *fi = i;
            for (&j, &v) in cols.iter().zip(vals) {
                let jn = inv[j];
                if jn <= i && v != 0.0 {
                    *fi = (*fi).min(jn);
                }
                row_scale[i] = row_scale[i].max(v.abs());
            }
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut data = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let (cols, vals) = a.row(perm[i]);
            for (&j, &v) in cols.iter().zip(vals) {
                let jn = inv[j];
                if jn < i {
                    data[start[i] + jn - first[i]] += v;
                } else if jn == i {
                    d[i] += v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let (done, rest) = data.split_at_mut(start[i]);
            let row = &mut rest[..i - fi];
            // g_ij = a_ij - sum_k g_ik l_jk, stored in place
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                if k0 < j {
                    let lj = &done[start[j] + k0 - fj..start[j] + j - fj];
                    let s = dot(&row[k0 - fi..j - fi], lj);
                    row[j - fi] -= s;
                }
            }
            let mut diag = d[i];
            for (k, g) in row.iter_mut().enumerate() {
                let l = *g / d[fi + k];
                diag -= *g * l;
                *g = l;
            }
            let ok = match check {
                PivotCheck::Positive => diag > 1e-14 * d_orig_scale(row_scale[i]),
                PivotCheck::Nonzero => diag.abs() > 1e-15 * d_orig_scale(row_scale[i]),
            };
            if !ok || !diag.is_finite() {
                return Err(match check {
                    PivotCheck::Positive => Error::NotPositiveDefinite { row: perm[i], value: diag },
                    PivotCheck::Nonzero => Error::SingularSaddle { row: perm[i], value: diag },
                });
            }
            d[i] = diag;
        }
        Ok(Self {
            n,
            first,
            start,
            data,
            d,
            perm,
            inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored factor entries (envelope size).
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    /// Pivots in factorization order.
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Number of negative pivots (the inertia's negative count).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut z: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            z[i] -= dot(row, &z[fi..i]);
        }
        for (zi, di) in z.iter_mut().zip(&self.d) {
            *zi /= di;
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let xi = z[i];
            if xi != 0.0 {
                let row = &self.data[self.start[i]..self.start[i + 1]];
                for (zk, l) in z[fi..i].iter_mut().zip(row) {
                    *zk -= l * xi;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (old, &new) in self.inv.iter().enumerate() {
            x[old] = z[new];
        }
        x
    }
}

fn d_orig_scale(s: f64) -> f64 {
    if s > 0.0 {
        s
    } else {
        f64::MIN_POSITIVE
    }
}
