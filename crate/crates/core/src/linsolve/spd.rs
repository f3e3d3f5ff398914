use crate::error::Result;
use crate::linsolve::envelope::{EnvelopeLdl, PivotCheck};
use crate::sparse::{norm2, CsrMatrix};

/// Cached `L D L^T` factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    a: CsrMatrix,
    ldl: EnvelopeLdl,
}

impl SpdFactor {
    /// Factorizes `a` in its natural order. Fails with
    /// [`crate::Error::NotPositiveDefinite`] naming the offending pivot.
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Ok(Self {
            ldl: EnvelopeLdl::factor(a, None, PivotCheck::Positive)?,
            a: a.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.ldl.dim()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    /// Smallest pivot of the factorization (a cheap conditioning hint).
    pub fn min_pivot(&self) -> f64 {
        self.ldl.pivots().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = b`, with one step of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.ldl.solve(b);
        let r: Vec<f64> = b.iter().zip(self.a.mul_vec(&x)).map(|(bi, ai)| bi - ai).collect();
        if norm2(&r) > 0.0 {
            let dx = self.ldl.solve(&r);
            x.iter_mut().zip(dx).for_each(|(xi, di)| *xi += di);
        }
        x
    }
}

/// One-shot SPD solve.
pub fn solve_spd(a: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    Ok(SpdFactor::new(a)?.solve(rhs))
}
