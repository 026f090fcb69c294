use serde::{Deserialize, Serialize};

use super::{ensure_dim, orthogonality_defect, Matrix, Vector, TOL};
use crate::error::{Error, Result};

/// Euclidean isometry `x ↦ Qx + w` with `Q` orthogonal (reflections allowed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryTransform {
    q: Matrix,
    w: Vector,
}

impl IsometryTransform {
    /// Validates that `q` is square, orthogonal to within [`TOL`], and that
    /// `w` has the matching length.
    pub fn new(q: Matrix, w: Vector) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: q.ncols(),
            });
        }
        ensure_dim(&w, n)?;
        if q.iter().chain(w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let defect = orthogonality_defect(&q);
        if defect > TOL {
            return Err(Error::NotOrthogonal(defect));
        }
        Ok(Self { q, w })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            q: Matrix::identity(n, n),
            w: Vector::zeros(n),
        }
    }

    pub fn translation(w: Vector) -> Self {
        let n = w.len();
        Self {
            q: Matrix::identity(n, n),
            w,
        }
    }

    pub fn linear(q: Matrix) -> Result<Self> {
        let n = q.nrows();
        Self::new(q, Vector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn w(&self) -> &Vector {
        &self.w
    }

    pub fn determinant(&self) -> f64 {
        self.q.determinant()
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        ensure_dim(x, self.dim())?;
        Ok(&self.q * x + &self.w)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            q: &self.q * &other.q,
            w: &self.q * &other.w + &self.w,
        })
    }

    pub fn inverse(&self) -> Self {
        let qt = self.q.transpose();
        let w = -(&qt * &self.w);
        Self { q: qt, w }
    }
}
