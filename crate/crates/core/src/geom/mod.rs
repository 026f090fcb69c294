//! Dense vector kernel: isometries, projections, orthogonal Procrustes,
//! smallest enclosing balls and Jung constants.
//!
//! Everything here works in a fixed ambient dimension `n` that is expected to
//! be small (at most 16 or so). Vectors are `nalgebra::DVector<f64>`; matrices
//! are `DMatrix<f64>` and are exchanged row-major at file boundaries.

mod ball;
mod procrustes;
mod transform;

pub use ball::{smallest_enclosing_ball, Ball};
pub use procrustes::{
    null_space, orthogonal_projection, procrustes_fit, procrustes_fit_with, rank, Handedness,
};
pub use transform::IsometryTransform;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default float tolerance used by checks throughout the crate.
pub const TOL: f64 = 1e-9;

/// Builds a vector, rejecting NaN and infinite coordinates.
pub fn vector(coords: &[f64]) -> Result<Vector> {
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Vector::from_column_slice(coords))
}

pub(crate) fn ensure_dim(v: &Vector, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    Ok(())
}

/// The `i`-th standard basis vector of `R^n`.
pub fn basis_vector(n: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[i] = 1.0;
    e
}

/// Jung constant of euclidean `n`-space, `sqrt(2n / (n + 1))`.
///
/// Every set of diameter `d` lies in a ball of radius `jung_constant(n) * d / 2`,
/// and the regular simplex attains it.
pub fn jung_constant(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let n = n as f64;
    Ok((2.0 * n / (n + 1.0)).sqrt())
}

/// Largest pairwise distance. Zero for fewer than two points.
pub fn diameter(points: &[Vector]) -> f64 {
    let mut best = 0.0_f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max((p - q).norm());
        }
    }
    best
}

/// Uniformly distributed unit vector.
pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the sign
/// of `R`'s diagonal folded back into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// Max-entry deviation of `QᵀQ` from the identity.
pub fn orthogonality_defect(q: &Matrix) -> f64 {
    let n = q.ncols();
    let g = q.transpose() * q;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Largest absolute entry of a matrix.
pub fn max_abs_entry(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
