use super::{ensure_dim, Matrix, Vector};
use crate::error::{Error, Result};

/// Relative singular-value threshold used for rank decisions.
const RANK_TOL: f64 = 1e-10;

/// Whether a fitted orthogonal matrix may be a reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Handedness {
    #[default]
    AllowReflection,
    RotationOnly,
}

/// Full SVD of a square or wide matrix with singular triplets sorted by
/// decreasing singular value. `u` is always `n × n`.
struct SortedSvd {
    u: Matrix,
    sigma: Vec<f64>,
    /// Right singular vectors as columns, `m × k` with `k = min(n, m)`.
    v: Matrix,
}

fn sorted_svd(m: &Matrix) -> SortedSvd {
    let n = m.nrows();
    // Pad tall-thin matrices so U comes out square.
    let padded = if m.ncols() < n {
        let mut p = Matrix::zeros(n, n);
        p.view_mut((0, 0), (n, m.ncols())).copy_from(m);
        p
    } else {
        m.clone()
    };
    let cols = padded.ncols();
    let svd = padded.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let k = order.len();
    let mut su = Matrix::zeros(n, n);
    let mut sv = Matrix::zeros(cols, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &vt.row(src).transpose());
        sigma.push(svd.singular_values[src]);
    }
    // `u` from a square SVD has n columns; k == n here.
    SortedSvd { u: su, sigma, v: sv }
}

fn numerical_rank(sigma: &[f64]) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_TOL * top).count()
}

fn columns(vectors: &[Vector], n: usize) -> Result<Matrix> {
    for v in vectors {
        ensure_dim(v, n)?;
    }
    Ok(Matrix::from_columns(vectors))
}

/// Numerical rank of a set of vectors (relative threshold 1e-10).
pub fn rank(vectors: &[Vector]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = Matrix::from_columns(vectors);
    numerical_rank(&sorted_svd(&m).sigma)
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)` in `R^n`.
pub fn null_space(vectors: &[Vector], n: usize) -> Result<Vec<Vector>> {
    if vectors.is_empty() {
        return Ok((0..n).map(|i| super::basis_vector(n, i)).collect());
    }
    let m = columns(vectors, n)?;
    let svd = sorted_svd(&m);
    let r = numerical_rank(&svd.sigma);
    Ok((r..n).map(|j| svd.u.column(j).into_owned()).collect())
}

/// Nearest point of `span(basis)` to `x`.
pub fn orthogonal_projection(basis: &[Vector], x: &Vector) -> Result<Vector> {
    let n = x.len();
    if basis.is_empty() {
        return Ok(Vector::zeros(n));
    }
    let b = columns(basis, n)?;
    let svd = sorted_svd(&b);
    let r = numerical_rank(&svd.sigma);
    if r < basis.len() {
        return Err(Error::RankDeficient {
            rank: r,
            expected: basis.len(),
        });
    }
    let ur = svd.u.columns(0, r);
    Ok(ur * (ur.transpose() * x))
}

/// Orthogonal `Q` minimizing `Σ wᵢ |Q sᵢ − tᵢ|²`, reflections allowed.
pub fn procrustes_fit(sources: &[Vector], targets: &[Vector], weights: &[f64]) -> Result<Matrix> {
    procrustes_fit_with(sources, targets, weights, Handedness::AllowReflection)
}

/// Weighted orthogonal Procrustes.
///
/// With `H = Σ wᵢ tᵢ sᵢᵀ = U Σ Vᵀ` the minimizer is `U Vᵀ`. When `H` is rank
/// deficient the map is fixed on the spanned part and completed on the
/// orthogonal complement by the orthogonal map closest to the identity, so a
/// source complement that coincides with the target complement is left alone.
pub fn procrustes_fit_with(
    sources: &[Vector],
    targets: &[Vector],
    weights: &[f64],
    handedness: Handedness,
) -> Result<Matrix> {
    if sources.is_empty() {
        return Err(Error::Empty("procrustes sources"));
    }
    if targets.len() != sources.len() {
        return Err(Error::DimensionMismatch {
            expected: sources.len(),
            found: targets.len(),
        });
    }
    if weights.len() != sources.len() {
        return Err(Error::DimensionMismatch {
            expected: sources.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    let n = sources[0].len();
    let mut h = Matrix::zeros(n, n);
    for ((s, t), &w) in sources.iter().zip(targets).zip(weights) {
        ensure_dim(s, n)?;
        ensure_dim(t, n)?;
        h += w * t * s.transpose();
    }

    let svd = sorted_svd(&h);
    let r = numerical_rank(&svd.sigma);
    let u = &svd.u;
    let v = &svd.v;
    let mut q = u.columns(0, r) * v.columns(0, r).transpose();
    if r < n {
        let u_perp = u.columns(r, n - r);
        let v_perp = v.columns(r, n - r);
        let c = v_perp.transpose() * u_perp;
        let inner = sorted_svd(&c);
        // O = B Aᵀ maximizes tr(O C) for C = A Σ Bᵀ.
        let o = &inner.v * inner.u.transpose();
        q += u_perp * o * v_perp.transpose();
    }
    if handedness == Handedness::RotationOnly && q.determinant() < 0.0 {
        // Negate the least significant singular direction.
        let vn = v.column(n - 1).into_owned();
        q -= 2.0 * (&q * &vn) * vn.transpose();
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{basis_vector, orthogonality_defect, random_orthogonal, random_unit};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    #[test]
    fn projection_examples() {
        let e1 = v(&[1.0, 0.0]);
        let e2 = v(&[0.0, 1.0]);
        let x = v(&[3.0, 4.0]);
        assert!((orthogonal_projection(std::slice::from_ref(&e1), &x).unwrap() - v(&[3.0, 0.0])).norm() < 1e-12);
        assert!((orthogonal_projection(&[e1, e2], &x).unwrap() - &x).norm() < 1e-12);
        // Hand solution of the 1-d least squares problem: ((x·b)/|b|²) b.
        let b = v(&[1.0, 1.0]) / 2f64.sqrt();
        let p = orthogonal_projection(&[b], &v(&[1.0, 0.0])).unwrap();
        assert!((p - v(&[0.5, 0.5])).norm() < 1e-12);
    }

    #[test]
    fn projection_residual_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let basis: Vec<Vector> = (0..3).map(|_| random_unit(6, &mut rng)).collect();
            let x = random_unit(6, &mut rng) * 10.0;
            let p = orthogonal_projection(&basis, &x).unwrap();
            let res = &x - &p;
            for b in &basis {
                assert!(res.dot(b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn projection_rejects_dependent_basis() {
        let b = v(&[1.0, 1.0]);
        let err = orthogonal_projection(&[b.clone(), 2.0 * b], &v(&[1.0, 0.0])).unwrap_err();
        assert_eq!(err, Error::RankDeficient { rank: 1, expected: 2 });
    }

    #[test]
    fn procrustes_identity_and_quarter_turn() {
        let n = 4;
        let es: Vec<Vector> = (0..n).map(|i| basis_vector(n, i)).collect();
        let q = procrustes_fit(&es, &es, &vec![1.0; n]).unwrap();
        assert!((q - Matrix::identity(n, n)).norm() < 1e-12);

        let src = [v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let dst = [v(&[0.0, 1.0]), v(&[-1.0, 0.0])];
        let q = procrustes_fit(&src, &dst, &[1.0, 1.0]).unwrap();
        let rot = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((q - rot).norm() < 1e-12);
    }

    #[test]
    fn procrustes_recovers_random_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in 1..=8 {
            let q0 = random_orthogonal(n, &mut rng);
            let src: Vec<Vector> = (0..n + 3).map(|_| random_unit(n, &mut rng) * 5.0).collect();
            let dst: Vec<Vector> = src.iter().map(|s| &q0 * s).collect();
            let q = procrustes_fit(&src, &dst, &vec![1.0; src.len()]).unwrap();
            assert!((&q - &q0).amax() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn rotation_only_flips_reflection() {
        let refl = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let src = [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 1.0])];
        let dst: Vec<Vector> = src.iter().map(|s| &refl * s).collect();
        let q = procrustes_fit(&src, &dst, &[1.0; 3]).unwrap();
        assert!((q.determinant() + 1.0).abs() < 1e-12);
        let r = procrustes_fit_with(&src, &dst, &[1.0; 3], Handedness::RotationOnly).unwrap();
        assert!((r.determinant() - 1.0).abs() < 1e-12);
        assert!(orthogonality_defect(&r) < 1e-12);
    }

    #[test]
    fn rank_deficient_extends_by_identity() {
        // Rotation inside the e1-e2 plane of R^3; e3 is never observed.
        let c = 0.6_f64;
        let s = 0.8_f64;
        let src = [v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])];
        let dst = [v(&[c, s, 0.0]), v(&[-s, c, 0.0])];
        let q = procrustes_fit(&src, &dst, &[1.0, 1.0]).unwrap();
        let expected = Matrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        assert!((q - expected).amax() < 1e-12);
    }

    #[test]
    fn procrustes_errors() {
        assert!(matches!(procrustes_fit(&[], &[], &[]), Err(Error::Empty(_))));
        assert!(matches!(
            procrustes_fit(&[v(&[1.0, 0.0])], &[v(&[1.0, 0.0, 0.0])], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(procrustes_fit(&[v(&[1.0])], &[v(&[1.0])], &[-1.0]).is_err());
    }

    #[test]
    fn null_space_complements_span() {
        let ns = null_space(&[v(&[1.0, 0.0, 0.0])], 3).unwrap();
        assert_eq!(ns.len(), 2);
        for u in &ns {
            assert!(u[0].abs() < 1e-12);
            assert!((u.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(null_space(&[], 2).unwrap().len(), 2);
        assert_eq!(rank(&[v(&[1.0, 2.0]), v(&[2.0, 4.0])]), 1);
    }

    proptest! {
        #[test]
        fn procrustes_output_is_orthogonal(seed in 0u64..5000, n in 1usize..7, m in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let src: Vec<Vector> = (0..m).map(|_| random_unit(n, &mut rng)).collect();
            let dst: Vec<Vector> = (0..m).map(|_| random_unit(n, &mut rng) * 2.0).collect();
            let w: Vec<f64> = (0..m).map(|i| (i % 3) as f64).collect();
            let q = procrustes_fit(&src, &dst, &w).unwrap();
            prop_assert!(orthogonality_defect(&q) <= 1e-9);
        }
    }
}
