use serde::{Deserialize, Serialize};

use super::residual;
use crate::directions::{estimate_cluster_directions, tau_phi_estimate, DirectionEstimatorParams, TauGridParams};
use crate::error::Result;
use crate::geom::{max_abs_entry, Matrix, Vector};
use crate::nearmetric::CorrespondenceSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessStatus {
    Consistent,
    Inconsistent,
    /// The far sample points do not span, so linear parts are not pinned down.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub status: UniquenessStatus,
    /// `max |Q₁ − Q₂|` over entries.
    pub linear_gap: f64,
    /// Largest sample residual of either transform.
    pub max_residual: f64,
    pub bound: f64,
    pub points_used: usize,
}

/// Two isometries that both stay within `K` of the sampled map must have
/// nearly equal linear parts. With `y_j = x_j − x₀` over the far points,
/// `|(Q₁ − Q₂) y_j| ≤ 4K`, so
/// `‖Q₁ − Q₂‖ ≤ 4K·√m / (min|y_j| · σ_min(U))` where `U` stacks the `y_j/|y_j|`.
pub fn check_uniqueness(
    sample: &CorrespondenceSample,
    t1: &crate::geom::IsometryTransform,
    t2: &crate::geom::IsometryTransform,
    cutoff_fraction: f64,
) -> Result<UniquenessReport> {
    let k = residual(sample, t1)?.max(residual(sample, t2)?);
    let linear_gap = max_abs_entry(&(t1.q() - t2.q()));
    let n = sample.n_src();
    let x0 = &sample.pairs()[sample.base_index().unwrap_or(0)].0;
    let offsets: Vec<Vector> = sample.sources().map(|x| x - x0).collect();
    let far_norm = offsets.iter().map(|y| y.norm()).fold(0.0_f64, f64::max);
    let far: Vec<&Vector> = offsets
        .iter()
        .filter(|y| far_norm > 0.0 && y.norm() >= cutoff_fraction * far_norm)
        .collect();
    let inconclusive = |bound| UniquenessReport {
        status: UniquenessStatus::Inconclusive,
        linear_gap,
        max_residual: k,
        bound,
        points_used: far.len(),
    };
    if far.len() < n {
        return Ok(inconclusive(f64::INFINITY));
    }
    let u = Matrix::from_columns(&far.iter().map(|y| *y / y.norm()).collect::<Vec<_>>());
    let sigma_min = u.singular_values().min();
    if sigma_min <= 1e-10 * (far.len() as f64).sqrt() {
        return Ok(inconclusive(f64::INFINITY));
    }
    let r_min = far.iter().map(|y| y.norm()).fold(f64::INFINITY, f64::min);
    let bound = 4.0 * k * (far.len() as f64).sqrt() / (r_min * sigma_min) + 1e-12;
    Ok(UniquenessReport {
        status: if linear_gap <= bound {
            UniquenessStatus::Consistent
        } else {
            UniquenessStatus::Inconsistent
        },
        linear_gap,
        max_residual: k,
        bound,
        points_used: far.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauDichotomyReport {
    pub tau: f64,
    /// `min(τ, 1 − τ)`.
    pub distance_to_dichotomy: f64,
    /// The domain looks like all of `Rⁿ`, so `τ ∈ {0, 1}` is expected.
    pub applicable: bool,
    /// Largest angle from a test direction to the nearest domain cluster direction.
    pub domain_gap: f64,
}

/// Angular coverage threshold for treating a domain sample as the whole space.
const COVERAGE_GAP: f64 = 0.3;

/// `τ` of the image of a near-isometry. When the domain is (a sample of)
/// the whole space, `τ` of the image is 0 or 1; otherwise the report is
/// informational only.
pub fn tau_dichotomy_check(
    domain: &[Vector],
    image: &[Vector],
    estimator: &DirectionEstimatorParams,
    grid: &TauGridParams,
) -> Result<TauDichotomyReport> {
    let tau = tau_phi_estimate(image, grid)?.tau;
    let dirs = estimate_cluster_directions(domain, estimator)?;
    let n = dirs.dim();
    let probe_count = 2000;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(grid.seed);
    let domain_gap = (0..probe_count)
        .map(|_| {
            let e = crate::geom::random_unit(n, &mut rng);
            dirs.directions()
                .iter()
                .map(|u| u.dot(&e).clamp(-1.0, 1.0).acos())
                .fold(std::f64::consts::PI, f64::min)
        })
        .fold(0.0_f64, f64::max);
    Ok(TauDichotomyReport {
        tau,
        distance_to_dichotomy: tau.min(1.0 - tau),
        applicable: domain_gap <= COVERAGE_GAP,
        domain_gap,
    })
}
