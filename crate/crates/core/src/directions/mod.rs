//! Cluster directions of sampled unbounded sets and the directional
//! invariants built on them: `σ`, `μ₁`, `μ`, thickness, `τ` and `φ`.

mod sphere;
mod tau;

pub use sphere::{minimize_max_abs, SphereMinimum, SphereSearch};
pub use tau::{check_prop28, tau_phi_estimate, Prop28Params, Prop28Report, TauEstimate, TauGridParams};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ensure_dim, Vector};

const UNIT_TOL: f64 = 1e-9;

/// `x / |x|`.
pub fn central_project(x: &Vector) -> Result<Vector> {
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    if !norm.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(x / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimatorParams {
    /// Points with `|x| < cutoff_fraction · max|x|` are ignored.
    pub cutoff_fraction: f64,
    /// Unit vectors closer than this angle (radians) are merged.
    pub merge_angle: f64,
}

impl Default for DirectionEstimatorParams {
    fn default() -> Self {
        Self {
            cutoff_fraction: 0.6,
            merge_angle: 0.05,
        }
    }
}

impl DirectionEstimatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_fraction > 0.0 && self.cutoff_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff fraction must lie in (0, 1), got {}",
                self.cutoff_fraction
            )));
        }
        if !(self.merge_angle > 0.0 && self.merge_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "merge angle must lie in (0, π/2), got {}",
                self.merge_angle
            )));
        }
        Ok(())
    }
}

/// Finite set of unit directions with the number of sample points behind each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    dim: usize,
    directions: Vec<Vector>,
    counts: Vec<usize>,
}

impl DirectionSet {
    pub fn new(dim: usize, directions: Vec<Vector>, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != directions.len() {
            return Err(Error::InvalidParameter(format!(
                "{} directions but {} counts",
                directions.len(),
                counts.len()
            )));
        }
        for u in &directions {
            ensure_dim(u, dim)?;
            let norm = u.norm();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::NotUnit(norm));
            }
        }
        Ok(Self {
            dim,
            directions,
            counts,
        })
    }

    /// Directions with unit counts.
    pub fn from_unit_vectors(dim: usize, directions: Vec<Vector>) -> Result<Self> {
        let counts = vec![1; directions.len()];
        Self::new(dim, directions, counts)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            directions: Vec::new(),
            counts: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Dimension of the linear span of the directions.
    pub fn span_rank(&self) -> usize {
        crate::geom::rank(&self.directions)
    }
}

struct Cluster {
    sum: Vector,
    count: usize,
}

impl Cluster {
    fn mean(&self) -> Vector {
        &self.sum / self.sum.norm()
    }
}

/// Discretized cluster directions: directions of the far points, merged
/// greedily by angle. Points are visited by decreasing norm, ties broken
/// lexicographically, so the result does not depend on input order.
pub fn estimate_cluster_directions(
    points: &[Vector],
    params: &DirectionEstimatorParams,
) -> Result<DirectionSet> {
    params.validate()?;
    let first = points.first().ok_or(Error::Empty("point set"))?;
    let n = first.len();
    let mut norms = Vec::with_capacity(points.len());
    for p in points {
        ensure_dim(p, n)?;
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        norms.push(p.norm());
    }
    let max_norm = norms.iter().copied().fold(0.0_f64, f64::max);
    if max_norm == 0.0 {
        return Err(Error::Degenerate("all points at origin".into()));
    }
    let cutoff = params.cutoff_fraction * max_norm;
    let mut kept: Vec<usize> = (0..points.len()).filter(|&i| norms[i] >= cutoff).collect();
    kept.sort_by(|&a, &b| {
        norms[b].total_cmp(&norms[a]).then_with(|| {
            points[a]
                .iter()
                .zip(points[b].iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let cos_merge = params.merge_angle.cos();
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut means: Vec<Vector> = Vec::new();
    for i in kept {
        let u = &points[i] / norms[i];
        let nearest = means
            .iter()
            .enumerate()
            .map(|(c, m)| (c, m.dot(&u)))
            .filter(|&(_, cos)| cos >= cos_merge)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((c, _)) => {
                clusters[c].sum += &u;
                clusters[c].count += 1;
                means[c] = clusters[c].mean();
            }
            None => {
                means.push(u.clone());
                clusters.push(Cluster { sum: u, count: 1 });
            }
        }
    }

    // Means drift while clusters grow; merge any that ended up too close.
    loop {
        let mut pair = None;
        'search: for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                if means[a].dot(&means[b]) > cos_merge {
                    pair = Some((a, b));
                    break 'search;
                }
            }
        }
        let Some((a, b)) = pair else { break };
        let absorbed = clusters.remove(b);
        means.remove(b);
        clusters[a].sum += absorbed.sum;
        clusters[a].count += absorbed.count;
        means[a] = clusters[a].mean();
    }

    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| clusters[b].count.cmp(&clusters[a].count));
    Ok(DirectionSet {
        dim: n,
        directions: order.iter().map(|&c| means[c].clone()).collect(),
        counts: order.iter().map(|&c| clusters[c].count).collect(),
    })
}

/// `max_{u ∈ X} |u · e|`, zero for an empty set.
pub fn sigma(e: &Vector, set: &DirectionSet) -> Result<f64> {
    ensure_dim(e, set.dim())?;
    let norm = e.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit(norm));
    }
    Ok(sphere::max_abs_dot(set.directions(), e))
}

/// `min_{|e| = 1} σ(e, X)`, with the empty set mapped to 0.
pub fn mu1(set: &DirectionSet) -> f64 {
    mu1_with(set, &SphereSearch::default()).value
}

/// [`mu1`] with explicit search options; also returns the minimizing direction.
pub fn mu1_with(set: &DirectionSet, opts: &SphereSearch) -> SphereMinimum {
    let mut m = minimize_max_abs(set.directions(), set.dim(), opts);
    m.value = m.value.clamp(0.0, 1.0);
    m
}

/// `μ₁` of the estimated cluster directions of a sample.
pub fn mu_of_sample(points: &[Vector], params: &DirectionEstimatorParams) -> Result<f64> {
    let set = estimate_cluster_directions(points, params)?;
    Ok(mu1(&set))
}

/// Smallest width `min_{|u| = 1} (max x·u − min x·u)` of a finite set.
pub fn thickness(points: &[Vector]) -> Result<f64> {
    let first = points.first().ok_or(Error::Empty("point set"))?;
    let n = first.len();
    for p in points {
        ensure_dim(p, n)?;
    }
    let diffs: Vec<Vector> = (0..points.len())
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..points.len()).map(move |j| (i, j)))
        .map(|(i, j)| &points[i] - &points[j])
        .filter(|d| d.amax() > 0.0)
        .collect();
    Ok(minimize_max_abs(&diffs, n, &SphereSearch::default()).value)
}
