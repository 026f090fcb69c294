//! Escape rate `τ(A) = sup_e liminf_{|t|→∞} d(te, A)/|t|` of a sampled set
//! and its angular form `φ = arcsin τ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mu_of_sample, DirectionEstimatorParams};
use crate::error::{Error, Result};
use crate::geom::{ensure_dim, random_unit, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauGridParams {
    /// Number of candidate directions `e` (angles in 2-d, a Fibonacci
    /// lattice in 3-d, random directions above).
    pub directions: usize,
    /// Scales `|t|` as fractions of the largest sample norm.
    pub scale_fractions: Vec<f64>,
    /// Hill-climbing rounds around the best grid direction.
    pub refine_rounds: usize,
    pub seed: u64,
}

impl Default for TauGridParams {
    fn default() -> Self {
        Self {
            directions: 720,
            scale_fractions: vec![0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9],
            refine_rounds: 40,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauEstimate {
    pub tau: f64,
    /// `arcsin τ`, radians.
    pub phi: f64,
}

/// Points sorted by norm, so that nearest-point queries can stop once the
/// norm gap alone exceeds the best distance found.
struct NormIndex<'a> {
    norms: Vec<f64>,
    points: Vec<&'a Vector>,
}

impl<'a> NormIndex<'a> {
    fn new(points: &'a [Vector]) -> Self {
        let mut order: Vec<(f64, &Vector)> = points.iter().map(|p| (p.norm(), p)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            norms: order.iter().map(|o| o.0).collect(),
            points: order.into_iter().map(|o| o.1).collect(),
        }
    }

    /// Distance from `q` to the nearest point, or some distance `≤ stop` once
    /// one is found.
    fn nearest_distance(&self, q: &Vector, stop: f64) -> f64 {
        let stop2 = if stop > 0.0 { stop * stop } else { 0.0 };
        let qn = q.norm();
        let mut hi = self.norms.partition_point(|&r| r < qn);
        let mut lo = hi;
        let mut best2 = f64::INFINITY;
        loop {
            let gap_lo = if lo > 0 { qn - self.norms[lo - 1] } else { f64::INFINITY };
            let gap_hi = if hi < self.norms.len() { self.norms[hi] - qn } else { f64::INFINITY };
            let (gap, idx) = if gap_lo <= gap_hi {
                lo = lo.wrapping_sub(1);
                (gap_lo, lo)
            } else {
                hi += 1;
                (gap_hi, hi - 1)
            };
            if !gap.is_finite() || gap * gap >= best2 {
                break;
            }
            best2 = best2.min((q - self.points[idx]).norm_squared());
            if best2 <= stop2 {
                break;
            }
        }
        best2.sqrt()
    }
}

/// Smallest relative distance `d(te, A)/|t|` over the scale grid, both signs
/// of `t`. Returns early with some value `≤ floor` when the ratio cannot
/// exceed `floor`.
fn escape_ratio(index: &NormIndex, e: &Vector, scales: &[f64], floor: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &s in scales {
        for t in [s, -s] {
            best = best.min(index.nearest_distance(&(e * t), floor * s) / s);
            if best <= floor {
                return best;
            }
        }
    }
    best
}

/// Direction with the largest escape ratio among `candidates`, or the
/// incumbent if none beats it.
fn best_direction(
    index: &NormIndex,
    candidates: &[Vector],
    scales: &[f64],
    incumbent: (Vector, f64),
) -> (Vector, f64) {
    candidates.iter().fold(incumbent, |best, e| {
        let r = escape_ratio(index, e, scales, best.1);
        if r > best.1 {
            (e.clone(), r)
        } else {
            best
        }
    })
}

fn candidate_directions(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    match n {
        1 => vec![Vector::from_element(1, 1.0)],
        2 => (0..count)
            .map(|k| {
                // ±e give the same two-sided ratio, so a half circle suffices.
                let a = std::f64::consts::PI * k as f64 / count as f64;
                Vector::from_column_slice(&[a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (k as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    Vector::from_column_slice(&[rho * a.cos(), rho * a.sin(), z])
                })
                .collect()
        }
        _ => (0..count).map(|_| random_unit(n, rng)).collect(),
    }
}

/// Grid estimate of `τ` over the largest sampled scales, refined by local
/// search around the best direction. `φ = arcsin τ`.
pub fn tau_phi_estimate(points: &[Vector], params: &TauGridParams) -> Result<TauEstimate> {
    let first = points.first().ok_or(Error::Empty("point set"))?;
    let n = first.len();
    let mut max_norm = 0.0_f64;
    let mut min_norm = f64::INFINITY;
    for p in points {
        ensure_dim(p, n)?;
        let r = p.norm();
        if !r.is_finite() {
            return Err(Error::NonFinite);
        }
        max_norm = max_norm.max(r);
        if r > 0.0 {
            min_norm = min_norm.min(r);
        }
    }
    if max_norm == 0.0 || max_norm < 10.0 * min_norm {
        return Err(Error::Degenerate(
            "sample spans less than one decade of norms".into(),
        ));
    }
    if params.directions == 0 || params.scale_fractions.is_empty() {
        return Err(Error::InvalidParameter("empty τ grid".into()));
    }
    let scales: Vec<f64> = params.scale_fractions.iter().map(|f| f * max_norm).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let grid = candidate_directions(n, params.directions, &mut rng);
    let index = NormIndex::new(points);
    let (mut best_e, mut best) = best_direction(&index, &grid, &scales, (grid[0].clone(), -1.0));

    if n > 1 {
        let mut step = match n {
            2 => std::f64::consts::PI / params.directions as f64,
            _ => 4.0 / (params.directions as f64).sqrt(),
        };
        for _ in 0..params.refine_rounds {
            let trials: Vec<Vector> = (0..4 * n)
                .map(|_| {
                    let mut d = random_unit(n, &mut rng);
                    d -= &best_e * d.dot(&best_e);
                    (&best_e + d * (step * rng.random_range(0.2..1.0))).normalize()
                })
                .collect();
            let improved = best_direction(&index, &trials, &scales, (best_e.clone(), best));
            if improved.1 > best {
                (best_e, best) = improved;
            } else {
                step *= 0.7;
            }
        }
    }
    let tau = best.clamp(0.0, 1.0);
    Ok(TauEstimate {
        tau,
        phi: tau.asin(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop28Params {
    pub estimator: DirectionEstimatorParams,
    pub grid: TauGridParams,
    /// Allowed gap between `μ` and `√(1 − τ²)`.
    pub tolerance: f64,
}

impl Default for Prop28Params {
    fn default() -> Self {
        Self {
            estimator: DirectionEstimatorParams::default(),
            grid: TauGridParams::default(),
            tolerance: 0.08,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop28Report {
    pub mu: f64,
    pub tau: f64,
    pub phi: f64,
    /// `√(1 − τ²)`, which should match `mu`.
    pub mu_from_tau: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub consistent: bool,
}

/// Compares the direction-based `μ` of a sample with `√(1 − τ²)`.
pub fn check_prop28(points: &[Vector], params: &Prop28Params) -> Result<Prop28Report> {
    let mu = mu_of_sample(points, &params.estimator)?;
    let TauEstimate { tau, phi } = tau_phi_estimate(points, &params.grid)?;
    let mu_from_tau = (1.0 - tau * tau).max(0.0).sqrt();
    let deviation = (mu - mu_from_tau).abs();
    Ok(Prop28Report {
        mu,
        tau,
        phi,
        mu_from_tau,
        deviation,
        tolerance: params.tolerance,
        consistent: deviation <= params.tolerance,
    })
}
