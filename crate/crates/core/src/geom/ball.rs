use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ensure_dim, Matrix, Vector};
use crate::error::{Error, Result};

/// Closed ball `{ y : |y − center| ≤ radius }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vector,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &Vector, slack: f64) -> bool {
        (p - &self.center).norm() <= self.radius + slack
    }
}

const DEDUP_TOL: f64 = 1e-12;
const SHUFFLE_SEED: u64 = 0x5eb0_5eb0;
const MAX_PIVOTS: usize = 64;

/// Minimal-radius ball containing every point.
///
/// Welzl's move-to-front recursion over support sets of at most `n + 1`
/// points, followed by pivoting passes that restart the recursion with the
/// worst outlier in front until no point is outside. The shuffle is seeded,
/// so the result is deterministic.
pub fn smallest_enclosing_ball(points: &[Vector]) -> Result<Ball> {
    let first = points.first().ok_or(Error::Empty("point set"))?;
    let n = first.len();
    for p in points {
        ensure_dim(p, n)?;
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
    }

    // Work relative to the centroid to keep magnitudes small.
    let centroid = points.iter().fold(Vector::zeros(n), |acc, p| acc + p) / points.len() as f64;
    let mut pts: Vec<Vector> = dedup(points.iter().map(|p| p - &centroid).collect());
    let scale = pts.iter().map(|p| p.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Ok(Ball {
            center: centroid,
            radius: 0.0,
        });
    }
    let slack = 1e-12 * scale;

    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(SHUFFLE_SEED));
    let mut support = Vec::with_capacity(n + 1);
    let end = pts.len();
    let mut ball = move_to_front(&mut pts, end, &mut support, n, slack);

    for _ in 0..MAX_PIVOTS {
        let (worst, excess) = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - &ball.center).norm() - ball.radius))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if excess <= slack {
            break;
        }
        pts[..=worst].rotate_right(1);
        support.clear();
        ball = move_to_front(&mut pts, end, &mut support, n, slack);
    }

    // Report the exact covering radius for the final center.
    let radius = pts
        .iter()
        .map(|p| (p - &ball.center).norm())
        .fold(0.0_f64, f64::max);
    Ok(Ball {
        center: ball.center + centroid,
        radius,
    })
}

fn dedup(mut pts: Vec<Vector>) -> Vec<Vector> {
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<Vector> = Vec::with_capacity(pts.len());
    'outer: for p in pts {
        for q in out.iter().rev() {
            if p[0] - q[0] > DEDUP_TOL {
                break;
            }
            if (&p - q).amax() <= DEDUP_TOL {
                continue 'outer;
            }
        }
        out.push(p);
    }
    out
}

/// Smallest ball through the points of `support`, all on its boundary.
/// `None` for an empty support.
fn circumball(support: &[Vector]) -> Option<Ball> {
    let q0 = support.first()?;
    if support.len() == 1 {
        return Some(Ball {
            center: q0.clone(),
            radius: 0.0,
        });
    }
    let k = support.len() - 1;
    let a = Matrix::from_columns(&support[1..].iter().map(|q| q - q0).collect::<Vec<_>>());
    let gram = a.transpose() * &a;
    let rhs = Vector::from_fn(k, |j, _| 0.5 * a.column(j).norm_squared());
    // Pseudo-inverse solve tolerates nearly affinely dependent supports.
    let gram_scale = gram.amax().max(f64::MIN_POSITIVE);
    let lambda = gram
        .svd(true, true)
        .solve(&rhs, 1e-14 * gram_scale)
        .ok()?;
    let center = q0 + a * lambda;
    let radius = support
        .iter()
        .map(|q| (q - &center).norm())
        .fold(0.0_f64, f64::max);
    Some(Ball { center, radius })
}

fn move_to_front(
    pts: &mut [Vector],
    end: usize,
    support: &mut Vec<Vector>,
    n: usize,
    slack: f64,
) -> Ball {
    let mut ball = circumball(support).unwrap_or(Ball {
        center: pts[0].clone(),
        radius: -1.0,
    });
    if support.len() == n + 1 {
        return ball;
    }
    for i in 0..end {
        if ball.radius >= 0.0 && ball.contains(&pts[i], slack) {
            continue;
        }
        support.push(pts[i].clone());
        ball = move_to_front(pts, i, support, n, slack);
        support.pop();
        pts[..=i].rotate_right(1);
    }
    ball
}
