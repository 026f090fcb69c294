//! Minimization of `e ↦ max_k |r_k · e|` over the unit sphere.
//!
//! The objective is convex in `e` but the domain is not, so a single descent
//! may stall in a local minimum. Each start runs projected subgradient
//! descent and is then polished exactly: with `y = e / f(e)` the problem is
//! the maximization of `|y|` over the symmetric polytope
//! `P = { y : |r_k · y| ≤ 1 }`, whose local maxima sit at vertices. The
//! polish walks faces and edges of `P` until no edge increases `|y|`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{basis_vector, null_space, random_unit, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSearch {
    /// Number of random starts (null-space and singular-vector seeds are extra).
    pub starts: usize,
    pub subgradient_iters: usize,
    pub seed: u64,
}

impl Default for SphereSearch {
    fn default() -> Self {
        Self {
            starts: 64,
            subgradient_iters: 200,
            seed: 0x00ba_5e5e,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereMinimum {
    pub value: f64,
    pub argmin: Vector,
}

pub(crate) fn max_abs_dot(rows: &[Vector], e: &Vector) -> f64 {
    rows.iter().map(|r| r.dot(e).abs()).fold(0.0_f64, f64::max)
}

/// Global minimum (up to multi-start coverage) of `max_k |r_k · e|` over `|e| = 1`.
pub fn minimize_max_abs(rows: &[Vector], n: usize, opts: &SphereSearch) -> SphereMinimum {
    if rows.is_empty() {
        return SphereMinimum {
            value: 0.0,
            argmin: basis_vector(n, 0),
        };
    }
    // A direction orthogonal to every row attains the trivial minimum.
    let null = null_space(rows, n).unwrap_or_default();
    if let Some(e) = null.first() {
        return SphereMinimum {
            value: max_abs_dot(rows, e),
            argmin: e.clone(),
        };
    }

    let mut seeds: Vec<Vector> = Vec::with_capacity(opts.starts + 2 * n);
    let gram = rows.iter().fold(Matrix::zeros(n, n), |acc, r| acc + r * r.transpose());
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    seeds.extend(order.iter().map(|&j| eig.eigenvectors.column(j).into_owned()));
    seeds.extend((0..n).map(|i| basis_vector(n, i)));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    seeds.extend((0..opts.starts).map(|_| random_unit(n, &mut rng)));

    let scale = rows.iter().map(|r| r.norm()).fold(0.0_f64, f64::max);
    let mut best = SphereMinimum {
        value: f64::INFINITY,
        argmin: seeds[0].clone(),
    };
    for seed in seeds {
        let e = subgradient_descent(rows, seed, opts.subgradient_iters);
        let e = polish(rows, &e, scale).unwrap_or(e);
        let value = max_abs_dot(rows, &e);
        if value < best.value {
            best = SphereMinimum { value, argmin: e };
        }
    }
    best
}

fn subgradient_descent(rows: &[Vector], start: Vector, iters: usize) -> Vector {
    let mut e = start;
    let mut best_e = e.clone();
    let mut best_f = max_abs_dot(rows, &e);
    for t in 0..iters {
        let (k, dot) = rows
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r.dot(&e)))
            .fold((0, 0.0_f64), |a, b| if b.1.abs() > a.1.abs() { b } else { a });
        let g = &rows[k] * dot.signum();
        let tangent = &g - &e * g.dot(&e);
        let tn = tangent.norm();
        if tn < 1e-15 {
            break;
        }
        let step = 0.3 / ((t + 1) as f64).sqrt();
        e -= tangent * (step / tn);
        e /= e.norm();
        let f = max_abs_dot(rows, &e);
        if f < best_f {
            best_f = f;
            best_e = e.clone();
        }
    }
    best_e
}

/// Constraint `sign · r_k · y ≤ 1`.
#[derive(Clone, Copy)]
struct Face {
    row: usize,
    sign: f64,
}

fn active_faces(rows: &[Vector], y: &Vector) -> Vec<Face> {
    rows.iter()
        .enumerate()
        .filter_map(|(row, r)| {
            let d = r.dot(y);
            (d.abs() >= 1.0 - 1e-10).then_some(Face {
                row,
                sign: d.signum(),
            })
        })
        .collect()
}

/// Largest step along `d` that keeps `y + t d` inside the polytope.
fn ray_limit(rows: &[Vector], y: &Vector, d: &Vector, scale: f64) -> Option<f64> {
    let dn = d.norm();
    let mut limit: Option<f64> = None;
    for r in rows {
        let rate = r.dot(d);
        if rate.abs() <= 1e-13 * scale * dn {
            continue;
        }
        let room = if rate > 0.0 {
            (1.0 - r.dot(y)) / rate
        } else {
            (1.0 + r.dot(y)) / -rate
        };
        let room = room.max(0.0);
        limit = Some(limit.map_or(room, |l: f64| l.min(room)));
    }
    limit
}

/// Moves from the boundary point `e / f(e)` to a vertex of `P` that is a local
/// maximum of `|y|`. Returns the unit direction of that vertex.
fn polish(rows: &[Vector], e: &Vector, scale: f64) -> Option<Vector> {
    let n = e.len();
    let f = max_abs_dot(rows, e);
    if f <= 0.0 {
        return None;
    }
    let mut y = e / f;
    let max_steps = 8 * n + 4 * rows.len() + 16;
    for _ in 0..max_steps {
        let faces = active_faces(rows, &y);
        let normals: Vec<Vector> = faces.iter().map(|fc| &rows[fc.row] * fc.sign).collect();
        let tangent = null_space(&normals, n).ok()?;
        let dir = if !tangent.is_empty() {
            // Ascend |y| inside the current face.
            let proj = tangent.iter().fold(Vector::zeros(n), |acc, t| acc + t * t.dot(&y));
            if proj.norm() > 1e-12 * y.norm() {
                proj
            } else {
                tangent[0].clone()
            }
        } else {
            match improving_edge(&normals, &y) {
                Some(d) => d,
                None => break,
            }
        };
        let t = ray_limit(rows, &y, &dir, scale)?;
        if t <= 1e-15 * y.norm() / dir.norm() {
            // Degenerate vertex; accept the current point.
            break;
        }
        y += dir * t;
    }
    let norm = y.norm();
    (norm.is_finite() && norm > 0.0).then(|| y / norm)
}

/// At a vertex, an edge direction along which `|y|` grows, if any.
fn improving_edge(normals: &[Vector], y: &Vector) -> Option<Vector> {
    let n = y.len();
    // Pick n linearly independent active normals.
    let mut basis: Vec<Vector> = Vec::with_capacity(n);
    for a in normals {
        let mut trial = basis.clone();
        trial.push(a.clone());
        if crate::geom::rank(&trial) == trial.len() {
            basis = trial;
            if basis.len() == n {
                break;
            }
        }
    }
    if basis.len() < n {
        return None;
    }
    let a = Matrix::from_fn(n, n, |i, j| basis[i][j]);
    let inv = a.try_inverse()?;
    let mut best: Option<(f64, Vector)> = None;
    for j in 0..n {
        // Relax constraint j, keep the others tight: A d = −e_j.
        let d = -inv.column(j).into_owned();
        let gain = y.dot(&d) / d.norm();
        if gain > 1e-12 * y.norm() && best.as_ref().is_none_or(|(g, _)| gain > *g) {
            best = Some((gain, d));
        }
    }
    best.map(|(_, d)| d)
}
