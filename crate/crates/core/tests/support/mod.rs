//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use iap_core::geom::{random_orthogonal, random_unit, Matrix, Vector};
use iap_core::CorrespondenceSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn v(c: &[f64]) -> Vector {
    Vector::from_column_slice(c)
}

/// `max_i |u_i · e|`.
pub fn max_abs_dot(dirs: &[Vector], e: &Vector) -> f64 {
    dirs.iter().map(|u| u.dot(e).abs()).fold(0.0, f64::max)
}

/// `k` points on the unit sphere of `R³` by the golden-angle spiral.
pub fn fibonacci_sphere(k: usize) -> impl Iterator<Item = [f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..k).map(move |i| {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
        let rho = (1.0 - z * z).sqrt();
        let a = golden * i as f64;
        [rho * a.cos(), rho * a.sin(), z]
    })
}

/// Orthonormal pair spanning the tangent plane at `e`.
fn tangent_frame(e: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = a[0] * e[0] + a[1] * e[1] + a[2] * e[2];
    let mut t1 = [a[0] - d * e[0], a[1] - d * e[1], a[2] - d * e[2]];
    let n1 = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1 = [t1[0] / n1, t1[1] / n1, t1[2] / n1];
    let t2 = [
        e[1] * t1[2] - e[2] * t1[1],
        e[2] * t1[0] - e[0] * t1[2],
        e[0] * t1[1] - e[1] * t1[0],
    ];
    (t1, t2)
}

fn eval3(dirs: &[[f64; 3]], e: &[f64; 3]) -> f64 {
    let n = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
    dirs.iter()
        .map(|u| ((u[0] * e[0] + u[1] * e[1] + u[2] * e[2]) / n).abs())
        .fold(0.0, f64::max)
}

/// `min_{|e| = 1} max_i |u_i · e|` for unit vectors in `R²` or `R³`: a grid
/// of at least `nodes` points, then repeated 21×21 (or 21-point) patches
/// shrinking around the best few grid nodes.
pub fn grid_min_max_abs(dirs: &[Vector], nodes: usize) -> f64 {
    assert!(!dirs.is_empty());
    let n = dirs[0].len();
    const KEEP: usize = 8;
    const ROUNDS: usize = 14;
    match n {
        1 => 1.0,
        2 => {
            let d: Vec<[f64; 2]> = dirs.iter().map(|u| [u[0], u[1]]).collect();
            let f = |a: f64| d.iter().map(|u| (u[0] * a.cos() + u[1] * a.sin()).abs()).fold(0.0, f64::max);
            let step = std::f64::consts::PI / nodes as f64;
            let mut scored: Vec<(f64, f64)> = (0..nodes).map(|k| (f(k as f64 * step), k as f64 * step)).collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut best = scored[0].0;
            for &(_, a0) in scored.iter().take(KEEP) {
                let (mut centre, mut h) = (a0, step);
                for _ in 0..ROUNDS {
                    let (val, a) = (-10..=10)
                        .map(|j| {
                            let a = centre + h * j as f64 / 10.0;
                            (f(a), a)
                        })
                        .fold((f64::INFINITY, centre), |m, c| if c.0 < m.0 { c } else { m });
                    best = best.min(val);
                    centre = a;
                    h *= 0.2;
                }
            }
            best
        }
        3 => {
            let d: Vec<[f64; 3]> = dirs.iter().map(|u| [u[0], u[1], u[2]]).collect();
            let spacing = (4.0 * std::f64::consts::PI / nodes as f64).sqrt();
            let mut top: Vec<(f64, [f64; 3])> = Vec::with_capacity(KEEP + 1);
            for e in fibonacci_sphere(nodes) {
                let val = eval3(&d, &e);
                if top.len() < KEEP || val < top[top.len() - 1].0 {
                    top.push((val, e));
                    top.sort_by(|a, b| a.0.total_cmp(&b.0));
                    top.truncate(KEEP);
                }
            }
            let mut best = top[0].0;
            for &(_, e0) in &top {
                let (mut centre, mut h) = (e0, 2.0 * spacing);
                for _ in 0..ROUNDS {
                    let (t1, t2) = tangent_frame(&centre);
                    let mut local = (f64::INFINITY, centre);
                    for i in -10..=10 {
                        for j in -10..=10 {
                            let (a, b) = (h * i as f64 / 10.0, h * j as f64 / 10.0);
                            let mut e = [
                                centre[0] + a * t1[0] + b * t2[0],
                                centre[1] + a * t1[1] + b * t2[1],
                                centre[2] + a * t1[2] + b * t2[2],
                            ];
                            let norm = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
                            e = [e[0] / norm, e[1] / norm, e[2] / norm];
                            let val = eval3(&d, &e);
                            if val < local.0 {
                                local = (val, e);
                            }
                        }
                    }
                    best = best.min(local.0);
                    centre = local.1;
                    h *= 0.2;
                }
            }
            best
        }
        _ => panic!("grid oracle covers dimensions 1 to 3"),
    }
}

/// Vertices of a regular simplex with unit edges in `Rⁿ`: `n + 1` points.
pub fn regular_simplex(n: usize) -> Vec<Vector> {
    // Standard basis of R^{n+1} projected onto the sum-zero hyperplane,
    // then expressed in an orthonormal basis of that hyperplane.
    let m = n + 1;
    let centroid = Vector::from_element(m, 1.0 / m as f64);
    let lifted: Vec<Vector> = (0..m)
        .map(|i| {
            let mut e = Vector::zeros(m);
            e[i] = 1.0;
            (e - &centroid) / 2f64.sqrt()
        })
        .collect();
    let basis = Matrix::from_columns(&lifted[..n]).qr().q();
    lifted.iter().map(|p| basis.transpose() * p).collect()
}

/// Points of the half-space `x₁ ≥ 0` with log-uniform radii, plus the origin.
pub fn half_space(n: usize, count: usize, rmax: f64, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    let mut pts = vec![Vector::zeros(n)];
    while pts.len() < count {
        let mut x = random_unit(n, rng) * (rng.random_range(0.0..1.0f64) * (rmax / 0.5f64).ln()).exp() * 0.5;
        x[0] = x[0].abs();
        pts.push(x);
    }
    pts
}

/// `(x, Qx + w + η)` with random orthogonal `Q` and `|η| ≤ delta` uniform in the ball.
pub fn noisy_isometry(points: &[Vector], delta: f64, rng: &mut ChaCha8Rng) -> CorrespondenceSample {
    let n = points[0].len();
    let q = random_orthogonal(n, rng);
    let w = random_unit(n, rng) * rng.random_range(0.0..10.0);
    let pairs = points
        .iter()
        .map(|x| {
            let r = delta * rng.random::<f64>().powf(1.0 / n as f64);
            (x.clone(), &q * x + &w + random_unit(n, rng) * r)
        })
        .collect();
    CorrespondenceSample::new(pairs).unwrap()
}

/// Smallest `max_z |T z − f z|` over isometries `T z = R_θ z + w` (both
/// handednesses) with `θ` on a grid in `[−angle, angle]` and `w` on a
/// `(2k+1)²` grid over `centre ± half_width`. Planar samples only.
pub fn brute_force_isometry_residual(
    sample: &CorrespondenceSample,
    angle: f64,
    angles: usize,
    centre: [f64; 2],
    half_width: f64,
    k: i32,
) -> f64 {
    assert_eq!(sample.n_src(), 2);
    let pairs: Vec<([f64; 2], [f64; 2])> = sample.pairs().iter().map(|(x, y)| ([x[0], x[1]], [y[0], y[1]])).collect();
    let mut best = f64::INFINITY;
    for reflect in [false, true] {
        for a in 0..angles {
            let th = -angle + 2.0 * angle * a as f64 / (angles - 1).max(1) as f64;
            let (c, s) = (th.cos(), th.sin());
            let sign = if reflect { -1.0 } else { 1.0 };
            // h = f z − R z; the residual for w is max |h − w|.
            let h: Vec<[f64; 2]> = pairs
                .iter()
                .map(|(x, y)| {
                    let rx = [c * x[0] - s * sign * x[1], s * x[0] + c * sign * x[1]];
                    [y[0] - rx[0], y[1] - rx[1]]
                })
                .collect();
            for i in -k..=k {
                for j in -k..=k {
                    let w = [
                        centre[0] + half_width * i as f64 / k as f64,
                        centre[1] + half_width * j as f64 / k as f64,
                    ];
                    let mut worst2 = 0.0_f64;
                    for p in &h {
                        let d2 = (p[0] - w[0]).powi(2) + (p[1] - w[1]).powi(2);
                        if d2 > worst2 {
                            worst2 = d2;
                            if worst2 >= best * best {
                                break;
                            }
                        }
                    }
                    best = best.min(worst2.sqrt());
                }
            }
        }
    }
    best
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
