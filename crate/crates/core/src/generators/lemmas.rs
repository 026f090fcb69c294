//! Randomized verifiers for the inequalities satisfied by `g`, `f` and by
//! general near-isometries. Each draws hypothesis-satisfying inputs, with a
//! share of boundary extremes, and reports every violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aux_map_g, bad_map_f, in_ar, AuxMapParams};
use crate::error::{Error, Result};
use crate::geom::{orthogonal_projection, random_orthogonal, random_unit, Vector};
use crate::nearmetric::{
    check_inner_product_bound, check_projection_bound, epsilon_of, CorrespondenceSample, InequalityReport,
    CHECK_TOL,
};

/// Absolute slack on every verified bound.
const SLACK: f64 = 1e-9;
/// Violations kept verbatim in a report; the rest are only counted.
const KEPT_VIOLATIONS: usize = 16;
const CHUNKS: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub trial: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// Coordinates of the inputs that produced the violation.
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeStats {
    pub name: String,
    pub checked: u64,
    pub max_lhs: f64,
    /// Largest `lhs − rhs`; negative when the bound holds with room.
    pub max_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub checked: u64,
    /// Draws that fell outside the hypotheses (rounding at the boundary); not judged.
    pub out_of_hypothesis: u64,
    pub violation_count: u64,
    pub violations: Vec<LemmaViolation>,
    pub max_slack: f64,
    pub regimes: Vec<RegimeStats>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Running tally for one regime.
#[derive(Debug, Clone)]
struct Tally {
    checked: u64,
    skipped: u64,
    max_lhs: f64,
    max_slack: f64,
    violation_count: u64,
    violations: Vec<LemmaViolation>,
}

impl Tally {
    fn new() -> Self {
        Self {
            checked: 0,
            skipped: 0,
            max_lhs: 0.0,
            max_slack: f64::NEG_INFINITY,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, trial: u64, lhs: f64, rhs: f64, points: &[&Vector]) {
        self.record_with_slack(trial, lhs, rhs, SLACK, points);
    }

    fn record_with_slack(&mut self, trial: u64, lhs: f64, rhs: f64, slack: f64, points: &[&Vector]) {
        self.checked += 1;
        self.max_lhs = self.max_lhs.max(lhs);
        self.max_slack = self.max_slack.max(lhs - rhs);
        if lhs.partial_cmp(&(rhs + slack)).is_none_or(|o| o.is_gt()) {
            self.violation_count += 1;
            if self.violations.len() < KEPT_VIOLATIONS {
                self.violations.push(LemmaViolation {
                    trial,
                    lhs,
                    rhs,
                    points: points.iter().map(|p| p.iter().copied().collect()).collect(),
                });
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.max_lhs = self.max_lhs.max(other.max_lhs);
        self.max_slack = self.max_slack.max(other.max_slack);
        self.violation_count += other.violation_count;
        self.violations.extend(other.violations);
        self.violations.truncate(KEPT_VIOLATIONS);
        self
    }
}

/// Runs `trials` draws of `body` split into seeded chunks, one tally per regime.
fn run_chunks<F>(regimes: &[&str], trials: u64, seed: u64, body: F) -> Vec<Tally>
where
    F: Fn(&mut ChaCha8Rng, u64, &mut [Tally]) + Sync,
{
    let per_chunk = trials.div_ceil(CHUNKS);
    (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut tallies = vec![Tally::new(); regimes.len()];
            let start = c * per_chunk;
            for trial in start..(start + per_chunk).min(trials) {
                body(&mut rng, trial, &mut tallies);
            }
            tallies
        })
        .reduce(
            || vec![Tally::new(); regimes.len()],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
        )
}

fn into_report(lemma: &str, regimes: &[&str], tallies: Vec<Tally>) -> LemmaReport {
    let mut report = LemmaReport {
        lemma: lemma.to_string(),
        checked: 0,
        out_of_hypothesis: 0,
        violation_count: 0,
        violations: Vec::new(),
        max_slack: f64::NEG_INFINITY,
        regimes: Vec::new(),
    };
    for (name, t) in regimes.iter().zip(tallies) {
        report.checked += t.checked;
        report.out_of_hypothesis += t.skipped;
        report.violation_count += t.violation_count;
        report.max_slack = report.max_slack.max(t.max_slack);
        report.violations.extend(t.violations);
        report.regimes.push(RegimeStats {
            name: name.to_string(),
            checked: t.checked,
            max_lhs: t.max_lhs,
            max_slack: t.max_slack,
        });
    }
    report.violations.truncate(KEPT_VIOLATIONS);
    report
}

/// `(x, t) ↦ z`.
fn join(x: &Vector, t: f64) -> Vector {
    let n = x.len() + 1;
    let mut z = Vector::zeros(n);
    z.rows_mut(0, n - 1).copy_from(x);
    z[n - 1] = t;
    z
}

fn x_norm(z: &Vector) -> f64 {
    z.rows(0, z.len() - 1).norm()
}

/// Value in `[lo, hi]`: uniform, log-uniform, or one of the endpoints.
fn spread(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    match rng.random_range(0..10) {
        0 => lo,
        1 => hi,
        2..=5 if lo > 0.0 => rng.random_range(lo.ln()..=hi.ln()).exp(),
        2..=5 => rng.random_range((hi * 1e-6).ln()..=hi.ln()).exp(),
        _ => rng.random_range(lo..=hi),
    }
}

/// Multiplier in `[−1, 1]` with extra weight on `±1` and `0`.
fn unit_factor(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..8) {
        0 => 1.0,
        1 => -1.0,
        2 => 0.0,
        _ => rng.random_range(-1.0..=1.0),
    }
}

/// Direction of `x′` relative to a given direction: random, equal or opposite.
fn related_direction(rng: &mut ChaCha8Rng, d: usize, base: &Vector) -> Vector {
    match rng.random_range(0..6) {
        0 => base.clone(),
        1 => -base,
        _ => random_unit(d, rng),
    }
}

/// `|D − d|` with `d = |z′ − z|` and `D = |gz′ − gz|`.
fn g_defect(params: &AuxMapParams, z: &Vector, zp: &Vector) -> Result<f64> {
    let d = (zp - z).norm();
    let big_d = (aux_map_g(params, zp)? - aux_map_g(params, z)?).norm();
    Ok((big_d - d).abs())
}

/// Whether `(z, z′)` satisfies `|x| ≤ |x′| ≤ M`, `|t| ≤ r|x′|`, `|t′| ≤ 3r|x′|`,
/// and the resulting `|D − d|`.
pub fn lemma_3_3_case(params: &AuxMapParams, z: &Vector, zp: &Vector) -> Result<(bool, f64)> {
    if z.len() != zp.len() || z.len() < 2 {
        return Err(Error::InvalidParameter("points must share a dimension ≥ 2".into()));
    }
    let n = z.len();
    let (x, xp) = (x_norm(z), x_norm(zp));
    let (t, tp) = (z[n - 1], zp[n - 1]);
    // Boundary draws are common, so the hypothesis allows rounding.
    let up = 1.0 + 1e-12;
    let within = x <= xp * up && xp <= params.m * up && t.abs() <= params.r * xp * up && tp.abs() <= 3.0 * params.r * xp * up;
    Ok((within, g_defect(params, z, zp)?))
}

/// `|D − d| ≤ 1` for pairs with `|x| ≤ |x′| ≤ M`, `|t| ≤ r|x′|`, `|t′| ≤ 3r|x′|`.
pub fn verify_lemma_3_3(params: &AuxMapParams, n: usize, trials: u64, seed: u64) -> Result<LemmaReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("dimension ≥ 2 required".into()));
    }
    let regimes = ["generic", "coincident"];
    let p = *params;
    let tallies = run_chunks(&regimes, trials, seed, |rng, trial, tallies| {
        let xpn = spread(rng, 0.0, p.m);
        let dp = random_unit(n - 1, rng);
        let xp = &dp * xpn;
        let x = related_direction(rng, n - 1, &dp) * (xpn * spread(rng, 0.0, 1.0));
        let z = join(&x, p.r * xpn * unit_factor(rng));
        let coincident = rng.random_range(0..50) == 0;
        let zp = if coincident {
            z.clone()
        } else {
            join(&xp, 3.0 * p.r * xpn * unit_factor(rng))
        };
        let tally = &mut tallies[coincident as usize];
        let (x, xp) = if x_norm(&z) <= x_norm(&zp) { (z, zp) } else { (zp, z) };
        match lemma_3_3_case(&p, &x, &xp) {
            Ok((true, defect)) => tally.record(trial, defect, 1.0, &[&x, &xp]),
            _ => tally.skipped += 1,
        }
    });
    Ok(into_report("3.3", &regimes, tallies))
}

/// First point `x + s(x′ − x)`, `s ∈ [0, 1]`, on the sphere `|·| = M`.
pub fn segment_sphere_crossing(x: &Vector, xp: &Vector, m: f64) -> Option<Vector> {
    let dir = xp - x;
    let a = dir.norm_squared();
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * x.dot(&dir);
    let c = x.norm_squared() - m * m;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Both roots without cancellation.
    let (r1, r2) = if b >= 0.0 {
        let k = -(b + sq) / 2.0;
        (k / a, if k != 0.0 { c / k } else { 0.0 })
    } else {
        let k = (-b + sq) / 2.0;
        (c / k, k / a)
    };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let s = [lo, hi].into_iter().find(|s| (0.0..=1.0).contains(s))?;
    Some(x + dir * s)
}

/// `|x′||x − x″| ≤ 2M|x − x′|` for `|x| < M < |x′|`.
pub fn verify_lemma_3_4_1(m: f64, dim: usize, trials: u64, seed: u64) -> Result<LemmaReport> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("M > 0 required, got {m}")));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension ≥ 1 required".into()));
    }
    let regimes = ["generic", "near_sphere"];
    let tallies = run_chunks(&regimes, trials, seed, |rng, trial, tallies| {
        let near = rng.random_range(0..10) == 0;
        let xn = if near {
            m * (1.0 - 1e-9)
        } else {
            m * rng.random_range(0.0..1.0)
        };
        let dx = random_unit(dim, rng);
        let x = &dx * xn;
        let factor = match rng.random_range(0..6) {
            0 => 1.0 + 1e-9,
            1 => 2.0,
            _ => 1.0 + rng.random_range((1e-6f64).ln()..(1e3f64).ln()).exp(),
        };
        let xp = related_direction(rng, dim, &dx) * (m * factor);
        let tally = &mut tallies[near as usize];
        if !(x.norm() < m && xp.norm() > m) {
            tally.skipped += 1;
            return;
        }
        let Some(xpp) = segment_sphere_crossing(&x, &xp, m) else {
            tally.skipped += 1;
            return;
        };
        let lhs = xp.norm() * (&x - &xpp).norm();
        let rhs = 2.0 * m * (&x - &xp).norm();
        // Both sides scale like M², so the slack is relative.
        tally.record_with_slack(trial, lhs, rhs, SLACK * (1.0 + rhs), &[&x, &xp]);
    });
    Ok(into_report("3.4.1", &regimes, tallies))
}

/// Point of `A_r` with `|x|` drawn by `spread` from `[lo, hi]`.
fn ar_point(rng: &mut ChaCha8Rng, n: usize, r: f64, lo: f64, hi: f64) -> Vector {
    let x = random_unit(n - 1, rng) * spread(rng, lo, hi);
    let t = r * x.norm() * unit_factor(rng);
    join(&x, t)
}

/// Point of `A_r` near `z` with `|x|` kept in `[lo, hi]`, or `None`.
fn ar_neighbour(rng: &mut ChaCha8Rng, z: &Vector, r: f64, lo: f64, hi: f64) -> Option<Vector> {
    let n = z.len();
    let scale = x_norm(z).max(1e-3) * rng.random_range((1e-6f64).ln()..0.0).exp();
    let x = z.rows(0, n - 1) + random_unit(n - 1, rng) * scale;
    let xn = x.norm();
    (lo <= xn && xn <= hi).then(|| join(&x, r * xn * unit_factor(rng)))
}

/// `g` restricted to `A_r` is a 1-near-isometry. `trials` pairs are drawn in
/// each regime: both `|x| ≤ M`, both `|x| ≥ M`, and mixed.
pub fn verify_lemma_3_5(params: &AuxMapParams, n: usize, trials: u64, seed: u64) -> Result<LemmaReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("dimension ≥ 2 required".into()));
    }
    let regimes = ["inner", "outer", "mixed"];
    let p = *params;
    let far = 100.0 * p.m;
    let tallies = run_chunks(&regimes, 3 * trials, seed, |rng, trial, tallies| {
        let regime = (trial % 3) as usize;
        let (a, b) = match regime {
            0 => ((0.0, p.m), (0.0, p.m)),
            1 => ((p.m, far), (p.m, far)),
            _ => ((0.0, p.m), (p.m, far)),
        };
        let z = ar_point(rng, n, p.r, a.0, a.1);
        let zp = if rng.random_range(0..4) == 0 {
            ar_neighbour(rng, &z, p.r, b.0, b.1)
        } else {
            None
        }
        .unwrap_or_else(|| ar_point(rng, n, p.r, b.0, b.1));
        let tally = &mut tallies[regime];
        if !(in_ar(&z, p.r, 0.0).unwrap_or(false) && in_ar(&zp, p.r, 0.0).unwrap_or(false)) {
            tally.skipped += 1;
            return;
        }
        match g_defect(&p, &z, &zp) {
            Ok(defect) => tally.record(trial, defect, 1.0, &[&z, &zp]),
            Err(_) => tally.skipped += 1,
        }
    });
    Ok(into_report("3.5", &regimes, tallies))
}

/// Point of `B̄(λ) \ A_r`; a share lands just outside the wedge or on the sphere.
fn ball_point(rng: &mut ChaCha8Rng, n: usize, p: &AuxMapParams) -> Option<Vector> {
    for _ in 0..1000 {
        let z = match rng.random_range(0..6) {
            0 => {
                // Just above the wedge boundary.
                let x = random_unit(n - 1, rng) * rng.random_range(0.0..p.lambda * 0.9);
                let t = (p.r * x.norm()) * (1.0 + 1e-9) + 1e-12;
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                join(&x, sign * t)
            }
            1 => random_unit(n, rng) * p.lambda,
            _ => random_unit(n, rng) * (p.lambda * rng.random::<f64>().powf(1.0 / n as f64)),
        };
        if z.norm() <= p.lambda && !in_ar(&z, p.r, 0.0).ok()? {
            return Some(z);
        }
    }
    None
}

/// The map equal to `g` on `A_r` and to 0 on `B̄(λ) \ A_r` is a
/// `(1 + λ)`-near-isometry. Regimes follow the three case splits.
pub fn verify_lemma_3_7(params: &AuxMapParams, n: usize, trials: u64, seed: u64) -> Result<LemmaReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("dimension ≥ 2 required".into()));
    }
    let regimes = ["both_wedge", "both_ball", "mixed"];
    let p = *params;
    let bound = 1.0 + p.lambda;
    let tallies = run_chunks(&regimes, trials, seed, |rng, trial, tallies| {
        let regime = (trial % 3) as usize;
        let wedge = |rng: &mut ChaCha8Rng| {
            if rng.random::<bool>() {
                ar_point(rng, n, p.r, 0.0, 2.0 * p.lambda)
            } else {
                ar_point(rng, n, p.r, 0.0, 100.0 * p.m)
            }
        };
        let pair = match regime {
            0 => Some((wedge(rng), wedge(rng))),
            1 => ball_point(rng, n, &p).zip(ball_point(rng, n, &p)),
            _ => ball_point(rng, n, &p).map(|b| (b, wedge(rng))),
        };
        let tally = &mut tallies[regime];
        let Some((z, zp)) = pair else {
            tally.skipped += 1;
            return;
        };
        match (bad_map_f(&p, &z), bad_map_f(&p, &zp)) {
            (Ok(fz), Ok(fzp)) => {
                let defect = ((fzp - fz).norm() - (&zp - &z).norm()).abs();
                tally.record(trial, defect, bound, &[&z, &zp]);
            }
            _ => tally.skipped += 1,
        }
    });
    Ok(into_report("3.7", &regimes, tallies))
}

/// Bounded smooth perturbation `η` with `|η| ≤ δ` and `η(0) = 0`.
fn smooth_noise(n: usize, delta: f64, rng: &mut ChaCha8Rng) -> impl Fn(&Vector) -> Vector {
    let freqs: Vec<Vector> = (0..n).map(|_| random_unit(n, rng) * rng.random_range(0.05..2.0)).collect();
    let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let amp = delta / (2.0 * (n as f64).sqrt());
    move |x: &Vector| {
        Vector::from_fn(n, |i, _| {
            amp * ((freqs[i].dot(x) + phases[i]).sin() - phases[i].sin())
        })
    }
}

/// Random near-isometry sample with base pair `(0, 0)`: a noisy rotation,
/// `g` on `A_r`, or the map `f` on `A_r ∪ B̄(λ)`.
/// The samplers favour endpoints, so in low dimension repeats are common.
fn push_distinct(points: &mut Vec<Vector>, z: Vector) {
    if points.iter().all(|p| (p - &z).amax() > 1e-9) {
        points.push(z);
    }
}

fn random_near_isometry_sample(n: usize, size: usize, family: u64, rng: &mut ChaCha8Rng) -> Result<CorrespondenceSample> {
    let mut points = vec![Vector::zeros(n)];
    match family % 3 {
        0 => {
            let q = random_orthogonal(n, rng);
            let eta = smooth_noise(n, rng.random_range(0.001..1.0), rng);
            while points.len() < size {
                let x = random_unit(n, rng) * spread(rng, 0.01, 1e3);
                push_distinct(&mut points, x);
            }
            CorrespondenceSample::from_map(&points, |x| Ok(&q * x + eta(x)))
        }
        1 => {
            let p = AuxMapParams::new(rng.random_range(1.0..100.0), 1.0)?;
            while points.len() < size {
                let z = ar_point(rng, n, p.r, 0.01, 20.0 * p.m);
                push_distinct(&mut points, z);
            }
            CorrespondenceSample::from_map(&points, |z| aux_map_g(&p, z))
        }
        _ => {
            let p = AuxMapParams::new(rng.random_range(1.0..100.0), rng.random_range(0.1..=1.0))?;
            while points.len() < size {
                let z = if points.len() % 3 == 0 {
                    ball_point(rng, n, &p)
                } else {
                    None
                }
                .unwrap_or_else(|| ar_point(rng, n, p.r, 0.01, 20.0 * p.m));
                push_distinct(&mut points, z);
            }
            CorrespondenceSample::from_map(&points, |z| bad_map_f(&p, z))
        }
    }
}

fn verify_sample_inequality<F>(lemma: &str, n: usize, trials: u64, seed: u64, check: F) -> Result<LemmaReport>
where
    F: Fn(&CorrespondenceSample, f64) -> Result<InequalityReport>,
{
    if n < 2 {
        return Err(Error::InvalidParameter("dimension ≥ 2 required".into()));
    }
    let regimes = ["noisy_rotation", "shear_on_wedge", "shear_with_ball"];
    let mut tallies = vec![Tally::new(); 3];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 120usize;
    let mut family = 0u64;
    while tallies.iter().map(|t| t.checked).sum::<u64>() < trials {
        let sample = random_near_isometry_sample(n, size, family, &mut rng)?;
        let eps = epsilon_of(&sample)?;
        let report = check(&sample, eps)?;
        let tally = &mut tallies[(family % 3) as usize];
        tally.checked += report.checked;
        tally.violation_count += report.violations.len() as u64;
        for v in report.violations.iter().take(KEPT_VIOLATIONS) {
            tally.max_slack = tally.max_slack.max(v.slack);
            if tally.violations.len() < KEPT_VIOLATIONS {
                let pairs = sample.pairs();
                tally.violations.push(LemmaViolation {
                    trial: family,
                    lhs: v.lhs,
                    rhs: v.rhs,
                    points: [&pairs[v.i].0, &pairs[v.i].1, &pairs[v.j].0, &pairs[v.j].1]
                        .iter()
                        .map(|p| p.iter().copied().collect())
                        .collect(),
                });
            }
        }
        family += 1;
    }
    Ok(into_report(lemma, &regimes, tallies))
}

/// `|fx·fy − x·y| ≤ 2ε(|x| + |y| + ε)` on random near-isometry samples
/// with `f(0) = 0`, `ε` measured on the sample. Runs until `trials` pairs
/// have been checked.
pub fn verify_inner_product_lemma(n: usize, trials: u64, seed: u64) -> Result<LemmaReport> {
    verify_sample_inequality("inner_product", n, trials, seed, |s, eps| {
        check_inner_product_bound(s, eps, CHECK_TOL)
    })
}

/// The bound on `|pfx − pfy|²` for `|x|, |y| ≥ 2ε` on the same samples.
pub fn verify_projection_lemma(n: usize, trials: u64, seed: u64) -> Result<LemmaReport> {
    verify_sample_inequality("projection", n, trials, seed, |s, eps| {
        check_projection_bound(s, eps, CHECK_TOL)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub checked: u64,
    /// Points with `|P′x| ≥ q|x|`.
    pub subset_count: u64,
    pub subset_max_norm: f64,
    pub sample_max_norm: f64,
    /// `subset_max_norm ≤ cutoff · sample_max_norm`.
    pub bounded: bool,
    /// Points where `|P′x| ≥ q|x|` and `|P′x| ≥ r|Px|` disagree away from the boundary.
    pub mismatches: u64,
    /// Points within rounding of the boundary, where the two tests may differ.
    pub boundary_cases: u64,
}

impl SubspaceReport {
    pub fn passed(&self) -> bool {
        self.bounded && self.mismatches == 0
    }
}

/// With `P` the projection onto `span(basis)` and `P′ = I − P`: collects
/// the sample points with `|P′x| ≥ q|x|`, checks that they stay within
/// `cutoff · max|x|`, and that `|P′x| ≥ r|Px|`, `r = q/√(1 − q²)`,
/// selects the same points.
pub fn verify_lemma_3_1(basis: &[Vector], q: f64, sample: &[Vector], cutoff: f64) -> Result<SubspaceReport> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 1], got {q}")));
    }
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return Err(Error::InvalidParameter(format!("cutoff must lie in (0, 1], got {cutoff}")));
    }
    let r = if q < 1.0 { q / (1.0 - q * q).sqrt() } else { f64::INFINITY };
    let mut report = SubspaceReport {
        checked: 0,
        subset_count: 0,
        subset_max_norm: 0.0,
        sample_max_norm: 0.0,
        bounded: true,
        mismatches: 0,
        boundary_cases: 0,
    };
    for x in sample {
        let px = orthogonal_projection(basis, x)?;
        let perp = (x - &px).norm();
        let norm = x.norm();
        report.checked += 1;
        report.sample_max_norm = report.sample_max_norm.max(norm);
        let first = perp >= q * norm;
        let second = if r.is_finite() { perp >= r * px.norm() } else { px.norm() == 0.0 };
        if first {
            report.subset_count += 1;
            report.subset_max_norm = report.subset_max_norm.max(norm);
        }
        if first != second {
            if (perp - q * norm).abs() <= 1e-12 * norm.max(1.0) {
                report.boundary_cases += 1;
            } else {
                report.mismatches += 1;
            }
        }
    }
    report.bounded = report.subset_max_norm <= cutoff * report.sample_max_norm;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_cone, ConeSpec};
    use crate::geom::basis_vector;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    #[test]
    fn lemma_3_3_runs_clean() {
        for m in [1.0, 4.0, 100.0] {
            let p = AuxMapParams::new(m, 1.0).unwrap();
            for n in [2, 3, 5] {
                let r = verify_lemma_3_3(&p, n, 20_000, 1).unwrap();
                assert!(r.passed(), "{r:?}");
                assert_eq!(r.checked + r.out_of_hypothesis, 20_000);
            }
        }
    }

    #[test]
    fn lemma_3_3_examples() {
        let p = AuxMapParams::new(100.0, 1.0).unwrap();
        let z = v(&[3.0, 0.03]);
        assert_eq!(lemma_3_3_case(&p, &z, &z).unwrap(), (true, 0.0));
        // |t| = 10·r|x′| breaks the hypothesis; the value is reported, not judged.
        let z = v(&[0.0, 10.0 * p.r * 100.0]);
        let zp = v(&[100.0, 0.0]);
        let (within, _) = lemma_3_3_case(&p, &z, &zp).unwrap();
        assert!(!within);
    }

    #[test]
    fn segment_crossing_examples() {
        let m = 3.0;
        let x = v(&[0.0, 0.0]);
        let xp = v(&[2.0 * m, 0.0]);
        let xpp = segment_sphere_crossing(&x, &xp, m).unwrap();
        assert!((xpp - v(&[m, 0.0])).norm() < 1e-12);
        let lhs = xp.norm() * m;
        let rhs = 2.0 * m * xp.norm();
        assert_eq!(rhs / lhs, 2.0);

        // Just inside the sphere: the crossing is next to x.
        let x = v(&[m - 1e-9, 0.0]);
        let xp = v(&[2.0 * m, 5.0]);
        let xpp = segment_sphere_crossing(&x, &xp, m).unwrap();
        assert!((&xpp - &x).norm() < 1e-6);
    }

    #[test]
    fn lemma_3_4_1_runs_clean() {
        for m in [0.5, 1.0, 100.0] {
            for dim in [1, 2, 4] {
                let r = verify_lemma_3_4_1(m, dim, 20_000, 2).unwrap();
                assert!(r.passed(), "{r:?}");
            }
        }
        assert!(verify_lemma_3_4_1(0.0, 2, 10, 0).is_err());
    }

    #[test]
    fn lemma_3_5_regimes() {
        for m in [1.0, 4.0, 25.0, 100.0] {
            let p = AuxMapParams::new(m, 1.0).unwrap();
            let r = verify_lemma_3_5(&p, 3, 5000, 3).unwrap();
            assert!(r.passed(), "{r:?}");
            assert_eq!(r.regimes.len(), 3);
            let outer = &r.regimes[1];
            assert!(outer.max_lhs < 1e-9 * 100.0 * m, "{outer:?}");
            // The mixed and inner regimes do shear distances.
            assert!(r.regimes[0].max_lhs > 0.1);
        }
    }

    #[test]
    fn g_on_identical_points_has_zero_defect() {
        let p = AuxMapParams::new(4.0, 1.0).unwrap();
        let z = v(&[2.0, 0.05]);
        assert_eq!(g_defect(&p, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn lemma_3_7_runs_clean() {
        for lambda in [0.1, 0.5, 1.0] {
            let p = AuxMapParams::new(25.0, lambda).unwrap();
            let r = verify_lemma_3_7(&p, 3, 15_000, 4).unwrap();
            assert!(r.passed(), "{r:?}");
            // Two ball points map to 0, so the defect is their distance.
            assert!(r.regimes[1].max_lhs <= 2.0 * lambda + 1e-12);
        }
    }

    #[test]
    fn sample_inequalities_run_clean() {
        for n in [2, 3, 4] {
            let r = verify_inner_product_lemma(n, 30_000, 5).unwrap();
            assert!(r.passed(), "{r:?}");
            let r = verify_projection_lemma(n, 30_000, 6).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn lemma_3_1_cone_around_subspace() {
        let q: f64 = 0.5;
        let axis = basis_vector(3, 0);
        let alpha = 0.8 * q.asin();
        let mut pts = gen_cone(&ConeSpec::new(axis.clone(), alpha, false).unwrap(), 5000, (1.0, 1000.0), 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        pts.extend((0..500).map(|_| random_unit(3, &mut rng) * rng.random_range(0.0..5.0)));
        let r = verify_lemma_3_1(std::slice::from_ref(&axis), q, &pts, 0.1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.subset_max_norm <= 5.0);

        // q = 1 selects exactly the points of L⊥.
        let plane = [v(&[0.0, 2.0, 1.0]), v(&[0.0, -1.0, 0.0]), v(&[1.0, 1.0, 0.0])];
        let r = verify_lemma_3_1(std::slice::from_ref(&axis), 1.0, &plane, 1.0).unwrap();
        assert_eq!(r.subset_count, 2);
        assert_eq!(r.mismatches, 0);

        let random: Vec<Vector> = (0..100_000).map(|_| random_unit(3, &mut rng) * rng.random_range(0.0..10.0)).collect();
        let r = verify_lemma_3_1(&[axis, basis_vector(3, 1)], 0.3, &random, 1.0).unwrap();
        assert_eq!(r.mismatches, 0);
    }
}
