//! Explicit sets and maps: cones, the wedge complement `A_r`, the
//! square-root shear `g` and the near-isometry `f` built from it, plus
//! randomized verifiers for the inequalities they satisfy.

mod failure;
mod lemmas;

pub use failure::{fit_params as failure_fit_params, iap_failure_experiment, FailureExperiment, FailureReport};
pub use lemmas::{
    verify_inner_product_lemma, verify_lemma_3_1, verify_lemma_3_3, verify_lemma_3_4_1,
    verify_lemma_3_5, verify_lemma_3_7, verify_projection_lemma, LemmaReport, LemmaViolation,
    RegimeStats, SubspaceReport,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{random_unit, Vector};

/// Factor in the lower bound `μ(A) ≥ 1/(17c)` for sets with the `c`-IAP.
pub const IAP_MU_FACTOR: f64 = 17.0;

/// `μ` lower bound implied by the `c`-IAP.
pub fn iap_mu_lower_bound(c: f64) -> f64 {
    1.0 / (IAP_MU_FACTOR * c)
}

/// Shear scale `M = 25c²` used against a set with the `c`-IAP.
pub fn obstruction_scale(c: f64) -> f64 {
    25.0 * c * c
}

/// Wedge slope `r = 1/(8√M) = 1/(40c)` at that scale.
pub fn obstruction_slope(c: f64) -> f64 {
    1.0 / (40.0 * c)
}

/// Maximal attempts for any rejection sampler.
pub const REJECTION_CAP: usize = 1_000_000;

/// `C(e, α) = { x : x·e ≥ |x| cos α }`, or the open double cone
/// `D(e, α) = { x : |x·e| > |x| cos α }` when `double` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub axis: Vector,
    pub alpha: f64,
    pub double: bool,
}

impl ConeSpec {
    pub fn new(axis: Vector, alpha: f64, double: bool) -> Result<Self> {
        let norm = axis.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnit(norm));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "cone angle must lie in [0, π/2], got {alpha}"
            )));
        }
        Ok(Self {
            axis,
            alpha,
            double,
        })
    }

    pub fn dim(&self) -> usize {
        self.axis.len()
    }

    /// Membership with an additive slack `tol` (0 for the exact test).
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        let along = x.dot(&self.axis);
        let rim = x.norm() * self.alpha.cos();
        if self.double {
            along.abs() > rim - tol
        } else {
            along >= rim - tol
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo.ln()..hi.ln()).exp()
    }
}

fn check_radius_range((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius range must satisfy 0 < lo ≤ hi, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Unit vector orthogonal to `axis`, uniform on that great sphere.
fn orthogonal_unit(axis: &Vector, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let mut v = random_unit(axis.len(), rng);
        v -= axis * v.dot(axis);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Points of the cone with directions uniform on the cap and log-uniform
/// radii. The polar angle is drawn by rejection against the `sin^{n−2}`
/// density of the sphere.
pub fn gen_cone(spec: &ConeSpec, count: usize, radius_range: (f64, f64), seed: u64) -> Result<Vec<Vector>> {
    check_radius_range(radius_range)?;
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > REJECTION_CAP.max(100 * count) {
            return Err(Error::Degenerate("cone sampler exceeded its attempt cap".into()));
        }
        let dir = if n == 1 || spec.alpha == 0.0 {
            spec.axis.clone()
        } else {
            let theta = rng.random_range(0.0..=spec.alpha);
            let accept = (theta.sin() / spec.alpha.sin()).powi(n as i32 - 2);
            if rng.random::<f64>() > accept {
                continue;
            }
            &spec.axis * theta.cos() + orthogonal_unit(&spec.axis, &mut rng) * theta.sin()
        };
        let sign = if spec.double && rng.random::<bool>() { -1.0 } else { 1.0 };
        let x = dir * (sign * log_uniform(&mut rng, radius_range));
        // The double cone is open; boundary draws are rejected.
        let inside = if spec.double && spec.alpha > 0.0 {
            x.dot(&spec.axis).abs() > x.norm() * spec.alpha.cos()
        } else {
            spec.contains(&x, 1e-12 * x.norm())
        };
        if inside {
            out.push(x);
        }
    }
    Ok(out)
}

/// Shear scale `M ≥ 1`, wedge slope `r` and ball radius `λ ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxMapParams {
    pub m: f64,
    pub r: f64,
    pub lambda: f64,
}

impl AuxMapParams {
    /// `r` is set to `1/(8√M)`.
    pub fn new(m: f64, lambda: f64) -> Result<Self> {
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("M ≥ 1 required, got {m}")));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "λ must lie in (0, 1], got {lambda}"
            )));
        }
        Ok(Self {
            m,
            r: 1.0 / (8.0 * m.sqrt()),
            lambda,
        })
    }

    /// `q = r/√(1 + r²)`, the equivalent bound `|z·eₙ| ≤ q|z|`.
    pub fn q(&self) -> f64 {
        slope_to_q(self.r)
    }
}

pub fn slope_to_q(r: f64) -> f64 {
    r / (1.0 + r * r).sqrt()
}

/// Splits `z = (x, t)` with `t` the last coordinate; returns `(|x|, t)`.
fn split(z: &Vector) -> Result<(f64, f64)> {
    let n = z.len();
    if n < 2 {
        return Err(Error::InvalidParameter("dimension ≥ 2 required".into()));
    }
    Ok((z.rows(0, n - 1).norm(), z[n - 1]))
}

/// `|t| ≤ r|x| + tol`.
pub fn in_ar(z: &Vector, r: f64, tol: f64) -> Result<bool> {
    let (x, t) = split(z)?;
    Ok(t.abs() <= r * x + tol)
}

/// `|z·eₙ| ≤ q|z| + tol`, the angular form of [`in_ar`].
pub fn in_ar_angular(z: &Vector, q: f64, tol: f64) -> Result<bool> {
    let (_, t) = split(z)?;
    Ok(t.abs() <= q * z.norm() + tol)
}

/// Points `(x, t)` of `A_r` with `|x|` log-uniform in the range and `t`
/// uniform in `[−r|x|, r|x|]`; one draw in eight is put on the boundary.
pub fn gen_ar_with_slope(r: f64, n: usize, count: usize, radius_range: (f64, f64), seed: u64) -> Result<Vec<Vector>> {
    if n < 2 {
        return Err(Error::InvalidParameter("dimension ≥ 2 required".into()));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("slope must be ≥ 0, got {r}")));
    }
    check_radius_range(radius_range)?;
    let q = slope_to_q(r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = random_unit(n - 1, &mut rng) * log_uniform(&mut rng, radius_range);
        let xn = x.norm();
        let u: f64 = if rng.random_range(0..8) == 0 {
            if rng.random::<bool>() { 1.0 } else { -1.0 }
        } else {
            rng.random_range(-1.0..=1.0)
        };
        let mut z = Vector::zeros(n);
        z.rows_mut(0, n - 1).copy_from(&x);
        z[n - 1] = r * xn * u;
        let exact = in_ar(&z, r, 0.0)?;
        let angular = in_ar_angular(&z, q, 1e-12 * z.norm())?;
        if !(exact && angular) {
            return Err(Error::Degenerate(format!("generated point outside A_r: {z:?}")));
        }
        out.push(z);
    }
    Ok(out)
}

/// [`gen_ar_with_slope`] with the slope of `params`.
pub fn gen_ar(params: &AuxMapParams, n: usize, count: usize, radius_range: (f64, f64), seed: u64) -> Result<Vec<Vector>> {
    gen_ar_with_slope(params.r, n, count, radius_range, seed)
}

/// `g(x, t) = (x, t + √min(|x|, M))`.
pub fn aux_map_g(params: &AuxMapParams, z: &Vector) -> Result<Vector> {
    let (x, _) = split(z)?;
    let mut out = z.clone();
    let n = z.len();
    out[n - 1] += x.min(params.m).sqrt();
    Ok(out)
}

/// `g` on `A_r`, zero on the rest of the closed `λ`-ball. Points outside
/// `A_r ∪ B̄(λ)` are rejected.
pub fn bad_map_f(params: &AuxMapParams, z: &Vector) -> Result<Vector> {
    if in_ar(z, params.r, 0.0)? {
        aux_map_g(params, z)
    } else if z.norm() <= params.lambda {
        Ok(Vector::zeros(z.len()))
    } else {
        Err(Error::OutsideDomain)
    }
}

/// Points of `B̄(λ) \ A_r`, uniform in the ball by rejection.
pub fn gen_ball_minus_ar(params: &AuxMapParams, n: usize, count: usize, seed: u64) -> Result<Vec<Vector>> {
    if n < 2 {
        return Err(Error::InvalidParameter("dimension ≥ 2 required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > REJECTION_CAP.max(100 * count) {
            return Err(Error::Degenerate("ball sampler exceeded its attempt cap".into()));
        }
        let radius = params.lambda * rng.random::<f64>().powf(1.0 / n as f64);
        let z = random_unit(n, &mut rng) * radius;
        if z.norm() <= params.lambda && !in_ar(&z, params.r, 0.0)? {
            out.push(z);
        }
    }
    Ok(out)
}
