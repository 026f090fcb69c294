//! Approximation of a sampled near-isometry by an isometry, with a
//! certificate comparing the achieved residual to the theoretical bound.
//!
//! Sample mode: move a base pair to `(0, 0)`, estimate the cluster directions
//! of the sources, read off where `f` sends each of them, fit an orthogonal
//! map to those correspondences, then translate by the Chebyshev center of
//! `fx − Qx`. Oracle mode evaluates `f(s·eᵢ)/s` at a large scale instead.

mod checks;
mod oracle;

pub use checks::{check_uniqueness, tau_dichotomy_check, TauDichotomyReport, UniquenessReport, UniquenessStatus};
pub use oracle::{fit_global_oracle, CauchyRow, FnOracle, NearestNeighbourOracle, OracleMap, OracleParams, OracleReport};

use serde::{Deserialize, Serialize};

use crate::directions::{estimate_cluster_directions, mu1, DirectionEstimatorParams, DirectionSet};
use crate::error::{Error, Result};
use crate::geom::{procrustes_fit, rank, smallest_enclosing_ball, IsometryTransform, Matrix, Vector};
use crate::io::nullable;
use crate::nearmetric::{defect_profile, epsilon_estimate, CorrespondenceSample, DefectOptions};

/// Which pair is moved to the origin before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseChoice {
    Index(usize),
    /// The pair whose largest distortion against the others is smallest.
    BestDefect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationMode {
    /// Center of the smallest ball containing `fx − Qx`; bound `√2·c′·ε`.
    SebCenter,
    /// Mean of `fx − Qx`; bound `2·c′·ε`.
    Mean,
}

/// Where the `μ` entering `c′ = 1/μ` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuSource {
    Estimated,
    Known,
    /// The caller fixed `c′` directly.
    CPrime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub base: BaseChoice,
    pub estimator: DirectionEstimatorParams,
    /// Largest-norm points averaged per direction image.
    pub k: usize,
    pub known_mu: Option<f64>,
    pub c_prime: Option<f64>,
    /// Declared defect; measured from the sample when absent.
    pub eps: Option<f64>,
    pub translation: TranslationMode,
    /// Relative slack on the bound.
    pub certificate_tol: f64,
    /// Absolute slack on the bound, absorbing rounding for exact data.
    pub certificate_abs_tol: f64,
    /// Fit rank-deficient samples in their span instead of refusing.
    pub allow_partial_rank: bool,
    pub defect: DefectOptions,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            base: BaseChoice::Index(0),
            estimator: DirectionEstimatorParams::default(),
            k: 10,
            known_mu: None,
            c_prime: None,
            eps: None,
            translation: TranslationMode::SebCenter,
            certificate_tol: 0.05,
            certificate_abs_tol: 1e-9,
            allow_partial_rank: false,
            defect: DefectOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCertificate {
    pub eps: f64,
    /// `eps` came from random pairs only and may underestimate the defect.
    pub eps_subsampled: bool,
    pub mu_est: f64,
    /// `μ` used for `c′`; equals `mu_est` unless supplied.
    #[serde(with = "nullable")]
    pub mu: f64,
    pub mu_source: MuSource,
    #[serde(with = "nullable")]
    pub c_prime: f64,
    #[serde(with = "nullable")]
    pub bound: f64,
    pub residual: f64,
    pub passed: bool,
    pub translation: TranslationMode,
    pub certificate_tol: f64,
    pub certificate_abs_tol: f64,
    pub dim: usize,
    /// Rank of the span of the cluster directions.
    pub rank: usize,
    pub partial_rank: bool,
    pub base_index: usize,
    pub directions: usize,
}

impl FitCertificate {
    /// Recomputes `passed` from the stored numbers.
    pub fn consistent(&self) -> bool {
        self.passed == certify(self.residual, self.bound, self.certificate_tol, self.certificate_abs_tol)
            && self.bound >= 0.0
    }
}

fn certify(residual: f64, bound: f64, rel: f64, abs: f64) -> bool {
    bound.is_finite() && residual <= bound * (1.0 + rel) + abs
}

/// Pairs `(x − a, fx − fa)` for the pair `(a, fa)` at `index`.
pub fn normalize_basepoint(sample: &CorrespondenceSample, index: usize) -> Result<CorrespondenceSample> {
    let pairs = sample.pairs();
    let (a, fa) = pairs.get(index).ok_or(Error::InvalidIndex {
        index,
        len: pairs.len(),
    })?;
    CorrespondenceSample::new(pairs.iter().map(|(x, y)| (x - a, y - fa)).collect())
}

fn choose_base(sample: &CorrespondenceSample, base: BaseChoice) -> Result<usize> {
    match base {
        BaseChoice::Index(i) if i < sample.len() => Ok(i),
        BaseChoice::Index(i) => Err(Error::InvalidIndex {
            index: i,
            len: sample.len(),
        }),
        BaseChoice::BestDefect => Ok(defect_profile(sample)
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)),
    }
}

/// Where `f` sends the direction `u`, read off the largest-norm sample points near it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionImage {
    /// Norm-weighted mean direction of the source points used.
    pub source: Vector,
    /// Norm-weighted mean of `fx/|x|`, renormalized.
    pub image: Vector,
    /// Largest distance between two of the `fx/|x|` used.
    pub dispersion: f64,
    pub used: usize,
}

/// Among the `k` largest-norm points within `merge_angle` of `u`, the
/// norm-weighted mean of `fx/|x|`, renormalized. The sample must have its
/// base pair at the origin.
pub fn direction_image(sample: &CorrespondenceSample, u: &Vector, k: usize, merge_angle: f64) -> Result<DirectionImage> {
    let cos = merge_angle.cos();
    let mut near: Vec<(f64, &Vector, &Vector)> = sample
        .pairs()
        .iter()
        .filter_map(|(x, fx)| {
            let r = x.norm();
            (r > 0.0 && x.dot(u) >= cos * r).then_some((r, x, fx))
        })
        .collect();
    if near.is_empty() {
        return Err(Error::NoPointsNearDirection);
    }
    near.sort_by(|a, b| b.0.total_cmp(&a.0));
    near.truncate(k.max(1));
    // Weights |x| on fx/|x| and x/|x| reduce to plain sums.
    let image_sum = near.iter().fold(Vector::zeros(sample.n_dst()), |acc, p| acc + p.2);
    let source_sum = near.iter().fold(Vector::zeros(sample.n_src()), |acc, p| acc + p.1);
    let image_norm = image_sum.norm();
    if image_norm == 0.0 {
        return Err(Error::Degenerate("images of a direction cancel out".into()));
    }
    let scaled: Vec<Vector> = near.iter().map(|p| p.2 / p.0).collect();
    let mut dispersion = 0.0_f64;
    for (i, a) in scaled.iter().enumerate() {
        for b in &scaled[i + 1..] {
            dispersion = dispersion.max((a - b).norm());
        }
    }
    Ok(DirectionImage {
        source: &source_sum / source_sum.norm(),
        image: image_sum / image_norm,
        dispersion,
        used: near.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub q: Matrix,
    /// Rank of the span of the matched source directions.
    pub rank: usize,
    pub images: Vec<DirectionImage>,
}

/// Orthogonal `Q` matching each cluster direction to its image, weighted by
/// cluster counts. Refuses direction sets that do not span unless
/// `allow_partial_rank` is set, in which case `Q` is fitted on the span and
/// completed on its complement.
pub fn fit_linear_isometry(
    sample: &CorrespondenceSample,
    dirs: &DirectionSet,
    k: usize,
    merge_angle: f64,
    allow_partial_rank: bool,
) -> Result<LinearFit> {
    let n = sample.n_src();
    if sample.n_dst() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sample.n_dst(),
        });
    }
    if sample.base_index().is_none() {
        return Err(Error::MissingBasePair);
    }
    let mut images = Vec::new();
    let mut weights = Vec::new();
    for (u, &count) in dirs.directions().iter().zip(dirs.counts()) {
        match direction_image(sample, u, k, merge_angle) {
            Ok(img) => {
                images.push(img);
                weights.push(count as f64);
            }
            Err(Error::NoPointsNearDirection) => continue,
            Err(e) => return Err(e),
        }
    }
    let sources: Vec<Vector> = images.iter().map(|i| i.source.clone()).collect();
    let r = rank(&sources);
    if r < n && !allow_partial_rank {
        return Err(Error::NotSpanning(format!(
            "cluster directions span {r} of {n} dimensions (mu estimate zero)"
        )));
    }
    if images.is_empty() {
        return Ok(LinearFit {
            q: Matrix::identity(n, n),
            rank: 0,
            images,
        });
    }
    let targets: Vec<Vector> = images.iter().map(|i| i.image.clone()).collect();
    let q = procrustes_fit(&sources, &targets, &weights)?;
    Ok(LinearFit { q, rank: r, images })
}

/// Largest `|Tx − fx|` over the sample.
pub fn residual(sample: &CorrespondenceSample, t: &IsometryTransform) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (x, fx) in sample.pairs() {
        worst = worst.max((t.apply(x)? - fx).norm());
    }
    Ok(worst)
}

/// Full pipeline; a failed certificate is a result, not an error.
pub fn fit_isometry(sample: &CorrespondenceSample, params: &FitParams) -> Result<(IsometryTransform, FitCertificate)> {
    let n = sample.n_src();
    if sample.n_dst() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sample.n_dst(),
        });
    }
    if params.k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let (eps, eps_subsampled) = match params.eps {
        Some(e) if e >= 0.0 && e.is_finite() => (e, false),
        Some(e) => return Err(Error::InvalidParameter(format!("ε must be ≥ 0, got {e}"))),
        None => {
            let est = epsilon_estimate(sample, &params.defect)?;
            (est.eps, est.subsampled)
        }
    };
    let base_index = choose_base(sample, params.base)?;
    let normalized = normalize_basepoint(sample, base_index)?;
    let sources: Vec<Vector> = normalized.sources().cloned().collect();
    let dirs = estimate_cluster_directions(&sources, &params.estimator)?;
    let mu_est = mu1(&dirs);

    let (mu, mu_source, c_prime) = match (params.c_prime, params.known_mu) {
        (Some(c), _) => {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidParameter(format!("c′ must be positive, got {c}")));
            }
            (1.0 / c, MuSource::CPrime, c)
        }
        (None, Some(m)) => {
            if !(m > 0.0 && m <= 1.0) {
                return Err(Error::InvalidParameter(format!("μ must lie in (0, 1], got {m}")));
            }
            (m, MuSource::Known, 1.0 / m)
        }
        (None, None) => {
            let c = if mu_est > 0.0 { 1.0 / mu_est } else { f64::INFINITY };
            (mu_est, MuSource::Estimated, c)
        }
    };

    let linear = fit_linear_isometry(
        &normalized,
        &dirs,
        params.k,
        params.estimator.merge_angle,
        params.allow_partial_rank,
    )?;
    let partial_rank = linear.rank < n;
    let q = linear.q;

    let h: Vec<Vector> = sample.pairs().iter().map(|(x, fx)| fx - &q * x).collect();
    let (w, factor) = match params.translation {
        TranslationMode::SebCenter => (smallest_enclosing_ball(&h)?.center, 2f64.sqrt()),
        TranslationMode::Mean => (h.iter().fold(Vector::zeros(n), |acc, v| acc + v) / h.len() as f64, 2.0),
    };
    let t = IsometryTransform::new(q, w)?;
    let residual = residual(sample, &t)?;
    let bound = if partial_rank { f64::INFINITY } else { factor * c_prime * eps };
    let passed = !partial_rank && certify(residual, bound, params.certificate_tol, params.certificate_abs_tol);

    let cert = FitCertificate {
        eps,
        eps_subsampled,
        mu_est,
        mu,
        mu_source,
        c_prime,
        bound,
        residual,
        passed,
        translation: params.translation,
        certificate_tol: params.certificate_tol,
        certificate_abs_tol: params.certificate_abs_tol,
        dim: n,
        rank: linear.rank,
        partial_rank,
        base_index,
        directions: dirs.len(),
    };
    Ok((t, cert))
}

/// Oracle-mode fit of a sample: the sample is extended to `Rⁿ` by
/// nearest-neighbour lookup, the linear part is read off at scales up to
/// half the sample radius, and the translation is recentred on the sample.
/// The domain is treated as the whole space, so `μ = 1` and the bound is `2ε`.
pub fn fit_sample_oracle(
    sample: &CorrespondenceSample,
    params: &FitParams,
    oracle_params: &OracleParams,
) -> Result<(IsometryTransform, FitCertificate, OracleReport)> {
    let n = sample.n_src();
    if sample.n_dst() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sample.n_dst(),
        });
    }
    let (eps, eps_subsampled) = match params.eps {
        Some(e) if e >= 0.0 && e.is_finite() => (e, false),
        Some(e) => return Err(Error::InvalidParameter(format!("ε must be ≥ 0, got {e}"))),
        None => {
            let est = epsilon_estimate(sample, &params.defect)?;
            (est.eps, est.subsampled)
        }
    };
    let base_index = choose_base(sample, params.base)?;
    let normalized = normalize_basepoint(sample, base_index)?;
    let sources: Vec<Vector> = normalized.sources().cloned().collect();
    let dirs = estimate_cluster_directions(&sources, &params.estimator)?;
    let radius = sources.iter().map(|x| x.norm()).fold(0.0_f64, f64::max);
    let scales: Vec<f64> = [16.0, 8.0, 4.0, 2.0].iter().map(|d| radius / d).collect();
    let oracle = NearestNeighbourOracle::new(&normalized, eps)?;
    let probe = OracleParams {
        probe_radius: radius / 2.0,
        ..oracle_params.clone()
    };
    let (t0, report) = fit_global_oracle(&oracle, &scales, &probe)?;
    let q = t0.q().clone();
    let h: Vec<Vector> = sample.pairs().iter().map(|(x, fx)| fx - &q * x).collect();
    let w = smallest_enclosing_ball(&h)?.center;
    let t = IsometryTransform::new(q, w)?;
    let residual = residual(sample, &t)?;
    let bound = 2.0 * eps;
    let cert = FitCertificate {
        eps,
        eps_subsampled,
        mu_est: mu1(&dirs),
        mu: 1.0,
        mu_source: MuSource::Known,
        c_prime: 1.0,
        bound,
        residual,
        passed: certify(residual, bound, params.certificate_tol, params.certificate_abs_tol),
        translation: TranslationMode::SebCenter,
        certificate_tol: params.certificate_tol,
        certificate_abs_tol: params.certificate_abs_tol,
        dim: n,
        rank: n,
        partial_rank: false,
        base_index,
        directions: dirs.len(),
    };
    Ok((t, cert, report))
}
