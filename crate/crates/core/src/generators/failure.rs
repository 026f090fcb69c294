use serde::{Deserialize, Serialize};

use super::{bad_map_f, gen_ar, gen_ball_minus_ar, AuxMapParams};
use crate::error::{Error, Result};
use crate::fitter::{fit_isometry, FitCertificate, FitParams};
use crate::geom::Vector;
use crate::nearmetric::{epsilon_of, CorrespondenceSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureExperiment {
    pub m: f64,
    pub lambda: f64,
    pub n: usize,
    /// Wedge points are drawn in `±` pairs, so the sample holds twice this many.
    pub wedge_count: usize,
    pub ball_count: usize,
    pub seed: u64,
}

impl Default for FailureExperiment {
    fn default() -> Self {
        Self {
            m: 100.0,
            lambda: 0.5,
            n: 2,
            wedge_count: 300,
            ball_count: 100,
            seed: 0,
        }
    }
}

impl FailureExperiment {
    pub fn params(&self) -> Result<AuxMapParams> {
        AuxMapParams::new(self.m, self.lambda)
    }

    /// Wedge points out to `20M`, their mirror images, the origin, and
    /// points of the `λ`-ball outside the wedge.
    pub fn domain(&self) -> Result<Vec<Vector>> {
        let params = self.params()?;
        let wedge = gen_ar(&params, self.n, self.wedge_count, (1e-2, 20.0 * self.m), self.seed)?;
        let ball = gen_ball_minus_ar(&params, self.n, self.ball_count, self.seed.wrapping_add(1))?;
        let mut pts = vec![Vector::zeros(self.n)];
        for z in wedge {
            pts.push(-&z);
            pts.push(z);
        }
        pts.extend(ball);
        Ok(pts)
    }

    /// Pairs `(z, f z)` for the bad map.
    pub fn sample(&self) -> Result<CorrespondenceSample> {
        let params = self.params()?;
        CorrespondenceSample::from_map(&self.domain()?, |z| bad_map_f(&params, z))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub m: f64,
    pub lambda: f64,
    /// Exact defect of the sample.
    pub eps: f64,
    pub residual: f64,
    /// `√M/2`. The origin and a mirrored pair `±z` with `|x| ≥ M` already
    /// force every isometry to miss some sample point by this much.
    pub threshold: f64,
    pub above_threshold: bool,
    /// Certificate with `μ` estimated from the sample. The wedge is thin, so
    /// `μ` is small and the bound is loose.
    pub certificate: FitCertificate,
    /// Certificate when `μ = 1` is claimed for the domain.
    pub claimed_certificate: FitCertificate,
    /// Residual of fitting the identity map on the same domain.
    pub control_residual: f64,
}

/// The wedge is only `2q` wide across `eₙ`; a merge angle above that
/// collapses its directions into a lower-dimensional set.
pub fn fit_params(params: &AuxMapParams) -> FitParams {
    let mut fit = FitParams::default();
    fit.estimator.merge_angle = fit.estimator.merge_angle.min(params.q() / 4.0);
    fit
}

/// Fits the bad map on a wedge-plus-ball sample and reports how far the
/// best isometry stays from it.
pub fn iap_failure_experiment(exp: &FailureExperiment) -> Result<FailureReport> {
    if exp.n < 2 {
        return Err(Error::InvalidParameter("dimension ≥ 2 required".into()));
    }
    let domain = exp.domain()?;
    let sample = exp.sample()?;
    let eps = epsilon_of(&sample)?;
    let base = fit_params(&exp.params()?);
    let (_, certificate) = fit_isometry(&sample, &base)?;
    let claimed = FitParams {
        known_mu: Some(1.0),
        ..base.clone()
    };
    let (_, claimed_certificate) = fit_isometry(&sample, &claimed)?;
    let control = CorrespondenceSample::from_map(&domain, |z| Ok(z.clone()))?;
    let (_, control_cert) = fit_isometry(&control, &base)?;
    let threshold = exp.m.sqrt() / 2.0;
    Ok(FailureReport {
        m: exp.m,
        lambda: exp.lambda,
        eps,
        residual: certificate.residual,
        threshold,
        above_threshold: certificate.residual >= threshold,
        certificate,
        claimed_certificate,
        control_residual: control_cert.residual,
    })
}
