use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{basis_vector, procrustes_fit, random_unit, IsometryTransform, Vector};
use crate::nearmetric::CorrespondenceSample;

/// A map defined on all of `Rⁿ` that can be evaluated anywhere.
pub trait OracleMap: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> Result<Vector>;
    /// The defect the caller vouches for.
    fn declared_eps(&self) -> f64;
}

/// [`OracleMap`] from a closure.
pub struct FnOracle<F> {
    dim: usize,
    eps: f64,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&Vector) -> Vector + Sync,
{
    pub fn new(dim: usize, eps: f64, f: F) -> Self {
        Self { dim, eps, f }
    }
}

impl<F> OracleMap for FnOracle<F>
where
    F: Fn(&Vector) -> Vector + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        let y = (self.f)(x);
        if y.len() != self.dim {
            return Err(Error::Oracle(format!("returned {} coordinates, expected {}", y.len(), self.dim)));
        }
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::Oracle("non-finite value".into()));
        }
        Ok(y)
    }

    fn declared_eps(&self) -> f64 {
        self.eps
    }
}

/// Extends a sample to all of `Rⁿ` by nearest-neighbour lookup. Only
/// meaningful when the sample is dense at the scales being queried.
pub struct NearestNeighbourOracle<'a> {
    sample: &'a CorrespondenceSample,
    eps: f64,
}

impl<'a> NearestNeighbourOracle<'a> {
    pub fn new(sample: &'a CorrespondenceSample, eps: f64) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Empty("sample"));
        }
        Ok(Self { sample, eps })
    }
}

impl OracleMap for NearestNeighbourOracle<'_> {
    fn dim(&self) -> usize {
        self.sample.n_src()
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        let (_, fx) = self
            .sample
            .pairs()
            .iter()
            .min_by(|a, b| (&a.0 - x).norm_squared().total_cmp(&(&b.0 - x).norm_squared()))
            .ok_or(Error::Empty("sample"))?;
        Ok(fx.clone())
    }

    fn declared_eps(&self) -> f64 {
        self.eps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub probes: usize,
    /// Probe norms are log-uniform in `[1e-2, probe_radius]`.
    pub probe_radius: f64,
    /// Added to `2ε` when judging probe residuals.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            probes: 500,
            probe_radius: 1e3,
            tol: 0.01,
            seed: 0,
        }
    }
}

/// `|f(s x)/s − f(t x)/t|` for a basis vector `x` and scales `s < t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub axis: usize,
    pub s: f64,
    pub t: f64,
    pub defect: f64,
    /// `12ε|x|/s + 6ε²/s²`, a bound on `defect²`.
    pub rate: f64,
    pub within_rate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub eps: f64,
    pub scale: f64,
    pub cauchy: Vec<CauchyRow>,
    pub cauchy_ok: bool,
    /// Largest `|Tx − fx|` over the probes.
    pub probe_residual: f64,
    /// `2ε + tol`.
    pub probe_bound: f64,
    pub probe_ok: bool,
}

/// Linear part from `f(s·eᵢ)/s` at the largest scale, orthogonalized by
/// Procrustes against the basis; translation `f(0)`. Reports the Cauchy
/// defects across the scale grid and the residual at random probes.
pub fn fit_global_oracle(
    oracle: &dyn OracleMap,
    s_grid: &[f64],
    params: &OracleParams,
) -> Result<(IsometryTransform, OracleReport)> {
    let n = oracle.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if s_grid.is_empty() || s_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter("scales must be positive and finite".into()));
    }
    if s_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("scales must increase".into()));
    }
    let eps = oracle.declared_eps();
    let f0 = oracle.eval(&Vector::zeros(n))?;
    let f = |x: &Vector| -> Result<Vector> { Ok(oracle.eval(x)? - &f0) };

    // scaled[i][k] = f(s_k eᵢ)/s_k
    let mut scaled: Vec<Vec<Vector>> = Vec::with_capacity(n);
    for i in 0..n {
        let e = basis_vector(n, i);
        scaled.push(s_grid.iter().map(|&s| f(&(&e * s)).map(|y| y / s)).collect::<Result<_>>()?);
    }

    let mut cauchy = Vec::new();
    for (axis, row) in scaled.iter().enumerate() {
        for a in 0..s_grid.len() {
            for b in a + 1..s_grid.len() {
                let (s, t) = (s_grid[a], s_grid[b]);
                let defect = (&row[a] - &row[b]).norm();
                let rate = 12.0 * eps / s + 6.0 * eps * eps / (s * s);
                cauchy.push(CauchyRow {
                    axis,
                    s,
                    t,
                    defect,
                    rate,
                    within_rate: defect * defect <= rate * (1.0 + 1e-9) + 1e-15,
                });
            }
        }
    }

    let sources: Vec<Vector> = (0..n).map(|i| basis_vector(n, i)).collect();
    let targets: Vec<Vector> = scaled.iter().map(|row| row[row.len() - 1].clone()).collect();
    let q = procrustes_fit(&sources, &targets, &vec![1.0; n])?;
    let t = IsometryTransform::new(q, f0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut probe_residual = 0.0_f64;
    for _ in 0..params.probes {
        let r = rng.random_range((1e-2f64).ln()..=params.probe_radius.max(1e-2).ln()).exp();
        let x = random_unit(n, &mut rng) * r;
        probe_residual = probe_residual.max((t.apply(&x)? - oracle.eval(&x)?).norm());
    }
    let probe_bound = 2.0 * eps + params.tol;
    let report = OracleReport {
        eps,
        scale: s_grid[s_grid.len() - 1],
        cauchy_ok: cauchy.iter().all(|c| c.within_rate),
        cauchy,
        probe_residual,
        probe_bound,
        probe_ok: probe_residual <= probe_bound,
    };
    Ok((t, report))
}
