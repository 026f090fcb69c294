//! Distortion of sampled maps and the pointwise inequalities every
//! near-isometry with `f(0) = 0` satisfies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ensure_dim, Vector, TOL};

const DUPLICATE_TOL: f64 = 1e-12;
const BASE_TOL: f64 = 1e-12;

/// Sampled map: pairs `(x, f(x))` with pairwise distinct sources.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSample {
    n_src: usize,
    n_dst: usize,
    pairs: Vec<(Vector, Vector)>,
    base_index: Option<usize>,
}

impl CorrespondenceSample {
    /// Validates dimensions, finiteness and source distinctness. A pair
    /// `(0, 0)` is recorded as the base pair when present.
    pub fn new(pairs: Vec<(Vector, Vector)>) -> Result<Self> {
        let (x0, y0) = pairs.first().ok_or(Error::Empty("correspondence sample"))?;
        let (n_src, n_dst) = (x0.len(), y0.len());
        for (x, y) in &pairs {
            ensure_dim(x, n_src)?;
            ensure_dim(y, n_dst)?;
            if x.iter().chain(y.iter()).any(|c| !c.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        if n_src == 0 {
            return Err(Error::InvalidParameter("zero-dimensional points".into()));
        }
        check_distinct(&pairs)?;
        let base_index = pairs
            .iter()
            .position(|(x, y)| x.amax() <= BASE_TOL && y.amax() <= BASE_TOL);
        Ok(Self {
            n_src,
            n_dst,
            pairs,
            base_index,
        })
    }

    /// Sample of `f` at the given points.
    pub fn from_map<F>(points: &[Vector], f: F) -> Result<Self>
    where
        F: Fn(&Vector) -> Result<Vector>,
    {
        let pairs = points
            .iter()
            .map(|x| Ok((x.clone(), f(x)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn n_src(&self) -> usize {
        self.n_src
    }

    pub fn n_dst(&self) -> usize {
        self.n_dst
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Vector, Vector)] {
        &self.pairs
    }

    pub fn base_index(&self) -> Option<usize> {
        self.base_index
    }

    pub fn sources(&self) -> impl Iterator<Item = &Vector> {
        self.pairs.iter().map(|(x, _)| x)
    }

    pub fn targets(&self) -> impl Iterator<Item = &Vector> {
        self.pairs.iter().map(|(_, y)| y)
    }

    pub fn into_pairs(self) -> Vec<(Vector, Vector)> {
        self.pairs
    }
}

fn check_distinct(pairs: &[(Vector, Vector)]) -> Result<()> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        pairs[a].0[0]
            .partial_cmp(&pairs[b].0[0])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if pairs[j].0[0] - pairs[i].0[0] > DUPLICATE_TOL {
                break;
            }
            if (&pairs[i].0 - &pairs[j].0).amax() <= DUPLICATE_TOL {
                return Err(Error::DuplicatePoint(i.min(j), i.max(j)));
            }
        }
    }
    Ok(())
}

#[inline]
fn pair_defect(a: &(Vector, Vector), b: &(Vector, Vector)) -> f64 {
    ((&a.1 - &b.1).norm() - (&a.0 - &b.0).norm()).abs()
}

/// Smallest `ε` for which the sampled pairs satisfy
/// `|x−y| − ε ≤ |fx−fy| ≤ |x−y| + ε`.
///
/// This lower-bounds the defect of the underlying map.
pub fn epsilon_of(sample: &CorrespondenceSample) -> Result<f64> {
    let pairs = sample.pairs();
    if pairs.len() < 2 {
        return Err(Error::TooFewPairs {
            needed: 2,
            got: pairs.len(),
        });
    }
    Ok(pairs
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            pairs[i + 1..]
                .iter()
                .map(|b| pair_defect(a, b))
                .fold(0.0_f64, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Per-pair maximum distortion: entry `i` is `max_j ||fxᵢ − fxⱼ| − |xᵢ − xⱼ||`.
pub fn defect_profile(sample: &CorrespondenceSample) -> Vec<f64> {
    let pairs = sample.pairs();
    pairs
        .par_iter()
        .map(|a| pairs.iter().map(|b| pair_defect(a, b)).fold(0.0_f64, f64::max))
        .collect()
}

/// Options for [`epsilon_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectOptions {
    /// Samples up to this size are evaluated over all pairs.
    pub full_pair_limit: usize,
    /// Number of random pairs drawn above the limit.
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for DefectOptions {
    fn default() -> Self {
        Self {
            full_pair_limit: 5000,
            random_pairs: 20_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectEstimate {
    pub eps: f64,
    pub pairs_checked: u64,
    /// True when only a random subset of pairs was examined.
    pub subsampled: bool,
}

/// [`epsilon_of`] with random-pair subsampling for large samples.
pub fn epsilon_estimate(sample: &CorrespondenceSample, opts: &DefectOptions) -> Result<DefectEstimate> {
    let m = sample.len();
    if m <= opts.full_pair_limit {
        let eps = epsilon_of(sample)?;
        return Ok(DefectEstimate {
            eps,
            pairs_checked: (m as u64) * (m as u64 - 1) / 2,
            subsampled: false,
        });
    }
    let pairs = sample.pairs();
    let chunks = 64u64;
    let per_chunk = (opts.random_pairs as u64).div_ceil(chunks);
    let eps = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (c.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
            let mut best = 0.0_f64;
            for _ in 0..per_chunk {
                let i = rng.random_range(0..m);
                let j = rng.random_range(0..m);
                if i != j {
                    best = best.max(pair_defect(&pairs[i], &pairs[j]));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(DefectEstimate {
        eps,
        pairs_checked: per_chunk * chunks,
        subsampled: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`, positive for a violation.
    pub slack: f64,
}

/// Outcome of checking an inequality over all eligible index pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InequalityReport {
    pub checked: u64,
    pub violations: Vec<Violation>,
    /// Largest `slack` among violations, 0 when there are none.
    pub max_violation: f64,
}

impl InequalityReport {
    pub fn from_violations(checked: u64, mut violations: Vec<Violation>) -> Self {
        violations.sort_by_key(|a| (a.i, a.j));
        let max_violation = violations.iter().map(|v| v.slack).fold(0.0_f64, f64::max);
        Self {
            checked,
            violations,
            max_violation,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(mut self, other: InequalityReport) -> Self {
        self.checked += other.checked;
        self.violations.extend(other.violations);
        Self::from_violations(self.checked, self.violations)
    }
}

fn require_base(sample: &CorrespondenceSample) -> Result<()> {
    sample.base_index().map(|_| ()).ok_or(Error::MissingBasePair)
}

/// Checks `|fx·fy − x·y| ≤ 2ε(|x| + |y| + ε)` over all pairs `i ≤ j`
/// (the diagonal included). Comparisons allow a relative slack of `tol`.
pub fn check_inner_product_bound(
    sample: &CorrespondenceSample,
    eps: f64,
    tol: f64,
) -> Result<InequalityReport> {
    require_base(sample)?;
    if sample.n_src() != sample.n_dst() {
        return Err(Error::DimensionMismatch {
            expected: sample.n_src(),
            found: sample.n_dst(),
        });
    }
    let pairs = sample.pairs();
    let per_row: Vec<(u64, Vec<Violation>)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, fx))| {
            let mut found = Vec::new();
            let nx = x.norm();
            for (j, (y, fy)) in pairs.iter().enumerate().skip(i) {
                let lhs = (fx.dot(fy) - x.dot(y)).abs();
                let rhs = 2.0 * eps * (nx + y.norm() + eps);
                if lhs > rhs + tol * (1.0 + rhs) {
                    found.push(Violation {
                        i,
                        j,
                        lhs,
                        rhs,
                        slack: lhs - rhs,
                    });
                }
            }
            ((pairs.len() - i) as u64, found)
        })
        .collect();
    Ok(collect_rows(per_row))
}

/// Checks
/// `|pfx − pfy|² ≤ 4|px − py|² + 24ε/|x| + 24ε/|y| + 12ε²/(|x||y|)`
/// for pairs `i < j` with `|x|, |y| ≥ 2ε`, nonzero sources and nonzero images.
pub fn check_projection_bound(
    sample: &CorrespondenceSample,
    eps: f64,
    tol: f64,
) -> Result<InequalityReport> {
    require_base(sample)?;
    let pairs = sample.pairs();
    let eligible: Vec<(usize, f64, Vector, Vector)> = pairs
        .iter()
        .enumerate()
        .filter_map(|(i, (x, fx))| {
            let nx = x.norm();
            let nfx = fx.norm();
            (nx > 0.0 && nx >= 2.0 * eps && nfx > 0.0).then(|| (i, nx, x / nx, fx / nfx))
        })
        .collect();
    let per_row: Vec<(u64, Vec<Violation>)> = eligible
        .par_iter()
        .enumerate()
        .map(|(a, (i, nx, px, pfx))| {
            let mut found = Vec::new();
            for (j, ny, py, pfy) in &eligible[a + 1..] {
                let lhs = (pfx - pfy).norm_squared();
                let rhs = 4.0 * (px - py).norm_squared()
                    + 24.0 * eps / nx
                    + 24.0 * eps / ny
                    + 12.0 * eps * eps / (nx * ny);
                if lhs > rhs + tol * (1.0 + rhs) {
                    found.push(Violation {
                        i: *i,
                        j: *j,
                        lhs,
                        rhs,
                        slack: lhs - rhs,
                    });
                }
            }
            ((eligible.len() - a - 1) as u64, found)
        })
        .collect();
    Ok(collect_rows(per_row))
}

fn collect_rows(rows: Vec<(u64, Vec<Violation>)>) -> InequalityReport {
    let checked = rows.iter().map(|r| r.0).sum();
    let violations = rows.into_iter().flat_map(|r| r.1).collect();
    InequalityReport::from_violations(checked, violations)
}

/// Default relative slack for the inequality checks.
pub const CHECK_TOL: f64 = TOL;
