//! Near-isometries of subsets of Euclidean space: defect measurement,
//! cluster directions and `μ`, isometry fitting with certificates, and
//! generators for the wedge construction and its lemma checks.

pub mod directions;
pub mod error;
pub mod fitter;
pub mod generators;
pub mod geom;
pub mod io;
pub mod nearmetric;

pub use error::{Error, Result};
pub use fitter::{fit_isometry, FitCertificate, FitParams};
pub use geom::{IsometryTransform, Matrix, Vector};
pub use nearmetric::CorrespondenceSample;
