//! JSON sample and certificate files, plus CSV import of pairs.
//!
//! Matrices are stored row-major. Floats are written as shortest round-trip
//! decimals; non-finite values (an infinite bound, say) are written as `null`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitter::FitCertificate;
use crate::geom::{IsometryTransform, Matrix, Vector};
use crate::nearmetric::CorrespondenceSample;

pub const SAMPLE_VERSION: &str = "iap-1";
pub const CERTIFICATE_VERSION: &str = "iap-cert-1";

/// Serde adapter writing non-finite floats as `null` and reading `null` back as `+∞`.
pub mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub version: String,
    pub dim: usize,
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<SampleMeta>,
}

fn json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Io => Error::Io(e.to_string()),
        Category::Data => Error::Schema(e.to_string()),
        Category::Syntax | Category::Eof => Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl SampleFile {
    pub fn from_sample(sample: &CorrespondenceSample, meta: Option<SampleMeta>) -> Result<Self> {
        if sample.n_src() != sample.n_dst() {
            return Err(Error::DimensionMismatch {
                expected: sample.n_src(),
                found: sample.n_dst(),
            });
        }
        Ok(Self {
            version: SAMPLE_VERSION.to_string(),
            dim: sample.n_src(),
            pairs: sample
                .pairs()
                .iter()
                .map(|(x, y)| (x.iter().copied().collect(), y.iter().copied().collect()))
                .collect(),
            meta,
        })
    }

    /// Checks the version tag and every array length.
    pub fn validate(&self) -> Result<()> {
        if self.version != SAMPLE_VERSION {
            return Err(Error::Schema(format!(
                "unsupported version {:?}, expected {SAMPLE_VERSION:?}",
                self.version
            )));
        }
        if self.pairs.is_empty() {
            return Err(Error::Empty("sample file has no pairs"));
        }
        for (i, (x, y)) in self.pairs.iter().enumerate() {
            if x.len() != self.dim || y.len() != self.dim {
                return Err(Error::Schema(format!(
                    "pair {i}: expected arrays of length {}, got {} and {}",
                    self.dim,
                    x.len(),
                    y.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_sample(&self) -> Result<CorrespondenceSample> {
        self.validate()?;
        CorrespondenceSample::new(
            self.pairs
                .iter()
                .map(|(x, y)| (Vector::from_column_slice(x), Vector::from_column_slice(y)))
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(json_error)?;
        file.validate()?;
        Ok(file)
    }

    /// Canonical form: pretty-printed with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sample files always serialize");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::from_csv(text.as_bytes())
        } else {
            Self::from_json(&text)
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }

    /// Rows of `2n` numbers, `x` then `f(x)`. A non-numeric first row is
    /// taken as a header.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut pairs = Vec::new();
        let mut width = None;
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(row + 1, |p| p.line() as usize);
                Error::Parse {
                    line,
                    column: 0,
                    message: e.to_string(),
                }
            })?;
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if row == 0 => continue,
                Err(e) => {
                    return Err(Error::Parse {
                        line: record.position().map_or(row + 1, |p| p.line() as usize),
                        column: 0,
                        message: e.to_string(),
                    })
                }
            };
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            let w = *width.get_or_insert(values.len());
            if values.len() != w || w % 2 != 0 || w == 0 {
                return Err(Error::Schema(format!(
                    "row {}: expected an even, constant number of columns, got {}",
                    row + 1,
                    values.len()
                )));
            }
            let (x, y) = values.split_at(w / 2);
            pairs.push((x.to_vec(), y.to_vec()));
        }
        let file = Self {
            version: SAMPLE_VERSION.to_string(),
            dim: width.unwrap_or(0) / 2,
            pairs,
            meta: None,
        };
        file.validate()?;
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub tool_version: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub version: String,
    #[serde(flatten)]
    pub certificate: FitCertificate,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub provenance: Provenance,
}

impl CertificateFile {
    pub fn new(transform: &IsometryTransform, certificate: FitCertificate, provenance: Provenance) -> Self {
        let q = transform.q();
        Self {
            version: CERTIFICATE_VERSION.to_string(),
            certificate,
            q: (0..q.nrows()).map(|i| q.row(i).iter().copied().collect()).collect(),
            w: transform.w().iter().copied().collect(),
            provenance,
        }
    }

    pub fn transform(&self) -> Result<IsometryTransform> {
        let n = self.w.len();
        if self.q.len() != n || self.q.iter().any(|row| row.len() != n) {
            return Err(Error::Schema(format!("Q must be {n}×{n}")));
        }
        let flat: Vec<f64> = self.q.iter().flatten().copied().collect();
        IsometryTransform::new(Matrix::from_row_slice(n, n, &flat), Vector::from_column_slice(&self.w))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(json_error)?;
        if file.version != CERTIFICATE_VERSION {
            return Err(Error::Schema(format!(
                "unsupported version {:?}, expected {CERTIFICATE_VERSION:?}",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificates always serialize");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitter::{fit_isometry, FitParams};
    use crate::geom::{random_orthogonal, random_unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(seed: u64) -> CorrespondenceSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_orthogonal(3, &mut rng);
        let mut pts = vec![Vector::zeros(3)];
        pts.extend((0..300).map(|_| random_unit(3, &mut rng) * rng.random_range(0.1..100.0)));
        CorrespondenceSample::from_map(&pts, |x| Ok(&q * x + random_unit(3, &mut rng.clone()) * 1e-3)).unwrap()
    }

    #[test]
    fn sample_round_trip_is_byte_identical() {
        let meta = SampleMeta {
            seed: Some(7),
            generator: Some("test".into()),
            params: serde_json::json!({"alpha": 0.5}),
        };
        let file = SampleFile::from_sample(&sample(1), Some(meta)).unwrap();
        let text = file.to_json();
        let back = SampleFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), text);
        assert_eq!(back.to_sample().unwrap(), sample(1));
    }

    #[test]
    fn certificate_round_trip() {
        let s = sample(2);
        let (t, cert) = fit_isometry(&s, &FitParams::default()).unwrap();
        let prov = Provenance {
            input_sha256: "00".repeat(32),
            tool_version: "0.1.0".into(),
            seed: 0,
        };
        let file = CertificateFile::new(&t, cert, prov);
        let text = file.to_json();
        let back = CertificateFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), text);
        assert_eq!(back.transform().unwrap(), t);
        for key in ["\"version\"", "\"eps\"", "\"mu\"", "\"c_prime\"", "\"bound\"", "\"residual\"", "\"passed\"", "\"Q\"", "\"w\"", "\"provenance\""] {
            assert!(text.contains(key), "{key}");
        }
    }

    #[test]
    fn infinite_bound_is_null() {
        let s = sample(3);
        let (t, mut cert) = fit_isometry(&s, &FitParams::default()).unwrap();
        cert.bound = f64::INFINITY;
        cert.c_prime = f64::INFINITY;
        let prov = Provenance {
            input_sha256: String::new(),
            tool_version: String::new(),
            seed: 1,
        };
        let file = CertificateFile::new(&t, cert, prov);
        let text = file.to_json();
        assert!(text.contains("\"bound\": null"));
        assert_eq!(CertificateFile::from_json(&text).unwrap(), file);
    }

    #[test]
    fn parse_errors_carry_position() {
        match SampleFile::from_json("{\"version\": \"iap-1\",\n \"dim\": 2,\n \"pairs\": [[[0, 0], [0,").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e:?}"),
        }
        assert!(matches!(
            SampleFile::from_json("{\"version\": \"iap-9\", \"dim\": 1, \"pairs\": [[[0], [0]]]}"),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            SampleFile::from_json("{\"version\": \"iap-1\", \"dim\": 2, \"pairs\": [[[0], [0]]]}"),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            SampleFile::from_json("{\"version\": \"iap-1\", \"dim\": 2, \"pairs\": []}"),
            Err(Error::Empty(_))
        ));
        assert!(matches!(SampleFile::from_json(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_import() {
        let text = "x1,x2,y1,y2\n0,0,0,0\n1,2,2,-1\n# comment\n3.5,1,1,-3.5\n";
        let file = SampleFile::from_csv(text.as_bytes()).unwrap();
        assert_eq!(file.dim, 2);
        assert_eq!(file.pairs.len(), 3);
        assert_eq!(file.pairs[2], (vec![3.5, 1.0], vec![1.0, -3.5]));
        assert!(SampleFile::from_csv("1,2,3\n".as_bytes()).is_err());
        assert!(SampleFile::from_csv("1,2\n1,2,3,4\n".as_bytes()).is_err());
        assert!(matches!(
            SampleFile::from_csv("1,2\nfoo,2\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("s.json");
        let file = SampleFile::from_sample(&sample(4), None).unwrap();
        file.write(&json).unwrap();
        assert_eq!(SampleFile::read(&json).unwrap(), file);
        let csv = dir.path().join("s.csv");
        std::fs::write(&csv, "0,0\n1,1\n").unwrap();
        assert_eq!(SampleFile::read(&csv).unwrap().dim, 1);
        assert!(matches!(SampleFile::read(&dir.path().join("missing.json")), Err(Error::Io(_))));
    }
}
