//! Input datasets: (complex amplitude, bit-pattern) records with validation
//! and JSON/CSV ingestion.
//!
//! JSON shape:
//! ```json
//! {"n": 2, "records": [{"pattern": "00", "re": 0.316, "im": -0.447}]}
//! ```
//! CSV shape: a `pattern,re,im` header, one record per row, with the pattern
//! width defining `n`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `Σ|x_k|² = 1` for the normalized flag.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset has no records")]
    Empty,
    #[error("record {index}: pattern `{pattern}` has width {got}, expected {expected}")]
    PatternWidth {
        index: usize,
        pattern: String,
        got: usize,
        expected: usize,
    },
    #[error("record {index}: pattern `{pattern}` contains a non-binary character")]
    NonBinaryPattern { index: usize, pattern: String },
    #[error("record {index}: pattern `{pattern}` duplicates an earlier record")]
    DuplicatePattern { index: usize, pattern: String },
    #[error("record {index}: amplitude is not finite")]
    NonFiniteAmplitude { index: usize },
    #[error("{m} records exceed the 2^{n} distinct patterns of width {n}")]
    TooManyRecords { m: usize, n: usize },
    #[error("pattern width 0 is not a dataset")]
    ZeroWidth,
    #[error("unrecognized dataset extension `{0}`; expected .json or .csv")]
    UnknownExtension(String),
    #[error("all amplitudes are zero")]
    AllZero,
}

/// One `(x_k, p_k)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    pub amplitude: Complex64,
    pub pattern: String,
}

impl DataRecord {
    pub fn new(re: f64, im: f64, pattern: impl Into<String>) -> DataRecord {
        DataRecord {
            amplitude: Complex64::new(re, im),
            pattern: pattern.into(),
        }
    }

    pub fn real(re: f64, pattern: impl Into<String>) -> DataRecord {
        DataRecord::new(re, 0.0, pattern)
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    pattern: String,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Deserialize)]
struct JsonDataset {
    n: usize,
    records: Vec<JsonRecord>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    pattern: &'a str,
    re: f64,
    im: f64,
}

/// A validated list of records: patterns pairwise distinct, all of width `n`,
/// with at most `2^n` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<DataRecord>,
    n: usize,
    normalized: bool,
}

impl Dataset {
    pub fn new(records: Vec<DataRecord>, n: usize) -> Result<Dataset, DatasetError> {
        if n == 0 {
            return Err(DatasetError::ZeroWidth);
        }
        if records.is_empty() {
            return Err(DatasetError::Empty);
        }
        if n < usize::BITS as usize - 1 && records.len() > 1usize << n {
            return Err(DatasetError::TooManyRecords {
                m: records.len(),
                n,
            });
        }
        for (index, record) in records.iter().enumerate() {
            if record.pattern.len() != n {
                return Err(DatasetError::PatternWidth {
                    index,
                    pattern: record.pattern.clone(),
                    got: record.pattern.len(),
                    expected: n,
                });
            }
            if !record.pattern.chars().all(|c| c == '0' || c == '1') {
                return Err(DatasetError::NonBinaryPattern {
                    index,
                    pattern: record.pattern.clone(),
                });
            }
            if !record.amplitude.re.is_finite() || !record.amplitude.im.is_finite() {
                return Err(DatasetError::NonFiniteAmplitude { index });
            }
            if records[..index]
                .iter()
                .any(|other| other.pattern == record.pattern)
            {
                return Err(DatasetError::DuplicatePattern {
                    index,
                    pattern: record.pattern.clone(),
                });
            }
        }
        let sum: f64 = records.iter().map(|r| r.amplitude.norm_sqr()).sum();
        let normalized = (sum - 1.0).abs() <= NORMALIZATION_TOLERANCE;
        Ok(Dataset {
            records,
            n,
            normalized,
        })
    }

    pub fn records(&self) -> &[DataRecord] {
        &self.records
    }

    /// Pattern width in bits.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Record count, `M`.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Whether `Σ|x_k|²` was 1 within tolerance at construction.
    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr_sum(&self) -> f64 {
        self.records.iter().map(|r| r.amplitude.norm_sqr()).sum()
    }

    pub fn patterns(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.pattern.as_str()).collect()
    }

    pub fn all_real(&self) -> bool {
        self.records.iter().all(|r| r.amplitude.im == 0.0)
    }

    pub fn max_abs_amplitude(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.amplitude.norm())
            .fold(0.0, f64::max)
    }

    /// The same records rescaled so `Σ|x_k|² = 1` exactly (up to rounding).
    pub fn normalized_copy(&self) -> Result<Dataset, DatasetError> {
        let sum = self.norm_sqr_sum();
        if sum == 0.0 {
            return Err(DatasetError::AllZero);
        }
        let scale = 1.0 / sum.sqrt();
        let records = self
            .records
            .iter()
            .map(|r| DataRecord {
                amplitude: r.amplitude * scale,
                pattern: r.pattern.clone(),
            })
            .collect();
        Dataset::new(records, self.n)
    }

    pub fn from_json_str(text: &str) -> Result<Dataset, DatasetError> {
        let parsed: JsonDataset = serde_json::from_str(text)?;
        let records = parsed
            .records
            .into_iter()
            .map(|r| DataRecord::new(r.re, r.im, r.pattern))
            .collect();
        Dataset::new(records, parsed.n)
    }

    pub fn from_csv_str(text: &str) -> Result<Dataset, DatasetError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for row in reader.deserialize::<CsvRecord>() {
            let row = row?;
            records.push(DataRecord::new(row.re, row.im.unwrap_or(0.0), row.pattern));
        }
        let n = records
            .first()
            .map(|r: &DataRecord| r.pattern.len())
            .ok_or(DatasetError::Empty)?;
        Dataset::new(records, n)
    }

    /// Loads a dataset from a `.json` or `.csv` file, chosen by extension.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Dataset::from_json_str(&text),
            Some("csv") => Dataset::from_csv_str(&text),
            other => Err(DatasetError::UnknownExtension(
                other.unwrap_or("").to_string(),
            )),
        }
    }

    pub fn to_json_string(&self) -> String {
        let records: Vec<JsonRecordOut> = self
            .records
            .iter()
            .map(|r| JsonRecordOut {
                pattern: &r.pattern,
                re: r.amplitude.re,
                im: r.amplitude.im,
            })
            .collect();
        serde_json::json!({ "n": self.n, "records": records }).to_string()
    }
}

#[derive(Deserialize)]
struct CsvRecord {
    pattern: String,
    re: f64,
    im: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"n": 3, "records": [
            {"pattern": "000", "re": 0.5477225575051661},
            {"pattern": "001", "re": 0.8366600265340756, "im": 0.0}
        ]}"#;
        let ds = Dataset::from_json_str(text).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n(), 3);
        assert!(ds.normalized());
        assert!(ds.all_real());
        let back = Dataset::from_json_str(&ds.to_json_string()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn csv_infers_width() {
        let text = "pattern,re,im\n00,0.316227766016838,-0.447213595499958\n01,0.5,0.0\n";
        let ds = Dataset::from_csv_str(text).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.len(), 2);
        assert!(!ds.all_real());
    }

    #[test]
    fn validation_names_the_failing_record() {
        let bad_width = Dataset::new(
            vec![DataRecord::real(1.0, "00"), DataRecord::real(0.0, "011")],
            2,
        );
        assert!(matches!(
            bad_width,
            Err(DatasetError::PatternWidth { index: 1, .. })
        ));

        let duplicate = Dataset::new(
            vec![DataRecord::real(0.6, "01"), DataRecord::real(0.8, "01")],
            2,
        );
        assert!(matches!(
            duplicate,
            Err(DatasetError::DuplicatePattern { index: 1, .. })
        ));

        let non_binary = Dataset::new(vec![DataRecord::real(1.0, "0z")], 2);
        assert!(matches!(
            non_binary,
            Err(DatasetError::NonBinaryPattern { index: 0, .. })
        ));

        let too_many = Dataset::new(
            vec![
                DataRecord::real(0.5, "0"),
                DataRecord::real(0.5, "1"),
                DataRecord::real(0.5, "0"),
            ],
            1,
        );
        assert!(matches!(too_many, Err(DatasetError::TooManyRecords { .. })));
    }

    #[test]
    fn normalized_flag_tracks_the_sum() {
        let half = Dataset::new(vec![DataRecord::real(0.5, "0")], 1).unwrap();
        assert!(!half.normalized());
        assert!((half.norm_sqr_sum() - 0.25).abs() < 1e-15);
        let fixed = half.normalized_copy().unwrap();
        assert!(fixed.normalized());
        assert!((fixed.records()[0].amplitude.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_dataset_cannot_normalize() {
        let zero = Dataset::new(vec![DataRecord::real(0.0, "0")], 1).unwrap();
        assert!(matches!(zero.normalized_copy(), Err(DatasetError::AllZero)));
    }
}
