//! Problem instances and their on-disk format.
//!
//! An instance directory holds three files:
//!
//! * `instance.json`: header with `id`, `m`, `n`, `noise_radius` and an
//!   optional `ground_truth` object `{ "support": [...], "values": [...] }`
//!   listing the nonzero entries of the planted signal (0-based indices,
//!   ascending).
//! * `A.csv`: the sensing matrix, row-major, one matrix row per line, `n`
//!   comma-separated values per line, no header.
//! * `b.csv`: the observation vector, one value per line, no header.
//!
//! Floats are written with 17 significant digits.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::l2_norm;

pub const HEADER_FILE: &str = "instance.json";
pub const MATRIX_FILE: &str = "A.csv";
pub const OBSERVATION_FILE: &str = "b.csv";

/// Linear measurement problem `b = A x + e` with `‖e‖₂ ≤ noise_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    a: DMatrix<f64>,
    b: DVector<f64>,
    ground_truth: Option<DVector<f64>>,
    noise_radius: f64,
    id: String,
}

impl ProblemInstance {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        ground_truth: Option<DVector<f64>>,
        noise_radius: f64,
        id: impl Into<String>,
    ) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 || n < m {
            return Err(Error::DimensionMismatch(format!(
                "sensing matrix must satisfy 1 <= m <= n, got {m}x{n}"
            )));
        }
        if b.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "observation has length {}, expected {m}",
                b.len()
            )));
        }
        if let Some(x) = &ground_truth {
            if x.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "ground truth has length {}, expected {n}",
                    x.len()
                )));
            }
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("instance data".into()));
        }
        if !(noise_radius >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise radius must be nonnegative, got {noise_radius}"
            )));
        }
        if b.iter().all(|v| *v == 0.0) {
            return Err(Error::Domain(
                "observation b = 0 makes the origin feasible".into(),
            ));
        }
        Ok(Self {
            a,
            b,
            ground_truth,
            noise_radius,
            id: id.into(),
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn ground_truth(&self) -> Option<&DVector<f64>> {
        self.ground_truth.as_ref()
    }

    pub fn noise_radius(&self) -> f64 {
        self.noise_radius
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `‖A x − b‖₂`.
    pub fn residual_norm(&self, x: &DVector<f64>) -> f64 {
        let r = &self.a * x - &self.b;
        l2_norm(r.as_slice())
    }

    /// Default feasibility tolerance `scale · (1 + ‖b‖₂)`.
    pub fn feasibility_tolerance(&self, scale: f64) -> f64 {
        scale * (1.0 + l2_norm(self.b.as_slice()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = InstanceHeader {
            id: self.id.clone(),
            m: self.m(),
            n: self.n(),
            noise_radius: self.noise_radius,
            ground_truth: self.ground_truth.as_ref().map(|x| {
                let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
                let values = support.iter().map(|&i| x[i]).collect();
                GroundTruth { support, values }
            }),
        };
        let path = dir.join(HEADER_FILE);
        let json = serde_json::to_string_pretty(&header)?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

        let mut text = String::new();
        for i in 0..self.m() {
            let row: Vec<String> = (0..self.n()).map(|j| fmt_f64(self.a[(i, j)])).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let path = dir.join(MATRIX_FILE);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;

        let text: String = self.b.iter().map(|v| fmt_f64(*v) + "\n").collect();
        let path = dir.join(OBSERVATION_FILE);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(HEADER_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let header: InstanceHeader =
            serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;

        let path = dir.join(MATRIX_FILE);
        let rows = read_csv_rows(&path)?;
        if rows.len() != header.m || rows.iter().any(|r| r.len() != header.n) {
            return Err(Error::format(
                &path,
                format!("expected {} rows of {} values", header.m, header.n),
            ));
        }
        let a = DMatrix::from_row_iterator(header.m, header.n, rows.into_iter().flatten());

        let path = dir.join(OBSERVATION_FILE);
        let rows = read_csv_rows(&path)?;
        if rows.len() != header.m || rows.iter().any(|r| r.len() != 1) {
            return Err(Error::format(
                &path,
                format!("expected {} single values", header.m),
            ));
        }
        let b = DVector::from_iterator(header.m, rows.into_iter().flatten());

        let ground_truth = match header.ground_truth {
            None => None,
            Some(gt) => {
                let path = dir.join(HEADER_FILE);
                if gt.support.len() != gt.values.len() {
                    return Err(Error::format(&path, "support and values differ in length"));
                }
                let mut x = DVector::zeros(header.n);
                for (&i, &v) in gt.support.iter().zip(&gt.values) {
                    if i >= header.n {
                        return Err(Error::format(
                            &path,
                            format!("support index {i} out of range"),
                        ));
                    }
                    x[i] = v;
                }
                Some(x)
            }
        };
        Self::new(a, b, ground_truth, header.noise_radius, header.id)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceHeader {
    id: String,
    m: usize,
    n: usize,
    noise_radius: f64,
    ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GroundTruth {
    support: Vec<usize>,
    values: Vec<f64>,
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        })?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::format(path, format!("line {}: cannot parse `{s}`", line + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Sparsity description of a planted signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityProfile {
    k: usize,
    support: Vec<usize>,
    dynamic_range: (f64, f64),
}

impl SparsityProfile {
    pub fn new(support: Vec<usize>, n: usize, dynamic_range: (f64, f64)) -> Result<Self> {
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() || support.is_empty() {
            return Err(Error::InvalidParameter(
                "support must be a nonempty set of distinct indices".into(),
            ));
        }
        if sorted.last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidParameter(format!(
                "support exceeds dimension {n}"
            )));
        }
        let (low, high) = dynamic_range;
        if !(low > 0.0 && low <= high && high.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dynamic range must satisfy 0 < low <= high, got ({low}, {high})"
            )));
        }
        Ok(Self {
            k: sorted.len(),
            support: sorted,
            dynamic_range,
        })
    }

    /// Profile of a given vector; the dynamic range is its min/max nonzero magnitude.
    pub fn of(x: &[f64]) -> Result<Self> {
        let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        let low = support
            .iter()
            .map(|&i| x[i].abs())
            .fold(f64::INFINITY, f64::min);
        let high = support.iter().map(|&i| x[i].abs()).fold(0.0, f64::max);
        Self::new(support, x.len(), (low, high))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn dynamic_range(&self) -> (f64, f64) {
        self.dynamic_range
    }
}
