//! Incomplete pairwise-comparison matrices and priority vectors.
//!
//! A missing comparison is stored as an exact `0.0`. Every present entry must
//! have its reciprocal present on the other side of the diagonal; validation
//! rejects violations instead of repairing them.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for `a_ij * a_ji == 1`.
pub const RECIPROCITY_TOL: f64 = 1e-9;

/// Conventional judgment range; values outside it only produce a warning.
pub const SAATY_MIN: f64 = 1.0 / 9.0;
pub const SAATY_MAX: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` files are JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

/// A validated, possibly incomplete, reciprocal pairwise-comparison matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompletePcm {
    n: usize,
    entries: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl IncompletePcm {
    /// Validates a raw square array. Zero entries are missing comparisons.
    pub fn validate(raw: &[Vec<f64>]) -> Result<Self> {
        let n = raw.len();
        for (row, r) in raw.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NonSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
        }
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        for (i, r) in raw.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry(i, j));
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry(i, j));
                }
            }
        }
        for (i, r) in raw.iter().enumerate() {
            if r[i] != 1.0 {
                return Err(Error::BadDiagonal(i));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (raw[i][j], raw[j][i]);
                match (a > 0.0, b > 0.0) {
                    (false, false) => {}
                    (true, true) => {
                        if ((a * b) - 1.0).abs() > RECIPROCITY_TOL {
                            return Err(Error::ReciprocityViolation(i, j));
                        }
                    }
                    (true, false) => return Err(Error::OneSidedComparison(i, j)),
                    (false, true) => return Err(Error::OneSidedComparison(j, i)),
                }
            }
        }
        Ok(Self {
            n,
            entries: raw.iter().flatten().copied().collect(),
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::LabelMismatch {
                labels: labels.len(),
                n: self.n,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Builds a PCM from a ratio for every listed pair `(i, j, a_ij)`; the
    /// reciprocal is filled in. Intended for generated and fixture data.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut raw = vec![vec![0.0; n]; n];
        for (i, row) in raw.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for &(i, j, a) in pairs {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: i.max(j) + 1,
                });
            }
            raw[i][j] = a;
            raw[j][i] = 1.0 / a;
        }
        Self::validate(&raw)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn is_present(&self, i: usize, j: usize) -> bool {
        i != j && self.get(i, j) > 0.0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Unordered compared pairs `(i, j)` with `i < j`, in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.is_present(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn pair_count(&self) -> usize {
        self.pairs().len()
    }

    pub fn is_complete(&self) -> bool {
        self.pair_count() == self.n * (self.n - 1) / 2
    }

    /// Present entries outside `[1/9, 9]`, as `(i, j)` with `i < j`.
    pub fn saaty_outliers(&self) -> Vec<(usize, usize)> {
        self.pairs()
            .into_iter()
            .filter(|&(i, j)| {
                let a = self.get(i, j);
                !(SAATY_MIN * (1.0 - 1e-12)..=SAATY_MAX * (1.0 + 1e-12)).contains(&a)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "sum-one")]
    SumOne,
    /// The first component is fixed to one.
    #[serde(rename = "component-one-fixed")]
    ComponentOneFixed,
}

impl Normalization {
    pub fn tag(self) -> &'static str {
        match self {
            Normalization::SumOne => "sum-one",
            Normalization::ComponentOneFixed => "component-one-fixed",
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sum-one" => Ok(Normalization::SumOne),
            "component-one-fixed" => Ok(Normalization::ComponentOneFixed),
            other => Err(Error::InvalidParameter(format!("unknown normalization `{other}`"))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Positive weight vector together with its logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityVector {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    normalization: Normalization,
}

impl PriorityVector {
    /// Normalizes strictly positive weights.
    pub fn from_weights(weights: &[f64], normalization: Normalization) -> Result<Self> {
        if let Some(i) = weights.iter().position(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::NonPositiveWeights(i));
        }
        let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        Self::from_log_weights(&logs, normalization)
    }

    /// Exponentiates log-weights and normalizes; the stored log-weights are
    /// shifted so that `exp(log_weights) == weights`.
    pub fn from_log_weights(log_weights: &[f64], normalization: Normalization) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::TooSmall(0));
        }
        if let Some(i) = log_weights.iter().position(|y| !y.is_finite()) {
            return Err(Error::NonPositiveWeights(i));
        }
        let shift = match normalization {
            Normalization::SumOne => {
                let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = log_weights.iter().map(|y| (y - max).exp()).sum();
                max + sum.ln()
            }
            Normalization::ComponentOneFixed => log_weights[0],
        };
        let log_weights: Vec<f64> = log_weights.iter().map(|y| y - shift).collect();
        let mut weights: Vec<f64> = log_weights.iter().map(|y| y.exp()).collect();
        match normalization {
            Normalization::SumOne => {
                let s: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= s);
            }
            Normalization::ComponentOneFixed => weights[0] = 1.0,
        }
        Ok(Self {
            weights,
            log_weights,
            normalization,
        })
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_log_weights(&vec![0.0; n], Normalization::SumOne).expect("uniform vector is valid")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn renormalized(&self, normalization: Normalization) -> Self {
        Self::from_log_weights(&self.log_weights, normalization).expect("renormalizing a valid vector cannot fail")
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest text of `x` rounded to 12 significant digits; exponent form
/// outside `[1e-5, 1e12)`.
pub fn fmt12(x: f64) -> String {
    let r = round_sig12(x);
    if r == 0.0 {
        "0".to_string()
    } else if r.is_finite() && (r.abs() < 1e-5 || r.abs() >= 1e12) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn parse_cell(cell: &str) -> std::result::Result<f64, String> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(0.0);
    }
    let value = match cell.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("bad numerator `{num}`"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("bad denominator `{den}`"))?;
            if den == 0.0 {
                return Err("zero denominator".into());
            }
            num / den
        }
        None => cell.parse().map_err(|_| format!("bad number `{cell}`"))?,
    };
    if value.is_nan() {
        return Err("NaN is not a valid entry".into());
    }
    Ok(value)
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    entries: Vec<Vec<f64>>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Reads a file, mapping a missing path to `FileNotFound`.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })
}

pub fn read_matrix(path: &Path) -> Result<IncompletePcm> {
    parse_matrix(&read_text(path)?, Format::from_path(path))
}

pub fn read_weights(path: &Path) -> Result<PriorityVector> {
    parse_weights(&read_text(path)?, Format::from_path(path))
}

/// Parses a matrix from CSV (decimals or `a/b`, empty or `0` = missing,
/// `#` starts a comment line) or JSON (`{"n", "labels", "entries"}`).
pub fn parse_matrix(text: &str, format: Format) -> Result<IncompletePcm> {
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .comment(Some(b'#'))
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut raw = Vec::new();
            for record in rdr.records() {
                let record = record.map_err(|e| Error::Parse {
                    line: e.position().map_or(0, |p| p.line() as usize),
                    column: 0,
                    message: e.to_string(),
                })?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                let row = record
                    .iter()
                    .enumerate()
                    .map(|(col, cell)| {
                        parse_cell(cell).map_err(|message| Error::Parse {
                            line,
                            column: col + 1,
                            message,
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                raw.push(row);
            }
            IncompletePcm::validate(&raw)
        }
        Format::Json => {
            let doc: MatrixDoc = serde_json::from_str(text).map_err(json_error)?;
            if doc.entries.len() != doc.n {
                return Err(Error::DimensionMismatch {
                    expected: doc.n,
                    got: doc.entries.len(),
                });
            }
            let pcm = IncompletePcm::validate(&doc.entries)?;
            match doc.labels {
                Some(labels) => pcm.with_labels(labels),
                None => Ok(pcm),
            }
        }
    }
}

pub fn serialize_matrix(pcm: &IncompletePcm, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for i in 0..pcm.n() {
                let row: Vec<String> = (0..pcm.n()).map(|j| fmt12(pcm.get(i, j))).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let doc = MatrixDoc {
                n: pcm.n(),
                labels: pcm.labels.clone(),
                entries: pcm
                    .rows()
                    .into_iter()
                    .map(|r| r.into_iter().map(round_sig12).collect())
                    .collect(),
            };
            serde_json::to_string_pretty(&doc).expect("matrix serializes") + "\n"
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WeightsDoc {
    normalization: Normalization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    weights: Vec<f64>,
}

/// Deterministic text form of a weight vector at 12 significant digits.
pub fn serialize_weights(w: &PriorityVector, labels: Option<&[String]>, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::from("alternative,weight,normalization\n");
            for (i, &x) in w.weights().iter().enumerate() {
                let name = labels
                    .and_then(|l| l.get(i).cloned())
                    .unwrap_or_else(|| (i + 1).to_string());
                out.push_str(&format!("{name},{},{}\n", fmt12(x), w.normalization()));
            }
            out
        }
        Format::Json => {
            let doc = WeightsDoc {
                normalization: w.normalization(),
                labels: labels.map(<[String]>::to_vec),
                weights: w.weights().iter().copied().map(round_sig12).collect(),
            };
            serde_json::to_string_pretty(&doc).expect("weights serialize") + "\n"
        }
    }
}

/// Reads a weight vector. CSV accepts either the `serialize_weights` layout
/// or a bare column of numbers; values are renormalized to the stored tag.
pub fn parse_weights(text: &str, format: Format) -> Result<PriorityVector> {
    let (weights, normalization) = match format {
        Format::Json => {
            let doc: WeightsDoc = serde_json::from_str(text).map_err(json_error)?;
            (doc.weights, doc.normalization)
        }
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .comment(Some(b'#'))
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut weights = Vec::new();
            let mut normalization = Normalization::SumOne;
            for record in rdr.records() {
                let record = record.map_err(|e| Error::Parse {
                    line: e.position().map_or(0, |p| p.line() as usize),
                    column: 0,
                    message: e.to_string(),
                })?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                if record.get(0) == Some("alternative") {
                    continue;
                }
                let (col, cell) = if record.len() >= 2 {
                    (2, &record[1])
                } else {
                    (1, &record[0])
                };
                let value = parse_cell(cell).map_err(|message| Error::Parse {
                    line,
                    column: col,
                    message,
                })?;
                if let Some(tag) = record.get(2) {
                    normalization = tag.parse()?;
                }
                weights.push(value);
            }
            (weights, normalization)
        }
    };
    PriorityVector::from_weights(&weights, normalization)
}
