//! File formats: JSON models, CSV sample and covariance matrices, and
//! canonical JSON output.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::stable::StableFamily;

/// On-disk form of a [`SpectralModel`]. `nu` is stored as `d` rows.
///
/// `family` may be omitted, in which case the model is Frechet with the
/// given `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub alpha: f64,
    pub d: usize,
    pub n: usize,
    pub nu: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<StableFamily>,
}

impl ModelFile {
    pub fn from_model(m: &SpectralModel) -> Self {
        Self {
            alpha: m.alpha(),
            d: m.d(),
            n: m.n(),
            nu: (0..m.d()).map(|i| m.nu().row(i).iter().copied().collect()).collect(),
            mu: m.mu().to_vec(),
            family: Some(m.family()),
        }
    }

    /// The model exactly as written (no normalization or merging).
    pub fn into_model(self) -> Result<SpectralModel> {
        let family = match self.family {
            Some(f) => {
                if f.alpha() != Some(self.alpha) {
                    return Err(Error::Data(format!("alpha {} disagrees with family {f:?}", self.alpha)));
                }
                f
            }
            None => StableFamily::Frechet { alpha: self.alpha },
        };
        if self.nu.len() != self.d {
            return Err(Error::Data(format!(
                "nu has {} rows, expected d = {}",
                self.nu.len(),
                self.d
            )));
        }
        if let Some((i, row)) = self.nu.iter().enumerate().find(|(_, r)| r.len() != self.n) {
            return Err(Error::Data(format!(
                "row {i} of nu has {} entries, expected n = {}",
                row.len(),
                self.n
            )));
        }
        if self.mu.len() != self.n {
            return Err(Error::Data(format!(
                "mu has {} entries, expected n = {}",
                self.mu.len(),
                self.n
            )));
        }
        let nu = DMatrix::from_fn(self.d, self.n, |i, j| self.nu[i][j]);
        SpectralModel::new(nu, self.mu, family)
    }
}

pub fn read_model_json<R: Read>(r: R) -> Result<SpectralModel> {
    let file: ModelFile = serde_json::from_reader(r).map_err(|e| Error::Data(format!("model JSON: {e}")))?;
    file.into_model()
}

/// Pretty JSON with object keys sorted, terminated by a newline.
///
/// Re-serializing parsed output reproduces it byte for byte.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Internal(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// What a CSV cell must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellRule {
    Finite,
    Positive,
}

/// Reads a numeric CSV matrix. A first line containing any non-numeric cell
/// is taken as a header. Errors name the 1-based line.
pub fn read_matrix_csv<R: Read>(r: R, rule: CellRule) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("CSV: {e}")))?;
        let line = rec.position().map_or(idx as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if idx == 0 => {
                width = Some(rec.len());
                continue;
            }
            Err(_) => {
                let bad = rec.iter().find(|c| c.parse::<f64>().is_err()).unwrap_or("");
                return Err(Error::Data(format!("line {line}: not a number: {bad:?}")));
            }
        };
        if let Some(&x) = row.iter().find(|x| !x.is_finite()) {
            return Err(Error::Data(format!("line {line}: non-finite value {x}")));
        }
        if rule == CellRule::Positive {
            if let Some(&x) = row.iter().find(|&&x| x <= 0.0) {
                return Err(Error::Data(format!("line {line}: nonpositive value {x}")));
            }
        }
        match width {
            Some(w) if w != row.len() => {
                return Err(Error::Data(format!(
                    "line {line}: expected {w} columns, found {}",
                    row.len()
                )))
            }
            _ => width = Some(row.len()),
        }
        rows.push(row);
    }
    let d = width.unwrap_or(0);
    Ok(DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]))
}

/// Writes a matrix with header `x1,..,xd`; an empty matrix yields just the header.
pub fn write_matrix_csv<W: Write>(w: W, data: &DMatrix<f64>, prefix: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let header: Vec<String> = (1..=data.ncols()).map(|i| format!("{prefix}{i}")).collect();
    let io = |e: csv::Error| Error::Data(format!("CSV write: {e}"));
    wtr.write_record(&header).map_err(io)?;
    for r in 0..data.nrows() {
        wtr.write_record(data.row(r).iter().map(|x| x.to_string()))
            .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::Data(format!("CSV write: {e}")))
}
