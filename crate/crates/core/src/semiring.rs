//! Arithmetic over the two semirings used throughout the crate.
//!
//! * `MaxTimes`: `([0, inf), max, *)`, zero `0`, one `1`. Hosts max-stable models.
//! * `PlusTimes`: `(R, +, *)`, zero `0`, one `1`. Hosts the Gaussian and
//!   regression computations.
//!
//! Elements are plain `f64`. Max-times operations introduce no rounding beyond
//! IEEE multiply/divide, so reconstruction checks compare with [`approx_eq`],
//! which is exact whenever the inputs are representable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for semiring equality checks.
pub const REL_TOL: f64 = 1e-12;

/// `a == b` up to [`REL_TOL`] relative error.
pub fn approx_eq(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemiringSpec {
    MaxTimes,
    PlusTimes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreorderMode {
    /// `a <= b` iff some `g` has `a (+) g = b`.
    Canonical,
    /// `a <= b` iff some `g` has `a (+) g * b = b`.
    Strict,
}

impl SemiringSpec {
    pub fn name(self) -> &'static str {
        match self {
            SemiringSpec::MaxTimes => "max-times",
            SemiringSpec::PlusTimes => "plus-times",
        }
    }

    pub fn zero(self) -> f64 {
        0.0
    }

    pub fn one(self) -> f64 {
        1.0
    }

    pub fn is_valid(self, a: f64) -> bool {
        match self {
            SemiringSpec::MaxTimes => a.is_finite() && a >= 0.0,
            SemiringSpec::PlusTimes => a.is_finite(),
        }
    }

    pub fn validate(self, a: f64) -> Result<f64> {
        if self.is_valid(a) {
            Ok(a)
        } else {
            Err(Error::InvalidElement {
                value: a,
                semiring: self.name(),
            })
        }
    }

    /// Semiring addition without validation.
    #[inline]
    pub fn add(self, a: f64, b: f64) -> f64 {
        match self {
            SemiringSpec::MaxTimes => a.max(b),
            SemiringSpec::PlusTimes => a + b,
        }
    }

    #[inline]
    pub fn mul(self, a: f64, b: f64) -> f64 {
        a * b
    }

    /// Semiring sum of an iterator; the empty sum is `zero`.
    pub fn sum<I: IntoIterator<Item = f64>>(self, items: I) -> f64 {
        items.into_iter().fold(self.zero(), |acc, x| self.add(acc, x))
    }

    pub fn eq(self, a: f64, b: f64) -> bool {
        approx_eq(a, b)
    }
}

/// `a (+) b` or `a * b`, after validating both operands.
pub fn element_combine(op: Op, a: f64, b: f64, s: SemiringSpec) -> Result<f64> {
    s.validate(a)?;
    s.validate(b)?;
    Ok(match op {
        Op::Add => s.add(a, b),
        Op::Mul => s.mul(a, b),
    })
}

/// Decides the canonical or strict preorder.
///
/// In max-times both preorders coincide with the usual `a <= b`. In
/// plus-times the canonical preorder is total (`g = b - a`), while the strict
/// one needs `a + g b = b`, solvable unless `b = 0 != a`.
pub fn preorder_leq(mode: PreorderMode, a: f64, b: f64, s: SemiringSpec) -> bool {
    match s {
        SemiringSpec::MaxTimes => a <= b,
        SemiringSpec::PlusTimes => match mode {
            PreorderMode::Canonical => true,
            PreorderMode::Strict => b != 0.0 || a == 0.0,
        },
    }
}

/// An element of `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiVector {
    entries: Vec<f64>,
    semiring: SemiringSpec,
}

impl SemiVector {
    pub fn new(entries: Vec<f64>, semiring: SemiringSpec) -> Result<Self> {
        for &e in &entries {
            semiring.validate(e)?;
        }
        Ok(Self { entries, semiring })
    }

    pub fn max_times(entries: Vec<f64>) -> Result<Self> {
        Self::new(entries, SemiringSpec::MaxTimes)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn semiring(&self) -> SemiringSpec {
        self.semiring
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0.0)
    }

    /// `c * self`, entrywise.
    pub fn scale(&self, c: f64) -> Result<Self> {
        self.semiring.validate(c)?;
        Ok(Self {
            entries: self.entries.iter().map(|&e| self.semiring.mul(c, e)).collect(),
            semiring: self.semiring,
        })
    }

    pub fn combine(&self, other: &SemiVector) -> Result<Self> {
        if self.semiring != other.semiring || self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot add vectors of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| self.semiring.add(a, b))
                .collect(),
            semiring: self.semiring,
        })
    }
}

/// A row-major `rows x cols` matrix over a semiring.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    semiring: SemiringSpec,
}

impl SemiMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, semiring: SemiringSpec) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        for &e in &data {
            semiring.validate(e)?;
        }
        Ok(Self {
            rows,
            cols,
            data,
            semiring,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], semiring: SemiringSpec) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat(), semiring)
    }

    pub fn identity(d: usize, semiring: SemiringSpec) -> Self {
        let mut data = vec![semiring.zero(); d * d];
        for i in 0..d {
            data[i * d + i] = semiring.one();
        }
        Self {
            rows: d,
            cols: d,
            data,
            semiring,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn semiring(&self) -> SemiringSpec {
        self.semiring
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// `(Hx)_i = (+)_j H_ij * x_j`.
pub fn mat_apply(h: &SemiMatrix, x: &SemiVector) -> Result<SemiVector> {
    if h.semiring != x.semiring {
        return Err(Error::ShapeMismatch(format!(
            "matrix over {} applied to vector over {}",
            h.semiring.name(),
            x.semiring.name()
        )));
    }
    if h.cols != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix applied to vector of length {}",
            h.rows,
            h.cols,
            x.len()
        )));
    }
    let s = h.semiring;
    let entries = (0..h.rows)
        .map(|i| s.sum(h.row(i).iter().zip(x.entries()).map(|(&a, &b)| s.mul(a, b))))
        .collect();
    Ok(SemiVector { entries, semiring: s })
}
