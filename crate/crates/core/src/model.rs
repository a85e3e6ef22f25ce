//! Discrete multivariate models `X = (+)_j nu_{.j} W_j` with independent
//! drivers `W_j ~ F_{mu_j}`, and their angular (spectral) measures.
//!
//! For the Frechet family the joint law is
//! `P(X <= x) = exp(-sum_j (max_i nu_ij / x_i)^alpha mu_j^alpha)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::semiring::{SemiMatrix, SemiringSpec};
use crate::stable::{sample_frechet, StableFamily};

/// Columns whose entries differ by at most this (after sup-norm
/// normalization) are merged by [`build_model`].
pub const MERGE_TOL: f64 = 1e-9;

/// `||v||_q` for `q >= 1`; `q = inf` is the sup norm.
pub fn q_norm(v: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        v.iter().fold(0.0, |m, &x| m.max(x.abs()))
    } else if q == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else {
        v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("norm index q must be >= 1, got {q}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralModel {
    nu: DMatrix<f64>,
    mu: Vec<f64>,
    family: StableFamily,
}

impl SpectralModel {
    /// A validated model in the representation given, without normalizing.
    ///
    /// Zero columns and zero weights are allowed here; joint representations
    /// of several variables on common drivers need them.
    pub fn new(nu: DMatrix<f64>, mu: Vec<f64>, family: StableFamily) -> Result<Self> {
        let family = family.validated()?;
        if !family.is_scalar() {
            return Err(Error::FamilyMismatch(format!(
                "spectral models need a scalar family, got {family:?}"
            )));
        }
        if nu.nrows() == 0 {
            return Err(Error::ShapeMismatch("model dimension d must be >= 1".into()));
        }
        if nu.ncols() != mu.len() {
            return Err(Error::ShapeMismatch(format!(
                "nu has {} columns but mu has {} entries",
                nu.ncols(),
                mu.len()
            )));
        }
        let s = family.semiring();
        for &x in nu.iter() {
            s.validate(x)?;
        }
        for &w in &mu {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidParameter(format!("weights must be >= 0, got {w}")));
            }
        }
        Ok(Self { nu, mu, family })
    }

    /// Builds from row-major atom entries (`d` rows, `mu.len()` columns).
    pub fn from_row_major(d: usize, nu: &[f64], mu: Vec<f64>, family: StableFamily) -> Result<Self> {
        let n = mu.len();
        if nu.len() != d * n {
            return Err(Error::ShapeMismatch(format!(
                "{} atom entries for d = {d}, n = {n}",
                nu.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, n, nu), mu, family)
    }

    pub fn nu(&self) -> &DMatrix<f64> {
        &self.nu
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn family(&self) -> StableFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.family.alpha().expect("scalar family")
    }

    pub fn d(&self) -> usize {
        self.nu.nrows()
    }

    pub fn n(&self) -> usize {
        self.nu.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.nu.column(j).iter().copied().collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|j| self.column(j)).collect()
    }

    /// Row-major copy of the atom matrix.
    pub fn nu_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d() * self.n());
        for i in 0..self.d() {
            out.extend(self.nu.row(i).iter());
        }
        out
    }

    pub(crate) fn require_frechet(&self) -> Result<()> {
        if self.family.is_frechet() {
            Ok(())
        } else {
            Err(Error::FamilyMismatch(format!(
                "operation needs a Frechet model, got {:?}",
                self.family
            )))
        }
    }

    pub(crate) fn require_frechet_unit(&self) -> Result<()> {
        self.require_frechet()?;
        if self.alpha() != 1.0 {
            return Err(Error::Unsupported(format!(
                "operation is defined for alpha = 1 only, got {}",
                self.alpha()
            )));
        }
        Ok(())
    }

    /// True when every column is nonzero and carries positive weight.
    pub(crate) fn require_nondegenerate(&self) -> Result<()> {
        if self.n() == 0 {
            return Err(Error::EmptyModel);
        }
        for j in 0..self.n() {
            if self.mu[j] <= 0.0 || self.nu.column(j).iter().all(|&x| x == 0.0) {
                return Err(Error::ZeroVector(format!("atom {j} is degenerate")));
            }
        }
        Ok(())
    }
}

impl Serialize for SpectralModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        crate::io::ModelFile::from_model(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpectralModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = crate::io::ModelFile::deserialize(deserializer)?;
        file.into_model().map_err(serde::de::Error::custom)
    }
}

/// Normalizes columns to `||nu_{.j}||_inf = 1`, absorbing the scale into
/// `mu_j`, and merges duplicate columns with `mu <- (mu_1^a + mu_2^a)^(1/a)`.
pub fn build_model(nu: DMatrix<f64>, mu: Vec<f64>, family: StableFamily) -> Result<SpectralModel> {
    let raw = SpectralModel::new(nu, mu, family)?;
    let (d, n) = (raw.d(), raw.n());
    let alpha = raw.alpha();
    if n == 0 {
        return Err(Error::EmptyModel);
    }
    for i in 0..d {
        if raw.nu.row(i).iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroVector(format!("row {i} of nu is zero")));
        }
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut weights: Vec<f64> = Vec::with_capacity(n);
    for j in 0..n {
        let col = raw.column(j);
        let c = q_norm(&col, f64::INFINITY);
        if c == 0.0 {
            return Err(Error::ZeroVector(format!("column {j} of nu is zero")));
        }
        if raw.mu[j] <= 0.0 {
            return Err(Error::InvalidParameter(format!("weight {j} must be positive")));
        }
        let col: Vec<f64> = col.iter().map(|x| x / c).collect();
        let w = c * raw.mu[j];
        match cols
            .iter()
            .position(|o| o.iter().zip(&col).all(|(a, b)| (a - b).abs() <= MERGE_TOL))
        {
            Some(k) => weights[k] = (weights[k].powf(alpha) + w.powf(alpha)).powf(1.0 / alpha),
            None => {
                cols.push(col);
                weights.push(w);
            }
        }
    }
    let nu = DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i]);
    SpectralModel::new(nu, weights, family)
}

/// Re-normalizes an existing model.
pub fn normalize(m: &SpectralModel) -> Result<SpectralModel> {
    build_model(m.nu.clone(), m.mu.clone(), m.family)
}

/// The model of `xi X` (semiring matrix product on the atoms). Atoms mapped
/// to zero are dropped before normalization.
pub fn linear_transform(xi: &SemiMatrix, m: &SpectralModel) -> Result<SpectralModel> {
    let s = m.family.semiring();
    if xi.semiring() != s {
        return Err(Error::FamilyMismatch(format!(
            "{} map applied to a {} model",
            xi.semiring().name(),
            s.name()
        )));
    }
    if xi.cols() != m.d() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} map applied to a model of dimension {}",
            xi.rows(),
            xi.cols(),
            m.d()
        )));
    }
    let image = transform_atoms(xi, m);
    let keep: Vec<usize> = (0..m.n())
        .filter(|&j| image.column(j).iter().any(|&x| x != 0.0))
        .collect();
    let nu = DMatrix::from_fn(xi.rows(), keep.len(), |i, j| image[(i, keep[j])]);
    let mu = keep.iter().map(|&j| m.mu[j]).collect();
    build_model(nu, mu, m.family)
}

/// `xi (.) nu` without normalization.
pub fn transform_atoms(xi: &SemiMatrix, m: &SpectralModel) -> DMatrix<f64> {
    let s = xi.semiring();
    DMatrix::from_fn(xi.rows(), m.n(), |i, j| {
        s.sum((0..m.d()).map(|l| s.mul(xi.get(i, l), m.nu[(l, j)])))
    })
}

/// `P(X <= x)` for a Frechet model. Entries of `x` may be `+inf`.
pub fn max_stable_cdf(m: &SpectralModel, x: &[f64]) -> Result<f64> {
    m.require_frechet()?;
    if x.len() != m.d() {
        return Err(Error::ShapeMismatch(format!(
            "point of length {} for a model of dimension {}",
            x.len(),
            m.d()
        )));
    }
    if let Some(&bad) = x.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(format!("cdf argument must be > 0, got {bad}")));
    }
    let alpha = m.alpha();
    let exponent: f64 = (0..m.n())
        .map(|j| {
            let r = (0..m.d()).fold(0.0f64, |acc, i| acc.max(m.nu[(i, j)] / x[i]));
            (r * m.mu[j]).powf(alpha)
        })
        .sum();
    Ok((-exponent).exp())
}

/// `lambda_i = sum_j nu_ij mu_j`; margin `i` has cdf `exp(-lambda_i / x)`.
pub fn scale_coefficients(m: &SpectralModel) -> Result<Vec<f64>> {
    m.require_frechet_unit()?;
    Ok((0..m.d())
        .map(|i| (0..m.n()).map(|j| m.nu[(i, j)] * m.mu[j]).sum())
        .collect())
}

/// A discrete measure on `{u >= 0 : ||u||_q = 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularMeasure {
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub q: f64,
}

impl AngularMeasure {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.atoms.first().map_or(0, Vec::len)
    }

    /// `int u_i dS` for every coordinate.
    pub fn coordinate_means(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            for (o, &x) in out.iter_mut().zip(a) {
                *o += w * x;
            }
        }
        out
    }

    /// The alpha = 1 Frechet model with these atoms and masses, normalized.
    pub fn to_model(&self) -> Result<SpectralModel> {
        let d = self.dim();
        if self.atoms.is_empty() {
            return Err(Error::EmptyModel);
        }
        let nu = DMatrix::from_fn(d, self.atoms.len(), |i, j| self.atoms[j][i]);
        build_model(nu, self.weights.clone(), StableFamily::Frechet { alpha: 1.0 })
    }
}

/// Atoms `nu_j / ||nu_j||_q` with masses `||nu_j||_q mu_j`. Zero columns
/// carry no mass and are skipped.
pub fn to_angular_measure(m: &SpectralModel, q: f64) -> Result<AngularMeasure> {
    m.require_frechet_unit()?;
    check_q(q)?;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for j in 0..m.n() {
        let col = m.column(j);
        let r = q_norm(&col, q);
        if r == 0.0 || m.mu[j] == 0.0 {
            continue;
        }
        atoms.push(col.iter().map(|x| x / r).collect());
        weights.push(r * m.mu[j]);
    }
    Ok(AngularMeasure { atoms, weights, q })
}

/// `count` rows of `X_i = max_j nu_ij W_j`, `W_j ~ Frechet(mu_j, alpha)`.
pub fn sample_model<R: Rng + ?Sized>(m: &SpectralModel, count: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    m.require_frechet()?;
    let (d, n, alpha) = (m.d(), m.n(), m.alpha());
    let mut out = DMatrix::zeros(count, d);
    let mut w = vec![0.0; n];
    for r in 0..count {
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = sample_frechet(m.mu[j], alpha, rng);
        }
        for i in 0..d {
            out[(r, i)] = (0..n).fold(0.0f64, |acc, j| acc.max(m.nu[(i, j)] * w[j]));
        }
    }
    Ok(out)
}

/// The semiring of a model's atom algebra.
pub fn model_semiring(m: &SpectralModel) -> SemiringSpec {
    m.family.semiring()
}
