//! The variation `[[.]]`, the semi-scalar product and the associated
//! semi-metric, evaluated on spectral representations.
//!
//! For scalar families `[[mu]] = |mu|^alpha`, and the variation of a vector
//! is the sum over its components. On a model this gives
//! `[[nu W]] = sum_ij |nu_ij mu_j|^alpha`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::semiring::SemiringSpec;
use crate::stable::{ScaleParam, StableFamily};

/// How the variation of a vector is formed from its components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VectorRule {
    /// Sum of the component variations. Used by every solver.
    #[default]
    ComponentSum,
    /// `sum_j mu_j^alpha max_i |nu_ij|^alpha` (the extremal coefficient for
    /// Frechet alpha = 1). Display only; the projection loss it induces
    /// degenerates.
    SupNorm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationSpec {
    pub family: StableFamily,
    pub rule: VectorRule,
}

impl VariationSpec {
    pub fn new(family: StableFamily) -> Result<Self> {
        Ok(Self {
            family: family.validated()?,
            rule: VectorRule::ComponentSum,
        })
    }

    pub fn with_rule(mut self, rule: VectorRule) -> Self {
        self.rule = rule;
        self
    }

    /// `[[1 (+) 1]]`: 1 in max-times, `2^alpha` for sum-stable laws.
    pub fn unit_sum_variation(&self) -> Result<f64> {
        match self.family {
            StableFamily::Frechet { .. } => Ok(1.0),
            StableFamily::SymAlphaStable { alpha } => Ok(2f64.powf(alpha)),
            // [[2A]] = 4 [[A]] under the trace variation
            StableFamily::GaussianMatrix { .. } | StableFamily::RegressionLk { .. } => Ok(4.0),
        }
    }

    /// `[[1 (+) 1]] - 2`, rejecting the degenerate Cauchy case.
    pub fn denominator(&self) -> Result<f64> {
        let den = self.unit_sum_variation()? - 2.0;
        if den == 0.0 {
            return Err(Error::DegenerateDenominator(format!("{:?}", self.family)));
        }
        Ok(den)
    }
}

/// `|mu|^alpha` for scalar families, `tr(A A^T)` for matrix families.
pub fn variation_scalar(v: &VariationSpec, mu: &ScaleParam) -> Result<f64> {
    mu.validate_for(v.family)?;
    match mu {
        ScaleParam::Scalar(s) => Ok(s.abs().powf(v.family.alpha().unwrap())),
        ScaleParam::Matrix(a) => Ok(frobenius_sq(a)),
    }
}

fn frobenius_sq(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn check_family(v: &VariationSpec, m: &SpectralModel) -> Result<f64> {
    if v.family != m.family() {
        return Err(Error::FamilyMismatch(format!(
            "variation for {:?} applied to a {:?} model",
            v.family,
            m.family()
        )));
    }
    Ok(m.alpha())
}

/// Variation of a model with atoms `nu` on weights `mu`.
fn variation_of(nu: &DMatrix<f64>, mu: &[f64], alpha: f64, rule: VectorRule) -> f64 {
    let term = |i: usize, j: usize| (nu[(i, j)] * mu[j]).abs().powf(alpha);
    match rule {
        VectorRule::ComponentSum => (0..nu.ncols())
            .map(|j| (0..nu.nrows()).map(|i| term(i, j)).sum::<f64>())
            .sum(),
        VectorRule::SupNorm => (0..nu.ncols())
            .map(|j| (0..nu.nrows()).map(|i| term(i, j)).fold(0.0, f64::max))
            .sum(),
    }
}

pub fn variation_model(v: &VariationSpec, m: &SpectralModel) -> Result<f64> {
    let alpha = check_family(v, m)?;
    Ok(variation_of(m.nu(), m.mu(), alpha, v.rule))
}

/// Checks that two models are written on the same drivers.
fn check_joint(v: &VariationSpec, a: &SpectralModel, b: &SpectralModel) -> Result<f64> {
    let alpha = check_family(v, a)?;
    check_family(v, b)?;
    if a.d() != b.d() || a.n() != b.n() {
        return Err(Error::ShapeMismatch(format!(
            "joint representation needs equal shapes, got {}x{} and {}x{}",
            a.d(),
            a.n(),
            b.d(),
            b.n()
        )));
    }
    if a.mu() != b.mu() {
        return Err(Error::ShapeMismatch(
            "joint representation needs identical driver weights".into(),
        ));
    }
    Ok(alpha)
}

fn semiring_add(s: SemiringSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.zip_map(b, |x, y| s.add(x, y))
}

/// The model of `X (+) Y` on the shared drivers.
pub fn joint_sum(v: &VariationSpec, a: &SpectralModel, b: &SpectralModel) -> Result<SpectralModel> {
    check_joint(v, a, b)?;
    let sum = semiring_add(a.family().semiring(), a.nu(), b.nu());
    SpectralModel::new(sum, a.mu().to_vec(), a.family())
}

/// `<X, Y> = ([[X (+) Y]] - [[X]] - [[Y]]) / ([[1 (+) 1]] - 2)`.
pub fn semi_scalar(v: &VariationSpec, a: &SpectralModel, b: &SpectralModel) -> Result<f64> {
    let alpha = check_joint(v, a, b)?;
    let den = v.denominator()?;
    let sum = semiring_add(a.family().semiring(), a.nu(), b.nu());
    let vs = variation_of(&sum, a.mu(), alpha, v.rule);
    let va = variation_of(a.nu(), a.mu(), alpha, v.rule);
    let vb = variation_of(b.nu(), b.mu(), alpha, v.rule);
    Ok((vs - va - vb) / den)
}

/// `rho(X, Y) = [[X]] + [[Y]] - 2 <X, Y>`.
pub fn assoc_semi_metric(v: &VariationSpec, a: &SpectralModel, b: &SpectralModel) -> Result<f64> {
    let va = variation_model(v, a)?;
    let vb = variation_model(v, b)?;
    let ab = semi_scalar(v, a, b)?;
    Ok(va + vb - 2.0 * ab)
}

/// `sum_ij min(nu_A, nu_B) mu_j` for Frechet alpha = 1.
pub fn frechet_semi_scalar_closed_form(a: &SpectralModel, b: &SpectralModel) -> f64 {
    let (na, nb, mu) = (a.nu(), b.nu(), a.mu());
    (0..na.ncols())
        .map(|j| (0..na.nrows()).map(|i| na[(i, j)].min(nb[(i, j)])).sum::<f64>() * mu[j])
        .sum()
}

/// `sum_j mu_j ||nu_A_j - nu_B_j||_1` for Frechet alpha = 1.
pub fn frechet_semi_metric_closed_form(a: &SpectralModel, b: &SpectralModel) -> f64 {
    let (na, nb, mu) = (a.nu(), b.nu(), a.mu());
    (0..na.ncols())
        .map(|j| (0..na.nrows()).map(|i| (na[(i, j)] - nb[(i, j)]).abs()).sum::<f64>() * mu[j])
        .sum()
}
