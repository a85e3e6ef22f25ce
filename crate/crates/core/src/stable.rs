//! Stable distribution families: scale parameters, the combination operator
//! `a o b` (law of the independent sum/max), scaling maps and samplers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semiring::SemiringSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StableFamily {
    /// `S_alpha(sigma, 0, 0)`, combined by `+`.
    SymAlphaStable { alpha: f64 },
    /// Frechet margins `exp(-(lambda/x)^alpha)`, combined by `max`.
    Frechet { alpha: f64 },
    /// `k`-variate centred Gaussian `A X_1`, scale parameter `A`.
    GaussianMatrix { k: usize },
    /// Linear regression matrices on `Z = (eps, X_1..X_{k-1})`.
    RegressionLk { k: usize },
}

impl StableFamily {
    pub fn frechet(alpha: f64) -> Result<Self> {
        Self::Frechet { alpha }.validated()
    }

    pub fn sym_alpha_stable(alpha: f64) -> Result<Self> {
        Self::SymAlphaStable { alpha }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            StableFamily::SymAlphaStable { alpha } => alpha > 0.0 && alpha <= 2.0,
            StableFamily::Frechet { alpha } => alpha > 0.0 && alpha.is_finite(),
            StableFamily::GaussianMatrix { k } => k >= 1,
            StableFamily::RegressionLk { k } => k >= 2,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!("invalid family parameters: {self:?}")))
        }
    }

    pub fn semiring(self) -> SemiringSpec {
        match self {
            StableFamily::Frechet { .. } => SemiringSpec::MaxTimes,
            _ => SemiringSpec::PlusTimes,
        }
    }

    /// Tail index for the scalar families.
    pub fn alpha(self) -> Option<f64> {
        match self {
            StableFamily::SymAlphaStable { alpha } | StableFamily::Frechet { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn is_scalar(self) -> bool {
        self.alpha().is_some()
    }

    pub fn is_frechet(self) -> bool {
        matches!(self, StableFamily::Frechet { .. })
    }

    fn matrix_dim(self) -> Option<usize> {
        match self {
            StableFamily::GaussianMatrix { k } | StableFamily::RegressionLk { k } => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScaleParam {
    Scalar(f64),
    Matrix(DMatrix<f64>),
}

impl ScaleParam {
    pub fn validate_for(&self, fam: StableFamily) -> Result<()> {
        match (self, fam.matrix_dim()) {
            (ScaleParam::Scalar(s), None) => {
                if s.is_finite() && *s >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("scale must be >= 0, got {s}")))
                }
            }
            (ScaleParam::Matrix(a), Some(k)) => {
                if a.nrows() != k || a.ncols() != k {
                    return Err(Error::ShapeMismatch(format!(
                        "expected {k}x{k} scale matrix, got {}x{}",
                        a.nrows(),
                        a.ncols()
                    )));
                }
                if let StableFamily::RegressionLk { .. } = fam {
                    RegressionBlocks::parse(a)?;
                }
                Ok(())
            }
            (ScaleParam::Scalar(_), Some(_)) => Err(Error::FamilyMismatch("matrix family needs a matrix scale".into())),
            (ScaleParam::Matrix(_), None) => Err(Error::FamilyMismatch("scalar family needs a scalar scale".into())),
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            ScaleParam::Scalar(s) => Some(*s),
            ScaleParam::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            ScaleParam::Scalar(_) => None,
            ScaleParam::Matrix(a) => Some(a),
        }
    }
}

/// Symmetric PSD square root by eigendecomposition. Eigenvalues in
/// `[-1e-12, 0)` are clamped to zero; anything more negative is an error.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let mut roots = DVector::zeros(eig.eigenvalues.len());
    for (r, &l) in roots.iter_mut().zip(eig.eigenvalues.iter()) {
        if l < -1e-12 {
            return Err(Error::InvalidParameter(format!(
                "matrix is not positive semidefinite (eigenvalue {l})"
            )));
        }
        *r = l.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Scale parameter of the combination of independent `F_a` and `F_b`.
pub fn circ_combine(fam: StableFamily, a: &ScaleParam, b: &ScaleParam) -> Result<ScaleParam> {
    a.validate_for(fam)?;
    b.validate_for(fam)?;
    match fam {
        StableFamily::SymAlphaStable { alpha } | StableFamily::Frechet { alpha } => {
            let (a, b) = (a.as_scalar().unwrap(), b.as_scalar().unwrap());
            Ok(ScaleParam::Scalar((a.powf(alpha) + b.powf(alpha)).powf(1.0 / alpha)))
        }
        StableFamily::GaussianMatrix { .. } => {
            let (a, b) = (a.as_matrix().unwrap(), b.as_matrix().unwrap());
            let s = a * a.transpose() + b * b.transpose();
            Ok(ScaleParam::Matrix(psd_sqrt(&s)?))
        }
        StableFamily::RegressionLk { .. } => Err(Error::Unsupported(
            "regression matrices are not closed under combination for general Z".into(),
        )),
    }
}

/// A draw from a family: a scalar or a vector.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleValue {
    Scalar(f64),
    Vector(DVector<f64>),
}

/// Applies the scaling map `H_m`.
pub fn scale_transform(fam: StableFamily, m: &ScaleParam, x: &SampleValue) -> Result<SampleValue> {
    match (fam.matrix_dim(), m, x) {
        (None, ScaleParam::Scalar(m), SampleValue::Scalar(x)) => {
            if fam.is_frechet() && *m < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative multiplier {m} in the Frechet family"
                )));
            }
            Ok(SampleValue::Scalar(m * x))
        }
        (Some(k), ScaleParam::Matrix(a), SampleValue::Vector(x)) => {
            if a.ncols() != x.len() || a.nrows() != k {
                return Err(Error::ShapeMismatch(format!(
                    "{}x{} matrix applied to vector of length {}",
                    a.nrows(),
                    a.ncols(),
                    x.len()
                )));
            }
            Ok(SampleValue::Vector(a * x))
        }
        _ => Err(Error::FamilyMismatch(format!(
            "multiplier/sample kinds do not fit {fam:?}"
        ))),
    }
}

/// Uniform draw on the open interval `(0, 1)`.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// `lambda * (-ln U)^(-1/alpha)`.
pub fn sample_frechet<R: Rng + ?Sized>(lambda: f64, alpha: f64, rng: &mut R) -> f64 {
    let u = open_unit(rng);
    if lambda == 0.0 {
        return 0.0;
    }
    lambda * (-u.ln()).powf(-1.0 / alpha)
}

/// One scalar draw. Frechet for any alpha; symmetric stable only for the
/// closed-form cases alpha = 2 (`N(0, 2 sigma^2)`) and alpha = 1 (Cauchy).
pub fn sample_scalar<R: Rng + ?Sized>(fam: StableFamily, scale: &ScaleParam, rng: &mut R) -> Result<f64> {
    scale.validate_for(fam)?;
    let s = scale.as_scalar().unwrap();
    match fam {
        StableFamily::Frechet { alpha } => Ok(sample_frechet(s, alpha, rng)),
        StableFamily::SymAlphaStable { alpha } if alpha == 2.0 => {
            let z: f64 = StandardNormal.sample(rng);
            Ok(s * std::f64::consts::SQRT_2 * z)
        }
        StableFamily::SymAlphaStable { alpha } if alpha == 1.0 => {
            let c: f64 = Cauchy::new(0.0, 1.0).unwrap().sample(rng);
            Ok(s * c)
        }
        other => Err(Error::Unsupported(format!("no closed-form sampler for {other:?}"))),
    }
}

/// Block view `[[A_sigma, A_beta], [0, A_mu I]]` of a regression matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionBlocks {
    pub sigma: f64,
    pub beta: Vec<f64>,
    pub mu: f64,
}

impl RegressionBlocks {
    const TOL: f64 = 1e-12;

    pub fn parse(a: &DMatrix<f64>) -> Result<Self> {
        let k = a.nrows();
        if k < 2 || a.ncols() != k {
            return Err(Error::ShapeMismatch(format!(
                "regression matrix must be kxk with k >= 2, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let sigma = a[(0, 0)];
        let mu = a[(1, 1)];
        let beta: Vec<f64> = (1..k).map(|j| a[(0, j)]).collect();
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("malformed regression matrix: {msg}")));
        if sigma < 0.0 || mu < 0.0 {
            return bad("A_sigma and A_mu must be nonnegative");
        }
        for i in 1..k {
            if a[(i, 0)].abs() > Self::TOL {
                return bad("lower-left block must be zero");
            }
            for j in 1..k {
                let want = if i == j { mu } else { 0.0 };
                if (a[(i, j)] - want).abs() > Self::TOL {
                    return bad("lower-right block must be A_mu times the identity");
                }
            }
        }
        if mu == 0.0 && (sigma != 0.0 || beta.iter().any(|&b| b != 0.0)) {
            return bad("A_mu = 0 requires A_sigma = 0 and A_beta = 0");
        }
        Ok(Self { sigma, beta, mu })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.beta.len() + 1;
        let mut a = DMatrix::zeros(k, k);
        a[(0, 0)] = self.sigma;
        for (j, &b) in self.beta.iter().enumerate() {
            a[(0, j + 1)] = b;
        }
        for i in 1..k {
            a[(i, i)] = self.mu;
        }
        a
    }
}

/// Membership of `A` in `S_ell` and `L_ell`.
///
/// `ell` counts matrix columns (1-based), so predictor `X_i` lives in column
/// `i + 1`: `S_ell` allows only `X_{ell-1}`, `L_ell` allows `X_1..X_{ell-1}`.
pub fn regression_membership(a: &ScaleParam, ell: usize) -> Result<(bool, bool)> {
    let a = a
        .as_matrix()
        .ok_or_else(|| Error::FamilyMismatch("regression membership needs a matrix".into()))?;
    let blocks = RegressionBlocks::parse(a)?;
    let k = a.nrows();
    if ell == 0 || ell > k {
        return Err(Error::InvalidParameter(format!("ell must be in 1..={k}, got {ell}")));
    }
    let nonzero_cols: Vec<usize> = blocks
        .beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(i, _)| i + 2)
        .collect();
    let in_s = nonzero_cols.iter().all(|&c| c == ell);
    let in_l = nonzero_cols.iter().all(|&c| c <= ell);
    Ok((in_s, in_l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fre(alpha: f64) -> StableFamily {
        StableFamily::frechet(alpha).unwrap()
    }

    #[test]
    fn scalar_combination() {
        let s = |x| ScaleParam::Scalar(x);
        assert_eq!(circ_combine(fre(1.0), &s(3.0), &s(4.0)).unwrap(), s(7.0));
        let g = StableFamily::sym_alpha_stable(2.0).unwrap();
        assert_eq!(circ_combine(g, &s(3.0), &s(4.0)).unwrap(), s(5.0));
        for fam in [fre(0.7), fre(1.0), g] {
            assert_eq!(circ_combine(fam, &s(2.5), &s(0.0)).unwrap(), s(2.5));
        }
    }

    #[test]
    fn matrix_combination() {
        let fam = StableFamily::GaussianMatrix { k: 2 };
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 3.0, 0.2]);
        let c = circ_combine(fam, &ScaleParam::Matrix(a.clone()), &ScaleParam::Matrix(b.clone())).unwrap();
        let c = c.as_matrix().unwrap();
        let want = &a * a.transpose() + &b * b.transpose();
        assert!((c * c.transpose() - want).abs().max() < 1e-10);
        // a o 0 has the same law as a (compared through A A^T)
        let z = ScaleParam::Matrix(DMatrix::zeros(2, 2));
        let c = circ_combine(fam, &ScaleParam::Matrix(a.clone()), &z).unwrap();
        let c = c.as_matrix().unwrap();
        assert!((c * c.transpose() - &a * a.transpose()).abs().max() < 1e-10);
        let bad = ScaleParam::Matrix(DMatrix::zeros(3, 3));
        assert!(matches!(
            circ_combine(fam, &ScaleParam::Matrix(a), &bad),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn scaling_maps() {
        let f = fre(1.0);
        let x = SampleValue::Scalar(5.0);
        assert_eq!(
            scale_transform(f, &ScaleParam::Scalar(2.0), &x).unwrap(),
            SampleValue::Scalar(10.0)
        );
        assert_eq!(scale_transform(f, &ScaleParam::Scalar(1.0), &x).unwrap(), x);
        assert_eq!(
            scale_transform(f, &ScaleParam::Scalar(0.0), &x).unwrap(),
            SampleValue::Scalar(0.0)
        );
        assert!(scale_transform(f, &ScaleParam::Scalar(-1.0), &x).is_err());

        let g = StableFamily::GaussianMatrix { k: 2 };
        let id = ScaleParam::Matrix(DMatrix::identity(2, 2));
        let v = SampleValue::Vector(DVector::from_vec(vec![1.5, -2.0]));
        assert_eq!(scale_transform(g, &id, &v).unwrap(), v);
    }

    #[test]
    fn degenerate_frechet_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(
                sample_scalar(fre(1.0), &ScaleParam::Scalar(0.0), &mut rng).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn frechet_margin_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let below = (0..n)
            .filter(|_| sample_scalar(fre(1.0), &ScaleParam::Scalar(2.0), &mut rng).unwrap() <= 2.0)
            .count();
        let p = below as f64 / n as f64;
        assert!((p - (-1.0f64).exp()).abs() < 0.01, "p = {p}");
    }

    #[test]
    fn gaussian_variance_is_twice_sigma_squared() {
        let fam = StableFamily::sym_alpha_stable(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_scalar(fam, &ScaleParam::Scalar(1.0), &mut rng).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 2.0).abs() < 0.05, "var = {var}");
    }

    #[test]
    fn unsupported_sampler() {
        let fam = StableFamily::sym_alpha_stable(1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(matches!(
            sample_scalar(fam, &ScaleParam::Scalar(1.0), &mut rng),
            Err(Error::Unsupported(_))
        ));
    }

    fn reg(beta: &[f64]) -> ScaleParam {
        ScaleParam::Matrix(
            RegressionBlocks {
                sigma: 1.0,
                beta: beta.to_vec(),
                mu: 1.0,
            }
            .to_matrix(),
        )
    }

    #[test]
    fn regression_membership_patterns() {
        assert_eq!(regression_membership(&reg(&[1.0, 0.0, 0.0]), 2).unwrap(), (true, true));
        for ell in 1..=4 {
            assert_eq!(
                regression_membership(&reg(&[0.0, 0.0, 0.0]), ell).unwrap(),
                (true, true)
            );
        }
        assert_eq!(
            regression_membership(&reg(&[1.0, 1.0, 0.0]), 2).unwrap(),
            (false, false)
        );
        assert_eq!(regression_membership(&reg(&[1.0, 1.0, 0.0]), 3).unwrap(), (false, true));
    }

    #[test]
    fn malformed_regression_matrix() {
        let mut a = reg(&[1.0, 0.0]).as_matrix().unwrap().clone();
        a[(2, 0)] = 0.3;
        assert!(regression_membership(&ScaleParam::Matrix(a), 2).is_err());
        let b = RegressionBlocks {
            sigma: 1.0,
            beta: vec![0.0, 0.0],
            mu: 0.0,
        };
        assert!(regression_membership(&ScaleParam::Matrix(b.to_matrix()), 2).is_err());
    }

    #[test]
    fn family_validation() {
        assert!(StableFamily::sym_alpha_stable(2.5).is_err());
        assert!(StableFamily::frechet(0.0).is_err());
        assert!(StableFamily::RegressionLk { k: 1 }.validated().is_err());
        assert_eq!(fre(1.0).semiring(), SemiringSpec::MaxTimes);
        assert_eq!(
            StableFamily::GaussianMatrix { k: 3 }.semiring(),
            SemiringSpec::PlusTimes
        );
    }
}
