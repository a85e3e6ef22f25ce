//! The Gaussian case: classic PCA and the generalized rank-`p` reconstruction
//! problem `min rho(X, H1 H2^T X)` in ordinary arithmetic.
//!
//! For a sum-stable alpha = 2 model the semi-metric is
//! `rho(X, HX) = tr((I - H) C (I - H)^T)` with `C = nu diag(mu^2) nu^T`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SolverConfig;
use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::stable::StableFamily;

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicPca {
    /// `d x p` orthonormal columns, row-major.
    pub basis: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Sum of the trailing `d - p` eigenvalues.
    pub objective: f64,
}

impl ClassicPca {
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        let p = self.basis.first().map_or(0, Vec::len);
        DMatrix::from_fn(self.basis.len(), p, |i, k| self.basis[i][k])
    }
}

/// Eigenpairs sorted by decreasing eigenvalue, each vector's first entry
/// above `1e-12` in magnitude made positive.
pub(crate) fn sorted_eigen(cov: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = cov.nrows();
    if cov.ncols() != d || d == 0 {
        return Err(Error::ShapeMismatch(format!(
            "covariance must be square, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    if (cov - cov.transpose()).abs().max() > SYMMETRY_TOL {
        return Err(Error::InvalidParameter("covariance is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::from_fn(d, d, |i, c| eig.eigenvectors[(i, order[c])]);
    for c in 0..d {
        if let Some(i) = (0..d).find(|&i| vectors[(i, c)].abs() > 1e-12) {
            if vectors[(i, c)] < 0.0 {
                vectors.column_mut(c).neg_mut();
            }
        }
    }
    Ok((values, vectors))
}

/// Top-`p` eigenvectors of a covariance matrix.
pub fn gaussian_classic_pca(cov: &DMatrix<f64>, p: usize) -> Result<ClassicPca> {
    let (values, vectors) = sorted_eigen(cov)?;
    let d = values.len();
    if p == 0 || p > d {
        return Err(Error::InvalidParameter(format!("p must be in 1..={d}, got {p}")));
    }
    if values[d - 1] < -1e-10 * values[0].abs().max(1.0) {
        return Err(Error::InvalidParameter(
            "covariance is not positive semidefinite".into(),
        ));
    }
    Ok(ClassicPca {
        basis: (0..d).map(|i| (0..p).map(|k| vectors[(i, k)]).collect()).collect(),
        objective: values[p..].iter().sum(),
        eigenvalues: values,
    })
}

/// Largest principal angle between the column spans of `a` and `b`.
pub fn principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let s = (qa.transpose() * &qb).singular_values();
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min).clamp(-1.0, 1.0);
    // asin of the residual norm is better conditioned than acos near 1
    let resid = (&qb - &qa * (qa.transpose() * &qb)).norm();
    let resid_angle = resid.min(1.0).asin();
    if smin > 0.9 {
        resid_angle.min(smin.acos())
    } else {
        smin.acos()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReconstruction {
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
    /// Orthonormal basis of the reconstruction's range.
    pub basis: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternating least squares for `min tr((I - H1 H2^T) C (I - H1 H2^T)^T)`.
///
/// With `H1` fixed the optimal `H2^T` is the pseudo-inverse of `H1`, so `H`
/// is the orthogonal projection onto `span(H1)`; with `H2` fixed the optimal
/// `H1` is `C H2 (H2^T C H2)^{-1}`.
pub fn gaussian_rank_reconstruction(m: &SpectralModel, p: usize, cfg: &SolverConfig) -> Result<RankReconstruction> {
    cfg.validate()?;
    match m.family() {
        StableFamily::SymAlphaStable { alpha } if alpha == 2.0 => {}
        other => {
            return Err(Error::FamilyMismatch(format!(
                "rank reconstruction needs the Gaussian (alpha = 2) family, got {other:?}"
            )))
        }
    }
    let d = m.d();
    if p == 0 || p > d {
        return Err(Error::InvalidParameter(format!("p must be in 1..={d}, got {p}")));
    }
    let weights = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m.n(), m.mu().iter().map(|w| w * w)));
    let c = m.nu() * weights * m.nu().transpose();
    let objective_of = |h: &DMatrix<f64>| {
        let r = DMatrix::identity(d, d) - h;
        (&r * &c * r.transpose()).trace()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut h1 = DMatrix::from_fn(d, p, |_, _| StandardNormal.sample(&mut rng));
    let mut converged = false;
    let mut iterations = 0;
    let mut basis = h1.clone().qr().q();
    while iterations < cfg.max_iters {
        iterations += 1;
        let h2 = h1
            .clone()
            .pseudo_inverse(1e-14)
            .map_err(|e| Error::Internal(e.to_string()))?
            .transpose();
        let g = h2.transpose() * &c * &h2;
        let g_inv = g.pseudo_inverse(1e-14).map_err(|e| Error::Internal(e.to_string()))?;
        let next = &c * &h2 * g_inv;
        if next.norm() == 0.0 {
            // C vanishes on span(H1); any subspace is optimal
            converged = true;
            break;
        }
        let next_basis = next.clone().qr().q();
        let change = principal_angle(&basis, &next_basis);
        h1 = next;
        basis = next_basis;
        if change < cfg.tol.min(1e-12) {
            converged = true;
            break;
        }
    }
    let h2 = h1
        .clone()
        .pseudo_inverse(1e-14)
        .map_err(|e| Error::Internal(e.to_string()))?
        .transpose();
    let objective = objective_of(&(&h1 * h2.transpose()));
    Ok(RankReconstruction {
        h1,
        h2,
        basis,
        objective,
        iterations,
        converged,
    })
}
