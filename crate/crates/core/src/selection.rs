//! Variable selection in the regression model `y = A_sigma eps + sum_i A_beta_i X_i`
//! on `Z = (eps, X_1..X_{k-1})`: best subset, forward selection and the
//! weighted PCA-regression family.
//!
//! Predictors are numbered `1..=k-1` as in `X_i`; `Z` index `i` is `X_i`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pca::gaussian_classic_pca;

/// Largest predictor count accepted by [`best_subset`].
pub const MAX_PREDICTORS: usize = 25;

const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionModel {
    cov_z: DMatrix<f64>,
    a_sigma: f64,
    a_beta: Vec<f64>,
}

impl RegressionModel {
    pub fn new(cov_z: DMatrix<f64>, a_sigma: f64, a_beta: Vec<f64>) -> Result<Self> {
        let k = cov_z.nrows();
        if k < 2 || cov_z.ncols() != k {
            return Err(Error::ShapeMismatch(format!(
                "covariance of Z must be kxk with k >= 2, got {}x{}",
                cov_z.nrows(),
                cov_z.ncols()
            )));
        }
        if a_beta.len() != k - 1 {
            return Err(Error::ShapeMismatch(format!(
                "A_beta has {} entries, expected {}",
                a_beta.len(),
                k - 1
            )));
        }
        if !(a_sigma >= 0.0 && a_sigma.is_finite()) || a_beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter(
                "A_sigma must be >= 0 and coefficients finite".into(),
            ));
        }
        if cov_z.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("covariance has non-finite entries".into()));
        }
        let scale = cov_z.abs().max().max(1.0);
        if (&cov_z - cov_z.transpose()).abs().max() > PSD_TOL * scale {
            return Err(Error::Data("covariance is not symmetric".into()));
        }
        let min_eig = SymmetricEigen::new(cov_z.clone()).eigenvalues.min();
        if min_eig < -PSD_TOL * scale {
            return Err(Error::Data(format!(
                "covariance is not positive semidefinite (eigenvalue {min_eig})"
            )));
        }
        Ok(Self { cov_z, a_sigma, a_beta })
    }

    /// Model fitted to data without intercept: `A_beta` is the least-squares
    /// fit on centred data, `eps` the standardized residual and `cov(Z)` the
    /// empirical covariance with `eps` uncorrelated from the predictors.
    pub fn from_data(y: &[f64], x: &DMatrix<f64>) -> Result<Self> {
        let (m, p) = (x.nrows(), x.ncols());
        if y.len() != m || m < 2 || p == 0 {
            return Err(Error::ShapeMismatch(format!("y has {} rows, X is {m}x{p}", y.len())));
        }
        let centre = |v: DVector<f64>| {
            let mean = v.mean();
            v.add_scalar(-mean)
        };
        let yc = centre(DVector::from_column_slice(y));
        let xc = DMatrix::from_columns(&(0..p).map(|j| centre(x.column(j).into_owned())).collect::<Vec<_>>());
        let sxx = xc.transpose() * &xc / m as f64;
        let sxy = xc.transpose() * &yc / m as f64;
        let beta = pinv_sym(&sxx) * &sxy;
        let resid = &yc - &xc * &beta;
        let sigma = (resid.norm_squared() / m as f64).sqrt();
        let mut cov_z = DMatrix::zeros(p + 1, p + 1);
        cov_z[(0, 0)] = 1.0;
        cov_z.view_mut((1, 1), (p, p)).copy_from(&sxx);
        Self::new(cov_z, sigma, beta.iter().copied().collect())
    }

    pub fn k(&self) -> usize {
        self.cov_z.nrows()
    }

    pub fn predictors(&self) -> usize {
        self.k() - 1
    }

    pub fn cov_z(&self) -> &DMatrix<f64> {
        &self.cov_z
    }

    fn a(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.k(),
            std::iter::once(self.a_sigma).chain(self.a_beta.iter().copied()),
        )
    }

    pub fn var_y(&self) -> f64 {
        let a = self.a();
        a.dot(&(&self.cov_z * &a))
    }

    /// `cov(X, y)` for the predictors.
    pub fn cov_xy(&self) -> DVector<f64> {
        let full = &self.cov_z * self.a();
        full.rows(1, self.predictors()).into_owned()
    }

    /// `cov(X)` for the predictors.
    pub fn cov_x(&self) -> DMatrix<f64> {
        let p = self.predictors();
        self.cov_z.view((1, 1), (p, p)).into_owned()
    }
}

/// Pseudo-inverse of a symmetric PSD matrix, dropping eigenvalues below a
/// relative threshold.
fn pinv_sym(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(s.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let cut = top * 1e-12 * n as f64;
    let inv = eig.eigenvalues.map(|x| if x > cut { 1.0 / x } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// `c^T S^+ c`, the variance explained by projecting onto a block with
/// covariance `S` and cross-covariance `c`.
fn explained(s: &DMatrix<f64>, c: &DVector<f64>) -> f64 {
    c.dot(&(pinv_sym(s) * c))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub set: Vec<usize>,
    pub criterion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: String,
    /// Sorted 1-based predictor indices.
    pub chosen: Vec<usize>,
    pub criterion: f64,
    /// Stagewise sets (forward selection only).
    pub path: Vec<SelectionStep>,
}

fn check_subset(m: &RegressionModel, t: &[usize]) -> Result<()> {
    let p = m.predictors();
    for (n, &i) in t.iter().enumerate() {
        if i == 0 || i > p {
            return Err(Error::InvalidParameter(format!("predictor index {i} outside 1..={p}")));
        }
        if t[..n].contains(&i) {
            return Err(Error::InvalidParameter(format!("predictor {i} listed twice")));
        }
    }
    Ok(())
}

/// Residual variance of `y` after projection onto `span{X_i : i in T}`.
pub fn residual_variation(m: &RegressionModel, t: &[usize]) -> Result<f64> {
    check_subset(m, t)?;
    Ok(residual_unchecked(m, t, &(&m.cov_z * m.a())))
}

fn residual_unchecked(m: &RegressionModel, t: &[usize], cz_a: &DVector<f64>) -> f64 {
    let var_y = m.var_y();
    if t.is_empty() {
        return var_y;
    }
    let s = DMatrix::from_fn(t.len(), t.len(), |r, c| m.cov_z[(t[r], t[c])]);
    let c = DVector::from_iterator(t.len(), t.iter().map(|&i| cz_a[i]));
    (var_y - explained(&s, &c)).max(0.0)
}

fn check_p(m: &RegressionModel, p: usize) -> Result<()> {
    let k1 = m.predictors();
    if k1 > MAX_PREDICTORS {
        return Err(Error::InvalidParameter(format!(
            "subset search supports at most {MAX_PREDICTORS} predictors, got {k1}"
        )));
    }
    if p > k1 {
        return Err(Error::InvalidParameter(format!("p = {p} exceeds the {k1} predictors")));
    }
    Ok(())
}

fn improves(new: f64, best: f64) -> bool {
    new < best - 1e-12 * best.abs().max(1e-300)
}

/// Exhaustive search over subsets of size `<= p`. Ties (within `1e-12`
/// relative) go to the lexicographically smallest set.
pub fn best_subset(m: &RegressionModel, p: usize) -> Result<SelectionResult> {
    check_p(m, p)?;
    let cz_a = &m.cov_z * m.a();
    let k1 = m.predictors();
    let mut best_set = Vec::new();
    let mut best = residual_unchecked(m, &[], &cz_a);
    // depth-first visits subsets in lexicographic order
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 1;
    loop {
        if stack.len() < p && next <= k1 {
            stack.push(next);
            let f = residual_unchecked(m, &stack, &cz_a);
            if improves(f, best) {
                best = f;
                best_set = stack.clone();
            }
            next += 1;
        } else {
            match stack.pop() {
                Some(last) => next = last + 1,
                None => break,
            }
        }
    }
    Ok(SelectionResult {
        method: "best-subset".into(),
        chosen: best_set,
        criterion: best,
        path: Vec::new(),
    })
}

/// Greedy forward selection; ties go to the smallest index.
pub fn forward_select(m: &RegressionModel, p: usize) -> Result<SelectionResult> {
    check_p(m, p)?;
    let cz_a = &m.cov_z * m.a();
    let mut set: Vec<usize> = Vec::new();
    let mut criterion = residual_unchecked(m, &[], &cz_a);
    let mut path = Vec::with_capacity(p);
    for _ in 0..p {
        let mut stage: Option<(usize, f64)> = None;
        for i in (1..=m.predictors()).filter(|i| !set.contains(i)) {
            let mut trial = set.clone();
            trial.push(i);
            let f = residual_unchecked(m, &trial, &cz_a);
            if stage.is_none_or(|(_, b)| improves(f, b)) {
                stage = Some((i, f));
            }
        }
        let (i, f) = stage.expect("p <= k-1 leaves a candidate");
        set.push(i);
        criterion = f.min(criterion);
        let mut sorted = set.clone();
        sorted.sort_unstable();
        path.push(SelectionStep { set: sorted, criterion });
    }
    set.sort_unstable();
    Ok(SelectionResult {
        method: "forward".into(),
        chosen: set,
        criterion,
        path,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedRegression {
    pub w_y: f64,
    pub w_x: f64,
    /// `(k-1) x p` orthonormal predictor basis, row-major.
    pub basis: Vec<Vec<f64>>,
    /// Regression coefficients of `y` on the predictors induced by the basis.
    pub coefficients: Vec<f64>,
    pub criterion: f64,
    pub residual_variation: f64,
    pub reconstruction_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl WeightedRegression {
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        let p = self.basis.first().map_or(0, Vec::len);
        DMatrix::from_fn(self.basis.len(), p, |i, k| self.basis[i][k])
    }
}

struct Weighted<'a> {
    sigma: &'a DMatrix<f64>,
    c: &'a DVector<f64>,
    var_y: f64,
    trace: f64,
    w_y: f64,
    w_x: f64,
}

impl Weighted<'_> {
    /// `(residual variance, reconstruction error)` of an orthonormal basis.
    fn parts(&self, q: &DMatrix<f64>) -> (f64, f64) {
        let mq = q.transpose() * self.sigma * q;
        let qc = q.transpose() * self.c;
        let resid = (self.var_y - explained(&mq, &qc)).max(0.0);
        let recon = (self.trace - mq.trace()).max(0.0);
        (resid, recon)
    }

    fn value(&self, q: &DMatrix<f64>) -> f64 {
        let (r, e) = self.parts(q);
        self.w_y * r + self.w_x * e
    }

    /// Riemannian gradient of [`Self::value`] on the Grassmannian.
    fn gradient(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let mq = q.transpose() * self.sigma * q;
        let a = pinv_sym(&mq) * (q.transpose() * self.c);
        let sq = self.sigma * q;
        let ds = (self.c * a.transpose() - &sq * &a * a.transpose()) * 2.0;
        let euclid = ds * (-self.w_y) - sq * (2.0 * self.w_x);
        let n = q.nrows();
        (DMatrix::identity(n, n) - q * q.transpose()) * euclid
    }

    fn gradient_tol(&self) -> f64 {
        1e-14 * (self.w_y * self.var_y + self.w_x * self.trace).max(1e-300)
    }

    /// Armijo steepest descent with a QR retraction. Once the objective is
    /// flat to rounding, steps are accepted on a shrinking gradient instead,
    /// which pins the subspace down to about machine precision.
    fn descend(&self, mut q: DMatrix<f64>, max_iters: usize) -> (DMatrix<f64>, usize, bool) {
        let mut f = self.value(&q);
        let mut step = 1.0 / self.sigma.abs().max().max(self.c.abs().max()).max(1e-300);
        let gtol = self.gradient_tol();
        let mut it = 0;
        while it < max_iters {
            it += 1;
            let g = self.gradient(&q);
            let gn = g.norm_squared();
            if gn.sqrt() <= gtol {
                return (q, it, true);
            }
            let mut accepted = false;
            let mut t = step * 2.0;
            for _ in 0..60 {
                let cand = orthonormalize(&(&q - &g * t));
                let fc = self.value(&cand);
                if fc <= f - 1e-4 * t * gn {
                    q = cand;
                    f = fc;
                    step = t;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let mut g = self.gradient(&q);
        let mut gn = g.norm();
        let mut t = step;
        while it < max_iters && gn > gtol && t > 1e-30 * step {
            it += 1;
            let cand = orthonormalize(&(&q - &g * t));
            let gc = self.gradient(&cand);
            let gcn = gc.norm();
            if gcn < gn {
                q = cand;
                g = gc;
                gn = gcn;
                t *= 1.5;
            } else {
                t *= 0.5;
            }
        }
        (q, it, it < max_iters)
    }
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix the sign ambiguity so the retraction is continuous
    for k in 0..q.ncols() {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

fn fix_signs(q: &mut DMatrix<f64>) {
    for k in 0..q.ncols() {
        if let Some(i) = (0..q.nrows()).find(|&i| q[(i, k)].abs() > 1e-12) {
            if q[(i, k)] < 0.0 {
                q.column_mut(k).neg_mut();
            }
        }
    }
}

/// Least-squares direction first, then classic PCA directions orthogonalized
/// against what is already there.
fn ols_basis(sigma: &DMatrix<f64>, c: &DVector<f64>, pca: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let n = sigma.nrows();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(p);
    let beta = pinv_sym(sigma) * c;
    let mut candidates: Vec<DVector<f64>> = vec![beta];
    candidates.extend(pca.column_iter().map(|c| c.into_owned()));
    candidates.extend((0..n).map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })));
    for mut v in candidates {
        if cols.len() == p {
            break;
        }
        for u in &cols {
            let proj = u.dot(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Minimizes `w_y * resvar(y | Q^T X) + w_x * (tr S - tr(Q^T S Q))` over
/// orthonormal `(k-1) x p` bases `Q`, with `S = cov(X)`.
///
/// `w_y = 0` is classic PCA of the predictors and `w_x = 0` is ordinary
/// least squares (any basis containing the least-squares direction); both
/// are solved in closed form. Otherwise Grassmann gradient descent runs from
/// both limits and keeps the better end point.
pub fn weighted_pca_regression(m: &RegressionModel, p: usize, w_y: f64, w_x: f64) -> Result<WeightedRegression> {
    if !(w_y >= 0.0 && w_x >= 0.0 && w_y.is_finite() && w_x.is_finite()) || (w_y == 0.0 && w_x == 0.0) {
        return Err(Error::InvalidParameter("weights must be >= 0 and not both zero".into()));
    }
    let k1 = m.predictors();
    if p == 0 || p > k1 {
        return Err(Error::InvalidParameter(format!("p must be in 1..={k1}, got {p}")));
    }
    let sigma = m.cov_x();
    let c = m.cov_xy();
    let problem = Weighted {
        sigma: &sigma,
        c: &c,
        var_y: m.var_y(),
        trace: sigma.trace(),
        w_y,
        w_x,
    };
    let pca = gaussian_classic_pca(&sigma, p)?.basis_matrix();
    let (mut q, iterations, converged) = if w_y == 0.0 {
        (pca, 0, true)
    } else if w_x == 0.0 {
        (ols_basis(&sigma, &c, &pca, p), 0, true)
    } else {
        let mut starts = [pca.clone(), ols_basis(&sigma, &c, &pca, p)];
        // start from the limit the weights lean towards; the other must win clearly
        if w_y * problem.var_y > w_x * problem.trace {
            starts.swap(0, 1);
        }
        let mut best: Option<(DMatrix<f64>, usize, bool, f64)> = None;
        for start in starts {
            let (q, it, conv) = problem.descend(start, 20_000);
            let f = problem.value(&q);
            if best.as_ref().is_none_or(|b| f < b.3 - 1e-13 * b.3.abs()) {
                best = Some((q, it, conv, f));
            }
        }
        let (q, it, conv, _) = best.expect("two starts");
        (q, it, conv)
    };
    fix_signs(&mut q);
    let (resid, recon) = problem.parts(&q);
    let mq = q.transpose() * &sigma * &q;
    let coefficients = &q * (pinv_sym(&mq) * (q.transpose() * &c));
    Ok(WeightedRegression {
        w_y,
        w_x,
        basis: (0..k1).map(|i| q.row(i).iter().copied().collect()).collect(),
        coefficients: coefficients.iter().copied().collect(),
        criterion: w_y * resid + w_x * recon,
        residual_variation: resid,
        reconstruction_error: recon,
        iterations,
        converged,
    })
}

/// Ordinary least-squares coefficients on all predictors.
pub fn ols_coefficients(m: &RegressionModel) -> Vec<f64> {
    (pinv_sym(&m.cov_x()) * m.cov_xy()).iter().copied().collect()
}

/// The suppressor model: `X_3` alone explains most of `y`, yet `{X_1, X_2}`
/// together explain almost everything.
pub fn suppressor_example() -> RegressionModel {
    let cov_z = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.9, 0.3, //
            0.0, 0.9, 1.0, 0.0, //
            0.0, 0.3, 0.0, 1.0,
        ],
    );
    RegressionModel::new(cov_z, 0.1, vec![1.0, -1.0, 0.0]).expect("valid by construction")
}
