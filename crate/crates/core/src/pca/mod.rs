//! Principal component analysis for max-stable models (Frechet, alpha = 1)
//! and the classic Gaussian case.
//!
//! For a Frechet model the exhaustive, unrestricted problem is
//! `min_B sum_j mu_j f_B(nu_j)` over nonnegative `d x p` bases `B`, where
//! `f_B(u) = min_{c >= 0} ||u - max_k c_k b_k||_1`. The loss is invariant
//! under rescaling any column, so columns are kept on the unit `q`-sphere.

mod barvinok;
mod gaussian;
pub mod inner;
mod search;

pub use barvinok::{barvinok_pca, BarvinokSolution};
pub use gaussian::{
    gaussian_classic_pca, gaussian_rank_reconstruction, principal_angle, ClassicPca, RankReconstruction,
};
pub use inner::{InnerFit, InnerStrategy};
pub use search::{exhaustive_pca, forward_pca};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_q, q_norm, SpectralModel};
use crate::stable::StableFamily;

/// Serde helper writing `q = inf` as the string `"inf"`.
pub(crate) mod q_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*q)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(q) => Ok(q),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("invalid norm index {s:?}"))),
        }
    }
}

/// `p` nonnegative columns of length `d`, each with `||b_k||_q = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrincipalBasis {
    #[serde(with = "q_serde")]
    q: f64,
    vectors: Vec<Vec<f64>>,
}

impl PrincipalBasis {
    /// Normalizes each column to unit `q`-norm.
    pub fn new(columns: Vec<Vec<f64>>, q: f64) -> Result<Self> {
        check_q(q)?;
        let d = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || d == 0 {
            return Err(Error::InvalidParameter(
                "a basis needs at least one nonempty column".into(),
            ));
        }
        let mut vectors = Vec::with_capacity(columns.len());
        for (k, col) in columns.into_iter().enumerate() {
            if col.len() != d {
                return Err(Error::ShapeMismatch(format!("column {k} has length {}", col.len())));
            }
            if col.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidParameter(format!("column {k} has a negative entry")));
            }
            let r = q_norm(&col, q);
            if r == 0.0 {
                return Err(Error::ZeroVector(format!("basis column {k}")));
            }
            vectors.push(col.iter().map(|x| x / r).collect());
        }
        Ok(Self { q, vectors })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn d(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn p(&self) -> usize {
        self.vectors.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d(), self.p(), |i, k| self.vectors[k][i])
    }

    /// Column-major flat copy.
    pub(crate) fn flat(&self) -> Vec<f64> {
        self.vectors.concat()
    }

    /// Re-normalized to another norm index.
    pub fn renormalized(&self, q: f64) -> Result<Self> {
        Self::new(self.vectors.clone(), q)
    }

    /// True if column `k` is a positive multiple of a unit vector.
    pub fn column_is_axis(&self, k: usize, tol: f64) -> bool {
        let col = &self.vectors[k];
        let big = q_norm(col, f64::INFINITY);
        col.iter().filter(|&&x| x > tol * big).count() == 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomFit {
    pub atom: usize,
    pub distance: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub restarts: usize,
    pub best_restart: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after each stage (forward) or for each `p' <= p` (exhaustive warm starts).
    pub stage_objectives: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaSolution {
    pub variant: String,
    pub basis: PrincipalBasis,
    pub objective: f64,
    pub per_atom: Vec<AtomFit>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Points per unit interval used by grid-based checks.
    pub grid_resolution: usize,
    /// Worker threads for independent restarts; 1 runs serially.
    pub threads: usize,
    /// Norm used to report basis columns.
    pub q: f64,
    pub inner: InnerStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 20_000,
            tol: 1e-7,
            seed: 0,
            grid_resolution: 1000,
            threads: 1,
            q: f64::INFINITY,
            inner: InnerStrategy::Auto,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be > 0".into()));
        }
        if self.max_iters < 1 || self.threads < 1 {
            return Err(Error::InvalidParameter("max_iters and threads must be >= 1".into()));
        }
        check_q(self.q)
    }
}

/// `f_b(u)` with the minimizing coefficients.
pub fn inner_distance(u: &[f64], basis: &PrincipalBasis) -> Result<InnerFit> {
    inner_distance_with(u, basis, InnerStrategy::Auto)
}

pub fn inner_distance_with(u: &[f64], basis: &PrincipalBasis, strategy: InnerStrategy) -> Result<InnerFit> {
    if u.len() != basis.d() {
        return Err(Error::ShapeMismatch(format!(
            "point of length {} for a basis of dimension {}",
            u.len(),
            basis.d()
        )));
    }
    if u.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter("point must be nonnegative".into()));
    }
    let flat = basis.flat();
    Ok(inner::Problem {
        u,
        w: None,
        basis: &flat,
        p: basis.p(),
    }
    .solve(strategy, None))
}

fn check_pca_model(m: &SpectralModel) -> Result<()> {
    m.require_frechet_unit()?;
    m.require_nondegenerate()
}

/// `sum_j mu_j f_B(nu_j)`, equal to `int f_B dS` for any norm index.
pub fn pca_objective(m: &SpectralModel, basis: &PrincipalBasis) -> Result<f64> {
    check_pca_model(m)?;
    if basis.d() != m.d() {
        return Err(Error::ShapeMismatch(format!(
            "basis of dimension {} for a model of dimension {}",
            basis.d(),
            m.d()
        )));
    }
    Ok(evaluate(m, &basis.flat(), basis.p(), InnerStrategy::Auto).0)
}

/// Objective and per-atom fits of a flat column-major basis.
pub(crate) fn evaluate(m: &SpectralModel, flat: &[f64], p: usize, strategy: InnerStrategy) -> (f64, Vec<AtomFit>) {
    let mut total = 0.0;
    let fits = (0..m.n())
        .map(|j| {
            let u = m.column(j);
            let fit = inner::Problem {
                u: &u,
                w: None,
                basis: flat,
                p,
            }
            .solve(strategy, None);
            total += m.mu()[j] * fit.distance;
            AtomFit {
                atom: j,
                distance: fit.distance,
                coefficients: fit.coefficients,
            }
        })
        .collect();
    (total, fits)
}

/// Assembles a solution, reporting coefficients against the `q`-normalized basis.
pub(crate) fn make_solution(
    m: &SpectralModel,
    variant: &str,
    flat: &[f64],
    p: usize,
    cfg: &SolverConfig,
    diagnostics: Diagnostics,
) -> Result<PcaSolution> {
    let d = m.d();
    let columns: Vec<Vec<f64>> = flat.chunks(d).map(<[f64]>::to_vec).collect();
    let basis = PrincipalBasis::new(columns, cfg.q)?;
    let (objective, per_atom) = evaluate(m, &basis.flat(), p, cfg.inner);
    Ok(PcaSolution {
        variant: variant.to_string(),
        basis,
        objective,
        per_atom,
        diagnostics,
    })
}

/// Arguments for [`orthogonality_test`].
#[derive(Clone, Debug, PartialEq)]
pub enum OrthogonalityInput {
    Vectors(Vec<f64>, Vec<f64>),
    Matrices(DMatrix<f64>, DMatrix<f64>),
}

const ORTHO_TOL: f64 = 1e-12;

/// Whether `<mu X, nu X> = 0` for every `X` of the family.
///
/// Gaussian vectors: Euclidean orthogonality. Gaussian matrices: `A B^T = 0`.
/// Frechet vectors: disjoint supports, since `<mu X, nu X>` is a positive
/// multiple of `sum_i min(mu_i, nu_i)`.
pub fn orthogonality_test(input: &OrthogonalityInput, family: StableFamily) -> Result<bool> {
    match (family, input) {
        (StableFamily::Frechet { .. }, OrthogonalityInput::Vectors(a, b)) => {
            same_len(a, b)?;
            if a.iter().chain(b).any(|&x| x < 0.0) {
                return Err(Error::InvalidParameter("Frechet maps must be nonnegative".into()));
            }
            Ok(a.iter().zip(b).all(|(&x, &y)| x.min(y) == 0.0))
        }
        (StableFamily::SymAlphaStable { alpha }, OrthogonalityInput::Vectors(a, b)) if alpha == 2.0 => {
            same_len(a, b)?;
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(dot.abs() <= ORTHO_TOL * scale.max(f64::MIN_POSITIVE))
        }
        (StableFamily::GaussianMatrix { k }, OrthogonalityInput::Matrices(a, b)) => {
            for m in [a, b] {
                if m.nrows() != k || m.ncols() != k {
                    return Err(Error::ShapeMismatch(format!("expected {k}x{k} matrices")));
                }
            }
            let prod = a * b.transpose();
            let scale = a.norm() * b.norm();
            Ok(prod.iter().all(|x| x.abs() <= ORTHO_TOL * scale.max(f64::MIN_POSITIVE)))
        }
        (fam, _) => Err(Error::Unsupported(format!("orthogonality for {fam:?} with this input"))),
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )))
    }
}
