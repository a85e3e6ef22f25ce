//! Principal component analysis for stable distribution families.
//!
//! Families are indexed by a semiring of scale parameters (`max`/`*` for
//! max-stable laws, `+`/`*` for sum-stable ones). Variation, semi-scalar
//! product and semi-metric replace variance, covariance and squared
//! distance, and PCA minimizes the semi-metric between a model and its
//! reconstruction from `p` components. The max-stable case is solved on
//! discrete spectral models; classic Gaussian PCA and regression variable
//! selection come out as special cases.

pub mod error;
pub mod estimate;
pub mod io;
pub mod model;
pub mod pca;
pub mod report;
pub mod selection;
pub mod semimodule;
pub mod semiring;
pub mod stable;
pub mod variation;
pub mod verify;

pub use error::{Error, Result};
pub use model::{build_model, max_stable_cdf, scale_coefficients, AngularMeasure, SpectralModel};
pub use pca::{
    barvinok_pca, exhaustive_pca, forward_pca, gaussian_classic_pca, inner_distance, pca_objective, PcaSolution,
    PrincipalBasis, SolverConfig,
};
pub use semiring::SemiringSpec;
pub use stable::StableFamily;
