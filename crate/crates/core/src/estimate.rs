//! Fitting Frechet margins and an empirical spectral measure to i.i.d.
//! samples by threshold exceedances of the standardized radius.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{build_model, check_q, q_norm, AngularMeasure, SpectralModel};
use crate::stable::StableFamily;

/// Fewest observations accepted for estimation.
pub const MIN_SAMPLES: usize = 20;

/// L1 distance below which estimated directions are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-2;

/// `m x d` matrix of positive observations, `m >= 20`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < MIN_SAMPLES {
            return Err(Error::Data(format!(
                "estimation needs at least {MIN_SAMPLES} observations, got {}",
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::Data("samples have no coordinates".into()));
        }
        if let Some(x) = data.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Data(format!("samples must be positive and finite, found {x}")));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn m(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")))
    }
}

/// Maximum-likelihood Frechet scale with known shape:
/// `lambda = (m / sum x^-alpha)^(1/alpha)`.
pub fn fit_frechet_scale(x: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    if let Some(v) = x.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Data(format!("observations must be positive, found {v}")));
    }
    let s: f64 = x.iter().map(|v| v.powf(-alpha)).sum();
    Ok((x.len() as f64 / s).powf(1.0 / alpha))
}

/// Per-coordinate scale estimates.
pub fn fit_frechet_margins(s: &SampleMatrix, alpha: f64) -> Result<Vec<f64>> {
    (0..s.d())
        .map(|i| fit_frechet_scale(s.data.column(i).as_slice(), alpha))
        .collect()
}

/// Empirical angular measure of `X^alpha` (a unit-shape Frechet vector).
///
/// Observations are standardized to unit margins, the `k` largest `q`-norm
/// radii are kept, and each kept direction gets mass `r_(k+1) / m` where
/// `r_(k+1)` is the largest radius not kept. Nearby directions are merged,
/// the atoms are mapped back to the scale of `X^alpha`, and the masses are
/// rescaled so that `sum_i int u_i dS = sum_i lambda_i^alpha`.
pub fn estimate_angular_measure(s: &SampleMatrix, alpha: f64, q: f64, k: usize) -> Result<AngularMeasure> {
    check_alpha(alpha)?;
    check_q(q)?;
    let (m, d) = (s.m(), s.d());
    if k < 1 || k > m / 4 {
        return Err(Error::InvalidParameter(format!("k must be in 1..={}, got {k}", m / 4)));
    }
    let lambda = fit_frechet_margins(s, alpha)?;
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|r| (0..d).map(|i| (s.data[(r, i)] / lambda[i]).powf(alpha)).collect())
        .collect();
    let radii: Vec<f64> = rows.iter().map(|y| q_norm(y, q)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]).then(a.cmp(&b)));
    let threshold = radii[order[k]];
    let unit_mass = threshold / m as f64;

    // merge in the standardized frame: (direction sum weighted by mass, mass)
    let mut clusters: Vec<(Vec<f64>, f64)> = Vec::new();
    for &r in &order[..k] {
        let dir: Vec<f64> = rows[r].iter().map(|y| y / radii[r]).collect();
        let hit = clusters
            .iter_mut()
            .find(|(c, w)| c.iter().zip(&dir).map(|(a, b)| (a / w - b).abs()).sum::<f64>() <= ATOM_MERGE_TOL);
        match hit {
            Some((c, w)) => {
                c.iter_mut().zip(&dir).for_each(|(a, b)| *a += unit_mass * b);
                *w += unit_mass;
            }
            None => clusters.push((dir.iter().map(|b| unit_mass * b).collect(), unit_mass)),
        }
    }

    let target: f64 = lambda.iter().map(|l| l.powf(alpha)).sum();
    let mut atoms = Vec::with_capacity(clusters.len());
    let mut weights = Vec::with_capacity(clusters.len());
    for (c, w) in clusters {
        let scaled: Vec<f64> = c.iter().zip(&lambda).map(|(a, l)| a / w * l.powf(alpha)).collect();
        let r = q_norm(&scaled, q);
        atoms.push(scaled.iter().map(|x| x / r).collect::<Vec<f64>>());
        weights.push(w * r);
    }
    let mut measure = AngularMeasure { atoms, weights, q };
    let total: f64 = measure.coordinate_means().iter().sum();
    let scale = target / total;
    measure.weights.iter_mut().for_each(|w| *w *= scale);
    Ok(measure)
}

/// Frechet(`alpha`) spectral model fitted by [`estimate_angular_measure`],
/// normalized by [`build_model`].
pub fn fit_spectral_model(s: &SampleMatrix, alpha: f64, q: f64, k: usize) -> Result<SpectralModel> {
    let measure = estimate_angular_measure(s, alpha, q, k)?;
    let inv = 1.0 / alpha;
    let nu = DMatrix::from_fn(s.d(), measure.atoms.len(), |i, j| measure.atoms[j][i].powf(inv));
    let mu = measure.weights.iter().map(|w| w.powf(inv)).collect();
    build_model(nu, mu, StableFamily::Frechet { alpha })
}
