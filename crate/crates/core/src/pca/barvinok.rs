//! Linearly inferable PCA with reconstruction maps of Barvinok rank `<= p`.
//!
//! Minimizes `rho(X, H X) = sum_j mu_j ||nu_j - H1 (.) (H2 (.) nu_j)||_1`
//! over nonnegative `H1` (`d x p`) and `H2` (`p x d`), with max-times products.
//! Block descent alternates exact row updates of `H1` (each row is a weighted
//! projection problem over the current codes) with exact 1-D updates of the
//! entries of `H2`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::inner::{InnerStrategy, Problem};
use super::search::{restart_rng, run_indexed, Searcher};
use super::{check_pca_model, Diagnostics, SolverConfig};
use crate::error::{Error, Result};
use crate::model::SpectralModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarvinokSolution {
    /// `d x p`, row-major.
    pub h1: Vec<Vec<f64>>,
    /// `p x d`, row-major.
    pub h2: Vec<Vec<f64>>,
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

impl BarvinokSolution {
    pub fn h1_matrix(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.h1)
    }

    pub fn h2_matrix(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.h2)
    }

    /// `H = H1 (.) H2` in max-times.
    pub fn reconstruction_map(&self) -> DMatrix<f64> {
        max_times_product(&self.h1_matrix(), &self.h2_matrix())
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), c, |i, j| rows[i][j])
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn max_times_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        (0..a.ncols()).fold(0.0f64, |m, l| m.max(a[(i, l)] * b[(l, j)]))
    })
}

struct Factorization<'a> {
    nu: &'a DMatrix<f64>,
    mu: &'a [f64],
    d: usize,
    n: usize,
    p: usize,
    strategy: InnerStrategy,
}

impl Factorization<'_> {
    fn codes(&self, h2: &DMatrix<f64>) -> DMatrix<f64> {
        max_times_product(h2, self.nu)
    }

    fn objective(&self, h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> f64 {
        let recon = max_times_product(h1, &self.codes(h2));
        (0..self.n)
            .map(|j| {
                self.mu[j]
                    * (0..self.d)
                        .map(|i| (self.nu[(i, j)] - recon[(i, j)]).abs())
                        .sum::<f64>()
            })
            .sum()
    }

    /// Row `i` of `H1` solves a weighted projection of `nu_{i.}` onto the codes.
    fn update_h1(&self, h1: &mut DMatrix<f64>, codes: &DMatrix<f64>) {
        // column k of the per-row basis is row k of the codes
        let basis: Vec<f64> = (0..self.p)
            .flat_map(|k| codes.row(k).iter().copied().collect::<Vec<_>>())
            .collect();
        for i in 0..self.d {
            let u: Vec<f64> = self.nu.row(i).iter().copied().collect();
            let warm: Vec<f64> = h1.row(i).iter().copied().collect();
            let fit = Problem {
                u: &u,
                w: Some(self.mu),
                basis: &basis,
                p: self.p,
            }
            .solve(self.strategy, Some(&warm));
            for k in 0..self.p {
                h1[(i, k)] = fit.coefficients[k];
            }
        }
    }

    /// Exact 1-D minimization over each entry of `H2` in turn.
    fn update_h2(&self, h1: &DMatrix<f64>, h2: &mut DMatrix<f64>) {
        for k in 0..self.p {
            for l in 0..self.d {
                let codes = self.codes(h2);
                // code k with entry (k, l) removed, and the reconstruction without code k
                let rest: Vec<f64> = (0..self.n)
                    .map(|j| {
                        (0..self.d)
                            .filter(|&l2| l2 != l)
                            .fold(0.0f64, |m, l2| m.max(h2[(k, l2)] * self.nu[(l2, j)]))
                    })
                    .collect();
                let other = DMatrix::from_fn(self.d, self.n, |i, j| {
                    (0..self.p)
                        .filter(|&k2| k2 != k)
                        .fold(0.0f64, |m, k2| m.max(h1[(i, k2)] * codes[(k2, j)]))
                });
                // recon_ij(t) = max(a_ij t, b_ij)
                let a = |i: usize, j: usize| h1[(i, k)] * self.nu[(l, j)];
                let b = |i: usize, j: usize| (h1[(i, k)] * rest[j]).max(other[(i, j)]);
                let cost = |t: f64| -> f64 {
                    (0..self.n)
                        .map(|j| {
                            self.mu[j]
                                * (0..self.d)
                                    .map(|i| (self.nu[(i, j)] - (a(i, j) * t).max(b(i, j))).abs())
                                    .sum::<f64>()
                        })
                        .sum()
                };
                let mut best_t = h2[(k, l)];
                let mut best = cost(best_t);
                let mut consider = |t: f64| {
                    let f = cost(t);
                    if f < best {
                        best = f;
                        best_t = t;
                    }
                };
                consider(0.0);
                for j in 0..self.n {
                    for i in 0..self.d {
                        let aij = a(i, j);
                        if aij > 0.0 {
                            consider(self.nu[(i, j)] / aij);
                            let bij = b(i, j);
                            if bij > 0.0 {
                                consider(bij / aij);
                            }
                        }
                    }
                }
                h2[(k, l)] = best_t;
            }
        }
    }

    /// `H2_{kl} = 1 / H1_{lk}` where positive: codes become residuation-like
    /// ratios against the columns of `H1`.
    fn residuation_h2(&self, h1: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(
            self.p,
            self.d,
            |k, l| if h1[(l, k)] > 0.0 { 1.0 / h1[(l, k)] } else { 0.0 },
        )
    }

    fn descend(
        &self,
        mut h1: DMatrix<f64>,
        mut h2: DMatrix<f64>,
        cfg: &SolverConfig,
    ) -> (DMatrix<f64>, DMatrix<f64>, f64, bool, usize) {
        let mut f = self.objective(&h1, &h2);
        let mut iterations = 0;
        let mut converged = f == 0.0;
        while !converged && iterations < cfg.max_iters {
            iterations += 1;
            let before = f;
            let codes = self.codes(&h2);
            let mut next1 = h1.clone();
            self.update_h1(&mut next1, &codes);
            let f1 = self.objective(&next1, &h2);
            if f1 <= f {
                h1 = next1;
                f = f1;
            }
            let mut next2 = h2.clone();
            self.update_h2(&h1, &mut next2);
            let f2 = self.objective(&h1, &next2);
            if f2 <= f {
                h2 = next2;
                f = f2;
            }
            if f == 0.0 || before - f <= cfg.tol * before.max(1e-300) {
                converged = true;
            }
        }
        (h1, h2, f, converged, iterations)
    }
}

/// Exhaustive, linearly inferable PCA with `H = H1 (.) H2`.
pub fn barvinok_pca(m: &SpectralModel, p: usize, cfg: &SolverConfig) -> Result<BarvinokSolution> {
    cfg.validate()?;
    check_pca_model(m)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let (d, n) = (m.d(), m.n());
    let mut warnings = Vec::new();
    if p > d {
        warnings.push(format!("p = {p} exceeds d = {d}; H is already unrestricted at p = d"));
    }
    let fact = Factorization {
        nu: m.nu(),
        mu: m.mu(),
        d,
        n,
        p,
        strategy: cfg.inner,
    };
    let dirs: Vec<Vec<f64>> = Searcher::new(m, cfg.inner)
        .atom_directions()
        .into_iter()
        .take(32)
        .collect();

    let mut seeds: Vec<DMatrix<f64>> = Vec::new();
    if p >= d {
        seeds.push(DMatrix::from_fn(d, p, |i, k| if i == k { 1.0 } else { 0.0 }));
    }
    seeds.push(DMatrix::from_fn(d, p, |i, k| dirs[k % dirs.len()][i]));
    // each atom direction in the first column, the heaviest others after it
    for a in dirs.iter().skip(1) {
        let mut cols = vec![a.clone()];
        cols.extend(dirs.iter().filter(|o| *o != a).take(p - 1).cloned());
        while cols.len() < p {
            cols.push(a.clone());
        }
        seeds.push(DMatrix::from_fn(d, p, |i, k| cols[k][i]));
    }
    let deterministic = seeds.len();
    let n_seeds = deterministic + cfg.restarts;
    let results = run_indexed(n_seeds, cfg.threads, |idx| {
        let mut rng = restart_rng(cfg.seed, 500 + p as u64, idx);
        let h1 = if idx < deterministic {
            seeds[idx].clone()
        } else {
            DMatrix::from_fn(d, p, |_, _| rng.random::<f64>())
        };
        let h2 = fact.residuation_h2(&h1);
        fact.descend(h1, h2, cfg)
    });
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.2 < results[best].2 {
            best = i;
        }
    }
    let (h1, h2, objective, converged, iterations) = results[best].clone();
    Ok(BarvinokSolution {
        h1: matrix_to_rows(&h1),
        h2: matrix_to_rows(&h2),
        objective,
        diagnostics: Diagnostics {
            restarts: n_seeds,
            best_restart: best,
            converged,
            iterations,
            stage_objectives: vec![objective],
            warnings,
        },
    })
}
