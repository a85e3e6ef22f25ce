//! Multistart pattern search over bases on the unit sup-norm sphere.
//!
//! Each restart polls `+-step` moves on every free entry, then random
//! directions, and halves the step when nothing improves. Seeds come from the
//! model's own atom directions, warm starts, and seeded random vectors.
//! Restarts are independent; the reduction picks the lowest objective, then
//! the lexicographically smallest basis, then the lowest restart index, so
//! the result does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::inner::{InnerStrategy, Problem};
use super::{check_pca_model, make_solution, Diagnostics, PcaSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{q_norm, SpectralModel};

/// Atom directions used as seeds, by decreasing mass.
const MAX_ATOM_SEEDS: usize = 32;
const INITIAL_STEP: f64 = 0.25;

pub(crate) fn restart_rng(seed: u64, stream: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(1_000_003).wrapping_add(index as u64));
    rng
}

/// Runs `f(0..n)` serially or on a dedicated pool; output order is by index.
pub(crate) fn run_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, threads: usize, f: F) -> Vec<T> {
    if threads <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Run {
    pub flat: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Index of the winning run.
pub(crate) fn select_best(runs: &[Run]) -> usize {
    let mut best = 0;
    for (i, r) in runs.iter().enumerate().skip(1) {
        let b = &runs[best];
        if (r.objective < b.objective && !ties(r.objective, b.objective))
            || (ties(r.objective, b.objective) && lex_less(&r.flat, &b.flat))
        {
            best = i;
        }
    }
    best
}

pub(crate) struct Searcher<'a> {
    model: &'a SpectralModel,
    atoms: Vec<Vec<f64>>,
    d: usize,
    strategy: InnerStrategy,
}

impl<'a> Searcher<'a> {
    pub fn new(model: &'a SpectralModel, strategy: InnerStrategy) -> Self {
        Self {
            model,
            atoms: model.columns(),
            d: model.d(),
            strategy,
        }
    }

    pub fn objective(&self, flat: &[f64], p: usize) -> f64 {
        self.atoms
            .iter()
            .zip(self.model.mu())
            .map(|(u, &mu)| {
                mu * Problem {
                    u,
                    w: None,
                    basis: flat,
                    p,
                }
                .solve(self.strategy, None)
                .distance
            })
            .sum()
    }

    /// Distinct sup-normalized atom directions, heaviest first.
    pub fn atom_directions(&self) -> Vec<Vec<f64>> {
        let mut dirs: Vec<(f64, Vec<f64>)> = Vec::new();
        for (u, &mu) in self.atoms.iter().zip(self.model.mu()) {
            let r = q_norm(u, f64::INFINITY);
            let dir: Vec<f64> = u.iter().map(|x| x / r).collect();
            match dirs.iter_mut().find(|(_, o)| o == &dir) {
                Some((mass, _)) => *mass += r * mu,
                None => dirs.push((r * mu, dir)),
            }
        }
        // stable: equal masses keep model order
        dirs.sort_by(|a, b| b.0.total_cmp(&a.0));
        dirs.into_iter().map(|(_, d)| d).collect()
    }

    fn random_column<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut col: Vec<f64> = (0..self.d).map(|_| rng.random::<f64>()).collect();
        normalize_column(&mut col);
        col
    }

    /// Random seed mixing atom directions and uniform columns.
    fn random_seed<R: Rng>(&self, rng: &mut R, dirs: &[Vec<f64>], columns: usize) -> Vec<f64> {
        let mut flat = Vec::with_capacity(columns * self.d);
        for _ in 0..columns {
            if !dirs.is_empty() && rng.random_bool(0.5) {
                let a = &dirs[rng.random_range(0..dirs.len())];
                let mut col: Vec<f64> = a.iter().map(|x| (x + 0.1 * rng.random::<f64>()).min(1.0)).collect();
                normalize_column(&mut col);
                flat.extend(col);
            } else {
                flat.extend(self.random_column(rng));
            }
        }
        flat
    }

    /// Pattern search on columns `free_from..p` of `start`.
    pub fn local_search<R: Rng>(
        &self,
        start: Vec<f64>,
        p: usize,
        free_from: usize,
        cfg: &SolverConfig,
        rng: &mut R,
    ) -> Run {
        let d = self.d;
        let mut b = start;
        for k in free_from..p {
            normalize_column(&mut b[k * d..(k + 1) * d]);
        }
        let mut f = self.objective(&b, p);
        let mut step = INITIAL_STEP;
        let mut iterations = 0;
        let mut cand = b.clone();
        while step > cfg.tol && iterations < cfg.max_iters && f > 0.0 {
            iterations += 1;
            let mut improved = false;
            for k in free_from..p {
                for i in 0..d {
                    for sign in [1.0, -1.0] {
                        let old = b[k * d + i];
                        let new = (old + sign * step).clamp(0.0, 1.0);
                        if new == old {
                            continue;
                        }
                        cand.copy_from_slice(&b);
                        cand[k * d + i] = new;
                        if !normalize_column(&mut cand[k * d..(k + 1) * d]) {
                            continue;
                        }
                        let fc = self.objective(&cand, p);
                        if fc < f {
                            b.copy_from_slice(&cand);
                            f = fc;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                for _ in 0..2 * d {
                    let k = rng.random_range(free_from..p);
                    cand.copy_from_slice(&b);
                    for i in 0..d {
                        let dir = rng.random_range(-1.0..=1.0);
                        cand[k * d + i] = (b[k * d + i] + step * dir).clamp(0.0, 1.0);
                    }
                    if !normalize_column(&mut cand[k * d..(k + 1) * d]) {
                        continue;
                    }
                    let fc = self.objective(&cand, p);
                    if fc < f {
                        b.copy_from_slice(&cand);
                        f = fc;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Run {
            flat: b,
            objective: f,
            converged: step <= cfg.tol || f == 0.0,
            iterations,
        }
    }
}

/// Scales to unit sup norm; false for a zero column.
pub(crate) fn normalize_column(col: &mut [f64]) -> bool {
    let r = q_norm(col, f64::INFINITY);
    if r == 0.0 || !r.is_finite() {
        return false;
    }
    col.iter_mut().for_each(|x| *x /= r);
    true
}

/// Sorts columns lexicographically.
fn canonical_order(flat: &[f64], d: usize) -> Vec<f64> {
    let mut cols: Vec<&[f64]> = flat.chunks(d).collect();
    cols.sort_by(|a, b| {
        if lex_less(a, b) {
            std::cmp::Ordering::Less
        } else if lex_less(b, a) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    cols.concat()
}

fn check_inputs(m: &SpectralModel, p: usize, cfg: &SolverConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    check_pca_model(m)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let mut warnings = Vec::new();
    if p > m.d() {
        warnings.push(format!("p = {p} exceeds the dimension d = {}", m.d()));
    }
    Ok(warnings)
}

/// Optimizes one new column appended to `fixed`. Seeds: every atom
/// direction, then `cfg.restarts` random columns.
fn extend_by_one(s: &Searcher, fixed: &[f64], cfg: &SolverConfig, stream: u64) -> (Run, usize, usize) {
    let d = s.d;
    let p = fixed.len() / d + 1;
    let dirs: Vec<Vec<f64>> = s.atom_directions().into_iter().take(MAX_ATOM_SEEDS).collect();
    let n_seeds = dirs.len() + cfg.restarts;
    let runs = run_indexed(n_seeds, cfg.threads, |idx| {
        let mut rng = restart_rng(cfg.seed, stream, idx);
        let col = if idx < dirs.len() {
            dirs[idx].clone()
        } else {
            s.random_seed(&mut rng, &dirs, 1)
        };
        let mut start = fixed.to_vec();
        start.extend(col);
        s.local_search(start, p, p - 1, cfg, &mut rng)
    });
    let best = select_best(&runs);
    (runs[best].clone(), best, n_seeds)
}

/// Forward (nested) PCA: stage `k` optimizes column `k` with columns
/// `1..k-1` fixed at the previous stage's answer.
pub fn forward_pca(m: &SpectralModel, p: usize, cfg: &SolverConfig) -> Result<PcaSolution> {
    let warnings = check_inputs(m, p, cfg)?;
    let s = Searcher::new(m, cfg.inner);
    let mut fixed: Vec<f64> = Vec::new();
    let mut diag = Diagnostics {
        converged: true,
        warnings,
        ..Diagnostics::default()
    };
    for stage in 0..p {
        let (run, best, seeds) = extend_by_one(&s, &fixed, cfg, stage as u64 + 1);
        fixed = run.flat;
        diag.stage_objectives.push(run.objective);
        diag.restarts += seeds;
        diag.best_restart = best;
        diag.iterations += run.iterations;
        diag.converged &= run.converged;
    }
    make_solution(m, "forward", &fixed, p, cfg, diag)
}

/// Exhaustive PCA: all `p` columns free.
///
/// Seeds are the `p` heaviest atom directions, the `(p - 1)`-column optimum
/// extended by each atom direction, and `cfg.restarts` random bases. The warm
/// starts make the optimum nonincreasing in `p`.
pub fn exhaustive_pca(m: &SpectralModel, p: usize, cfg: &SolverConfig) -> Result<PcaSolution> {
    let warnings = check_inputs(m, p, cfg)?;
    let s = Searcher::new(m, cfg.inner);
    let (run, diag) = exhaustive_run(&s, p, cfg)?;
    let diag = Diagnostics { warnings, ..diag };
    make_solution(m, "exhaustive", &run.flat, p, cfg, diag)
}

fn exhaustive_run(s: &Searcher, p: usize, cfg: &SolverConfig) -> Result<(Run, Diagnostics)> {
    let d = s.d;
    if p == 1 {
        let (run, best, seeds) = extend_by_one(s, &[], cfg, 1);
        let diag = Diagnostics {
            restarts: seeds,
            best_restart: best,
            converged: run.converged,
            iterations: run.iterations,
            stage_objectives: vec![run.objective],
            warnings: Vec::new(),
        };
        return Ok((run, diag));
    }
    let (prev, prev_diag) = exhaustive_run(s, p - 1, cfg)?;
    let dirs: Vec<Vec<f64>> = s.atom_directions().into_iter().take(MAX_ATOM_SEEDS).collect();

    let mut seeds: Vec<Vec<f64>> = Vec::new();
    let top: Vec<f64> = (0..p).flat_map(|k| dirs[k % dirs.len()].clone()).collect();
    seeds.push(top);
    for a in &dirs {
        let mut warm = prev.flat.clone();
        warm.extend(a);
        seeds.push(warm);
    }
    let deterministic = seeds.len();
    let n_seeds = deterministic + cfg.restarts;
    let stream = 100 + p as u64;
    let runs = run_indexed(n_seeds, cfg.threads, |idx| {
        let mut rng = restart_rng(cfg.seed, stream, idx);
        let start = if idx < deterministic {
            seeds[idx].clone()
        } else {
            s.random_seed(&mut rng, &dirs, p)
        };
        let mut run = s.local_search(start, p, 0, cfg, &mut rng);
        run.flat = canonical_order(&run.flat, d);
        run
    });
    let best = select_best(&runs);
    let run = runs[best].clone();
    let mut stage_objectives = prev_diag.stage_objectives;
    stage_objectives.push(run.objective);
    let diag = Diagnostics {
        restarts: prev_diag.restarts + n_seeds,
        best_restart: best,
        converged: run.converged,
        iterations: prev_diag.iterations + run.iterations,
        stage_objectives,
        warnings: Vec::new(),
    };
    Ok((run, diag))
}
