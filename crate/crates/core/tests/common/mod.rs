//! Reference computations written without the library's solvers.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Mat = Vec<Vec<f64>>;

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn rel(scale: f64) -> f64 {
    1e-12 * scale.abs().max(1.0)
}

/// `min_{c >= 0} sum_i |u_i - c b_i|`. The objective is convex and piecewise
/// linear in `c`, so a breakpoint or `c = 0` attains it.
pub fn l1_ray_fit(u: &[f64], b: &[f64]) -> f64 {
    let eval = |c: f64| u.iter().zip(b).map(|(x, y)| (x - c * y).abs()).sum::<f64>();
    let mut best = eval(0.0);
    for (x, y) in u.iter().zip(b) {
        if *y > 0.0 {
            best = best.min(eval(x / y));
        }
    }
    best
}

/// One-column PCA objective `sum_j mu_j min_c ||nu_j - c b||_1`.
pub fn pca1_objective(nu: &Mat, mu: &[f64], b: &[f64]) -> f64 {
    let n = mu.len();
    (0..n)
        .map(|j| {
            let col: Vec<f64> = nu.iter().map(|row| row[j]).collect();
            mu[j] * l1_ray_fit(&col, b)
        })
        .sum()
}

/// Points `(1, s)` then `(2 - s, 1)` for `s` in `[0, 2]`: the positive
/// quadrant of the sup-norm sphere.
pub fn sup_sphere_2d(steps: usize) -> Vec<(f64, Vec<f64>)> {
    (0..=steps)
        .map(|i| {
            let s = 2.0 * i as f64 / steps as f64;
            (s, if s <= 1.0 { vec![1.0, s] } else { vec![2.0 - s, 1.0] })
        })
        .collect()
}

/// Nested grid search for `min_{c >= 0} ||u - max_k c_k b_k||_1` with
/// `p <= 2` columns. Zooms from every distinct local minimum of the coarse
/// grid.
pub fn grid_inner(u: &[f64], cols: &[Vec<f64>]) -> f64 {
    let p = cols.len();
    assert!(p == 1 || p == 2);
    let eval = |c: &[f64]| -> f64 {
        u.iter()
            .enumerate()
            .map(|(i, &ui)| (ui - (0..p).fold(0.0f64, |m, k| m.max(c[k] * cols[k][i]))).abs())
            .sum()
    };
    let upper: Vec<f64> = cols
        .iter()
        .map(|b| {
            b.iter()
                .zip(u)
                .filter(|(&bi, _)| bi > 0.0)
                .map(|(&bi, &ui)| ui / bi)
                .fold(0.0, f64::max)
        })
        .collect();
    let pts: usize = if p == 1 { 4001 } else { 401 };
    let at = |lo: &[f64], hi: &[f64], n: usize, idx: usize| -> Vec<f64> {
        let mut idx = idx;
        (0..p)
            .map(|k| {
                let s = idx % n;
                idx /= n;
                lo[k] + (hi[k] - lo[k]) * s as f64 / (n - 1) as f64
            })
            .collect()
    };
    let zero = vec![0.0; p];
    let total = pts.pow(p as u32);
    let coarse: Vec<f64> = (0..total).map(|i| eval(&at(&zero, &upper, pts, i))).collect();
    let is_local_min = |i: usize| {
        let mut stride = 1;
        for _ in 0..p {
            let s = (i / stride) % pts;
            if s > 0 && coarse[i - stride] < coarse[i] {
                return false;
            }
            if s + 1 < pts && coarse[i + stride] < coarse[i] {
                return false;
            }
            stride *= pts;
        }
        true
    };
    let mut starts: Vec<usize> = (0..total).filter(|&i| is_local_min(i)).collect();
    starts.sort_by(|&a, &b| coarse[a].total_cmp(&coarse[b]));
    starts.dedup_by(|a, b| (coarse[*a] - coarse[*b]).abs() <= 1e-12);

    let zoom: usize = 21;
    let mut best = f64::INFINITY;
    for &i in starts.iter().take(32) {
        best = best.min(coarse[i]);
        let mut centre = at(&zero, &upper, pts, i);
        let mut half: Vec<f64> = upper.iter().map(|h| 2.0 * h / (pts - 1) as f64).collect();
        for _ in 0..40 {
            let lo: Vec<f64> = centre.iter().zip(&half).map(|(c, h)| (c - h).max(0.0)).collect();
            let hi: Vec<f64> = centre
                .iter()
                .zip(&half)
                .zip(&upper)
                .map(|((c, h), u)| (c + h).min(*u))
                .collect();
            let (f, c) = (0..zoom.pow(p as u32))
                .map(|j| {
                    let c = at(&lo, &hi, zoom, j);
                    (eval(&c), c)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap();
            best = best.min(f);
            centre = c;
            half.iter_mut().for_each(|h| *h *= 0.6);
        }
    }
    best
}

/// Cyclic Jacobi rotations. Returns eigenvalues (descending) and the
/// matching eigenvectors as columns.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = (0..n).map(|i| order.iter().map(|&k| v[i][k]).collect()).collect();
    (values, vectors)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Mat = a
        .iter()
        .zip(b)
        .map(|(row, &r)| row.iter().copied().chain([r]).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Orthogonal projector onto the span of the (orthonormal) columns.
pub fn projector(cols: &Mat) -> Mat {
    mat_mul(cols, &transpose(cols))
}

/// Sine of the largest principal angle between two orthonormal bases of
/// equal dimension: the spectral norm of the projector difference, bounded
/// here by the Frobenius norm over sqrt(2).
pub fn subspace_gap(a: &Mat, b: &Mat) -> f64 {
    let (pa, pb) = (projector(a), projector(b));
    let f: f64 = pa
        .iter()
        .zip(&pb)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)))
        .sum();
    (f / 2.0).sqrt()
}

/// Leading `p` eigenvectors of a symmetric matrix, as `d x p` columns.
pub fn top_eigvecs(a: &Mat, p: usize) -> Mat {
    let (_, v) = jacobi_eigen(a);
    v.iter().map(|row| row[..p].to_vec()).collect()
}

/// Population residual variance of `y = a^T Z` after projection on the
/// predictors `t` (1-based indices into `Z`).
pub fn residual_oracle(cov_z: &Mat, a: &[f64], t: &[usize]) -> f64 {
    let k = a.len();
    let var_y: f64 = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| a[i] * cov_z[i][j] * a[j])
        .sum();
    if t.is_empty() {
        return var_y;
    }
    let c: Vec<f64> = t.iter().map(|&i| (0..k).map(|j| cov_z[i][j] * a[j]).sum()).collect();
    let s: Mat = t.iter().map(|&i| t.iter().map(|&j| cov_z[i][j]).collect()).collect();
    let x = solve(&s, &c);
    var_y - c.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>()
}

/// Every subset of `1..=k1` with at most `p` elements.
pub fn subsets(k1: usize, p: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << k1))
        .filter(|m| m.count_ones() as usize <= p)
        .map(|m| (1..=k1).filter(|i| m & (1 << (i - 1)) != 0).collect())
        .collect()
}

/// `exp(-sum_j (mu_j max_i nu_ij / x_i)^alpha)`.
pub fn max_stable_cdf_oracle(nu: &Mat, mu: &[f64], alpha: f64, x: &[f64]) -> f64 {
    let e: f64 = (0..mu.len())
        .map(|j| {
            let r = (0..x.len()).fold(0.0f64, |m, i| m.max(nu[i][j] / x[i]));
            (mu[j] * r).powf(alpha)
        })
        .sum();
    (-e).exp()
}

/// Rows of a nalgebra matrix as nested vectors.
pub fn rows(m: &nalgebra::DMatrix<f64>) -> Mat {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
