//! Spans, independence and rank constructions in max-times semimodules.
//!
//! Span membership uses residuation: the largest coefficients `c_k` with
//! `c_k b_k <= v` are `c_k = min_i v_i / b_ik` over `b_ik > 0`, and `v` lies
//! in the span iff those coefficients reconstruct it.

use crate::error::{Error, Result};
use crate::semiring::{approx_eq, preorder_leq, PreorderMode, SemiVector, SemiringSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct SpanMembership {
    pub member: bool,
    /// Residuated coefficients; present only for members.
    pub coefficients: Option<Vec<f64>>,
}

fn require_max_times(s: SemiringSpec, what: &str) -> Result<()> {
    if s != SemiringSpec::MaxTimes {
        return Err(Error::Unsupported(format!(
            "{what} is only defined over max-times, not {}",
            s.name()
        )));
    }
    Ok(())
}

/// Greatest coefficients `c` with `max_k c_k b_k <= v` entrywise.
pub fn residuate(v: &[f64], basis: &[&[f64]]) -> Vec<f64> {
    basis
        .iter()
        .map(|b| {
            b.iter()
                .zip(v)
                .filter(|(&bi, _)| bi > 0.0)
                .map(|(&bi, &vi)| vi / bi)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `max_k c_k b_k`, entrywise.
pub fn max_combination(coefficients: &[f64], basis: &[&[f64]], d: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; d];
    for (&c, b) in coefficients.iter().zip(basis) {
        for (o, &bi) in out.iter_mut().zip(b.iter()) {
            *o = o.max(c * bi);
        }
    }
    out
}

pub fn span_membership(v: &SemiVector, basis: &[SemiVector], s: SemiringSpec) -> Result<SpanMembership> {
    require_max_times(s, "span membership")?;
    if basis.is_empty() {
        return Err(Error::InvalidParameter("empty basis".into()));
    }
    for (k, b) in basis.iter().enumerate() {
        require_max_times(b.semiring(), "span membership")?;
        if b.len() != v.len() {
            return Err(Error::ShapeMismatch(format!(
                "basis vector {k} has length {}, expected {}",
                b.len(),
                v.len()
            )));
        }
        if b.is_zero() {
            return Err(Error::ZeroVector(format!("basis vector {k}")));
        }
    }
    let cols: Vec<&[f64]> = basis.iter().map(SemiVector::entries).collect();
    let c = residuate(v.entries(), &cols);
    let recon = max_combination(&c, &cols, v.len());
    let member = recon.iter().zip(v.entries()).all(|(&a, &b)| approx_eq(a, b));
    Ok(SpanMembership {
        member,
        coefficients: member.then_some(c),
    })
}

/// True iff no vector lies in the span of the others.
///
/// The general definition quantifies over a scalar `g` multiplying the tested
/// vector; because `((0, inf), *)` is a group, `g` can be taken as 1.
pub fn independence_check(vectors: &[SemiVector], s: SemiringSpec) -> Result<bool> {
    require_max_times(s, "independence")?;
    if let Some(k) = vectors.iter().position(SemiVector::is_zero) {
        return Err(Error::ZeroVector(format!("vector {k}")));
    }
    for k in 0..vectors.len() {
        let others: Vec<SemiVector> = vectors
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, v)| v.clone())
            .collect();
        if others.is_empty() {
            continue;
        }
        if span_membership(&vectors[k], &others, s)?.member {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A permutation of `{0, 1, 2}` and a coordinate flip `k` witnessing the
/// two-inequality ordering of three vectors in `R^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lemma2Witness {
    pub permutation: [usize; 3],
    pub k: usize,
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Checks both inequalities for a candidate `(pi, k)`. Coordinates are
/// 0-based: `1 + k` becomes `k`, `2 - k` becomes `1 - k`.
pub fn lemma2_holds(x: [&[f64]; 3], w: Lemma2Witness, s: SemiringSpec) -> bool {
    let [p1, p2, p3] = w.permutation;
    let (a, b) = (w.k, 1 - w.k);
    let first = preorder_leq(
        PreorderMode::Strict,
        s.mul(x[p1][b], x[p3][a]),
        s.mul(x[p1][a], x[p3][b]),
        s,
    );
    let second = preorder_leq(
        PreorderMode::Strict,
        s.mul(x[p2][a], x[p3][b]),
        s.mul(x[p2][b], x[p3][a]),
        s,
    );
    first && second
}

/// Exhaustive search over the 6 permutations and 2 flips.
pub fn lemma2_permutation(x1: &SemiVector, x2: &SemiVector, x3: &SemiVector, s: SemiringSpec) -> Result<Lemma2Witness> {
    require_max_times(s, "the three-vector ordering")?;
    for v in [x1, x2, x3] {
        if v.len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "expected vectors in R^2, got length {}",
                v.len()
            )));
        }
    }
    let x = [x1.entries(), x2.entries(), x3.entries()];
    for permutation in PERMUTATIONS {
        for k in 0..2 {
            let w = Lemma2Witness { permutation, k };
            if lemma2_holds(x, w, s) {
                return Ok(w);
            }
        }
    }
    Err(Error::Internal(format!(
        "no ordering witness for {:?}, {:?}, {:?}",
        x[0], x[1], x[2]
    )))
}

/// The family `x_i = (1, delta^i, delta^(2i))`, `i = 1..=n`.
///
/// Any `delta > 1` makes the family independent in max-times; callers that
/// want numeric headroom should use `delta > 2`.
pub fn thm3_family(n: usize, delta: f64) -> Result<Vec<SemiVector>> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    (1..=n)
        .map(|i| {
            let di = delta.powi(i as i32);
            SemiVector::max_times(vec![1.0, di, di * di])
        })
        .collect()
}
