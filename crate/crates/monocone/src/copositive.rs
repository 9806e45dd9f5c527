//! Exact copositivity of rational symmetric matrices.
//!
//! `M` is copositive when `λᵀMλ ≥ 0` for all `λ ≥ 0`. The test runs the
//! classical determinant/adjugate recursion over principal submatrices: with
//! every proper principal submatrix copositive, `M` fails copositivity
//! exactly when `det M < 0` and `adj M ≥ 0` entrywise, in which case
//! `λ = −M⁻¹𝟙 ≥ 0` is an explicit violating multiplier. Everything is exact
//! rational; subsets are memoized. Quadratic nonnegativity on a polyhedral
//! cone reduces to copositivity of the Gram-type matrix of its generators,
//! which is how the PSD coderivative conditions get verified stratum by
//! stratum.

use crate::rat::{RVec, Rat, RatMat};
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Copositivity {
    Copositive,
    /// `lambda ≥ 0` with `λᵀMλ = value < 0`.
    Not { lambda: RVec, value: Rat },
}

/// Exact determinant by rational Gaussian elimination.
pub fn det(mat: &[RVec]) -> Rat {
    let n = mat.len();
    let mut m: Vec<RVec> = mat.to_vec();
    let mut sign = Rat::one();
    let mut result = Rat::one();
    for col in 0..n {
        let Some(pr) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if pr != col {
            m.swap(pr, col);
            sign = -sign;
        }
        let pivot = m[col][col].clone();
        result = result * &pivot;
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] = &m[r][c] - delta;
            }
        }
    }
    sign * result
}

/// Adjugate matrix: `adj(M)·M = det(M)·I`.
pub fn adjugate(mat: &[RVec]) -> Vec<RVec> {
    let n = mat.len();
    if n == 1 {
        return vec![vec![Rat::one()]];
    }
    let mut adj = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            // adj[i][j] = (−1)^{i+j} · det(M with row j and column i removed)
            let minor: Vec<RVec> = (0..n)
                .filter(|&r| r != j)
                .map(|r| (0..n).filter(|&c| c != i).map(|c| mat[r][c].clone()).collect())
                .collect();
            let d = det(&minor);
            adj[i][j] = if (i + j) % 2 == 0 { d } else { -d };
        }
    }
    adj
}

/// Exact copositivity with a violating multiplier on failure.
pub fn check_copositive(m: &RatMat) -> Copositivity {
    assert!(m.is_symmetric(), "copositivity is defined for symmetric matrices");
    let n = m.nrows();
    if n == 0 {
        return Copositivity::Copositive;
    }
    if n > 20 {
        panic!("copositivity recursion beyond 20 generators is not supported");
    }
    let mut memo: HashMap<u32, Copositivity> = HashMap::new();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    // Process subsets in order of increasing popcount so children exist.
    let mut subsets: Vec<u32> = (1..=full).collect();
    subsets.sort_by_key(|s| s.count_ones());
    for s in subsets {
        if s & full != s {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|&i| s & (1 << i) != 0).collect();
        let k = idx.len();
        // A child failing propagates its witness (padded with zeros).
        let mut verdict = Copositivity::Copositive;
        if k == 1 {
            let d = &m.rows[idx[0]][idx[0]];
            if d.is_negative() {
                verdict = Copositivity::Not { lambda: vec![Rat::one()], value: d.clone() };
            }
        } else {
            let mut child_failed = None;
            for drop in 0..k {
                let child_mask = s & !(1u32 << idx[drop]);
                if let Some(Copositivity::Not { lambda, value }) = memo.get(&child_mask) {
                    // Lift the child multiplier back into S's coordinates.
                    let mut lifted = vec![Rat::zero(); k];
                    let child_idx: Vec<usize> =
                        (0..k).filter(|&t| t != drop).collect();
                    for (pos, &t) in child_idx.iter().enumerate() {
                        lifted[t] = lambda[pos].clone();
                    }
                    child_failed = Some(Copositivity::Not { lambda: lifted, value: value.clone() });
                    break;
                }
            }
            if let Some(fail) = child_failed {
                verdict = fail;
            } else {
                let sub: Vec<RVec> = idx
                    .iter()
                    .map(|&r| idx.iter().map(|&c| m.rows[r][c].clone()).collect())
                    .collect();
                let d = det(&sub);
                if d.is_negative() {
                    let adj = adjugate(&sub);
                    let nonneg = adj.iter().all(|row| row.iter().all(|x| !x.is_negative()));
                    if nonneg {
                        // λ = −M⁻¹𝟙 = adj·𝟙 / |det| ≥ 0 and λᵀMλ = −Σλ < 0.
                        let lambda: RVec = adj
                            .iter()
                            .map(|row| row.iter().sum::<Rat>() / -d.clone())
                            .collect();
                        let value = -lambda.iter().sum::<Rat>();
                        debug_assert!(value.is_negative());
                        verdict = Copositivity::Not { lambda, value };
                    }
                }
            }
        }
        memo.insert(s, verdict);
    }
    match memo.remove(&full).expect("full mask processed") {
        Copositivity::Copositive => Copositivity::Copositive,
        Copositivity::Not { lambda, value } => {
            // The stored witness is in subset coordinates only when the full
            // mask failed through a child chain; it already has length n here
            // because lifting happens at every level.
            debug_assert_eq!(lambda.len(), n);
            debug_assert!({
                let q = quad_form(m, &lambda);
                q.is_negative() && q == value
            });
            Copositivity::Not { lambda, value }
        }
    }
}

pub fn quad_form(m: &RatMat, x: &[Rat]) -> Rat {
    let mx = m.matvec(x);
    crate::rat::dot(x, &mx)
}

/// Gram-type matrix of generators under a bilinear form: `G[t][s] = r_tᵀ B r_s`.
pub fn generator_form(rays: &[RVec], b: &RatMat) -> RatMat {
    let k = rays.len();
    let mut rows = vec![vec![Rat::zero(); k]; k];
    for t in 0..k {
        let brt = b.matvec(&rays[t]);
        for s in 0..k {
            rows[t][s] = crate::rat::dot(&rays[s], &brt);
        }
    }
    RatMat::new(rows)
}
