//! Exact rational scalars, vectors and dense matrices.
//!
//! All polyhedral computations in this crate run on `BigRational` end to end.
//! Floating-point values enter only at the boundaries: JSON doubles are
//! converted exactly (every finite `f64` is a dyadic rational) and reports
//! carry `f64` approximations alongside the exact values.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat_i(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational `p/q`. Panics if `q == 0`.
pub fn ratio(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Exact conversion of a finite `f64` (dyadic rational). `None` for NaN/inf.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of approximations for huge numerators.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Parses `"p/q"`, integer, or plain decimal (`"-3.25"`) strings exactly.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|e| format!("bad numerator {p:?}: {e}"))?;
        let q: BigInt = q.trim().parse().map_err(|e| format!("bad denominator {q:?}: {e}"))?;
        if q.is_zero() {
            return Err(format!("zero denominator in {t:?}"));
        }
        return Ok(Rat::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|e| format!("bad decimal {t:?}: {e}"))?
        };
        let frac_digits = frac.len() as u32;
        let frac_val: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse().map_err(|e| format!("bad decimal {t:?}: {e}"))?
        };
        let denom = BigInt::from(10u32).pow(frac_digits);
        let num = &int * &denom + BigInt::from(sign) * frac_val;
        return Ok(Rat::new(num, denom));
    }
    let p: BigInt = t.parse().map_err(|e| format!("bad rational {t:?}: {e}"))?;
    Ok(Rat::from_integer(p))
}

/// Exact square root of a nonnegative rational, when it is rational.
pub fn rat_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(Rat::new(ns, ds))
    } else {
        None
    }
}

/// Renders a rational as `"p"` or `"p/q"`.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rational extended with `±∞` (box bounds, support values, margins).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtRat {
    MinusInf,
    Finite(Rat),
    PlusInf,
}

impl ExtRat {
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRat::MinusInf => f64::NEG_INFINITY,
            ExtRat::Finite(r) => rat_to_f64(r),
            ExtRat::PlusInf => f64::INFINITY,
        }
    }

    pub fn min(self, other: ExtRat) -> ExtRat {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use ExtRat::*;
        match (self, other) {
            (MinusInf, MinusInf) | (PlusInf, PlusInf) => std::cmp::Ordering::Equal,
            (MinusInf, _) | (_, PlusInf) => std::cmp::Ordering::Less,
            (_, MinusInf) | (PlusInf, _) => std::cmp::Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::MinusInf => write!(f, "-inf"),
            ExtRat::Finite(r) => write!(f, "{}", rat_to_string(r)),
            ExtRat::PlusInf => write!(f, "inf"),
        }
    }
}

// ---------------------------------------------------------------------------
// Vector helpers. Points and directions are plain `Vec<Rat>`.
// ---------------------------------------------------------------------------

pub type RVec = Vec<Rat>;

pub fn zeros(n: usize) -> RVec {
    vec![Rat::zero(); n]
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn vec_add(a: &[Rat], b: &[Rat]) -> RVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Rat], b: &[Rat]) -> RVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(s: &Rat, a: &[Rat]) -> RVec {
    a.iter().map(|x| s * x).collect()
}

pub fn norm_sq(a: &[Rat]) -> Rat {
    a.iter().map(|x| x * x).sum()
}

pub fn is_zero_vec(a: &[Rat]) -> bool {
    a.iter().all(|x| x.is_zero())
}

pub fn vec_to_f64(a: &[Rat]) -> Vec<f64> {
    a.iter().map(rat_to_f64).collect()
}

pub fn vec_from_f64(a: &[f64]) -> Option<RVec> {
    a.iter().map(|x| rat_from_f64(*x)).collect()
}

/// Scales a nonzero direction by a positive factor into a primitive integer
/// vector (entries coprime, denominators cleared). Positive scaling only, so
/// the direction it represents is unchanged; used to deduplicate rays.
pub fn canon_dir(a: &[Rat]) -> RVec {
    if is_zero_vec(a) {
        return a.to_vec();
    }
    let mut lcm_den = BigInt::one();
    for x in a {
        lcm_den = num_integer::lcm(lcm_den, x.denom().clone());
    }
    let ints: Vec<BigInt> = a.iter().map(|x| x.numer() * (&lcm_den / x.denom())).collect();
    let mut g = BigInt::zero();
    for v in &ints {
        g = num_integer::gcd(g, v.abs());
    }
    ints.into_iter().map(|v| Rat::from_integer(v / &g)).collect()
}

// ---------------------------------------------------------------------------
// Dense rational matrices.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMat {
    pub rows: Vec<RVec>,
}

impl RatMat {
    pub fn new(rows: Vec<RVec>) -> Self {
        RatMat { rows }
    }

    pub fn identity(n: usize) -> Self {
        let mut rows = vec![zeros(n); n];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = Rat::one();
        }
        RatMat { rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn matvec(&self, x: &[Rat]) -> RVec {
        self.rows.iter().map(|r| dot(r, x)).collect()
    }

    pub fn transpose(&self) -> RatMat {
        let (m, n) = (self.nrows(), self.ncols());
        let mut rows = vec![zeros(m); n];
        for i in 0..m {
            for j in 0..n {
                rows[j][i] = self.rows[i][j].clone();
            }
        }
        RatMat { rows }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.nrows();
        if n != self.ncols() {
            return false;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.rows[i][j] != self.rows[j][i] {
                    return false;
                }
            }
        }
        true
    }
}

/// Reduced row echelon form in place; returns pivot column indices.
pub fn rref(mat: &mut Vec<RVec>) -> Vec<usize> {
    let m = mat.len();
    let n = mat.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row >= m {
            break;
        }
        let Some(pr) = (row..m).find(|&r| !mat[r][col].is_zero()) else {
            continue;
        };
        mat.swap(row, pr);
        let inv = mat[row][col].clone();
        for v in mat[row].iter_mut() {
            *v = &*v / &inv;
        }
        for r in 0..m {
            if r != row && !mat[r][col].is_zero() {
                let factor = mat[r][col].clone();
                for c in 0..n {
                    let delta = &factor * &mat[row][c];
                    mat[r][c] = &mat[r][c] - delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Rank of a matrix (copy + rref).
pub fn rank(rows: &[RVec]) -> usize {
    let mut m: Vec<RVec> = rows.to_vec();
    rref(&mut m).len()
}

/// Solves `A x = b` exactly. `None` when inconsistent; when underdetermined,
/// returns the particular solution with free variables set to zero.
pub fn solve_linear(a: &[RVec], b: &[Rat]) -> Option<RVec> {
    let m = a.len();
    debug_assert_eq!(m, b.len());
    let n = a.first().map_or(0, |r| r.len());
    let mut aug: Vec<RVec> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&n) {
        return None; // pivot in the rhs column: inconsistent
    }
    let mut x = zeros(n);
    for (i, &col) in pivots.iter().enumerate() {
        x[col] = aug[i][n].clone();
    }
    Some(x)
}

/// Basis of the nullspace `{x : A x = 0}`.
pub fn nullspace(a: &[RVec]) -> Vec<RVec> {
    let n = a.first().map_or(0, |r| r.len());
    let mut m: Vec<RVec> = a.to_vec();
    let pivots = rref(&mut m);
    let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = zeros(n);
        v[free] = Rat::one();
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[i][free].clone();
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rat("-7").unwrap(), rat_i(-7));
        assert_eq!(parse_rat("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rat("-1.5").unwrap(), ratio(-3, 2));
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn f64_roundtrip_is_exact() {
        let r = rat_from_f64(0.1).unwrap();
        // 0.1 is not 1/10 as a double; the conversion must preserve the
        // exact dyadic value.
        assert_eq!(rat_to_f64(&r), 0.1);
        assert_ne!(r, ratio(1, 10));
    }

    #[test]
    fn canon_dir_scales_positively() {
        let v = vec![ratio(2, 3), ratio(-4, 3)];
        assert_eq!(canon_dir(&v), vec![rat_i(1), rat_i(-2)]);
    }

    #[test]
    fn solve_and_nullspace() {
        let a = vec![vec![rat_i(1), rat_i(1)], vec![rat_i(1), rat_i(-1)]];
        let x = solve_linear(&a, &[rat_i(3), rat_i(1)]).unwrap();
        assert_eq!(x, vec![rat_i(2), rat_i(1)]);

        let singular = vec![vec![rat_i(1), rat_i(2)]];
        let ns = nullspace(&singular);
        assert_eq!(ns.len(), 1);
        assert!(dot(&singular[0], &ns[0]).is_zero());

        assert!(solve_linear(
            &[vec![rat_i(1), rat_i(1)], vec![rat_i(1), rat_i(1)]],
            &[rat_i(0), rat_i(1)]
        )
        .is_none());
    }

    #[test]
    fn ext_rat_ordering() {
        assert!(ExtRat::MinusInf < ExtRat::Finite(rat_i(-1000)));
        assert!(ExtRat::Finite(rat_i(5)) < ExtRat::PlusInf);
        assert_eq!(
            ExtRat::Finite(rat_i(2)).min(ExtRat::Finite(rat_i(1))),
            ExtRat::Finite(rat_i(1))
        );
    }
}
