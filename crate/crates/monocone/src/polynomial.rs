//! Multivariate polynomials and rational functions with exact coefficients.
//!
//! Just enough symbolic machinery for operator components: evaluation at
//! rational points and exact partial derivatives for adjoint Jacobians.

use crate::error::{Error, Result};
use crate::rat::{RVec, Rat};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Sparse polynomial: map from exponent vectors to coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub dim: usize,
    pub terms: BTreeMap<Vec<u32>, Rat>,
}

impl Poly {
    pub fn new(dim: usize, raw: Vec<(Rat, Vec<u32>)>) -> Result<Self> {
        let mut terms: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
        for (c, powers) in raw {
            if powers.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: powers.len() });
            }
            let entry = terms.entry(powers).or_insert_with(Rat::zero);
            *entry = &*entry + c;
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(Poly { dim, terms })
    }

    pub fn constant(dim: usize, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; dim], c);
        }
        Poly { dim, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        let mut acc = Rat::zero();
        for (powers, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &p) in x.iter().zip(powers) {
                for _ in 0..p {
                    t = &t * xi;
                }
            }
            acc = acc + t;
        }
        acc
    }

    pub fn partial(&self, j: usize) -> Poly {
        let mut terms: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
        for (powers, c) in &self.terms {
            let p = powers[j];
            if p == 0 {
                continue;
            }
            let mut q = powers.clone();
            q[j] = p - 1;
            let coeff = c * Rat::from_integer(p.into());
            let entry = terms.entry(q).or_insert_with(Rat::zero);
            *entry = &*entry + coeff;
        }
        let mut out = Poly { dim: self.dim, terms };
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                let powers: Vec<u32> = pa.iter().zip(pb).map(|(a, b)| a + b).collect();
                let entry = terms.entry(powers).or_insert_with(Rat::zero);
                *entry = &*entry + ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Poly { dim: self.dim, terms }
    }
}

/// Ratio of two polynomials; the denominator must not be identically zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Invalid("denominator is identically zero".into()));
        }
        Ok(RationalFn { num, den })
    }

    pub fn poly(p: Poly) -> Self {
        let dim = p.dim;
        RationalFn { num: p, den: Poly::constant(dim, Rat::one()) }
    }

    /// Exact value at `x`; `None` when the denominator vanishes there.
    pub fn eval(&self, x: &[Rat]) -> Option<Rat> {
        let d = self.den.eval(x);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(x) / d)
        }
    }

    /// Exact value of `∂(num/den)/∂x_j` at `x`, via the quotient rule.
    pub fn partial_eval(&self, j: usize, x: &[Rat]) -> Option<Rat> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return None;
        }
        let n = self.num.eval(x);
        let dn = self.num.partial(j).eval(x);
        let dd = self.den.partial(j).eval(x);
        Some((dn * &d - n * dd) / (&d * &d))
    }
}

/// A map ℝⁿ → ℝⁿ with rational-function components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMapFn {
    pub dim: usize,
    pub components: Vec<RationalFn>,
}

impl RationalMapFn {
    pub fn new(dim: usize, components: Vec<RationalFn>) -> Result<Self> {
        if components.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: components.len() });
        }
        Ok(RationalMapFn { dim, components })
    }

    /// `None` when `x` is outside the open domain (some denominator vanishes).
    pub fn eval(&self, x: &[Rat]) -> Option<RVec> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn in_domain(&self, x: &[Rat]) -> bool {
        self.components.iter().all(|c| !c.den.eval(x).is_zero())
    }

    /// Exact Jacobian rows `J[i][j] = ∂T_i/∂x_j` at `x`.
    pub fn jacobian(&self, x: &[Rat]) -> Option<Vec<RVec>> {
        self.components
            .iter()
            .map(|c| (0..self.dim).map(|j| c.partial_eval(j, x)).collect::<Option<RVec>>())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat_i, ratio};

    /// T(x) = -1/x in one variable.
    fn neg_reciprocal() -> RationalMapFn {
        let num = Poly::new(1, vec![(rat_i(-1), vec![0])]).unwrap();
        let den = Poly::new(1, vec![(rat_i(1), vec![1])]).unwrap();
        RationalMapFn::new(1, vec![RationalFn::new(num, den).unwrap()]).unwrap()
    }

    #[test]
    fn eval_and_domain() {
        let t = neg_reciprocal();
        assert_eq!(t.eval(&[rat_i(2)]), Some(vec![ratio(-1, 2)]));
        assert_eq!(t.eval(&[rat_i(0)]), None);
        assert!(!t.in_domain(&[rat_i(0)]));
    }

    #[test]
    fn derivative_of_reciprocal() {
        // d/dx (-1/x) = 1/x²; at x = 2 this is 1/4.
        let t = neg_reciprocal();
        let j = t.jacobian(&[rat_i(2)]).unwrap();
        assert_eq!(j[0][0], ratio(1, 4));
    }

    #[test]
    fn multivariate_partials() {
        // f(x,y) = x²y + 3y: ∂x = 2xy, ∂y = x² + 3
        let f = Poly::new(
            2,
            vec![(rat_i(1), vec![2, 1]), (rat_i(3), vec![0, 1])],
        )
        .unwrap();
        assert_eq!(f.partial(0).eval(&[rat_i(2), rat_i(5)]), rat_i(20));
        assert_eq!(f.partial(1).eval(&[rat_i(2), rat_i(5)]), rat_i(7));
    }

    #[test]
    fn quotient_rule() {
        // g(x) = x² / (x+1): g'(x) = (x² + 2x)/(x+1)²; at x=1: 3/4.
        let num = Poly::new(1, vec![(rat_i(1), vec![2])]).unwrap();
        let den = Poly::new(1, vec![(rat_i(1), vec![1]), (rat_i(1), vec![0])]).unwrap();
        let g = RationalFn::new(num, den).unwrap();
        assert_eq!(g.partial_eval(0, &[rat_i(1)]), Some(ratio(3, 4)));
    }
}
