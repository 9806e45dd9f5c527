//! Finite maxima of quadratic functions.
//!
//! `f(x) = max_i { ½ xᵀQ_i x + c_iᵀx + d_i }` is the representation used for
//! every nonsmooth function in this crate: values, active sets, gradients and
//! subdifferentials are all exactly computable at rational points, and the
//! graph of `∂f` compiles to a polyhedral union in the one-dimensional and
//! shared-matrix cases.

use crate::error::{Error, Result};
use crate::rat::{dot, norm_sq, rat_to_f64, ratio, vec_add, vec_scale, vec_sub, RVec, Rat, RatMat};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadPiece {
    /// Symmetric matrix of the quadratic part `½ xᵀ Q x`.
    pub q: RatMat,
    pub c: RVec,
    pub d: Rat,
}

impl QuadPiece {
    pub fn value(&self, x: &[Rat]) -> Rat {
        let qx = self.q.matvec(x);
        dot(x, &qx) / crate::rat::rat_i(2) + dot(&self.c, x) + self.d.clone()
    }

    pub fn gradient(&self, x: &[Rat]) -> RVec {
        vec_add(&self.q.matvec(x), &self.c)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxQuadFunction {
    pub dim: usize,
    pub pieces: Vec<QuadPiece>,
}

/// `g(x) = f(x) − (κ/2)‖x‖²`, materialized by shifting every `Q_i` by `−κI`.
#[derive(Clone, Debug)]
pub struct ShiftedFunction {
    pub base: MaxQuadFunction,
    pub kappa: Rat,
}

impl ShiftedFunction {
    pub fn new(base: MaxQuadFunction, kappa: Rat) -> Result<Self> {
        if kappa.is_negative() {
            return Err(Error::Invalid("shift modulus must be nonnegative".into()));
        }
        Ok(ShiftedFunction { base, kappa })
    }

    pub fn as_maxquad(&self) -> MaxQuadFunction {
        let n = self.base.dim;
        let pieces = self
            .base
            .pieces
            .iter()
            .map(|p| {
                let mut q = p.q.clone();
                for i in 0..n {
                    q.rows[i][i] = &q.rows[i][i] - &self.kappa;
                }
                QuadPiece { q, c: p.c.clone(), d: p.d.clone() }
            })
            .collect();
        MaxQuadFunction { dim: n, pieces }
    }
}

impl MaxQuadFunction {
    pub fn new(dim: usize, pieces: Vec<QuadPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Invalid("need at least one quadratic piece".into()));
        }
        for p in &pieces {
            if p.q.nrows() != dim || p.q.ncols() != dim || p.c.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.c.len() });
            }
            if !p.q.is_symmetric() {
                return Err(Error::Invalid("quadratic matrix must be symmetric".into()));
            }
        }
        Ok(MaxQuadFunction { dim, pieces })
    }

    /// Convenience constructor for one-dimensional functions from
    /// `(q, c, d)` triples meaning `½qx² + cx + d`.
    pub fn one_dim(pieces: Vec<(Rat, Rat, Rat)>) -> Result<Self> {
        let ps = pieces
            .into_iter()
            .map(|(q, c, d)| QuadPiece { q: RatMat::new(vec![vec![q]]), c: vec![c], d })
            .collect();
        MaxQuadFunction::new(1, ps)
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .max()
            .expect("nonempty piece list")
    }

    /// Indices of pieces within `tol` of the maximum at `x`; exact active set
    /// for `tol = 0`.
    pub fn active_set(&self, x: &[Rat], tol: &Rat) -> Vec<usize> {
        let fx = self.eval(x);
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.value(x) >= &fx - tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Active gradients at `x`: the generators of the subdifferential.
    pub fn active_gradients(&self, x: &[Rat], tol: &Rat) -> Vec<RVec> {
        let mut grads: Vec<RVec> = Vec::new();
        for i in self.active_set(x, tol) {
            let g = self.pieces[i].gradient(x);
            if !grads.contains(&g) {
                grads.push(g);
            }
        }
        grads
    }

    /// The single shared quadratic matrix, when all pieces agree on it.
    pub fn shared_q(&self) -> Option<&RatMat> {
        let q0 = &self.pieces[0].q;
        self.pieces.iter().all(|p| &p.q == q0).then_some(q0)
    }

    /// Frobenius-norm bound on the gradient Lipschitz modulus, as an exact
    /// rational upper bound on `max_i ‖Q_i‖₂`.
    pub fn grad_lipschitz_bound_sq(&self) -> Rat {
        self.pieces
            .iter()
            .map(|p| p.q.rows.iter().map(|r| norm_sq(r)).sum::<Rat>())
            .max()
            .expect("nonempty piece list")
    }
}

/// Outcome of the sampled convexity oracle.
#[derive(Clone, Debug)]
pub enum OracleOutcome {
    Pass,
    Violation { x: RVec, y: RVec, lambda: Rat, margin: Rat },
}

/// Seeded midpoint-inequality oracle: checks
/// `f(λx + (1−λ)y) ≤ λf(x) + (1−λ)f(y) − (κ/2)λ(1−λ)‖x−y‖²`
/// on random rational triples. Entirely independent of the coderivative
/// machinery; violations beyond `1e−10` are returned with their witness.
pub fn convexity_oracle_sampling(
    f: &MaxQuadFunction,
    kappa: &Rat,
    triple_count: usize,
    seed: u64,
) -> Result<OracleOutcome> {
    if triple_count == 0 {
        return Err(Error::Invalid("need at least one triple".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = ratio(1, 10_000_000_000);
    let mut draw = |lo: i64, hi: i64| -> Rat {
        // Dyadic rational in [lo, hi] with 2^20 steps: exact and seedable.
        let k = rng.gen_range(0..=(1u64 << 20)) as i64;
        ratio(lo, 1) + ratio(hi - lo, 1) * ratio(k, 1 << 20)
    };
    for _ in 0..triple_count {
        let x: RVec = (0..f.dim).map(|_| draw(-10, 10)).collect();
        let y: RVec = (0..f.dim).map(|_| draw(-10, 10)).collect();
        let lam = draw(0, 1);
        let mid: RVec = vec_add(&vec_scale(&lam, &x), &vec_scale(&(Rat::one() - &lam), &y));
        let lhs = f.eval(&mid);
        let rhs = &lam * f.eval(&x) + (Rat::one() - &lam) * f.eval(&y)
            - kappa / crate::rat::rat_i(2) * &lam * (Rat::one() - &lam) * norm_sq(&vec_sub(&x, &y));
        if lhs > &rhs + &tol {
            return Ok(OracleOutcome::Violation { x, y, lambda: lam, margin: lhs - rhs });
        }
    }
    Ok(OracleOutcome::Pass)
}

/// Report from the mean-value inequality test.
#[derive(Clone, Debug)]
pub struct MeanValueReport {
    pub holds: bool,
    pub lhs: f64,
    pub segment_norm: f64,
    pub sup_estimate: f64,
}

/// Checks `|f(b) − f(a)| ≤ ‖b−a‖ · sup{‖v‖ : v ∈ ∂f(c), c ∈ [a,b] + εB}`.
///
/// The sup is estimated on a grid over the inflated segment and then
/// inflated by the gradient Lipschitz bound times the covering radius, which
/// makes the reported estimate a rigorous upper bound of the true grid-free
/// sup for max-quad functions.
pub fn mean_value_inequality_test(
    f: &MaxQuadFunction,
    a: &[Rat],
    b: &[Rat],
    eps: &Rat,
    grid_density: usize,
) -> Result<MeanValueReport> {
    if !eps.is_positive() {
        return Err(Error::Invalid("inflation radius must be positive".into()));
    }
    let density = grid_density.max(2);
    let lhs = rat_to_f64(&(f.eval(b) - f.eval(a)).abs());
    let seg = rat_to_f64(&norm_sq(&vec_sub(b, a))).sqrt();
    let mut grid_sup_sq = Rat::zero();
    let n = f.dim;
    // Axis offsets ±ε plus the center cover the inflated tube with radius
    // max(step·‖b−a‖/2, ε·(√n−1)/√n ≤ ε); the crude bound step·diam + ε is
    // used below and stays rigorous.
    let mut offsets: Vec<RVec> = vec![crate::rat::zeros(n)];
    for i in 0..n {
        let mut e = crate::rat::zeros(n);
        e[i] = eps.clone();
        offsets.push(e.clone());
        offsets.push(e.into_iter().map(|v| -v).collect());
    }
    for k in 0..density {
        let t = ratio(k as i64, (density - 1) as i64);
        let base = vec_add(&vec_scale(&(Rat::one() - &t), a), &vec_scale(&t, b));
        for off in &offsets {
            let c = vec_add(&base, off);
            for g in f.active_gradients(&c, &Rat::zero()) {
                let nsq = norm_sq(&g);
                if nsq > grid_sup_sq {
                    grid_sup_sq = nsq;
                }
            }
        }
    }
    let lip = rat_to_f64(&f.grad_lipschitz_bound_sq()).sqrt();
    let step = seg / (density - 1) as f64;
    let cover_radius = step + rat_to_f64(eps);
    let sup_estimate = rat_to_f64(&grid_sup_sq).sqrt() + lip * cover_radius;
    let holds = lhs <= seg * sup_estimate + 1e-12;
    Ok(MeanValueReport { holds, lhs, segment_norm: seg, sup_estimate })
}

/// `f = |x|` as `max{x, −x}`.
pub fn abs_function() -> MaxQuadFunction {
    MaxQuadFunction::one_dim(vec![
        (Rat::zero(), Rat::one(), Rat::zero()),
        (Rat::zero(), -Rat::one(), Rat::zero()),
    ])
    .expect("valid pieces")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_i;

    #[test]
    fn abs_value_and_actives() {
        let f = abs_function();
        assert_eq!(f.eval(&[rat_i(-3)]), rat_i(3));
        assert_eq!(f.active_set(&[rat_i(0)], &Rat::zero()), vec![0, 1]);
        assert_eq!(f.active_set(&[rat_i(2)], &Rat::zero()), vec![0]);
        let grads = f.active_gradients(&[rat_i(0)], &Rat::zero());
        assert_eq!(grads, vec![vec![rat_i(1)], vec![rat_i(-1)]]);
    }

    #[test]
    fn tangency_point_single_gradient() {
        // max{x², 2x−1}: both active at x = 1 and the gradients coincide.
        let f = MaxQuadFunction::one_dim(vec![
            (rat_i(2), rat_i(0), rat_i(0)),
            (rat_i(0), rat_i(2), rat_i(-1)),
        ])
        .unwrap();
        assert_eq!(f.active_set(&[rat_i(1)], &Rat::zero()), vec![0, 1]);
        let grads = f.active_gradients(&[rat_i(1)], &Rat::zero());
        assert_eq!(grads, vec![vec![rat_i(2)]]);
    }

    #[test]
    fn oracle_accepts_abs_and_rejects_concave() {
        let f = abs_function();
        assert!(matches!(
            convexity_oracle_sampling(&f, &Rat::zero(), 500, 7).unwrap(),
            OracleOutcome::Pass
        ));
        let neg_sq = MaxQuadFunction::one_dim(vec![(rat_i(-2), rat_i(0), rat_i(0))]).unwrap();
        assert!(matches!(
            convexity_oracle_sampling(&neg_sq, &Rat::zero(), 500, 7).unwrap(),
            OracleOutcome::Violation { .. }
        ));
    }

    #[test]
    fn strong_oracle_equality_case() {
        // f = x² is strongly convex with modulus exactly 2.
        let f = MaxQuadFunction::one_dim(vec![(rat_i(2), rat_i(0), rat_i(0))]).unwrap();
        assert!(matches!(
            convexity_oracle_sampling(&f, &rat_i(2), 300, 11).unwrap(),
            OracleOutcome::Pass
        ));
        assert!(matches!(
            convexity_oracle_sampling(&f, &rat_i(3), 300, 11).unwrap(),
            OracleOutcome::Violation { .. }
        ));
    }

    #[test]
    fn shifted_function_pieces() {
        let f = MaxQuadFunction::one_dim(vec![(rat_i(2), rat_i(0), rat_i(0))]).unwrap();
        let g = ShiftedFunction::new(f, rat_i(2)).unwrap().as_maxquad();
        assert_eq!(g.pieces[0].q.rows[0][0], rat_i(0));
    }

    #[test]
    fn mean_value_on_quadratic() {
        // f = x² on [0,2]: |f(2)-f(0)| = 4 ≤ 2·sup‖2c‖ over the inflated segment.
        let f = MaxQuadFunction::one_dim(vec![(rat_i(2), rat_i(0), rat_i(0))]).unwrap();
        let rep =
            mean_value_inequality_test(&f, &[rat_i(0)], &[rat_i(2)], &ratio(1, 10), 21).unwrap();
        assert!(rep.holds);
        assert!(rep.sup_estimate >= 4.0);
    }
}
