//! Exact rational linear programming.
//!
//! Dense two-phase primal simplex over `BigRational` with Bland's rule, so
//! every pivot sequence terminates and there are no tolerance knobs anywhere
//! in the exact path. Problems here are desk-scale (tens of rows), which a
//! dense tableau handles comfortably.

use crate::rat::{dot, zeros, RVec, Rat};
use num_traits::{One, Signed, Zero};

/// `minimize objective · x` subject to `a·x ≤ b` and `e·x = f`, `x` free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub dim: usize,
    pub objective: RVec,
    pub ineqs: Vec<(RVec, Rat)>,
    pub eqs: Vec<(RVec, Rat)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Optimal { value: Rat, point: RVec },
    /// Feasible, but the objective decreases without bound along `ray`
    /// (a recession direction with `objective · ray < 0`) from `point`.
    Unbounded { point: RVec, ray: RVec },
}

impl LinearProgram {
    pub fn feasibility(dim: usize, ineqs: Vec<(RVec, Rat)>, eqs: Vec<(RVec, Rat)>) -> Self {
        LinearProgram { dim, objective: zeros(dim), ineqs, eqs }
    }
}

struct Tableau {
    /// m rows of length `ncols + 1`; last column is the rhs.
    rows: Vec<RVec>,
    /// Reduced-cost row of length `ncols + 1`; last entry is minus the
    /// current objective value.
    obj: RVec,
    basis: Vec<usize>,
    allowed: Vec<bool>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &piv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let factor = row[j].clone();
            for (c, v) in row.iter_mut().enumerate() {
                let delta = &factor * &pivot_row[c];
                *v = &*v - delta;
            }
        }
        if !self.obj[j].is_zero() {
            let factor = self.obj[j].clone();
            for (c, v) in self.obj.iter_mut().enumerate() {
                let delta = &factor * &pivot_row[c];
                *v = &*v - delta;
            }
        }
        self.basis[r] = j;
    }

    /// Bland's rule: entering = lowest-index allowed column with negative
    /// reduced cost; leaving = min-ratio row, ties by lowest basic index.
    /// Returns the entering column on unboundedness.
    fn run_simplex(&mut self) -> Option<usize> {
        loop {
            let Some(enter) = (0..self.ncols)
                .find(|&j| self.allowed[j] && self.obj[j].is_negative())
            else {
                return None; // optimal
            };
            let mut leave: Option<usize> = None;
            let mut best: Option<Rat> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][enter].is_positive() {
                    let ratio = &self.rows[r][self.ncols] / &self.rows[r][enter];
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            ratio < *b
                                || (ratio == *b
                                    && self.basis[r] < self.basis[leave.unwrap()])
                        }
                    };
                    if better {
                        best = Some(ratio);
                        leave = Some(r);
                    }
                }
            }
            match leave {
                Some(r) => self.pivot(r, enter),
                None => return Some(enter),
            }
        }
    }

    fn solution(&self, nvars: usize) -> RVec {
        let mut z = zeros(nvars);
        for (r, &b) in self.basis.iter().enumerate() {
            if b < nvars {
                z[b] = self.rows[r][self.ncols].clone();
            }
        }
        z
    }

    /// Recession direction in z-space for an unbounded entering column.
    fn ray(&self, enter: usize, nvars: usize) -> RVec {
        let mut d = zeros(nvars);
        if enter < nvars {
            d[enter] = Rat::one();
        }
        for (r, &b) in self.basis.iter().enumerate() {
            if b < nvars {
                d[b] = -self.rows[r][enter].clone();
            }
        }
        d
    }
}

/// Solves the LP exactly.
pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let dim = lp.dim;
    let n_ineq = lp.ineqs.len();
    let m = n_ineq + lp.eqs.len();
    // z = (x⁺, x⁻, slacks); x = x⁺ − x⁻.
    let nvars = 2 * dim + n_ineq;
    let ncols = nvars + m; // + artificials
    let mut rows: Vec<RVec> = Vec::with_capacity(m);
    let mut all_rows: Vec<(&RVec, &Rat, bool)> = Vec::with_capacity(m);
    for (a, b) in &lp.ineqs {
        all_rows.push((a, b, true));
    }
    for (e, f) in &lp.eqs {
        all_rows.push((e, f, false));
    }
    for (i, (a, b, is_ineq)) in all_rows.iter().enumerate() {
        assert_eq!(a.len(), dim, "constraint row has wrong dimension");
        let mut row = zeros(ncols + 1);
        let flip = b.is_negative();
        let sgn = if flip { -Rat::one() } else { Rat::one() };
        for j in 0..dim {
            row[j] = &sgn * &a[j];
            row[dim + j] = -&row[j];
        }
        if *is_ineq {
            row[2 * dim + i] = sgn.clone();
        }
        row[nvars + i] = Rat::one(); // artificial
        row[ncols] = &sgn * *b;
        rows.push(row);
    }

    // Phase 1: minimize the sum of artificials.
    let mut t = Tableau {
        rows,
        obj: zeros(ncols + 1),
        basis: (nvars..ncols).collect(),
        allowed: vec![true; ncols],
        ncols,
    };
    for j in nvars..ncols {
        t.obj[j] = Rat::one();
    }
    // Reduce costs of the initial artificial basis to zero.
    for r in 0..m {
        let row = t.rows[r].clone();
        for (c, v) in t.obj.iter_mut().enumerate() {
            *v = &*v - &row[c];
        }
    }
    let unbounded = t.run_simplex();
    debug_assert!(unbounded.is_none(), "phase 1 is bounded below by zero");
    if t.obj[ncols].is_negative() {
        return LpOutcome::Infeasible; // -value < 0 means min Σ artificials > 0
    }

    // Drive leftover artificials out of the basis (they sit at level zero).
    let mut drop_rows: Vec<usize> = Vec::new();
    for r in 0..m {
        if t.basis[r] >= nvars {
            match (0..nvars).find(|&j| !t.rows[r][j].is_zero()) {
                Some(j) => t.pivot(r, j),
                None => drop_rows.push(r), // redundant row
            }
        }
    }
    for &r in drop_rows.iter().rev() {
        t.rows.remove(r);
        t.basis.remove(r);
    }
    for j in nvars..ncols {
        t.allowed[j] = false;
    }

    // Phase 2.
    t.obj = zeros(ncols + 1);
    for j in 0..dim {
        t.obj[j] = lp.objective[j].clone();
        t.obj[dim + j] = -lp.objective[j].clone();
    }
    for (r, &b) in t.basis.clone().iter().enumerate() {
        if !t.obj[b].is_zero() {
            let factor = t.obj[b].clone();
            let row = t.rows[r].clone();
            for (c, v) in t.obj.iter_mut().enumerate() {
                let delta = &factor * &row[c];
                *v = &*v - delta;
            }
        }
    }
    let unbounded = t.run_simplex();
    let z = t.solution(nvars);
    let point: RVec = (0..dim).map(|j| &z[j] - &z[dim + j]).collect();
    match unbounded {
        None => {
            let value = dot(&lp.objective, &point);
            LpOutcome::Optimal { value, point }
        }
        Some(enter) => {
            let dz = t.ray(enter, nvars);
            let ray: RVec = (0..dim).map(|j| &dz[j] - &dz[dim + j]).collect();
            LpOutcome::Unbounded { point, ray }
        }
    }
}

/// A feasible point of `{x : Ax ≤ b, Ex = f}`, if one exists.
pub fn feasible_point(dim: usize, ineqs: &[(RVec, Rat)], eqs: &[(RVec, Rat)]) -> Option<RVec> {
    match solve(&LinearProgram::feasibility(dim, ineqs.to_vec(), eqs.to_vec())) {
        LpOutcome::Infeasible => None,
        LpOutcome::Optimal { point, .. } | LpOutcome::Unbounded { point, .. } => Some(point),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat_i, ratio};

    fn lp(dim: usize, obj: Vec<Rat>, ineqs: Vec<(Vec<Rat>, Rat)>, eqs: Vec<(Vec<Rat>, Rat)>) -> LinearProgram {
        LinearProgram { dim, objective: obj, ineqs, eqs }
    }

    #[test]
    fn box_corner() {
        // min x+y over [0,1]^2 -> 0 at (0,0)
        let p = lp(
            2,
            vec![rat_i(1), rat_i(1)],
            vec![
                (vec![rat_i(1), rat_i(0)], rat_i(1)),
                (vec![rat_i(-1), rat_i(0)], rat_i(0)),
                (vec![rat_i(0), rat_i(1)], rat_i(1)),
                (vec![rat_i(0), rat_i(-1)], rat_i(0)),
            ],
            vec![],
        );
        match solve(&p) {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, rat_i(0));
                assert_eq!(point, vec![rat_i(0), rat_i(0)]);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn fractional_optimum() {
        // min -x - 2y s.t. x+y ≤ 3/2, x ≤ 1, y ≤ 1, x,y ≥ 0
        let p = lp(
            2,
            vec![rat_i(-1), rat_i(-2)],
            vec![
                (vec![rat_i(1), rat_i(1)], ratio(3, 2)),
                (vec![rat_i(1), rat_i(0)], rat_i(1)),
                (vec![rat_i(0), rat_i(1)], rat_i(1)),
                (vec![rat_i(-1), rat_i(0)], rat_i(0)),
                (vec![rat_i(0), rat_i(-1)], rat_i(0)),
            ],
            vec![],
        );
        match solve(&p) {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(point, vec![ratio(1, 2), rat_i(1)]);
                assert_eq!(value, ratio(-5, 2));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_detected() {
        let p = lp(
            1,
            vec![rat_i(0)],
            vec![(vec![rat_i(1)], rat_i(-1)), (vec![rat_i(-1)], rat_i(-1))],
            vec![],
        );
        assert_eq!(solve(&p), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_with_certificate() {
        // min -x s.t. x ≥ 0 (i.e. -x ≤ 0): unbounded along +e1
        let p = lp(1, vec![rat_i(-1)], vec![(vec![rat_i(-1)], rat_i(0))], vec![]);
        match solve(&p) {
            LpOutcome::Unbounded { point, ray } => {
                assert!(point[0] >= rat_i(0));
                assert!(ray[0].is_positive());
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn unconstrained_space() {
        let p = lp(2, vec![rat_i(1), rat_i(0)], vec![], vec![]);
        match solve(&p) {
            LpOutcome::Unbounded { ray, .. } => {
                assert!(ray[0].is_negative());
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
        let p0 = lp(2, vec![rat_i(0), rat_i(0)], vec![], vec![]);
        assert!(matches!(solve(&p0), LpOutcome::Optimal { .. }));
    }

    #[test]
    fn equality_rows() {
        // min x over {x + y = 2, x - y ≤ 0} -> x ≤ y, x = 2 - y => x ≤ 1; min is unbounded?
        // x = 2 - y, constraint x ≤ y gives 2 - y ≤ y so y ≥ 1, x ≤ 1; x can go to -inf.
        let p = lp(
            2,
            vec![rat_i(1), rat_i(0)],
            vec![(vec![rat_i(1), rat_i(-1)], rat_i(0))],
            vec![(vec![rat_i(1), rat_i(1)], rat_i(2))],
        );
        match solve(&p) {
            LpOutcome::Unbounded { ray, .. } => {
                assert!(ray[0].is_negative());
                assert_eq!(ray[0], -ray[1].clone());
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
        // min y over the same set: optimum y = 1 at (1,1).
        let p2 = lp(
            2,
            vec![rat_i(0), rat_i(1)],
            vec![(vec![rat_i(1), rat_i(-1)], rat_i(0))],
            vec![(vec![rat_i(1), rat_i(1)], rat_i(2))],
        );
        match solve(&p2) {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, rat_i(1));
                assert_eq!(point, vec![rat_i(1), rat_i(1)]);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_redundant_rows() {
        // Duplicate and implied constraints must not cycle or crash.
        let p = lp(
            2,
            vec![rat_i(1), rat_i(1)],
            vec![
                (vec![rat_i(-1), rat_i(0)], rat_i(0)),
                (vec![rat_i(-1), rat_i(0)], rat_i(0)),
                (vec![rat_i(0), rat_i(-1)], rat_i(0)),
                (vec![rat_i(-1), rat_i(-1)], rat_i(0)),
            ],
            vec![(vec![rat_i(1), rat_i(-1)], rat_i(0))],
        );
        match solve(&p) {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, rat_i(0));
                assert_eq!(point, vec![rat_i(0), rat_i(0)]);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }
}
