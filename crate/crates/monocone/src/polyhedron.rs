//! Halfspace-represented polyhedra over exact rationals.

use crate::cone::{PolyCone, SupportMin, MAX_ENUM_DIM};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpOutcome};
use crate::rat::{dot, rank, solve_linear, vec_sub, zeros, ExtRat, RVec, Rat, RatMat};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// `{x : a·x ≤ b, eq·x = f}` with rational data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HPolyhedron {
    pub dim: usize,
    pub a: Vec<RVec>,
    pub b: Vec<Rat>,
    pub eq: Vec<RVec>,
    pub f: Vec<Rat>,
}

impl HPolyhedron {
    pub fn new(dim: usize, a: Vec<RVec>, b: Vec<Rat>, eq: Vec<RVec>, f: Vec<Rat>) -> Result<Self> {
        if a.len() != b.len() || eq.len() != f.len() {
            return Err(Error::Invalid("row/rhs count mismatch".into()));
        }
        for row in a.iter().chain(eq.iter()) {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
        }
        Ok(HPolyhedron { dim, a, b, eq, f })
    }

    /// The whole space ℝᵈ.
    pub fn free(dim: usize) -> Self {
        HPolyhedron { dim, a: vec![], b: vec![], eq: vec![], f: vec![] }
    }

    /// Axis-aligned box; infinite bounds drop the corresponding halfspace.
    pub fn from_box(lo: &[ExtRat], hi: &[ExtRat]) -> Result<Self> {
        let dim = lo.len();
        if hi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: hi.len() });
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..dim {
            match &hi[i] {
                ExtRat::Finite(h) => {
                    let mut row = zeros(dim);
                    row[i] = Rat::one();
                    a.push(row);
                    b.push(h.clone());
                }
                ExtRat::PlusInf => {}
                ExtRat::MinusInf => return Err(Error::Invalid("upper bound -inf".into())),
            }
            match &lo[i] {
                ExtRat::Finite(l) => {
                    let mut row = zeros(dim);
                    row[i] = -Rat::one();
                    a.push(row);
                    b.push(-l.clone());
                }
                ExtRat::MinusInf => {}
                ExtRat::PlusInf => return Err(Error::Invalid("lower bound +inf".into())),
            }
        }
        Ok(HPolyhedron { dim, a, b, eq: vec![], f: vec![] })
    }

    pub fn n_ineqs(&self) -> usize {
        self.a.len()
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        x.len() == self.dim
            && self.a.iter().zip(&self.b).all(|(row, rhs)| dot(row, x) <= *rhs)
            && self.eq.iter().zip(&self.f).all(|(row, rhs)| dot(row, x) == *rhs)
    }

    /// Indices of inequality rows active at `x`.
    pub fn tight_rows(&self, x: &[Rat]) -> Vec<usize> {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .filter(|(_, (row, rhs))| dot(row, x) == **rhs)
            .map(|(i, _)| i)
            .collect()
    }

    fn ineq_pairs(&self) -> Vec<(RVec, Rat)> {
        self.a.iter().cloned().zip(self.b.iter().cloned()).collect()
    }

    fn eq_pairs(&self) -> Vec<(RVec, Rat)> {
        self.eq.iter().cloned().zip(self.f.iter().cloned()).collect()
    }

    pub fn feasible_point(&self) -> Option<RVec> {
        lp::feasible_point(self.dim, &self.ineq_pairs(), &self.eq_pairs())
    }

    pub fn is_empty(&self) -> bool {
        self.feasible_point().is_none()
    }

    /// A point in the relative interior: implicit equalities are detected by
    /// per-row slack maximization, then a uniform positive slack is pushed on
    /// the remaining rows.
    pub fn relative_interior_point(&self) -> Option<RVec> {
        let base_ineqs = self.ineq_pairs();
        let eqs = self.eq_pairs();
        self.feasible_point()?;
        // Classify: row i is an implicit equality iff max slack over P is 0.
        let mut implicit: Vec<bool> = vec![false; base_ineqs.len()];
        for (i, (row, rhs)) in base_ineqs.iter().enumerate() {
            let obj: RVec = row.clone(); // minimize row·x maximizes slack rhs - row·x
            match lp::solve(&LinearProgram {
                dim: self.dim,
                objective: obj,
                ineqs: base_ineqs.clone(),
                eqs: eqs.clone(),
            }) {
                LpOutcome::Optimal { value, .. } => implicit[i] = &value == rhs,
                LpOutcome::Unbounded { .. } => {}
                LpOutcome::Infeasible => return None,
            }
        }
        // max t s.t. row·x + t ≤ rhs on non-implicit rows, t ≤ 1.
        let d = self.dim;
        let mut ineqs: Vec<(RVec, Rat)> = Vec::new();
        for (i, (row, rhs)) in base_ineqs.iter().enumerate() {
            let mut r = row.clone();
            r.push(if implicit[i] { Rat::zero() } else { Rat::one() });
            ineqs.push((r, rhs.clone()));
        }
        let mut tcap = zeros(d + 1);
        tcap[d] = Rat::one();
        ineqs.push((tcap, Rat::one()));
        let mut tnonneg = zeros(d + 1);
        tnonneg[d] = -Rat::one();
        ineqs.push((tnonneg, Rat::zero()));
        let mut eqs_ext: Vec<(RVec, Rat)> = Vec::new();
        for (i, (row, rhs)) in base_ineqs.iter().enumerate() {
            if implicit[i] {
                let mut r = row.clone();
                r.push(Rat::zero());
                eqs_ext.push((r, rhs.clone()));
            }
        }
        for (row, rhs) in &eqs {
            let mut r = row.clone();
            r.push(Rat::zero());
            eqs_ext.push((r, rhs.clone()));
        }
        let mut obj = zeros(d + 1);
        obj[d] = -Rat::one();
        match lp::solve(&LinearProgram { dim: d + 1, objective: obj, ineqs, eqs: eqs_ext }) {
            LpOutcome::Optimal { point, .. } => Some(point[..d].to_vec()),
            _ => None,
        }
    }

    /// Exact `min ⟨x,w⟩` over the polyhedron.
    pub fn support_min(&self, w: &[Rat]) -> Result<SupportMin> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: w.len() });
        }
        match lp::solve(&LinearProgram {
            dim: self.dim,
            objective: w.to_vec(),
            ineqs: self.ineq_pairs(),
            eqs: self.eq_pairs(),
        }) {
            LpOutcome::Infeasible => Err(Error::EmptySet),
            LpOutcome::Optimal { value, point } => Ok(SupportMin::Finite { value, argmin: point }),
            LpOutcome::Unbounded { point, ray } => Ok(SupportMin::NegInf { point, ray }),
        }
    }

    pub fn support_min_value(&self, w: &[Rat]) -> Result<ExtRat> {
        Ok(match self.support_min(w)? {
            SupportMin::Finite { value, .. } => ExtRat::Finite(value),
            SupportMin::NegInf { .. } => ExtRat::MinusInf,
        })
    }

    /// Translate by `t`: `{x + t : x ∈ P}`.
    pub fn translate(&self, t: &[Rat]) -> HPolyhedron {
        let b = self.a.iter().zip(&self.b).map(|(row, rhs)| rhs + dot(row, t)).collect();
        let f = self.eq.iter().zip(&self.f).map(|(row, rhs)| rhs + dot(row, t)).collect();
        HPolyhedron { dim: self.dim, a: self.a.clone(), b, eq: self.eq.clone(), f }
    }

    /// Preimage `{x : M x ∈ P}` under a linear map into the ambient space.
    pub fn linear_preimage(&self, m: &RatMat) -> HPolyhedron {
        let new_dim = m.ncols();
        // Row of the preimage is rowᵀM, computed as Mᵀ row.
        let a: Vec<RVec> = self.a.iter().map(|r| m.transpose_apply(r)).collect();
        let eq: Vec<RVec> = self.eq.iter().map(|r| m.transpose_apply(r)).collect();
        HPolyhedron { dim: new_dim, a, b: self.b.clone(), eq, f: self.f.clone() }
    }

    /// Fixes the first `k` coordinates to `x0`, producing the slice
    /// `{y : (x0, y) ∈ P}` in the remaining coordinates.
    pub fn fix_prefix(&self, x0: &[Rat]) -> HPolyhedron {
        let k = x0.len();
        debug_assert!(k <= self.dim);
        let rest = self.dim - k;
        let slice = |rows: &[RVec], rhs: &[Rat]| -> (Vec<RVec>, Vec<Rat>) {
            let mut out_rows = Vec::new();
            let mut out_rhs = Vec::new();
            for (row, r) in rows.iter().zip(rhs) {
                let head = dot(&row[..k], x0);
                out_rows.push(row[k..].to_vec());
                out_rhs.push(r - head);
            }
            (out_rows, out_rhs)
        };
        let (a, b) = slice(&self.a, &self.b);
        let (eq, f) = slice(&self.eq, &self.f);
        // Drop trivial inequality rows 0·y ≤ c with c ≥ 0; keep infeasible markers.
        let mut a2 = Vec::new();
        let mut b2 = Vec::new();
        for (row, rhs) in a.into_iter().zip(b) {
            if row.iter().all(|v| v.is_zero()) && !rhs.is_negative() {
                continue;
            }
            a2.push(row);
            b2.push(rhs);
        }
        HPolyhedron { dim: rest, a: a2, b: b2, eq, f }
    }

    /// Normal form: duplicate inequality rows removed, and opposite row
    /// pairs (`a·x ≤ b` with `−a·x ≤ −b`) folded into equality rows. Keeps
    /// stratum enumeration from walking phantom faces.
    pub fn normalized(&self) -> HPolyhedron {
        use num_traits::Signed;
        // Canonical (direction, rhs) with positive primitive scaling.
        let canon = |row: &RVec, rhs: &Rat| -> (RVec, Rat) {
            if crate::rat::is_zero_vec(row) {
                return (row.clone(), rhs.clone());
            }
            let c = crate::rat::canon_dir(row);
            // scale = c_i / row_i on the first nonzero entry.
            let k = row.iter().position(|x| !x.is_zero()).expect("nonzero row");
            let scale = &c[k] / &row[k];
            debug_assert!(scale.is_positive());
            (c, rhs * scale)
        };
        let mut seen: Vec<(RVec, Rat)> = Vec::new();
        for (row, rhs) in self.a.iter().zip(&self.b) {
            let c = canon(row, rhs);
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        let mut a: Vec<RVec> = Vec::new();
        let mut b: Vec<Rat> = Vec::new();
        let mut eq = self.eq.clone();
        let mut f = self.f.clone();
        let mut used = vec![false; seen.len()];
        for i in 0..seen.len() {
            if used[i] {
                continue;
            }
            let neg: RVec = seen[i].0.iter().map(|x| -x).collect();
            let neg_rhs = -seen[i].1.clone();
            if let Some(j) = (i + 1..seen.len())
                .find(|&j| !used[j] && seen[j].0 == neg && seen[j].1 == neg_rhs)
            {
                used[i] = true;
                used[j] = true;
                eq.push(seen[i].0.clone());
                f.push(seen[i].1.clone());
            } else {
                used[i] = true;
                a.push(seen[i].0.clone());
                b.push(seen[i].1.clone());
            }
        }
        HPolyhedron { dim: self.dim, a, b, eq, f }
    }

    /// Swaps the first `k` coordinates with the last `dim - k` (graph swap).
    pub fn swap_blocks(&self, k: usize) -> HPolyhedron {
        let tail = self.dim - k;
        let permute = |row: &RVec| -> RVec {
            let mut out = row[k..].to_vec();
            out.extend_from_slice(&row[..k]);
            out
        };
        let _ = tail;
        HPolyhedron {
            dim: self.dim,
            a: self.a.iter().map(permute).collect(),
            b: self.b.clone(),
            eq: self.eq.iter().map(permute).collect(),
            f: self.f.clone(),
        }
    }

    pub fn intersect(&self, other: &HPolyhedron) -> HPolyhedron {
        let mut a = self.a.clone();
        a.extend(other.a.iter().cloned());
        let mut b = self.b.clone();
        b.extend(other.b.iter().cloned());
        let mut eq = self.eq.clone();
        eq.extend(other.eq.iter().cloned());
        let mut f = self.f.clone();
        f.extend(other.f.iter().cloned());
        HPolyhedron { dim: self.dim, a, b, eq, f }
    }

    /// The recession cone `{d : A d ≤ 0, E d = 0}`.
    pub fn recession_cone(&self) -> PolyCone {
        let mut rows = self.a.clone();
        for e in &self.eq {
            rows.push(e.clone());
            rows.push(e.iter().map(|x| -x).collect());
        }
        PolyCone::H { dim: self.dim, rows }
    }

    /// Exhaustive vertex and extreme-ray enumeration, `dim ≤ 4` only.
    pub fn vertices_rays(&self) -> Result<(Vec<RVec>, Vec<RVec>)> {
        if self.dim > MAX_ENUM_DIM {
            return Err(Error::DimensionTooLarge(self.dim));
        }
        if self.is_empty() {
            return Ok((vec![], vec![]));
        }
        let d = self.dim;
        let mut verts: BTreeSet<RVec> = BTreeSet::new();
        let eq_rank = rank(&self.eq);
        let need = d.saturating_sub(eq_rank);
        let m = self.a.len();
        let mut combos: Vec<Vec<usize>> = Vec::new();
        subsets_of_size(m, need, &mut Vec::new(), &mut combos);
        for combo in combos {
            let mut rows: Vec<RVec> = self.eq.clone();
            let mut rhs: Vec<Rat> = self.f.clone();
            for &i in &combo {
                rows.push(self.a[i].clone());
                rhs.push(self.b[i].clone());
            }
            if rank(&rows) < d {
                continue;
            }
            if let Some(x) = solve_linear(&rows, &rhs) {
                // solve_linear returns a solution of the rref; verify it.
                let consistent = rows.iter().zip(&rhs).all(|(r, c)| dot(r, &x) == *c);
                if consistent && self.contains(&x) {
                    verts.insert(x);
                }
            }
        }
        let (rays, lin) = self.recession_cone().gens()?;
        let mut all_rays = rays;
        for l in lin {
            all_rays.push(l.iter().map(|x| -x).collect());
            all_rays.push(l);
        }
        Ok((verts.into_iter().collect(), all_rays))
    }

    pub fn is_bounded(&self) -> Result<bool> {
        self.recession_cone().is_zero_cone()
    }

    /// `self ⊆ other`, decided by support LPs on every row of `other`.
    pub fn subset_of(&self, other: &HPolyhedron) -> Result<bool> {
        if self.is_empty() {
            return Ok(true);
        }
        for (row, rhs) in other.a.iter().zip(&other.b) {
            // max row·x over self = -min (-row)·x
            let neg: RVec = row.iter().map(|x| -x).collect();
            match self.support_min(&neg)? {
                SupportMin::Finite { value, .. } => {
                    if -value > *rhs {
                        return Ok(false);
                    }
                }
                SupportMin::NegInf { .. } => return Ok(false),
            }
        }
        for (row, rhs) in other.eq.iter().zip(&other.f) {
            let neg: RVec = row.iter().map(|x| -x).collect();
            let hi = match self.support_min(&neg)? {
                SupportMin::Finite { value, .. } => -value,
                SupportMin::NegInf { .. } => return Ok(false),
            };
            let lo = match self.support_min(row)? {
                SupportMin::Finite { value, .. } => value,
                SupportMin::NegInf { .. } => return Ok(false),
            };
            if hi != *rhs || lo != *rhs {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn set_eq(&self, other: &HPolyhedron) -> Result<bool> {
        Ok(self.subset_of(other)? && other.subset_of(self)?)
    }

    /// If the polyhedron is a single point, returns it. Decided by 2·dim LPs.
    pub fn as_single_point(&self) -> Result<Option<RVec>> {
        if self.is_empty() {
            return Ok(None);
        }
        let mut point = zeros(self.dim);
        for i in 0..self.dim {
            let mut w = zeros(self.dim);
            w[i] = Rat::one();
            let lo = match self.support_min(&w)? {
                SupportMin::Finite { value, .. } => value,
                SupportMin::NegInf { .. } => return Ok(None),
            };
            w[i] = -Rat::one();
            let hi = match self.support_min(&w)? {
                SupportMin::Finite { value, .. } => -value,
                SupportMin::NegInf { .. } => return Ok(None),
            };
            if lo != hi {
                return Ok(None);
            }
            point[i] = lo;
        }
        Ok(Some(point))
    }

    /// Componentwise exact interval hull `[min x_i, max x_i]`.
    pub fn coordinate_bounds(&self) -> Result<Vec<(ExtRat, ExtRat)>> {
        let mut out = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut w = zeros(self.dim);
            w[i] = Rat::one();
            let lo = self.support_min_value(&w)?;
            w[i] = -Rat::one();
            let hi = match self.support_min(&w)? {
                SupportMin::Finite { value, .. } => ExtRat::Finite(-value),
                SupportMin::NegInf { .. } => ExtRat::PlusInf,
            };
            out.push((lo, hi));
        }
        Ok(out)
    }

    /// Squared Euclidean distance from `x` to the polyhedron is zero iff
    /// membership; this helper reports the worst constraint violation instead
    /// (cheap, exact, enough for diagnostics).
    pub fn violation(&self, x: &[Rat]) -> Rat {
        let mut worst = Rat::zero();
        for (row, rhs) in self.a.iter().zip(&self.b) {
            let v = dot(row, x) - rhs;
            if v > worst {
                worst = v;
            }
        }
        for (row, rhs) in self.eq.iter().zip(&self.f) {
            let v = (dot(row, x) - rhs).abs();
            if v > worst {
                worst = v;
            }
        }
        worst
    }
}

impl RatMat {
    /// `Mᵀ r` without materializing the transpose.
    pub fn transpose_apply(&self, r: &[Rat]) -> RVec {
        let n = self.ncols();
        let mut out = zeros(n);
        for (row, ri) in self.rows.iter().zip(r) {
            for (j, v) in row.iter().enumerate() {
                let delta = ri * v;
                out[j] = &out[j] + delta;
            }
        }
        out
    }
}

fn subsets_of_size(m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    let start = cur.last().map_or(0, |&x| x + 1);
    for i in start..m {
        cur.push(i);
        subsets_of_size(m, k, cur, out);
        cur.pop();
    }
}

/// `GraphPoint` distance helper: squared Euclidean distance between points.
pub fn dist_sq(a: &[Rat], b: &[Rat]) -> Rat {
    crate::rat::norm_sq(&vec_sub(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat_i, ratio};

    fn unit_square() -> HPolyhedron {
        HPolyhedron::from_box(
            &[ExtRat::Finite(rat_i(0)), ExtRat::Finite(rat_i(0))],
            &[ExtRat::Finite(rat_i(1)), ExtRat::Finite(rat_i(1))],
        )
        .unwrap()
    }

    #[test]
    fn box_membership_and_tightness() {
        let p = unit_square();
        assert!(p.contains(&[ratio(1, 2), ratio(1, 2)]));
        assert!(!p.contains(&[rat_i(2), rat_i(0)]));
        let tight = p.tight_rows(&[rat_i(0), rat_i(0)]);
        assert_eq!(tight.len(), 2);
    }

    #[test]
    fn vertices_of_square() {
        let p = unit_square();
        let (verts, rays) = p.vertices_rays().unwrap();
        assert_eq!(verts.len(), 4);
        assert!(rays.is_empty());
        assert!(p.is_bounded().unwrap());
    }

    #[test]
    fn support_min_matches_vertices() {
        let p = unit_square();
        match p.support_min(&[rat_i(1), rat_i(1)]).unwrap() {
            SupportMin::Finite { value, argmin } => {
                assert_eq!(value, rat_i(0));
                assert_eq!(argmin, vec![rat_i(0), rat_i(0)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn relative_interior_of_segment() {
        // Segment {0} x [-1,1] in R^2.
        let p = HPolyhedron::new(
            2,
            vec![vec![rat_i(0), rat_i(1)], vec![rat_i(0), rat_i(-1)]],
            vec![rat_i(1), rat_i(1)],
            vec![vec![rat_i(1), rat_i(0)]],
            vec![rat_i(0)],
        )
        .unwrap();
        let x = p.relative_interior_point().unwrap();
        assert_eq!(x[0], rat_i(0));
        assert!(x[1] > rat_i(-1) && x[1] < rat_i(1));
    }

    #[test]
    fn fix_prefix_slices() {
        // gph T for T(x) = x + [0,1]: {(u,v) : 0 ≤ v - u ≤ 1}
        let p = HPolyhedron::new(
            2,
            vec![vec![rat_i(-1), rat_i(1)], vec![rat_i(1), rat_i(-1)]],
            vec![rat_i(1), rat_i(0)],
            vec![],
            vec![],
        )
        .unwrap();
        let slice = p.fix_prefix(&[rat_i(2)]);
        assert!(slice.contains(&[rat_i(2)]));
        assert!(slice.contains(&[rat_i(3)]));
        assert!(!slice.contains(&[ratio(7, 2)]));
        let bounds = slice.coordinate_bounds().unwrap();
        assert_eq!(bounds[0], (ExtRat::Finite(rat_i(2)), ExtRat::Finite(rat_i(3))));
    }

    #[test]
    fn single_point_detection() {
        let p = HPolyhedron::new(
            2,
            vec![],
            vec![],
            vec![vec![rat_i(1), rat_i(0)], vec![rat_i(0), rat_i(1)]],
            vec![rat_i(3), rat_i(-2)],
        )
        .unwrap();
        assert_eq!(p.as_single_point().unwrap(), Some(vec![rat_i(3), rat_i(-2)]));
        assert_eq!(unit_square().as_single_point().unwrap(), None);
    }

    #[test]
    fn subset_and_equality() {
        let p = unit_square();
        let half = HPolyhedron::new(
            2,
            vec![vec![rat_i(1), rat_i(0)]],
            vec![ratio(1, 2)],
            vec![],
            vec![],
        )
        .unwrap()
        .intersect(&p);
        assert!(half.subset_of(&p).unwrap());
        assert!(!p.subset_of(&half).unwrap());
        assert!(p.set_eq(&p.clone()).unwrap());
    }

    #[test]
    fn unbounded_ray_reported() {
        // {x ≥ 0} in R^1
        let p = HPolyhedron::new(1, vec![vec![rat_i(-1)]], vec![rat_i(0)], vec![], vec![]).unwrap();
        assert!(!p.is_bounded().unwrap());
        let (verts, rays) = p.vertices_rays().unwrap();
        assert_eq!(verts, vec![vec![rat_i(0)]]);
        assert_eq!(rays, vec![vec![rat_i(1)]]);
    }
}
