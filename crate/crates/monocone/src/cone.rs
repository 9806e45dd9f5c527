//! Polyhedral cones with exact halfspace/generator conversions.
//!
//! A cone is kept either as `{z : G z ≤ 0}` or as `cone(rays) + span(lin)`.
//! Conversion between the two forms runs a double-description sweep with
//! LP-based redundancy pruning, all in rational arithmetic. Polars are cheap
//! because they swap the two representations.

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpOutcome};
use crate::rat::{canon_dir, dot, is_zero_vec, nullspace, zeros, RVec, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// Internal guard for double-description sweeps; signature enumeration and
/// generator conversions are not offered beyond this dimension.
pub const MAX_DD_DIM: usize = 8;
/// Public vertex/ray enumeration guard.
pub const MAX_ENUM_DIM: usize = 4;

#[derive(Clone, Debug)]
pub enum PolyCone {
    /// `{z : rows[i] · z ≤ 0}`
    H { dim: usize, rows: Vec<RVec> },
    /// `cone(rays) + span(lin)`
    V { dim: usize, rays: Vec<RVec>, lin: Vec<RVec> },
}

/// Minimum of a linear functional over an unbounded set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SupportMin {
    Finite { value: Rat, argmin: RVec },
    NegInf { point: RVec, ray: RVec },
}

impl PolyCone {
    pub fn whole_space(dim: usize) -> Self {
        PolyCone::H { dim, rows: Vec::new() }
    }

    pub fn zero(dim: usize) -> Self {
        PolyCone::V { dim, rays: Vec::new(), lin: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        match self {
            PolyCone::H { dim, .. } | PolyCone::V { dim, .. } => *dim,
        }
    }

    pub fn contains(&self, z: &[Rat]) -> bool {
        match self {
            PolyCone::H { rows, .. } => rows.iter().all(|g| !dot(g, z).is_positive()),
            PolyCone::V { dim, rays, lin } => {
                if is_zero_vec(z) {
                    return true;
                }
                // z = Σ λ_i r_i + Σ μ_j l_j with λ ≥ 0, in variables (λ, μ).
                let nl = rays.len();
                let nm = lin.len();
                let nv = nl + nm;
                if nv == 0 {
                    return false;
                }
                let mut eqs = Vec::with_capacity(*dim);
                for c in 0..*dim {
                    let mut row = zeros(nv);
                    for (i, r) in rays.iter().enumerate() {
                        row[i] = r[c].clone();
                    }
                    for (j, l) in lin.iter().enumerate() {
                        row[nl + j] = l[c].clone();
                    }
                    eqs.push((row, z[c].clone()));
                }
                let mut ineqs = Vec::with_capacity(nl);
                for i in 0..nl {
                    let mut row = zeros(nv);
                    row[i] = -Rat::one();
                    ineqs.push((row, Rat::zero()));
                }
                lp::feasible_point(nv, &ineqs, &eqs).is_some()
            }
        }
    }

    /// The polar cone `{y : ⟨y,z⟩ ≤ 0 for all z}`, representation-swapped.
    pub fn polar(&self) -> PolyCone {
        match self {
            PolyCone::H { dim, rows } => {
                let rays = dedup_dirs(rows.iter().map(|r| canon_dir(r)).collect());
                PolyCone::V { dim: *dim, rays, lin: Vec::new() }
            }
            PolyCone::V { dim, rays, lin } => {
                let mut rows: Vec<RVec> = rays.clone();
                for l in lin {
                    rows.push(l.clone());
                    rows.push(l.iter().map(|x| -x).collect());
                }
                PolyCone::H { dim: *dim, rows: dedup_dirs(rows.into_iter().map(|r| canon_dir(&r)).collect()) }
            }
        }
    }

    /// Generator form `(rays, lineality basis)`.
    pub fn gens(&self) -> Result<(Vec<RVec>, Vec<RVec>)> {
        match self {
            PolyCone::V { rays, lin, .. } => Ok((rays.clone(), lin.clone())),
            PolyCone::H { dim, rows } => hform_to_gens(*dim, rows),
        }
    }

    /// Halfspace form rows (`rows · z ≤ 0`).
    pub fn hform(&self) -> Result<Vec<RVec>> {
        match self {
            PolyCone::H { rows, .. } => Ok(rows.clone()),
            PolyCone::V { .. } => {
                // H-form rows of C are the generators of the polar.
                let (rays, lin) = self.polar().gens()?;
                let mut rows = rays;
                for l in lin {
                    rows.push(l.iter().map(|x| -x).collect());
                    rows.push(l);
                }
                Ok(dedup_dirs(rows.into_iter().map(|r| canon_dir(&r)).collect()))
            }
        }
    }

    /// All generators including the lineality expanded to `±` ray pairs.
    pub fn rays_with_lin_pairs(&self) -> Result<Vec<RVec>> {
        let (rays, lin) = self.gens()?;
        let mut out = rays;
        for l in lin {
            out.push(l.iter().map(|x| -x).collect());
            out.push(l);
        }
        Ok(out)
    }

    pub fn support_min(&self, w: &[Rat]) -> Result<SupportMin> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: w.len() });
        }
        match self {
            PolyCone::V { dim, rays, lin } => {
                for l in lin {
                    let p = dot(l, w);
                    if !p.is_zero() {
                        let ray = if p.is_positive() { l.iter().map(|x| -x).collect() } else { l.clone() };
                        return Ok(SupportMin::NegInf { point: zeros(*dim), ray });
                    }
                }
                for r in rays {
                    if dot(r, w).is_negative() {
                        return Ok(SupportMin::NegInf { point: zeros(*dim), ray: r.clone() });
                    }
                }
                Ok(SupportMin::Finite { value: Rat::zero(), argmin: zeros(*dim) })
            }
            PolyCone::H { dim, rows } => {
                let ineqs: Vec<(RVec, Rat)> =
                    rows.iter().map(|r| (r.clone(), Rat::zero())).collect();
                match lp::solve(&LinearProgram { dim: *dim, objective: w.to_vec(), ineqs, eqs: vec![] }) {
                    LpOutcome::Optimal { value, point } => Ok(SupportMin::Finite { value, argmin: point }),
                    LpOutcome::Unbounded { point, ray } => Ok(SupportMin::NegInf { point, ray }),
                    LpOutcome::Infeasible => unreachable!("cones contain the origin"),
                }
            }
        }
    }

    /// Exact set equality via mutual generator/halfspace containment.
    pub fn set_eq(&self, other: &PolyCone) -> Result<bool> {
        Ok(self.subset_of(other)? && other.subset_of(self)?)
    }

    pub fn subset_of(&self, other: &PolyCone) -> Result<bool> {
        let gens = self.rays_with_lin_pairs()?;
        if gens.is_empty() {
            return Ok(true); // {0}
        }
        match other {
            PolyCone::H { rows, .. } => {
                Ok(gens.iter().all(|g| rows.iter().all(|r| !dot(r, g).is_positive())))
            }
            PolyCone::V { .. } => Ok(gens.iter().all(|g| other.contains(g))),
        }
    }

    pub fn is_zero_cone(&self) -> Result<bool> {
        let (rays, lin) = self.gens()?;
        Ok(rays.is_empty() && lin.is_empty())
    }

    /// Intersection; cheap in halfspace form.
    pub fn intersect(&self, other: &PolyCone) -> Result<PolyCone> {
        let mut rows = self.hform()?;
        rows.extend(other.hform()?);
        Ok(PolyCone::H { dim: self.dim(), rows: dedup_dirs(rows.into_iter().map(|r| canon_dir(&r)).collect()) })
    }
}

fn dedup_dirs(dirs: Vec<RVec>) -> Vec<RVec> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for d in dirs {
        if is_zero_vec(&d) {
            continue;
        }
        if seen.insert(d.clone()) {
            out.push(d);
        }
    }
    out
}

/// Double description: halfspace form to generators.
fn hform_to_gens(dim: usize, rows: &[RVec]) -> Result<(Vec<RVec>, Vec<RVec>)> {
    if dim > MAX_DD_DIM {
        return Err(Error::DimensionTooLarge(dim));
    }
    // Lineality space is the kernel of the row matrix.
    let lin = if rows.is_empty() {
        let mut basis = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut e = zeros(dim);
            e[i] = Rat::one();
            basis.push(e);
        }
        basis
    } else {
        nullspace(rows)
    };

    // Seed with ±e_i and cut by one halfspace at a time.
    let mut rays: Vec<RVec> = Vec::new();
    for i in 0..dim {
        let mut e = zeros(dim);
        e[i] = Rat::one();
        rays.push(e.clone());
        rays.push(e.into_iter().map(|x| -x).collect());
    }
    for g in rows {
        let mut keep: Vec<RVec> = Vec::new();
        let mut neg: Vec<(RVec, Rat)> = Vec::new();
        let mut pos: Vec<(RVec, Rat)> = Vec::new();
        for r in rays {
            let p = dot(g, &r);
            if p.is_positive() {
                pos.push((r, p));
            } else if p.is_negative() {
                neg.push((r.clone(), p));
                keep.push(r);
            } else {
                keep.push(r);
            }
        }
        for (p_ray, p_val) in &pos {
            for (n_ray, n_val) in &neg {
                // (g·p) n − (g·n) p lies on the hyperplane and in cone(p, n).
                let comb: RVec = n_ray
                    .iter()
                    .zip(p_ray)
                    .map(|(n_c, p_c)| p_val * n_c - n_val * p_c)
                    .collect();
                if !is_zero_vec(&comb) {
                    keep.push(canon_dir(&comb));
                }
            }
        }
        rays = prune_redundant(dim, dedup_dirs(keep.into_iter().map(|r| canon_dir(&r)).collect()), &lin);
    }

    // Reduce rays modulo the lineality space.
    if !lin.is_empty() {
        rays = rays
            .into_iter()
            .map(|r| reduce_mod_span(&r, &lin))
            .collect();
        rays = prune_redundant(dim, dedup_dirs(rays.into_iter().map(|r| canon_dir(&r)).collect()), &lin);
    }
    Ok((rays, lin))
}

/// Removes the span(lin) component of `r` (exact projection along the span).
fn reduce_mod_span(r: &[Rat], lin: &[RVec]) -> RVec {
    if lin.is_empty() {
        return r.to_vec();
    }
    // Solve Gram * mu = Lᵀ r, subtract L mu.
    let k = lin.len();
    let mut gram: Vec<RVec> = vec![zeros(k); k];
    let mut rhs = zeros(k);
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = dot(&lin[i], &lin[j]);
        }
        rhs[i] = dot(&lin[i], r);
    }
    let mu = crate::rat::solve_linear(&gram, &rhs).expect("Gram matrix of a basis is invertible");
    let mut out = r.to_vec();
    for (j, m) in mu.iter().enumerate() {
        for (c, v) in out.iter_mut().enumerate() {
            let delta = m * &lin[j][c];
            *v = &*v - delta;
        }
    }
    out
}

/// Drops rays that are nonnegative combinations of the remaining generators.
fn prune_redundant(dim: usize, rays: Vec<RVec>, lin: &[RVec]) -> Vec<RVec> {
    if rays.len() <= 1 {
        return rays;
    }
    let mut kept: Vec<RVec> = rays;
    let mut i = 0;
    while i < kept.len() {
        let candidate = kept[i].clone();
        let others: Vec<&RVec> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| r)
            .collect();
        if in_conic_hull(dim, &candidate, &others, lin) {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}

fn in_conic_hull(dim: usize, target: &[Rat], rays: &[&RVec], lin: &[RVec]) -> bool {
    let nl = rays.len();
    let nm = lin.len();
    let nv = nl + nm;
    if nv == 0 {
        return is_zero_vec(target);
    }
    let mut eqs = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut row = zeros(nv);
        for (i, r) in rays.iter().enumerate() {
            row[i] = r[c].clone();
        }
        for (j, l) in lin.iter().enumerate() {
            row[nl + j] = l[c].clone();
        }
        eqs.push((row, target[c].clone()));
    }
    let mut ineqs = Vec::with_capacity(nl);
    for i in 0..nl {
        let mut row = zeros(nv);
        row[i] = -Rat::one();
        ineqs.push((row, Rat::zero()));
    }
    lp::feasible_point(nv, &ineqs, &eqs).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_i;

    fn v2(a: i64, b: i64) -> RVec {
        vec![rat_i(a), rat_i(b)]
    }

    #[test]
    fn orthant_gens() {
        // {z : -z ≤ 0} componentwise = nonnegative orthant
        let c = PolyCone::H { dim: 2, rows: vec![v2(-1, 0), v2(0, -1)] };
        let (rays, lin) = c.gens().unwrap();
        assert!(lin.is_empty());
        let set: BTreeSet<RVec> = rays.into_iter().collect();
        assert_eq!(set, BTreeSet::from([v2(1, 0), v2(0, 1)]));
    }

    #[test]
    fn polar_of_orthant() {
        let c = PolyCone::H { dim: 2, rows: vec![v2(-1, 0), v2(0, -1)] };
        let p = c.polar();
        assert!(p.contains(&v2(-1, -1)));
        assert!(!p.contains(&v2(1, 0)));
    }

    #[test]
    fn polar_involution() {
        let c = PolyCone::V { dim: 2, rays: vec![v2(1, 2)], lin: vec![] };
        let pp = c.polar().polar();
        assert!(pp.set_eq(&c).unwrap());
    }

    #[test]
    fn halfplane_has_lineality() {
        // {z : z_2 ≤ 0}: lineality e1, one ray -e2.
        let c = PolyCone::H { dim: 2, rows: vec![v2(0, 1)] };
        let (rays, lin) = c.gens().unwrap();
        assert_eq!(lin.len(), 1);
        assert_eq!(rays.len(), 1);
        assert_eq!(canon_dir(&rays[0]), v2(0, -1));
    }

    #[test]
    fn hform_of_generated_cone() {
        // cone{(1,0),(1,1)}; (1,-1) outside, (2,1) inside.
        let c = PolyCone::V { dim: 2, rays: vec![v2(1, 0), v2(1, 1)], lin: vec![] };
        let h = PolyCone::H { dim: 2, rows: c.hform().unwrap() };
        assert!(h.contains(&v2(2, 1)));
        assert!(!h.contains(&v2(1, -1)));
        assert!(!h.contains(&v2(-1, 0)));
        assert!(h.set_eq(&c).unwrap());
    }

    #[test]
    fn support_min_on_ray() {
        let c = PolyCone::V { dim: 2, rays: vec![v2(1, -1)], lin: vec![] };
        match c.support_min(&v2(1, 1)).unwrap() {
            SupportMin::Finite { value, .. } => assert_eq!(value, rat_i(0)),
            other => panic!("expected finite, got {other:?}"),
        }
        match c.support_min(&v2(-1, 0)).unwrap() {
            SupportMin::NegInf { ray, .. } => assert_eq!(ray, v2(1, -1)),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn whole_space_and_zero() {
        let w = PolyCone::whole_space(3);
        let (rays, lin) = w.gens().unwrap();
        assert_eq!(lin.len(), 3);
        assert!(rays.is_empty());
        assert!(PolyCone::zero(3).is_zero_cone().unwrap());
        assert!(PolyCone::zero(3).subset_of(&w).unwrap());
    }

    #[test]
    fn intersection_of_halfplanes() {
        let a = PolyCone::H { dim: 2, rows: vec![v2(0, 1)] }; // lower halfplane
        let b = PolyCone::H { dim: 2, rows: vec![v2(1, 0)] }; // left halfplane
        let c = a.intersect(&b).unwrap();
        assert!(c.contains(&v2(-1, -1)));
        assert!(!c.contains(&v2(1, -1)));
        let (rays, lin) = c.gens().unwrap();
        assert!(lin.is_empty());
        assert_eq!(rays.len(), 2);
    }
}
