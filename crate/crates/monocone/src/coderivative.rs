//! Regular and limiting coderivatives of supported operators.
//!
//! For an operator with a polyhedral graph union, the coderivative value at
//! `(u,v)` in direction `w` is the polyhedral set `{z : (z,−w) ∈ N((u,v))}`
//! computed from the exact normal cone of the graph; limiting values come
//! from the finite family of signature cones realizable near the point. For
//! smooth operators both reduce to the adjoint Jacobian action. The only
//! approximate path is the sampled fallback for subdifferentials of
//! non-compilable max-quad functions, and its results are tagged as such.

use crate::error::{Error, Result};
use crate::maxquad::MaxQuadFunction;
use crate::operator::{compile_to_polyhedral, evaluate, GraphPoint, OperatorSpec, ValueSet};
use crate::polyhedron::HPolyhedron;
use crate::rat::{
    rat_from_f64, rat_i, rat_to_f64, ratio, vec_add, vec_scale, zeros, RVec, Rat,
};
use crate::strata::{limiting_normal_cone_union, regular_normal_cone_union};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sampled-fallback schedule: shells of L∞ radius `r₀·2⁻ᵏ`, `k = 0..=halvings`,
/// with a fixed number of seeded directions per shell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSchedule {
    pub radius0: Rat,
    pub halvings: usize,
    pub per_shell: usize,
    pub seed: u64,
}

impl Default for SampleSchedule {
    fn default() -> Self {
        SampleSchedule { radius0: ratio(1, 10), halvings: 12, per_shell: 64, seed: 2024 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    Sampled(SampleSchedule),
}

/// The set `D*T(u,v)(w)` for one direction `w`.
#[derive(Clone, Debug)]
pub struct CoderivativeValue {
    pub direction: RVec,
    pub value: ValueSet,
    pub exactness: Exactness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoderivativeKind {
    Regular,
    Limiting,
}

/// Local linearization `(v, J)` when the operator is single-valued and
/// differentiable around `u` within its class.
fn smooth_linearization(spec: &OperatorSpec, u: &[Rat]) -> Result<Option<(RVec, Vec<RVec>)>> {
    match spec {
        OperatorSpec::RationalMap { map } => {
            Ok(map.eval(u).and_then(|v| map.jacobian(u).map(|j| (v, j))))
        }
        OperatorSpec::MaxQuadSubdiff { f } => {
            let active = f.active_set(u, &Rat::zero());
            if active.len() == 1 {
                let p = &f.pieces[active[0]];
                Ok(Some((p.gradient(u), p.q.rows.clone())))
            } else {
                Ok(None)
            }
        }
        OperatorSpec::ShiftIdentity { base, s } => {
            Ok(smooth_linearization(base, u)?.map(|(v, mut j)| {
                for (i, row) in j.iter_mut().enumerate() {
                    row[i] = &row[i] + s;
                }
                (vec_add(&v, &vec_scale(s, u)), j)
            }))
        }
        OperatorSpec::ShiftDown { base, kappa } => {
            Ok(smooth_linearization(base, u)?.map(|(v, mut j)| {
                for (i, row) in j.iter_mut().enumerate() {
                    row[i] = &row[i] - kappa;
                }
                (vec_add(&v, &vec_scale(&-kappa.clone(), u)), j)
            }))
        }
        _ => Ok(None),
    }
}

fn adjoint_apply(jac: &[RVec], w: &[Rat]) -> RVec {
    // Jᵀw: rows of J are gradients of components.
    let n = w.len();
    let mut out = zeros(jac.first().map_or(n, |r| r.len()));
    for (row, wi) in jac.iter().zip(w) {
        for (j, v) in row.iter().enumerate() {
            let delta = wi * v;
            out[j] = &out[j] + delta;
        }
    }
    out
}

fn require_on_graph(spec: &OperatorSpec, p: &GraphPoint) -> Result<()> {
    if evaluate(spec, &p.u)?.contains(&p.v) {
        Ok(())
    } else {
        Err(Error::NotOnGraph)
    }
}

fn classify_polys(n: usize, polys: Vec<HPolyhedron>) -> Result<ValueSet> {
    let mut points: Vec<RVec> = Vec::new();
    let mut general: Vec<HPolyhedron> = Vec::new();
    for p in polys {
        if p.is_empty() {
            continue;
        }
        match p.as_single_point()? {
            Some(pt) => {
                if !points.contains(&pt) {
                    points.push(pt);
                }
            }
            None => general.push(p),
        }
    }
    Ok(if general.is_empty() && points.is_empty() {
        ValueSet::Empty { dim: n }
    } else if general.is_empty() {
        ValueSet::Points { dim: n, points }
    } else {
        // Singletons already covered by a general polyhedron are dropped.
        points.retain(|pt| !general.iter().any(|g| g.contains(pt)));
        if points.is_empty() {
            ValueSet::Polyhedra { dim: n, polys: general }
        } else {
            for pt in points {
                general.push(HPolyhedron::new(
                    n,
                    vec![],
                    vec![],
                    (0..n)
                        .map(|i| {
                            let mut e = zeros(n);
                            e[i] = Rat::one();
                            e
                        })
                        .collect(),
                    pt,
                )?);
            }
            ValueSet::Polyhedra { dim: n, polys: general }
        }
    })
}

/// Direction-independent description of the coderivative at one point: a
/// singleton Jacobian action, or the H-form rows of the normal-cone family.
/// Computing it once per point amortizes the stratum work across directions.
#[derive(Clone, Debug)]
pub enum PointKernel {
    Adjoint { jacobian: Vec<RVec> },
    Cones { families: Vec<Vec<RVec>>, exact: bool },
}

impl PointKernel {
    pub fn value_at(&self, n: usize, w: &[Rat]) -> Result<ValueSet> {
        match self {
            PointKernel::Adjoint { jacobian } => Ok(ValueSet::Points {
                dim: n,
                points: vec![adjoint_apply(jacobian, w)],
            }),
            PointKernel::Cones { families, .. } => {
                let mut polys = Vec::with_capacity(families.len());
                for rows in families {
                    let mut a = Vec::with_capacity(rows.len());
                    let mut b = Vec::with_capacity(rows.len());
                    for r in rows {
                        a.push(r[..n].to_vec());
                        b.push(crate::rat::dot(&r[n..], w));
                    }
                    polys.push(HPolyhedron::new(n, a, b, vec![], vec![])?);
                }
                classify_polys(n, polys)
            }
        }
    }
}

/// Kernel for the regular coderivative at `p`; `Err(UnsupportedVariant)` at
/// nonsmooth points of non-polyhedral operators.
pub fn regular_kernel(spec: &OperatorSpec, p: &GraphPoint) -> Result<PointKernel> {
    require_on_graph(spec, p)?;
    if let Some((v, jac)) = smooth_linearization(spec, &p.u)? {
        if v == p.v {
            return Ok(PointKernel::Adjoint { jacobian: jac });
        }
    }
    match compile_to_polyhedral(spec) {
        Ok(pieces) => {
            let mut g = p.u.clone();
            g.extend_from_slice(&p.v);
            let cone = regular_normal_cone_union(&pieces, &g)?;
            Ok(PointKernel::Cones { families: vec![cone.hform()?], exact: true })
        }
        Err(Error::NotCompilable(msg)) => Err(Error::UnsupportedVariant(format!(
            "no exact regular coderivative at a nonsmooth point of a non-polyhedral operator ({msg}); \
             only the sampled limiting fallback applies"
        ))),
        Err(e) => Err(e),
    }
}

/// Kernel for the limiting coderivative at `p` (exact paths only; the
/// sampled fallback is handled by `limiting_coderivative`).
pub fn limiting_kernel(spec: &OperatorSpec, p: &GraphPoint) -> Result<PointKernel> {
    require_on_graph(spec, p)?;
    if let Some((v, jac)) = smooth_linearization(spec, &p.u)? {
        if v == p.v {
            let root_is_maxquad = matches!(spec_root(spec), OperatorSpec::MaxQuadSubdiff { .. });
            if !root_is_maxquad || compile_to_polyhedral(spec).is_err() {
                return Ok(PointKernel::Adjoint { jacobian: jac });
            }
        }
    }
    match compile_to_polyhedral(spec) {
        Ok(pieces) => {
            let mut g = p.u.clone();
            g.extend_from_slice(&p.v);
            let family = limiting_normal_cone_union(&pieces, &g)?;
            let mut families = Vec::with_capacity(family.len());
            for (_, cone) in &family {
                families.push(cone.hform()?);
            }
            Ok(PointKernel::Cones { families, exact: true })
        }
        Err(Error::NotCompilable(msg)) => Err(Error::UnsupportedVariant(format!(
            "no exact limiting kernel for this variant ({msg})"
        ))),
        Err(e) => Err(e),
    }
}

/// `D̂*T(u,v)(w)`, exact for smooth and polyhedral-compilable operators.
pub fn regular_coderivative(
    spec: &OperatorSpec,
    p: &GraphPoint,
    w: &[Rat],
) -> Result<CoderivativeValue> {
    let n = spec.dim();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    let kernel = regular_kernel(spec, p)?;
    Ok(CoderivativeValue {
        direction: w.to_vec(),
        value: kernel.value_at(n, w)?,
        exactness: Exactness::Exact,
    })
}

/// `D*T(u,v)(w)` (mixed = normal in finite dimensions). Exact via signature
/// enumeration on polyhedral graphs; sampled fallback for non-compilable
/// max-quad subdifferentials.
pub fn limiting_coderivative(
    spec: &OperatorSpec,
    p: &GraphPoint,
    w: &[Rat],
) -> Result<CoderivativeValue> {
    limiting_coderivative_with(spec, p, w, &SampleSchedule::default())
}

pub fn limiting_coderivative_with(
    spec: &OperatorSpec,
    p: &GraphPoint,
    w: &[Rat],
    schedule: &SampleSchedule,
) -> Result<CoderivativeValue> {
    let n = spec.dim();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    match limiting_kernel(spec, p) {
        Ok(kernel) => Ok(CoderivativeValue {
            direction: w.to_vec(),
            value: kernel.value_at(n, w)?,
            exactness: Exactness::Exact,
        }),
        Err(Error::UnsupportedVariant(_)) => match spec_root(spec) {
            OperatorSpec::MaxQuadSubdiff { f } => {
                sampled_limiting_maxquad(spec, f, p, w, schedule)
            }
            _ => Err(Error::UnsupportedVariant(
                "no limiting coderivative path for this variant".into(),
            )),
        },
        Err(e) => Err(e),
    }
}

/// Unwraps identity shifts to find the structural root of the operator.
fn spec_root(spec: &OperatorSpec) -> &OperatorSpec {
    match spec {
        OperatorSpec::ShiftIdentity { base, .. } | OperatorSpec::ShiftDown { base, .. } => {
            spec_root(base)
        }
        other => other,
    }
}

/// Sampled limiting fallback for `∂f` with distinct quadratic matrices:
/// Hessian actions of nearby single-active points whose gradients converge
/// to `v̄`, collected over shrinking shells and deduplicated.
fn sampled_limiting_maxquad(
    spec: &OperatorSpec,
    f: &MaxQuadFunction,
    p: &GraphPoint,
    w: &[Rat],
    schedule: &SampleSchedule,
) -> Result<CoderivativeValue> {
    let n = f.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut zs: Vec<RVec> = Vec::new();
    let push = |z: RVec, zs: &mut Vec<RVec>| {
        if !zs.contains(&z) {
            zs.push(z);
        }
    };
    // The base point itself when it is smooth.
    if let Some((v, jac)) = smooth_linearization(spec, &p.u)? {
        if v == p.v {
            push(adjoint_apply(&jac, w), &mut zs);
        }
    }
    // Gradient convergence filter: ‖v'−v̄‖² ≤ 2(1+L²)·r² with L the gradient
    // Lipschitz bound, plus a unit of slack for the shift parts.
    let lip_sq = f.grad_lipschitz_bound_sq();
    let factor = rat_i(2) * (Rat::one() + lip_sq) + rat_i(2);
    for k in 0..=schedule.halvings {
        let r = &schedule.radius0 / rat_i(1i64 << k.min(62));
        let r_sq = &r * &r;
        for _ in 0..schedule.per_shell {
            let dir: RVec = (0..n)
                .map(|_| {
                    let t = rng.gen_range(0..=(1u64 << 16)) as i64;
                    ratio(t, 1 << 16) * rat_i(2) - Rat::one()
                })
                .collect();
            if dir.iter().all(|x| x.is_zero()) {
                continue;
            }
            let u2 = vec_add(&p.u, &vec_scale(&r, &dir));
            if let Some((v2, jac)) = smooth_linearization(spec, &u2)? {
                let dv = crate::rat::norm_sq(&crate::rat::vec_sub(&v2, &p.v));
                if dv <= &factor * &r_sq {
                    push(adjoint_apply(&jac, w), &mut zs);
                }
            }
        }
    }
    let deduped = dedup_points_tol(zs, 1e-8);
    Ok(CoderivativeValue {
        direction: w.to_vec(),
        value: if deduped.is_empty() {
            ValueSet::Empty { dim: n }
        } else {
            ValueSet::Points { dim: n, points: deduped }
        },
        exactness: Exactness::Sampled(schedule.clone()),
    })
}

/// Drops points within `tol` (L∞, in floating approximation) of an earlier one.
pub fn dedup_points_tol(points: Vec<RVec>, tol: f64) -> Vec<RVec> {
    let mut out: Vec<RVec> = Vec::new();
    'outer: for p in points {
        for q in &out {
            let close = p
                .iter()
                .zip(q.iter())
                .all(|(a, b)| (rat_to_f64(a) - rat_to_f64(b)).abs() <= tol);
            if close {
                continue 'outer;
            }
        }
        out.push(p);
    }
    out
}

/// Shift rule: `D̂*(T+sI)(u,v)(w) = D̂*T(u, v−su)(w) + s·w`.
pub fn coderivative_shift(
    base: &OperatorSpec,
    s: &Rat,
    p: &GraphPoint,
    w: &[Rat],
) -> Result<CoderivativeValue> {
    let base_point = GraphPoint {
        u: p.u.clone(),
        v: crate::rat::vec_sub(&p.v, &vec_scale(s, &p.u)),
        provenance: format!("{}|shift-base", p.provenance),
    };
    let inner = regular_coderivative(base, &base_point, w)?;
    Ok(CoderivativeValue {
        direction: w.to_vec(),
        value: inner.value.translate(&vec_scale(s, w)),
        exactness: inner.exactness,
    })
}

/// Combined second-order subdifferential: regular coderivative of `∂f`.
pub fn second_order_combined(
    f: &MaxQuadFunction,
    p: &GraphPoint,
    w: &[Rat],
) -> Result<CoderivativeValue> {
    regular_coderivative(&OperatorSpec::MaxQuadSubdiff { f: f.clone() }, p, w)
}

/// Mixed/limiting second-order subdifferential: limiting coderivative of `∂f`.
pub fn second_order_limiting(
    f: &MaxQuadFunction,
    p: &GraphPoint,
    w: &[Rat],
) -> Result<CoderivativeValue> {
    limiting_coderivative(&OperatorSpec::MaxQuadSubdiff { f: f.clone() }, p, w)
}

/// Convenience: builds a graph point after verifying membership.
pub fn graph_point(spec: &OperatorSpec, u: RVec, v: RVec) -> Result<GraphPoint> {
    let p = GraphPoint { u, v, provenance: "query".into() };
    require_on_graph(spec, &p)?;
    Ok(p)
}

/// Central finite differences of a smooth operator against a direction, used
/// as an oracle for the adjoint Jacobian (floating point, step `1e-5`).
pub fn finite_difference_adjoint(spec: &OperatorSpec, u: &[Rat], w: &[Rat]) -> Result<Vec<f64>> {
    let n = spec.dim();
    let h = 1e-5;
    let hr = rat_from_f64(h).expect("finite");
    let mut out = vec![0.0; n];
    for j in 0..n {
        let mut up = u.to_vec();
        up[j] = &up[j] + &hr;
        let mut dn = u.to_vec();
        dn[j] = &dn[j] - &hr;
        let vp = match evaluate(spec, &up)? {
            ValueSet::Points { points, .. } => points[0].clone(),
            _ => return Err(Error::UnsupportedVariant("finite differences need a single-valued map".into())),
        };
        let vn = match evaluate(spec, &dn)? {
            ValueSet::Points { points, .. } => points[0].clone(),
            _ => return Err(Error::UnsupportedVariant("finite differences need a single-valued map".into())),
        };
        // (⟨T(u+he_j), w⟩ − ⟨T(u−he_j), w⟩) / 2h approximates (Jᵀw)_j.
        let fp: f64 = vp.iter().zip(w).map(|(a, b)| rat_to_f64(a) * rat_to_f64(b)).sum();
        let fn_: f64 = vn.iter().zip(w).map(|(a, b)| rat_to_f64(a) * rat_to_f64(b)).sum();
        out[j] = (fp - fn_) / (2.0 * h);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{abs_subdiff, identity_map, kx_plus_unit_box, neg_reciprocal};
    use crate::rat::rat_i;

    fn gp(u: i64, v: Rat) -> GraphPoint {
        GraphPoint { u: vec![rat_i(u)], v: vec![v], provenance: "test".into() }
    }

    fn singleton(cv: &CoderivativeValue) -> Option<Rat> {
        match &cv.value {
            ValueSet::Points { points, .. } if points.len() == 1 && points[0].len() == 1 => {
                Some(points[0][0].clone())
            }
            _ => None,
        }
    }

    #[test]
    fn box_operator_regular_table() {
        // T(x) = x + [0,1] (κ = 1): four-case value table.
        let t = kx_plus_unit_box(rat_i(1));
        // Interior: w = 0 → {0}; w = 1 → ∅.
        let p_mid = gp(0, ratio(1, 2));
        let v = regular_coderivative(&t, &p_mid, &[rat_i(0)]).unwrap();
        assert_eq!(singleton(&v), Some(rat_i(0)));
        assert_eq!(v.exactness, Exactness::Exact);
        let v = regular_coderivative(&t, &p_mid, &[rat_i(1)]).unwrap();
        assert!(v.value.is_empty_set());
        // Lower face: w ≥ 0 → {κw}.
        let p_lo = gp(0, rat_i(0));
        let v = regular_coderivative(&t, &p_lo, &[rat_i(1)]).unwrap();
        assert_eq!(singleton(&v), Some(rat_i(1)));
        let v = regular_coderivative(&t, &p_lo, &[rat_i(-1)]).unwrap();
        assert!(v.value.is_empty_set());
        // Upper face: w ≤ 0 → {κw}.
        let p_hi = gp(0, rat_i(1));
        let v = regular_coderivative(&t, &p_hi, &[rat_i(-1)]).unwrap();
        assert_eq!(singleton(&v), Some(rat_i(-1)));
        let v = regular_coderivative(&t, &p_hi, &[rat_i(2)]).unwrap();
        assert!(v.value.is_empty_set());
    }

    #[test]
    fn box_operator_limiting_equals_regular() {
        let t = kx_plus_unit_box(rat_i(1));
        for (u, v, w, expect) in [
            (0, ratio(1, 2), 0, Some(rat_i(0))),
            (0, ratio(1, 2), 1, None),
            (0, rat_i(0), 2, Some(rat_i(2))),
            (0, rat_i(0), -1, None),
            (0, rat_i(1), -2, Some(rat_i(-2))),
            (2, rat_i(3), -1, Some(rat_i(-1))),
            (2, rat_i(3), 1, None),
        ] {
            let p = gp(u, v);
            let lim = limiting_coderivative(&t, &p, &[rat_i(w)]).unwrap();
            assert_eq!(lim.exactness, Exactness::Exact);
            match expect {
                Some(z) => assert_eq!(singleton(&lim), Some(z)),
                None => assert!(lim.value.is_empty_set()),
            }
        }
    }

    #[test]
    fn identity_adjoint() {
        let t = identity_map(2);
        let p = GraphPoint {
            u: vec![rat_i(3), rat_i(-1)],
            v: vec![rat_i(3), rat_i(-1)],
            provenance: "t".into(),
        };
        let w = vec![rat_i(5), rat_i(7)];
        let v = regular_coderivative(&t, &p, &w).unwrap();
        match &v.value {
            ValueSet::Points { points, .. } => assert_eq!(points[0], w),
            other => panic!("expected singleton, got {other:?}"),
        }
    }

    #[test]
    fn reciprocal_adjoint_and_fd() {
        // T(x) = -1/x: T'(2) = 1/4, so D̂*T(2)(3) = {3/4}.
        let t = neg_reciprocal();
        let p = gp(2, ratio(-1, 2));
        let v = regular_coderivative(&t, &p, &[rat_i(3)]).unwrap();
        assert_eq!(singleton(&v), Some(ratio(3, 4)));
        let fd = finite_difference_adjoint(&t, &[rat_i(2)], &[rat_i(3)]).unwrap();
        assert!((fd[0] - 0.75).abs() < 1e-6);
        // Off-graph queries are rejected.
        assert!(matches!(
            regular_coderivative(&t, &gp(2, rat_i(1)), &[rat_i(1)]),
            Err(Error::NotOnGraph)
        ));
    }

    #[test]
    fn abs_subdiff_limiting_at_origin() {
        // At (0,0) the graph is locally the vertical segment: w = 0 gives all
        // of ℝ, any w ≠ 0 gives ∅.
        let t = abs_subdiff();
        let p = gp(0, rat_i(0));
        let v = limiting_coderivative(&t, &p, &[rat_i(0)]).unwrap();
        assert!(v.value.contains(&[rat_i(0)]));
        assert!(v.value.contains(&[rat_i(50)]));
        assert!(v.value.contains(&[rat_i(-50)]));
        let v = limiting_coderivative(&t, &p, &[rat_i(1)]).unwrap();
        assert!(v.value.is_empty_set());
        // Regular value at (0,0) is contained in the limiting one.
        let reg = regular_coderivative(&t, &p, &[rat_i(0)]).unwrap();
        match &reg.value {
            ValueSet::Polyhedra { polys, .. } => {
                for poly in polys {
                    let (vs, _) = poly.vertices_rays().unwrap();
                    for vert in vs {
                        assert!(v.value.contains(&vert));
                    }
                }
            }
            ValueSet::Points { points, .. } => {
                for pt in points {
                    assert!(v.value.contains(pt));
                }
            }
            ValueSet::Empty { .. } => {}
        }
    }

    #[test]
    fn abs_subdiff_corner_limiting_is_richer() {
        // At the corner (0,1): regular w=0 value is {0}… the corner cone gives
        // z ≤ 0 for w = 0, while the limiting family adds the horizontal line
        // (so all z) and the vertical-line stratum contributions.
        let t = abs_subdiff();
        let p = gp(0, rat_i(1));
        let reg = regular_coderivative(&t, &p, &[rat_i(0)]).unwrap();
        // Corner cone: {(z,ω): z ≤ 0, ω ≥ 0}; at w=0 the slice is z ≤ 0.
        assert!(reg.value.contains(&[rat_i(-3)]));
        assert!(!reg.value.contains(&[rat_i(3)]));
        let lim = limiting_coderivative(&t, &p, &[rat_i(0)]).unwrap();
        assert!(lim.value.contains(&[rat_i(-3)]));
        assert!(lim.value.contains(&[rat_i(3)]));
        // w = 1 (ω = −1): the corner rejects it, the vertical stratum accepts
        // z = 0, and nothing else appears.
        let lim = limiting_coderivative(&t, &p, &[rat_i(1)]).unwrap();
        assert!(lim.value.contains(&[rat_i(0)]));
        assert!(!lim.value.contains(&[rat_i(1)]));
        let reg = regular_coderivative(&t, &p, &[rat_i(1)]).unwrap();
        assert!(reg.value.is_empty_set());
    }

    #[test]
    fn shift_rule_matches_direct() {
        // T = ∂|x|, s = 1 at (0,1) on gph(T+I): base point (0,1), w = 1.
        let base = abs_subdiff();
        let s = rat_i(1);
        let shifted = OperatorSpec::ShiftIdentity { base: Box::new(abs_subdiff()), s: s.clone() };
        let p = gp(0, rat_i(1));
        let by_rule = coderivative_shift(&base, &s, &p, &[rat_i(1)]).unwrap();
        let direct = regular_coderivative(&shifted, &p, &[rat_i(1)]).unwrap();
        // Both are sets of z; compare on a probe grid.
        for z in -4..=4 {
            let z = ratio(z, 2);
            assert_eq!(
                by_rule.value.contains(&[z.clone()]),
                direct.value.contains(&[z.clone()]),
                "mismatch at z={z}"
            );
        }
    }

    #[test]
    fn kappa_as_shift_of_kappa_free() {
        // AffineBox κ=1 equals (AffineBox κ=0) + 1·I: tables agree.
        let base = kx_plus_unit_box(rat_i(0));
        let one = kx_plus_unit_box(rat_i(1));
        for (u, v, w) in [(0i64, rat_i(0), rat_i(1)), (0, rat_i(1), rat_i(-2)), (1, ratio(1, 2), rat_i(0))] {
            let p = gp(u, &v + rat_i(u));
            let by_rule = coderivative_shift(&base, &rat_i(1), &p, &[w.clone()]).unwrap();
            let direct = regular_coderivative(&one, &p, &[w.clone()]).unwrap();
            for z in -4..=4 {
                let z = ratio(z, 2);
                assert_eq!(
                    by_rule.value.contains(&[z.clone()]),
                    direct.value.contains(&[z.clone()])
                );
            }
        }
    }

    #[test]
    fn second_order_hessian_action() {
        // f = x² (single piece): ∂²f(1, 2)(5) = {2·5} = {10}.
        let f = MaxQuadFunction::one_dim(vec![(rat_i(2), rat_i(0), rat_i(0))]).unwrap();
        let p = gp(1, rat_i(2));
        let v = second_order_combined(&f, &p, &[rat_i(5)]).unwrap();
        assert_eq!(singleton(&v), Some(rat_i(10)));
        let v = second_order_limiting(&f, &p, &[rat_i(5)]).unwrap();
        assert_eq!(singleton(&v), Some(rat_i(10)));
    }

    #[test]
    fn sampled_fallback_for_distinct_matrices() {
        // f(x,y) = max{x² + y², 2x² − 1 + ½y²}: distinct matrices in n = 2.
        let q1 = RatMat::new(vec![vec![rat_i(2), rat_i(0)], vec![rat_i(0), rat_i(2)]]);
        let q2 = RatMat::new(vec![vec![rat_i(4), rat_i(0)], vec![rat_i(0), rat_i(1)]]);
        let f = MaxQuadFunction::new(
            2,
            vec![
                crate::maxquad::QuadPiece { q: q1, c: zeros(2), d: rat_i(0) },
                crate::maxquad::QuadPiece { q: q2, c: zeros(2), d: rat_i(-1) },
            ],
        )
        .unwrap();
        // Nonsmooth point: x² + y² = 2x² − 1 + ½y² ⟺ x² − ½y² = 1; take (1, 0).
        let u = vec![rat_i(1), rat_i(0)];
        let v = vec![rat_i(2), rat_i(0)]; // shared gradient (2x, 2y) = (4x, y) at (1,0)? 2,0 vs 4,0
        // Gradients differ: piece 1 gives (2,0), piece 2 gives (4,0); pick piece 1's.
        let p = GraphPoint { u, v, provenance: "t".into() };
        let w = vec![rat_i(1), rat_i(0)];
        let spec = OperatorSpec::MaxQuadSubdiff { f };
        // No exact regular value at a genuinely nonsmooth point…
        assert!(matches!(
            regular_coderivative(&spec, &p, &w),
            Err(Error::UnsupportedVariant(_))
        ));
        // …but the sampled limiting fallback returns Hessian actions.
        let lim = limiting_coderivative(&spec, &p, &w).unwrap();
        assert!(matches!(lim.exactness, Exactness::Sampled(_)));
        match &lim.value {
            ValueSet::Points { points, .. } => {
                // Q₁w = (2,0) must appear: gradients of piece 1 near (1,0) approach (2,0).
                assert!(points.iter().any(|z| z == &vec![rat_i(2), rat_i(0)]));
            }
            other => panic!("expected points, got {other:?}"),
        }
    }

    use crate::rat::{ratio, RatMat};
}
