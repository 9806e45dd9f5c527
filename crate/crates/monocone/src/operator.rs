//! Set-valued operator specifications, evaluation, compilation and sampling.
//!
//! Supported classes: smooth rational maps, affine-plus-box operators,
//! explicit polyhedral graph unions, subdifferentials of finite maxima of
//! quadratics, and the combinators `T + sI`, `T − κI`, `T⁻¹`. The classes are
//! chosen so that graphs are closed by construction and the analysis can run
//! in exact arithmetic.

use crate::cone::MAX_DD_DIM;
use crate::error::{Error, Result};
use crate::maxquad::MaxQuadFunction;
use crate::polynomial::RationalMapFn;
use crate::polyhedron::HPolyhedron;
use crate::rat::{
    dot, rat_i, rat_sqrt, ratio, vec_add, vec_scale, zeros, ExtRat, RVec, Rat, RatMat,
};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub enum OperatorSpec {
    /// `T(x) = {map(x)}` on the open set where all denominators are nonzero.
    RationalMap { map: RationalMapFn },
    /// `T(x) = Ax + b + [lo, hi]`; infinite bounds drop their halfspace.
    AffineBox { a: RatMat, b: RVec, lo: Vec<ExtRat>, hi: Vec<ExtRat> },
    /// `gph T` given directly as a finite union of polyhedra in ℝ²ⁿ.
    PolyhedralGraphUnion { dim: usize, pieces: Vec<HPolyhedron> },
    /// `T = ∂f` for a finite max of quadratics.
    MaxQuadSubdiff { f: MaxQuadFunction },
    /// `T = base + sI`.
    ShiftIdentity { base: Box<OperatorSpec>, s: Rat },
    /// `T = base − κI`, `κ ≥ 0`.
    ShiftDown { base: Box<OperatorSpec>, kappa: Rat },
    /// `gph T` is the coordinate swap of `gph base`.
    Inverse { base: Box<OperatorSpec> },
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::RationalMap { map } => map.dim,
            OperatorSpec::AffineBox { b, .. } => b.len(),
            OperatorSpec::PolyhedralGraphUnion { dim, .. } => *dim,
            OperatorSpec::MaxQuadSubdiff { f } => f.dim,
            OperatorSpec::ShiftIdentity { base, .. }
            | OperatorSpec::ShiftDown { base, .. }
            | OperatorSpec::Inverse { base } => base.dim(),
        }
    }

    /// Validates invariants; returns human-readable warnings (e.g. dropped
    /// empty graph pieces).
    pub fn validate(&mut self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        match self {
            OperatorSpec::RationalMap { map } => {
                if map.components.len() != map.dim {
                    return Err(Error::DimensionMismatch {
                        expected: map.dim,
                        got: map.components.len(),
                    });
                }
            }
            OperatorSpec::AffineBox { a, b, lo, hi } => {
                let n = b.len();
                if a.nrows() != n || a.ncols() != n || lo.len() != n || hi.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
                }
                for (l, h) in lo.iter().zip(hi.iter()) {
                    if let (ExtRat::Finite(l), ExtRat::Finite(h)) = (l, h) {
                        if l > h {
                            return Err(Error::Invalid("box bound lo > hi".into()));
                        }
                    }
                    if matches!(l, ExtRat::PlusInf) || matches!(h, ExtRat::MinusInf) {
                        return Err(Error::Invalid("box bound ordered ±inf wrongly".into()));
                    }
                }
            }
            OperatorSpec::PolyhedralGraphUnion { dim, pieces } => {
                let full = 2 * *dim;
                for p in pieces.iter() {
                    if p.dim != full {
                        return Err(Error::DimensionMismatch { expected: full, got: p.dim });
                    }
                }
                let before = pieces.len();
                pieces.retain(|p| !p.is_empty());
                if pieces.len() < before {
                    warnings.push(format!(
                        "dropped {} empty graph piece(s) at load",
                        before - pieces.len()
                    ));
                }
                if pieces.is_empty() {
                    return Err(Error::Invalid("graph union has no nonempty pieces".into()));
                }
            }
            OperatorSpec::MaxQuadSubdiff { f } => {
                MaxQuadFunction::new(f.dim, f.pieces.clone())?;
            }
            OperatorSpec::ShiftIdentity { base, .. } => {
                warnings.extend(base.validate()?);
            }
            OperatorSpec::ShiftDown { base, kappa } => {
                if kappa.is_negative() {
                    return Err(Error::Invalid("downward shift κ must be ≥ 0".into()));
                }
                warnings.extend(base.validate()?);
            }
            OperatorSpec::Inverse { base } => {
                warnings.extend(base.validate()?);
            }
        }
        Ok(warnings)
    }
}

/// Exact description of `T(u)`.
#[derive(Clone, Debug)]
pub enum ValueSet {
    Empty { dim: usize },
    Points { dim: usize, points: Vec<RVec> },
    Polyhedra { dim: usize, polys: Vec<HPolyhedron> },
}

impl ValueSet {
    pub fn dim(&self) -> usize {
        match self {
            ValueSet::Empty { dim }
            | ValueSet::Points { dim, .. }
            | ValueSet::Polyhedra { dim, .. } => *dim,
        }
    }

    pub fn is_empty_set(&self) -> bool {
        match self {
            ValueSet::Empty { .. } => true,
            ValueSet::Points { points, .. } => points.is_empty(),
            ValueSet::Polyhedra { polys, .. } => polys.is_empty(),
        }
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        match self {
            ValueSet::Empty { .. } => false,
            ValueSet::Points { points, .. } => points.iter().any(|p| p.as_slice() == v),
            ValueSet::Polyhedra { polys, .. } => polys.iter().any(|p| p.contains(v)),
        }
    }

    pub fn translate(&self, t: &[Rat]) -> ValueSet {
        match self {
            ValueSet::Empty { dim } => ValueSet::Empty { dim: *dim },
            ValueSet::Points { dim, points } => ValueSet::Points {
                dim: *dim,
                points: points.iter().map(|p| vec_add(p, t)).collect(),
            },
            ValueSet::Polyhedra { dim, polys } => ValueSet::Polyhedra {
                dim: *dim,
                polys: polys.iter().map(|p| p.translate(t)).collect(),
            },
        }
    }

    /// Exact `inf ⟨v, w⟩` over the value set (`+∞` when empty).
    pub fn support_min(&self, w: &[Rat]) -> Result<ExtRat> {
        Ok(self.support_min_witness(w)?.0)
    }

    /// As `support_min`, with a minimizing member when the set is nonempty
    /// (for `−∞`, a point along the certified unbounded ray).
    pub fn support_min_witness(&self, w: &[Rat]) -> Result<(ExtRat, Option<RVec>)> {
        match self {
            ValueSet::Empty { .. } => Ok((ExtRat::PlusInf, None)),
            ValueSet::Points { points, .. } => {
                let best = points
                    .iter()
                    .min_by(|a, b| dot(a, w).cmp(&dot(b, w)))
                    .expect("nonempty");
                Ok((ExtRat::Finite(dot(best, w)), Some(best.clone())))
            }
            ValueSet::Polyhedra { polys, .. } => {
                let mut best = ExtRat::PlusInf;
                let mut arg: Option<RVec> = None;
                for p in polys {
                    match p.support_min(w)? {
                        crate::cone::SupportMin::Finite { value, argmin } => {
                            if ExtRat::Finite(value.clone()) < best {
                                best = ExtRat::Finite(value);
                                arg = Some(argmin);
                            }
                        }
                        crate::cone::SupportMin::NegInf { point, ray } => {
                            best = ExtRat::MinusInf;
                            arg = Some(vec_add(&point, &ray));
                        }
                    }
                }
                Ok((best, arg))
            }
        }
    }
}

/// A certified graph pair `(u, v) ∈ gph T`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GraphPoint {
    pub u: RVec,
    pub v: RVec,
    pub provenance: String,
}

/// Deterministic graph sampling plan.
#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub region_lo: RVec,
    pub region_hi: RVec,
    pub density: usize,
    pub seed: u64,
    pub jitter: Rat,
}

impl SampleConfig {
    pub fn new(region_lo: RVec, region_hi: RVec, density: usize, seed: u64, jitter: Rat) -> Result<Self> {
        if region_lo.len() != region_hi.len() {
            return Err(Error::DimensionMismatch {
                expected: region_lo.len(),
                got: region_hi.len(),
            });
        }
        if density < 2 {
            return Err(Error::Invalid("density must be at least 2".into()));
        }
        if jitter.is_negative() || jitter >= ratio(1, 2) {
            return Err(Error::Invalid("jitter must lie in [0, 1/2)".into()));
        }
        for (l, h) in region_lo.iter().zip(&region_hi) {
            if l > h {
                return Err(Error::Invalid("region lo > hi".into()));
            }
        }
        Ok(SampleConfig { region_lo, region_hi, density, seed, jitter })
    }

    /// Uniform grid with default parameters over `[-span, span]ⁿ`.
    pub fn symmetric(dim: usize, span: i64, density: usize, seed: u64) -> Self {
        SampleConfig {
            region_lo: vec![rat_i(-span); dim],
            region_hi: vec![rat_i(span); dim],
            density,
            seed,
            jitter: Rat::zero(),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Exact value set `T(u)`.
pub fn evaluate(spec: &OperatorSpec, u: &[Rat]) -> Result<ValueSet> {
    let n = spec.dim();
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.len() });
    }
    match spec {
        OperatorSpec::RationalMap { map } => Ok(match map.eval(u) {
            Some(v) => ValueSet::Points { dim: n, points: vec![v] },
            None => ValueSet::Empty { dim: n },
        }),
        OperatorSpec::AffineBox { a, b, lo, hi } => {
            let center = vec_add(&a.matvec(u), b);
            let poly = HPolyhedron::from_box(lo, hi)?.translate(&center);
            Ok(ValueSet::Polyhedra { dim: n, polys: vec![poly] })
        }
        OperatorSpec::PolyhedralGraphUnion { pieces, .. } => {
            Ok(slices_at(pieces, u, n))
        }
        OperatorSpec::MaxQuadSubdiff { f } => {
            let grads = f.active_gradients(u, &Rat::zero());
            if grads.len() == 1 {
                Ok(ValueSet::Points { dim: n, points: grads })
            } else {
                let hull = convex_hull_hform(n, &grads)?;
                Ok(ValueSet::Polyhedra { dim: n, polys: vec![hull] })
            }
        }
        OperatorSpec::ShiftIdentity { base, s } => {
            Ok(evaluate(base, u)?.translate(&vec_scale(s, u)))
        }
        OperatorSpec::ShiftDown { base, kappa } => {
            Ok(evaluate(base, u)?.translate(&vec_scale(&-kappa.clone(), u)))
        }
        OperatorSpec::Inverse { base } => {
            let pieces = compile_to_polyhedral(base).map_err(|e| match e {
                Error::NotCompilable(msg) => Error::UnsupportedVariant(format!(
                    "inverse of a non-polyhedral operator cannot be evaluated ({msg})"
                )),
                other => other,
            })?;
            let swapped: Vec<HPolyhedron> = pieces.iter().map(|p| p.swap_blocks(n)).collect();
            Ok(slices_at(&swapped, u, n))
        }
    }
}

fn slices_at(pieces: &[HPolyhedron], u: &[Rat], n: usize) -> ValueSet {
    let mut polys = Vec::new();
    for p in pieces {
        let slice = p.fix_prefix(u);
        if !slice.is_empty() {
            polys.push(slice);
        }
    }
    if polys.is_empty() {
        ValueSet::Empty { dim: n }
    } else {
        ValueSet::Polyhedra { dim: n, polys }
    }
}

/// Membership `u ∈ dom T`.
pub fn in_domain(spec: &OperatorSpec, u: &[Rat]) -> Result<bool> {
    Ok(!evaluate(spec, u)?.is_empty_set())
}

/// H-form of `conv{points}` via the lifted-cone construction.
pub fn convex_hull_hform(dim: usize, points: &[RVec]) -> Result<HPolyhedron> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if dim + 1 > MAX_DD_DIM {
        return Err(Error::DimensionTooLarge(dim + 1));
    }
    let lifted: Vec<RVec> = points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.push(Rat::one());
            q
        })
        .collect();
    let cone = crate::cone::PolyCone::V { dim: dim + 1, rays: lifted, lin: vec![] };
    let rows = cone.hform()?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for r in rows {
        a.push(r[..dim].to_vec());
        b.push(-r[dim].clone());
    }
    HPolyhedron::new(dim, a, b, vec![], vec![])
}

// ---------------------------------------------------------------------------
// Compilation to polyhedral graph unions
// ---------------------------------------------------------------------------

/// Compiles the operator graph to an exact union of H-polyhedra in ℝ²ⁿ.
///
/// Supported: affine-plus-box, explicit unions, `∂f` for one-dimensional
/// max-quad or shared-matrix max-quad functions, and the combinators over
/// those. Rational maps and distinct-matrix max-quads in `n ≥ 2` are not
/// polyhedral and return `NotCompilable`.
pub fn compile_to_polyhedral(spec: &OperatorSpec) -> Result<Vec<HPolyhedron>> {
    let n = spec.dim();
    match spec {
        OperatorSpec::RationalMap { .. } => {
            Err(Error::NotCompilable("smooth rational-map graph".into()))
        }
        OperatorSpec::PolyhedralGraphUnion { pieces, .. } => Ok(pieces.clone()),
        OperatorSpec::AffineBox { a, b, lo, hi } => {
            let mut rows: Vec<RVec> = Vec::new();
            let mut rhs: Vec<Rat> = Vec::new();
            for i in 0..n {
                // lo_i ≤ (v − Au − b)_i ≤ hi_i
                if let ExtRat::Finite(h) = &hi[i] {
                    let mut row = zeros(2 * n);
                    for j in 0..n {
                        row[j] = -a.rows[i][j].clone();
                    }
                    row[n + i] = Rat::one();
                    rows.push(row);
                    rhs.push(h + &b[i]);
                }
                if let ExtRat::Finite(l) = &lo[i] {
                    let mut row = zeros(2 * n);
                    for j in 0..n {
                        row[j] = a.rows[i][j].clone();
                    }
                    row[n + i] = -Rat::one();
                    rows.push(row);
                    rhs.push(-(l + &b[i]));
                }
            }
            Ok(vec![HPolyhedron::new(2 * n, rows, rhs, vec![], vec![])?])
        }
        OperatorSpec::MaxQuadSubdiff { f } => {
            if n == 1 {
                compile_maxquad_1d(f)
            } else if let Some(q) = f.shared_q() {
                compile_maxquad_shared(f, q)
            } else {
                Err(Error::NotCompilable(
                    "distinct quadratic matrices in dimension ≥ 2".into(),
                ))
            }
        }
        OperatorSpec::ShiftIdentity { base, s } => {
            let pieces = compile_to_polyhedral(base)?;
            let m = shear_matrix(n, &-s.clone());
            Ok(pieces.iter().map(|p| p.linear_preimage(&m)).collect())
        }
        OperatorSpec::ShiftDown { base, kappa } => {
            let pieces = compile_to_polyhedral(base)?;
            let m = shear_matrix(n, kappa);
            Ok(pieces.iter().map(|p| p.linear_preimage(&m)).collect())
        }
        OperatorSpec::Inverse { base } => {
            let pieces = compile_to_polyhedral(base)?;
            Ok(pieces.iter().map(|p| p.swap_blocks(n)).collect())
        }
    }
}

/// `[[I, 0], [tI, I]]`: maps `(u, w) ↦ (u, w + tu)`. The graph of `T + sI`
/// is the preimage of `gph T` under the shear with `t = −s`.
fn shear_matrix(n: usize, t: &Rat) -> RatMat {
    let mut m = RatMat::identity(2 * n);
    for i in 0..n {
        m.rows[n + i][i] = t.clone();
    }
    m
}

/// Exact envelope stratification of `∂f` for one-dimensional max-quads.
fn compile_maxquad_1d(f: &MaxQuadFunction) -> Result<Vec<HPolyhedron>> {
    // Deduplicate identical (q, c, d) triples.
    let mut triples: Vec<(Rat, Rat, Rat)> = Vec::new();
    for p in &f.pieces {
        let t = (p.q.rows[0][0].clone(), p.c[0].clone(), p.d.clone());
        if !triples.contains(&t) {
            triples.push(t);
        }
    }
    // Rational envelope breakpoints from pairwise intersections.
    let mut bps: BTreeSet<Rat> = BTreeSet::new();
    for i in 0..triples.len() {
        for j in (i + 1)..triples.len() {
            let a2 = (&triples[i].0 - &triples[j].0) / rat_i(2);
            let b1 = &triples[i].1 - &triples[j].1;
            let c0 = &triples[i].2 - &triples[j].2;
            if a2.is_zero() {
                if !b1.is_zero() {
                    bps.insert(-c0 / b1);
                }
                continue;
            }
            let disc = &b1 * &b1 - rat_i(4) * &a2 * &c0;
            if disc.is_negative() {
                continue;
            }
            if disc.is_zero() {
                bps.insert(-b1 / (rat_i(2) * a2));
                continue;
            }
            match rat_sqrt(&disc) {
                Some(s) => {
                    bps.insert((-&b1 + &s) / (rat_i(2) * &a2));
                    bps.insert((-&b1 - &s) / (rat_i(2) * &a2));
                }
                None => {
                    return Err(Error::NotCompilable(
                        "irrational intersection of quadratic pieces".into(),
                    ))
                }
            }
        }
    }
    // Keep breakpoints where the envelope really has ≥ 2 active pieces.
    let value = |q: &Rat, c: &Rat, d: &Rat, x: &Rat| q / rat_i(2) * x * x + c * x + d;
    let envelope = |x: &Rat| -> Rat {
        triples.iter().map(|(q, c, d)| value(q, c, d, x)).max().unwrap()
    };
    let active = |x: &Rat| -> Vec<usize> {
        let fx = envelope(x);
        triples
            .iter()
            .enumerate()
            .filter(|(_, (q, c, d))| value(q, c, d, x) == fx)
            .map(|(i, _)| i)
            .collect()
    };
    let kept: Vec<Rat> = bps.into_iter().filter(|x| active(x).len() >= 2).collect();

    let mut pieces: Vec<HPolyhedron> = Vec::new();
    let mut add_interval = |lo: Option<&Rat>, hi: Option<&Rat>, test: &Rat| -> Result<()> {
        let act = active(test);
        debug_assert_eq!(act.len(), 1, "open envelope intervals have a unique active piece");
        let (q, c, _) = &triples[act[0]];
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        if let Some(l) = lo {
            rows.push(vec![-Rat::one(), Rat::zero()]);
            rhs.push(-l.clone());
        }
        if let Some(h) = hi {
            rows.push(vec![Rat::one(), Rat::zero()]);
            rhs.push(h.clone());
        }
        // v = q·x + c on the interval.
        let eq = vec![vec![-q.clone(), Rat::one()]];
        pieces.push(HPolyhedron::new(2, rows, rhs, eq, vec![c.clone()])?);
        Ok(())
    };
    if kept.is_empty() {
        add_interval(None, None, &Rat::zero())?;
        return Ok(pieces);
    }
    add_interval(None, Some(&kept[0]), &(&kept[0] - Rat::one()))?;
    for w in kept.windows(2) {
        let mid = (&w[0] + &w[1]) / rat_i(2);
        add_interval(Some(&w[0]), Some(&w[1]), &mid)?;
    }
    let last = kept.last().unwrap();
    add_interval(Some(last), None, &(last + Rat::one()))?;
    // Vertical subdifferential segments at the kinks.
    for x_b in &kept {
        let grads: Vec<Rat> = active(x_b)
            .into_iter()
            .map(|i| &triples[i].0 * x_b + &triples[i].1)
            .collect();
        let gmin = grads.iter().min().unwrap().clone();
        let gmax = grads.iter().max().unwrap().clone();
        if gmin < gmax {
            pieces.push(HPolyhedron::new(
                2,
                vec![vec![Rat::zero(), Rat::one()], vec![Rat::zero(), -Rat::one()]],
                vec![gmax, -gmin],
                vec![vec![Rat::one(), Rat::zero()]],
                vec![x_b.clone()],
            )?);
        }
    }
    Ok(pieces)
}

/// Stratification of `∂f` for `f = ½xᵀQx + max_i{c_iᵀx + d_i}`: the affine
/// image `(x, y) ↦ (x, Qx + y)` of the polyhedral max-of-affine
/// subdifferential graph.
fn compile_maxquad_shared(f: &MaxQuadFunction, q: &RatMat) -> Result<Vec<HPolyhedron>> {
    let n = f.dim;
    let mut parts: Vec<(RVec, Rat)> = Vec::new();
    for p in &f.pieces {
        let t = (p.c.clone(), p.d.clone());
        if !parts.contains(&t) {
            parts.push(t);
        }
    }
    let m = parts.len();
    if m > 10 {
        return Err(Error::NotCompilable("too many affine pieces".into()));
    }
    // Preimage matrix for (x, v) ↦ (x, v − Qx): graph pieces are preimages
    // of the max-of-affine pieces under this map.
    let mut shear = RatMat::identity(2 * n);
    for i in 0..n {
        for j in 0..n {
            shear.rows[n + i][j] = -q.rows[i][j].clone();
        }
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let i0 = active[0];
        let mut rows: Vec<RVec> = Vec::new();
        let mut rhs: Vec<Rat> = Vec::new();
        let mut eq: Vec<RVec> = Vec::new();
        let mut f_rhs: Vec<Rat> = Vec::new();
        // Region in x: actives tie, inactives dominated.
        for &i in &active[1..] {
            let mut row = zeros(2 * n);
            for j in 0..n {
                row[j] = &parts[i].0[j] - &parts[i0].0[j];
            }
            eq.push(row);
            f_rhs.push(&parts[i0].1 - &parts[i].1);
        }
        for k in 0..m {
            if active.contains(&k) {
                continue;
            }
            let mut row = zeros(2 * n);
            for j in 0..n {
                row[j] = &parts[k].0[j] - &parts[i0].0[j];
            }
            rows.push(row);
            rhs.push(&parts[i0].1 - &parts[k].1);
        }
        // Value block: y ∈ conv{c_i : i ∈ active}.
        let grads: Vec<RVec> = {
            let mut g: Vec<RVec> = Vec::new();
            for &i in &active {
                if !g.contains(&parts[i].0) {
                    g.push(parts[i].0.clone());
                }
            }
            g
        };
        if grads.len() == 1 {
            for j in 0..n {
                let mut row = zeros(2 * n);
                row[n + j] = Rat::one();
                eq.push(row);
                f_rhs.push(grads[0][j].clone());
            }
        } else {
            let hull = convex_hull_hform(n, &grads)?;
            for (hr, hb) in hull.a.iter().zip(&hull.b) {
                let mut row = zeros(2 * n);
                for j in 0..n {
                    row[n + j] = hr[j].clone();
                }
                rows.push(row);
                rhs.push(hb.clone());
            }
        }
        let piece = HPolyhedron::new(2 * n, rows, rhs, eq, f_rhs)?;
        if piece.is_empty() {
            continue;
        }
        out.push(piece.linear_preimage(&shear).normalized());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Graph sampling
// ---------------------------------------------------------------------------

const GRID_CAP: usize = 20_000;

/// Deterministic graph sample: grid evaluation plus, for polyhedral graphs,
/// the vertices and a relative-interior point of every piece clipped to the
/// sampling region.
pub fn graph_sample(spec: &OperatorSpec, cfg: &SampleConfig) -> Result<Vec<GraphPoint>> {
    let n = spec.dim();
    if cfg.region_lo.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cfg.region_lo.len() });
    }
    let grid = build_grid(cfg)?;
    let mut seen: BTreeSet<(RVec, RVec)> = BTreeSet::new();
    let mut out: Vec<GraphPoint> = Vec::new();
    let mut push = |u: RVec, v: RVec, prov: String, out: &mut Vec<GraphPoint>| {
        if seen.insert((u.clone(), v.clone())) {
            out.push(GraphPoint { u, v, provenance: prov });
        }
    };

    // Track value magnitudes for the clip box used on unbounded slices.
    let mut vmax = rat_i(1);
    for c in cfg.region_lo.iter().chain(&cfg.region_hi) {
        if c.abs() > vmax {
            vmax = c.abs();
        }
    }
    let mut grid_values: Vec<(RVec, ValueSet)> = Vec::new();
    for u in &grid {
        let val = evaluate(spec, u)?;
        if val.is_empty_set() {
            continue;
        }
        if let ValueSet::Polyhedra { polys, .. } = &val {
            for p in polys {
                for (lo, hi) in p.coordinate_bounds()? {
                    for b in [lo, hi] {
                        if let ExtRat::Finite(x) = b {
                            if x.abs() > vmax {
                                vmax = x.abs();
                            }
                        }
                    }
                }
            }
        }
        grid_values.push((u.clone(), val));
    }
    let clip = rat_i(4) * (Rat::one() + vmax);

    for (u, val) in grid_values {
        match val {
            ValueSet::Points { points, .. } => {
                for v in points {
                    push(u.clone(), v, "map".into(), &mut out);
                }
            }
            ValueSet::Polyhedra { polys, .. } => {
                for (i, p) in polys.iter().enumerate() {
                    sample_value_poly(&u, p, i, &clip, &mut push, &mut out)?;
                }
            }
            ValueSet::Empty { .. } => unreachable!(),
        }
    }

    // Piece-level sampling on polyhedral graphs.
    if let Ok(pieces) = compile_to_polyhedral(spec) {
        let clip_box = region_value_box(n, &cfg.region_lo, &cfg.region_hi, &clip)?;
        for (i, piece) in pieces.iter().enumerate() {
            let clipped = piece.intersect(&clip_box);
            if clipped.is_empty() {
                continue;
            }
            if 2 * n <= crate::cone::MAX_ENUM_DIM {
                let (verts, _) = clipped.vertices_rays()?;
                for vert in verts {
                    push(
                        vert[..n].to_vec(),
                        vert[n..].to_vec(),
                        format!("piece:{i}:vertex"),
                        &mut out,
                    );
                }
            }
            if let Some(ri) = clipped.relative_interior_point() {
                push(ri[..n].to_vec(), ri[n..].to_vec(), format!("piece:{i}:relint"), &mut out);
            }
        }
    }

    if out.is_empty() {
        return Err(Error::EmptySample);
    }
    out.sort();
    Ok(out)
}

fn sample_value_poly(
    u: &RVec,
    p: &HPolyhedron,
    idx: usize,
    clip: &Rat,
    push: &mut impl FnMut(RVec, RVec, String, &mut Vec<GraphPoint>),
    out: &mut Vec<GraphPoint>,
) -> Result<()> {
    let n = p.dim;
    let clipped = if p.is_bounded()? {
        p.clone()
    } else {
        let lo = vec![ExtRat::Finite(-clip.clone()); n];
        let hi = vec![ExtRat::Finite(clip.clone()); n];
        p.intersect(&HPolyhedron::from_box(&lo, &hi)?)
    };
    if clipped.is_empty() {
        return Ok(());
    }
    if n <= crate::cone::MAX_ENUM_DIM {
        let (verts, _) = clipped.vertices_rays()?;
        if !verts.is_empty() {
            let mut centroid = zeros(n);
            for v in &verts {
                centroid = vec_add(&centroid, v);
            }
            let count = rat_i(verts.len() as i64);
            let centroid: RVec = centroid.into_iter().map(|x| x / &count).collect();
            for v in verts {
                push(u.clone(), v, format!("slice:{idx}:vertex"), out);
            }
            if clipped.contains(&centroid) {
                push(u.clone(), centroid, format!("slice:{idx}:centroid"), out);
            }
        }
    }
    if let Some(ri) = clipped.relative_interior_point() {
        push(u.clone(), ri, format!("slice:{idx}:relint"), out);
    }
    Ok(())
}

fn region_value_box(n: usize, lo: &[Rat], hi: &[Rat], clip: &Rat) -> Result<HPolyhedron> {
    let mut blo: Vec<ExtRat> = lo.iter().map(|x| ExtRat::Finite(x.clone())).collect();
    let mut bhi: Vec<ExtRat> = hi.iter().map(|x| ExtRat::Finite(x.clone())).collect();
    for _ in 0..n {
        blo.push(ExtRat::Finite(-clip.clone()));
        bhi.push(ExtRat::Finite(clip.clone()));
    }
    HPolyhedron::from_box(&blo, &bhi)
}

fn build_grid(cfg: &SampleConfig) -> Result<Vec<RVec>> {
    let n = cfg.region_lo.len();
    let total = cfg.density.checked_pow(n as u32).unwrap_or(usize::MAX);
    if total > GRID_CAP {
        return Err(Error::Invalid(format!("grid of {total} points exceeds the cap")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut axes: Vec<Vec<Rat>> = Vec::with_capacity(n);
    for axis in 0..n {
        let lo = &cfg.region_lo[axis];
        let hi = &cfg.region_hi[axis];
        let step = (hi - lo) / rat_i((cfg.density - 1) as i64);
        let mut nodes = Vec::with_capacity(cfg.density);
        for k in 0..cfg.density {
            let mut x = lo + rat_i(k as i64) * &step;
            if !cfg.jitter.is_zero() && k > 0 && k + 1 < cfg.density {
                // Dyadic offset in (−jitter, jitter) · step.
                let t = rng.gen_range(0..=(1u64 << 20)) as i64;
                let unit = ratio(t, 1 << 20) * rat_i(2) - Rat::one();
                x = x + &cfg.jitter * &step * unit;
                if &x < lo {
                    x = lo.clone();
                }
                if &x > hi {
                    x = hi.clone();
                }
            }
            nodes.push(x);
        }
        axes.push(nodes);
    }
    let mut grid: Vec<RVec> = vec![vec![]];
    for axis in axes {
        let mut next = Vec::with_capacity(grid.len() * axis.len());
        for g in &grid {
            for x in &axis {
                let mut point = g.clone();
                point.push(x.clone());
                next.push(point);
            }
        }
        grid = next;
    }
    Ok(grid)
}

// ---------------------------------------------------------------------------
// Convenience constructors
// ---------------------------------------------------------------------------

/// `T(x) = κx + [0,1]` in one dimension.
pub fn kx_plus_unit_box(kappa: Rat) -> OperatorSpec {
    OperatorSpec::AffineBox {
        a: RatMat::new(vec![vec![kappa]]),
        b: vec![Rat::zero()],
        lo: vec![ExtRat::Finite(Rat::zero())],
        hi: vec![ExtRat::Finite(Rat::one())],
    }
}

/// `T(x) = −1/x` with domain `ℝ∖{0}`.
pub fn neg_reciprocal() -> OperatorSpec {
    use crate::polynomial::{Poly, RationalFn};
    let num = Poly::new(1, vec![(rat_i(-1), vec![0])]).expect("valid");
    let den = Poly::new(1, vec![(rat_i(1), vec![1])]).expect("valid");
    OperatorSpec::RationalMap {
        map: RationalMapFn::new(1, vec![RationalFn::new(num, den).expect("valid")]).expect("valid"),
    }
}

/// The identity map as a rational map in dimension `n`.
pub fn identity_map(n: usize) -> OperatorSpec {
    use crate::polynomial::{Poly, RationalFn};
    let comps = (0..n)
        .map(|i| {
            let mut pow = vec![0u32; n];
            pow[i] = 1;
            RationalFn::poly(Poly::new(n, vec![(Rat::one(), pow)]).expect("valid"))
        })
        .collect();
    OperatorSpec::RationalMap { map: RationalMapFn::new(n, comps).expect("valid") }
}

/// `T = ∂|x|` as an operator.
pub fn abs_subdiff() -> OperatorSpec {
    OperatorSpec::MaxQuadSubdiff { f: crate::maxquad::abs_function() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_i;

    #[test]
    fn affine_box_evaluation() {
        // κ = 1, box [0,1], u = 2: the interval [2, 3].
        let t = kx_plus_unit_box(rat_i(1));
        let v = evaluate(&t, &[rat_i(2)]).unwrap();
        assert!(v.contains(&[rat_i(2)]));
        assert!(v.contains(&[rat_i(3)]));
        assert!(v.contains(&[ratio(5, 2)]));
        assert!(!v.contains(&[ratio(7, 2)]));
    }

    #[test]
    fn rational_map_pole_is_empty() {
        let t = neg_reciprocal();
        assert!(evaluate(&t, &[rat_i(0)]).unwrap().is_empty_set());
        let v = evaluate(&t, &[rat_i(2)]).unwrap();
        assert!(v.contains(&[ratio(-1, 2)]));
    }

    #[test]
    fn inverse_of_constant_box_is_whole_line() {
        // T(x) = 0·x + [0,1]; T⁻¹(1/2) = ℝ.
        let t = OperatorSpec::Inverse { base: Box::new(kx_plus_unit_box(rat_i(0))) };
        let v = evaluate(&t, &[ratio(1, 2)]).unwrap();
        assert!(v.contains(&[rat_i(-1000)]));
        assert!(v.contains(&[rat_i(1000)]));
        // And T⁻¹(2) = ∅ since 2 ∉ [0,1].
        assert!(evaluate(&t, &[rat_i(2)]).unwrap().is_empty_set());
    }

    #[test]
    fn affine_box_compiles_to_strip() {
        let t = kx_plus_unit_box(rat_i(1));
        let pieces = compile_to_polyhedral(&t).unwrap();
        assert_eq!(pieces.len(), 1);
        let p = &pieces[0];
        assert!(p.contains(&[rat_i(0), ratio(1, 2)]));
        assert!(p.contains(&[rat_i(1), rat_i(1)]));
        assert!(p.contains(&[rat_i(1), rat_i(2)]));
        assert!(!p.contains(&[rat_i(1), ratio(5, 2)]));
    }

    #[test]
    fn abs_subdiff_compiles_to_three_pieces() {
        let t = abs_subdiff();
        let pieces = compile_to_polyhedral(&t).unwrap();
        assert_eq!(pieces.len(), 3);
        let contains = |u: i64, v: Rat| pieces.iter().any(|p| p.contains(&[rat_i(u), v.clone()]));
        assert!(contains(-2, rat_i(-1)));
        assert!(contains(0, ratio(1, 2)));
        assert!(contains(0, rat_i(-1)));
        assert!(contains(3, rat_i(1)));
        assert!(!contains(3, rat_i(-1)));
        assert!(!contains(0, rat_i(2)));
    }

    #[test]
    fn shared_q_compile_matches_formula() {
        // f = ½x² + |x|: gph ∂f = {(u,u−1): u≤0} ∪ {0}×[−1,1] ∪ {(u,u+1): u≥0}.
        let f = MaxQuadFunction::one_dim(vec![
            (rat_i(1), rat_i(1), rat_i(0)),
            (rat_i(1), rat_i(-1), rat_i(0)),
        ])
        .unwrap();
        let t = OperatorSpec::MaxQuadSubdiff { f };
        let pieces = compile_to_polyhedral(&t).unwrap();
        let contains = |u: Rat, v: Rat| pieces.iter().any(|p| p.contains(&[u.clone(), v.clone()]));
        assert!(contains(rat_i(-2), rat_i(-3)));
        assert!(contains(rat_i(0), ratio(1, 2)));
        assert!(contains(rat_i(0), rat_i(-1)));
        assert!(contains(rat_i(2), rat_i(3)));
        assert!(!contains(rat_i(2), rat_i(1)));
        assert!(!contains(rat_i(-1), rat_i(0)));
        // Round trip against direct evaluation on a small grid.
        for k in -8..=8 {
            let u = ratio(k, 4);
            let direct = evaluate(&t, &[u.clone()]).unwrap();
            let sliced = slices_at(&pieces, &[u.clone()], 1);
            for v in [-3, -1, 0, 1, 3] {
                let v = ratio(v, 1) + &u;
                assert_eq!(direct.contains(&[v.clone()]), sliced.contains(&[v.clone()]));
            }
        }
    }

    #[test]
    fn envelope_with_tangency_has_no_vertical_piece() {
        // max{x², 2x−1}: gradients agree at the contact point x = 1.
        let f = MaxQuadFunction::one_dim(vec![
            (rat_i(2), rat_i(0), rat_i(0)),
            (rat_i(0), rat_i(2), rat_i(-1)),
        ])
        .unwrap();
        let pieces = compile_to_polyhedral(&OperatorSpec::MaxQuadSubdiff { f }).unwrap();
        // No piece is a vertical segment: every slice at u=1 is the singleton {2}.
        let slice = slices_at(&pieces, &[rat_i(1)], 1);
        assert!(slice.contains(&[rat_i(2)]));
        assert!(!slice.contains(&[ratio(3, 2)]));
    }

    #[test]
    fn irrational_breakpoint_refuses_compile() {
        // max{½x², x}: ½x² = x at 0 and 2 (rational, fine);
        // max{x², x+1}: intersections at (1±√5)/2 are irrational.
        let f = MaxQuadFunction::one_dim(vec![
            (rat_i(2), rat_i(0), rat_i(0)),
            (rat_i(0), rat_i(1), rat_i(1)),
        ])
        .unwrap();
        match compile_to_polyhedral(&OperatorSpec::MaxQuadSubdiff { f }) {
            Err(Error::NotCompilable(_)) => {}
            other => panic!("expected NotCompilable, got {other:?}"),
        }
    }

    #[test]
    fn sampling_box_operator_hits_interval_points() {
        let t = kx_plus_unit_box(rat_i(1));
        let cfg = SampleConfig::symmetric(1, 1, 3, 42);
        let pts = graph_sample(&t, &cfg).unwrap();
        let has = |u: i64, v: Rat| pts.iter().any(|p| p.u == vec![rat_i(u)] && p.v == vec![v.clone()]);
        assert!(has(0, rat_i(0)));
        assert!(has(0, rat_i(1)));
        assert!(has(0, ratio(1, 2)));
        // Every sampled point is a certified member.
        for p in &pts {
            assert!(evaluate(&t, &p.u).unwrap().contains(&p.v), "bad point {p:?}");
        }
    }

    #[test]
    fn sampling_respects_domain_holes() {
        let t = neg_reciprocal();
        let cfg = SampleConfig::symmetric(1, 1, 3, 0);
        let pts = graph_sample(&t, &cfg).unwrap();
        assert!(pts.iter().all(|p| p.u != vec![rat_i(0)]));
        assert!(!pts.is_empty());
    }

    #[test]
    fn sampling_abs_subdiff_covers_segment() {
        let t = abs_subdiff();
        let cfg = SampleConfig::symmetric(1, 1, 3, 1);
        let pts = graph_sample(&t, &cfg).unwrap();
        let has = |u: i64, v: i64| {
            pts.iter().any(|p| p.u == vec![rat_i(u)] && p.v == vec![rat_i(v)])
        };
        assert!(has(0, -1));
        assert!(has(0, 1));
        assert!(has(0, 0));
    }

    #[test]
    fn determinism_for_fixed_seed() {
        let t = abs_subdiff();
        let mut cfg = SampleConfig::symmetric(1, 2, 5, 9);
        cfg.jitter = ratio(1, 4);
        let a = graph_sample(&t, &cfg).unwrap();
        let b = graph_sample(&t, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 10;
        let c = graph_sample(&t, &cfg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn combinator_coherence_samples() {
        let base = abs_subdiff();
        let shifted = OperatorSpec::ShiftIdentity { base: Box::new(abs_subdiff()), s: rat_i(2) };
        for k in -4..=4 {
            let u = vec![ratio(k, 2)];
            let bv = evaluate(&base, &u).unwrap();
            let sv = evaluate(&shifted, &u).unwrap();
            for cand in [rat_i(-1), rat_i(0), rat_i(1)] {
                let moved = &cand + rat_i(2) * &u[0];
                assert_eq!(bv.contains(&[cand.clone()]), sv.contains(&[moved]));
            }
        }
    }

    use crate::rat::ratio;
}
