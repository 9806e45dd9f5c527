//! Normal cones of finite unions of polyhedra via face signatures.
//!
//! A face signature records, for each piece of the union, whether a point is
//! outside the piece or inside with a given exact set of tight inequality
//! rows. Signatures stratify the union into finitely many relatively open
//! polyhedral cells, the regular normal cone is constant on each cell, and
//! outer limits of normal cones reduce to a finite enumeration over cells
//! whose closure contains the base point. That finiteness is what makes the
//! limiting constructions exactly computable here.

use crate::cone::PolyCone;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpOutcome};
use crate::polyhedron::HPolyhedron;
use crate::rat::{dot, zeros, RVec, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// Cap on the number of nodes visited by a stratum enumeration.
pub const STRATA_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PieceStatus {
    Out,
    In { tight: BTreeSet<usize> },
}

/// Per-piece membership/tightness pattern of a point in a polyhedral union.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FaceSignature {
    pub statuses: Vec<PieceStatus>,
}

impl FaceSignature {
    pub fn active_indices(&self) -> Vec<usize> {
        self.statuses
            .iter()
            .enumerate()
            .filter_map(|(i, s)| matches!(s, PieceStatus::In { .. }).then_some(i))
            .collect()
    }
}

/// Exact signature of `x` in the union (requires no membership).
pub fn signature_of(pieces: &[HPolyhedron], x: &[Rat]) -> FaceSignature {
    let statuses = pieces
        .iter()
        .map(|p| {
            if p.contains(x) {
                PieceStatus::In { tight: p.tight_rows(x).into_iter().collect() }
            } else {
                PieceStatus::Out
            }
        })
        .collect();
    FaceSignature { statuses }
}

/// Regular normal cone of a single polyhedron at a member point: the cone
/// generated by the tight inequality normals plus the span of the equality
/// normals.
pub fn regular_normal_cone(piece: &HPolyhedron, x: &[Rat]) -> Result<PolyCone> {
    if !piece.contains(x) {
        return Err(Error::NotMember);
    }
    Ok(piece_cone(piece, &piece.tight_rows(x).into_iter().collect()))
}

fn piece_cone(piece: &HPolyhedron, tight: &BTreeSet<usize>) -> PolyCone {
    let rays: Vec<RVec> = tight.iter().map(|&i| piece.a[i].clone()).collect();
    let lin: Vec<RVec> = piece.eq.clone();
    PolyCone::V { dim: piece.dim, rays, lin }
}

/// Regular normal cone of the union at `x`: the intersection of the active
/// pieces' normal cones.
pub fn regular_normal_cone_union(pieces: &[HPolyhedron], x: &[Rat]) -> Result<PolyCone> {
    let sig = signature_of(pieces, x);
    if sig.active_indices().is_empty() {
        return Err(Error::NotMember);
    }
    cone_of_signature(pieces, &sig)
}

/// Cache of piece-cone halfspace forms keyed by `(piece index, tight set)`;
/// the conversion is the expensive step and repeats heavily across strata.
pub type ConeHformCache = std::collections::BTreeMap<(usize, BTreeSet<usize>), Vec<RVec>>;

/// The normal cone determined by a signature (independent of the particular
/// point realizing it).
pub fn cone_of_signature(pieces: &[HPolyhedron], sig: &FaceSignature) -> Result<PolyCone> {
    cone_of_signature_cached(pieces, sig, &mut ConeHformCache::new())
}

pub fn cone_of_signature_cached(
    pieces: &[HPolyhedron],
    sig: &FaceSignature,
    cache: &mut ConeHformCache,
) -> Result<PolyCone> {
    let active: Vec<(usize, &BTreeSet<usize>)> = sig
        .statuses
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            PieceStatus::In { tight } => Some((i, tight)),
            PieceStatus::Out => None,
        })
        .collect();
    match active.len() {
        0 => Err(Error::NotMember),
        1 => {
            let (i, tight) = active[0];
            Ok(piece_cone(&pieces[i], tight))
        }
        _ => {
            let dim = pieces[0].dim;
            let mut rows: Vec<RVec> = Vec::new();
            for (i, tight) in active {
                let key = (i, tight.clone());
                if !cache.contains_key(&key) {
                    let hform = piece_cone(&pieces[i], tight).hform()?;
                    cache.insert(key.clone(), hform);
                }
                rows.extend(cache[&key].iter().cloned());
            }
            let rows: Vec<RVec> = {
                let mut seen = BTreeSet::new();
                rows.into_iter()
                    .map(|r| crate::rat::canon_dir(&r))
                    .filter(|r| seen.insert(r.clone()))
                    .collect()
            };
            Ok(PolyCone::H { dim, rows })
        }
    }
}

/// One way a piece can be strictly escaped: an inequality row pushed past its
/// bound, or an equality row left in either direction.
#[derive(Clone, Debug)]
enum Escape {
    IneqAbove(usize),
    EqAbove(usize),
    EqBelow(usize),
}

/// Strict system: `eqs` hold exactly, `stricts` hold with positive slack.
#[derive(Clone, Debug, Default)]
struct StrictSystem {
    dim: usize,
    eqs: Vec<(RVec, Rat)>,
    stricts: Vec<(RVec, Rat)>, // row·y < rhs
}

impl StrictSystem {
    fn new(dim: usize) -> Self {
        StrictSystem { dim, eqs: vec![], stricts: vec![], }
    }

    fn add_in_piece(&mut self, piece: &HPolyhedron, tight: &BTreeSet<usize>) {
        for (i, (row, rhs)) in piece.a.iter().zip(&piece.b).enumerate() {
            if tight.contains(&i) {
                self.eqs.push((row.clone(), rhs.clone()));
            } else {
                self.stricts.push((row.clone(), rhs.clone()));
            }
        }
        for (row, rhs) in piece.eq.iter().zip(&piece.f) {
            self.eqs.push((row.clone(), rhs.clone()));
        }
    }

    fn add_escape(&mut self, piece: &HPolyhedron, esc: &Escape) {
        match esc {
            Escape::IneqAbove(i) => {
                // a·y > b  <=>  (-a)·y < -b
                let row: RVec = piece.a[*i].iter().map(|v| -v).collect();
                self.stricts.push((row, -piece.b[*i].clone()));
            }
            Escape::EqAbove(i) => {
                let row: RVec = piece.eq[*i].iter().map(|v| -v).collect();
                self.stricts.push((row, -piece.f[*i].clone()));
            }
            Escape::EqBelow(i) => {
                self.stricts.push((piece.eq[*i].clone(), piece.f[*i].clone()));
            }
        }
    }

    /// Max-slack LP: is the relatively open region nonempty? Returns a point
    /// satisfying all strict rows with positive slack when it is.
    fn strict_point(&self, extra_box: Option<(&[Rat], &Rat)>) -> Option<RVec> {
        let d = self.dim;
        let mut ineqs: Vec<(RVec, Rat)> = Vec::new();
        for (row, rhs) in &self.stricts {
            let mut r = row.clone();
            r.push(Rat::one());
            ineqs.push((r, rhs.clone()));
        }
        if let Some((center, radius)) = extra_box {
            for i in 0..d {
                let mut r = zeros(d + 1);
                r[i] = Rat::one();
                ineqs.push((r.clone(), &center[i] + radius));
                r[i] = -Rat::one();
                ineqs.push((r, radius - &center[i]));
            }
        }
        let mut cap = zeros(d + 1);
        cap[d] = Rat::one();
        ineqs.push((cap, Rat::one()));
        let mut nonneg = zeros(d + 1);
        nonneg[d] = -Rat::one();
        ineqs.push((nonneg, Rat::zero()));
        let eqs: Vec<(RVec, Rat)> = self
            .eqs
            .iter()
            .map(|(row, rhs)| {
                let mut r = row.clone();
                r.push(Rat::zero());
                (r, rhs.clone())
            })
            .collect();
        let mut obj = zeros(d + 1);
        obj[d] = -Rat::one();
        match lp::solve(&LinearProgram { dim: d + 1, objective: obj, ineqs, eqs }) {
            LpOutcome::Optimal { point, .. } => {
                if point[d].is_positive() {
                    Some(point[..d].to_vec())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Does `x` satisfy the closed relaxation? Together with nonemptiness of
    /// the strict region this is equivalent to `x ∈ cl(region)`.
    fn closed_contains(&self, x: &[Rat]) -> bool {
        self.eqs.iter().all(|(row, rhs)| dot(row, x) == *rhs)
            && self.stricts.iter().all(|(row, rhs)| dot(row, x) <= *rhs)
    }
}

fn escape_candidates_near(piece: &HPolyhedron, x: &[Rat]) -> Vec<Escape> {
    if piece.contains(x) {
        let mut out: Vec<Escape> = piece
            .tight_rows(x)
            .into_iter()
            .map(Escape::IneqAbove)
            .collect();
        for i in 0..piece.eq.len() {
            out.push(Escape::EqAbove(i));
            out.push(Escape::EqBelow(i));
        }
        out
    } else {
        // Already violated somewhere; that row stays violated nearby.
        for (i, (row, rhs)) in piece.a.iter().zip(&piece.b).enumerate() {
            if dot(row, x) > *rhs {
                return vec![Escape::IneqAbove(i)];
            }
        }
        for (i, (row, rhs)) in piece.eq.iter().zip(&piece.f).enumerate() {
            let v = dot(row, x);
            if v > *rhs {
                return vec![Escape::EqAbove(i)];
            }
            if v < *rhs {
                return vec![Escape::EqBelow(i)];
            }
        }
        vec![]
    }
}

/// Builds the strict systems (one per combination of escape refinements) for
/// a candidate signature.
fn signature_systems(
    pieces: &[HPolyhedron],
    x: &[Rat],
    sig: &FaceSignature,
) -> Vec<StrictSystem> {
    let dim = pieces[0].dim;
    let mut base = StrictSystem::new(dim);
    let mut escape_sets: Vec<(usize, Vec<Escape>)> = Vec::new();
    for (i, status) in sig.statuses.iter().enumerate() {
        match status {
            PieceStatus::In { tight } => base.add_in_piece(&pieces[i], tight),
            PieceStatus::Out => {
                let cands = escape_candidates_near(&pieces[i], x);
                if cands.is_empty() {
                    return vec![]; // piece cannot be escaped near x
                }
                escape_sets.push((i, cands));
            }
        }
    }
    let mut systems = vec![base];
    for (piece_idx, cands) in escape_sets {
        let mut next = Vec::with_capacity(systems.len() * cands.len());
        for sys in &systems {
            for esc in &cands {
                let mut s = sys.clone();
                s.add_escape(&pieces[piece_idx], esc);
                next.push(s);
            }
        }
        systems = next;
    }
    systems
}

/// Is the signature realized by points arbitrarily close to `x`? Implemented
/// as the two-LP test: the strict region is nonempty (max-slack LP) and `x`
/// lies in its closed relaxation.
pub fn signature_realizable_near(
    pieces: &[HPolyhedron],
    x: &[Rat],
    sig: &FaceSignature,
) -> bool {
    signature_systems(pieces, x, sig)
        .iter()
        .any(|sys| sys.closed_contains(x) && sys.strict_point(None).is_some())
}

/// Produces a point with exactly signature `sig` within L∞ distance `radius`
/// of `x`, when the signature is realizable near `x`.
pub fn signature_witness_near(
    pieces: &[HPolyhedron],
    x: &[Rat],
    sig: &FaceSignature,
    radius: &Rat,
) -> Option<RVec> {
    for sys in signature_systems(pieces, x, sig) {
        if !sys.closed_contains(x) || sys.strict_point(None).is_none() {
            continue;
        }
        if let Some(y) = sys.strict_point(Some((x, radius))) {
            debug_assert_eq!(signature_of(pieces, &y), *sig);
            return Some(y);
        }
    }
    None
}

/// The limiting normal cone of the union at `x` as a finite family of
/// polyhedral cones: one per signature realizable arbitrarily near `x`,
/// deduplicated as sets. The union of the family is the limiting cone.
///
/// Enumeration walks the cells of the hyperplane arrangement restricted to
/// the hyperplanes passing through `x` (all others keep the strict side `x`
/// is on). A nonempty cell of that restricted walk always has `x` in its
/// closure, so its signature is realizable arbitrarily close to `x`, and
/// conversely every nearby cell shows up.
pub fn limiting_normal_cone_union(
    pieces: &[HPolyhedron],
    x: &[Rat],
) -> Result<Vec<(FaceSignature, PolyCone)>> {
    if !pieces.iter().any(|p| p.contains(x)) {
        return Err(Error::NotMember);
    }
    let dim = pieces[0].dim;
    let arr = build_arrangement(pieces)?;
    // Pin hyperplanes not passing through x; branch on the rest.
    let base_signs: Vec<Option<i8>> = arr
        .hyperplanes
        .iter()
        .map(|(h, c)| {
            let v = dot(h, x);
            if v == *c {
                None
            } else if v < *c {
                Some(-1)
            } else {
                Some(1)
            }
        })
        .collect();
    let mut signatures: BTreeSet<FaceSignature> = BTreeSet::new();
    let mut signs: Vec<i8> = Vec::with_capacity(arr.hyperplanes.len());
    let mut visited = 0usize;
    walk_local_cells(
        pieces,
        dim,
        &arr,
        &base_signs,
        &mut signs,
        Some(x),
        &mut signatures,
        &mut visited,
    )?;
    let mut family: Vec<(FaceSignature, PolyCone)> = Vec::new();
    let mut cache = ConeHformCache::new();
    for sig in signatures {
        if sig.active_indices().is_empty() {
            continue;
        }
        let cone = cone_of_signature_cached(pieces, &sig, &mut cache)?;
        let mut duplicate = false;
        for (_, existing) in &family {
            if existing.set_eq(&cone)? {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            family.push((sig, cone));
        }
    }
    Ok(family)
}

#[allow(clippy::too_many_arguments)]
fn walk_local_cells(
    pieces: &[HPolyhedron],
    dim: usize,
    arr: &Arrangement,
    base_signs: &[Option<i8>],
    signs: &mut Vec<i8>,
    cell_witness: Option<&[Rat]>,
    out: &mut BTreeSet<FaceSignature>,
    visited: &mut usize,
) -> Result<()> {
    *visited += 1;
    if *visited > STRATA_CAP {
        return Err(Error::TooManyStrata(*visited));
    }
    let level = signs.len();
    if level == arr.hyperplanes.len() {
        out.insert(signature_from_signs(pieces, arr, signs));
        return Ok(());
    }
    let (h, c) = &arr.hyperplanes[level];
    let witness_sign: Option<i8> = cell_witness.map(|w| {
        let v = dot(h, w);
        if v == *c {
            0
        } else if v < *c {
            -1
        } else {
            1
        }
    });
    let branches: Vec<i8> = match base_signs[level] {
        Some(s) => vec![s],
        None => vec![0, -1, 1],
    };
    for s in branches {
        signs.push(s);
        let next_witness: Option<RVec> = if witness_sign == Some(s) {
            cell_witness.map(|w| w.to_vec())
        } else {
            cell_system(dim, arr, signs).strict_point(None)
        };
        if let Some(w) = next_witness {
            walk_local_cells(pieces, dim, arr, base_signs, signs, Some(&w), out, visited)?;
        }
        signs.pop();
    }
    Ok(())
}

fn signature_from_signs(pieces: &[HPolyhedron], arr: &Arrangement, signs: &[i8]) -> FaceSignature {
    let mut statuses = Vec::with_capacity(pieces.len());
    for (pi, _) in pieces.iter().enumerate() {
        let eq_ok = arr.piece_eqs[pi].iter().all(|&h| signs[h] == 0);
        let ineq_ok = arr.piece_ineqs[pi]
            .iter()
            .all(|r| r.sign as i16 * signs[r.h_idx] as i16 <= 0);
        if eq_ok && ineq_ok {
            let tight: BTreeSet<usize> = arr.piece_ineqs[pi]
                .iter()
                .enumerate()
                .filter(|(_, r)| signs[r.h_idx] == 0)
                .map(|(j, _)| j)
                .collect();
            statuses.push(PieceStatus::In { tight });
        } else {
            statuses.push(PieceStatus::Out);
        }
    }
    FaceSignature { statuses }
}

/// A globally enumerated stratum of the union: a realizable exact signature,
/// a witness point carrying it, and the normal cone on it.
#[derive(Clone, Debug)]
pub struct Stratum {
    pub signature: FaceSignature,
    pub witness: RVec,
    pub cone: PolyCone,
}

/// A row rewritten against the canonical oriented hyperplane list:
/// `row·x ≤ rhs ⟺ sign · (h·x − c) ≤ 0` for hyperplane index `h_idx`.
#[derive(Clone, Debug)]
struct OrientedRow {
    h_idx: usize,
    sign: i8,
}

struct Arrangement {
    /// Canonical hyperplanes `(direction, offset)`, primitive with positive
    /// leading coefficient.
    hyperplanes: Vec<(RVec, Rat)>,
    /// Per piece: oriented inequality rows and equality rows.
    piece_ineqs: Vec<Vec<OrientedRow>>,
    piece_eqs: Vec<Vec<usize>>,
}

fn orient(row: &RVec, rhs: &Rat) -> Option<((RVec, Rat), i8)> {
    if row.iter().all(|x| x.is_zero()) {
        return None;
    }
    let p = crate::rat::canon_dir(row);
    let k = row.iter().position(|x| !x.is_zero()).expect("nonzero");
    let t = &row[k] / &p[k]; // positive scale with row = t·p
    let c = rhs / t;
    if p[k].is_negative() {
        Some(((p.iter().map(|x| -x).collect(), -c), -1))
    } else {
        Some(((p, c), 1))
    }
}

fn build_arrangement(pieces: &[HPolyhedron]) -> Result<Arrangement> {
    let mut hyperplanes: Vec<(RVec, Rat)> = Vec::new();
    let mut piece_ineqs = Vec::with_capacity(pieces.len());
    let mut piece_eqs = Vec::with_capacity(pieces.len());
    let mut index_of = |h: (RVec, Rat), hyperplanes: &mut Vec<(RVec, Rat)>| -> usize {
        match hyperplanes.iter().position(|x| *x == h) {
            Some(i) => i,
            None => {
                hyperplanes.push(h);
                hyperplanes.len() - 1
            }
        }
    };
    for p in pieces {
        let mut ineqs = Vec::new();
        for (row, rhs) in p.a.iter().zip(&p.b) {
            if let Some((h, sign)) = orient(row, rhs) {
                let h_idx = index_of(h, &mut hyperplanes);
                ineqs.push(OrientedRow { h_idx, sign });
            } else if rhs.is_negative() {
                return Err(Error::Invalid("graph piece is trivially empty".into()));
            }
        }
        let mut eqs = Vec::new();
        for (row, rhs) in p.eq.iter().zip(&p.f) {
            match orient(row, rhs) {
                Some((h, _)) => eqs.push(index_of(h, &mut hyperplanes)),
                None => {
                    if !rhs.is_zero() {
                        return Err(Error::Invalid("graph piece is trivially empty".into()));
                    }
                }
            }
        }
        piece_ineqs.push(ineqs);
        piece_eqs.push(eqs);
    }
    Ok(Arrangement { hyperplanes, piece_ineqs, piece_eqs })
}

/// Enumerates every exact-signature stratum of the union by walking the sign
/// vectors of the hyperplane arrangement spanned by all piece rows. Each
/// feasible full assignment is one relatively open cell; the cell fixes the
/// membership status and exact tight set of every piece, and the normal
/// cone of the union is constant there. Signatures repeated across cells are
/// deduplicated. The normal cone of the union at any point equals the cone
/// of that point's stratum, so a property verified on all strata is verified
/// on the whole union.
pub fn enumerate_strata(pieces: &[HPolyhedron]) -> Result<Vec<Stratum>> {
    if pieces.is_empty() {
        return Ok(vec![]);
    }
    let dim = pieces[0].dim;
    let arr = build_arrangement(pieces)?;
    let mut out: Vec<Stratum> = Vec::new();
    let mut seen: BTreeSet<FaceSignature> = BTreeSet::new();
    let mut signs: Vec<i8> = Vec::with_capacity(arr.hyperplanes.len());
    let mut visited = 0usize;
    let mut cache = ConeHformCache::new();
    walk_cells(pieces, dim, &arr, &mut signs, None, &mut seen, &mut out, &mut visited, &mut cache)?;
    Ok(out)
}

fn cell_system(dim: usize, arr: &Arrangement, signs: &[i8]) -> StrictSystem {
    let mut sys = StrictSystem::new(dim);
    for (i, s) in signs.iter().enumerate() {
        let (h, c) = &arr.hyperplanes[i];
        match s {
            0 => sys.eqs.push((h.clone(), c.clone())),
            -1 => sys.stricts.push((h.clone(), c.clone())),
            _ => sys
                .stricts
                .push((h.iter().map(|x| -x).collect(), -c.clone())),
        }
    }
    sys
}

#[allow(clippy::too_many_arguments)]
fn walk_cells(
    pieces: &[HPolyhedron],
    dim: usize,
    arr: &Arrangement,
    signs: &mut Vec<i8>,
    cell_witness: Option<&RVec>,
    seen: &mut BTreeSet<FaceSignature>,
    out: &mut Vec<Stratum>,
    visited: &mut usize,
    cache: &mut ConeHformCache,
) -> Result<()> {
    *visited += 1;
    if *visited > STRATA_CAP {
        return Err(Error::TooManyStrata(*visited));
    }
    let level = signs.len();
    if level == arr.hyperplanes.len() {
        let witness = match cell_witness {
            Some(w) => w.clone(),
            None => match cell_system(dim, arr, signs).strict_point(None) {
                Some(w) => w,
                None => return Ok(()),
            },
        };
        // Derive the signature of the whole cell from the sign vector.
        let sig = signature_from_signs(pieces, arr, signs);
        if sig.active_indices().is_empty() || seen.contains(&sig) {
            return Ok(());
        }
        debug_assert_eq!(signature_of(pieces, &witness), sig);
        let cone = cone_of_signature_cached(pieces, &sig, cache)?;
        seen.insert(sig.clone());
        out.push(Stratum { signature: sig, witness, cone });
        return Ok(());
    }
    // A witness of the parent cell decides one branch for free: its own sign
    // on the next hyperplane. The other branches need an LP, which doubles
    // as the emptiness prune.
    let (h, c) = &arr.hyperplanes[level];
    let witness_sign: Option<i8> = cell_witness.map(|w| {
        let v = dot(h, w);
        if v == *c {
            0
        } else if v < *c {
            -1
        } else {
            1
        }
    });
    for s in [0i8, -1, 1] {
        signs.push(s);
        let next_witness: Option<RVec> = if witness_sign == Some(s) {
            cell_witness.cloned()
        } else {
            cell_system(dim, arr, signs).strict_point(None)
        };
        if let Some(w) = next_witness {
            walk_cells(pieces, dim, arr, signs, Some(&w), seen, out, visited, cache)?;
        }
        signs.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat_i, ratio};

    /// gph ∂|x| as three pieces: left ray v = -1 on u ≤ 0, the vertical
    /// segment {0}×[-1,1], and the right ray v = 1 on u ≥ 0.
    pub fn abs_subdiff_pieces() -> Vec<HPolyhedron> {
        let left = HPolyhedron::new(
            2,
            vec![vec![rat_i(1), rat_i(0)]],
            vec![rat_i(0)],
            vec![vec![rat_i(0), rat_i(1)]],
            vec![rat_i(-1)],
        )
        .unwrap();
        let seg = HPolyhedron::new(
            2,
            vec![vec![rat_i(0), rat_i(1)], vec![rat_i(0), rat_i(-1)]],
            vec![rat_i(1), rat_i(1)],
            vec![vec![rat_i(1), rat_i(0)]],
            vec![rat_i(0)],
        )
        .unwrap();
        let right = HPolyhedron::new(
            2,
            vec![vec![rat_i(-1), rat_i(0)]],
            vec![rat_i(0)],
            vec![vec![rat_i(0), rat_i(1)]],
            vec![rat_i(1)],
        )
        .unwrap();
        vec![left, seg, right]
    }

    #[test]
    fn single_piece_cone_at_boundary() {
        // {x ≤ 0} ⊂ R: normal cone at 0 is the ray t·(1), t ≥ 0.
        let p = HPolyhedron::new(1, vec![vec![rat_i(1)]], vec![rat_i(0)], vec![], vec![]).unwrap();
        let c = regular_normal_cone(&p, &[rat_i(0)]).unwrap();
        assert!(c.contains(&[rat_i(5)]));
        assert!(!c.contains(&[rat_i(-1)]));
        assert!(regular_normal_cone(&p, &[rat_i(1)]).is_err());
    }

    #[test]
    fn strip_cone_at_lower_face() {
        // {(u,v): 0 ≤ v-u ≤ 1} at (0,0): single tight row -(v-u) ≤ 0, normal (1,-1).
        let p = HPolyhedron::new(
            2,
            vec![vec![rat_i(-1), rat_i(1)], vec![rat_i(1), rat_i(-1)]],
            vec![rat_i(1), rat_i(0)],
            vec![],
            vec![],
        )
        .unwrap();
        let c = regular_normal_cone(&p, &[rat_i(0), rat_i(0)]).unwrap();
        assert!(c.contains(&[rat_i(1), rat_i(-1)]));
        assert!(c.contains(&[rat_i(2), rat_i(-2)]));
        assert!(!c.contains(&[rat_i(1), rat_i(1)]));
        assert!(!c.contains(&[rat_i(-1), rat_i(1)]));
    }

    #[test]
    fn union_cone_at_corner() {
        // At (0,-1) both the left ray and the segment are active; the cone
        // must be contained in each piece's own cone.
        let pieces = abs_subdiff_pieces();
        let x = [rat_i(0), rat_i(-1)];
        let c = regular_normal_cone_union(&pieces, &x).unwrap();
        let c_left = regular_normal_cone(&pieces[0], &x).unwrap();
        let c_seg = regular_normal_cone(&pieces[1], &x).unwrap();
        assert!(c.subset_of(&c_left).unwrap());
        assert!(c.subset_of(&c_seg).unwrap());
        // Fourth quadrant: z₁ ≥ 0 (from the segment side), z₂ ≤ 0 (below the ray).
        assert!(c.contains(&[rat_i(1), rat_i(-1)]));
        assert!(!c.contains(&[rat_i(-1), rat_i(-1)]));
        assert!(!c.contains(&[rat_i(1), rat_i(1)]));
    }

    #[test]
    fn interior_point_cone_is_zero() {
        let pieces = abs_subdiff_pieces();
        // (-2, -1) lies in the relative interior of the left ray piece: the
        // cone is the normal line to the ray, and within the full-dimensional
        // strip example below the interior cone is {0}.
        let strip = HPolyhedron::new(
            2,
            vec![vec![rat_i(-1), rat_i(1)], vec![rat_i(1), rat_i(-1)]],
            vec![rat_i(1), rat_i(0)],
            vec![],
            vec![],
        )
        .unwrap();
        let c = regular_normal_cone_union(&[strip], &[rat_i(0), ratio(1, 2)]).unwrap();
        assert!(c.is_zero_cone().unwrap());
        let c2 = regular_normal_cone_union(&pieces, &[rat_i(-2), rat_i(-1)]).unwrap();
        assert!(c2.contains(&[rat_i(0), rat_i(1)]));
        assert!(c2.contains(&[rat_i(0), rat_i(-1)]));
        assert!(!c2.contains(&[rat_i(1), rat_i(0)]));
    }

    #[test]
    fn realizability_matches_geometry() {
        let pieces = abs_subdiff_pieces();
        let origin = [rat_i(0), rat_i(0)];
        // Right-ray-only signature is NOT realizable near the origin: its
        // points all have v = 1.
        let right_only = FaceSignature {
            statuses: vec![
                PieceStatus::Out,
                PieceStatus::Out,
                PieceStatus::In { tight: BTreeSet::new() },
            ],
        };
        assert!(!signature_realizable_near(&pieces, &origin, &right_only));
        // Segment-interior signature is realizable near the origin.
        let seg_interior = FaceSignature {
            statuses: vec![
                PieceStatus::Out,
                PieceStatus::In { tight: BTreeSet::new() },
                PieceStatus::Out,
            ],
        };
        assert!(signature_realizable_near(&pieces, &origin, &seg_interior));
        // A point's own signature is always realizable.
        let own = signature_of(&pieces, &origin);
        assert!(signature_realizable_near(&pieces, &origin, &own));
        // Witness production stays within the requested distance.
        let w = signature_witness_near(&pieces, &origin, &seg_interior, &ratio(1, 1_000_000))
            .unwrap();
        assert_eq!(signature_of(&pieces, &w), seg_interior);
        assert!((&w[0] - rat_i(0)).abs() <= ratio(1, 1_000_000));
        assert!((&w[1] - rat_i(0)).abs() <= ratio(1, 1_000_000));
    }

    #[test]
    fn limiting_cone_at_segment_interior_is_horizontal() {
        let pieces = abs_subdiff_pieces();
        let family = limiting_normal_cone_union(&pieces, &[rat_i(0), rat_i(0)]).unwrap();
        // Near (0,0) only segment-interior points exist in the union, so the
        // family is the single horizontal line through the origin.
        assert_eq!(family.len(), 1);
        let (_, cone) = &family[0];
        assert!(cone.contains(&[rat_i(3), rat_i(0)]));
        assert!(cone.contains(&[rat_i(-3), rat_i(0)]));
        assert!(!cone.contains(&[rat_i(0), rat_i(1)]));
    }

    #[test]
    fn limiting_cone_at_corner_collects_three_strata() {
        let pieces = abs_subdiff_pieces();
        let family = limiting_normal_cone_union(&pieces, &[rat_i(0), rat_i(1)]).unwrap();
        // Segment interior (horizontal line), the corner itself (second
        // quadrant), and the right-ray interior (vertical line).
        assert_eq!(family.len(), 3);
        let union_contains = |z: &[Rat]| family.iter().any(|(_, c)| c.contains(z));
        assert!(union_contains(&[rat_i(1), rat_i(0)]));
        assert!(union_contains(&[rat_i(0), rat_i(1)]));
        assert!(union_contains(&[rat_i(-1), rat_i(1)]));
        assert!(!union_contains(&[rat_i(1), rat_i(1)]));
        // Regular cone is contained in the union (it is one of the members).
        let reg = regular_normal_cone_union(&pieces, &[rat_i(0), rat_i(1)]).unwrap();
        let mut found = false;
        for (_, c) in &family {
            if c.set_eq(&reg).unwrap() {
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn strata_enumeration_covers_abs_graph() {
        let pieces = abs_subdiff_pieces();
        let strata = enumerate_strata(&pieces).unwrap();
        // Five geometric strata: two open rays, segment interior, two corners.
        assert_eq!(strata.len(), 5);
        for s in &strata {
            assert_eq!(signature_of(&pieces, &s.witness), s.signature);
        }
    }
}
