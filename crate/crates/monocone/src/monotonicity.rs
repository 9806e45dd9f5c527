//! Monotonicity, hypomonotonicity and maximality analysis.
//!
//! The decision procedures combine three ingredients: exhaustive pairwise
//! sweeps over graph samples (refutation), close-pair probing for
//! hypomonotonicity moduli and divergence, and positive-semidefiniteness of
//! coderivative values. PSD certification on polyhedral graphs is exact and
//! quantifier-free: every stratum cone is enumerated and the quadratic
//! `⟨z,w⟩ − κ‖w‖²` is checked copositive on it, which covers all graph
//! points and all directions at once. Sampled evidence can refute but never
//! certifies.

use crate::coderivative::{
    limiting_coderivative, CoderivativeKind, Exactness,
};
use crate::copositive::{check_copositive, generator_form, Copositivity};
use crate::error::{Error, Result};
use crate::operator::{
    compile_to_polyhedral, evaluate, graph_sample, GraphPoint, OperatorSpec, SampleConfig,
    ValueSet,
};
use crate::rat::{
    dot, norm_sq, rat_i, rat_to_f64, ratio, vec_add, vec_scale, vec_sub, zeros, ExtRat, RVec,
    Rat, RatMat,
};
use crate::strata::enumerate_strata;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Float-comparison slack used by verdict logic (the exact paths never
/// consult it, but sampled evidence does).
pub fn tie_tolerance() -> Rat {
    ratio(1, 1_000_000_000_000)
}

fn thread_count() -> usize {
    std::env::var("MONOCONE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get().min(4)).unwrap_or(1)
        })
}

// ---------------------------------------------------------------------------
// Pairwise monotonicity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PairwiseReport {
    /// `inf ⟨Δv, Δu⟩ / ‖Δu‖²` over sampled pairs with distinct `u`.
    pub inf_quotient: ExtRat,
    /// `inf ⟨Δv, Δu⟩` over all sampled pairs.
    pub inf_product: ExtRat,
    pub witness: Option<(GraphPoint, GraphPoint)>,
    pub monotone_on_samples: bool,
}

/// Exhaustive pairwise test of `⟨v₁−v₂, u₁−u₂⟩ ≥ 0` over the sample list.
pub fn pairwise_monotone_test(samples: &[GraphPoint]) -> Result<PairwiseReport> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
    }
    let n = samples.len();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let workers = thread_count().min(pairs.len().max(1));
    let chunk = pairs.len().div_ceil(workers);
    // (product, quotient, pair index): reduced by exact minima; the pair
    // index breaks ties deterministically, independent of thread count.
    type Best = (Option<(Rat, usize)>, Option<(Rat, usize)>);
    let merged: Vec<Best> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for piece in pairs.chunks(chunk.max(1)) {
            handles.push(scope.spawn(move || {
                let mut best_prod: Option<(Rat, usize)> = None;
                let mut best_quot: Option<(Rat, usize)> = None;
                for (k, (i, j)) in piece.iter().enumerate() {
                    let du = vec_sub(&samples[*i].u, &samples[*j].u);
                    let dv = vec_sub(&samples[*i].v, &samples[*j].v);
                    let prod = dot(&dv, &du);
                    let idx = k; // local index; remapped by caller ordering
                    let _ = idx;
                    let global = (*i, *j);
                    let gidx = global.0 * n + global.1;
                    if best_prod.as_ref().is_none_or(|(p, bi)| prod < *p || (prod == *p && gidx < *bi)) {
                        best_prod = Some((prod.clone(), gidx));
                    }
                    let dsq = norm_sq(&du);
                    if !dsq.is_zero() {
                        let q = prod / dsq;
                        if best_quot.as_ref().is_none_or(|(p, bi)| q < *p || (q == *p && gidx < *bi)) {
                            best_quot = Some((q, gidx));
                        }
                    }
                }
                (best_prod, best_quot)
            }));
        }
        handles.into_iter().map(|h| h.join().expect("pair sweep worker")).collect()
    });
    let mut best_prod: Option<(Rat, usize)> = None;
    let mut best_quot: Option<(Rat, usize)> = None;
    for (p, q) in merged {
        for (slot, cand) in [(&mut best_prod, p), (&mut best_quot, q)] {
            if let Some((v, i)) = cand {
                if slot.as_ref().is_none_or(|(bv, bi)| v < *bv || (v == *bv && i < *bi)) {
                    *slot = Some((v, i));
                }
            }
        }
    }
    let (inf_product, witness) = match best_prod {
        Some((p, gidx)) => {
            let (i, j) = (gidx / n, gidx % n);
            (ExtRat::Finite(p), Some((samples[i].clone(), samples[j].clone())))
        }
        None => (ExtRat::PlusInf, None),
    };
    let inf_quotient = best_quot.map_or(ExtRat::PlusInf, |(q, _)| ExtRat::Finite(q));
    let monotone_on_samples = inf_product >= ExtRat::Finite(-tie_tolerance());
    Ok(PairwiseReport { inf_quotient, inf_product, witness, monotone_on_samples })
}

/// Re-checks a refutation witness from scratch: membership of both pairs and
/// a negative pairing.
pub fn recheck_witness(spec: &OperatorSpec, pair: &(GraphPoint, GraphPoint)) -> Result<bool> {
    let (p1, p2) = pair;
    if !evaluate(spec, &p1.u)?.contains(&p1.v) || !evaluate(spec, &p2.u)?.contains(&p2.v) {
        return Ok(false);
    }
    let prod = dot(&vec_sub(&p1.v, &p2.v), &vec_sub(&p1.u, &p2.u));
    Ok(prod < -tie_tolerance())
}

// ---------------------------------------------------------------------------
// Hypomonotonicity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DivergenceWitness {
    pub u1: RVec,
    pub u2: RVec,
    pub distance: Rat,
    pub quotient: Rat,
    /// Graph pair realizing the negative pairing, when the infimum is
    /// attained (it always is for bounded value sets).
    pub pair: Option<(GraphPoint, GraphPoint)>,
}

#[derive(Clone, Debug)]
pub struct HypoEvidence {
    pub r_hat: ExtRat,
    pub worst_quotient: ExtRat,
    pub divergence: Option<DivergenceWitness>,
}

/// Default close-pair distance schedule `10⁻¹ … 10⁻⁶`.
pub fn default_close_schedule() -> Vec<Rat> {
    (1..=6).map(|k| ratio(1, 10i64.pow(k))).collect()
}

/// Hypomonotonicity modulus estimate: `r̂ = max(0, −inf quotient)` over the
/// sample pairs augmented with deliberately close axis probes around each
/// sample. A probe at distance ε whose worst-case quotient falls below
/// `−1/(2ε)` declares divergence (`r̂ = +∞`): a semilocally hypomonotone
/// operator has quotients bounded below near every point, while the probe
/// blowup of a box-type counterexample scales exactly like `−1/ε`.
pub fn hypomonotonicity_estimate(
    spec: &OperatorSpec,
    samples: &[GraphPoint],
    schedule: &[Rat],
) -> Result<(ExtRat, HypoEvidence)> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
    }
    let pairwise = pairwise_monotone_test(samples)?;
    let mut worst = pairwise.inf_quotient.clone();
    let mut divergence: Option<DivergenceWitness> = None;

    // Distinct sample base points, in deterministic order.
    let mut bases: Vec<RVec> = Vec::new();
    for s in samples {
        if !bases.contains(&s.u) {
            bases.push(s.u.clone());
        }
    }
    let n = spec.dim();
    'outer: for u1 in &bases {
        let v1 = evaluate(spec, u1)?;
        if v1.is_empty_set() {
            continue;
        }
        for eps in schedule {
            for axis in 0..n {
                for sign in [1i64, -1] {
                    let mut u2 = u1.clone();
                    u2[axis] = &u2[axis] + rat_i(sign) * eps;
                    let v2 = evaluate(spec, &u2)?;
                    if v2.is_empty_set() {
                        continue;
                    }
                    let du = vec_sub(u1, &u2);
                    // Worst pairing over both value sets:
                    // inf⟨v₁−v₂, Δu⟩ = inf⟨v₁,Δu⟩ − sup⟨v₂,Δu⟩.
                    let (lo1, arg1) = v1.support_min_witness(&du)?;
                    let neg_du: RVec = du.iter().map(|x| -x).collect();
                    let (neg_hi2, arg2) = v2.support_min_witness(&neg_du)?;
                    let hi2 = match neg_hi2 {
                        ExtRat::Finite(m) => ExtRat::Finite(-m),
                        ExtRat::MinusInf => ExtRat::PlusInf,
                        ExtRat::PlusInf => ExtRat::MinusInf,
                    };
                    let prod = match (lo1, hi2) {
                        (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a - b),
                        (ExtRat::PlusInf, _) | (_, ExtRat::MinusInf) => ExtRat::PlusInf,
                        _ => ExtRat::MinusInf,
                    };
                    let dsq = eps * eps;
                    let quotient = match &prod {
                        ExtRat::Finite(p) => ExtRat::Finite(p / &dsq),
                        other => other.clone(),
                    };
                    if quotient < worst {
                        worst = quotient.clone();
                    }
                    // Divergence: quotient < −1/(2ε) ⟺ product < −ε/2.
                    let diverges = match &prod {
                        ExtRat::MinusInf => true,
                        ExtRat::Finite(p) => p < &(-eps / rat_i(2)),
                        ExtRat::PlusInf => false,
                    };
                    if diverges {
                        let pair = match (&arg1, &arg2) {
                            (Some(w1), Some(w2)) => Some((
                                GraphPoint {
                                    u: u1.clone(),
                                    v: w1.clone(),
                                    provenance: "close-probe".into(),
                                },
                                GraphPoint {
                                    u: u2.clone(),
                                    v: w2.clone(),
                                    provenance: "close-probe".into(),
                                },
                            )),
                            _ => None,
                        };
                        divergence = Some(DivergenceWitness {
                            u1: u1.clone(),
                            u2: u2.clone(),
                            distance: eps.clone(),
                            quotient: match quotient {
                                ExtRat::Finite(q) => q,
                                _ => -rat_i(1) / (eps * eps),
                            },
                            pair,
                        });
                        break 'outer;
                    }
                }
            }
        }
    }
    let r_hat = if divergence.is_some() {
        ExtRat::PlusInf
    } else {
        match &worst {
            ExtRat::Finite(q) if q.is_negative() => ExtRat::Finite(-q.clone()),
            ExtRat::MinusInf => ExtRat::PlusInf,
            _ => ExtRat::Finite(Rat::zero()),
        }
    };
    Ok((r_hat.clone(), HypoEvidence { r_hat, worst_quotient: worst, divergence }))
}

// ---------------------------------------------------------------------------
// Semilocal windows
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SemilocalWindow {
    pub center: RVec,
    pub radius: Rat,
    pub modulus: Rat,
}

/// Searches the radius schedule (decreasing) for a ball around `center` on
/// which the close-pair quotient stays bounded below; the first radius that
/// works is returned with its modulus estimate.
pub fn semilocal_hypomonotonicity(
    spec: &OperatorSpec,
    center: &[Rat],
    radii: &[Rat],
    density: usize,
    seed: u64,
) -> Result<Option<SemilocalWindow>> {
    if evaluate(spec, center)?.is_empty_set() {
        return Err(Error::NotInDomain);
    }
    for delta in radii {
        let cfg = SampleConfig::new(
            center.iter().map(|c| c - delta).collect(),
            center.iter().map(|c| c + delta).collect(),
            density,
            seed,
            Rat::zero(),
        )?;
        let all = match graph_sample(spec, &cfg) {
            Ok(s) => s,
            Err(Error::EmptySample) => continue,
            Err(e) => return Err(e),
        };
        let delta_sq = delta * delta;
        let local: Vec<GraphPoint> = all
            .into_iter()
            .filter(|p| norm_sq(&vec_sub(&p.u, center)) <= delta_sq)
            .collect();
        if local.len() < 2 {
            continue;
        }
        let schedule: Vec<Rat> = default_close_schedule()
            .into_iter()
            .filter(|eps| eps <= &(delta / rat_i(2)))
            .collect();
        let (r_hat, _) = hypomonotonicity_estimate(spec, &local, &schedule)?;
        match r_hat {
            ExtRat::Finite(r) => {
                return Ok(Some(SemilocalWindow {
                    center: center.to_vec(),
                    radius: delta.clone(),
                    modulus: r,
                }))
            }
            _ => continue,
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// PSD coderivative checks
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct QueryPlan {
    pub points: Vec<GraphPoint>,
    pub directions: Vec<RVec>,
    pub exhaustive_strata: bool,
}

impl QueryPlan {
    /// Canonical directions `±e_i`, the all-ones diagonal, and seeded dyadic
    /// directions up to `count`.
    pub fn directions_for(dim: usize, count: usize, seed: u64) -> Vec<RVec> {
        let mut dirs: Vec<RVec> = Vec::new();
        for i in 0..dim {
            let mut e = zeros(dim);
            e[i] = Rat::one();
            dirs.push(e.clone());
            dirs.push(e.iter().map(|x| -x).collect());
        }
        dirs.push(vec![Rat::one(); dim]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while dirs.len() < count {
            let d: RVec = (0..dim)
                .map(|_| {
                    let t = rng.gen_range(0..=(1u64 << 12)) as i64;
                    ratio(t, 1 << 12) * rat_i(2) - Rat::one()
                })
                .collect();
            if !d.iter().all(|x| x.is_zero()) && !dirs.contains(&d) {
                dirs.push(d);
            }
        }
        dirs.truncate(count.max(2 * dim + 1));
        dirs
    }
}

#[derive(Clone, Debug)]
pub struct PsdWitness {
    pub point: GraphPoint,
    pub direction: RVec,
    pub z: Option<RVec>,
    pub margin: ExtRat,
}

#[derive(Clone, Debug)]
pub struct StratumFailure {
    pub witness_point: RVec,
    pub z: RVec,
    pub w: RVec,
    pub margin: Rat,
}

#[derive(Clone, Debug)]
pub struct PsdReport {
    pub kind: CoderivativeKind,
    pub kappa: Rat,
    pub worst_margin: ExtRat,
    pub witness: Option<PsdWitness>,
    /// True when the strata of a polyhedral graph were exhaustively verified:
    /// the verdict then covers every graph point and every direction.
    pub exact: bool,
    pub holds: bool,
    pub stratum_failure: Option<StratumFailure>,
    /// Queries skipped because no exact value exists for the variant.
    pub skipped_queries: usize,
}

/// Bilinear form of `⟨z,w⟩ − κ‖w‖²` on `(z, ω)`-space with `ω = −w`.
fn psd_form(n: usize, kappa: &Rat) -> RatMat {
    let half = ratio(-1, 2);
    let mut rows = vec![zeros(2 * n); 2 * n];
    for i in 0..n {
        rows[i][n + i] = half.clone();
        rows[n + i][i] = half.clone();
        rows[n + i][n + i] = -kappa.clone();
    }
    RatMat::new(rows)
}

/// Result of the exhaustive stratum sweep, shared between the regular and
/// limiting reports (the strata cover both conditions at once).
#[derive(Clone, Debug)]
pub enum StrataEvidence {
    /// Graph is not polyhedral; no exhaustive certification available.
    NotPolyhedral,
    Verified,
    Failed(StratumFailure),
}

/// Copositivity sweep of `⟨z,w⟩ − κ‖w‖²` over every stratum cone of the
/// compiled graph.
pub fn exhaustive_psd_strata(spec: &OperatorSpec, kappa: &Rat) -> Result<StrataEvidence> {
    let n = spec.dim();
    let pieces = match compile_to_polyhedral(spec) {
        Ok(p) => p,
        Err(Error::NotCompilable(_)) => return Ok(StrataEvidence::NotPolyhedral),
        Err(e) => return Err(e),
    };
    let strata = enumerate_strata(&pieces)?;
    let form = psd_form(n, kappa);
    // Distinct signatures often share a cone; test each cone once. The key
    // is syntactic (per representation), which is enough for deduplication.
    let mut seen: std::collections::BTreeSet<(bool, Vec<RVec>)> =
        std::collections::BTreeSet::new();
    for stratum in &strata {
        let key = match &stratum.cone {
            crate::cone::PolyCone::H { rows, .. } => {
                let mut k: Vec<RVec> = rows.iter().map(|r| crate::rat::canon_dir(r)).collect();
                k.sort();
                (true, k)
            }
            crate::cone::PolyCone::V { rays, lin, .. } => {
                let mut k: Vec<RVec> = rays
                    .iter()
                    .chain(lin.iter())
                    .map(|r| crate::rat::canon_dir(r))
                    .collect();
                k.sort();
                (false, k)
            }
        };
        if !seen.insert(key) {
            continue;
        }
        let rays = stratum.cone.rays_with_lin_pairs()?;
        if rays.is_empty() {
            continue; // zero cone: vacuous
        }
        let m = generator_form(&rays, &form);
        match check_copositive(&m) {
            Copositivity::Copositive => {}
            Copositivity::Not { lambda, value } => {
                let mut x = zeros(2 * n);
                for (l, r) in lambda.iter().zip(&rays) {
                    x = vec_add(&x, &vec_scale(l, r));
                }
                let z = x[..n].to_vec();
                let w: RVec = x[n..].iter().map(|o| -o).collect();
                return Ok(StrataEvidence::Failed(StratumFailure {
                    witness_point: stratum.witness.clone(),
                    z,
                    w,
                    margin: value,
                }));
            }
        }
    }
    Ok(StrataEvidence::Verified)
}

/// Checks `⟨z,w⟩ ≥ κ‖w‖²` for all `z` in the coderivative values of the plan
/// and, when requested and possible, over every stratum of the polyhedral
/// graph (making the verdict a certificate over all of `gph T`).
pub fn psd_coderivative_check(
    spec: &OperatorSpec,
    kind: CoderivativeKind,
    kappa: &Rat,
    plan: &QueryPlan,
) -> Result<PsdReport> {
    let strata = if plan.exhaustive_strata {
        Some(exhaustive_psd_strata(spec, kappa)?)
    } else {
        None
    };
    psd_check_with_strata(spec, kind, kappa, plan, strata.as_ref())
}

/// As `psd_coderivative_check` with a precomputed stratum sweep, so callers
/// running both coderivative kinds pay for the enumeration once.
pub fn psd_check_with_strata(
    spec: &OperatorSpec,
    kind: CoderivativeKind,
    kappa: &Rat,
    plan: &QueryPlan,
    strata: Option<&StrataEvidence>,
) -> Result<PsdReport> {
    let mut worst = ExtRat::PlusInf;
    let mut witness: Option<PsdWitness> = None;
    let mut skipped = 0usize;
    let mut sampled_values_seen = false;
    let n = spec.dim();
    // Points sharing a graph signature share their coderivative kernel, so
    // query one representative per signature class.
    let compiled = compile_to_polyhedral(spec).ok();
    let mut seen_signatures: std::collections::BTreeSet<crate::strata::FaceSignature> =
        std::collections::BTreeSet::new();
    for p in &plan.points {
        if let Some(pieces) = &compiled {
            let mut g = p.u.clone();
            g.extend_from_slice(&p.v);
            let sig = crate::strata::signature_of(pieces, &g);
            if !seen_signatures.insert(sig) {
                continue;
            }
        }
        // The stratum machinery is direction-independent: build the kernel
        // once per point and reuse it for every direction.
        let kernel = match kind {
            CoderivativeKind::Regular => crate::coderivative::regular_kernel(spec, p),
            CoderivativeKind::Limiting => crate::coderivative::limiting_kernel(spec, p),
        };
        match kernel {
            Ok(kernel) => {
                for w in &plan.directions {
                    let value = kernel.value_at(n, w)?;
                    record_margin(&value, p, w, kappa, &mut worst, &mut witness)?;
                }
            }
            Err(Error::UnsupportedVariant(_)) => {
                if kind == CoderivativeKind::Limiting {
                    // Sampled fallback values: usable for margins, never for
                    // exactness.
                    for w in &plan.directions {
                        match limiting_coderivative(spec, p, w) {
                            Ok(cv) => {
                                if matches!(cv.exactness, Exactness::Sampled(_)) {
                                    sampled_values_seen = true;
                                }
                                record_margin(&cv.value, p, w, kappa, &mut worst, &mut witness)?;
                            }
                            Err(Error::UnsupportedVariant(_)) => skipped += 1,
                            Err(e) => return Err(e),
                        }
                    }
                } else {
                    skipped += plan.directions.len();
                }
            }
            Err(e) => return Err(e),
        }
    }

    let (exact, stratum_failure) = match strata {
        Some(StrataEvidence::Verified) => (true, None),
        Some(StrataEvidence::Failed(f)) => (true, Some(f.clone())),
        Some(StrataEvidence::NotPolyhedral) | None => (false, None),
    };
    let exact = exact && !sampled_values_seen;
    let margin_ok = worst >= ExtRat::Finite(-tie_tolerance());
    let holds = margin_ok && stratum_failure.is_none();
    Ok(PsdReport {
        kind,
        kappa: kappa.clone(),
        worst_margin: worst,
        witness,
        exact,
        holds,
        stratum_failure,
        skipped_queries: skipped,
    })
}

fn record_margin(
    value: &ValueSet,
    p: &GraphPoint,
    w: &RVec,
    kappa: &Rat,
    worst: &mut ExtRat,
    witness: &mut Option<PsdWitness>,
) -> Result<()> {
    let (inf, arg) = value.support_min_witness(w)?;
    let margin = match inf {
        ExtRat::Finite(m) => ExtRat::Finite(m - kappa * norm_sq(w)),
        other => other, // empty value: +∞ vacuous; −∞ stays
    };
    if margin < *worst {
        *worst = margin.clone();
        *witness = Some(PsdWitness { point: p.clone(), direction: w.clone(), z: arg, margin });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Domain convexity probe
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum DomainProbe {
    Pass,
    Witness { a: RVec, b: RVec, t: Rat, midpoint: RVec },
}

/// Checks membership of dyadic combinations (depth 4) of every sample pair.
pub fn domain_convexity_probe(spec: &OperatorSpec, points: &[RVec]) -> Result<DomainProbe> {
    if points.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: points.len() });
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            for k in 1..16i64 {
                let t = ratio(k, 16);
                let mid = vec_add(
                    &vec_scale(&(Rat::one() - &t), &points[i]),
                    &vec_scale(&t, &points[j]),
                );
                if evaluate(spec, &mid)?.is_empty_set() {
                    return Ok(DomainProbe::Witness {
                        a: points[i].clone(),
                        b: points[j].clone(),
                        t,
                        midpoint: mid,
                    });
                }
            }
        }
    }
    Ok(DomainProbe::Pass)
}

// ---------------------------------------------------------------------------
// Minty surjectivity / resolvent test
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct MintyReport {
    pub s: Rat,
    pub total: usize,
    pub solved: usize,
    pub coverage: f64,
    /// `y` values whose resolvent is not a singleton.
    pub multivalued: Vec<RVec>,
    pub solutions: Vec<(RVec, RVec)>,
    pub lipschitz_bound: f64,
    pub worst_ratio: f64,
    pub lipschitz_ok: bool,
}

/// Solves `y ∈ T(u) + su` over a grid of right-hand sides and checks the
/// resolvent Lipschitz estimate `‖u₁−u₂‖ ≤ ‖y₁−y₂‖/(s−r̂)`.
pub fn minty_surjectivity_test(
    spec: &OperatorSpec,
    s: &Rat,
    y_grid: &[RVec],
    r_hat: &ExtRat,
) -> Result<MintyReport> {
    let r = match r_hat {
        ExtRat::Finite(r) => r.clone(),
        _ => {
            return Err(Error::ShiftTooSmall { s: rat_to_f64(s), r: f64::INFINITY });
        }
    };
    if s <= &r {
        return Err(Error::ShiftTooSmall { s: rat_to_f64(s), r: rat_to_f64(&r) });
    }
    let n = spec.dim();
    let mut solved = 0usize;
    let mut multivalued: Vec<RVec> = Vec::new();
    let mut solutions: Vec<(RVec, RVec)> = Vec::new();
    match compile_to_polyhedral(spec) {
        Ok(pieces) => {
            for y in y_grid {
                let mut us: Vec<RVec> = Vec::new();
                let mut multi = false;
                for piece in &pieces {
                    // {(u,v) ∈ P : v + su = y} — add n equality rows.
                    let mut eq = piece.eq.clone();
                    let mut f = piece.f.clone();
                    for i in 0..n {
                        let mut row = zeros(2 * n);
                        row[i] = s.clone();
                        row[n + i] = Rat::one();
                        eq.push(row);
                        f.push(y[i].clone());
                    }
                    let sol = crate::polyhedron::HPolyhedron::new(
                        2 * n,
                        piece.a.clone(),
                        piece.b.clone(),
                        eq,
                        f,
                    )?;
                    if sol.is_empty() {
                        continue;
                    }
                    let bounds = sol.coordinate_bounds()?;
                    let mut unique = true;
                    for (lo, hi) in bounds.iter().take(n) {
                        if lo != hi {
                            unique = false;
                        }
                    }
                    if !unique {
                        multi = true;
                        if let Some(pt) = sol.feasible_point() {
                            us.push(pt[..n].to_vec());
                        }
                    } else {
                        let u: RVec = bounds
                            .into_iter()
                            .take(n)
                            .map(|(lo, _)| lo.finite().expect("unique bound is finite").clone())
                            .collect();
                        if !us.contains(&u) {
                            us.push(u);
                        }
                    }
                }
                if us.is_empty() {
                    continue;
                }
                solved += 1;
                if multi || us.len() > 1 {
                    multivalued.push(y.clone());
                } else {
                    solutions.push((y.clone(), us.pop().unwrap()));
                }
            }
        }
        Err(Error::NotCompilable(_)) => {
            if n != 1 {
                return Err(Error::UnsupportedVariant(
                    "Minty solve needs a polyhedral graph or a one-dimensional smooth map".into(),
                ));
            }
            for y in y_grid {
                let roots = solve_scalar_inclusion(spec, s, &y[0])?;
                match roots.len() {
                    0 => {}
                    1 => {
                        solved += 1;
                        solutions.push((y.clone(), vec![roots[0].clone()]));
                    }
                    _ => {
                        solved += 1;
                        multivalued.push(y.clone());
                    }
                }
            }
        }
        Err(e) => return Err(e),
    }

    let bound = 1.0 / rat_to_f64(&(s - &r));
    let mut worst_ratio = 0.0f64;
    for i in 0..solutions.len() {
        for j in (i + 1)..solutions.len() {
            let dy = norm_sq(&vec_sub(&solutions[i].0, &solutions[j].0));
            let du = norm_sq(&vec_sub(&solutions[i].1, &solutions[j].1));
            let dyf = rat_to_f64(&dy).sqrt();
            let duf = rat_to_f64(&du).sqrt();
            if dyf > 0.0 {
                worst_ratio = worst_ratio.max(duf / dyf);
            }
        }
    }
    let lipschitz_ok = worst_ratio <= bound * (1.0 + 1e-9);
    Ok(MintyReport {
        s: s.clone(),
        total: y_grid.len(),
        solved,
        coverage: solved as f64 / y_grid.len().max(1) as f64,
        multivalued,
        solutions,
        lipschitz_bound: bound,
        worst_ratio,
        lipschitz_ok,
    })
}

/// Numeric root isolation for `t(u) + su = y` with `t` a one-dimensional
/// rational map: dense scan plus bisection on sign changes, poles skipped.
fn solve_scalar_inclusion(spec: &OperatorSpec, s: &Rat, y: &Rat) -> Result<Vec<Rat>> {
    let sf = rat_to_f64(s);
    let yf = rat_to_f64(y);
    let g = |uf: f64| -> Option<f64> {
        let u = crate::rat::rat_from_f64(uf)?;
        match evaluate(spec, &[u]) {
            Ok(ValueSet::Points { points, .. }) => Some(rat_to_f64(&points[0][0]) + sf * uf - yf),
            Ok(ValueSet::Empty { .. }) => None,
            _ => None,
        }
    };
    let bound = (yf.abs() + 10.0) / sf.max(1e-6) + 10.0;
    let steps = 8000;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=steps {
        let u = -bound + 2.0 * bound * (k as f64) / (steps as f64);
        let Some(v) = g(u) else {
            prev = None;
            continue;
        };
        if v == 0.0 {
            roots.push(u);
            prev = Some((u, v));
            continue;
        }
        if let Some((pu, pv)) = prev {
            if pv.signum() != v.signum() {
                // Bisection refinement.
                let (mut lo, mut hi, mut flo) = (pu, u, pv);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    match g(mid) {
                        Some(fm) => {
                            if fm == 0.0 {
                                lo = mid;
                                hi = mid;
                                break;
                            }
                            if fm.signum() == flo.signum() {
                                lo = mid;
                                flo = fm;
                            } else {
                                hi = mid;
                            }
                        }
                        None => break,
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        prev = Some((u, v));
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
    Ok(roots
        .into_iter()
        .filter_map(crate::rat::rat_from_f64)
        .collect())
}

// ---------------------------------------------------------------------------
// Segment chaining
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ChainCertificate {
    pub nodes: Vec<(RVec, RVec)>,
    pub link_products: Vec<Rat>,
    pub endpoint_product: Rat,
}

/// Deterministic representative of `T(u)` (the relative-interior point of
/// the first nonempty value polyhedron, or the smallest listed point).
pub fn representative_value(spec: &OperatorSpec, u: &[Rat]) -> Result<RVec> {
    match evaluate(spec, u)? {
        ValueSet::Empty { .. } => Err(Error::NotInDomain),
        ValueSet::Points { mut points, .. } => {
            points.sort();
            Ok(points.remove(0))
        }
        ValueSet::Polyhedra { polys, .. } => polys
            .first()
            .and_then(|p| p.relative_interior_point())
            .ok_or(Error::EmptySet),
    }
}

/// Builds a finite subdivision of `[u₁, u₂]` with each sub-segment inside a
/// monotonicity window supplied per center, picks one value per node and
/// verifies every link pairing plus the endpoint pairing.
pub fn segment_chain_monotonicity(
    spec: &OperatorSpec,
    u1: &[Rat],
    u2: &[Rat],
    mut window_radius: impl FnMut(&[Rat]) -> Result<Option<Rat>>,
) -> Result<ChainCertificate> {
    // Domain probe on a dyadic grid first.
    for k in 0..=64i64 {
        let t = ratio(k, 64);
        let p = vec_add(&vec_scale(&(Rat::one() - &t), u1), &vec_scale(&t, u2));
        if evaluate(spec, &p)?.is_empty_set() {
            return Err(Error::SegmentLeavesDomain { t: rat_to_f64(&t) });
        }
    }
    let seg_len_sq = norm_sq(&vec_sub(u2, u1));
    let mut ts: Vec<Rat> = vec![Rat::zero()];
    let mut t = Rat::zero();
    let mut guard = 0;
    while t < Rat::one() {
        guard += 1;
        if guard > 4096 {
            return Err(Error::WindowNotFound);
        }
        let point = vec_add(&vec_scale(&(Rat::one() - &t), u1), &vec_scale(&t, u2));
        let delta = window_radius(&point)?.ok_or(Error::WindowNotFound)?;
        if !delta.is_positive() {
            return Err(Error::WindowNotFound);
        }
        // Step so the next node stays strictly inside B_δ(point):
        // ‖Δt·(u₂−u₁)‖ ≤ δ/2 ⟺ Δt² ≤ δ²/(4‖u₂−u₁‖²).
        let step = if seg_len_sq.is_zero() {
            Rat::one()
        } else {
            // Rational under-approximation of δ/(2‖u₂−u₁‖).
            let ratio_sq = (&delta * &delta) / (rat_i(4) * &seg_len_sq);
            rational_sqrt_lower(&ratio_sq)
        };
        t = (&t + step.max(ratio(1, 4096))).min(Rat::one());
        ts.push(t.clone());
    }
    let mut nodes: Vec<(RVec, RVec)> = Vec::new();
    for t in &ts {
        let p = vec_add(&vec_scale(&(Rat::one() - t), u1), &vec_scale(t, u2));
        let v = representative_value(spec, &p)?;
        nodes.push((p, v));
    }
    let dir = vec_sub(u2, u1);
    let mut link_products = Vec::new();
    for w in nodes.windows(2) {
        let prod = dot(&vec_sub(&w[1].1, &w[0].1), &dir);
        if prod < -tie_tolerance() {
            return Err(Error::WindowNotFound);
        }
        link_products.push(prod);
    }
    let endpoint_product = dot(
        &vec_sub(&nodes.last().unwrap().1, &nodes[0].1),
        &dir,
    );
    Ok(ChainCertificate { nodes, link_products, endpoint_product })
}

/// Rational lower bound of √x for `x > 0` (a few Newton steps from below).
fn rational_sqrt_lower(x: &Rat) -> Rat {
    if !x.is_positive() {
        return Rat::zero();
    }
    if let Some(s) = crate::rat::rat_sqrt(x) {
        return s;
    }
    // Newton from above converges down to √x; one division keeps it a lower
    // bound: x / upper ≤ √x.
    let mut upper = if x >= &Rat::one() { x.clone() } else { Rat::one() };
    for _ in 0..40 {
        upper = (&upper + x / &upper) / rat_i(2);
    }
    x / upper
}

// ---------------------------------------------------------------------------
// Maximality decision
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Route {
    Global,
    SemilocalConvexDomain,
}

#[derive(Clone, Debug)]
pub enum Verdict {
    MaximalMonotone { route: Route, certified_on_region: bool },
    StronglyMaximalMonotone { kappa: Rat },
    NotMonotone { witness: (GraphPoint, GraphPoint), product: Rat },
    NotHypomonotone { witness: DivergenceWitness },
    Inconclusive { reason: String },
}

#[derive(Clone, Debug)]
pub struct DecisionConfig {
    pub sample: SampleConfig,
    pub radii: Vec<Rat>,
    pub kappa: Option<Rat>,
    pub shift_s: Option<Rat>,
    pub minty_grid: usize,
    pub direction_count: usize,
}

impl DecisionConfig {
    pub fn default_for(spec: &OperatorSpec) -> Self {
        let n = spec.dim();
        DecisionConfig {
            sample: SampleConfig::symmetric(n, 2, 5, 17),
            radii: vec![rat_i(1), ratio(1, 2), ratio(1, 4)],
            kappa: None,
            shift_s: None,
            minty_grid: 21,
            direction_count: 2 * n + 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecisionReport {
    pub verdict: Verdict,
    pub pairwise: PairwiseReport,
    pub hypo: HypoEvidence,
    pub psd_regular: PsdReport,
    pub psd_limiting: PsdReport,
    pub domain_probe: DomainProbe,
    pub windows: Vec<(RVec, Option<SemilocalWindow>)>,
    pub minty: Option<MintyReport>,
}

/// Runs every leg of the analysis and combines them:
/// refutations (pairwise witness, divergence, exact PSD failure) first, then
/// positive certification via exact PSD plus hypomonotonicity evidence.
/// Sampled PSD evidence alone never yields a positive verdict.
pub fn maximality_decision(spec: &OperatorSpec, cfg: &DecisionConfig) -> Result<DecisionReport> {
    let samples = graph_sample(spec, &cfg.sample)?;
    let pairwise = pairwise_monotone_test(&samples)?;
    let (r_hat, hypo) = hypomonotonicity_estimate(spec, &samples, &default_close_schedule())?;

    let plan = QueryPlan {
        points: samples.clone(),
        directions: QueryPlan::directions_for(spec.dim(), cfg.direction_count, cfg.sample.seed),
        exhaustive_strata: true,
    };
    let kappa0 = Rat::zero();
    let strata = exhaustive_psd_strata(spec, &kappa0)?;
    let psd_regular =
        psd_check_with_strata(spec, CoderivativeKind::Regular, &kappa0, &plan, Some(&strata))?;
    let psd_limiting =
        psd_check_with_strata(spec, CoderivativeKind::Limiting, &kappa0, &plan, Some(&strata))?;

    // Window probes at a deterministic subset of sampled domain points.
    let mut probe_points: Vec<RVec> = Vec::new();
    for p in &samples {
        if !probe_points.contains(&p.u) {
            probe_points.push(p.u.clone());
        }
    }
    let stride = (probe_points.len() / 5).max(1);
    let probes: Vec<RVec> = probe_points.iter().step_by(stride).cloned().collect();
    let mut windows = Vec::new();
    for c in &probes {
        let w = semilocal_hypomonotonicity(spec, c, &cfg.radii, 4, cfg.sample.seed)?;
        windows.push((c.clone(), w));
    }
    let domain_probe = domain_convexity_probe(spec, &probe_points)?;

    // Refutations.
    let psd_failed = !psd_regular.holds || !psd_limiting.holds;
    let mut primal_witness: Option<(GraphPoint, GraphPoint, Rat)> = None;
    if let (ExtRat::Finite(p), Some(w)) = (&pairwise.inf_product, &pairwise.witness) {
        if *p < -tie_tolerance() && recheck_witness(spec, w)? {
            primal_witness = Some((w.0.clone(), w.1.clone(), p.clone()));
        }
    }
    if psd_failed && primal_witness.is_none() {
        // Search near the PSD witness for a primal refutation.
        if let Some(pw) = psd_regular
            .witness
            .as_ref()
            .or(psd_limiting.witness.as_ref())
            .or(psd_regular.stratum_failure.as_ref().map(|_| psd_regular.witness.as_ref()).flatten())
        {
            if let Some(found) = local_witness_search(spec, &pw.point.u, cfg.sample.seed)? {
                primal_witness = Some(found);
            }
        } else if let Some(sf) = &psd_regular.stratum_failure {
            let u = sf.witness_point[..spec.dim()].to_vec();
            if let Some(found) = local_witness_search(spec, &u, cfg.sample.seed)? {
                primal_witness = Some(found);
            }
        }
    }

    let verdict = decide(
        spec,
        cfg,
        &pairwise,
        &hypo,
        &r_hat,
        &psd_regular,
        &psd_limiting,
        &windows,
        &domain_probe,
        primal_witness,
    )?;

    // Minty cross-check for positive verdicts (and on request).
    let minty = match (&verdict, &r_hat) {
        (Verdict::MaximalMonotone { .. } | Verdict::StronglyMaximalMonotone { .. }, ExtRat::Finite(r)) => {
            let s = cfg
                .shift_s
                .clone()
                .unwrap_or_else(|| (rat_i(2) * r).max(r + Rat::one()));
            let grid = minty_default_grid(spec.dim(), cfg.minty_grid);
            Some(minty_surjectivity_test(spec, &s, &grid, &r_hat)?)
        }
        _ => None,
    };

    Ok(DecisionReport {
        verdict,
        pairwise,
        hypo,
        psd_regular,
        psd_limiting,
        domain_probe,
        windows,
        minty,
    })
}

pub fn minty_default_grid(dim: usize, count: usize) -> Vec<RVec> {
    let count = count.max(2);
    let mut grid = Vec::with_capacity(count);
    for k in 0..count {
        let t = ratio(-5, 1) + rat_i(10) * ratio(k as i64, (count - 1) as i64);
        let mut y = vec![t.clone(); dim.min(1)];
        for i in 1..dim {
            // Slightly de-axis the higher coordinates for variety.
            y.push(&t + ratio(i as i64, 7));
        }
        grid.push(y);
    }
    grid
}

fn local_witness_search(
    spec: &OperatorSpec,
    around: &[Rat],
    seed: u64,
) -> Result<Option<(GraphPoint, GraphPoint, Rat)>> {
    let n = spec.dim();
    let cfg = SampleConfig::new(
        around.iter().map(|c| c - ratio(1, 2)).collect(),
        around.iter().map(|c| c + ratio(1, 2)).collect(),
        if n == 1 { 7 } else { 4 },
        seed,
        Rat::zero(),
    )?;
    let local = match graph_sample(spec, &cfg) {
        Ok(s) => s,
        Err(Error::EmptySample) => return Ok(None),
        Err(e) => return Err(e),
    };
    if local.len() < 2 {
        return Ok(None);
    }
    let rep = pairwise_monotone_test(&local)?;
    if let (ExtRat::Finite(p), Some(w)) = (&rep.inf_product, &rep.witness) {
        if *p < -tie_tolerance() {
            return Ok(Some((w.0.clone(), w.1.clone(), p.clone())));
        }
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn decide(
    spec: &OperatorSpec,
    cfg: &DecisionConfig,
    _pairwise: &PairwiseReport,
    hypo: &HypoEvidence,
    r_hat: &ExtRat,
    psd_regular: &PsdReport,
    psd_limiting: &PsdReport,
    windows: &[(RVec, Option<SemilocalWindow>)],
    domain_probe: &DomainProbe,
    primal_witness: Option<(GraphPoint, GraphPoint, Rat)>,
) -> Result<Verdict> {
    let psd_pass = psd_regular.holds && psd_limiting.holds;
    // (a)/(b): refutations.
    if let Some((p1, p2, prod)) = primal_witness {
        return Ok(Verdict::NotMonotone { witness: (p1, p2), product: prod });
    }
    if let Some(div) = &hypo.divergence {
        // Divergence plus a concrete violating pair upgrades to NotMonotone.
        if let Some(pair) = &div.pair {
            if recheck_witness(spec, pair)? {
                let prod = dot(&vec_sub(&pair.0.v, &pair.1.v), &vec_sub(&pair.0.u, &pair.1.u));
                return Ok(Verdict::NotMonotone { witness: pair.clone(), product: prod });
            }
        }
        return Ok(Verdict::NotHypomonotone { witness: div.clone() });
    }
    if !psd_pass {
        return Ok(Verdict::Inconclusive {
            reason: "coderivative PSD condition fails but no pairwise witness was found".into(),
        });
    }
    // Positive routes need exact (stratum-exhaustive) PSD evidence, or the
    // region-certified qualifier for smooth maps with full query success.
    let exact_psd = psd_regular.exact && psd_limiting.exact;
    let smooth_region_certified = !exact_psd
        && psd_regular.skipped_queries == 0
        && psd_limiting.skipped_queries == 0
        && compile_to_polyhedral(spec).is_err();
    if !exact_psd && !smooth_region_certified {
        return Ok(Verdict::Inconclusive {
            reason: "PSD evidence is sampled only; positive certification withheld".into(),
        });
    }
    // (e) strong monotonicity at a requested modulus.
    if let Some(kappa) = &cfg.kappa {
        if kappa.is_positive() && matches!(r_hat, ExtRat::Finite(_)) {
            let plan = QueryPlan {
                points: vec![],
                directions: vec![],
                exhaustive_strata: true,
            };
            let strong = psd_coderivative_check(spec, CoderivativeKind::Regular, kappa, &plan)?;
            if strong.holds && strong.exact {
                return Ok(Verdict::StronglyMaximalMonotone { kappa: kappa.clone() });
            }
        }
    }
    // (c) global route.
    if matches!(r_hat, ExtRat::Finite(_)) {
        return Ok(Verdict::MaximalMonotone {
            route: Route::Global,
            certified_on_region: smooth_region_certified,
        });
    }
    // (d) semilocal + convex domain route.
    let all_windows = !windows.is_empty() && windows.iter().all(|(_, w)| w.is_some());
    if all_windows && matches!(domain_probe, DomainProbe::Pass) {
        return Ok(Verdict::MaximalMonotone {
            route: Route::SemilocalConvexDomain,
            certified_on_region: smooth_region_certified,
        });
    }
    let _ = spec;
    Ok(Verdict::Inconclusive {
        reason: if all_windows {
            "semilocal windows exist but the domain convexity probe failed".into()
        } else {
            "no hypomonotonicity bound and no complete semilocal window cover".into()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{abs_subdiff, identity_map, kx_plus_unit_box, neg_reciprocal};

    fn sample_default(spec: &OperatorSpec) -> Vec<GraphPoint> {
        graph_sample(spec, &SampleConfig::symmetric(spec.dim(), 2, 5, 3)).unwrap()
    }

    #[test]
    fn identity_is_monotone_on_samples() {
        let t = identity_map(1);
        let rep = pairwise_monotone_test(&sample_default(&t)).unwrap();
        assert!(rep.monotone_on_samples);
        assert_eq!(rep.inf_quotient, ExtRat::Finite(rat_i(1)));
    }

    #[test]
    fn reciprocal_pairwise_witness() {
        // Pairs (−1, 1) and (1, −1): product ⟨1−(−1), −1−1⟩ = −4.
        let t = neg_reciprocal();
        let pts = vec![
            GraphPoint { u: vec![rat_i(-1)], v: vec![rat_i(1)], provenance: "t".into() },
            GraphPoint { u: vec![rat_i(1)], v: vec![rat_i(-1)], provenance: "t".into() },
        ];
        let rep = pairwise_monotone_test(&pts).unwrap();
        assert_eq!(rep.inf_product, ExtRat::Finite(rat_i(-4)));
        assert!(!rep.monotone_on_samples);
        assert!(recheck_witness(&t, rep.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn box_operator_diverges_at_milli_distance() {
        // κ = 1: the worst close-pair quotient at distance 1e−3 is exactly
        // −(1−κε)/ε = −999.
        let t = kx_plus_unit_box(rat_i(1));
        let samples = sample_default(&t);
        let (r_hat, ev) = hypomonotonicity_estimate(&t, &samples, &[ratio(1, 1000)]).unwrap();
        assert_eq!(r_hat, ExtRat::PlusInf);
        let div = ev.divergence.expect("divergence witness");
        assert_eq!(div.quotient, rat_i(-999));
        assert_eq!(div.distance, ratio(1, 1000));
    }

    #[test]
    fn negative_identity_modulus_one() {
        // T(x) = −x: quotient ≡ −1, r̂ = 1, no divergence.
        let t = OperatorSpec::ShiftDown { base: Box::new(kx_plus_unit_box(rat_i(0))), kappa: rat_i(1) };
        // That subtracted the identity from a box; use the pure map instead:
        let neg = {
            use crate::polynomial::{Poly, RationalFn};
            OperatorSpec::RationalMap {
                map: crate::polynomial::RationalMapFn::new(
                    1,
                    vec![RationalFn::poly(Poly::new(1, vec![(rat_i(-1), vec![1])]).unwrap())],
                )
                .unwrap(),
            }
        };
        let _ = t;
        let samples = sample_default(&neg);
        let (r_hat, ev) = hypomonotonicity_estimate(&neg, &samples, &default_close_schedule()).unwrap();
        assert_eq!(r_hat, ExtRat::Finite(rat_i(1)));
        assert!(ev.divergence.is_none());
        assert_eq!(ev.worst_quotient, ExtRat::Finite(rat_i(-1)));
    }

    #[test]
    fn abs_subdiff_monotone_r_zero() {
        let t = abs_subdiff();
        let samples = sample_default(&t);
        let (r_hat, _) = hypomonotonicity_estimate(&t, &samples, &default_close_schedule()).unwrap();
        assert_eq!(r_hat, ExtRat::Finite(rat_i(0)));
    }

    #[test]
    fn semilocal_window_for_reciprocal() {
        // Around ū = 1 with radius 1/2 the map is smooth increasing: r = 0.
        let t = neg_reciprocal();
        let w = semilocal_hypomonotonicity(&t, &[rat_i(1)], &[ratio(1, 2)], 5, 5)
            .unwrap()
            .expect("window");
        assert_eq!(w.modulus, rat_i(0));
        assert_eq!(w.radius, ratio(1, 2));
        // The box counterexample has no window at 0.
        let b = kx_plus_unit_box(rat_i(1));
        let none = semilocal_hypomonotonicity(&b, &[rat_i(0)], &[ratio(1, 2), ratio(1, 4)], 5, 5)
            .unwrap();
        assert!(none.is_none());
        // Off-domain centers are rejected.
        assert!(matches!(
            semilocal_hypomonotonicity(&t, &[rat_i(0)], &[ratio(1, 2)], 5, 5),
            Err(Error::NotInDomain)
        ));
    }

    #[test]
    fn psd_exact_for_box_and_abs() {
        for (spec, name) in [(kx_plus_unit_box(rat_i(1)), "box"), (abs_subdiff(), "abs")] {
            let samples = sample_default(&spec);
            let plan = QueryPlan {
                points: samples,
                directions: QueryPlan::directions_for(1, 5, 0),
                exhaustive_strata: true,
            };
            let rep =
                psd_coderivative_check(&spec, CoderivativeKind::Regular, &Rat::zero(), &plan)
                    .unwrap();
            assert!(rep.holds, "{name} regular PSD");
            assert!(rep.exact, "{name} exactness");
            assert!(rep.worst_margin >= ExtRat::Finite(rat_i(0)), "{name} margin");
            let rep =
                psd_coderivative_check(&spec, CoderivativeKind::Limiting, &Rat::zero(), &plan)
                    .unwrap();
            assert!(rep.holds && rep.exact, "{name} limiting PSD");
        }
    }

    #[test]
    fn psd_fails_for_negative_map_with_witness() {
        use crate::polynomial::{Poly, RationalFn};
        let neg = OperatorSpec::RationalMap {
            map: crate::polynomial::RationalMapFn::new(
                1,
                vec![RationalFn::poly(Poly::new(1, vec![(rat_i(-1), vec![1])]).unwrap())],
            )
            .unwrap(),
        };
        let samples = sample_default(&neg);
        let plan = QueryPlan {
            points: samples,
            directions: QueryPlan::directions_for(1, 5, 0),
            exhaustive_strata: true,
        };
        let rep =
            psd_coderivative_check(&neg, CoderivativeKind::Regular, &Rat::zero(), &plan).unwrap();
        assert!(!rep.holds);
        let w = rep.witness.unwrap();
        assert!(w.margin < ExtRat::Finite(rat_i(0)));
    }

    #[test]
    fn psd_kappa_threshold_on_diagonal_box() {
        // T(x) = diag(2,4)x + [0,1]²: the κ threshold is exactly λ_min = 2.
        let t = OperatorSpec::AffineBox {
            a: RatMat::new(vec![vec![rat_i(2), rat_i(0)], vec![rat_i(0), rat_i(4)]]),
            b: zeros(2),
            lo: vec![ExtRat::Finite(rat_i(0)), ExtRat::Finite(rat_i(0))],
            hi: vec![ExtRat::Finite(rat_i(1)), ExtRat::Finite(rat_i(1))],
        };
        let plan = QueryPlan { points: vec![], directions: vec![], exhaustive_strata: true };
        let at = |kappa: Rat| {
            psd_coderivative_check(&t, CoderivativeKind::Regular, &kappa, &plan).unwrap()
        };
        assert!(at(rat_i(2)).holds);
        assert!(at(rat_i(0)).holds);
        let over = at(rat_i(2) + ratio(1, 1_000_000));
        assert!(!over.holds);
        let sf = over.stratum_failure.expect("stratum witness");
        assert!(sf.margin.is_negative());
    }

    #[test]
    fn domain_probe_finds_hole() {
        let t = neg_reciprocal();
        match domain_convexity_probe(&t, &[vec![rat_i(-1)], vec![rat_i(1)]]).unwrap() {
            DomainProbe::Witness { midpoint, .. } => assert_eq!(midpoint, vec![rat_i(0)]),
            DomainProbe::Pass => panic!("expected hole at 0"),
        }
        let id = identity_map(1);
        assert!(matches!(
            domain_convexity_probe(&id, &[vec![rat_i(-1)], vec![rat_i(1)]]).unwrap(),
            DomainProbe::Pass
        ));
    }

    #[test]
    fn minty_soft_threshold() {
        // T = ∂|x|, s = 1: full coverage, singleton resolvent, ratio ≤ 1.
        let t = abs_subdiff();
        let grid = minty_default_grid(1, 21);
        let rep = minty_surjectivity_test(&t, &rat_i(1), &grid, &ExtRat::Finite(rat_i(0))).unwrap();
        assert_eq!(rep.solved, 21);
        assert!(rep.multivalued.is_empty());
        assert!(rep.lipschitz_ok);
        // Soft-threshold closed form as oracle.
        for (y, u) in &rep.solutions {
            let yf = rat_to_f64(&y[0]);
            let expected = if yf > 1.0 {
                yf - 1.0
            } else if yf < -1.0 {
                yf + 1.0
            } else {
                0.0
            };
            assert!((rat_to_f64(&u[0]) - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn minty_reciprocal_multivalued() {
        // T(x) = −1/x, s = 1, y = 0: u² = 1 has two roots ±1.
        let t = neg_reciprocal();
        let rep = minty_surjectivity_test(&t, &rat_i(1), &[vec![rat_i(0)]], &ExtRat::Finite(rat_i(0))).unwrap();
        assert_eq!(rep.solved, 1);
        assert_eq!(rep.multivalued.len(), 1);
        // Shift below the modulus is rejected.
        assert!(matches!(
            minty_surjectivity_test(&t, &rat_i(1), &[vec![rat_i(0)]], &ExtRat::PlusInf),
            Err(Error::ShiftTooSmall { .. })
        ));
    }

    #[test]
    fn segment_chain_through_origin() {
        let t = abs_subdiff();
        let cert = segment_chain_monotonicity(
            &t,
            &[rat_i(-1)],
            &[rat_i(1)],
            |_| Ok(Some(ratio(1, 2))),
        )
        .unwrap();
        assert!(cert.nodes.len() >= 3);
        assert!(cert.link_products.iter().all(|p| !p.is_negative()));
        assert!(!cert.endpoint_product.is_negative());
        // Reciprocal leaves the domain at the midpoint.
        let r = neg_reciprocal();
        assert!(matches!(
            segment_chain_monotonicity(&r, &[rat_i(-1)], &[rat_i(1)], |_| Ok(Some(rat_i(1)))),
            Err(Error::SegmentLeavesDomain { .. })
        ));
    }

    #[test]
    fn decision_abs_is_maximal_monotone() {
        let t = abs_subdiff();
        let rep = maximality_decision(&t, &DecisionConfig::default_for(&t)).unwrap();
        match &rep.verdict {
            Verdict::MaximalMonotone { route, certified_on_region } => {
                assert_eq!(*route, Route::Global);
                assert!(!certified_on_region);
            }
            other => panic!("expected MaximalMonotone, got {other:?}"),
        }
        let minty = rep.minty.expect("cross-check ran");
        assert_eq!(minty.coverage, 1.0);
        assert!(rep.psd_regular.exact);
    }

    #[test]
    fn decision_box_is_not_monotone() {
        let t = kx_plus_unit_box(rat_i(1));
        let rep = maximality_decision(&t, &DecisionConfig::default_for(&t)).unwrap();
        match &rep.verdict {
            Verdict::NotMonotone { product, .. } => assert!(product.is_negative()),
            other => panic!("expected NotMonotone, got {other:?}"),
        }
        // PSD held even though monotonicity fails.
        assert!(rep.psd_regular.holds && rep.psd_limiting.holds);
        assert!(rep.hypo.divergence.is_some());
    }

    #[test]
    fn decision_reciprocal_never_maximal() {
        let t = neg_reciprocal();
        let rep = maximality_decision(&t, &DecisionConfig::default_for(&t)).unwrap();
        assert!(matches!(
            rep.verdict,
            Verdict::NotMonotone { .. } | Verdict::Inconclusive { .. }
        ));
        assert!(matches!(rep.domain_probe, DomainProbe::Witness { .. }));
    }

    #[test]
    fn decision_identity_certified_on_region() {
        let t = identity_map(1);
        let rep = maximality_decision(&t, &DecisionConfig::default_for(&t)).unwrap();
        match &rep.verdict {
            Verdict::MaximalMonotone { certified_on_region, .. } => {
                assert!(certified_on_region);
            }
            other => panic!("expected MaximalMonotone, got {other:?}"),
        }
    }

    #[test]
    fn shift_covariance_of_quotients() {
        // Pairwise quotient of T − κI equals quotient of T minus κ, exactly.
        let t = abs_subdiff();
        let shifted = OperatorSpec::ShiftDown { base: Box::new(abs_subdiff()), kappa: ratio(3, 2) };
        let samples = sample_default(&t);
        let moved: Vec<GraphPoint> = samples
            .iter()
            .map(|p| GraphPoint {
                u: p.u.clone(),
                v: vec_sub(&p.v, &vec_scale(&ratio(3, 2), &p.u)),
                provenance: p.provenance.clone(),
            })
            .collect();
        for m in &moved {
            assert!(evaluate(&shifted, &m.u).unwrap().contains(&m.v));
        }
        let rep_t = pairwise_monotone_test(&samples).unwrap();
        let rep_s = pairwise_monotone_test(&moved).unwrap();
        match (&rep_t.inf_quotient, &rep_s.inf_quotient) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => {
                assert_eq!(b, &(a - ratio(3, 2)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
