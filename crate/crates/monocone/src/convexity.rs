//! Convexity and strong convexity of max-quad functions via second-order
//! subdifferentials.
//!
//! The check runs the PSD coderivative machinery on `∂f`: convexity is
//! certified exactly when every stratum of the polyhedral graph of `∂f`
//! passes the copositivity test, refuted with a second-order witness
//! `⟨z,w⟩ < 0` (confirmed where possible by a primal midpoint violation),
//! and left inconclusive when only sampled evidence exists. Strong convexity
//! runs two independent routes — the `κ‖w‖²` threshold and plain convexity
//! of the shifted function — and insists they agree.

use crate::coderivative::CoderivativeKind;
use crate::error::{Error, Result};
use crate::maxquad::{MaxQuadFunction, QuadPiece, ShiftedFunction};
use crate::monotonicity::{exhaustive_psd_strata, psd_check_with_strata, PsdReport, QueryPlan};
use crate::operator::{graph_sample, OperatorSpec, SampleConfig, ValueSet};
use crate::rat::{
    norm_sq, rat_i, ratio, vec_add, vec_scale, vec_sub, RVec, Rat, RatMat,
};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `∂f(x)` with an explicit activity tolerance: the convex hull of the
/// gradients of all pieces within `tol` of the maximum.
pub fn subdifferential(f: &MaxQuadFunction, x: &[Rat], tol: &Rat) -> Result<ValueSet> {
    let grads = f.active_gradients(x, tol);
    if grads.len() == 1 {
        Ok(ValueSet::Points { dim: f.dim, points: grads })
    } else {
        let hull = crate::operator::convex_hull_hform(f.dim, &grads)?;
        Ok(ValueSet::Polyhedra { dim: f.dim, polys: vec![hull] })
    }
}

#[derive(Clone, Debug)]
pub struct SecondOrderWitness {
    pub u: RVec,
    pub v: RVec,
    pub w: RVec,
    pub z: RVec,
    /// `⟨z,w⟩ − κ‖w‖²` (negative).
    pub margin: Rat,
}

#[derive(Clone, Debug)]
pub struct PrimalWitness {
    pub x: RVec,
    pub y: RVec,
    pub lambda: Rat,
    pub margin: Rat,
}

#[derive(Clone, Debug)]
pub enum ConvexityVerdict {
    Convex,
    StronglyConvex { kappa: Rat },
    NotConvex { second_order: Option<SecondOrderWitness>, primal: Option<PrimalWitness> },
    Inconclusive { reason: String },
}

#[derive(Clone, Debug)]
pub struct ConvexityReport {
    pub verdict: ConvexityVerdict,
    pub exact: bool,
    pub psd_combined: PsdReport,
    pub psd_limiting: PsdReport,
}

#[derive(Clone, Debug)]
pub struct ConvexityConfig {
    pub sample: SampleConfig,
    pub direction_count: usize,
    pub primal_search_triples: usize,
}

impl ConvexityConfig {
    pub fn default_for(f: &MaxQuadFunction) -> Self {
        ConvexityConfig {
            sample: SampleConfig::symmetric(f.dim, 2, 5, 23),
            direction_count: 2 * f.dim + 3,
            primal_search_triples: 4000,
        }
    }
}

/// Second-order convexity check at threshold `κ`: PSD of both second-order
/// constructions on `gph ∂f`, exhaustive over strata whenever the graph
/// compiles.
pub fn convexity_check_second_order(
    f: &MaxQuadFunction,
    kappa: &Rat,
    cfg: &ConvexityConfig,
) -> Result<ConvexityReport> {
    let spec = OperatorSpec::MaxQuadSubdiff { f: f.clone() };
    let points = graph_sample(&spec, &cfg.sample)?;
    let plan = QueryPlan {
        points,
        directions: QueryPlan::directions_for(f.dim, cfg.direction_count, cfg.sample.seed),
        exhaustive_strata: true,
    };
    let strata = exhaustive_psd_strata(&spec, kappa)?;
    let psd_combined =
        psd_check_with_strata(&spec, CoderivativeKind::Regular, kappa, &plan, Some(&strata))?;
    let psd_limiting =
        psd_check_with_strata(&spec, CoderivativeKind::Limiting, kappa, &plan, Some(&strata))?;
    let exact = psd_combined.exact && psd_limiting.exact;
    let holds = psd_combined.holds && psd_limiting.holds;

    let verdict = if holds {
        if exact {
            if kappa.is_positive() {
                ConvexityVerdict::StronglyConvex { kappa: kappa.clone() }
            } else {
                ConvexityVerdict::Convex
            }
        } else {
            ConvexityVerdict::Inconclusive {
                reason: "second-order evidence is sampled only; positive verdict withheld".into(),
            }
        }
    } else {
        // Build a second-order witness from the stratum failure (exact) or
        // the worst query margin.
        let second_order = stratum_witness(f, &psd_combined, &psd_limiting, kappa);
        let near = second_order.as_ref().map(|w| w.u.clone()).unwrap_or_else(|| vec![Rat::zero(); f.dim]);
        let primal = primal_search_near(f, kappa, &near, cfg.primal_search_triples, cfg.sample.seed);
        if second_order.is_some() && exact {
            ConvexityVerdict::NotConvex { second_order, primal }
        } else if primal.is_some() {
            ConvexityVerdict::NotConvex { second_order, primal }
        } else if second_order.is_some() {
            // Non-exhaustive but the witness value itself is exact.
            ConvexityVerdict::NotConvex { second_order, primal }
        } else {
            ConvexityVerdict::Inconclusive {
                reason: "PSD check failed without an extractable witness".into(),
            }
        }
    };
    Ok(ConvexityReport { verdict, exact, psd_combined, psd_limiting })
}

fn stratum_witness(
    f: &MaxQuadFunction,
    a: &PsdReport,
    b: &PsdReport,
    kappa: &Rat,
) -> Option<SecondOrderWitness> {
    let n = f.dim;
    for rep in [a, b] {
        if let Some(sf) = &rep.stratum_failure {
            return Some(SecondOrderWitness {
                u: sf.witness_point[..n].to_vec(),
                v: sf.witness_point[n..].to_vec(),
                w: sf.w.clone(),
                z: sf.z.clone(),
                margin: sf.margin.clone(),
            });
        }
    }
    for rep in [a, b] {
        if let Some(w) = &rep.witness {
            if let (crate::rat::ExtRat::Finite(m), Some(z)) = (&w.margin, &w.z) {
                if m < &-crate::monotonicity::tie_tolerance() {
                    return Some(SecondOrderWitness {
                        u: w.point.u.clone(),
                        v: w.point.v.clone(),
                        w: w.direction.clone(),
                        z: z.clone(),
                        margin: m.clone(),
                    });
                }
            }
        }
    }
    let _ = kappa;
    None
}

/// Seeded search for a midpoint-inequality violation near a base point.
fn primal_search_near(
    f: &MaxQuadFunction,
    kappa: &Rat,
    around: &[Rat],
    triples: usize,
    seed: u64,
) -> Option<PrimalWitness> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let tol = ratio(1, 10_000_000_000);
    let mut draw = |scale: i64| -> Rat {
        let k = rng.gen_range(0..=(1u64 << 16)) as i64;
        (ratio(k, 1 << 16) * rat_i(2) - Rat::one()) * rat_i(scale)
    };
    for attempt in 0..triples {
        // Early attempts stay close to the witness, later ones roam.
        let scale = if attempt < triples / 2 { 1 } else { 4 };
        let x: RVec = around.iter().map(|c| c + draw(scale)).collect();
        let y: RVec = around.iter().map(|c| c + draw(scale)).collect();
        let lam = {
            let k = draw(1);
            (k + Rat::one()) / rat_i(2) // dyadic in [0, 1]
        };
        let mid = vec_add(&vec_scale(&lam, &x), &vec_scale(&(Rat::one() - &lam), &y));
        let lhs = f.eval(&mid);
        let rhs = &lam * f.eval(&x) + (Rat::one() - &lam) * f.eval(&y)
            - kappa / rat_i(2) * &lam * (Rat::one() - &lam) * norm_sq(&vec_sub(&x, &y));
        if lhs > &rhs + &tol {
            return Some(PrimalWitness { x, y, lambda: lam, margin: lhs - rhs });
        }
    }
    None
}

/// Outcome of the dual-route strong-convexity check.
#[derive(Clone, Debug)]
pub struct StrongConvexityReport {
    pub kappa: Rat,
    pub holds: bool,
    pub verdict: ConvexityVerdict,
    pub threshold_route: ConvexityReport,
    pub shifted_route: ConvexityReport,
}

/// Strong convexity with modulus `κ`: the direct `⟨z,w⟩ ≥ κ‖w‖²` threshold
/// and convexity of `g = f − (κ/2)‖·‖²` must agree; disagreement is an
/// engine bug surfaced as `RoutesDisagree`.
pub fn strong_convexity_check(
    f: &MaxQuadFunction,
    kappa: &Rat,
    cfg: &ConvexityConfig,
) -> Result<StrongConvexityReport> {
    if kappa.is_negative() {
        return Err(Error::Invalid("strong convexity modulus must be ≥ 0".into()));
    }
    let threshold_route = convexity_check_second_order(f, kappa, cfg)?;
    let shifted = ShiftedFunction::new(f.clone(), kappa.clone())?.as_maxquad();
    let shifted_route = convexity_check_second_order(&shifted, &Rat::zero(), cfg)?;
    let pass1 = matches!(
        threshold_route.verdict,
        ConvexityVerdict::Convex | ConvexityVerdict::StronglyConvex { .. }
    );
    let pass2 = matches!(
        shifted_route.verdict,
        ConvexityVerdict::Convex | ConvexityVerdict::StronglyConvex { .. }
    );
    if pass1 != pass2 {
        return Err(Error::RoutesDisagree(format!(
            "threshold route {:?} vs shifted route {:?} at κ = {}",
            threshold_route.verdict, shifted_route.verdict, kappa
        )));
    }
    let verdict = if pass1 {
        if kappa.is_positive() {
            ConvexityVerdict::StronglyConvex { kappa: kappa.clone() }
        } else {
            ConvexityVerdict::Convex
        }
    } else {
        match &shifted_route.verdict {
            ConvexityVerdict::NotConvex { second_order, primal } => ConvexityVerdict::NotConvex {
                second_order: second_order.clone(),
                primal: primal.clone(),
            },
            other => other.clone(),
        }
    };
    Ok(StrongConvexityReport {
        kappa: kappa.clone(),
        holds: pass1,
        verdict,
        threshold_route,
        shifted_route,
    })
}

/// Largest modulus on the grid passing the dual-route strong check.
pub fn strong_modulus_estimate(
    f: &MaxQuadFunction,
    kappa_grid: &[Rat],
    cfg: &ConvexityConfig,
) -> Result<Option<Rat>> {
    let mut best: Option<Rat> = None;
    for kappa in kappa_grid {
        let rep = strong_convexity_check(f, kappa, cfg)?;
        if rep.holds && best.as_ref().is_none_or(|b| kappa > b) {
            best = Some(kappa.clone());
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Function catalog
// ---------------------------------------------------------------------------

/// Twenty max-quad functions (ten convex, ten not) in dimensions one and
/// two, each with rational envelope breakpoints so the exact path applies.
pub fn convexity_catalog() -> Vec<(String, MaxQuadFunction, bool)> {
    let d1 = |pieces: Vec<(i64, i64, i64)>| {
        MaxQuadFunction::one_dim(
            pieces.into_iter().map(|(q, c, d)| (rat_i(q), rat_i(c), rat_i(d))).collect(),
        )
        .expect("valid catalog entry")
    };
    let m2 = |rows: Vec<Vec<i64>>| RatMat::new(
        rows.into_iter().map(|r| r.into_iter().map(rat_i).collect()).collect(),
    );
    let d2 = |pieces: Vec<(Vec<Vec<i64>>, Vec<i64>, i64)>| {
        MaxQuadFunction::new(
            2,
            pieces
                .into_iter()
                .map(|(q, c, d)| QuadPiece {
                    q: m2(q),
                    c: c.into_iter().map(rat_i).collect(),
                    d: rat_i(d),
                })
                .collect(),
        )
        .expect("valid catalog entry")
    };
    let mut cat: Vec<(String, MaxQuadFunction, bool)> = Vec::new();
    let mut add = |name: &str, f: MaxQuadFunction, convex: bool| {
        cat.push((name.to_string(), f, convex));
    };
    // Convex.
    add("abs", d1(vec![(0, 1, 0), (0, -1, 0)]), true);
    add("square", d1(vec![(2, 0, 0)]), true);
    add("hinge-square", d1(vec![(2, 0, -1), (0, 0, 0)]), true);
    add("huber-like", {
        let half = ratio(1, 2);
        MaxQuadFunction::one_dim(vec![
            (Rat::zero(), Rat::one(), -half.clone()),
            (Rat::zero(), -Rat::one(), -half),
            (Rat::one(), Rat::zero(), Rat::zero()),
        ])
        .expect("valid")
    }, true);
    add("max-affine", d1(vec![(0, 2, 1), (0, -1, 0), (0, 1, -2)]), true);
    add("diag-2-4", d2(vec![(vec![vec![2, 0], vec![0, 4]], vec![0, 0], 0)]), true);
    add(
        "normsq-plus-abs",
        d2(vec![
            (vec![vec![1, 0], vec![0, 1]], vec![1, 0], 0),
            (vec![vec![1, 0], vec![0, 1]], vec![-1, 0], 0),
        ]),
        true,
    );
    add(
        "pd-cross-hinge",
        d2(vec![
            (vec![vec![2, 1], vec![1, 2]], vec![1, 1], 0),
            (vec![vec![2, 1], vec![1, 2]], vec![0, 0], 0),
        ]),
        true,
    );
    add(
        "max-linear-2d",
        d2(vec![
            (vec![vec![0, 0], vec![0, 0]], vec![1, 0], 0),
            (vec![vec![0, 0], vec![0, 0]], vec![0, 1], 0),
            (vec![vec![0, 0], vec![0, 0]], vec![0, 0], 0),
        ]),
        true,
    );
    add("tangent-pair", d1(vec![(2, 0, 0), (0, 2, -1)]), true);
    // Nonconvex.
    add("neg-square", d1(vec![(-2, 0, 0)]), false);
    add("concave-mid", d1(vec![(-2, 0, 0), (0, 1, -2)]), false);
    add("w-shape", d1(vec![(-2, 2, -1), (-2, -2, -1)]), false);
    add("saddle", d2(vec![(vec![vec![2, 0], vec![0, -1]], vec![0, 0], 0)]), false);
    add("neg-normsq", d2(vec![(vec![vec![-1, 0], vec![0, -1]], vec![0, 0], 0)]), false);
    add(
        "abs-minus-normsq",
        d2(vec![
            (vec![vec![-1, 0], vec![0, -1]], vec![1, 0], 0),
            (vec![vec![-1, 0], vec![0, -1]], vec![-1, 0], 0),
        ]),
        false,
    );
    add("concave-channel", d1(vec![(-4, 0, 0), (2, 0, -3)]), false);
    add(
        "cross-term-abs",
        d2(vec![
            (vec![vec![0, 1], vec![1, 0]], vec![1, 0], 0),
            (vec![vec![0, 1], vec![1, 0]], vec![-1, 0], 0),
        ]),
        false,
    );
    add("hump", d1(vec![(-2, 2, 0), (-2, -2, 0)]), false);
    add("steep-concave", d1(vec![(-3, 0, 0)]), false);
    cat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxquad::{abs_function, convexity_oracle_sampling, OracleOutcome};
    use crate::rat::{dot, rat_to_f64};

    #[test]
    fn subdifferential_values() {
        let f = abs_function();
        let v = subdifferential(&f, &[rat_i(0)], &Rat::zero()).unwrap();
        assert!(v.contains(&[rat_i(-1)]));
        assert!(v.contains(&[rat_i(1)]));
        assert!(v.contains(&[ratio(1, 3)]));
        assert!(!v.contains(&[rat_i(2)]));
        // Tangency point: both pieces active, single gradient.
        let g = MaxQuadFunction::one_dim(vec![
            (rat_i(2), rat_i(0), rat_i(0)),
            (rat_i(0), rat_i(2), rat_i(-1)),
        ])
        .unwrap();
        match subdifferential(&g, &[rat_i(1)], &Rat::zero()).unwrap() {
            ValueSet::Points { points, .. } => assert_eq!(points, vec![vec![rat_i(2)]]),
            other => panic!("expected singleton, got {other:?}"),
        }
        // Single smooth piece.
        match subdifferential(&g, &[rat_i(3)], &Rat::zero()).unwrap() {
            ValueSet::Points { points, .. } => assert_eq!(points, vec![vec![rat_i(6)]]),
            other => panic!("expected singleton, got {other:?}"),
        }
    }

    #[test]
    fn abs_is_convex_exactly() {
        let f = abs_function();
        let rep = convexity_check_second_order(&f, &Rat::zero(), &ConvexityConfig::default_for(&f))
            .unwrap();
        assert!(matches!(rep.verdict, ConvexityVerdict::Convex));
        assert!(rep.exact);
    }

    #[test]
    fn neg_square_witnessed_nonconvex() {
        let f = MaxQuadFunction::one_dim(vec![(rat_i(-2), rat_i(0), rat_i(0))]).unwrap();
        let rep = convexity_check_second_order(&f, &Rat::zero(), &ConvexityConfig::default_for(&f))
            .unwrap();
        match &rep.verdict {
            ConvexityVerdict::NotConvex { second_order, primal } => {
                let w = second_order.as_ref().expect("second-order witness");
                assert!(dot(&w.z, &w.w).is_negative());
                let p = primal.as_ref().expect("primal witness");
                assert!(p.margin.is_positive());
            }
            other => panic!("expected NotConvex, got {other:?}"),
        }
    }

    #[test]
    fn strong_convexity_routes_agree() {
        // f = x²: strongly convex with modulus exactly 2.
        let f = MaxQuadFunction::one_dim(vec![(rat_i(2), rat_i(0), rat_i(0))]).unwrap();
        let cfg = ConvexityConfig::default_for(&f);
        let pass = strong_convexity_check(&f, &rat_i(2), &cfg).unwrap();
        assert!(pass.holds);
        let fail = strong_convexity_check(&f, &rat_i(3), &cfg).unwrap();
        assert!(!fail.holds);
        // |x| fails every κ > 0 but is convex at κ = 0.
        let a = abs_function();
        let cfg_a = ConvexityConfig::default_for(&a);
        assert!(strong_convexity_check(&a, &Rat::zero(), &cfg_a).unwrap().holds);
        assert!(!strong_convexity_check(&a, &ratio(1, 2), &cfg_a).unwrap().holds);
    }

    #[test]
    fn modulus_estimate_on_diag() {
        let f = MaxQuadFunction::new(
            2,
            vec![QuadPiece {
                q: RatMat::new(vec![vec![rat_i(2), rat_i(0)], vec![rat_i(0), rat_i(4)]]),
                c: vec![rat_i(0), rat_i(0)],
                d: rat_i(0),
            }],
        )
        .unwrap();
        let grid: Vec<Rat> = (0..=8).map(|k| ratio(k, 2)).collect();
        let cfg = ConvexityConfig::default_for(&f);
        let best = strong_modulus_estimate(&f, &grid, &cfg).unwrap().expect("some κ passes");
        assert_eq!(best, rat_i(2));
    }

    #[test]
    fn catalog_is_balanced_and_agrees_with_oracle_spotcheck() {
        let cat = convexity_catalog();
        assert_eq!(cat.len(), 20);
        assert_eq!(cat.iter().filter(|(_, _, c)| *c).count(), 10);
        // Spot-check three entries against the sampling oracle (the full
        // 20-function sweep lives in the acceptance suite).
        for (name, f, expect) in cat.iter().filter(|(n, _, _)| {
            ["hinge-square", "w-shape", "cross-term-abs"].contains(&n.as_str())
        }) {
            let oracle = convexity_oracle_sampling(f, &Rat::zero(), 400, 3).unwrap();
            match (expect, &oracle) {
                (true, OracleOutcome::Pass) => {}
                (false, OracleOutcome::Violation { .. }) => {}
                other => panic!("{name}: oracle disagrees: {other:?}"),
            }
        }
    }

    #[test]
    fn c2_reduction_matches_eigen_oracle() {
        // Single-piece functions: Convex ⟺ Q ⪰ 0 via the eigenvalue oracle.
        let entries: Vec<(Vec<Vec<i64>>, bool)> = vec![
            (vec![vec![2, 1], vec![1, 2]], true),
            (vec![vec![1, 2], vec![2, 1]], false),
            (vec![vec![0, 0], vec![0, 0]], true),
            (vec![vec![-1, 0], vec![0, 2]], false),
        ];
        for (qrows, expect) in entries {
            let q = RatMat::new(
                qrows.iter().map(|r| r.iter().map(|&x| rat_i(x)).collect()).collect(),
            );
            let f = MaxQuadFunction::new(
                2,
                vec![QuadPiece { q: q.clone(), c: vec![rat_i(0), rat_i(0)], d: rat_i(0) }],
            )
            .unwrap();
            let rep =
                convexity_check_second_order(&f, &Rat::zero(), &ConvexityConfig::default_for(&f))
                    .unwrap();
            let got = matches!(rep.verdict, ConvexityVerdict::Convex);
            // 2×2 eigenvalue oracle: λ_min = (tr − √(tr² − 4det))/2.
            let tr = rat_to_f64(&q.rows[0][0]) + rat_to_f64(&q.rows[1][1]);
            let det = rat_to_f64(&q.rows[0][0]) * rat_to_f64(&q.rows[1][1])
                - rat_to_f64(&q.rows[0][1]) * rat_to_f64(&q.rows[1][0]);
            let lam_min = (tr - (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0;
            assert_eq!(got, lam_min >= -1e-10, "Q = {qrows:?}");
            assert_eq!(got, expect);
        }
    }
}
