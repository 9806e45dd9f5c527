//! Built-in fixture catalog: named operators and functions with expected
//! analysis outcomes, used by `fixtures list|run|export` and mirrored as
//! JSON files under `fixtures/`.

use monocone::convexity::{convexity_check_second_order, ConvexityConfig, ConvexityVerdict};
use monocone::error::Result;
use monocone::maxquad::MaxQuadFunction;
use monocone::monotonicity::{maximality_decision, DecisionConfig, Verdict};
use monocone::operator::{abs_subdiff, identity_map, kx_plus_unit_box, neg_reciprocal, OperatorSpec};
use monocone::rat::{rat_i, zeros, ExtRat, Rat, RatMat};
use num_traits::Zero;

pub enum FixturePayload {
    Operator(OperatorSpec),
    Function(MaxQuadFunction),
}

pub struct Fixture {
    pub name: &'static str,
    pub payload: FixturePayload,
    /// Expected verdict label from the matching analysis.
    pub expected: &'static str,
    pub description: &'static str,
}

fn neg_identity() -> OperatorSpec {
    use monocone::polynomial::{Poly, RationalFn, RationalMapFn};
    OperatorSpec::RationalMap {
        map: RationalMapFn::new(
            1,
            vec![RationalFn::poly(Poly::new(1, vec![(rat_i(-1), vec![1])]).expect("valid"))],
        )
        .expect("valid"),
    }
}

fn diag24_affine_box() -> OperatorSpec {
    OperatorSpec::AffineBox {
        a: RatMat::new(vec![vec![rat_i(2), rat_i(0)], vec![rat_i(0), rat_i(4)]]),
        b: zeros(2),
        lo: vec![ExtRat::Finite(rat_i(0)), ExtRat::Finite(rat_i(0))],
        hi: vec![ExtRat::Finite(rat_i(1)), ExtRat::Finite(rat_i(1))],
    }
}

/// `∂f` for `f = ½xᵀdiag(2,4)x + |x₁|`: strongly maximal monotone with
/// modulus `λ_min = 2`.
pub fn diag24_l1_subdiff() -> OperatorSpec {
    use monocone::maxquad::QuadPiece;
    let q = RatMat::new(vec![vec![rat_i(2), rat_i(0)], vec![rat_i(0), rat_i(4)]]);
    let f = MaxQuadFunction::new(
        2,
        vec![
            QuadPiece { q: q.clone(), c: vec![rat_i(1), rat_i(0)], d: Rat::zero() },
            QuadPiece { q, c: vec![rat_i(-1), rat_i(0)], d: Rat::zero() },
        ],
    )
    .expect("valid");
    OperatorSpec::MaxQuadSubdiff { f }
}

fn psd_linear() -> OperatorSpec {
    OperatorSpec::AffineBox {
        a: RatMat::new(vec![vec![rat_i(2), rat_i(1)], vec![rat_i(1), rat_i(2)]]),
        b: zeros(2),
        lo: vec![ExtRat::Finite(Rat::zero()), ExtRat::Finite(Rat::zero())],
        hi: vec![ExtRat::Finite(Rat::zero()), ExtRat::Finite(Rat::zero())],
    }
}

pub fn catalog() -> Vec<Fixture> {
    let mut out = vec![
        Fixture {
            name: "kx-box",
            payload: FixturePayload::Operator(kx_plus_unit_box(rat_i(1))),
            expected: "NotMonotone",
            description: "x + [0,1]: the PSD conditions hold on every stratum, yet close \
                          pairs violate monotonicity (hypomonotonicity fails)",
        },
        Fixture {
            name: "kx-box-0",
            payload: FixturePayload::Operator(kx_plus_unit_box(rat_i(0))),
            expected: "NotMonotone",
            description: "constant box [0,1]: same failure mode with κ = 0",
        },
        Fixture {
            name: "kx-box-2",
            payload: FixturePayload::Operator(kx_plus_unit_box(rat_i(2))),
            expected: "NotMonotone",
            description: "2x + [0,1]",
        },
        Fixture {
            name: "neg-recip",
            payload: FixturePayload::Operator(neg_reciprocal()),
            expected: "NotMonotone",
            description: "-1/x on ℝ∖{0}: semilocally monotone with nonconvex domain; \
                          globally refuted by the pair (−1,1),(1,−1)",
        },
        Fixture {
            name: "absval-subdiff",
            payload: FixturePayload::Operator(abs_subdiff()),
            expected: "MaximalMonotone",
            description: "∂|x|: exact stratum-exhaustive PSD plus zero modulus",
        },
        Fixture {
            name: "identity",
            payload: FixturePayload::Operator(identity_map(1)),
            expected: "MaximalMonotone",
            description: "identity map (smooth route, certified on the sampled region)",
        },
        Fixture {
            name: "neg-identity",
            payload: FixturePayload::Operator(neg_identity()),
            expected: "NotMonotone",
            description: "-x: PSD fails with a definite witness",
        },
        Fixture {
            name: "diag24-affine-box",
            payload: FixturePayload::Operator(diag24_affine_box()),
            expected: "NotMonotone",
            description: "diag(2,4)x + [0,1]²: positive-definite affine part cannot rescue \
                          the box term (PSD holds, close pairs diverge)",
        },
        Fixture {
            name: "diag24-l1-subdiff",
            payload: FixturePayload::Operator(diag24_l1_subdiff()),
            expected: "MaximalMonotone",
            description: "∂(½xᵀdiag(2,4)x + |x₁|): strongly maximal monotone, modulus 2",
        },
        Fixture {
            name: "psd-linear",
            payload: FixturePayload::Operator(psd_linear()),
            expected: "MaximalMonotone",
            description: "x ↦ [[2,1],[1,2]]x as a degenerate affine-box operator",
        },
    ];
    for (name, f, convex) in monocone::convexity::convexity_catalog() {
        let expected = if convex { "Convex" } else { "NotConvex" };
        let leaked: &'static str = Box::leak(name.into_boxed_str());
        out.push(Fixture {
            name: leaked,
            payload: FixturePayload::Function(f),
            expected,
            description: "convexity catalog entry",
        });
    }
    out
}

pub struct FixtureOutcome {
    pub name: String,
    pub expected: String,
    pub got: String,
    pub pass: bool,
}

pub fn run_fixture(fx: &Fixture) -> Result<FixtureOutcome> {
    let got = match &fx.payload {
        FixturePayload::Operator(spec) => {
            let rep = maximality_decision(spec, &DecisionConfig::default_for(spec))?;
            verdict_label(&rep.verdict).to_string()
        }
        FixturePayload::Function(f) => {
            let rep =
                convexity_check_second_order(f, &Rat::zero(), &ConvexityConfig::default_for(f))?;
            convexity_label(&rep.verdict).to_string()
        }
    };
    Ok(FixtureOutcome {
        name: fx.name.to_string(),
        expected: fx.expected.to_string(),
        pass: got == fx.expected,
        got,
    })
}

pub fn verdict_label(v: &Verdict) -> &'static str {
    match v {
        Verdict::MaximalMonotone { .. } => "MaximalMonotone",
        Verdict::StronglyMaximalMonotone { .. } => "StronglyMaximalMonotone",
        Verdict::NotMonotone { .. } => "NotMonotone",
        Verdict::NotHypomonotone { .. } => "NotHypomonotone",
        Verdict::Inconclusive { .. } => "Inconclusive",
    }
}

pub fn convexity_label(v: &ConvexityVerdict) -> &'static str {
    match v {
        ConvexityVerdict::Convex => "Convex",
        ConvexityVerdict::StronglyConvex { .. } => "StronglyConvex",
        ConvexityVerdict::NotConvex { .. } => "NotConvex",
        ConvexityVerdict::Inconclusive { .. } => "Inconclusive",
    }
}
