//! JSON report builders for the analysis results.
//!
//! Reports carry exact rationals (as `"p/q"` strings) plus `f64` mirrors for
//! readability, and never include timestamps: a fixed seed and config
//! reproduce the bytes.

use crate::convexity::{ConvexityReport, ConvexityVerdict, StrongConvexityReport};
use crate::jsonio::{ext_rat_to_json, rat_to_json, vec_to_json};
use crate::monotonicity::{
    DecisionReport, DomainProbe, HypoEvidence, MintyReport, PairwiseReport, PsdReport, Route,
    SemilocalWindow, Verdict,
};
use crate::operator::GraphPoint;
use crate::rat::{rat_to_f64, ExtRat, RVec, Rat};
use serde_json::{json, Value};

fn ext_with_f64(x: &ExtRat) -> Value {
    json!({ "exact": ext_rat_to_json(x), "f64": x.to_f64() })
}

fn rat_with_f64(x: &Rat) -> Value {
    json!({ "exact": rat_to_json(x), "f64": rat_to_f64(x) })
}

fn point_json(p: &GraphPoint) -> Value {
    json!({ "u": vec_to_json(&p.u), "v": vec_to_json(&p.v), "provenance": p.provenance })
}

fn pair_json(pair: &(GraphPoint, GraphPoint)) -> Value {
    json!([point_json(&pair.0), point_json(&pair.1)])
}

pub fn pairwise_to_json(r: &PairwiseReport) -> Value {
    json!({
        "inf_quotient": ext_with_f64(&r.inf_quotient),
        "inf_product": ext_with_f64(&r.inf_product),
        "monotone_on_samples": r.monotone_on_samples,
        "witness": r.witness.as_ref().map(pair_json),
    })
}

pub fn hypo_to_json(h: &HypoEvidence) -> Value {
    json!({
        "r_hat": ext_with_f64(&h.r_hat),
        "worst_quotient": ext_with_f64(&h.worst_quotient),
        "divergence": h.divergence.as_ref().map(|d| json!({
            "u1": vec_to_json(&d.u1),
            "u2": vec_to_json(&d.u2),
            "distance": rat_with_f64(&d.distance),
            "quotient": rat_with_f64(&d.quotient),
            "pair": d.pair.as_ref().map(pair_json),
        })),
    })
}

pub fn psd_to_json(r: &PsdReport) -> Value {
    json!({
        "kind": match r.kind {
            crate::coderivative::CoderivativeKind::Regular => "regular",
            crate::coderivative::CoderivativeKind::Limiting => "limiting",
        },
        "kappa": rat_with_f64(&r.kappa),
        "holds": r.holds,
        "exact": r.exact,
        "worst_margin": ext_with_f64(&r.worst_margin),
        "skipped_queries": r.skipped_queries,
        "witness": r.witness.as_ref().map(|w| json!({
            "point": point_json(&w.point),
            "w": vec_to_json(&w.direction),
            "z": w.z.as_ref().map(|z| vec_to_json(z)),
            "margin": ext_with_f64(&w.margin),
        })),
        "stratum_failure": r.stratum_failure.as_ref().map(|f| json!({
            "witness_point": vec_to_json(&f.witness_point),
            "z": vec_to_json(&f.z),
            "w": vec_to_json(&f.w),
            "margin": rat_with_f64(&f.margin),
        })),
    })
}

pub fn window_json(w: &SemilocalWindow) -> Value {
    json!({
        "center": vec_to_json(&w.center),
        "radius": rat_with_f64(&w.radius),
        "modulus": rat_with_f64(&w.modulus),
    })
}

pub fn domain_probe_to_json(p: &DomainProbe) -> Value {
    match p {
        DomainProbe::Pass => json!({ "pass": true }),
        DomainProbe::Witness { a, b, t, midpoint } => json!({
            "pass": false,
            "a": vec_to_json(a),
            "b": vec_to_json(b),
            "t": rat_with_f64(t),
            "midpoint": vec_to_json(midpoint),
        }),
    }
}

pub fn minty_to_json(m: &MintyReport) -> Value {
    json!({
        "s": rat_with_f64(&m.s),
        "total": m.total,
        "solved": m.solved,
        "coverage": m.coverage,
        "multivalued": m.multivalued.iter().map(|y| vec_to_json(y)).collect::<Vec<_>>(),
        "lipschitz_bound": m.lipschitz_bound,
        "worst_ratio": m.worst_ratio,
        "lipschitz_ok": m.lipschitz_ok,
        "solutions": m.solutions.iter().map(|(y, u)| json!({
            "y": vec_to_json(y),
            "u": vec_to_json(u),
        })).collect::<Vec<_>>(),
    })
}

pub fn verdict_to_json(v: &Verdict) -> Value {
    match v {
        Verdict::MaximalMonotone { route, certified_on_region } => json!({
            "verdict": "MaximalMonotone",
            "route": match route {
                Route::Global => "global",
                Route::SemilocalConvexDomain => "semilocal-convex-domain",
            },
            "certified_on_region": certified_on_region,
        }),
        Verdict::StronglyMaximalMonotone { kappa } => json!({
            "verdict": "StronglyMaximalMonotone",
            "kappa": rat_with_f64(kappa),
        }),
        Verdict::NotMonotone { witness, product } => json!({
            "verdict": "NotMonotone",
            "witness": pair_json(witness),
            "product": rat_with_f64(product),
        }),
        Verdict::NotHypomonotone { witness } => json!({
            "verdict": "NotHypomonotone",
            "witness": json!({
                "u1": vec_to_json(&witness.u1),
                "u2": vec_to_json(&witness.u2),
                "distance": rat_with_f64(&witness.distance),
                "quotient": rat_with_f64(&witness.quotient),
            }),
        }),
        Verdict::Inconclusive { reason } => json!({
            "verdict": "Inconclusive",
            "reason": reason,
        }),
    }
}

pub fn decision_to_json(r: &DecisionReport) -> Value {
    json!({
        "verdict": verdict_to_json(&r.verdict),
        "certificates": {
            "pairwise": pairwise_to_json(&r.pairwise),
            "hypomonotonicity": hypo_to_json(&r.hypo),
            "psd_regular": psd_to_json(&r.psd_regular),
            "psd_limiting": psd_to_json(&r.psd_limiting),
            "domain_probe": domain_probe_to_json(&r.domain_probe),
            "windows": r.windows.iter().map(|(c, w)| json!({
                "center": vec_to_json(c),
                "window": w.as_ref().map(window_json),
            })).collect::<Vec<_>>(),
            "minty": r.minty.as_ref().map(minty_to_json),
        },
        "exactness": if r.psd_regular.exact && r.psd_limiting.exact { "exact" } else { "sampled" },
    })
}

fn second_order_witness_json(w: &crate::convexity::SecondOrderWitness) -> Value {
    json!({
        "u": vec_to_json(&w.u),
        "v": vec_to_json(&w.v),
        "w": vec_to_json(&w.w),
        "z": vec_to_json(&w.z),
        "margin": rat_with_f64(&w.margin),
    })
}

fn primal_witness_json(w: &crate::convexity::PrimalWitness) -> Value {
    json!({
        "x": vec_to_json(&w.x),
        "y": vec_to_json(&w.y),
        "lambda": rat_with_f64(&w.lambda),
        "margin": rat_with_f64(&w.margin),
    })
}

pub fn convexity_verdict_to_json(v: &ConvexityVerdict) -> Value {
    match v {
        ConvexityVerdict::Convex => json!({ "verdict": "Convex" }),
        ConvexityVerdict::StronglyConvex { kappa } => json!({
            "verdict": "StronglyConvex",
            "kappa": rat_with_f64(kappa),
        }),
        ConvexityVerdict::NotConvex { second_order, primal } => json!({
            "verdict": "NotConvex",
            "second_order_witness": second_order.as_ref().map(second_order_witness_json),
            "primal_witness": primal.as_ref().map(primal_witness_json),
            "primal_witness_missing": primal.is_none(),
        }),
        ConvexityVerdict::Inconclusive { reason } => json!({
            "verdict": "Inconclusive",
            "reason": reason,
        }),
    }
}

pub fn convexity_to_json(r: &ConvexityReport) -> Value {
    json!({
        "verdict": convexity_verdict_to_json(&r.verdict),
        "exact": r.exact,
        "psd_combined": psd_to_json(&r.psd_combined),
        "psd_limiting": psd_to_json(&r.psd_limiting),
    })
}

pub fn strong_convexity_to_json(r: &StrongConvexityReport) -> Value {
    json!({
        "kappa": rat_with_f64(&r.kappa),
        "holds": r.holds,
        "verdict": convexity_verdict_to_json(&r.verdict),
        "threshold_route": convexity_to_json(&r.threshold_route),
        "shifted_route": convexity_to_json(&r.shifted_route),
    })
}

/// Canonical serialization: pretty JSON with sorted keys (serde_json maps
/// are ordered), newline-terminated.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn sample_grid(dim: usize, lo: i64, hi: i64, count: usize) -> Vec<RVec> {
    let count = count.max(2);
    (0..count)
        .map(|k| {
            let t = crate::rat::rat_i(lo)
                + crate::rat::rat_i(hi - lo) * crate::rat::ratio(k as i64, (count - 1) as i64);
            vec![t; dim]
        })
        .collect()
}
