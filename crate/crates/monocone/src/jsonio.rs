//! JSON encoding of operator specs, functions, values and reports.
//!
//! Rationals are written as `"p/q"` strings; on input both strings and JSON
//! numbers are accepted (doubles convert exactly as dyadic rationals).
//! Parse errors carry the offending field path. Report objects use sorted
//! keys and contain no timestamps, so reruns with the same seed produce
//! byte-identical output.

use crate::coderivative::{CoderivativeValue, Exactness};
use crate::error::{Error, Result};
use crate::maxquad::{MaxQuadFunction, QuadPiece};
use crate::operator::{OperatorSpec, ValueSet};
use crate::polyhedron::HPolyhedron;
use crate::polynomial::{Poly, RationalFn, RationalMapFn};
use crate::rat::{parse_rat, rat_from_f64, rat_to_f64, rat_to_string, ExtRat, RVec, Rat, RatMat};
use serde_json::{json, Map, Value};

fn err(path: &str, msg: &str) -> Error {
    Error::Parse(format!("{path}: {msg}"))
}

// ---------------------------------------------------------------------------
// Scalars and vectors
// ---------------------------------------------------------------------------

pub fn rat_to_json(r: &Rat) -> Value {
    Value::String(rat_to_string(r))
}

pub fn rat_from_json(v: &Value, path: &str) -> Result<Rat> {
    match v {
        Value::String(s) => parse_rat(s).map_err(|e| err(path, &e)),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(crate::rat::rat_i(i))
            } else if let Some(f) = n.as_f64() {
                rat_from_f64(f).ok_or_else(|| err(path, "non-finite number"))
            } else {
                Err(err(path, "unrepresentable number"))
            }
        }
        _ => Err(err(path, "expected a rational (string \"p/q\" or number)")),
    }
}

pub fn ext_rat_to_json(r: &ExtRat) -> Value {
    match r {
        ExtRat::Finite(x) => rat_to_json(x),
        ExtRat::PlusInf => Value::String("inf".into()),
        ExtRat::MinusInf => Value::String("-inf".into()),
    }
}

pub fn ext_rat_from_json(v: &Value, path: &str) -> Result<ExtRat> {
    match v {
        Value::Null => Err(err(path, "expected a bound, \"inf\" or \"-inf\"")),
        Value::String(s) if s == "inf" || s == "+inf" => Ok(ExtRat::PlusInf),
        Value::String(s) if s == "-inf" => Ok(ExtRat::MinusInf),
        other => Ok(ExtRat::Finite(rat_from_json(other, path)?)),
    }
}

pub fn vec_to_json(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rat_to_json).collect())
}

pub fn vec_from_json(v: &Value, path: &str) -> Result<RVec> {
    let arr = v.as_array().ok_or_else(|| err(path, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| rat_from_json(x, &format!("{path}[{i}]")))
        .collect()
}

pub fn mat_to_json(m: &RatMat) -> Value {
    Value::Array(m.rows.iter().map(|r| vec_to_json(r)).collect())
}

pub fn mat_from_json(v: &Value, path: &str) -> Result<RatMat> {
    let arr = v.as_array().ok_or_else(|| err(path, "expected a matrix (array of rows)"))?;
    let rows: Result<Vec<RVec>> = arr
        .iter()
        .enumerate()
        .map(|(i, r)| vec_from_json(r, &format!("{path}[{i}]")))
        .collect();
    Ok(RatMat::new(rows?))
}

fn field<'a>(v: &'a Value, name: &str, path: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| err(path, &format!("missing field {name:?}")))
}

// ---------------------------------------------------------------------------
// Polyhedra
// ---------------------------------------------------------------------------

pub fn polyhedron_to_json(p: &HPolyhedron) -> Value {
    let mut m = Map::new();
    m.insert("dim".into(), json!(p.dim));
    m.insert("a".into(), Value::Array(p.a.iter().map(|r| vec_to_json(r)).collect()));
    m.insert("b".into(), vec_to_json(&p.b));
    if !p.eq.is_empty() {
        m.insert("eq".into(), Value::Array(p.eq.iter().map(|r| vec_to_json(r)).collect()));
        m.insert("f".into(), vec_to_json(&p.f));
    }
    Value::Object(m)
}

pub fn polyhedron_from_json(v: &Value, dim: usize, path: &str) -> Result<HPolyhedron> {
    let a = match v.get("a") {
        Some(rows) => {
            let arr = rows.as_array().ok_or_else(|| err(path, "a: expected rows"))?;
            arr.iter()
                .enumerate()
                .map(|(i, r)| vec_from_json(r, &format!("{path}.a[{i}]")))
                .collect::<Result<Vec<RVec>>>()?
        }
        None => vec![],
    };
    let b = match v.get("b") {
        Some(rhs) => vec_from_json(rhs, &format!("{path}.b"))?,
        None => vec![],
    };
    let eq = match v.get("eq") {
        Some(rows) => {
            let arr = rows.as_array().ok_or_else(|| err(path, "eq: expected rows"))?;
            arr.iter()
                .enumerate()
                .map(|(i, r)| vec_from_json(r, &format!("{path}.eq[{i}]")))
                .collect::<Result<Vec<RVec>>>()?
        }
        None => vec![],
    };
    let f = match v.get("f") {
        Some(rhs) => vec_from_json(rhs, &format!("{path}.f"))?,
        None => vec![],
    };
    HPolyhedron::new(dim, a, b, eq, f)
}

// ---------------------------------------------------------------------------
// Max-quad functions
// ---------------------------------------------------------------------------

pub fn maxquad_to_json(f: &MaxQuadFunction) -> Value {
    json!({
        "dim": f.dim,
        "pieces": f.pieces.iter().map(|p| json!({
            "Q": mat_to_json(&p.q),
            "c": vec_to_json(&p.c),
            "d": rat_to_json(&p.d),
        })).collect::<Vec<_>>(),
    })
}

pub fn maxquad_from_json(v: &Value, path: &str) -> Result<MaxQuadFunction> {
    let dim = field(v, "dim", path)?
        .as_u64()
        .ok_or_else(|| err(path, "dim: expected a positive integer"))? as usize;
    let pieces_v = field(v, "pieces", path)?
        .as_array()
        .ok_or_else(|| err(path, "pieces: expected an array"))?;
    let mut pieces = Vec::with_capacity(pieces_v.len());
    for (i, pv) in pieces_v.iter().enumerate() {
        let pp = format!("{path}.pieces[{i}]");
        let q = mat_from_json(field(pv, "Q", &pp)?, &format!("{pp}.Q"))?;
        let c = vec_from_json(field(pv, "c", &pp)?, &format!("{pp}.c"))?;
        let d = rat_from_json(field(pv, "d", &pp)?, &format!("{pp}.d"))?;
        pieces.push(QuadPiece { q, c, d });
    }
    MaxQuadFunction::new(dim, pieces)
}

// ---------------------------------------------------------------------------
// Polynomials and rational maps
// ---------------------------------------------------------------------------

fn poly_to_json(p: &Poly) -> Value {
    Value::Array(
        p.terms
            .iter()
            .map(|(powers, c)| json!({ "coeff": rat_to_json(c), "powers": powers }))
            .collect(),
    )
}

fn poly_from_json(v: &Value, dim: usize, path: &str) -> Result<Poly> {
    let arr = v.as_array().ok_or_else(|| err(path, "expected an array of terms"))?;
    let mut terms = Vec::with_capacity(arr.len());
    for (i, t) in arr.iter().enumerate() {
        let tp = format!("{path}[{i}]");
        let coeff = rat_from_json(field(t, "coeff", &tp)?, &format!("{tp}.coeff"))?;
        let powers_v = field(t, "powers", &tp)?
            .as_array()
            .ok_or_else(|| err(&tp, "powers: expected an array"))?;
        let powers: Vec<u32> = powers_v
            .iter()
            .map(|x| x.as_u64().map(|u| u as u32))
            .collect::<Option<Vec<u32>>>()
            .ok_or_else(|| err(&tp, "powers: expected nonnegative integers"))?;
        terms.push((coeff, powers));
    }
    Poly::new(dim, terms)
}

// ---------------------------------------------------------------------------
// Operator specs
// ---------------------------------------------------------------------------

pub fn operator_to_json(spec: &OperatorSpec) -> Value {
    let dim = spec.dim();
    let variant = match spec {
        OperatorSpec::RationalMap { map } => json!({
            "type": "rational_map",
            "components": map.components.iter().map(|c| json!({
                "num": poly_to_json(&c.num),
                "den": poly_to_json(&c.den),
            })).collect::<Vec<_>>(),
        }),
        OperatorSpec::AffineBox { a, b, lo, hi } => json!({
            "type": "affine_box",
            "a": mat_to_json(a),
            "b": vec_to_json(b),
            "lo": lo.iter().map(ext_rat_to_json).collect::<Vec<_>>(),
            "hi": hi.iter().map(ext_rat_to_json).collect::<Vec<_>>(),
        }),
        OperatorSpec::PolyhedralGraphUnion { pieces, .. } => json!({
            "type": "polyhedral_graph_union",
            "pieces": pieces.iter().map(polyhedron_to_json).collect::<Vec<_>>(),
        }),
        OperatorSpec::MaxQuadSubdiff { f } => json!({
            "type": "max_quad_subdiff",
            "function": maxquad_to_json(f),
        }),
        OperatorSpec::ShiftIdentity { base, s } => json!({
            "type": "shift_identity",
            "base": operator_to_json(base),
            "s": rat_to_json(s),
        }),
        OperatorSpec::ShiftDown { base, kappa } => json!({
            "type": "shift_down",
            "base": operator_to_json(base),
            "kappa": rat_to_json(kappa),
        }),
        OperatorSpec::Inverse { base } => json!({
            "type": "inverse",
            "base": operator_to_json(base),
        }),
    };
    json!({ "dim": dim, "variant": variant })
}

pub fn operator_from_json(v: &Value, path: &str) -> Result<OperatorSpec> {
    let dim = field(v, "dim", path)?
        .as_u64()
        .ok_or_else(|| err(path, "dim: expected a positive integer"))? as usize;
    if dim == 0 {
        return Err(err(path, "dim must be at least 1"));
    }
    let variant = field(v, "variant", path)?;
    let vp = format!("{path}.variant");
    let ty = field(variant, "type", &vp)?
        .as_str()
        .ok_or_else(|| err(&vp, "type: expected a string"))?;
    let mut spec = match ty {
        "rational_map" => {
            let comps_v = field(variant, "components", &vp)?
                .as_array()
                .ok_or_else(|| err(&vp, "components: expected an array"))?;
            let mut comps = Vec::with_capacity(comps_v.len());
            for (i, cv) in comps_v.iter().enumerate() {
                let cp = format!("{vp}.components[{i}]");
                let num = poly_from_json(field(cv, "num", &cp)?, dim, &format!("{cp}.num"))?;
                let den = match cv.get("den") {
                    Some(d) => poly_from_json(d, dim, &format!("{cp}.den"))?,
                    None => Poly::constant(dim, crate::rat::rat_i(1)),
                };
                comps.push(RationalFn::new(num, den)?);
            }
            OperatorSpec::RationalMap { map: RationalMapFn::new(dim, comps)? }
        }
        "affine_box" => {
            let a = mat_from_json(field(variant, "a", &vp)?, &format!("{vp}.a"))?;
            let b = vec_from_json(field(variant, "b", &vp)?, &format!("{vp}.b"))?;
            let lo_v = field(variant, "lo", &vp)?
                .as_array()
                .ok_or_else(|| err(&vp, "lo: expected an array"))?;
            let hi_v = field(variant, "hi", &vp)?
                .as_array()
                .ok_or_else(|| err(&vp, "hi: expected an array"))?;
            let lo: Result<Vec<ExtRat>> = lo_v
                .iter()
                .enumerate()
                .map(|(i, x)| ext_rat_from_json(x, &format!("{vp}.lo[{i}]")))
                .collect();
            let hi: Result<Vec<ExtRat>> = hi_v
                .iter()
                .enumerate()
                .map(|(i, x)| ext_rat_from_json(x, &format!("{vp}.hi[{i}]")))
                .collect();
            OperatorSpec::AffineBox { a, b, lo: lo?, hi: hi? }
        }
        "polyhedral_graph_union" => {
            let pieces_v = field(variant, "pieces", &vp)?
                .as_array()
                .ok_or_else(|| err(&vp, "pieces: expected an array"))?;
            let pieces: Result<Vec<HPolyhedron>> = pieces_v
                .iter()
                .enumerate()
                .map(|(i, pv)| polyhedron_from_json(pv, 2 * dim, &format!("{vp}.pieces[{i}]")))
                .collect();
            OperatorSpec::PolyhedralGraphUnion { dim, pieces: pieces? }
        }
        "max_quad_subdiff" => {
            let f = maxquad_from_json(field(variant, "function", &vp)?, &format!("{vp}.function"))?;
            OperatorSpec::MaxQuadSubdiff { f }
        }
        "shift_identity" => {
            let base = operator_from_json(field(variant, "base", &vp)?, &format!("{vp}.base"))?;
            let s = rat_from_json(field(variant, "s", &vp)?, &format!("{vp}.s"))?;
            OperatorSpec::ShiftIdentity { base: Box::new(base), s }
        }
        "shift_down" => {
            let base = operator_from_json(field(variant, "base", &vp)?, &format!("{vp}.base"))?;
            let kappa = rat_from_json(field(variant, "kappa", &vp)?, &format!("{vp}.kappa"))?;
            OperatorSpec::ShiftDown { base: Box::new(base), kappa }
        }
        "inverse" => {
            let base = operator_from_json(field(variant, "base", &vp)?, &format!("{vp}.base"))?;
            OperatorSpec::Inverse { base: Box::new(base) }
        }
        other => return Err(err(&vp, &format!("unknown variant type {other:?}"))),
    };
    if spec.dim() != dim {
        return Err(err(path, "declared dim disagrees with the variant payload"));
    }
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Values and coderivative reports
// ---------------------------------------------------------------------------

pub fn value_set_to_json(v: &ValueSet) -> Value {
    match v {
        ValueSet::Empty { .. } => json!({ "type": "empty" }),
        ValueSet::Points { points, .. } => json!({
            "type": "points",
            "points": points.iter().map(|p| vec_to_json(p)).collect::<Vec<_>>(),
            "points_f64": points
                .iter()
                .map(|p| p.iter().map(rat_to_f64).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
        ValueSet::Polyhedra { polys, .. } => json!({
            "type": "polyhedra",
            "polyhedra": polys.iter().map(polyhedron_to_json).collect::<Vec<_>>(),
        }),
    }
}

pub fn coderivative_to_json(cv: &CoderivativeValue, kind: &str) -> Value {
    json!({
        "w": vec_to_json(&cv.direction),
        "kind": kind,
        "value": value_set_to_json(&cv.value),
        "exactness": match &cv.exactness {
            Exactness::Exact => json!("exact"),
            Exactness::Sampled(s) => json!({
                "sampled": {
                    "radius0": rat_to_json(&s.radius0),
                    "halvings": s.halvings,
                    "per_shell": s.per_shell,
                    "seed": s.seed,
                }
            }),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{evaluate, kx_plus_unit_box, neg_reciprocal};
    use crate::rat::rat_i;

    #[test]
    fn operator_roundtrip() {
        for spec in [
            kx_plus_unit_box(crate::rat::ratio(3, 2)),
            neg_reciprocal(),
            OperatorSpec::Inverse { base: Box::new(kx_plus_unit_box(rat_i(1))) },
            crate::operator::abs_subdiff(),
        ] {
            let j = operator_to_json(&spec);
            let back = operator_from_json(&j, "$").unwrap();
            // Compare behaviour on a probe rather than structurally.
            for k in -2..=2 {
                let u = vec![rat_i(k)];
                let a = evaluate(&spec, &u).unwrap();
                let b = evaluate(&back, &u).unwrap();
                for cand in [rat_i(-1), rat_i(0), rat_i(1), crate::rat::ratio(5, 2)] {
                    assert_eq!(a.contains(&[cand.clone()]), b.contains(&[cand.clone()]));
                }
            }
        }
    }

    #[test]
    fn rationals_accept_strings_and_numbers() {
        let v: Value = serde_json::from_str(r#"{"dim":1,"variant":{"type":"affine_box","a":[[0.5]],"b":["-1/3"],"lo":[0],"hi":["inf"]}}"#).unwrap();
        let spec = operator_from_json(&v, "$").unwrap();
        match &spec {
            OperatorSpec::AffineBox { a, b, hi, .. } => {
                assert_eq!(a.rows[0][0], crate::rat::ratio(1, 2));
                assert_eq!(b[0], crate::rat::ratio(-1, 3));
                assert_eq!(hi[0], ExtRat::PlusInf);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_paths() {
        let v: Value = serde_json::from_str(r#"{"dim":1,"variant":{"type":"affine_box","a":[["x"]],"b":[0],"lo":[0],"hi":[1]}}"#).unwrap();
        match operator_from_json(&v, "$") {
            Err(Error::Parse(msg)) => assert!(msg.contains("$.variant.a[0][0]"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        let v: Value = serde_json::from_str(r#"{"dim":2,"variant":{"type":"affine_box","a":[[1]],"b":[0],"lo":[0],"hi":[1]}}"#).unwrap();
        assert!(operator_from_json(&v, "$").is_err());
    }

    #[test]
    fn maxquad_roundtrip() {
        let f = crate::maxquad::abs_function();
        let j = maxquad_to_json(&f);
        let back = maxquad_from_json(&j, "$").unwrap();
        assert_eq!(back.pieces.len(), 2);
        assert_eq!(back.eval(&[rat_i(-3)]), rat_i(3));
    }
}
