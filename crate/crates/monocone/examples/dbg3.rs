use monocone::convexity::*;
use monocone::monotonicity::*;
use monocone::coderivative::CoderivativeKind;
use monocone::operator::*;
use monocone::rat::*;
use num_traits::Zero;
use std::time::Instant;

fn main() {
    let (_, f, _) = convexity_catalog().into_iter().find(|(n, _, _)| n == "max-linear-2d").unwrap();
    let spec = OperatorSpec::MaxQuadSubdiff { f: f.clone() };
    let t0 = Instant::now();
    let pieces = compile_to_polyhedral(&spec).unwrap();
    println!("compile: {:?} ({} pieces)", t0.elapsed(), pieces.len());
    let t0 = Instant::now();
    let cfg = ConvexityConfig::default_for(&f);
    let samples = graph_sample(&spec, &cfg.sample).unwrap();
    println!("sample: {:?} ({} points)", t0.elapsed(), samples.len());
    let t0 = Instant::now();
    let strata = exhaustive_psd_strata(&spec, &Rat::zero()).unwrap();
    println!("strata sweep: {:?}", t0.elapsed());
    let plan = QueryPlan { points: samples, directions: QueryPlan::directions_for(2, 7, 23), exhaustive_strata: true };
    let t0 = Instant::now();
    let _ = psd_check_with_strata(&spec, CoderivativeKind::Regular, &Rat::zero(), &plan, Some(match &strata { s => s })).unwrap();
    println!("psd regular margins: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let _ = psd_check_with_strata(&spec, CoderivativeKind::Limiting, &Rat::zero(), &plan, Some(&strata)).unwrap();
    println!("psd limiting margins: {:?}", t0.elapsed());
}
