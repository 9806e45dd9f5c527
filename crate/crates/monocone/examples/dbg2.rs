use monocone::convexity::convexity_catalog;
use monocone::operator::*;

fn main() {
    for (name, f, _) in convexity_catalog() {
        if name != "normsq-plus-abs" { continue; }
        let spec = OperatorSpec::MaxQuadSubdiff { f };
        let pieces = compile_to_polyhedral(&spec).unwrap();
        println!("{} pieces", pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            println!("piece {i}: {} ineq rows, {} eq rows", p.a.len(), p.eq.len());
            for (r, b) in p.a.iter().zip(&p.b) {
                println!("   {:?} <= {:?}", r.iter().map(monocone::rat::rat_to_string).collect::<Vec<_>>(), monocone::rat::rat_to_string(b));
            }
        }
    }
}
