//! Weight families and the conditions the certificate needs.

use std::sync::Arc;

use normctl::analysis::suggest_exponents;
use normctl::groups::GroupModel;
use normctl::weights::{
    build_auxiliary, check_growth_condition, check_summability, check_weight_axioms, ChainSequence, Weight,
    WeightSpec, DEFAULT_MARGIN,
};

fn main() -> normctl::Result<()> {
    let z = Arc::new(GroupModel::lattice(1)?);
    let specs = [
        WeightSpec::Polynomial { beta: 2.0 },
        WeightSpec::SubexpPower { alpha: 0.5, c: 1.0 },
        WeightSpec::SubexpLog { gamma: 1.0, c: 1.0 },
    ];
    for spec in specs {
        let w = Weight::new(spec, z.clone())?;
        let axioms = check_weight_axioms(&w, 6, 500, 0)?;
        let growth = check_growth_condition(&w, 1 << 16, DEFAULT_MARGIN)?;
        println!("{:<28} w(10) = {:>10.4}  axioms {:?}  growth {:?}", w.spec().to_string(), w.at_length(10)?, axioms.status, growth.status);
        for p in [1.0, 2.0] {
            if let Ok((s, r)) = suggest_exponents(&w, p) {
                let aux = build_auxiliary(&w, p)?;
                let (rep, sum) = check_summability(&aux, s, r, 2000)?;
                println!("    p = {p}: s = {s:.3}, r = {r:.3}, summability {:?}, series {:.4}", rep.status, sum.total);
            }
        }
    }

    // a weight on the locally finite group, w = n_i on G_i \ G_(i-1)
    let lf = Arc::new(GroupModel::locally_finite());
    let w = Weight::new(WeightSpec::LocallyFinite { n: ChainSequence::Geometric { base: 2.0 } }, lf)?;
    let aux = build_auxiliary(&w, 2.0)?;
    println!("locally finite, p = 2: auxiliary mode {:?}", aux.mode());
    Ok(())
}
