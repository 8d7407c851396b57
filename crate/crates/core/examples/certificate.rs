//! Differential-norm certificates `(θ, C)` and their random checks.

use std::sync::Arc;

use normctl::analysis::{certify, check_diff_norm, necessary_condition_probe, HolderCertificate, ThetaOptions};
use normctl::groups::GroupModel;
use normctl::weights::{Weight, WeightSpec};

fn main() -> normctl::Result<()> {
    let cases = [
        (GroupModel::lattice(1)?, WeightSpec::Polynomial { beta: 2.0 }, 1.0),
        (GroupModel::lattice(2)?, WeightSpec::Polynomial { beta: 2.0 }, 2.0),
        (GroupModel::heisenberg(), WeightSpec::SubexpPower { alpha: 0.5, c: 1.0 }, 1.0),
    ];
    for (model, spec, p) in cases {
        let model = Arc::new(model);
        let w = Weight::new(spec, model.clone())?;
        let cert = certify(&w, p, None, None, &ThetaOptions::default())?;
        let check = check_diff_norm(&cert, &w, p, 200, 4, 1)?;
        println!(
            "{:<10} {:<28} p = {p}: theta = {:.4}, C = {:.4}, {} trials, max ratio {:.3} ({})",
            model.family().to_string(),
            w.spec().to_string(),
            cert.theta,
            cert.c,
            check.trials,
            check.max_ratio,
            if check.passed() { "ok" } else { "violated" }
        );
    }

    // no certificate can exist for nu weights: w(2n) / w(n)^(1+θ) is unbounded
    let z = Arc::new(GroupModel::lattice(1)?);
    let nu = Weight::new(WeightSpec::SubexpLog { gamma: 1.0, c: 1.0 }, z)?;
    let probe = necessary_condition_probe(&nu, &HolderCertificate::manual(0.5, 4.0)?, 1 << 20)?;
    println!("nu probe at theta = 0.5: {:?}, first failure at n = {:?}", probe.status, probe.first_failure);
    Ok(())
}
