//! The product bound against the asymptotic bound as the weight and the
//! conditioning of the element vary.

use std::sync::Arc;

use normctl::algebra::AlgebraElement;
use normctl::analysis::{certify, ThetaOptions};
use normctl::groups::{GroupElement, GroupModel};
use normctl::inversion::{asymptotic_bound, bound_product, BoundInputs, ProductVariant, DEFAULT_K_CUT};
use normctl::inversion::{neumann_invert, InversionOptions};
use normctl::weights::{Weight, WeightSpec};

fn main() -> normctl::Result<()> {
    let z = Arc::new(GroupModel::lattice(1)?);
    let at = |n: i64| GroupElement::lattice(&[n]).unwrap();

    println!("{:>5} {:>5} {:>10} {:>14} {:>14} {:>14}", "beta", "t", "nu", "ln actual", "ln product", "ln asymptotic");
    for beta in [1.0, 2.0, 3.0] {
        let w = Weight::new(WeightSpec::Polynomial { beta }, z.clone())?;
        let cert = certify(&w, 1.0, None, None, &ThetaOptions::default())?;
        for t in [0.25, 0.5, 0.75] {
            let a = AlgebraElement::real(z.clone(), [(at(0), 1.0), (at(1), -t)])?;
            let rep = neumann_invert(&a, &cert, &w, 1.0, &InversionOptions::default())?;
            let asym = rep.asymptotic.bound().map_or("NA".to_string(), |b| format!("{:.4}", b.ln_value));
            println!(
                "{beta:>5} {t:>5} {:>10.4} {:>14.4} {:>14.4} {asym:>14}",
                rep.nu,
                rep.actual.ln(),
                rep.product.ln_value
            );
        }
    }

    // the bounds as functions of their inputs alone
    let w = Weight::new(WeightSpec::Polynomial { beta: 2.0 }, z)?;
    let cert = certify(&w, 1.0, None, None, &ThetaOptions::default())?;
    println!("\n{:>8} {:>14} {:>14}", "nu", "ln product", "ln asymptotic");
    for inv_b in [1.0, 2.0, 4.0, 16.0] {
        let a_a = 2.0;
        let prod = bound_product(&BoundInputs::exact(a_a, 1.0, inv_b), &cert, DEFAULT_K_CUT, ProductVariant::Stated)?;
        let asym = asymptotic_bound(a_a * inv_b, a_a, inv_b, &cert)?;
        let ln_asym = asym.bound().map_or("NA".to_string(), |b| format!("{:.4}", b.ln_value));
        println!("{:>8} {:>14.4} {ln_asym:>14}", a_a * inv_b, prod.ln_value);
    }
    Ok(())
}
