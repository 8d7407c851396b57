//! Neumann inversion with both norm-control bounds.
//!
//! Inverts `δ₀ - ½δ₁` on `ℤ`, whose inverse is `Σ 2⁻ⁿ δ_n`.

use std::sync::Arc;

use normctl::algebra::AlgebraElement;
use normctl::analysis::{certify, ThetaOptions};
use normctl::groups::{GroupElement, GroupModel};
use normctl::inversion::{neumann_invert, verify_inverse, InversionOptions};
use normctl::weights::{Weight, WeightSpec};

fn main() -> normctl::Result<()> {
    let z = Arc::new(GroupModel::lattice(1)?);
    let at = |n: i64| GroupElement::lattice(&[n]).unwrap();
    let a = AlgebraElement::real(z.clone(), [(at(0), 1.0), (at(1), -0.5)])?;

    let w = Weight::new(WeightSpec::Polynomial { beta: 2.0 }, z.clone())?;
    let cert = certify(&w, 1.0, None, None, &ThetaOptions::default())?;
    let rep = neumann_invert(&a, &cert, &w, 1.0, &InversionOptions::default())?;

    println!("a^-1 (first terms):");
    for (x, c) in rep.inverse.terms().iter().filter(|(_, c)| c.norm() > 1e-12).take(6) {
        println!("  {x:>4}  {:.12}", c.re);
    }
    let res = verify_inverse(&a, &rep.inverse)?;
    println!("residuals       {:.2e} / {:.2e}", res.left, res.right);
    println!("Neumann terms   {} (|c|_B <= {:.6} via {})", rep.terms, rep.c_norm_b[1], rep.certified_by);
    println!("|a^-1|_B        [{:.9}, {:.9}]", rep.inv_norm_b[0], rep.inv_norm_b[1]);
    println!("nu              {:.6}", rep.nu);
    println!("|a^-1|_(1,w)    {:.12}", rep.actual);
    println!("ln product      {:.4}", rep.product.ln_value);
    match rep.asymptotic.bound() {
        Some(b) => println!("ln asymptotic   {:.4}", b.ln_value),
        None => println!("asymptotic bound needs nu >= 2"),
    }

    // a = δ₀ - δ₁ has 0 in the closure of its spectrum and is rejected
    let boundary = AlgebraElement::real(z, [(at(0), 1.0), (at(1), -1.0)])?;
    if let Err(e) = neumann_invert(&boundary, &cert, &w, 1.0, &InversionOptions::default()) {
        println!("δ₀ - δ₁: {e}");
    }
    Ok(())
}
