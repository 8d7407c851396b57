//! Group algebra arithmetic, weighted norms and spectral estimates.

use std::sync::Arc;

use normctl::algebra::{
    convolve, involute, norm_p_omega, opnorm_estimate, spectral_radius_estimates, AlgebraElement, PowerNorm,
    SpectralOptions,
};
use normctl::groups::{GroupElement, GroupModel};
use normctl::weights::{Weight, WeightSpec};

fn show(f: &AlgebraElement) -> String {
    let parts: Vec<String> = f.terms().iter().map(|(x, c)| format!("{:+}·δ{x}", c.re)).collect();
    parts.join(" ")
}

fn main() -> normctl::Result<()> {
    let z = Arc::new(GroupModel::lattice(1)?);
    let at = |n: i64| GroupElement::lattice(&[n]).unwrap();
    let f = AlgebraElement::real(z.clone(), [(at(-1), 0.25), (at(0), 0.5), (at(1), 0.25)])?;
    let g = AlgebraElement::real(z.clone(), [(at(0), 1.0), (at(2), -0.5)])?;

    let fg = convolve(&f, &g, 0.0)?;
    println!("f * g = {}", show(&fg));
    println!("g* = {}", show(&involute(&g)));

    let w = Weight::new(WeightSpec::Polynomial { beta: 1.0 }, z.clone())?;
    for p in [1.0, 2.0] {
        println!("|g|_({p},w) = {:.6}", norm_p_omega(&g, &w, p)?);
    }

    // |g|_B = sup |1 - e^(2it)/2| = 1.5
    let iv = opnorm_estimate(&g, 12)?;
    println!("|g|_B in [{:.9}, {:.9}] via {}", iv.lower, iv.upper, iv.method);

    // on Heisenberg the convolution is noncommutative
    let h = Arc::new(GroupModel::heisenberg());
    let a = AlgebraElement::real(h.clone(), [(GroupElement::heisenberg(1, 0, 0), 1.0)])?;
    let b = AlgebraElement::real(h.clone(), [(GroupElement::heisenberg(0, 1, 0), 1.0)])?;
    println!("ab = {}, ba = {}", show(&convolve(&a, &b, 0.0)?), show(&convolve(&b, &a, 0.0)?));

    // A- and B-norm spectral radii of a hermitian element agree
    let herm = f.add(&involute(&g))?.add(&g)?;
    let est = spectral_radius_estimates(
        &herm,
        &[PowerNorm::A { weight: &w, p: 1.0 }, PowerNorm::B],
        12,
        &SpectralOptions::default(),
    )?;
    for e in est {
        println!("{:<28} k = {:>2}  {:.6}", e.norm, e.k_reached, e.value);
    }
    Ok(())
}
