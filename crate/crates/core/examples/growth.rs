//! Ball growth of the supported groups.
//!
//! `cargo run --example growth -- 10`

use normctl::groups::{GroupElement, GroupModel};

fn main() -> normctl::Result<()> {
    let n_max: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);

    for model in [GroupModel::lattice(1)?, GroupModel::lattice(2)?, GroupModel::lattice(3)?, GroupModel::heisenberg()] {
        let rep = model.growth_report(n_max)?;
        println!(
            "{:<12} |U^{n_max}| = {:>8}  fitted exponent {:.3} (expected {:?})",
            rep.family,
            rep.balls[n_max as usize],
            rep.fitted_exponent,
            model.growth_order()
        );
    }

    // word lengths in the Heisenberg group: the central generator costs 4
    let h = GroupModel::heisenberg();
    for x in [GroupElement::heisenberg(1, 1, 0), GroupElement::heisenberg(0, 0, 1), GroupElement::heisenberg(0, 0, 4)] {
        println!("|{x}| = {}", h.word_length(&x)?);
    }

    // the locally finite group has no word metric; lengths are chain indices
    let lf = GroupModel::locally_finite();
    let x = GroupElement::dyadic([0, 5])?;
    println!("{x} lies in G_{}", lf.word_length(&x)?);
    Ok(())
}
