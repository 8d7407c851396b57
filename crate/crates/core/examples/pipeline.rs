//! End-to-end pipeline from a JSON run configuration.
//!
//! `cargo run --example pipeline -- crates/core/configs/locally_finite.json`

use std::path::PathBuf;

use normctl::analysis::pipeline;
use normctl::config::RunConfig;

fn main() -> normctl::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/lattice2_polynomial.json"));
    let cfg = RunConfig::load(&path)?;
    let rep = pipeline(&cfg)?;

    for stage in &rep.stages {
        println!("{:<12} {:?}", stage.name, stage.status);
    }
    if let Some(cert) = &rep.certificate {
        println!("theta = {:.6}, C = {:.6}", cert.theta, cert.c);
    }
    for el in &rep.elements {
        match &el.report {
            Some(r) => println!("{:<12} |a^-1|_A = {:.9}, nu = {:.4}, ln product = {:.4e}", el.name, r.actual, r.nu, r.product.ln_value),
            None => println!("{:<12} {}", el.name, el.error.as_deref().unwrap_or("")),
        }
    }
    println!("result {:?}{}", rep.status, rep.halted_at.map(|s| format!(" (halted at {s})")).unwrap_or_default());
    Ok(())
}
