//! One independent chain per coupling, collected into a single table.
//!
//!     cargo run --release --example beta_scan -- examples/configs/su2_scan.toml

use std::path::PathBuf;

use lattice_gauge::experiment::{self, ExperimentConfig};

fn main() -> lattice_gauge::Result<()> {
    let path: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/su2_scan.toml").into())
        .into();
    let cfg = ExperimentConfig::load(&path)?;
    let out = experiment::scan(&cfg)?;
    for p in &out.points {
        match &p.result {
            Ok(s) => {
                let pl = s.plaquette.as_ref().map_or(f64::NAN, |q| q.mean);
                println!("beta {:<4} seed {:>20}  plaquette {pl:.5}", p.beta, p.seed);
            }
            Err(e) => println!("beta {:<4} failed: {e}", p.beta),
        }
    }
    println!("table in {}", out.table.display());
    Ok(())
}
