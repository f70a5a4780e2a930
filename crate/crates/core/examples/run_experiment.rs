//! Run a chain described by a config file, then write the report tables.
//! This is what `lgt run` and `lgt report` do.
//!
//!     cargo run --release --example run_experiment -- examples/configs/u1_2d.toml

use std::path::PathBuf;

use lattice_gauge::experiment::{self, ExperimentConfig};

fn main() -> lattice_gauge::Result<()> {
    let path: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/u1_2d.toml").into())
        .into();
    let cfg = ExperimentConfig::load(&path)?;
    println!("config hash {}", cfg.config_hash());

    let out = experiment::run(&cfg, None)?;
    let s = &out.analysis.summary;
    println!("{} sweeps into {}", out.sweeps, out.dir.display());
    if let Some(p) = &s.plaquette {
        println!("plaquette {:.6} +- {:.6} (tau_int {:.2})", p.mean, p.error, p.tau_int);
    }
    if let Some(f) = &s.perimeter_area {
        println!(
            "string tension d = {:.4} +- {:.4}",
            f.value("d").unwrap(),
            f.error("d").unwrap()
        );
    }
    if let Some(x) = &s.exact_check {
        println!("exact {:.6}, estimate {:.6} +- {:.6}", x.exact, x.estimate, x.error);
    }
    for w in &s.warnings {
        println!("warning: {w}");
    }
    for f in experiment::report(&out.dir)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
