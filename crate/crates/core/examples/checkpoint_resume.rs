//! Interrupt a chain, resume it from its checkpoint and confirm that the
//! measurements match an uninterrupted run record for record.
//!
//!     cargo run --release --example checkpoint_resume

use lattice_gauge::experiment::{self, ExperimentConfig, MEASUREMENTS_FILE};

const CONFIG: &str = r#"
[model]
group = "SU2"
extents = [4, 4, 4]

[sampler]
beta = 1.2
algorithm = "overrelax_mix"
seed = 808

[schedule]
thermalization = 20
measurements = 200
checkpoint_every = 25

[observables]
loops_r_max = 2
loops_t_max = 2

[output]
dir = "unused"
"#;

fn main() -> lattice_gauge::Result<()> {
    let root = std::env::temp_dir().join("lattice_gauge_resume_demo");
    let mut cfg = ExperimentConfig::from_toml_str(CONFIG)?;

    cfg.output.dir = root.join("straight");
    let _ = std::fs::remove_dir_all(&cfg.output.dir);
    let straight = experiment::run(&cfg, None)?;

    cfg.output.dir = root.join("interrupted");
    let _ = std::fs::remove_dir_all(&cfg.output.dir);
    let ckpt = experiment::run_interrupted(&cfg, 120)?;
    println!("stopped with a checkpoint at {}", ckpt.display());
    let resumed = experiment::run(&cfg, Some(&ckpt))?;

    let a = std::fs::read(straight.dir.join(MEASUREMENTS_FILE))?;
    let b = std::fs::read(resumed.dir.join(MEASUREMENTS_FILE))?;
    println!("measurement files identical: {}", a == b);
    Ok(())
}
