//! Command-line front end: `lgt run | scan | oracle | report`.
//!
//! Exit status is 0 on success, 1 for usage and config errors, 2 for
//! numerical failures and failed validation checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lattice_gauge::experiment::{self, ExperimentConfig, OracleQuery};
use lattice_gauge::{Boundary, Error, GroupId};

#[derive(Parser)]
#[command(name = "lgt", version, about = "Lattice gauge theory Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run one chain per beta listed in the config's [scan] section.
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print reference values as JSON lines.
    Oracle {
        #[arg(long)]
        group: GroupId,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// w1, loop_table, enumeration or bch.
        #[arg(long)]
        quantity: String,
        #[arg(long, default_value_t = 4)]
        r_max: usize,
        #[arg(long, default_value_t = 4)]
        t_max: usize,
        /// Comma-separated lattice extents for `enumeration`.
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        extents: Vec<usize>,
        #[arg(long, default_value = "open")]
        boundary: String,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 4)]
        ndims: usize,
    },
    /// Regenerate plot-ready tables from a run or scan directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("lgt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Run { config, resume } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = experiment::run(&cfg, resume.as_deref())?;
            let s = &out.analysis.summary;
            println!("output: {}", out.dir.display());
            println!("sweeps: {}  measurements: {}", out.sweeps, s.measurements);
            if let Some(p) = &s.plaquette {
                println!(
                    "plaquette: {} +- {}  (tau_int {:.2}, bin {})",
                    p.mean, p.error, p.tau_int, p.bin_size
                );
            }
            if let Some(f) = &s.perimeter_area {
                for name in ["c", "d"] {
                    println!(
                        "{name}: {} +- {}",
                        f.value(name).unwrap_or(f64::NAN),
                        f.error(name).unwrap_or(f64::NAN)
                    );
                }
            }
            if let Some(f) = &s.mass_gap {
                println!(
                    "xi: {} +- {}",
                    f.value("xi").unwrap_or(f64::NAN),
                    f.error("xi").unwrap_or(f64::NAN)
                );
            }
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(x) = &s.exact_check {
                println!(
                    "exact check: {} vs {} ({:.2} sigma)",
                    x.estimate, x.exact, x.deviation_sigmas
                );
                if !x.agree {
                    eprintln!("lgt: exact check failed");
                    return Ok(2);
                }
            }
            Ok(0)
        }
        Command::Scan { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = experiment::scan(&cfg)?;
            print!("{}", std::fs::read_to_string(&out.table)?);
            let failed = out.failures();
            if failed > 0 {
                eprintln!("lgt: {failed} of {} scan points failed", out.points.len());
                return Ok(2);
            }
            Ok(0)
        }
        Command::Oracle {
            group,
            beta,
            quantity,
            r_max,
            t_max,
            extents,
            boundary,
            epsilon,
            ndims,
        } => {
            let boundary = match boundary.as_str() {
                "open" => Boundary::Open,
                "periodic" => Boundary::Periodic,
                other => return Err(Error::Usage(format!("unknown boundary `{other}`"))),
            };
            let q = OracleQuery {
                group,
                beta,
                quantity,
                r_max,
                t_max,
                extents,
                boundary,
                epsilon,
                ndims,
            };
            let mut stdout = std::io::stdout().lock();
            for r in experiment::oracle_query(&q)? {
                experiment::write_record(&mut stdout, &r)?;
            }
            Ok(0)
        }
        Command::Report { dir } => {
            for f in experiment::report(&dir)? {
                println!("{}", f.display());
            }
            Ok(0)
        }
    }
}
