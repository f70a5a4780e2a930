//! Independent chains over a list of couplings.

use std::fmt::Write as _;
use std::path::PathBuf;

use super::analysis::Summary;
use super::config::ExperimentConfig;
use super::run::run;
use super::{write_atomic, SCAN_TABLE_FILE};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug)]
pub struct ScanPoint {
    pub beta: f64,
    pub seed: u64,
    pub dir: PathBuf,
    pub result: std::result::Result<Summary, String>,
}

#[derive(Debug)]
pub struct ScanOutcome {
    pub points: Vec<ScanPoint>,
    pub table: PathBuf,
}

impl ScanOutcome {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.result.is_err()).count()
    }
}

/// Subdirectory name of point `index`.
pub fn point_dir_name(index: usize, beta: f64) -> String {
    format!("beta_{index:03}_{beta}")
}

/// Run one chain per `scan.betas` entry, seeded with
/// `derive_seed(sampler.seed, index)`, each in its own subdirectory of
/// `output.dir`. A failing point is recorded in the table and the scan moves
/// on.
pub fn scan(cfg: &ExperimentConfig) -> Result<ScanOutcome> {
    let betas = match &cfg.scan {
        Some(s) => s.betas.clone(),
        None => return Err(Error::usage("scan needs a [scan] section with `betas`")),
    };
    cfg.validate()?;
    let root = cfg.output.dir.clone();
    std::fs::create_dir_all(&root)?;
    let mut points = Vec::with_capacity(betas.len());
    for (i, &beta) in betas.iter().enumerate() {
        let mut sub = cfg.clone();
        sub.scan = None;
        sub.sampler.beta = beta;
        sub.sampler.seed = derive_seed(cfg.sampler.seed, i as u64);
        sub.output.dir = root.join(point_dir_name(i, beta));
        let result = run(&sub, None).map(|o| o.analysis.summary).map_err(|e| e.to_string());
        points.push(ScanPoint {
            beta,
            seed: sub.sampler.seed,
            dir: sub.output.dir,
            result,
        });
    }
    let table = root.join(SCAN_TABLE_FILE);
    write_atomic(&table, scan_table(&points).as_bytes())?;
    Ok(ScanOutcome { points, table })
}

pub fn scan_table(points: &[ScanPoint]) -> String {
    let mut s = String::from("beta\tseed\tplaquette\tplaquette_err\tc\tc_err\td\td_err\txi\txi_err\tstatus\n");
    let nan = f64::NAN;
    for p in points {
        let (cols, status) = match &p.result {
            Ok(sum) => {
                let (pl, ple) = sum.plaquette.as_ref().map_or((nan, nan), |q| (q.mean, q.error));
                let pa = |k: &str| {
                    sum.perimeter_area
                        .as_ref()
                        .map_or((nan, nan), |f| (f.value(k).unwrap_or(nan), f.error(k).unwrap_or(nan)))
                };
                let (c, ce) = pa("c");
                let (d, de) = pa("d");
                let (xi, xie) = sum.mass_gap.as_ref().map_or((nan, nan), |f| {
                    (f.value("xi").unwrap_or(nan), f.error("xi").unwrap_or(nan))
                });
                ([pl, ple, c, ce, d, de, xi, xie], "ok".to_string())
            }
            Err(e) => ([nan; 8], format!("failed: {}", e.replace(['\t', '\n'], " "))),
        };
        let _ = write!(s, "{}\t{}", p.beta, p.seed);
        for c in cols {
            let _ = write!(s, "\t{c}");
        }
        let _ = writeln!(s, "\t{status}");
    }
    s
}
