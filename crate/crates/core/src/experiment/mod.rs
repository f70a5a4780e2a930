//! File-driven experiments: configs, chains with checkpoints, scans,
//! reports and oracle queries.
//!
//! A run directory holds
//! - `config.toml`: the config as run;
//! - `measurements.jsonl`: one [`Record`] per line;
//! - `checkpoint.bin` (+ `checkpoint.json` with the tuned proposal spread);
//! - `summary.json`, `loops.tsv`, `correlation.tsv`: analysis results.
//!
//! `report` adds `potential.dat`, `correlation.dat` and `area.dat`.

pub mod analysis;
pub mod checkpoint;
pub mod config;
pub mod oracle_cmd;
pub mod report;
pub mod run;
pub mod scan;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub use analysis::{analyze, Summary};
pub use checkpoint::Checkpoint;
pub use config::ExperimentConfig;
pub use oracle_cmd::{oracle_query, OracleQuery};
pub use report::report;
pub use run::{run, run_interrupted, RunOutcome};
pub use scan::{scan, ScanOutcome};

pub const CONFIG_FILE: &str = "config.toml";
pub const MEASUREMENTS_FILE: &str = "measurements.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CHECKPOINT_STATE_FILE: &str = "checkpoint.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCAN_TABLE_FILE: &str = "scan.tsv";

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One measured number. `params` carries observable parameters (e.g. `R`,
/// `T`) and the provenance keys `config_hash`, `seed`, `version`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub sweep: u64,
    pub name: String,
    pub params: Map<String, Value>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self {
            config_hash,
            seed,
            version: CODE_VERSION.to_string(),
        }
    }

    pub fn record(&self, sweep: u64, name: &str, extra: &[(&str, Value)], value: f64) -> Record {
        let mut params = Map::new();
        for (k, v) in extra {
            params.insert((*k).to_string(), v.clone());
        }
        params.insert("config_hash".into(), Value::from(self.config_hash.clone()));
        params.insert("seed".into(), Value::from(self.seed));
        params.insert("version".into(), Value::from(self.version.clone()));
        Record {
            sweep,
            name: name.to_string(),
            params,
            value,
        }
    }
}

pub fn write_record(w: &mut impl Write, r: &Record) -> Result<()> {
    serde_json::to_writer(&mut *w, r).map_err(|e| Error::Numerical(format!("cannot encode record: {e}")))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let f = std::fs::File::open(path).map_err(|e| Error::usage(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Record =
            serde_json::from_str(&line).map_err(|e| Error::usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(r);
    }
    Ok(out)
}

/// Write `contents` through a temporary file and rename.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = tmp_path(path);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// `path` with `.tmp` appended to the file name.
pub(crate) fn tmp_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}
