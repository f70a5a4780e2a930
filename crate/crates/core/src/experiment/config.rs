//! Experiment files: `key = value` lines under `[section]` headers (TOML).
//!
//! ```toml
//! [model]
//! group = "SU2"
//! extents = [6, 6, 6, 6]
//! boundary = "periodic"
//!
//! [sampler]
//! beta = 0.5
//! algorithm = "heatbath"
//! seed = 7
//!
//! [schedule]
//! thermalization = 200
//! measurements = 2000
//! cadence = 2
//!
//! [observables]
//! loops_r_max = 3
//! loops_t_max = 3
//! correlation_separations = [0, 1, 2, 3]
//!
//! [output]
//! dir = "out/su2-b0.5"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::GroupId;
use crate::lattice::{Boundary, LatticeShape};
use crate::sampler::{Algorithm, SamplerParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub observables: ObservablesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ndims: Option<usize>,
    pub extents: Vec<usize>,
    #[serde(default = "default_boundary")]
    pub boundary: String,
}

fn default_boundary() -> String {
    "periodic".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub beta: f64,
    #[serde(default = "default_algorithm")]
    pub algorithm: String,
    #[serde(default = "default_spread")]
    pub proposal_spread: f64,
    #[serde(default)]
    pub or_ratio: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads per chain; does not change any result.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// `cold` (all identity) or `hot` (Haar random).
    #[serde(default = "default_start")]
    pub start: String,
    /// Tune the Metropolis spread toward 50% acceptance during thermalization.
    #[serde(default)]
    pub tune_spread: bool,
}

fn default_algorithm() -> String {
    "heatbath".into()
}
fn default_spread() -> f64 {
    0.5
}
fn default_workers() -> usize {
    1
}
fn default_start() -> String {
    "cold".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub thermalization: u64,
    /// Sweeps after thermalization.
    pub measurements: u64,
    #[serde(default = "one")]
    pub cadence: u64,
    /// Save a checkpoint every this many sweeps (0: only at the end).
    #[serde(default)]
    pub checkpoint_every: u64,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    #[serde(default = "yes")]
    pub plaquette: bool,
    #[serde(default)]
    pub loops_r_max: usize,
    #[serde(default)]
    pub loops_t_max: usize,
    #[serde(default)]
    pub correlation_separations: Vec<usize>,
    /// Defaults to the last axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_axis: Option<usize>,
    /// Compare the plaquette mean with exact enumeration (Z2, <= 24 links).
    #[serde(default)]
    pub exact_check: bool,
    /// Jackknife bin size; default `max(1, ceil(2 tau_int))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_size: Option<usize>,
    /// Apply the automatic thermalization cut to measured series.
    #[serde(default)]
    pub auto_cut: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub betas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// Start configuration of a fresh chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Cold,
    Hot,
}

/// A config after validation, with the parsed enums.
#[derive(Clone, Debug)]
pub struct Validated {
    pub raw: ExperimentConfig,
    pub group: GroupId,
    pub shape: LatticeShape,
    pub params: SamplerParams,
    pub start: Start,
    pub correlation_axis: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = message
                .split('`')
                .nth(1)
                .filter(|_| message.starts_with("unknown field") || message.starts_with("missing field"))
                .unwrap_or("<file>")
                .to_string();
            Error::config(key, message)
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hash over everything that can change results: the worker count and
    /// output directory are excluded.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.sampler.workers = 1;
        c.output.dir = PathBuf::new();
        let canonical = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<Validated> {
        let group: GroupId = self
            .model
            .group
            .parse()
            .map_err(|e: Error| Error::config("model.group", e.to_string()))?;
        let boundary = match self.model.boundary.as_str() {
            "periodic" => Boundary::Periodic,
            "open" => Boundary::Open,
            other => {
                return Err(Error::config(
                    "model.boundary",
                    format!("expected `periodic` or `open`, got `{other}`"),
                ))
            }
        };
        if let Some(n) = self.model.ndims {
            if n != self.model.extents.len() {
                return Err(Error::config(
                    "model.ndims",
                    format!("{n} does not match {} extents", self.model.extents.len()),
                ));
            }
        }
        let shape = LatticeShape::new(&self.model.extents, boundary)
            .map_err(|e| Error::config("model.extents", e.to_string()))?;

        let algorithm: Algorithm = self
            .sampler
            .algorithm
            .parse()
            .map_err(|e: Error| Error::config("sampler.algorithm", e.to_string()))?;
        let s = &self.sampler;
        if !(s.beta >= 0.0 && s.beta.is_finite()) {
            return Err(Error::config(
                "sampler.beta",
                format!("must be finite and >= 0, got {}", s.beta),
            ));
        }
        if !(s.proposal_spread > 0.0 && s.proposal_spread <= 2.0) {
            return Err(Error::config(
                "sampler.proposal_spread",
                format!("must lie in (0, 2], got {}", s.proposal_spread),
            ));
        }
        if s.workers == 0 {
            return Err(Error::config("sampler.workers", "must be >= 1"));
        }
        if s.tune_spread && algorithm != Algorithm::Metropolis {
            return Err(Error::config("sampler.tune_spread", "only applies to metropolis"));
        }
        let start = match s.start.as_str() {
            "cold" => Start::Cold,
            "hot" => Start::Hot,
            other => {
                return Err(Error::config(
                    "sampler.start",
                    format!("expected `cold` or `hot`, got `{other}`"),
                ))
            }
        };
        let mut params = SamplerParams::new(s.beta, algorithm, s.seed).with_spread(s.proposal_spread);
        if let Some(r) = s.or_ratio {
            params = params.with_or_ratio(r);
        }
        params
            .validate(group)
            .map_err(|e| Error::config("sampler.or_ratio", e.to_string()))?;
        if algorithm == Algorithm::Heatbath && group == GroupId::SU3 {
            // SU(3) heat bath runs through the SU(2) subgroups; nothing to reject
        }

        let sch = &self.schedule;
        if sch.cadence == 0 {
            return Err(Error::config("schedule.cadence", "must be >= 1"));
        }
        if sch.measurements < sch.cadence {
            return Err(Error::config("schedule.measurements", "no measurement would be taken"));
        }

        let o = &self.observables;
        let ext = shape.extents();
        let min_ext = *ext.iter().min().expect("nonempty");
        if (o.loops_r_max == 0) != (o.loops_t_max == 0) {
            return Err(Error::config(
                "observables.loops_t_max",
                "set both loops_r_max and loops_t_max, or neither",
            ));
        }
        if o.loops_r_max >= min_ext {
            return Err(Error::config(
                "observables.loops_r_max",
                format!("{} must be below the smallest extent {min_ext}", o.loops_r_max),
            ));
        }
        if o.loops_t_max >= min_ext {
            return Err(Error::config(
                "observables.loops_t_max",
                format!("{} must be below the smallest extent {min_ext}", o.loops_t_max),
            ));
        }
        let axis = o.correlation_axis.unwrap_or(ext.len() - 1);
        if axis >= ext.len() {
            return Err(Error::config(
                "observables.correlation_axis",
                format!("axis {axis} out of range"),
            ));
        }
        for &x in &o.correlation_separations {
            let ok = match boundary {
                Boundary::Periodic => 2 * x <= ext[axis],
                Boundary::Open => x < ext[axis] - 1,
            };
            if !ok {
                return Err(Error::config(
                    "observables.correlation_separations",
                    format!("separation {x} too large for extent {}", ext[axis]),
                ));
            }
        }
        if o.bin_size == Some(0) {
            return Err(Error::config("observables.bin_size", "must be >= 1"));
        }
        if let Some(scan) = &self.scan {
            if scan.betas.is_empty() {
                return Err(Error::config("scan.betas", "empty scan list"));
            }
            if scan.betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                return Err(Error::config("scan.betas", "values must be positive"));
            }
            if scan.betas.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config("scan.betas", "values must be strictly increasing"));
            }
        }
        Ok(Validated {
            raw: self.clone(),
            group,
            shape,
            params,
            start,
            correlation_axis: axis,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
group = "Z2"
extents = [2, 2]
boundary = "open"

[sampler]
beta = 0.7
seed = 3

[schedule]
thermalization = 10
measurements = 100

[observables]
exact_check = true

[output]
dir = "out"
"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let v = c.validate().unwrap();
        assert_eq!(v.group, GroupId::Z2);
        assert_eq!(v.shape.boundary(), Boundary::Open);
        assert_eq!(v.params.algorithm, Algorithm::Heatbath);
        assert_eq!(c.schedule.cadence, 1);
        let round = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let mut b = a.clone();
        b.sampler.workers = 8;
        b.output.dir = "elsewhere".into();
        assert_eq!(a.config_hash(), b.config_hash());
        b.sampler.seed = 4;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    fn key_of(text: &str) -> String {
        let err = ExperimentConfig::from_toml_str(text).and_then(|c| c.validate().map(|_| ()));
        match err {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_name_the_offending_key() {
        assert_eq!(key_of(&MINIMAL.replace("beta = 0.7", "beta = -1.0")), "sampler.beta");
        assert_eq!(key_of(&MINIMAL.replace("\"Z2\"", "\"SO3\"")), "model.group");
        assert_eq!(
            key_of(&MINIMAL.replace("exact_check = true", "loops_r_max = 2\nloops_t_max = 1")),
            "observables.loops_r_max"
        );
        assert_eq!(key_of(&MINIMAL.replace("seed = 3", "seed = 3\ncolour = 1")), "colour");
        assert_eq!(key_of(&format!("{MINIMAL}\n[scan]\nbetas = []\n")), "scan.betas");
        assert_eq!(
            key_of(&format!("{MINIMAL}\n[scan]\nbetas = [0.5, 0.3]\n")),
            "scan.betas"
        );
    }
}
