//! One Markov chain from a config, with periodic checkpoints and resume.

use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::analysis::{analyze, write_summary, Analysis};
use super::checkpoint::Checkpoint;
use super::config::{ExperimentConfig, Start, Validated};
use super::{
    read_records, write_atomic, write_record, Provenance, Record, CHECKPOINT_FILE, CHECKPOINT_STATE_FILE, CONFIG_FILE,
    MEASUREMENTS_FILE,
};
use crate::action::Configuration;
use crate::error::{Error, Result};
use crate::lattice::Geometry;
use crate::observables::{all_planes, plaquette_average, CorrelationMeasurer, LoopMeasurer};
use crate::sampler::{hot_start_for_seed, Sampler};

/// Sampler state that the binary checkpoint has no slot for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointState {
    pub config_hash: String,
    pub sweep: u64,
    pub proposal_spread: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub sweeps: u64,
    pub analysis: Analysis,
}

/// Run (or, with `resume`, continue) the chain described by `cfg` and
/// analyse its measurements. Resuming drops records newer than the
/// checkpoint, so an interrupted run continued from its last checkpoint
/// produces the same records as an uninterrupted one.
pub fn run(cfg: &ExperimentConfig, resume: Option<&Path>) -> Result<RunOutcome> {
    let v = cfg.validate()?;
    run_validated(&v, resume)
}

pub fn run_validated(v: &Validated, resume: Option<&Path>) -> Result<RunOutcome> {
    let (sweeps, analysis) = run_inner(v, resume, None)?;
    Ok(RunOutcome {
        dir: v.raw.output.dir.clone(),
        sweeps,
        analysis: analysis.expect("complete run is analysed"),
    })
}

/// Start the chain of `cfg` and stop it after `sweep` completed sweeps,
/// leaving the output directory as an interrupted run would: records up to
/// that point and a checkpoint at `sweep`. Returns the checkpoint path.
pub fn run_interrupted(cfg: &ExperimentConfig, sweep: u64) -> Result<PathBuf> {
    let v = cfg.validate()?;
    run_inner(&v, None, Some(sweep))?;
    Ok(v.raw.output.dir.join(CHECKPOINT_FILE))
}

fn run_inner(v: &Validated, resume: Option<&Path>, stop: Option<u64>) -> Result<(u64, Option<Analysis>)> {
    let raw = &v.raw;
    let dir = raw.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let hash = raw.config_hash();
    let prov = Provenance::new(hash.clone(), raw.sampler.seed);
    let meas_path = dir.join(MEASUREMENTS_FILE);

    let mut params = v.params.clone();
    let (mut cfg, start_sweep) = match resume {
        None => {
            let cfg = match v.start {
                Start::Cold => Configuration::cold_start(&v.shape, v.group),
                Start::Hot => hot_start_for_seed(&v.shape, v.group, raw.sampler.seed),
            };
            write_atomic(&dir.join(CONFIG_FILE), raw.to_toml_string().as_bytes())?;
            std::fs::File::create(&meas_path)?;
            (cfg, 0)
        }
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            check_matches(v, &ck)?;
            let state_path = path.with_file_name(CHECKPOINT_STATE_FILE);
            if let Ok(text) = std::fs::read_to_string(&state_path) {
                let st: CheckpointState = serde_json::from_str(&text)
                    .map_err(|e| Error::Checkpoint(format!("{}: {e}", state_path.display())))?;
                if st.sweep == ck.sweep && st.config_hash == hash {
                    params.proposal_spread = st.proposal_spread;
                }
            }
            truncate_records(&meas_path, ck.sweep)?;
            if !dir.join(CONFIG_FILE).exists() {
                write_atomic(&dir.join(CONFIG_FILE), raw.to_toml_string().as_bytes())?;
            }
            (ck.config, ck.sweep)
        }
    };
    // Share one geometry between the chain and the measurers
    let geometry: Arc<Geometry> = cfg.geometry().clone();

    let sch = &raw.schedule;
    let total = sch.thermalization + sch.measurements;
    let stop_at = stop.unwrap_or(total).min(total);
    let chunk = if sch.checkpoint_every == 0 {
        u64::MAX
    } else {
        sch.checkpoint_every
    };
    let mut sampler = Sampler::new(params, raw.sampler.workers)?;

    let save = |cfg: &Configuration, sampler: &Sampler, sweep: u64| -> Result<()> {
        let ck = Checkpoint::new(cfg.clone(), raw.sampler.beta, raw.sampler.seed, sweep);
        let state = CheckpointState {
            config_hash: hash.clone(),
            sweep,
            proposal_spread: sampler.params().proposal_spread,
        };
        let json = serde_json::to_string_pretty(&state).expect("state serializes");
        write_atomic(&dir.join(CHECKPOINT_STATE_FILE), json.as_bytes())?;
        ck.save(&dir.join(CHECKPOINT_FILE))
    };

    // Thermalization
    let mut s = start_sweep;
    while s < sch.thermalization.min(stop_at) {
        let end = s.saturating_add(chunk).min(sch.thermalization).min(stop_at);
        if raw.sampler.tune_spread {
            sampler.tune_spread(&mut cfg, s..end)?;
        } else {
            sampler.run_chain(&mut cfg, s..end, 0, |_, _, _| Ok(()))?;
        }
        s = end;
        save(&cfg, &sampler, s)?;
    }

    // Measurements
    let o = &raw.observables;
    let loops = if o.loops_r_max > 0 {
        Some(LoopMeasurer::new(
            &v.shape,
            &all_planes(v.shape.ndims()),
            o.loops_r_max,
            o.loops_t_max,
        )?)
    } else {
        None
    };
    let corr = if o.correlation_separations.is_empty() {
        None
    } else {
        Some(CorrelationMeasurer::new(
            &v.shape,
            v.correlation_axis,
            &o.correlation_separations,
        )?)
    };
    let want_plaquette = o.plaquette || corr.is_some();
    let file = OpenOptions::new().append(true).open(&meas_path)?;
    let mut out = BufWriter::new(file);
    let cadence = sch.cadence;
    while s < stop_at {
        let end = s.saturating_add(chunk).min(stop_at);
        sampler.run_chain(&mut cfg, s..end, cadence, |sweep, c, acc| {
            debug_assert!(Arc::ptr_eq(c.geometry(), &geometry));
            if want_plaquette {
                write_record(&mut out, &prov.record(sweep, "plaquette", &[], plaquette_average(c)))?;
            }
            if let Some(a) = acc {
                write_record(&mut out, &prov.record(sweep, "acceptance", &[], a))?;
            }
            if let Some(m) = &loops {
                let sample = m.measure(c);
                for r in 1..=sample.r_max {
                    for t in 1..=sample.t_max {
                        let p = [("R", Value::from(r)), ("T", Value::from(t))];
                        write_record(&mut out, &prov.record(sweep, "wilson_loop", &p, sample.get(r, t)))?;
                        write_record(
                            &mut out,
                            &prov.record(sweep, "wilson_loop_imag", &p, sample.get_imag(r, t)),
                        )?;
                    }
                }
            }
            if let Some(m) = &corr {
                let sample = m.measure(c);
                for (k, &x) in m.separations().iter().enumerate() {
                    let p = [("axis", Value::from(v.correlation_axis)), ("x", Value::from(x))];
                    write_record(
                        &mut out,
                        &prov.record(sweep, "plaquette_product", &p, sample.products[k]),
                    )?;
                }
            }
            Ok(())
        })?;
        s = end;
        out.flush()?;
        save(&cfg, &sampler, s)?;
    }
    out.flush()?;
    drop(out);
    if start_sweep >= stop_at {
        save(&cfg, &sampler, start_sweep)?;
    }
    if stop_at < total {
        return Ok((s.max(start_sweep), None));
    }

    let records = read_records(&meas_path)?;
    let analysis = analyze(v, &records)?;
    write_summary(&dir, &analysis)?;
    Ok((s.max(start_sweep), Some(analysis)))
}

fn check_matches(v: &Validated, ck: &Checkpoint) -> Result<()> {
    let mut problems = Vec::new();
    if ck.config.group() != v.group {
        problems.push(format!("group {} vs {}", ck.config.group(), v.group));
    }
    if ck.config.shape() != &v.shape {
        problems.push(format!(
            "lattice {:?} {:?} vs {:?} {:?}",
            ck.config.shape().extents(),
            ck.config.shape().boundary(),
            v.shape.extents(),
            v.shape.boundary()
        ));
    }
    if ck.beta.to_bits() != v.raw.sampler.beta.to_bits() {
        problems.push(format!("beta {} vs {}", ck.beta, v.raw.sampler.beta));
    }
    if ck.seed() != v.raw.sampler.seed {
        problems.push(format!("seed {} vs {}", ck.seed(), v.raw.sampler.seed));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::usage(format!(
            "checkpoint does not match the config: {}",
            problems.join("; ")
        )))
    }
}

/// Keep only records taken before sweep `sweep` (i.e. covered by a
/// checkpoint after `sweep` completed sweeps).
fn truncate_records(path: &Path, sweep: u64) -> Result<()> {
    if !path.exists() {
        std::fs::File::create(path)?;
        return Ok(());
    }
    // Keep surviving lines verbatim rather than re-encoding them
    let text = std::fs::read_to_string(path)?;
    let mut buf = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: Record =
            serde_json::from_str(line).map_err(|e| Error::usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if r.sweep < sweep {
            buf.push_str(line);
            buf.push('\n');
        }
    }
    write_atomic(path, buf.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, extra_schedule: &str) -> ExperimentConfig {
        let text = format!(
            r#"
[model]
group = "U1"
extents = [4, 4]

[sampler]
beta = 1.0
algorithm = "metropolis"
seed = 21

[schedule]
thermalization = 10
measurements = 40
cadence = 2
{extra_schedule}

[observables]
loops_r_max = 2
loops_t_max = 2
correlation_separations = [0, 1]

[output]
dir = "{}"
"#,
            dir.display()
        );
        ExperimentConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn run_writes_records_and_summary() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config(tmp.path(), "");
        let out = run(&c, None).unwrap();
        assert_eq!(out.sweeps, 50);
        let recs = read_records(&tmp.path().join(MEASUREMENTS_FILE)).unwrap();
        // 20 measured sweeps x (plaquette + acceptance + 2*4 loops + 2 products)
        assert_eq!(recs.len(), 20 * 12);
        assert!(recs.iter().all(|r| r.params["config_hash"] == c.config_hash()));
        assert_eq!(recs[0].sweep, 11);
        assert!(tmp.path().join("summary.json").exists());
        assert!(tmp.path().join(CHECKPOINT_FILE).exists());
        let ck = Checkpoint::load(&tmp.path().join(CHECKPOINT_FILE)).unwrap();
        assert_eq!(ck.sweep, 50);
    }

    #[test]
    fn resume_reproduces_uninterrupted_records() {
        let a = tempfile::tempdir().unwrap();
        run(&config(a.path(), ""), None).unwrap();

        // Interrupted after 30 sweeps, with a stray record past the checkpoint
        let b = tempfile::tempdir().unwrap();
        let c = config(b.path(), "checkpoint_every = 7");
        let ck = run_interrupted(&c, 30).unwrap();
        let mut m = OpenOptions::new()
            .append(true)
            .open(b.path().join(MEASUREMENTS_FILE))
            .unwrap();
        writeln!(m, r#"{{"sweep":31,"name":"plaquette","params":{{}},"value":9.0}}"#).unwrap();
        drop(m);
        run(&c, Some(&ck)).unwrap();

        let ra = std::fs::read(a.path().join(MEASUREMENTS_FILE)).unwrap();
        let rb = std::fs::read(b.path().join(MEASUREMENTS_FILE)).unwrap();
        let strip = |bytes: &[u8]| {
            let recs: Vec<super::super::Record> = String::from_utf8(bytes.to_vec())
                .unwrap()
                .lines()
                .map(|l| serde_json::from_str(l).unwrap())
                .collect();
            recs.into_iter().map(|r| (r.sweep, r.name, r.value)).collect::<Vec<_>>()
        };
        assert_eq!(strip(&ra), strip(&rb));
    }

    #[test]
    fn resume_rejects_mismatched_checkpoint() {
        let a = tempfile::tempdir().unwrap();
        run(&config(a.path(), ""), None).unwrap();
        let mut other = config(a.path(), "");
        other.sampler.beta = 2.0;
        let err = run(&other, Some(&a.path().join(CHECKPOINT_FILE))).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
