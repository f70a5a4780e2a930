//! Plot-ready tables regenerated from a run (or scan) directory.
//!
//! - `potential.dat`: `R V V_err chi2_dof window`
//! - `correlation.dat`: `x f f_err log_f log_f_err`
//! - `area.dat`: `R T area perimeter log_W log_W_err log_W_plus_cP`, where the
//!   last column adds back the fitted perimeter term `c (R + T)` so that it
//!   is linear in the area with slope `-d`.
//!
//! Output depends only on the measurement records, so reruns are
//! byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::analysis::{analyze, Analysis};
use super::config::ExperimentConfig;
use super::{read_records, write_atomic, CONFIG_FILE, MEASUREMENTS_FILE};
use crate::error::{Error, Result};

/// Write report files for `dir`, or for each run directory directly below it.
/// Returns the files written.
pub fn report(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::usage(format!("{} is not a directory", dir.display())));
    }
    if dir.join(MEASUREMENTS_FILE).exists() {
        return report_run(dir);
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MEASUREMENTS_FILE).exists())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::usage(format!(
            "no run outputs in {} (expected {MEASUREMENTS_FILE} here or in subdirectories)",
            dir.display()
        )));
    }
    let mut files = Vec::new();
    for d in subdirs {
        files.extend(report_run(&d)?);
    }
    Ok(files)
}

fn report_run(dir: &Path) -> Result<Vec<PathBuf>> {
    let cfg_path = dir.join(CONFIG_FILE);
    if !cfg_path.exists() {
        return Err(Error::usage(format!("{} is missing", cfg_path.display())));
    }
    let v = ExperimentConfig::load(&cfg_path)?.validate()?;
    let records = read_records(&dir.join(MEASUREMENTS_FILE))?;
    if records.is_empty() {
        return Err(Error::usage(format!("{} has no measurements", dir.display())));
    }
    let a = analyze(&v, &records)?;
    write_tables(dir, &a)
}

pub fn write_tables(dir: &Path, a: &Analysis) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let s = &a.summary;
    if !s.loops.is_empty() {
        let mut text = String::from("# R\tV\tV_err\tchi2_dof\twindow\n");
        for f in &s.potential {
            let r = f
                .window
                .split_whitespace()
                .next()
                .and_then(|w| w.strip_prefix("R="))
                .unwrap_or("?");
            let _ = writeln!(
                text,
                "{r}\t{}\t{}\t{}\t{}",
                f.value("V").unwrap_or(f64::NAN),
                f.error("V").unwrap_or(f64::NAN),
                f.quality,
                f.window.replace(' ', "_")
            );
        }
        let p = dir.join("potential.dat");
        write_atomic(&p, text.as_bytes())?;
        files.push(p);

        let c = s.perimeter_area.as_ref().and_then(|f| f.value("c"));
        let mut text = String::from("# R\tT\tarea\tperimeter\tlog_W\tlog_W_err\tlog_W_plus_cP\n");
        for e in &s.loops {
            let (lw, lwe) = if e.value > 0.0 {
                (e.value.ln(), e.error / e.value)
            } else {
                (f64::NAN, f64::NAN)
            };
            let per = (e.r + e.t) as f64;
            let sub = c.map_or(f64::NAN, |c| lw + c * per);
            let _ = writeln!(text, "{}\t{}\t{}\t{}\t{lw}\t{lwe}\t{sub}", e.r, e.t, e.r * e.t, per);
        }
        let p = dir.join("area.dat");
        write_atomic(&p, text.as_bytes())?;
        files.push(p);
    }
    if !s.correlation.is_empty() {
        let mut text = String::from("# x\tf\tf_err\tlog_f\tlog_f_err\n");
        for e in &s.correlation {
            let (lf, lfe) = if e.value > 0.0 {
                (e.value.ln(), e.error / e.value)
            } else {
                (f64::NAN, f64::NAN)
            };
            let _ = writeln!(text, "{}\t{}\t{}\t{lf}\t{lfe}", e.x, e.value, e.error);
        }
        let p = dir.join("correlation.dat");
        write_atomic(&p, text.as_bytes())?;
        files.push(p);
    }
    Ok(files)
}
