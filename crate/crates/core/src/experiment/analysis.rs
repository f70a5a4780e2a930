//! Turning a measurement stream into estimates and fits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::Validated;
use super::{write_atomic, Provenance, Record, CODE_VERSION, SUMMARY_FILE};
use crate::error::{Error, Result};
use crate::group::GroupId;
use crate::observables::{
    creutz_ratio, loop_expectation_table, mass_gap_fit, perimeter_area_fit, plaquette_correlation, static_potential,
    CorrelationSample, CorrelationTable, FitResult, LoopSample, LoopTable,
};
use crate::oracle::{exact_tiny_lattice, ExactObservable, MAX_ENUMERATED_LINKS};
use crate::stats::{mean, summarize, thermalization_cut};

/// Separations below this are left out of the mass-gap fit by default.
pub const MASS_GAP_X_MIN: usize = 1;

/// An exact-vs-sampled comparison counts as agreeing within this many sigma.
pub const EXACT_CHECK_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, Serialize)]
pub struct PlaquetteSummary {
    pub mean: f64,
    pub error: f64,
    pub tau_int: f64,
    pub tau_window: usize,
    pub tau_unreliable: bool,
    pub bin_size: usize,
    pub cut: usize,
    pub cut_flagged: bool,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopEntry {
    pub r: usize,
    pub t: usize,
    pub value: f64,
    pub error: f64,
    pub imag: f64,
    pub imag_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CreutzEntry {
    pub r: usize,
    pub t: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationEntry {
    pub x: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactCheck {
    pub exact: f64,
    pub estimate: f64,
    pub error: f64,
    pub deviation_sigmas: f64,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub provenance: Provenance,
    pub group: GroupId,
    pub extents: Vec<usize>,
    pub boundary: String,
    pub beta: f64,
    pub algorithm: String,
    pub measurements: usize,
    pub last_sweep: Option<u64>,
    pub acceptance: Option<f64>,
    pub plaquette: Option<PlaquetteSummary>,
    pub loop_bin_size: Option<usize>,
    pub loops: Vec<LoopEntry>,
    pub creutz: Vec<CreutzEntry>,
    pub potential: Vec<FitResult>,
    pub perimeter_area: Option<FitResult>,
    pub correlation_bin_size: Option<usize>,
    pub correlation: Vec<CorrelationEntry>,
    pub mass_gap: Option<FitResult>,
    pub exact_check: Option<ExactCheck>,
    pub warnings: Vec<String>,
}

/// Per-sweep values gathered from records.
#[derive(Default)]
struct SweepValues {
    plaquette: Option<f64>,
    acceptance: Option<f64>,
    loops: BTreeMap<(usize, usize), (f64, f64)>,
    products: BTreeMap<usize, f64>,
}

fn param_usize(r: &Record, key: &str) -> Result<usize> {
    r.params
        .get(key)
        .and_then(|v| v.as_u64())
        .map(|v| v as usize)
        .ok_or_else(|| Error::usage(format!("record `{}` at sweep {} lacks `{key}`", r.name, r.sweep)))
}

/// Everything derived from a run's records. Also returns the tables so that
/// `report` can write its files without refitting.
#[derive(Debug)]
pub struct Analysis {
    pub summary: Summary,
    pub loop_table: Option<LoopTable>,
    pub correlation: Option<CorrelationTable>,
}

pub fn analyze(v: &Validated, records: &[Record]) -> Result<Analysis> {
    let raw = &v.raw;
    let o = &raw.observables;
    let mut warnings = Vec::new();
    let mut by_sweep: BTreeMap<u64, SweepValues> = BTreeMap::new();
    for r in records {
        let e = by_sweep.entry(r.sweep).or_default();
        match r.name.as_str() {
            "plaquette" => e.plaquette = Some(r.value),
            "acceptance" => e.acceptance = Some(r.value),
            "wilson_loop" => {
                e.loops
                    .entry((param_usize(r, "R")?, param_usize(r, "T")?))
                    .or_insert((0.0, 0.0))
                    .0 = r.value;
            }
            "wilson_loop_imag" => {
                e.loops
                    .entry((param_usize(r, "R")?, param_usize(r, "T")?))
                    .or_insert((0.0, 0.0))
                    .1 = r.value;
            }
            "plaquette_product" => {
                e.products.insert(param_usize(r, "x")?, r.value);
            }
            other => warnings.push(format!("ignored record `{other}` at sweep {}", r.sweep)),
        }
    }
    let sweeps: Vec<&SweepValues> = by_sweep.values().collect();
    let plaq: Vec<f64> = sweeps.iter().filter_map(|s| s.plaquette).collect();

    // One cut for every series, taken from the plaquette
    let cut = if o.auto_cut && !plaq.is_empty() {
        let c = thermalization_cut(&plaq);
        if c.flagged {
            warnings.push(format!(
                "thermalization not detected; discarded the first {} samples",
                c.cut
            ));
        }
        c.cut
    } else {
        0
    };
    let kept = &sweeps[cut.min(sweeps.len())..];

    let acc: Vec<f64> = kept.iter().filter_map(|s| s.acceptance).collect();
    let acceptance = (!acc.is_empty()).then(|| mean(&acc));

    let plaquette = if plaq.is_empty() {
        None
    } else {
        match summarize(&plaq, o.bin_size, o.auto_cut) {
            Ok(s) => {
                if s.tau_int.unreliable {
                    warnings.push("plaquette tau_int estimate is unreliable".into());
                }
                Some(PlaquetteSummary {
                    mean: s.mean,
                    error: s.error,
                    tau_int: s.tau_int.tau,
                    tau_window: s.tau_int.window,
                    tau_unreliable: s.tau_int.unreliable,
                    bin_size: s.bin_size,
                    cut: s.cut.cut,
                    cut_flagged: s.cut.flagged,
                    samples: s.samples,
                })
            }
            Err(e) => {
                warnings.push(format!("plaquette: {e}"));
                None
            }
        }
    };

    let mut loops = Vec::new();
    let mut creutz = Vec::new();
    let mut potential = Vec::new();
    let mut perimeter_area = None;
    let mut loop_table = None;
    if o.loops_r_max > 0 && !kept.is_empty() {
        let (rm, tm) = (o.loops_r_max, o.loops_t_max);
        let mut samples = Vec::with_capacity(kept.len());
        for s in kept {
            let mut re = Vec::with_capacity(rm * tm);
            let mut im = Vec::with_capacity(rm * tm);
            for r in 1..=rm {
                for t in 1..=tm {
                    let &(a, b) = s
                        .loops
                        .get(&(r, t))
                        .ok_or_else(|| Error::usage(format!("missing loop {r}x{t} in measurements")))?;
                    re.push(a);
                    im.push(b);
                }
            }
            samples.push(LoopSample {
                r_max: rm,
                t_max: tm,
                re,
                im,
            });
        }
        match loop_expectation_table(&samples, o.bin_size) {
            Ok(table) => {
                for r in 1..=rm {
                    for t in 1..=tm {
                        let e = table.get(r, t).expect("in range");
                        let i = table.get_imag(r, t).expect("in range");
                        loops.push(LoopEntry {
                            r,
                            t,
                            value: e.value,
                            error: e.error,
                            imag: i.value,
                            imag_error: i.error,
                        });
                    }
                }
                for r in 2..=rm {
                    for t in 2..=tm {
                        match creutz_ratio(&table, r, t) {
                            Ok(c) => creutz.push(CreutzEntry {
                                r,
                                t,
                                value: c.value,
                                error: c.error,
                            }),
                            Err(e) => warnings.push(format!("creutz({r},{t}): {e}")),
                        }
                    }
                }
                if tm >= 3 {
                    for r in 1..=rm {
                        match static_potential(&table, r) {
                            Ok(f) => potential.push(f),
                            Err(e) => warnings.push(format!("potential: {e}")),
                        }
                    }
                }
                match perimeter_area_fit(&table) {
                    Ok(f) => perimeter_area = Some(f),
                    Err(e) => warnings.push(format!("perimeter-area: {e}")),
                }
                loop_table = Some(table);
            }
            Err(e) => warnings.push(format!("loops: {e}")),
        }
    }

    let mut correlation = Vec::new();
    let mut mass_gap = None;
    let mut corr_table = None;
    if !o.correlation_separations.is_empty() && !kept.is_empty() {
        let seps = &o.correlation_separations;
        let mut samples = Vec::with_capacity(kept.len());
        for s in kept {
            let plaquette = s
                .plaquette
                .ok_or_else(|| Error::usage("correlation needs the plaquette record of each sweep"))?;
            let products = seps
                .iter()
                .map(|x| {
                    s.products
                        .get(x)
                        .copied()
                        .ok_or_else(|| Error::usage(format!("missing plaquette product at x = {x}")))
                })
                .collect::<Result<Vec<_>>>()?;
            samples.push(CorrelationSample { plaquette, products });
        }
        match plaquette_correlation(&samples, seps, o.bin_size) {
            Ok(table) => {
                for (k, &x) in table.separations.iter().enumerate() {
                    correlation.push(CorrelationEntry {
                        x,
                        value: table.values[k].value,
                        error: table.values[k].error,
                    });
                }
                match mass_gap_fit(&table, MASS_GAP_X_MIN) {
                    Ok(f) => mass_gap = Some(f),
                    Err(e) => warnings.push(format!("mass gap: {e}")),
                }
                corr_table = Some(table);
            }
            Err(e) => warnings.push(format!("correlation: {e}")),
        }
    }

    let exact_check = if o.exact_check {
        exact_check(v, plaquette.as_ref(), &mut warnings)
    } else {
        None
    };

    let summary = Summary {
        provenance: Provenance {
            config_hash: raw.config_hash(),
            seed: raw.sampler.seed,
            version: CODE_VERSION.to_string(),
        },
        group: v.group,
        extents: v.shape.extents().to_vec(),
        boundary: raw.model.boundary.clone(),
        beta: raw.sampler.beta,
        algorithm: v.params.algorithm.name().to_string(),
        measurements: sweeps.len(),
        last_sweep: by_sweep.keys().next_back().copied(),
        acceptance,
        plaquette,
        loop_bin_size: loop_table.as_ref().map(|t| t.bin_size),
        loops,
        creutz,
        potential,
        perimeter_area,
        correlation_bin_size: corr_table.as_ref().map(|t| t.bin_size),
        correlation,
        mass_gap,
        exact_check,
        warnings,
    };
    Ok(Analysis {
        summary,
        loop_table,
        correlation: corr_table,
    })
}

fn exact_check(v: &Validated, plaquette: Option<&PlaquetteSummary>, warnings: &mut Vec<String>) -> Option<ExactCheck> {
    let links = v.shape.enumerate_links().len();
    if v.group != GroupId::Z2 || links > MAX_ENUMERATED_LINKS {
        warnings.push(format!(
            "exact_check skipped: enumeration needs Z2 with at most {MAX_ENUMERATED_LINKS} links \
             (have {} with {links})",
            v.group
        ));
        return None;
    }
    let p = plaquette?;
    match exact_tiny_lattice(
        v.group,
        &v.shape,
        v.raw.sampler.beta,
        &ExactObservable::PlaquetteAverage,
    ) {
        Ok(exact) => {
            let dev = (p.mean - exact).abs() / p.error;
            let agree = dev <= EXACT_CHECK_SIGMAS || (p.error == 0.0 && p.mean == exact);
            if !agree {
                warnings.push(format!(
                    "exact_check failed: {} vs exact {exact} ({dev:.1} sigma)",
                    p.mean
                ));
            }
            Some(ExactCheck {
                exact,
                estimate: p.mean,
                error: p.error,
                deviation_sigmas: dev,
                agree,
            })
        }
        Err(e) => {
            warnings.push(format!("exact_check: {e}"));
            None
        }
    }
}

/// Write `summary.json`, `loops.tsv` and `correlation.tsv` into `dir`.
pub fn write_summary(dir: &Path, a: &Analysis) -> Result<()> {
    let json = serde_json::to_string_pretty(&a.summary)
        .map_err(|e| Error::Numerical(format!("cannot encode summary: {e}")))?;
    write_atomic(&dir.join(SUMMARY_FILE), format!("{json}\n").as_bytes())?;
    if !a.summary.loops.is_empty() {
        let mut s = String::from("R\tT\tW\tW_err\tW_imag\tW_imag_err\n");
        for e in &a.summary.loops {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.r, e.t, e.value, e.error, e.imag, e.imag_error
            );
        }
        write_atomic(&dir.join("loops.tsv"), s.as_bytes())?;
    }
    if !a.summary.correlation.is_empty() {
        let mut s = String::from("x\tf\tf_err\n");
        for e in &a.summary.correlation {
            let _ = writeln!(s, "{}\t{}\t{}", e.x, e.value, e.error);
        }
        write_atomic(&dir.join("correlation.tsv"), s.as_bytes())?;
    }
    Ok(())
}
