//! Wilson loops, plaquette correlations and the fits built on them.
//!
//! Measurements reduce each configuration to a few numbers (translation and
//! plane averages). Those per-configuration values form the samples that
//! are binned and jackknifed; the fits then repeat themselves on every
//! jackknife replica to propagate errors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::action::Configuration;
use crate::error::{Error, Result};
use crate::group::{CMatrix, GroupId};
use crate::lattice::{Boundary, LatticeShape, LoopSpec};
use crate::sampler::Algorithm;
use crate::stats::{default_bin_size, jackknife, jackknife_error, Jackknife};

/// Provenance shared by every series of one chain.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeriesParams {
    pub group: GroupId,
    pub extents: Vec<usize>,
    pub boundary: Boundary,
    pub beta: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
}

/// Time series of one observable along a chain.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeasurementSeries {
    pub name: String,
    pub params: SeriesParams,
    pub cadence: u64,
    values: Vec<f64>,
    sweep_indices: Vec<u64>,
}

impl MeasurementSeries {
    pub fn new(name: impl Into<String>, params: SeriesParams, cadence: u64) -> Self {
        Self {
            name: name.into(),
            params,
            cadence,
            values: Vec::new(),
            sweep_indices: Vec::new(),
        }
    }

    /// Append a sample; sweep indices must strictly increase.
    pub fn push(&mut self, sweep: u64, value: f64) -> Result<()> {
        if self.sweep_indices.last().is_some_and(|&last| sweep <= last) {
            return Err(Error::usage(format!(
                "series `{}`: sweep {sweep} does not follow {:?}",
                self.name,
                self.sweep_indices.last()
            )));
        }
        self.sweep_indices.push(sweep);
        self.values.push(value);
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sweep_indices(&self) -> &[u64] {
        &self.sweep_indices
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Named fit parameters with jackknife errors.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FitResult {
    pub parameters: Vec<(String, f64)>,
    pub errors: Vec<f64>,
    /// Human-readable description of the data used, e.g. `T=2..4`.
    pub window: String,
    pub points: usize,
    /// chi^2 per degree of freedom with uncorrelated weights (0 if dof = 0).
    pub quality: f64,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn error(&self, name: &str) -> Option<f64> {
        let i = self.parameters.iter().position(|(n, _)| n == name)?;
        Some(self.errors[i])
    }
}

/// `(1/#P) sum_p Re Tr U_p / N`; 1 on a cold start.
pub fn plaquette_average(cfg: &Configuration) -> f64 {
    let np = cfg.geometry().plaquettes().len();
    let n = cfg.group().order() as f64;
    (0..np).map(|p| cfg.plaquette_matrix(p).trace().re).sum::<f64>() / (np as f64 * n)
}

/// Trace of the ordered link product around a closed loop.
pub fn wilson_loop_trace(cfg: &Configuration, spec: &LoopSpec) -> Result<Complex64> {
    let path = cfg.geometry().loop_links(spec)?;
    Ok(cfg.path_product(&path).trace())
}

/// `Re Tr` of the ordered link product around a closed loop.
pub fn wilson_loop(cfg: &Configuration, spec: &LoopSpec) -> Result<f64> {
    wilson_loop_trace(cfg, spec).map(|z| z.re)
}

/// Planes `(mu, nu)` with `mu < nu`; loops put `R` along `mu`, `T` along `nu`.
pub fn all_planes(ndims: usize) -> Vec<(usize, usize)> {
    (0..ndims)
        .flat_map(|mu| (mu + 1..ndims).map(move |nu| (mu, nu)))
        .collect()
}

/// Forward-neighbour table `site * ndims + axis -> site + e_axis`.
fn neighbour_table(shape: &LatticeShape) -> Vec<Option<usize>> {
    let n = shape.ndims();
    let mut out = vec![None; shape.site_count() * n];
    for (i, s) in shape.sites().enumerate() {
        for d in 0..n {
            out[i * n + d] = shape.shift(&s, d, true).map(|t| shape.site_index(&t));
        }
    }
    out
}

/// Per-configuration `R x T` loop averages (`Re Tr` and `Im Tr`, not
/// divided by `N`), indexed from 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopSample {
    pub r_max: usize,
    pub t_max: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl LoopSample {
    fn index(&self, r: usize, t: usize) -> usize {
        (r - 1) * self.t_max + (t - 1)
    }

    pub fn get(&self, r: usize, t: usize) -> f64 {
        self.re[self.index(r, t)]
    }

    pub fn get_imag(&self, r: usize, t: usize) -> f64 {
        self.im[self.index(r, t)]
    }
}

/// Measures all rectangular loops up to `r_max x t_max` in the given planes,
/// averaging over every translation that fits on the lattice.
#[derive(Clone, Debug)]
pub struct LoopMeasurer {
    planes: Vec<(usize, usize)>,
    r_max: usize,
    t_max: usize,
}

impl LoopMeasurer {
    pub fn new(shape: &LatticeShape, planes: &[(usize, usize)], r_max: usize, t_max: usize) -> Result<Self> {
        if r_max < 1 || t_max < 1 {
            return Err(Error::usage("loop sizes must be >= 1"));
        }
        if planes.is_empty() {
            return Err(Error::usage("no planes given for loop measurement"));
        }
        let ext = shape.extents();
        for &(mu, nu) in planes {
            if mu >= ext.len() || nu >= ext.len() || mu == nu {
                return Err(Error::usage(format!("invalid plane ({mu}, {nu})")));
            }
            if r_max > ext[mu] - 1 || t_max > ext[nu] - 1 {
                return Err(Error::usage(format!(
                    "loop sizes {r_max}x{t_max} exceed extents-1 in plane ({mu}, {nu}) of a {ext:?} lattice"
                )));
            }
        }
        Ok(Self {
            planes: planes.to_vec(),
            r_max,
            t_max,
        })
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn measure(&self, cfg: &Configuration) -> LoopSample {
        let shape = cfg.shape();
        let geom = cfg.geometry();
        let n = shape.ndims();
        let ns = shape.site_count();
        let next = neighbour_table(shape);
        let lmax = self.r_max.max(self.t_max);

        // lines[d][k - 1][site]: straight Wilson line of length k from site along d.
        let mut lines: Vec<Vec<Vec<Option<CMatrix>>>> = vec![Vec::new(); n];
        let mut dirs: Vec<usize> = self.planes.iter().flat_map(|&(a, b)| [a, b]).collect();
        dirs.sort_unstable();
        dirs.dedup();
        for &d in &dirs {
            let one: Vec<Option<CMatrix>> = (0..ns)
                .map(|s| geom.link_id_at(s, d).map(|id| *cfg.link_matrix(id)))
                .collect();
            let mut per_len = vec![one];
            for k in 2..=lmax {
                let prev = &per_len[k - 2];
                let cur: Vec<Option<CMatrix>> = (0..ns)
                    .map(|s| {
                        let mut end = s;
                        for _ in 0..k - 1 {
                            end = next[end * n + d]?;
                        }
                        let last = geom.link_id_at(end, d)?;
                        prev[s].as_ref().map(|m| m.mul(cfg.link_matrix(last)))
                    })
                    .collect();
                per_len.push(cur);
            }
            lines[d] = per_len;
        }

        let shift = |mut s: usize, d: usize, k: usize| -> Option<usize> {
            for _ in 0..k {
                s = next[s * n + d]?;
            }
            Some(s)
        };

        let size = self.r_max * self.t_max;
        let mut re = vec![0.0; size];
        let mut im = vec![0.0; size];
        let mut count = vec![0usize; size];
        for &(mu, nu) in &self.planes {
            for x in 0..ns {
                for r in 1..=self.r_max {
                    let Some(lr) = lines[mu][r - 1][x].as_ref() else {
                        continue;
                    };
                    let Some(xr) = shift(x, mu, r) else { continue };
                    for t in 1..=self.t_max {
                        let (Some(lt_far), Some(lt)) = (lines[nu][t - 1][xr].as_ref(), lines[nu][t - 1][x].as_ref())
                        else {
                            continue;
                        };
                        let Some(xt) = shift(x, nu, t) else { continue };
                        let Some(lr_far) = lines[mu][r - 1][xt].as_ref() else {
                            continue;
                        };
                        let a = lr.mul(lt_far);
                        let b = lt.mul(lr_far);
                        let w = a.trace_mul_adj(&b);
                        let i = (r - 1) * self.t_max + (t - 1);
                        re[i] += w.re;
                        im[i] += w.im;
                        count[i] += 1;
                    }
                }
            }
        }
        for i in 0..size {
            if count[i] > 0 {
                re[i] /= count[i] as f64;
                im[i] /= count[i] as f64;
            }
        }
        LoopSample {
            r_max: self.r_max,
            t_max: self.t_max,
            re,
            im,
        }
    }
}

/// `<W(R, T)>` with jackknife errors; entries keep their replicas so fits can
/// be repeated per replica.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopTable {
    pub r_max: usize,
    pub t_max: usize,
    pub bin_size: usize,
    pub entries: Vec<Jackknife>,
    pub imag: Vec<Jackknife>,
}

impl LoopTable {
    /// A noiseless table from exact values (zero errors, no replicas).
    pub fn exact(r_max: usize, t_max: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(r_max * t_max);
        for r in 1..=r_max {
            for t in 1..=t_max {
                entries.push(Jackknife {
                    value: f(r, t),
                    error: 0.0,
                    replicas: Vec::new(),
                });
            }
        }
        let imag = entries
            .iter()
            .map(|_| Jackknife {
                value: 0.0,
                error: 0.0,
                replicas: Vec::new(),
            })
            .collect();
        Self {
            r_max,
            t_max,
            bin_size: 1,
            entries,
            imag,
        }
    }

    pub fn get(&self, r: usize, t: usize) -> Option<&Jackknife> {
        if r == 0 || t == 0 || r > self.r_max || t > self.t_max {
            return None;
        }
        self.entries.get((r - 1) * self.t_max + (t - 1))
    }

    pub fn get_imag(&self, r: usize, t: usize) -> Option<&Jackknife> {
        if r == 0 || t == 0 || r > self.r_max || t > self.t_max {
            return None;
        }
        self.imag.get((r - 1) * self.t_max + (t - 1))
    }

    fn entry(&self, r: usize, t: usize) -> Result<&Jackknife> {
        self.get(r, t)
            .ok_or_else(|| Error::usage(format!("({r}, {t}) outside the {}x{} table", self.r_max, self.t_max)))
    }
}

/// Jackknife table from per-configuration loop samples. One bin size is used
/// for all entries so that replicas line up: `bin_size` if given, else the
/// largest `max(1, ceil(2 tau_int))` over the entries.
pub fn loop_expectation_table(samples: &[LoopSample], bin_size: Option<usize>) -> Result<LoopTable> {
    let first = samples.first().ok_or_else(|| Error::usage("no loop samples"))?;
    let (r_max, t_max) = (first.r_max, first.t_max);
    if samples.iter().any(|s| s.r_max != r_max || s.t_max != t_max) {
        return Err(Error::usage("loop samples of different sizes"));
    }
    let size = r_max * t_max;
    let columns: Vec<Vec<f64>> = (0..size).map(|i| samples.iter().map(|s| s.re[i]).collect()).collect();
    let imag_columns: Vec<Vec<f64>> = (0..size).map(|i| samples.iter().map(|s| s.im[i]).collect()).collect();
    let bin_size = bin_size.unwrap_or_else(|| columns.iter().map(|c| default_bin_size(c)).max().unwrap_or(1));
    let entries = columns
        .iter()
        .map(|c| jackknife(&[c], bin_size, |m| m[0]))
        .collect::<Result<Vec<_>>>()?;
    let imag = imag_columns
        .iter()
        .map(|c| jackknife(&[c], bin_size, |m| m[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(LoopTable {
        r_max,
        t_max,
        bin_size,
        entries,
        imag,
    })
}

/// Value and jackknife error of a derived quantity.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn replica_count(points: &[&Jackknife]) -> usize {
    let n = points.first().map_or(0, |p| p.replicas.len());
    if points.iter().all(|p| p.replicas.len() == n) {
        n
    } else {
        0
    }
}

/// `chi(R, T) = -log[W(R,T) W(R-1,T-1) / (W(R,T-1) W(R-1,T))]`.
pub fn creutz_ratio(table: &LoopTable, r: usize, t: usize) -> Result<Estimate> {
    if r < 2 || t < 2 {
        return Err(Error::usage("Creutz ratio needs R >= 2 and T >= 2"));
    }
    let w = [
        table.entry(r, t)?,
        table.entry(r - 1, t - 1)?,
        table.entry(r, t - 1)?,
        table.entry(r - 1, t)?,
    ];
    let chi = |v: [f64; 4]| -> Result<f64> {
        if v.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::FitFailure(format!(
                "Creutz ratio ({r}, {t}) undefined: nonpositive loop average (noise-dominated data)"
            )));
        }
        Ok(-(v[0] * v[1] / (v[2] * v[3])).ln())
    };
    let value = chi([w[0].value, w[1].value, w[2].value, w[3].value])?;
    let n = replica_count(&w);
    let replicas = (0..n)
        .map(|k| chi([w[0].replicas[k], w[1].replicas[k], w[2].replicas[k], w[3].replicas[k]]))
        .collect::<Result<Vec<_>>>()?;
    let error = if n >= 2 { jackknife_error(&replicas) } else { 0.0 };
    Ok(Estimate { value, error })
}

/// Weighted linear least squares; `rows` are design rows. Fails on a
/// rank-deficient design.
fn lstsq(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    let p = rows[0].len();
    let a = DMatrix::from_fn(m, p, |i, j| rows[i][j] * w[i].sqrt());
    let b = DVector::from_iterator(m, y.iter().zip(w).map(|(yi, wi)| yi * wi.sqrt()));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if m < p || !(smin > 1e-10 * smax) {
        return Err(Error::usage(format!(
            "rank-deficient fit design ({m} points, {p} parameters)"
        )));
    }
    let x = svd
        .solve(&b, 1e-12 * smax)
        .map_err(|e| Error::FitFailure(e.to_string()))?;
    Ok(x.iter().copied().collect())
}

/// Fit `g(y) = rows . params` where `g` is applied to the data, repeating the
/// fit on each jackknife replica. Weights come from the full-sample errors
/// (uniform if any error is zero).
fn jackknife_linear_fit(
    rows: &[Vec<f64>],
    data: &[&Jackknife],
    g: impl Fn(f64) -> Result<f64>,
    dg: impl Fn(f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let y = data.iter().map(|d| g(d.value)).collect::<Result<Vec<_>>>()?;
    let sig: Vec<f64> = data.iter().map(|d| (dg(d.value) * d.error).abs()).collect();
    let w: Vec<f64> = if sig.iter().all(|&s| s > 0.0 && s.is_finite()) {
        sig.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; y.len()]
    };
    let params = lstsq(rows, &y, &w)?;
    let chi2: f64 = rows
        .iter()
        .zip(&y)
        .zip(&w)
        .map(|((row, yi), wi)| {
            let fit: f64 = row.iter().zip(&params).map(|(a, b)| a * b).sum();
            wi * (yi - fit).powi(2)
        })
        .sum();
    let dof = rows.len().saturating_sub(params.len());
    let quality = if dof > 0 { chi2 / dof as f64 } else { 0.0 };
    let nrep = replica_count(data);
    let errors = if nrep >= 2 {
        let mut per_param = vec![Vec::with_capacity(nrep); params.len()];
        for k in 0..nrep {
            let yk = data.iter().map(|d| g(d.replicas[k])).collect::<Result<Vec<_>>>()?;
            let pk = lstsq(rows, &yk, &w)?;
            for (j, v) in pk.into_iter().enumerate() {
                per_param[j].push(v);
            }
        }
        per_param.iter().map(|r| jackknife_error(r)).collect()
    } else {
        vec![0.0; params.len()]
    };
    Ok((params, errors, quality))
}

fn checked_log(x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x.ln())
    } else {
        Err(Error::FitFailure(format!(
            "cannot take the log of {x:e} (noise-dominated data)"
        )))
    }
}

/// An entry is usable when positive and at least two standard errors from 0.
fn usable(j: &Jackknife) -> bool {
    j.value > 0.0 && j.value > 2.0 * j.error
}

/// `V(R)` from the slope of `-log W(R, T)` in `T`.
///
/// The window runs from `T0` to the last `T` before the signal drops below
/// 2 sigma. `T0` starts at 2 (T = 1 carries the most excited-state
/// contamination) and moves outwards until chi^2/dof <= 2; with only two
/// usable points `T0 = 1` is allowed.
pub fn static_potential(table: &LoopTable, r: usize) -> Result<FitResult> {
    if r < 1 || r > table.r_max {
        return Err(Error::usage(format!("R = {r} outside the table")));
    }
    if table.t_max < 3 {
        return Err(Error::usage("static potential needs T range >= 3"));
    }
    let mut t_end = 0;
    for t in 1..=table.t_max {
        if usable(table.entry(r, t)?) {
            t_end = t;
        } else {
            break;
        }
    }
    if t_end < 2 {
        return Err(Error::FitFailure(format!(
            "R = {r}: fewer than two usable T values (signal below 2 sigma)"
        )));
    }
    let first_start = if t_end >= 3 { 2 } else { 1 };
    let mut last_err = None;
    for t0 in first_start..t_end {
        let ts: Vec<usize> = (t0..=t_end).collect();
        let rows: Vec<Vec<f64>> = ts.iter().map(|&t| vec![t as f64, 1.0]).collect();
        let data: Vec<&Jackknife> = ts.iter().map(|&t| table.entry(r, t)).collect::<Result<_>>()?;
        match jackknife_linear_fit(&rows, &data, |x| checked_log(x).map(|l| -l), |x| 1.0 / x) {
            Ok((p, e, q)) if q <= 2.0 => {
                return Ok(FitResult {
                    parameters: vec![("V".into(), p[0]), ("offset".into(), p[1])],
                    errors: e,
                    window: format!("R={r} T={t0}..{t_end}"),
                    points: ts.len(),
                    quality: q,
                })
            }
            Ok((_, _, q)) => last_err = Some(format!("T={t0}..{t_end}: chi2/dof {q:.2}")),
            Err(e) => last_err = Some(e.to_string()),
        }
    }
    Err(Error::FitFailure(format!(
        "R = {r}: no stable T window ({})",
        last_err.unwrap_or_default()
    )))
}

/// Least-squares fit of `log W(R, T) = a - c (R + T) - d R T` over all
/// usable entries.
pub fn perimeter_area_fit(table: &LoopTable) -> Result<FitResult> {
    let mut rows = Vec::new();
    let mut data = Vec::new();
    let mut used = Vec::new();
    for r in 1..=table.r_max {
        for t in 1..=table.t_max {
            let e = table.entry(r, t)?;
            if usable(e) {
                rows.push(vec![1.0, -((r + t) as f64), -((r * t) as f64)]);
                data.push(e);
                used.push(format!("{r}x{t}"));
            }
        }
    }
    if rows.len() < 6 {
        return Err(Error::FitFailure(format!(
            "perimeter-area fit needs >= 6 usable loops, have {}",
            rows.len()
        )));
    }
    let (p, e, q) = jackknife_linear_fit(&rows, &data, checked_log, |x| 1.0 / x)?;
    Ok(FitResult {
        parameters: vec![("a".into(), p[0]), ("c".into(), p[1]), ("d".into(), p[2])],
        errors: e,
        window: used.join(","),
        points: rows.len(),
        quality: q,
    })
}

/// Per-configuration plaquette products at fixed separations along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSample {
    /// Mean normalized plaquette `Re Tr U_p / N`.
    pub plaquette: f64,
    /// Translation and plane average of `P(p) P(p + x e_axis)`, one per separation.
    pub products: Vec<f64>,
}

/// Pairs of same-plane plaquettes separated along `axis`.
#[derive(Clone, Debug)]
pub struct CorrelationMeasurer {
    separations: Vec<usize>,
    pairs: Vec<Vec<(u32, u32)>>,
}

impl CorrelationMeasurer {
    pub fn new(shape: &LatticeShape, axis: usize, separations: &[usize]) -> Result<Self> {
        let n = shape.ndims();
        if axis >= n {
            return Err(Error::usage(format!("correlation axis {axis} out of range")));
        }
        let extent = shape.extents()[axis];
        for &x in separations {
            if shape.boundary() == Boundary::Periodic && 2 * x > extent {
                return Err(Error::usage(format!("separation {x} exceeds half the extent {extent}")));
            }
            if x >= extent {
                return Err(Error::usage(format!("separation {x} exceeds the extent {extent}")));
            }
        }
        let geometry = crate::lattice::Geometry::new(shape.clone());
        let planes = all_planes(n);
        let np = planes.len();
        let mut id_of = vec![u32::MAX; shape.site_count() * np];
        for (id, p) in geometry.plaquettes().iter().enumerate() {
            let k = planes.iter().position(|&q| q == p.plane).expect("plane");
            id_of[shape.site_index(&p.site) * np + k] = id as u32;
        }
        let pairs = separations
            .iter()
            .map(|&x| {
                let mut out = Vec::new();
                for (id, p) in geometry.plaquettes().iter().enumerate() {
                    let mut s = p.site;
                    let mut ok = true;
                    for _ in 0..x {
                        match shape.shift(&s, axis, true) {
                            Some(t) => s = t,
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let k = planes.iter().position(|&q| q == p.plane).expect("plane");
                    let other = id_of[shape.site_index(&s) * np + k];
                    if other != u32::MAX {
                        out.push((id as u32, other));
                    }
                }
                out
            })
            .collect();
        Ok(Self {
            separations: separations.to_vec(),
            pairs,
        })
    }

    pub fn separations(&self) -> &[usize] {
        &self.separations
    }

    pub fn measure(&self, cfg: &Configuration) -> CorrelationSample {
        let np = cfg.geometry().plaquettes().len();
        let n = cfg.group().order() as f64;
        let values: Vec<f64> = (0..np).map(|p| cfg.plaquette_matrix(p).trace().re / n).collect();
        let plaquette = values.iter().sum::<f64>() / np as f64;
        let products = self
            .pairs
            .iter()
            .map(|pairs| {
                if pairs.is_empty() {
                    return f64::NAN;
                }
                pairs
                    .iter()
                    .map(|&(a, b)| values[a as usize] * values[b as usize])
                    .sum::<f64>()
                    / pairs.len() as f64
            })
            .collect();
        CorrelationSample { plaquette, products }
    }
}

/// Connected correlation `f(x) = <P(0) P(x)> - <P>^2` per separation.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    pub separations: Vec<usize>,
    pub bin_size: usize,
    pub values: Vec<Jackknife>,
}

/// Jackknife the connected plaquette correlation from per-configuration
/// samples (bin size from `tau_int` of the plaquette series unless given).
pub fn plaquette_correlation(
    samples: &[CorrelationSample],
    separations: &[usize],
    bin_size: Option<usize>,
) -> Result<CorrelationTable> {
    if samples.is_empty() {
        return Err(Error::usage("no correlation samples"));
    }
    if samples.iter().any(|s| s.products.len() != separations.len()) {
        return Err(Error::usage("correlation samples do not match the separations"));
    }
    let plaq: Vec<f64> = samples.iter().map(|s| s.plaquette).collect();
    let bin_size = bin_size.unwrap_or_else(|| default_bin_size(&plaq));
    let values = (0..separations.len())
        .map(|k| {
            let prod: Vec<f64> = samples.iter().map(|s| s.products[k]).collect();
            jackknife(&[&prod, &plaq], bin_size, |m| m[0] - m[1] * m[1])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationTable {
        separations: separations.to_vec(),
        bin_size,
        values,
    })
}

/// Fit `log f(x) = -x / xi + const` over the separations `x >= x_min` up to
/// the last one whose signal exceeds 2 sigma. Needs three usable points.
pub fn mass_gap_fit(f: &CorrelationTable, x_min: usize) -> Result<FitResult> {
    let mut idx: Vec<usize> = (0..f.separations.len())
        .filter(|&i| f.separations[i] >= x_min)
        .collect();
    idx.sort_by_key(|&i| f.separations[i]);
    let mut window = Vec::new();
    for i in idx {
        if usable(&f.values[i]) {
            window.push(i);
        } else {
            break;
        }
    }
    if window.len() < 3 {
        return Err(Error::FitFailure(format!(
            "mass gap fit needs >= 3 separations >= {x_min} with signal above 2 sigma, have {}",
            window.len()
        )));
    }
    let rows: Vec<Vec<f64>> = window.iter().map(|&i| vec![f.separations[i] as f64, 1.0]).collect();
    let data: Vec<&Jackknife> = window.iter().map(|&i| &f.values[i]).collect();
    let (p, e, q) = jackknife_linear_fit(&rows, &data, checked_log, |x| 1.0 / x)?;
    if !(p[0] < 0.0) {
        return Err(Error::FitFailure(format!(
            "correlation does not decay (log slope {:.3e})",
            p[0]
        )));
    }
    let xi = -1.0 / p[0];
    // d(xi)/d(slope) = 1/slope^2
    let xi_err = e[0] / (p[0] * p[0]);
    let lo = f.separations[window[0]];
    let hi = f.separations[*window.last().expect("nonempty")];
    Ok(FitResult {
        parameters: vec![("xi".into(), xi), ("slope".into(), p[0]), ("offset".into(), p[1])],
        errors: vec![xi_err, e[0], e[1]],
        window: format!("x={lo}..{hi}"),
        points: window.len(),
        quality: q,
    })
}

/// A correlation table built from exact values (zero errors).
pub fn exact_correlation(separations: &[usize], f: impl Fn(usize) -> f64) -> CorrelationTable {
    CorrelationTable {
        separations: separations.to_vec(),
        bin_size: 1,
        values: separations
            .iter()
            .map(|&x| Jackknife {
                value: f(x),
                error: 0.0,
                replicas: Vec::new(),
            })
            .collect(),
    }
}
