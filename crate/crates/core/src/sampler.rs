//! Markov chain Monte Carlo for `dmu ~ exp(-beta S) dHaar`.
//!
//! Links are updated one checkerboard class at a time. Within a class no two
//! links share a plaquette, so the new values can be computed from a shared
//! read-only configuration and written back afterwards. Each link update draws
//! from its own counter-based stream keyed by `(seed, sweep index, link id)`,
//! which makes every chain independent of the worker count.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;

use crate::action::Configuration;
use crate::error::{Error, Result};
use crate::group::{quaternion_coords, quaternion_coords_block, quaternion_matrix, CMatrix, GroupElement, GroupId};
use crate::rng::RandomStream;

/// Cap on rejection-sampling iterations before a numerical error is raised.
pub const REJECTION_CAP: u32 = 1_000_000;

/// Links are projected back onto the group after every this many sweeps.
pub const REUNITARIZE_EVERY: u64 = 100;

/// Sweep index reserved for the hot-start stream.
pub const HOT_START_SWEEP: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Metropolis,
    Heatbath,
    OverrelaxMix,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Metropolis => "metropolis",
            Algorithm::Heatbath => "heatbath",
            Algorithm::OverrelaxMix => "overrelax_mix",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metropolis" => Ok(Algorithm::Metropolis),
            "heatbath" => Ok(Algorithm::Heatbath),
            "overrelax_mix" => Ok(Algorithm::OverrelaxMix),
            _ => Err(Error::usage(format!(
                "unknown algorithm `{s}` (expected metropolis, heatbath or overrelax_mix)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplerParams {
    pub beta: f64,
    pub algorithm: Algorithm,
    pub proposal_spread: f64,
    /// Overrelaxation sweeps per heat-bath sweep (`overrelax_mix` only).
    pub or_ratio: u32,
    pub seed: u64,
}

impl SamplerParams {
    pub fn new(beta: f64, algorithm: Algorithm, seed: u64) -> Self {
        Self {
            beta,
            algorithm,
            proposal_spread: 0.5,
            or_ratio: if algorithm == Algorithm::OverrelaxMix { 1 } else { 0 },
            seed,
        }
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        self.proposal_spread = spread;
        self
    }

    pub fn with_or_ratio(mut self, or_ratio: u32) -> Self {
        self.or_ratio = or_ratio;
        self
    }

    pub fn validate(&self, group: GroupId) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::usage(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.proposal_spread > 0.0 && self.proposal_spread <= 2.0) {
            return Err(Error::usage(format!(
                "proposal_spread must lie in (0, 2], got {}",
                self.proposal_spread
            )));
        }
        if self.algorithm == Algorithm::OverrelaxMix
            && self.or_ratio > 0
            && !matches!(group, GroupId::U1 | GroupId::SU2)
        {
            return Err(Error::UnsupportedAlgorithm {
                algorithm: "overrelaxation",
                group,
            });
        }
        Ok(())
    }
}

/// Summary of one chain segment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChainStats {
    pub sweeps: u64,
    pub measurements: u64,
    /// Mean Metropolis acceptance over the segment (`None` for other algorithms).
    pub acceptance: Option<f64>,
}

/// A configured sampler; `workers > 1` runs each checkerboard class on a
/// rayon pool of that size.
pub struct Sampler {
    params: SamplerParams,
    pool: Option<rayon::ThreadPool>,
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sampler")
            .field("params", &self.params)
            .field("workers", &self.workers())
            .finish()
    }
}

impl Sampler {
    pub fn new(params: SamplerParams, workers: usize) -> Result<Self> {
        if !(params.beta >= 0.0) || !(params.proposal_spread > 0.0 && params.proposal_spread <= 2.0) {
            return Err(Error::usage("invalid sampler parameters"));
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::usage(format!("cannot build worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { params, pool })
    }

    pub fn params(&self) -> &SamplerParams {
        &self.params
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Update every link of `class` from its own stream; returns the number of
    /// accepted moves reported by `f`.
    fn update_classes<F>(&self, cfg: &mut Configuration, f: F) -> Result<u64>
    where
        F: Fn(&Configuration, usize) -> Result<(CMatrix, bool)> + Sync,
    {
        let geometry = cfg.geometry().clone();
        let classes = geometry.checkerboard_classes();
        let mut accepted = 0;
        for class in classes {
            let shared: &Configuration = cfg;
            let results: Vec<Result<(CMatrix, bool)>> = match &self.pool {
                Some(pool) => pool.install(|| class.par_iter().map(|&id| f(shared, id)).collect()),
                None => class.iter().map(|&id| f(shared, id)).collect(),
            };
            for (&id, r) in class.iter().zip(results) {
                let (m, acc) = r?;
                cfg.set_link_matrix(id, m);
                accepted += acc as u64;
            }
        }
        Ok(accepted)
    }

    /// One Metropolis sweep with proposals `U' = R U`, `R` from
    /// `random_near_identity`. Returns the acceptance rate.
    pub fn metropolis_sweep(&self, cfg: &mut Configuration, sweep_index: u64) -> Result<f64> {
        let group = cfg.group();
        let (beta, spread, seed) = (self.params.beta, self.params.proposal_spread, self.params.seed);
        let accepted = self.update_classes(cfg, |c, id| {
            let mut rng = RandomStream::for_link(seed, sweep_index, id as u64);
            let r = GroupElement::random_near_identity(&mut rng, group, spread)?;
            let old = c.link_matrix(id);
            let proposal = r.matrix().mul(old);
            let delta = c.local_action_delta_id(id, &proposal);
            let u = rng.uniform();
            if delta <= 0.0 || u < (-beta * delta).exp() {
                Ok((proposal, true))
            } else {
                Ok((*old, false))
            }
        })?;
        Ok(accepted as f64 / cfg.link_count() as f64)
    }

    /// One exact heat-bath sweep (Z2, U(1), SU(2)); SU(3) dispatches to the
    /// SU(2)-subgroup sweep.
    pub fn heatbath_sweep(&self, cfg: &mut Configuration, sweep_index: u64) -> Result<()> {
        let group = cfg.group();
        if group == GroupId::SU3 {
            return self.su3_subgroup_sweep(cfg, sweep_index);
        }
        let (beta, seed) = (self.params.beta, self.params.seed);
        self.update_classes(cfg, |c, id| {
            let mut rng = RandomStream::for_link(seed, sweep_index, id as u64);
            let staple = c.staple_sum(id);
            Ok((*heatbath_link(&staple, group, beta, &mut rng)?.matrix(), true))
        })?;
        Ok(())
    }

    /// SU(3) update: for each link, heat-bath steps in the three SU(2)
    /// subgroups acting on index pairs (0,1), (0,2), (1,2).
    pub fn su3_subgroup_sweep(&self, cfg: &mut Configuration, sweep_index: u64) -> Result<()> {
        if cfg.group() != GroupId::SU3 {
            return Err(Error::UnsupportedAlgorithm {
                algorithm: "su3_subgroup_sweep",
                group: cfg.group(),
            });
        }
        let (beta, seed) = (self.params.beta, self.params.seed);
        self.update_classes(cfg, |c, id| {
            let mut rng = RandomStream::for_link(seed, sweep_index, id as u64);
            let staple = c.staple_sum(id);
            Ok((su3_subgroup_update(c.link_matrix(id), &staple, beta, &mut rng)?, true))
        })?;
        Ok(())
    }

    /// Microcanonical reflection of every link (U(1) and SU(2) only).
    ///
    /// Each reflection is an involution for fixed staples, so the classes
    /// always run in the same order: reversing it on alternate sweeps would
    /// make consecutive sweeps cancel. The update draws no random numbers and
    /// ignores `_sweep_index`.
    pub fn overrelax_sweep(&self, cfg: &mut Configuration, _sweep_index: u64) -> Result<()> {
        let group = cfg.group();
        if !matches!(group, GroupId::U1 | GroupId::SU2) {
            return Err(Error::UnsupportedAlgorithm {
                algorithm: "overrelaxation",
                group,
            });
        }
        self.update_classes(cfg, |c, id| {
            let staple = c.staple_sum(id);
            Ok((overrelax_link(c.link_matrix(id), &staple, group), true))
        })?;
        Ok(())
    }

    /// One update step of the configured algorithm. Returns the Metropolis
    /// acceptance rate where applicable.
    pub fn update(&self, cfg: &mut Configuration, sweep_index: u64) -> Result<Option<f64>> {
        match self.params.algorithm {
            Algorithm::Metropolis => self.metropolis_sweep(cfg, sweep_index).map(Some),
            Algorithm::Heatbath => self.heatbath_sweep(cfg, sweep_index).map(|_| None),
            Algorithm::OverrelaxMix => {
                self.heatbath_sweep(cfg, sweep_index)?;
                for k in 0..self.params.or_ratio as u64 {
                    self.overrelax_sweep(cfg, sweep_index.wrapping_mul(u64::from(self.params.or_ratio)) + k)?;
                }
                Ok(None)
            }
        }
    }

    /// Apply `sweeps`, calling `hook(s, cfg, acceptance_of_s)` after every
    /// sweep `s` with `(s + 1) % cadence == 0` (never when `cadence == 0`). Links are
    /// reunitarized after every sweep `s` with `(s + 1) % 100 == 0`.
    pub fn run_chain<H>(
        &self,
        cfg: &mut Configuration,
        sweeps: Range<u64>,
        cadence: u64,
        mut hook: H,
    ) -> Result<ChainStats>
    where
        H: FnMut(u64, &Configuration, Option<f64>) -> Result<()>,
    {
        self.params.validate(cfg.group())?;
        let mut stats = ChainStats::default();
        let mut acc_sum = 0.0;
        for s in sweeps {
            let acc = self.update(cfg, s)?;
            if let Some(a) = acc {
                acc_sum += a;
            }
            stats.sweeps += 1;
            if (s + 1) % REUNITARIZE_EVERY == 0 {
                cfg.reunitarize()?;
            }
            if cadence > 0 && (s + 1) % cadence == 0 {
                hook(s, cfg, acc)?;
                stats.measurements += 1;
            }
        }
        if self.params.algorithm == Algorithm::Metropolis && stats.sweeps > 0 {
            stats.acceptance = Some(acc_sum / stats.sweeps as f64);
        }
        Ok(stats)
    }

    /// Thermalization-only Metropolis spread tuning toward 50% acceptance.
    /// Returns the tuned spread, which is also stored in the parameters.
    pub fn tune_spread(&mut self, cfg: &mut Configuration, sweeps: Range<u64>) -> Result<f64> {
        for s in sweeps {
            let acc = self.metropolis_sweep(cfg, s)?;
            let next = self.params.proposal_spread * (acc - 0.5).exp();
            self.params.proposal_spread = next.clamp(1e-4, 2.0);
            if (s + 1) % REUNITARIZE_EVERY == 0 {
                cfg.reunitarize()?;
            }
        }
        Ok(self.params.proposal_spread)
    }
}

/// Hot start drawn from the stream reserved for it.
pub fn hot_start_for_seed(shape: &crate::lattice::LatticeShape, group: GroupId, seed: u64) -> Configuration {
    let mut rng = RandomStream::new([seed, HOT_START_SWEEP], [0, 0]);
    Configuration::hot_start(shape, group, &mut rng)
}

/// Sample one link from `exp(beta Re Tr(U A)) dHaar(U)` where `A` is the
/// staple sum. Supports Z2, U(1) and SU(2).
pub fn heatbath_link(staple_sum: &CMatrix, group: GroupId, beta: f64, rng: &mut RandomStream) -> Result<GroupElement> {
    if !staple_sum.is_finite() {
        return Err(Error::Numerical("non-finite staple sum".into()));
    }
    match group {
        GroupId::Z2 => {
            let s = staple_sum.get(0, 0).re;
            let p_plus = 1.0 / (1.0 + (-2.0 * beta * s).exp());
            Ok(GroupElement::z2(rng.uniform() < p_plus))
        }
        GroupId::U1 => {
            let a = staple_sum.get(0, 0);
            let phi = von_mises(beta * a.norm(), rng)?;
            Ok(GroupElement::u1(phi - a.arg()))
        }
        GroupId::SU2 => {
            let a = quaternion_coords(staple_sum);
            Ok(GroupElement::from_matrix_unchecked(
                GroupId::SU2,
                su2_heatbath_from_coords(a, beta, rng)?,
            ))
        }
        GroupId::SU3 => Err(Error::UnsupportedAlgorithm {
            algorithm: "heatbath_link (use su3_subgroup_sweep)",
            group,
        }),
    }
}

/// Given quaternion coordinates `a` of `A = k W`, sample `U` with density
/// `exp(beta Re Tr(U A))`.
fn su2_heatbath_from_coords(a: [f64; 4], beta: f64, rng: &mut RandomStream) -> Result<CMatrix> {
    let k = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let x = su2_sample_tilted(2.0 * beta * k, rng)?;
    if k < 1e-300 {
        return Ok(x);
    }
    let w = quaternion_matrix([a[0] / k, a[1] / k, a[2] / k, a[3] / k]);
    Ok(x.mul_adj(&w))
}

/// SU(2) element with density `exp(alpha a0) dHaar`: `a0` has density
/// `sqrt(1 - a0^2) exp(alpha a0)` on `[-1, 1]`, the rest is a uniform
/// direction on the 2-sphere.
pub fn su2_sample_tilted(alpha: f64, rng: &mut RandomStream) -> Result<CMatrix> {
    let a0 = sample_a0(alpha, rng)?;
    let r = (1.0 - a0 * a0).max(0.0).sqrt();
    let z = 2.0 * rng.uniform() - 1.0;
    let phi = TAU * rng.uniform();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Ok(quaternion_matrix([a0, r * s * phi.cos(), r * s * phi.sin(), r * z]))
}

/// Rejection sampler: propose from `exp(alpha x)` on `[-1, 1]` by inversion,
/// accept with probability `sqrt(1 - x^2)`.
fn sample_a0(alpha: f64, rng: &mut RandomStream) -> Result<f64> {
    for _ in 0..REJECTION_CAP {
        let u = rng.uniform();
        let x = if alpha < 1e-8 {
            2.0 * u - 1.0
        } else {
            let e = (-2.0 * alpha).exp();
            1.0 + (e + u * (1.0 - e)).ln() / alpha
        };
        if rng.uniform() < (1.0 - x * x).max(0.0).sqrt() {
            return Ok(x.clamp(-1.0, 1.0));
        }
    }
    Err(Error::Numerical(format!(
        "SU(2) heat-bath rejection loop exceeded {REJECTION_CAP} iterations (alpha = {alpha})"
    )))
}

/// Von Mises deviate with mean 0 and concentration `kappa` (Best-Fisher).
pub fn von_mises(kappa: f64, rng: &mut RandomStream) -> Result<f64> {
    if kappa < 1e-8 {
        return Ok(TAU * rng.uniform() - PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    for _ in 0..REJECTION_CAP {
        let z = (PI * rng.uniform()).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2 = rng.uniform_open0();
        let u3 = rng.uniform();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return Ok(if u3 < 0.5 { -theta } else { theta });
        }
    }
    Err(Error::Numerical(format!(
        "von Mises rejection loop exceeded {REJECTION_CAP} iterations (kappa = {kappa})"
    )))
}

/// Cabibbo-Marinari update of one SU(3) link given its staple sum.
pub fn su3_subgroup_update(u: &CMatrix, staple_sum: &CMatrix, beta: f64, rng: &mut RandomStream) -> Result<CMatrix> {
    if !staple_sum.is_finite() {
        return Err(Error::Numerical("non-finite staple sum".into()));
    }
    let mut u = *u;
    for (p, q) in [(0, 1), (0, 2), (1, 2)] {
        let w = u.mul(staple_sum);
        let a = quaternion_coords_block(&w, p, q);
        let r = su2_heatbath_from_coords(a, beta, rng)?;
        u = embed_su2(&r, p, q).mul(&u);
    }
    Ok(u)
}

fn embed_su2(r: &CMatrix, p: usize, q: usize) -> CMatrix {
    let mut m = CMatrix::identity(3);
    m.set(p, p, r.get(0, 0));
    m.set(p, q, r.get(0, 1));
    m.set(q, p, r.get(1, 0));
    m.set(q, q, r.get(1, 1));
    m
}

/// Reflection `U -> W^dagger U^dagger W^dagger` with `W` the normalized staple
/// sum; preserves `Re Tr(U A)` and is an involution.
fn overrelax_link(u: &CMatrix, staple_sum: &CMatrix, group: GroupId) -> CMatrix {
    match group {
        GroupId::U1 => {
            let a = staple_sum.get(0, 0);
            if a.norm() < 1e-300 {
                return *u;
            }
            let w = (a / a.norm()).conj();
            CMatrix::scalar(w * w * u.get(0, 0).conj())
        }
        _ => {
            let a = quaternion_coords(staple_sum);
            let k = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if k < 1e-300 {
                return *u;
            }
            let w = quaternion_matrix([a[0] / k, a[1] / k, a[2] / k, a[3] / k]);
            w.adj_mul(&u.adjoint()).mul_adj(&w)
        }
    }
}
