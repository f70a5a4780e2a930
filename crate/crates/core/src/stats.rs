//! Error analysis for correlated Monte Carlo series.
//!
//! `tau_int` follows the convention where an uncorrelated series has
//! `tau_int = 1/2`, so the variance of the mean is `2 tau_int var / n`.

use crate::error::{Error, Result};

/// Summation window factor for the automatic windowing procedure.
pub const WINDOW_FACTOR: f64 = 5.0;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (0 for fewer than two points).
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Normalized autocorrelation at lag `t`.
pub fn autocorrelation(x: &[f64], t: usize) -> f64 {
    let n = x.len();
    if t >= n {
        return 0.0;
    }
    let m = mean(x);
    let c0: f64 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return if t == 0 { 1.0 } else { 0.0 };
    }
    let ct: f64 = (0..n - t).map(|i| (x[i] - m) * (x[i + t] - m)).sum::<f64>() / (n - t) as f64;
    ct / c0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauInt {
    pub tau: f64,
    pub window: usize,
    /// Set when the window could not be closed or the series is shorter than
    /// about fifty autocorrelation times.
    pub unreliable: bool,
}

/// Integrated autocorrelation time by automatic windowing: the smallest
/// window `W` with `W >= 5 tau(W)`.
pub fn tau_int(x: &[f64]) -> TauInt {
    let n = x.len();
    // Too short, or constant: the autocorrelation is undefined.
    if n < 4 || variance(x) == 0.0 {
        return TauInt {
            tau: 0.5,
            window: 0,
            unreliable: true,
        };
    }
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let mut tau = 0.5;
    let max_w = n / 2;
    for w in 1..=max_w {
        let ct = (0..n - w).map(|i| d[i] * d[i + w]).sum::<f64>() / (n - w) as f64;
        tau += ct / c0;
        if w as f64 >= WINDOW_FACTOR * tau {
            let tau = tau.max(0.5);
            return TauInt {
                tau,
                window: w,
                unreliable: (n as f64) < 50.0 * tau,
            };
        }
    }
    TauInt {
        tau: tau.max(0.5),
        window: max_w,
        unreliable: true,
    }
}

/// Bin size used when none is given: `max(1, ceil(2 tau_int))`.
pub fn default_bin_size(x: &[f64]) -> usize {
    ((2.0 * tau_int(x).tau).ceil() as usize).max(1)
}

/// A series reduced to means of consecutive, non-overlapping bins. A trailing
/// partial bin is dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedSeries {
    pub bin_size: usize,
    pub bins: Vec<f64>,
}

impl BinnedSeries {
    pub fn new(x: &[f64], bin_size: usize) -> Result<Self> {
        if bin_size == 0 {
            return Err(Error::usage("bin size must be positive"));
        }
        let bins: Vec<f64> = x.chunks_exact(bin_size).map(mean).collect();
        if bins.len() < 2 {
            return Err(Error::usage(format!(
                "{} samples give fewer than two bins of size {bin_size}",
                x.len()
            )));
        }
        Ok(Self { bin_size, bins })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.bins)
    }

    /// Standard error of the mean from the bin scatter.
    pub fn error(&self) -> f64 {
        (variance(&self.bins) / self.bins.len() as f64).sqrt()
    }
}

/// Jackknife estimate with its leave-one-bin-out replicas.
#[derive(Clone, Debug, PartialEq)]
pub struct Jackknife {
    pub value: f64,
    pub error: f64,
    pub replicas: Vec<f64>,
}

impl Jackknife {
    /// Combine replicas with the full-sample value.
    pub fn from_replicas(value: f64, replicas: Vec<f64>) -> Self {
        let error = jackknife_error(&replicas);
        Self { value, error, replicas }
    }
}

/// `sqrt((n - 1)/n sum (r_i - rbar)^2)`.
pub fn jackknife_error(replicas: &[f64]) -> f64 {
    let n = replicas.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(replicas);
    ((n - 1) as f64 / n as f64 * replicas.iter().map(|r| (r - m) * (r - m)).sum::<f64>()).sqrt()
}

/// Jackknife of a function of the means of several equally long series.
/// `f` receives one mean per series; the replicas drop one bin of every
/// series at a time.
pub fn jackknife<F>(series: &[&[f64]], bin_size: usize, f: F) -> Result<Jackknife>
where
    F: Fn(&[f64]) -> f64,
{
    let binned = series
        .iter()
        .map(|s| BinnedSeries::new(s, bin_size))
        .collect::<Result<Vec<_>>>()?;
    let nb = binned[0].len();
    if binned.iter().any(|b| b.len() != nb) {
        return Err(Error::usage("jackknife series have different lengths"));
    }
    let sums: Vec<f64> = binned.iter().map(|b| b.bins.iter().sum()).collect();
    let full: Vec<f64> = sums.iter().map(|s| s / nb as f64).collect();
    let value = f(&full);
    let mut args = vec![0.0; binned.len()];
    let replicas = (0..nb)
        .map(|i| {
            for (k, b) in binned.iter().enumerate() {
                args[k] = (sums[k] - b.bins[i]) / (nb - 1) as f64;
            }
            f(&args)
        })
        .collect();
    Ok(Jackknife::from_replicas(value, replicas))
}

/// Jackknife mean of a single series.
pub fn jackknife_mean(x: &[f64], bin_size: usize) -> Result<Jackknife> {
    jackknife(&[x], bin_size, |m| m[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThermalizationCut {
    /// Number of leading samples to discard.
    pub cut: usize,
    /// True when no candidate passed and the cut fell back to half the series.
    pub flagged: bool,
}

/// Discard the shortest prefix after which the two halves of the remainder
/// agree within two combined standard errors (errors corrected for the
/// autocorrelation of the later half). Candidates step through the first half of the series in
/// twentieths.
pub fn thermalization_cut(x: &[f64]) -> ThermalizationCut {
    let n = x.len();
    if n < 8 {
        return ThermalizationCut { cut: 0, flagged: true };
    }
    let step = (n / 20).max(1);
    let mut cut = 0;
    while cut <= n / 2 {
        let rest = &x[cut..];
        let (a, b) = rest.split_at(rest.len() / 2);
        // tau from the later half only: a transient in the first half would
        // masquerade as autocorrelation and inflate its own error bar.
        let tau = tau_int(b).tau;
        let err = |s: &[f64]| (2.0 * tau * variance(s) / s.len() as f64).sqrt();
        let diff = (mean(a) - mean(b)).abs();
        let sigma = (err(a).powi(2) + err(b).powi(2)).sqrt();
        if diff <= 2.0 * sigma {
            return ThermalizationCut { cut, flagged: false };
        }
        cut += step;
    }
    ThermalizationCut {
        cut: n / 2,
        flagged: true,
    }
}

/// Mean and error of a series after the thermalization cut, with the bin size
/// chosen from `tau_int` unless given.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSummary {
    pub mean: f64,
    pub error: f64,
    pub tau_int: TauInt,
    pub bin_size: usize,
    pub cut: ThermalizationCut,
    pub samples: usize,
}

pub fn summarize(x: &[f64], bin_size: Option<usize>, apply_cut: bool) -> Result<SeriesSummary> {
    let cut = if apply_cut {
        thermalization_cut(x)
    } else {
        ThermalizationCut { cut: 0, flagged: false }
    };
    let kept = &x[cut.cut..];
    let tau = tau_int(kept);
    let bin_size = bin_size.unwrap_or(((2.0 * tau.tau).ceil() as usize).max(1));
    let jk = jackknife_mean(kept, bin_size)?;
    Ok(SeriesSummary {
        mean: jk.value,
        error: jk.error,
        tau_int: tau,
        bin_size,
        cut,
        samples: kept.len(),
    })
}
