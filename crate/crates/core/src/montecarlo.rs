//! Monte Carlo estimation of `P(N)` and of the `G_a` distributions.
//!
//! Trials are split into fixed-size chunks; chunk `k` draws channels and
//! phases from its own substreams keyed by `(seed, k)`. Chunks run on the
//! current rayon pool and only integer success counts are combined, so the
//! result is bit-identical for any number of workers.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{Method, ProbabilityEstimate};
use crate::fading::{backscatter_amplitude, direct_power, sample_channels, FadingError, PhasePolicy};
use crate::geometry::DeploymentLayout;
use crate::rng::{substream, StreamKind};
use crate::specfun::{gamma_cdf, gamma_pdf, gaussian_cdf, gaussian_pdf, GammaParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid Monte Carlo config: {0}")]
    InvalidConfig(&'static str),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("histogram needs at least one bin and a non-empty finite range")]
    InvalidHistogram,
    #[error("invalid reference distribution: {0}")]
    InvalidReference(&'static str),
    #[error(transparent)]
    Fading(#[from] FadingError),
}

/// Run count, seed and chunking of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub runs: u64,
    pub seed: u64,
    /// Trials per independent substream.
    pub chunk: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            runs: 100_000,
            seed: 1,
            chunk: 10_000,
        }
    }
}

impl McConfig {
    pub fn new(runs: u64, seed: u64, chunk: u64) -> Result<Self, McError> {
        let cfg = Self { runs, seed, chunk };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), McError> {
        if self.runs == 0 {
            return Err(McError::InvalidConfig("runs must be at least 1"));
        }
        if self.chunk == 0 {
            return Err(McError::InvalidConfig("chunk must be at least 1"));
        }
        Ok(())
    }

    fn chunks(&self) -> impl IndexedParallelIterator<Item = (u64, u64)> + '_ {
        let n = self.runs.div_ceil(self.chunk) as usize;
        (0..n).into_par_iter().map(move |k| {
            let k = k as u64;
            let start = k * self.chunk;
            (k, self.chunk.min(self.runs - start))
        })
    }
}

/// Binomial standard error `sqrt(p(1−p)/runs)`.
pub fn binomial_stderr(p: f64, runs: u64) -> f64 {
    (p * (1.0 - p) / runs as f64).sqrt()
}

/// Fraction of trials with `η²|A_r|² ≥ |A_0|²`.
pub fn estimate_p(
    layout: &DeploymentLayout,
    policy: &PhasePolicy,
    mc: &McConfig,
) -> Result<ProbabilityEstimate, McError> {
    mc.validate()?;
    let eta2 = layout.eta() * layout.eta();
    let successes = mc
        .chunks()
        .map(|(k, len)| -> Result<u64, McError> {
            let mut channels = substream(mc.seed, k, StreamKind::Channels);
            let mut phases = substream(mc.seed, k, StreamKind::Phases);
            let mut draw = sample_channels(&mut channels, layout.n_tags());
            let mut hits = 0u64;
            for trial in 0..len {
                if trial > 0 {
                    draw.resample(&mut channels);
                }
                let ar = backscatter_amplitude(&draw, layout, policy, &mut phases)?;
                if eta2 * ar.norm_sqr() >= direct_power(&draw, layout) {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p = successes as f64 / mc.runs as f64;
    Ok(ProbabilityEstimate {
        value: p,
        method: Method::Mc,
        stderr: Some(binomial_stderr(p, mc.runs)),
        runs: Some(mc.runs),
        seed: Some(mc.seed),
        clamped: false,
    })
}

/// I.i.d. samples of `G_a = Σ a_i e^{jδ_i}` (adjustable phases, residual
/// spread `sigma_delta`), in chunk order.
pub fn sample_ga(layout: &DeploymentLayout, sigma_delta: f64, mc: &McConfig) -> Result<Vec<Complex64>, McError> {
    mc.validate()?;
    let policy = PhasePolicy::adjustable(sigma_delta)?;
    let parts: Vec<Vec<Complex64>> = mc
        .chunks()
        .map(|(k, len)| -> Result<Vec<Complex64>, McError> {
            let mut channels = substream(mc.seed, k, StreamKind::Channels);
            let mut phases = substream(mc.seed, k, StreamKind::Phases);
            let mut draw = sample_channels(&mut channels, layout.n_tags());
            let mut out = Vec::with_capacity(len as usize);
            for trial in 0..len {
                if trial > 0 {
                    draw.resample(&mut channels);
                }
                out.push(backscatter_amplitude(&draw, layout, &policy, &mut phases)?);
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Samples of `|G_a|²`.
pub fn sample_ga_sq(layout: &DeploymentLayout, sigma_delta: f64, mc: &McConfig) -> Result<Vec<f64>, McError> {
    Ok(sample_ga(layout, sigma_delta, mc)?
        .into_iter()
        .map(|g| g.norm_sqr())
        .collect())
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// When set, [`Histogram::heights`] are densities integrating to one.
    pub density: bool,
}

impl Histogram {
    /// Bins `samples` over `[lo, hi]`; values outside the range are dropped
    /// and `hi` itself falls in the last bin.
    pub fn new(samples: &[f64], bins: usize, lo: f64, hi: f64, density: bool) -> Result<Self, McError> {
        if bins == 0 || !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(McError::InvalidHistogram);
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            if !(lo..=hi).contains(&x) {
                continue;
            }
            let idx = (((x - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Ok(Self { edges, counts, density })
    }

    /// Histogram spanning the sample range.
    pub fn from_samples(samples: &[f64], bins: usize, density: bool) -> Result<Self, McError> {
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        Self::new(samples, bins, lo, hi, density)
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bar heights: densities if `density` is set, raw counts otherwise.
    pub fn heights(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| {
                if self.density && total > 0.0 {
                    c as f64 / (total * (e[1] - e[0]))
                } else {
                    c as f64
                }
            })
            .collect()
    }

    /// `Σ height·width`; 1 for a populated density histogram.
    pub fn integral(&self) -> f64 {
        self.heights()
            .iter()
            .zip(self.edges.windows(2))
            .map(|(h, e)| h * (e[1] - e[0]))
            .sum()
    }
}

/// Reference law overlaid on a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Reference {
    Gaussian { mean: f64, std: f64 },
    Gamma(GammaParams),
}

impl Reference {
    fn validate(&self) -> Result<(), McError> {
        match *self {
            Reference::Gaussian { std, .. } if !(std > 0.0 && std.is_finite()) => {
                Err(McError::InvalidReference("gaussian std must be positive"))
            }
            Reference::Gamma(p) if GammaParams::new(p.k, p.theta).is_err() => {
                Err(McError::InvalidReference("gamma shape and scale must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Reference::Gaussian { mean, std } => gaussian_pdf(*mean, *std, x).unwrap_or(f64::NAN),
            Reference::Gamma(p) => gamma_pdf(p, x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Reference::Gaussian { mean, std } => gaussian_cdf(*mean, *std, x),
            Reference::Gamma(p) => gamma_cdf(p, x),
        }
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let below = f - i as f64 / n;
        let above = (i + 1) as f64 / n - f;
        d.max(below).max(above)
    })
}

pub const MIN_FIT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub histogram: Histogram,
    /// Reference density at each bin center.
    pub reference_pdf: Vec<f64>,
    pub ks: f64,
}

/// Density histogram of `samples` against `reference`, with the KS distance.
pub fn fit_and_compare(samples: &[f64], reference: &Reference, bins: usize) -> Result<FitReport, McError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(McError::TooFewSamples {
            got: samples.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    reference.validate()?;
    let histogram = Histogram::from_samples(samples, bins, true)?;
    let reference_pdf = histogram.centers().iter().map(|&x| reference.pdf(x)).collect();
    let ks = ks_distance(samples, |x| reference.cdf(x));
    Ok(FitReport {
        histogram,
        reference_pdf,
        ks,
    })
}
