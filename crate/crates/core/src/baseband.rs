//! Discrete-time synthesis of the received baseband signal.
//!
//! ```text
//! y(n) = η Σ_i g_i f_i e^{j(2π ε_D^(i) n + φ_i)} / c_i · s(n) x(n) e^{j(2π ε_f n + Δθ)}
//!      + h e^{j 2π ε_d n} / d_h^{α/2} · s(n) e^{j(2π ε_f n + Δθ)}
//!      + w(n)
//! ```
//!
//! Distances and channel coefficients are frozen over a trace; train motion
//! enters only through the Doppler rotations. The direct link uses
//! `f_d = (v/c)·f1`; tag `i` uses `f_D^(i) = (v/c)·f1·cos ϑ_i` where `ϑ_i` is
//! the angle between the direction of travel and the tag→Rx ray.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fading::{complex_gaussian, ChannelDraw};
use crate::geometry::{tag_position, DeploymentLayout, GeometryError, TunnelGeometry};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum BasebandError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid carrier parameter {name} = {value}")]
    InvalidCarrier { name: &'static str, value: f64 },
    #[error("empty trace")]
    EmptyTrace,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Oscillator, sampling and motion parameters of one trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierConfig {
    /// Transmit carrier, Hz.
    pub f1: f64,
    /// Receiver local oscillator, Hz.
    pub f2: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Sampling rate, Hz.
    pub fs: f64,
    /// Train speed, m/s.
    pub v: f64,
    /// Noise std per real dimension.
    pub sigma_w: f64,
}

impl CarrierConfig {
    pub fn validate(&self) -> Result<(), BasebandError> {
        let checks = [
            ("f1", self.f1, self.f1 > 0.0),
            ("f2", self.f2, self.f2 > 0.0),
            ("fs", self.fs, self.fs > 0.0),
            ("v", self.v, self.v >= 0.0),
            ("sigma_w", self.sigma_w, self.sigma_w >= 0.0),
            ("theta1", self.theta1, true),
            ("theta2", self.theta2, true),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(BasebandError::InvalidCarrier { name, value });
            }
        }
        Ok(())
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.fs
    }

    /// Normalized CFO `(f1 − f2)/fs`.
    pub fn eps_f(&self) -> f64 {
        (self.f1 - self.f2) / self.fs
    }

    /// Phase error `θ1 − θ2`.
    pub fn delta_theta(&self) -> f64 {
        self.theta1 - self.theta2
    }

    /// Direct-link Doppler `(v/c)·f1`, Hz.
    pub fn direct_doppler(&self) -> f64 {
        doppler_shift(self.v, self.f1)
    }
}

/// `f_D ≈ (v/c)·f_c`.
pub fn doppler_shift(v: f64, fc: f64) -> f64 {
    v / SPEED_OF_LIGHT * fc
}

/// Per-sample phase left by a fractional residual `eps` of Doppler `f_d`:
/// `2π·eps·f_d·Ts`.
pub fn residual_phase_step(eps: f64, f_d: f64, ts: f64) -> f64 {
    TAU * eps * f_d * ts
}

/// Doppler of each backscatter link, Hz.
pub fn tag_dopplers(
    geom: &TunnelGeometry,
    layout: &DeploymentLayout,
    carrier: &CarrierConfig,
) -> Result<Vec<f64>, BasebandError> {
    let fd = carrier.direct_doppler();
    (1..=layout.n_tags())
        .map(|i| {
            let x = tag_position(i, layout.n_tags(), geom.length)?;
            let cos = (layout.l1() - x) / layout.d_g()[i - 1];
            Ok(fd * cos)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalTrace {
    pub samples: Vec<Complex64>,
    /// Tag data `x(n) ∈ {−1, +1}`.
    pub tag_data: Vec<i8>,
    pub pilot: Vec<Complex64>,
    pub fs: f64,
}

impl SignalTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// CSV with header `n,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), BasebandError> {
        writeln!(out, "n,re,im")?;
        for (n, y) in self.samples.iter().enumerate() {
            writeln!(out, "{n},{:.12e},{:.12e}", y.re, y.im)?;
        }
        Ok(())
    }
}

/// Optional pilot and tag data; defaults are an all-ones pilot and
/// alternating `+1, −1, …` tag bits.
#[derive(Debug, Clone, Default)]
pub struct TraceOptions {
    pub pilot: Option<Vec<Complex64>>,
    pub tag_data: Option<Vec<i8>>,
}

/// Synthesizes `n_samples` of `y(n)`. `phases` holds the tag phases `φ_i`;
/// noise is drawn from `rng` only when `sigma_w > 0`.
#[allow(clippy::too_many_arguments)]
pub fn synthesize<R: Rng + ?Sized>(
    geom: &TunnelGeometry,
    layout: &DeploymentLayout,
    carrier: &CarrierConfig,
    draw: &ChannelDraw,
    phases: &[f64],
    n_samples: usize,
    options: &TraceOptions,
    rng: &mut R,
) -> Result<SignalTrace, BasebandError> {
    carrier.validate()?;
    let n_tags = layout.n_tags();
    if draw.n_tags() != n_tags || phases.len() != n_tags {
        return Err(BasebandError::DimensionMismatch(format!(
            "layout has {n_tags} tags, draw {}, phases {}",
            draw.n_tags(),
            phases.len()
        )));
    }
    let pilot = match &options.pilot {
        Some(p) if p.len() != n_samples => {
            return Err(BasebandError::DimensionMismatch(format!(
                "pilot has {} samples, trace {n_samples}",
                p.len()
            )))
        }
        Some(p) => p.clone(),
        None => vec![Complex64::new(1.0, 0.0); n_samples],
    };
    let tag_data = match &options.tag_data {
        Some(x) if x.len() != n_samples => {
            return Err(BasebandError::DimensionMismatch(format!(
                "tag data has {} samples, trace {n_samples}",
                x.len()
            )))
        }
        Some(x) if x.iter().any(|&b| b != 1 && b != -1) => {
            return Err(BasebandError::DimensionMismatch("tag data must be ±1".into()))
        }
        Some(x) => x.clone(),
        None => (0..n_samples).map(|n| if n % 2 == 0 { 1 } else { -1 }).collect(),
    };

    let fs = carrier.fs;
    let eps_tag: Vec<f64> = tag_dopplers(geom, layout, carrier)?.iter().map(|f| f / fs).collect();
    let eps_d = carrier.direct_doppler() / fs;
    let eps_f = carrier.eps_f();
    let dtheta = carrier.delta_theta();
    let tag_gain: Vec<Complex64> = draw
        .g
        .iter()
        .zip(&draw.f)
        .zip(layout.c())
        .map(|((g, f), c)| layout.eta() * g * f / c)
        .collect();
    let direct_gain = draw.h / layout.d_h().powf(layout.alpha() / 2.0);

    let mut samples = Vec::with_capacity(n_samples);
    for n in 0..n_samples {
        let nf = n as f64;
        let backscatter: Complex64 = tag_gain
            .iter()
            .zip(&eps_tag)
            .zip(phases)
            .map(|((a, eps), phi)| a * Complex64::cis(TAU * eps * nf + phi))
            .sum();
        let direct = direct_gain * Complex64::cis(TAU * eps_d * nf);
        let common = pilot[n] * Complex64::cis(TAU * eps_f * nf + dtheta);
        let mut y = (backscatter * f64::from(tag_data[n]) + direct) * common;
        if carrier.sigma_w > 0.0 {
            // complex_gaussian has unit total variance; scale to σ_w² per dimension.
            y += complex_gaussian(rng) * (carrier.sigma_w * std::f64::consts::SQRT_2);
        }
        samples.push(y);
    }
    Ok(SignalTrace {
        samples,
        tag_data,
        pilot,
        fs,
    })
}

/// Phase statistics of a compensated trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    /// Circular mean phase, taken as the common component Ψ.
    pub mean_phase: f64,
    /// Std of the deviation from `mean_phase`, radians.
    pub phase_std: f64,
    /// Mean per-sample phase increment, rad/sample.
    pub mean_step: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Compensated {
    pub samples: Vec<Complex64>,
    pub stats: ResidualStats,
}

/// Strips the pilot and the estimated CFO + Doppler rotation
/// `e^{j2π(f̂_cfo + f̂_d)n/fs}` and reports what phase is left.
pub fn compensate(
    trace: &SignalTrace,
    estimated_cfo: f64,
    estimated_doppler: f64,
) -> Result<Compensated, BasebandError> {
    if trace.is_empty() {
        return Err(BasebandError::EmptyTrace);
    }
    let eps = (estimated_cfo + estimated_doppler) / trace.fs;
    let samples: Vec<Complex64> = trace
        .samples
        .iter()
        .zip(&trace.pilot)
        .enumerate()
        .map(|(n, (y, s))| y * s.conj() / s.norm_sqr() * Complex64::cis(-TAU * eps * n as f64))
        .collect();
    let stats = residual_stats(&samples);
    Ok(Compensated { samples, stats })
}

fn residual_stats(samples: &[Complex64]) -> ResidualStats {
    let resultant: Complex64 = samples.iter().map(|z| z / z.norm().max(f64::MIN_POSITIVE)).sum();
    let mean_phase = resultant.arg();
    let rot = Complex64::cis(-mean_phase);
    let n = samples.len() as f64;
    let var = samples.iter().map(|z| (z * rot).arg().powi(2)).sum::<f64>() / n;
    let mean_step = if samples.len() > 1 {
        samples.windows(2).map(|w| (w[1] * w[0].conj()).arg()).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    ResidualStats {
        mean_phase,
        phase_std: var.sqrt(),
        mean_step,
        samples: samples.len(),
    }
}

/// Pilot-aided frequency estimate (Hz) from the phase of the lag-one
/// autocorrelation of `y(n)·s*(n)`. Sees the CFO plus the dominant Doppler.
pub fn estimate_frequency_offset(trace: &SignalTrace) -> Result<f64, BasebandError> {
    if trace.len() < 2 {
        return Err(BasebandError::EmptyTrace);
    }
    let stripped: Vec<Complex64> = trace
        .samples
        .iter()
        .zip(&trace.pilot)
        .map(|(y, s)| y * s.conj())
        .collect();
    let acc: Complex64 = stripped.windows(2).map(|w| w[1] * w[0].conj()).sum();
    Ok(acc.arg() * trace.fs / TAU)
}

/// Named carrier scenarios for the `baseband` command.
pub fn preset(name: &str) -> Option<CarrierConfig> {
    let hsr = |fc: f64| CarrierConfig {
        f1: fc,
        f2: fc,
        theta1: 0.0,
        theta2: 0.0,
        fs: 1_000.0,
        v: 350.0 / 3.6,
        sigma_w: 0.0,
    };
    Some(match name {
        "static" => CarrierConfig { v: 0.0, ..hsr(1.8e9) },
        "hsr-1.8ghz" => hsr(1.8e9),
        "hsr-2.1ghz" => hsr(2.1e9),
        "hsr-3.5ghz" => hsr(3.5e9),
        "cfo" => CarrierConfig {
            f2: 1.8e9 - 1.0,
            theta2: -0.3,
            ..hsr(1.8e9)
        },
        _ => return None,
    })
}

pub const PRESETS: [&str; 5] = ["static", "hsr-1.8ghz", "hsr-2.1ghz", "hsr-3.5ghz", "cfo"];
