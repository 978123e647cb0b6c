//! Single-shot commands: Doppler arithmetic and the baseband
//! trace generator.

use bstunnel::baseband::{self, BasebandError, ResidualStats, SignalTrace, TraceOptions};
use bstunnel::fading::{optimal_phase, sample_channels};
use bstunnel::rng::{substream, StreamKind};
use bstunnel::{build_layout, TunnelGeometry};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DopplerReport {
    pub speed_mps: f64,
    pub carrier_hz: f64,
    pub doppler_hz: f64,
    pub sample_period_s: f64,
    /// Fraction of the Doppler shift left after compensation.
    pub eps: f64,
    /// Residual phase advance per sample, radians.
    pub residual_phase_rad: f64,
}

pub fn doppler_report(speed: f64, carrier: f64, ts: f64, eps: f64) -> Result<DopplerReport, String> {
    if !(speed >= 0.0 && carrier > 0.0 && ts > 0.0 && eps >= 0.0) {
        return Err("speed and eps must be non-negative, carrier and sample period positive".into());
    }
    let f_d = baseband::doppler_shift(speed, carrier);
    Ok(DopplerReport {
        speed_mps: speed,
        carrier_hz: carrier,
        doppler_hz: f_d,
        sample_period_s: ts,
        eps,
        residual_phase_rad: baseband::residual_phase_step(eps, f_d, ts),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasebandRequest {
    pub preset: String,
    pub samples: usize,
    pub n_tags: usize,
    pub length: f64,
    pub l1: f64,
    pub seed: u64,
    /// Fraction of the direct-link Doppler left uncompensated.
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasebandSummary {
    pub preset: String,
    pub samples: usize,
    pub n_tags: usize,
    pub cfo_hz: f64,
    pub direct_doppler_hz: f64,
    /// Pilot-aided estimate of CFO plus dominant Doppler from the raw trace.
    pub estimated_offset_hz: f64,
    pub eps: f64,
    pub residual: ResidualStats,
}

#[derive(Debug, thiserror::Error)]
pub enum BasebandCommandError {
    #[error("unknown preset `{name}` (expected one of: {})", baseband::PRESETS.join(", "))]
    UnknownPreset { name: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Baseband(#[from] BasebandError),
}

/// Synthesizes a trace for `req` with co-phased, unmodulated tags, then
/// compensates the CFO and `(1 − eps)` of the direct-link Doppler.
pub fn run_baseband(req: &BasebandRequest) -> Result<(SignalTrace, BasebandSummary), BasebandCommandError> {
    let carrier = baseband::preset(&req.preset).ok_or_else(|| BasebandCommandError::UnknownPreset {
        name: req.preset.clone(),
    })?;
    if req.samples == 0 {
        return Err(BasebandCommandError::Invalid("samples must be at least 1".into()));
    }
    if !(req.eps >= 0.0 && req.eps.is_finite()) {
        return Err(BasebandCommandError::Invalid(format!(
            "eps must be non-negative, got {}",
            req.eps
        )));
    }
    let invalid = |e: &dyn std::fmt::Display| BasebandCommandError::Invalid(e.to_string());
    let geom = TunnelGeometry::reference(req.length).map_err(|e| invalid(&e))?;
    let layout = build_layout(&geom, req.n_tags, req.l1, 2.0, 0.5).map_err(|e| invalid(&e))?;
    let draw = sample_channels(&mut substream(req.seed, 0, StreamKind::Channels), req.n_tags);
    let phases = draw
        .g
        .iter()
        .zip(&draw.f)
        .map(|(g, f)| optimal_phase(*g, *f))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid(&e))?;
    let mut noise = substream(req.seed, 0, StreamKind::Noise);
    let trace = baseband::synthesize(
        &geom,
        &layout,
        &carrier,
        &draw,
        &phases,
        req.samples,
        &TraceOptions {
            pilot: None,
            tag_data: Some(vec![1; req.samples]),
        },
        &mut noise,
    )?;
    let cfo = carrier.f1 - carrier.f2;
    let f_d = carrier.direct_doppler();
    let estimated = if trace.len() > 1 {
        baseband::estimate_frequency_offset(&trace)?
    } else {
        0.0
    };
    let comp = baseband::compensate(&trace, cfo, (1.0 - req.eps) * f_d)?;
    let summary = BasebandSummary {
        preset: req.preset.clone(),
        samples: req.samples,
        n_tags: req.n_tags,
        cfo_hz: cfo,
        direct_doppler_hz: f_d,
        estimated_offset_hz: estimated,
        eps: req.eps,
        residual: comp.stats,
    };
    Ok((trace, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doppler_numbers() {
        let r = doppler_report(97.22, 1.8e9, 1e-3, 0.01).unwrap();
        assert!((r.doppler_hz - 583.7).abs() < 1.0);
        assert!((r.residual_phase_rad - 0.0367).abs() < 1e-3);
        assert!(doppler_report(97.22, 0.0, 1e-3, 0.01).is_err());
    }

    #[test]
    fn baseband_presets_run() {
        for name in baseband::PRESETS {
            let req = BasebandRequest {
                preset: name.into(),
                samples: 64,
                n_tags: 3,
                length: 40.0,
                l1: 20.0,
                seed: 5,
                eps: 0.01,
            };
            let (trace, s) = run_baseband(&req).unwrap();
            assert_eq!(trace.len(), 64);
            assert_eq!(s.residual.samples, 64);
        }
        let bad = BasebandRequest {
            preset: "warp".into(),
            samples: 8,
            n_tags: 1,
            length: 40.0,
            l1: 20.0,
            seed: 1,
            eps: 0.0,
        };
        assert!(matches!(
            run_baseband(&bad),
            Err(BasebandCommandError::UnknownPreset { .. })
        ));
    }
}
