//! Small-scale fading draws and instantaneous link amplitudes.
//!
//! Each channel coefficient (direct `h`, Tx→tag `f_i`, tag→Rx `g_i`) is an
//! independent CN(0, 1) variate. The tag phase policy decides how the
//! per-tag products combine at the receiver.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DeploymentLayout;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FadingError {
    #[error("channel draw has {draw} tags but layout has {layout}")]
    TagCountMismatch { draw: usize, layout: usize },
    #[error("g·f = 0 has no phase")]
    DegenerateProduct,
    #[error("sigma_delta must be finite and non-negative, got {0}")]
    InvalidSigma(f64),
}

/// One CN(0, 1) sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Channel state for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub h: Complex64,
    pub f: Vec<Complex64>,
    pub g: Vec<Complex64>,
}

impl ChannelDraw {
    pub fn n_tags(&self) -> usize {
        self.f.len()
    }

    /// Redraws every coefficient in place. Order: `h`, then `(g_i, f_i)`
    /// for each tag.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.h = complex_gaussian(rng);
        for (g, f) in self.g.iter_mut().zip(self.f.iter_mut()) {
            *g = complex_gaussian(rng);
            *f = complex_gaussian(rng);
        }
    }
}

/// Draws `h` and `n_tags` pairs `(g_i, f_i)`.
pub fn sample_channels<R: Rng + ?Sized>(rng: &mut R, n_tags: usize) -> ChannelDraw {
    let mut draw = ChannelDraw {
        h: Complex64::new(0.0, 0.0),
        f: vec![Complex64::new(0.0, 0.0); n_tags],
        g: vec![Complex64::new(0.0, 0.0); n_tags],
    };
    draw.resample(rng);
    draw
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseRegime {
    /// Tags co-phase their reflections on the receiver.
    Adjustable,
    /// Tag phases i.i.d. uniform on [0, 2π).
    Random,
}

impl std::fmt::Display for PhaseRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PhaseRegime::Adjustable => "adjustable",
            PhaseRegime::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePolicy {
    pub regime: PhaseRegime,
    /// Std of the per-tag Gaussian residual phase, radians.
    pub sigma_delta: f64,
}

impl PhasePolicy {
    pub fn new(regime: PhaseRegime, sigma_delta: f64) -> Result<Self, FadingError> {
        if !(sigma_delta.is_finite() && sigma_delta >= 0.0) {
            return Err(FadingError::InvalidSigma(sigma_delta));
        }
        Ok(Self { regime, sigma_delta })
    }

    pub fn adjustable(sigma_delta: f64) -> Result<Self, FadingError> {
        Self::new(PhaseRegime::Adjustable, sigma_delta)
    }

    pub fn random() -> Self {
        Self {
            regime: PhaseRegime::Random,
            sigma_delta: 0.0,
        }
    }
}

/// Tag phase that makes `g·f·e^{jφ}` real and non-negative, in [0, 2π).
pub fn optimal_phase(g: Complex64, f: Complex64) -> Result<f64, FadingError> {
    let p = g * f;
    if p.re == 0.0 && p.im == 0.0 {
        return Err(FadingError::DegenerateProduct);
    }
    let phi = (-p.arg()).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    Ok(if phi >= TAU { 0.0 } else { phi })
}

fn check_tags(draw: &ChannelDraw, layout: &DeploymentLayout) -> Result<(), FadingError> {
    if draw.n_tags() != layout.n_tags() {
        return Err(FadingError::TagCountMismatch {
            draw: draw.n_tags(),
            layout: layout.n_tags(),
        });
    }
    Ok(())
}

/// Backscatter amplitude `A_r = Σ g_i f_i e^{j(φ_i + δ_i)} / c_i`.
///
/// Tag phases and residuals are drawn from `rng`. Under the adjustable
/// policy `g_i f_i e^{jφ_i}` is `|g_i||f_i|` exactly, which is what gets
/// summed; this also sidesteps the measure-zero `g_i f_i = 0` case.
pub fn backscatter_amplitude<R: Rng + ?Sized>(
    draw: &ChannelDraw,
    layout: &DeploymentLayout,
    policy: &PhasePolicy,
    rng: &mut R,
) -> Result<Complex64, FadingError> {
    check_tags(draw, layout)?;
    let sigma = policy.sigma_delta;
    let mut acc = Complex64::new(0.0, 0.0);
    for ((g, f), c) in draw.g.iter().zip(&draw.f).zip(layout.c()) {
        match policy.regime {
            PhaseRegime::Adjustable => {
                let amp = g.norm() * f.norm() / c;
                if sigma > 0.0 {
                    let delta: f64 = StandardNormal.sample(rng);
                    acc += Complex64::from_polar(amp, sigma * delta);
                } else {
                    acc.re += amp;
                }
            }
            PhaseRegime::Random => {
                let mut phase = rng.random::<f64>() * TAU;
                if sigma > 0.0 {
                    let delta: f64 = StandardNormal.sample(rng);
                    phase += sigma * delta;
                }
                acc += g * f * Complex64::cis(phase) / c;
            }
        }
    }
    Ok(acc)
}

/// Direct-link power `|A_0|² = |h|²/d_h^α`.
pub fn direct_power(draw: &ChannelDraw, layout: &DeploymentLayout) -> f64 {
    draw.h.norm_sqr() * layout.direct_mean_power()
}

/// `T = Σ w_i |g_i|² |f_i|²`.
pub fn power_sum(draw: &ChannelDraw, layout: &DeploymentLayout) -> Result<f64, FadingError> {
    check_tags(draw, layout)?;
    Ok(draw
        .g
        .iter()
        .zip(&draw.f)
        .zip(layout.w())
        .map(|((g, f), w)| w * g.norm_sqr() * f.norm_sqr())
        .sum())
}
