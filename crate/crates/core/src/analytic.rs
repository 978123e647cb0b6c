//! Closed-form and quadrature evaluations of
//! `P(N) = Pr(η²|A_r|² ≥ |A_0|²)`.
//!
//! Adjustable phases: `P = 1 − E[exp(−c|G_a|²)]` with `G_a = Σ a_i e^{jδ_i}`,
//! approximated by a Gaussian `G_a` or a Gamma `|G_a|²`.
//!
//! Random phases: `P = 1 − E_T[1/(1 + cT)]` with the power sum
//! `T = Σ w_i X_i Y_i`. Evaluated exactly through the Laplace transform of
//! `T` (one-dimensional quadrature), by a second-order delta expansion, or
//! by a Gamma-matched `T`.
//!
//! Every estimator returns 0 for `N = 0` or `η = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DeploymentLayout;
use crate::quadrature::{self, QuadratureError};
use crate::specfun::{exp_e1_scaled, gamma_moment_match, scaled_upper_incomplete_gamma, SpecfunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error("exact random-phase integral failed: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("degenerate moments: mean {mean}, variance {variance}")]
    DegenerateMoments { mean: f64, variance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Gauss,
    Gamma,
    Exact,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mc, Method::Gauss, Method::Gamma, Method::Exact];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Gauss => "gauss",
            Method::Gamma => "gamma",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected mc, gauss, gamma or exact)"))
    }
}

/// A value of `P(N)` and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub method: Method,
    /// Binomial standard error; Monte Carlo only.
    pub stderr: Option<f64>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    /// True when the raw approximation fell outside [0, 1].
    #[serde(default)]
    pub clamped: bool,
}

impl ProbabilityEstimate {
    pub fn closed_form(method: Method, raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        Self {
            value,
            method,
            stderr: None,
            runs: None,
            seed: None,
            clamped: value != raw,
        }
    }
}

/// Mean and variance of the coherent sum `G_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjustableMoments {
    pub mu_g: f64,
    pub sigma2_g: f64,
}

/// `μ_G = e^{−σ²/2} Σ π/(4c_i)`, `σ_G² = Σ (1 − e^{−σ²}π²/16)/c_i²`.
pub fn adjustable_moments(layout: &DeploymentLayout, sigma_delta: f64) -> AdjustableMoments {
    adjustable_moments_from_c(layout.c(), sigma_delta)
}

/// Same as [`adjustable_moments`] for an arbitrary set of path constants `c_i`.
pub fn adjustable_moments_from_c(c: &[f64], sigma_delta: f64) -> AdjustableMoments {
    let s2 = sigma_delta * sigma_delta;
    let (sum_inv, sum_inv_sq) = c.iter().fold((0.0, 0.0), |(a, b), c| (a + 1.0 / c, b + 1.0 / (c * c)));
    AdjustableMoments {
        mu_g: (-0.5 * s2).exp() * PI / 4.0 * sum_inv,
        sigma2_g: (1.0 - (-s2).exp() * PI * PI / 16.0) * sum_inv_sq,
    }
}

/// Circular-Gaussian `G_a`: `1 − (1+cσ²)^{−1/2} exp(−cμ²/(1+cσ²))`.
pub fn p_adjustable_gauss(moments: &AdjustableMoments, c_const: f64) -> ProbabilityEstimate {
    let AdjustableMoments { mu_g, sigma2_g } = *moments;
    if c_const == 0.0 || (mu_g == 0.0 && sigma2_g == 0.0) {
        return ProbabilityEstimate::closed_form(Method::Gauss, 0.0);
    }
    let spread = c_const * sigma2_g;
    let log_mgf = -c_const * mu_g * mu_g / (1.0 + spread) - 0.5 * spread.ln_1p();
    ProbabilityEstimate::closed_form(Method::Gauss, -log_mgf.exp_m1())
}

/// Gamma-matched `Z = |G_a|²`: `1 − (1 + cθ)^{−k}`.
pub fn p_adjustable_gamma(moments: &AdjustableMoments, c_const: f64) -> Result<ProbabilityEstimate, AnalyticError> {
    let AdjustableMoments { mu_g, sigma2_g } = *moments;
    let mean = mu_g * mu_g + sigma2_g;
    if c_const == 0.0 || mean == 0.0 {
        return Ok(ProbabilityEstimate::closed_form(Method::Gamma, 0.0));
    }
    let variance = 2.0 * sigma2_g * sigma2_g + 4.0 * sigma2_g * mu_g * mu_g;
    if variance <= 0.0 {
        return Err(AnalyticError::DegenerateMoments { mean, variance });
    }
    let p = gamma_moment_match(mean, variance)?;
    let raw = -(-p.k * (c_const * p.theta).ln_1p()).exp_m1();
    Ok(ProbabilityEstimate::closed_form(Method::Gamma, raw))
}

/// Mean and variance of the power sum `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomMoments {
    pub mu_t: f64,
    pub sigma2_t: f64,
}

/// `μ_T = Σ w_i`, `σ_T² = 3 Σ w_i²` (since `E[XY] = 1`, `Var(XY) = 3`).
pub fn random_moments(layout: &DeploymentLayout) -> RandomMoments {
    let (s1, s2) = layout.w().iter().fold((0.0, 0.0), |(a, b), w| (a + w, b + w * w));
    RandomMoments {
        mu_t: s1,
        sigma2_t: 3.0 * s2,
    }
}

/// `E[1/(1 + zXY)]`-type factor `z·e^z·E1(z)`, the Laplace transform of one
/// tag's power at argument `1/z`.
fn laplace_factor(z: f64) -> Result<f64, SpecfunError> {
    if z > 1e8 {
        let r = 1.0 / z;
        Ok(1.0 - r * (1.0 - 2.0 * r))
    } else {
        Ok(z * exp_e1_scaled(z)?)
    }
}

/// Absolute tolerance of the exact random-phase integral.
pub const EXACT_TOLERANCE: f64 = 1e-9;
const EXACT_MAX_INTERVALS: usize = 4_000;

/// `1 − ∫₀^∞ e^{−u} Π_i L_i(c·u) du` with `L_i(s) = z e^z E1(z)`,
/// `z = 1/(s w_i)`.
///
/// The substitution `v = e^{−u}` maps the half-line onto (0, 1] with a
/// bounded integrand (0 at `v → 0`, 1 at `v → 1`), so no tail truncation is
/// needed.
pub fn p_random_exact(layout: &DeploymentLayout) -> Result<ProbabilityEstimate, AnalyticError> {
    let c = layout.c_const();
    let w = layout.w();
    if c == 0.0 || w.is_empty() {
        return Ok(ProbabilityEstimate::closed_form(Method::Exact, 0.0));
    }
    let mut failure = None;
    let integrand = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let u = -v.ln();
        if u <= 0.0 {
            return 1.0;
        }
        let mut prod = 1.0;
        for wi in w {
            match laplace_factor(1.0 / (c * u * wi)) {
                Ok(f) => prod *= f,
                Err(e) => {
                    failure.get_or_insert(e);
                    return 0.0;
                }
            }
            if prod == 0.0 {
                break;
            }
        }
        prod
    };
    let integral = quadrature::integrate(integrand, 0.0, 1.0, EXACT_TOLERANCE, EXACT_MAX_INTERVALS)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(ProbabilityEstimate::closed_form(Method::Exact, 1.0 - integral.value))
}

/// Second-order delta expansion of `E[cT/(1+cT)]` around `μ_T`.
pub fn p_random_gauss_delta(moments: &RandomMoments, c_const: f64) -> ProbabilityEstimate {
    let RandomMoments { mu_t, sigma2_t } = *moments;
    if c_const == 0.0 || mu_t == 0.0 {
        return ProbabilityEstimate::closed_form(Method::Gauss, 0.0);
    }
    let denom = 1.0 + c_const * mu_t;
    let raw = c_const * mu_t / denom - c_const * c_const * sigma2_t / denom.powi(3);
    ProbabilityEstimate::closed_form(Method::Gauss, raw)
}

/// Gamma-matched `T ~ Gamma(k, θ)`:
/// `1 − ∫₀^∞ e^{−u}(1 + θcu)^{−k} du = 1 − e^z·(θc)^{−k}·Γ(1−k, z)` with
/// `z = 1/(θc)`.
///
/// Note the prefactor exponent is `−k`. Written as `1 − z·S(1−k, z)` where
/// `S(a, z) = e^z z^{−a} Γ(a, z)`, so `e^z` is never formed.
pub fn p_random_gamma(moments: &RandomMoments, c_const: f64) -> Result<ProbabilityEstimate, AnalyticError> {
    let RandomMoments { mu_t, sigma2_t } = *moments;
    if c_const == 0.0 || mu_t == 0.0 {
        return Ok(ProbabilityEstimate::closed_form(Method::Gamma, 0.0));
    }
    let p = gamma_moment_match(mu_t, sigma2_t).map_err(|_| AnalyticError::DegenerateMoments {
        mean: mu_t,
        variance: sigma2_t,
    })?;
    let z = 1.0 / (p.theta * c_const);
    let raw = 1.0 - z * scaled_upper_incomplete_gamma(1.0 - p.k, z)?;
    Ok(ProbabilityEstimate::closed_form(Method::Gamma, raw))
}
