//! Special functions used by the closed forms.
//!
//! * `E1(x)` and the overflow-free `e^x·E1(x)`.
//! * Upper incomplete gamma `Γ(a, x)` for any real `a` (the random-phase
//!   Gamma closed form needs `a = 1 − k` with `k > 1`), plus the scaled
//!   `e^x·x^{−a}·Γ(a, x)`.
//! * Gamma moment matching and the reference densities used to overlay
//!   simulated histograms.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecfunError {
    #[error("{function}: argument {value} outside domain ({requirement})")]
    Domain {
        function: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("{function}: continued fraction did not converge at a={a}, x={x}")]
    NoConvergence { function: &'static str, a: f64, x: f64 },
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

fn positive(function: &'static str, x: f64) -> Result<(), SpecfunError> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(SpecfunError::Domain {
            function,
            requirement: "x > 0",
            value: x,
        })
    }
}

/// Power series `−γ − ln x − Σ (−x)^n/(n·n!)`, accurate for `x ≤ 1`.
fn e1_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..200 {
        let nf = n as f64;
        term *= -x / nf;
        let contrib = term / nf;
        sum += contrib;
        if contrib.abs() < EPS * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Modified Lentz evaluation of the continued fraction for `e^x·E1(x)`.
fn e1_scaled_cf(x: f64) -> Result<f64, SpecfunError> {
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(SpecfunError::NoConvergence {
        function: "e1",
        a: 0.0,
        x,
    })
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{−t}/t dt`.
pub fn e1(x: f64) -> Result<f64, SpecfunError> {
    positive("e1", x)?;
    if x <= 1.0 {
        Ok(e1_series(x))
    } else if x > 745.0 {
        Ok(0.0)
    } else {
        Ok(e1_scaled_cf(x)? * (-x).exp())
    }
}

/// `e^x·E1(x)`, finite for arbitrarily large `x` (≈ `1/x` asymptotically).
pub fn exp_e1_scaled(x: f64) -> Result<f64, SpecfunError> {
    positive("exp_e1_scaled", x)?;
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else if x > 1e8 {
        // Asymptotic series; three terms are exact to double precision here.
        let r = 1.0 / x;
        Ok(r * (1.0 - r * (1.0 - 2.0 * r)))
    } else {
        e1_scaled_cf(x)
    }
}

/// Continued fraction for `e^x·x^{−a}·Γ(a, x)`; converges for any real `a`
/// once `x` is past the crossover used in [`scaled_upper_incomplete_gamma`].
fn gamma_scaled_cf(a: f64, x: f64) -> Result<f64, SpecfunError> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        let an = -fi * (fi - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(SpecfunError::NoConvergence {
        function: "upper_incomplete_gamma",
        a,
        x,
    })
}

// ζ(2), ζ(3), …, ζ(25).
const ZETA: [f64; 24] = [
    1.6449340668482264,
    1.2020569031595943,
    1.0823232337111382,
    1.0369277551433699,
    1.0173430619844491,
    1.0083492773819228,
    1.0040773561979443,
    1.0020083928260822,
    1.0009945751278181,
    1.0004941886041195,
    1.000246086553308,
    1.0001227133475785,
    1.0000612481350587,
    1.000030588236307,
    1.0000152822594087,
    1.0000076371976379,
    1.000003817293265,
    1.0000019082127166,
    1.0000009539620339,
    1.0000004769329868,
    1.0000002384505027,
    1.000000119219926,
    1.0000000596081891,
    1.0000000298035035,
];

/// `ln Γ(1+a)`, accurate in relative terms as `a → 0`.
fn ln_gamma_1p(a: f64) -> f64 {
    if a.abs() >= 0.25 {
        return ln_gamma(1.0 + a);
    }
    let mut power = -a;
    let mut sum = -EULER_GAMMA * a;
    for (i, z) in ZETA.iter().enumerate() {
        power *= -a;
        sum += z * power / (i + 2) as f64;
    }
    sum
}

/// `Γ(a, x)` for `0 < a < 1` and small `x`, written so that it stays
/// accurate as `a → 0`:
/// `(Γ(1+a) − x^a)/a − x^a Σ_{n≥1} (−x)^n/(n!(a+n))`.
fn gamma_upper_fractional(a: f64, x: f64) -> f64 {
    let ln_x = x.ln();
    let xa = (a * ln_x).exp();
    let head = xa * (ln_gamma_1p(a) - a * ln_x).exp_m1() / a;
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..200 {
        let nf = n as f64;
        term *= -x / nf;
        let contrib = term / (a + nf);
        sum += contrib;
        if contrib.abs() < EPS * sum.abs() {
            break;
        }
    }
    head - xa * sum
}

/// `Γ(a) − γ(a, x)` with the lower function from its positive series.
fn gamma_upper_by_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    let lower = sum * (a * x.ln() - x).exp();
    ln_gamma(a).exp() - lower
}

fn use_continued_fraction(a: f64, x: f64) -> bool {
    x >= 1.5 && x > a + 1.0
}

/// Small-`x` path for `a ≤ 0`: start at `a₀ = a − ⌊a⌋ ∈ [0, 1)` and apply
/// `Γ(b−1, x) = (Γ(b, x) − x^{b−1}e^{−x})/(b−1)` down to `a`.
fn gamma_upper_downward(a: f64, x: f64) -> Result<f64, SpecfunError> {
    let steps = (-a.floor()) as usize;
    let a0 = a - a.floor();
    let mut b;
    let mut value;
    if a0 == 0.0 {
        // Γ(0, x) = E1(x); `steps` already counts the move from 0 to a.
        b = 0.0;
        value = e1(x)?;
    } else {
        b = a0;
        value = gamma_upper_fractional(a0, x);
    }
    let ln_x = x.ln();
    for _ in 0..steps {
        let bm1 = b - 1.0;
        value = (value - (bm1 * ln_x - x).exp()) / bm1;
        b = bm1;
    }
    debug_assert!((b - a).abs() < 1e-9);
    Ok(value)
}

/// Upper incomplete gamma `Γ(a, x) = ∫_x^∞ t^{a−1} e^{−t} dt` for real
/// `a` (including `a ≤ 0`) and `x > 0`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64, SpecfunError> {
    positive("upper_incomplete_gamma", x)?;
    if !a.is_finite() {
        return Err(SpecfunError::Domain {
            function: "upper_incomplete_gamma",
            requirement: "finite a",
            value: a,
        });
    }
    if use_continued_fraction(a, x) {
        let scale = (a * x.ln() - x).exp();
        return Ok(gamma_scaled_cf(a, x)? * scale);
    }
    if a <= 0.0 {
        gamma_upper_downward(a, x)
    } else if a < 1.0 {
        Ok(gamma_upper_fractional(a, x))
    } else {
        Ok(gamma_upper_by_series(a, x))
    }
}

/// `e^x·x^{−a}·Γ(a, x)`, evaluated without forming `e^x` when `x` is large.
pub fn scaled_upper_incomplete_gamma(a: f64, x: f64) -> Result<f64, SpecfunError> {
    positive("scaled_upper_incomplete_gamma", x)?;
    if use_continued_fraction(a, x) {
        gamma_scaled_cf(a, x)
    } else {
        Ok(upper_incomplete_gamma(a, x)? * (x - a * x.ln()).exp())
    }
}

/// Gamma law with shape `k` and scale `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub k: f64,
    pub theta: f64,
}

impl GammaParams {
    pub fn new(k: f64, theta: f64) -> Result<Self, SpecfunError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(SpecfunError::Domain {
                function: "GammaParams",
                requirement: "k > 0",
                value: k,
            });
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(SpecfunError::Domain {
                function: "GammaParams",
                requirement: "theta > 0",
                value: theta,
            });
        }
        Ok(Self { k, theta })
    }

    pub fn mean(&self) -> f64 {
        self.k * self.theta
    }

    pub fn variance(&self) -> f64 {
        self.k * self.theta * self.theta
    }
}

/// Gamma law with the given mean and variance: `k = m²/v`, `θ = v/m`.
pub fn gamma_moment_match(mean: f64, variance: f64) -> Result<GammaParams, SpecfunError> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(SpecfunError::Domain {
            function: "gamma_moment_match",
            requirement: "mean > 0",
            value: mean,
        });
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(SpecfunError::Domain {
            function: "gamma_moment_match",
            requirement: "variance > 0",
            value: variance,
        });
    }
    GammaParams::new(mean * mean / variance, variance / mean)
}

/// Gamma density. At `z = 0` returns the right limit (`1/θ` for `k = 1`).
pub fn gamma_pdf(params: &GammaParams, z: f64) -> f64 {
    let GammaParams { k, theta } = *params;
    if z < 0.0 {
        return 0.0;
    }
    if z == 0.0 {
        return if k < 1.0 {
            f64::INFINITY
        } else if k == 1.0 {
            1.0 / theta
        } else {
            0.0
        };
    }
    ((k - 1.0) * z.ln() - z / theta - ln_gamma(k) - k * theta.ln()).exp()
}

pub fn gamma_cdf(params: &GammaParams, z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        gamma_lr(params.k, z / params.theta)
    }
}

pub fn gaussian_pdf(mean: f64, std: f64, x: f64) -> Result<f64, SpecfunError> {
    if !(std > 0.0 && std.is_finite()) {
        return Err(SpecfunError::Domain {
            function: "gaussian_pdf",
            requirement: "std > 0",
            value: std,
        });
    }
    let u = (x - mean) / std;
    Ok((-0.5 * u * u).exp() / (std * (2.0 * std::f64::consts::PI).sqrt()))
}

pub fn gaussian_cdf(mean: f64, std: f64, x: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (std * std::f64::consts::SQRT_2))
}
