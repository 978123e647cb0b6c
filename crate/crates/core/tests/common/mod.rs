//! Brute-force reference computations, deliberately independent of the
//! library's algorithms: composite Simpson rules on smooth reparametrised
//! integrands, plain series, and sample statistics.
#![allow(dead_code)]

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let y = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += y;
        } else {
            even += y;
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0
}

/// `x^{-a} e^{x} Γ(a, x) = ∫_0^∞ exp(a s − x(e^s − 1)) ds` via `t = x e^s`.
pub fn scaled_gamma_upper(a: f64, x: f64) -> f64 {
    let exponent = |s: f64| a * s - x * s.exp_m1();
    // Integrand peaks at s = ln(a/x) when a > x; stop once it is e^-60 below the peak.
    let s_peak = if a > x { (a / x).ln() } else { 0.0 };
    let floor = exponent(s_peak).max(0.0) - 60.0;
    let mut s_max = s_peak + 1.0;
    while exponent(s_max) > floor {
        s_max += 0.5;
    }
    // The tail decays on a scale of 1/(x e^s) ~ 1/60, so resolve that finely.
    let n = (s_max * 20_000.0) as usize;
    simpson(|s| exponent(s).exp(), 0.0, s_max, n)
}

/// `Γ(a, x)` for any real `a` and `x > 0`.
pub fn gamma_upper(a: f64, x: f64) -> f64 {
    scaled_gamma_upper(a, x) * (a * x.ln() - x).exp()
}

/// `e^x E1(x)`.
pub fn scaled_e1(x: f64) -> f64 {
    scaled_gamma_upper(0.0, x)
}

pub fn e1(x: f64) -> f64 {
    gamma_upper(0.0, x)
}

/// `E1(x) = −γ − ln x − Σ (−x)^k/(k·k!)` with compensated summation; for `x ≤ 2`.
pub fn e1_series(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut term = 1.0f64;
    for k in 1..200 {
        term *= -x / k as f64;
        let y = term / k as f64 - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-20 {
            break;
        }
    }
    -EULER - x.ln() - sum
}

/// `P(N)` with random phases under the channel model itself: given `f` (and
/// the phases), `A_r` is CN(0, Σ w_i |f_i|²), so
/// `P = 1 − ∫_0^∞ e^{−u} Π 1/(1 + u c w_i) du`.
pub fn random_phase_p(w: &[f64], c: f64) -> f64 {
    let f = |u: f64| (-u).exp() * w.iter().map(|wi| 1.0 / (1.0 + u * c * wi)).product::<f64>();
    1.0 - simpson(f, 0.0, 50.0, 200_000)
}

/// Mean and its standard error.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Sample variance and its standard error `sqrt((m4 − s⁴)/n)`.
pub fn var_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    (v, ((m4 - v * v) / n).sqrt())
}

/// Relative difference, falling back to absolute near zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Arguments at which E1 is checked.
pub const E1_GRID: [f64; 14] = [
    1e-3, 0.01, 0.1, 0.3, 0.5, 0.9, 1.0, 1.1, 2.0, 5.0, 10.0, 20.0, 50.0, 200.0,
];
/// Shapes at which Γ(a, x) is checked, including non-positive ones.
pub const GAMMA_A_GRID: [f64; 14] = [
    -3.5, -2.0, -1.5, -1.0, -0.7, -0.3, 0.0, 1e-6, 0.3, 0.5, 1.0, 1.7, 2.5, 4.0,
];
pub const GAMMA_X_GRID: [f64; 10] = [0.01, 0.1, 0.5, 1.0, 1.4, 1.6, 3.0, 7.0, 15.0, 40.0];

/// One Monte Carlo moment check: sample statistic, its target and the
/// standard error of the statistic.
pub struct MomentCheck {
    pub name: String,
    pub got: f64,
    pub want: f64,
    pub se: f64,
}

impl MomentCheck {
    pub fn sigmas(&self) -> f64 {
        (self.got - self.want).abs() / self.se
    }
}

/// Moment identities over `runs` draws: fading magnitudes, per-tag
/// amplitudes, power products and the coherent sum `G_a`.
pub fn moment_checks(runs: usize, seed: u64) -> Vec<MomentCheck> {
    use bstunnel::analytic::adjustable_moments;
    use bstunnel::fading::complex_gaussian;
    use bstunnel::montecarlo::sample_ga;
    use bstunnel::rng::{substream, StreamKind};
    use bstunnel::{build_layout, McConfig, TunnelGeometry};
    use std::f64::consts::PI;

    let geom = TunnelGeometry::reference(40.0).unwrap();
    let layout = build_layout(&geom, 5, 20.0, 2.0, 0.5).unwrap();
    let c = layout.c()[1];
    let mut rng = substream(seed, 0, StreamKind::Channels);
    let mut mag = Vec::with_capacity(runs);
    let mut amp = Vec::with_capacity(runs);
    let mut prod = Vec::with_capacity(runs);
    for _ in 0..runs {
        let g = complex_gaussian(&mut rng);
        let f = complex_gaussian(&mut rng);
        mag.push(g.norm());
        amp.push(g.norm() * f.norm() / c);
        prod.push(g.norm_sqr() * f.norm_sqr());
    }
    let mut out = Vec::new();
    let mut push = |name: &str, (got, se): (f64, f64), want: f64| {
        out.push(MomentCheck {
            name: name.into(),
            got,
            want,
            se,
        })
    };
    push("E|g|", mean_se(&mag), PI.sqrt() / 2.0);
    push("E[a_i]", mean_se(&amp), PI / (4.0 * c));
    push("Var(a_i)", var_se(&amp), (1.0 - PI * PI / 16.0) / (c * c));
    push("E[X_i Y_i]", mean_se(&prod), 1.0);
    push("Var(X_i Y_i)", var_se(&prod), 3.0);

    let sigma = 0.3;
    let mc = McConfig::new(runs as u64, seed, 10_000).unwrap();
    let ga = sample_ga(&layout, sigma, &mc).unwrap();
    let m = adjustable_moments(&layout, sigma);
    let re: Vec<f64> = ga.iter().map(|z| z.re).collect();
    let im: Vec<f64> = ga.iter().map(|z| z.im).collect();
    let spread: Vec<f64> = ga.iter().map(|z| (z - m.mu_g).norm_sqr()).collect();
    push("E[G_a] (real part)", mean_se(&re), m.mu_g);
    push("E[G_a] (imaginary part)", mean_se(&im), 0.0);
    push("E|G_a - mu_G|^2", mean_se(&spread), m.sigma2_g);
    out
}
