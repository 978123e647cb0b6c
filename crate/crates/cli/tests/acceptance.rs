//! Acceptance suite: one PASS/FAIL line per criterion, with the numbers
//! behind each verdict indented underneath. Run with
//! `cargo test -p bstunnel-cli --test acceptance` (optionally followed by
//! `-- 2 5` to run selected criteria). Exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use bstunnel::analytic::{self, adjustable_moments, random_moments};
use bstunnel::baseband::{doppler_shift, residual_phase_step};
use bstunnel::montecarlo::estimate_p;
use bstunnel::specfun::{e1, exp_e1_scaled, scaled_upper_incomplete_gamma, upper_incomplete_gamma};
use bstunnel::{build_layout, McConfig, PhasePolicy, PhaseRegime, TunnelGeometry};
use bstunnel_cli::config::PhaseSpec;
use bstunnel_cli::sweep::{pdf_table, run_rows, ResultRow};
use bstunnel_cli::table::Cell;
use bstunnel_cli::{load_config, SweepConfig};

struct Report {
    lines: Vec<String>,
    failures: usize,
}

impl Report {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            failures: 0,
        }
    }

    fn check(&mut self, ok: bool, line: impl Into<String>) {
        if !ok {
            self.failures += 1;
        }
        self.lines
            .push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, line.into()));
    }

    fn note(&mut self, line: impl Into<String>) {
        self.lines.push(format!("     {}", line.into()));
    }
}

fn presets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn preset(name: &str) -> SweepConfig {
    load_config(&presets().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn reference_layout(n: usize, l1: f64) -> bstunnel::DeploymentLayout {
    build_layout(&TunnelGeometry::reference(40.0).unwrap(), n, l1, 2.0, 0.5).unwrap()
}

fn c1_doppler(r: &mut Report) {
    let v = 97.22;
    for (fc, want, tol, d1, d10) in [
        (1.8e9, 583.0, 1.0, 0.037, 0.37),
        (2.1e9, 680.0, 1.0, 0.043, 0.43),
        (3.5e9, 1130.0, 10.0, 0.071, 0.71),
    ] {
        let fd = doppler_shift(v, fc);
        r.check(
            (fd - want).abs() <= tol,
            format!("f_D({:.1} GHz) = {fd:.3} Hz, target {want} ± {tol}", fc / 1e9),
        );
        for (eps, target) in [(0.01, d1), (0.10, d10)] {
            let step = residual_phase_step(eps, fd, 1e-3);
            let rel = (step - target).abs() / target;
            r.check(
                rel <= 0.02,
                format!("delta(eps={eps}) = {step:.5} rad, target {target} (rel. diff {rel:.4})"),
            );
        }
    }
}

fn c2_random_exact(r: &mut Report) {
    let policy = PhasePolicy::random();
    for l1 in [5.0, 20.0, 35.0] {
        for n in [1, 5, 20, 40] {
            let layout = reference_layout(n, l1);
            let exact = analytic::p_random_exact(&layout).unwrap().value;
            let mc = estimate_p(&layout, &policy, &McConfig::new(1_000_000, 1, 10_000).unwrap()).unwrap();
            let se = mc.stderr.unwrap();
            let tol = (3.0 * se).max(0.005);
            let diff = (exact - mc.value).abs();
            let model = common::random_phase_p(layout.w(), layout.c_const());
            r.check(
                diff <= tol,
                format!(
                    "l1={l1:>4} N={n:>2}: exact {exact:.5}, MC {:.5} ± {se:.5}, |diff| {diff:.5} (tol {tol:.5}); \
                     channel-model integral {model:.5} ({:+.1} se from MC)",
                    mc.value,
                    (mc.value - model) / se
                ),
            );
        }
    }
}

fn c3_adjustable(r: &mut Report) {
    for sigma in [0.1, 0.5] {
        for n in [5, 10, 20, 40, 60] {
            let layout = reference_layout(n, 20.0);
            let m = adjustable_moments(&layout, sigma);
            let gamma = analytic::p_adjustable_gamma(&m, layout.c_const()).unwrap().value;
            let gauss = analytic::p_adjustable_gauss(&m, layout.c_const()).value;
            let policy = PhasePolicy::adjustable(sigma).unwrap();
            let mc = estimate_p(&layout, &policy, &McConfig::new(1_000_000, 1, 10_000).unwrap())
                .unwrap()
                .value;
            r.check(
                (gamma - mc).abs() <= 0.03,
                format!(
                    "sigma={sigma} N={n:>2}: gamma {gamma:.5} vs MC {mc:.5} (|diff| {:.5})",
                    (gamma - mc).abs()
                ),
            );
            if n >= 10 {
                r.check(
                    (gauss - mc).abs() <= 0.03,
                    format!(
                        "sigma={sigma} N={n:>2}: gauss {gauss:.5} vs MC {mc:.5} (|diff| {:.5})",
                        (gauss - mc).abs()
                    ),
                );
            }
        }
    }
}

fn c4_random_approx(r: &mut Report) {
    for length in [20.0, 40.0] {
        let geom = TunnelGeometry::reference(length).unwrap();
        let (mut worst_gamma, mut worst_delta) = ((0.0f64, 0), (0.0f64, 0));
        for n in 1..=80 {
            let layout = build_layout(&geom, n, length / 2.0, 2.0, 0.5).unwrap();
            let exact = analytic::p_random_exact(&layout).unwrap().value;
            let m = random_moments(&layout);
            let gamma = analytic::p_random_gamma(&m, layout.c_const()).unwrap().value;
            let delta = analytic::p_random_gauss_delta(&m, layout.c_const()).value;
            if (gamma - exact).abs() > worst_gamma.0 {
                worst_gamma = ((gamma - exact).abs(), n);
            }
            if (delta - exact).abs() > worst_delta.0 {
                worst_delta = ((delta - exact).abs(), n);
            }
        }
        r.check(
            worst_gamma.0 <= 0.02,
            format!(
                "L={length}: max |gamma - exact| = {:.5} at N={} (tol 0.02)",
                worst_gamma.0, worst_gamma.1
            ),
        );
        r.check(
            worst_delta.0 <= 0.03,
            format!(
                "L={length}: max |delta - exact| = {:.5} at N={} (tol 0.03)",
                worst_delta.0, worst_delta.1
            ),
        );
    }
}

fn c5_distributions(r: &mut Report) {
    let cfg = preset("fig2.toml");
    let pdf = cfg.pdf.clone().expect("fig2.toml has a [pdf] block");
    let table = pdf_table(&cfg, &[2, 5, 20], pdf.samples, pdf.bins).unwrap();
    let mut ks: BTreeMap<(u64, String), f64> = BTreeMap::new();
    for row in &table.rows {
        if let (Cell::Int(n), Cell::Text(q), Cell::Num(d)) = (&row[0], &row[1], &row[7]) {
            ks.insert((*n, q.clone()), *d);
        }
    }
    for n in [2, 5, 20] {
        let d = ks[&(n, "ga_sq".to_string())];
        r.check(
            d <= 0.05,
            format!("N={n:>2}: KS(|G_a|^2, matched Gamma) = {d:.4} (tol 0.05)"),
        );
    }
    let g20 = ks[&(20, "re_ga".to_string())];
    let g2 = ks[&(2, "re_ga".to_string())];
    r.check(g20 <= 0.05, format!("N=20: KS(G_a, Gaussian) = {g20:.4} (tol 0.05)"));
    r.check(
        g2 > g20,
        format!("N=2: KS(G_a, Gaussian) = {g2:.4} exceeds the N=20 value {g20:.4}"),
    );
}

type Curve = Vec<(usize, f64, f64)>;

/// MC curves keyed by (phase, length, l1, sigma), each sorted by N.
fn curves(rows: &[ResultRow]) -> BTreeMap<(String, String, String, String), Curve> {
    let mut out: BTreeMap<_, Curve> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.method == bstunnel::Method::Mc) {
        let key = (
            row.phase.to_string(),
            format!("{}", row.length),
            format!("{}", row.l1),
            format!("{}", row.sigma_delta),
        );
        out.entry(key)
            .or_default()
            .push((row.n_tags, row.value, row.stderr.unwrap_or(0.0)));
    }
    for c in out.values_mut() {
        c.sort_by_key(|p| p.0);
    }
    out
}

fn value_at(curve: &Curve, n: usize) -> Option<f64> {
    curve.iter().find(|p| p.0 == n).map(|p| p.1)
}

fn c6_qualitative(r: &mut Report, fig4_random: &[ResultRow]) {
    let start = Instant::now();
    let fig3 = run_rows(&preset("fig3.toml")).unwrap();
    r.note(format!("fig3 grid evaluated in {:.0} s", start.elapsed().as_secs_f64()));
    let mut fig4_adj_cfg = preset("fig4.toml");
    fig4_adj_cfg.phase = PhaseSpec::One(PhaseRegime::Adjustable);
    fig4_adj_cfg.methods = vec![bstunnel::Method::Mc];
    let fig4_adj = run_rows(&fig4_adj_cfg).unwrap();
    let fig5 = run_rows(&preset("fig5.toml")).unwrap();

    // Nondecreasing in N (adjustable), allowing 3 standard errors of the difference.
    for (key, curve) in curves(&fig3) {
        let mut worst: Option<(usize, f64, f64)> = None;
        for w in curve.windows(2) {
            let drop = w[0].1 - w[1].1;
            let slack = 3.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt();
            if drop > slack && worst.is_none_or(|(_, d, _)| drop > d) {
                worst = Some((w[1].0, drop, slack));
            }
        }
        let label = format!("fig3 l1={} sigma={}", key.2, key.3);
        match worst {
            None => r.check(true, format!("{label}: MC nondecreasing in N within 3 se")),
            Some((n, d, s)) => r.check(false, format!("{label}: MC drops by {d:.4} (slack {s:.4}) at N={n}")),
        }
    }

    // Saturation: p(80) - p(60) <= 0.02 in both regimes.
    let mut sat_curves = curves(&fig3);
    sat_curves.extend(curves(fig4_random));
    for (key, curve) in &sat_curves {
        if let (Some(p60), Some(p80)) = (value_at(curve, 60), value_at(curve, 80)) {
            r.check(
                p80 - p60 <= 0.02,
                format!(
                    "saturation {} L={} l1={} sigma={}: p(80) - p(60) = {:.4} (tol 0.02)",
                    key.0,
                    key.1,
                    key.2,
                    key.3,
                    p80 - p60
                ),
            );
        }
    }

    // Adjustable >= random at matched seeds, pointwise.
    let pair = |adj: &[ResultRow], rnd: &[ResultRow], label: &str, r: &mut Report| {
        let key = |x: &ResultRow| (format!("{} {} {}", x.length, x.l1, x.n_tags), x.value);
        let adj: BTreeMap<_, _> = adj
            .iter()
            .filter(|x| x.method == bstunnel::Method::Mc && x.phase == PhaseRegime::Adjustable)
            .map(key)
            .collect();
        let rnd: Vec<_> = rnd
            .iter()
            .filter(|x| x.method == bstunnel::Method::Mc && x.phase == PhaseRegime::Random)
            .map(key)
            .collect();
        let violations: Vec<_> = rnd.iter().filter(|(k, v)| adj.get(k).is_some_and(|a| a < v)).collect();
        let compared = rnd.iter().filter(|(k, _)| adj.contains_key(k)).count();
        r.check(
            violations.is_empty() && compared > 0,
            format!(
                "{label}: adjustable >= random at {}/{compared} points",
                compared - violations.len()
            ),
        );
    };
    pair(&fig4_adj, fig4_random, "fig4 grid", r);
    pair(&fig5, &fig5, "fig5 grid", r);

    // fig5 l1-profile: peak near the centre for adjustable phases, flatter for random.
    let fig5_curves = |phase: &str, n: usize| -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = fig5
            .iter()
            .filter(|x| x.method == bstunnel::Method::Mc && x.phase.to_string() == phase && x.n_tags == n)
            .map(|x| (x.l1, x.value))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let adj40 = fig5_curves("adjustable", 40);
    let at = |c: &[(f64, f64)], l1: f64| c.iter().find(|p| (p.0 - l1).abs() < 1e-9).map(|p| p.1).unwrap();
    let (mid, lo, hi) = (at(&adj40, 20.0), at(&adj40, 4.0), at(&adj40, 36.0));
    r.check(
        mid >= lo && mid >= hi,
        format!("fig5 adjustable N=40: P(l1=20) = {mid:.5}, P(l1=4) = {lo:.5}, P(l1=36) = {hi:.5}"),
    );
    for n in [20, 40, 60] {
        let spread = |c: Vec<(f64, f64)>| {
            let vals: Vec<f64> = c.iter().map(|p| p.1).collect();
            vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min)
        };
        let (sa, sr) = (spread(fig5_curves("adjustable", n)), spread(fig5_curves("random", n)));
        r.check(
            sr < sa,
            format!("fig5 N={n}: l1-profile spread random {sr:.4} < adjustable {sa:.4}"),
        );
    }
}

fn c7_special_functions(r: &mut Report) {
    let mut worst = (0.0f64, String::new());
    let mut track = |got: f64, want: f64, what: String| {
        let d = common::rel_diff(got, want);
        if d > worst.0 {
            worst = (d, what);
        }
    };
    for &x in &common::E1_GRID {
        track(exp_e1_scaled(x).unwrap(), common::scaled_e1(x), format!("e^x E1({x})"));
        if x <= 20.0 {
            track(e1(x).unwrap(), common::e1(x), format!("E1({x})"));
        }
        if x <= 2.0 {
            track(e1(x).unwrap(), common::e1_series(x), format!("E1({x}) vs series"));
        }
    }
    let e1_worst = worst.clone();
    worst = (0.0, String::new());
    for &a in &common::GAMMA_A_GRID {
        for &x in &common::GAMMA_X_GRID {
            let mut track = |got: f64, want: f64, what: String| {
                let d = common::rel_diff(got, want);
                if d > worst.0 {
                    worst = (d, what);
                }
            };
            track(
                scaled_upper_incomplete_gamma(a, x).unwrap(),
                common::scaled_gamma_upper(a, x),
                format!("scaled Γ({a}, {x})"),
            );
            if x <= 15.0 {
                track(
                    upper_incomplete_gamma(a, x).unwrap(),
                    common::gamma_upper(a, x),
                    format!("Γ({a}, {x})"),
                );
            }
        }
    }
    r.check(
        e1_worst.0 < 1e-10,
        format!(
            "E1 on {} points: worst relative error {:.2e} ({})",
            common::E1_GRID.len(),
            e1_worst.0,
            e1_worst.1
        ),
    );
    r.check(
        worst.0 < 1e-10,
        format!(
            "Γ(a, x) on {}x{} points (a from {} to {}): worst relative error {:.2e} ({})",
            common::GAMMA_A_GRID.len(),
            common::GAMMA_X_GRID.len(),
            common::GAMMA_A_GRID[0],
            common::GAMMA_A_GRID[common::GAMMA_A_GRID.len() - 1],
            worst.0,
            worst.1
        ),
    );
    let mut violations = 0;
    let mut count = 0;
    let mut lx = -3.0;
    while lx <= 8.0 {
        let x = 10f64.powf(lx);
        let v = exp_e1_scaled(x).unwrap();
        // The lower bound is within ~x^-2 (relative) of the value at the top of the range.
        if !(0.5 * (2.0 / x).ln_1p() < v * (1.0 + 4.0 * f64::EPSILON) && v < (1.0 / x).ln_1p()) {
            violations += 1;
        }
        count += 1;
        lx += 0.01;
    }
    r.check(
        violations == 0,
        format!("scaled-E1 bracketing on [1e-3, 1e8]: {violations} violations in {count} points"),
    );
}

fn c8_moments(r: &mut Report) {
    for c in common::moment_checks(1_000_000, 2024) {
        r.check(
            c.sigmas() <= 3.0,
            format!("{}: {:.6} vs {:.6} ({:.2} se)", c.name, c.got, c.want, c.sigmas()),
        );
    }
}

/// Runs the fig4 sweep through the binary; returns the CSV bytes.
fn fig4_csv(threads: Option<&str>) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4.csv");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bstunnel"));
    cmd.args(["sweep", "--config"])
        .arg(presets().join("fig4.toml"))
        .arg("--output")
        .arg(&out)
        .env_remove("BSTUNNEL_THREADS");
    if let Some(t) = threads {
        cmd.env("BSTUNNEL_THREADS", t);
    }
    let status = cmd.output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out).unwrap()
}

fn c9_reproducibility(r: &mut Report) -> Vec<u8> {
    let reference = fig4_csv(None);
    r.note(format!(
        "reference run: {} bytes, {} lines",
        reference.len(),
        reference.split(|&b| b == b'\n').count() - 1
    ));
    let again = fig4_csv(None);
    r.check(again == reference, "second run with default workers is byte-identical");
    for t in ["1", "4", "16"] {
        r.check(
            fig4_csv(Some(t)) == reference,
            format!("BSTUNNEL_THREADS={t} is byte-identical"),
        );
    }
    reference
}

fn parse_rows(csv_bytes: &[u8]) -> Vec<ResultRow> {
    let text = String::from_utf8(csv_bytes.to_vec()).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            ResultRow {
                phase: if f[0] == "random" {
                    PhaseRegime::Random
                } else {
                    PhaseRegime::Adjustable
                },
                length: f[1].parse().unwrap(),
                l1: f[2].parse().unwrap(),
                sigma_delta: f[3].parse().unwrap(),
                n_tags: f[4].parse().unwrap(),
                alpha: f[5].parse().unwrap(),
                eta: f[6].parse().unwrap(),
                method: f[7].parse().unwrap(),
                value: f[8].parse().unwrap(),
                stderr: f[9].parse().ok(),
                wall_time_ms: f[10].parse().ok(),
            }
        })
        .collect()
}

fn main() {
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wants = |id: u8| selected.is_empty() || selected.contains(&id);
    let titles = [
        "Doppler arithmetic",
        "Random-phase exact integral vs Monte Carlo",
        "Adjustable-phase approximations vs Monte Carlo",
        "Random-phase approximations vs exact integral",
        "Distribution fits (fig2.toml)",
        "Qualitative curve properties on the fig3/fig4/fig5 grids",
        "Special functions vs brute-force oracles",
        "Moment identities by Monte Carlo",
        "Sweep reproducibility (fig4.toml)",
    ];
    let mut passed = 0;
    let mut ran = 0;
    let mut fig4: Option<Vec<u8>> = None;
    // Criterion 9 runs first so criterion 6 can reuse its fig4 table.
    for id in [1u8, 2, 3, 4, 5, 7, 8, 9, 6] {
        if !wants(id) {
            continue;
        }
        let start = Instant::now();
        let mut r = Report::new();
        match id {
            1 => c1_doppler(&mut r),
            2 => c2_random_exact(&mut r),
            3 => c3_adjustable(&mut r),
            4 => c4_random_approx(&mut r),
            5 => c5_distributions(&mut r),
            6 => {
                let bytes = fig4.take().unwrap_or_else(|| fig4_csv(None));
                c6_qualitative(&mut r, &parse_rows(&bytes));
            }
            7 => c7_special_functions(&mut r),
            8 => c8_moments(&mut r),
            9 => fig4 = Some(c9_reproducibility(&mut r)),
            _ => unreachable!(),
        }
        ran += 1;
        let ok = r.failures == 0;
        if ok {
            passed += 1;
        }
        println!(
            "{} criterion {id}: {} ({:.1} s)",
            if ok { "PASS" } else { "FAIL" },
            titles[id as usize - 1],
            start.elapsed().as_secs_f64()
        );
        for line in &r.lines {
            println!("    {line}");
        }
    }
    println!("acceptance: {passed}/{ran} criteria passed");
    if passed != ran {
        std::process::exit(1);
    }
}
