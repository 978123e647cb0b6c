//! Grid evaluation and the `P(N)` / distribution tables.

use std::time::Instant;

use bstunnel::analytic::{self, AnalyticError};
use bstunnel::montecarlo::{self, fit_and_compare, McError, Reference};
use bstunnel::specfun::{gamma_moment_match, SpecfunError};
use bstunnel::{
    build_layout, DeploymentLayout, GeometryError, McConfig, Method, PhasePolicy, PhaseRegime, ProbabilityEstimate,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{GridPoint, SweepConfig};
use crate::table::{Cell, Table};

/// Header of the `P(N)` table, in column order.
pub const RESULT_COLUMNS: [&str; 11] = [
    "phase",
    "length",
    "l1",
    "sigma_delta",
    "n_tags",
    "alpha",
    "eta",
    "method",
    "value",
    "stderr",
    "wall_time_ms",
];

/// Header of the distribution table.
pub const PDF_COLUMNS: [&str; 8] = [
    "n_tags",
    "quantity",
    "reference",
    "bin_lo",
    "bin_hi",
    "density",
    "reference_pdf",
    "ks",
];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("method `exact` needs phase = random")]
    MethodPhaseMismatch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error("{0}")]
    Fading(#[from] bstunnel::fading::FadingError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl SweepError {
    /// Config-class errors are the caller's fault; the rest are numerical.
    pub fn is_config(&self) -> bool {
        matches!(self, SweepError::MethodPhaseMismatch | SweepError::Geometry(_))
    }
}

/// One row of the `P(N)` table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub phase: PhaseRegime,
    pub length: f64,
    pub l1: f64,
    pub sigma_delta: f64,
    pub n_tags: usize,
    pub alpha: f64,
    pub eta: f64,
    pub method: Method,
    pub value: f64,
    pub stderr: Option<f64>,
    pub wall_time_ms: Option<f64>,
}

impl ResultRow {
    pub fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.phase.to_string()),
            Cell::Num(self.length),
            Cell::Num(self.l1),
            Cell::Num(self.sigma_delta),
            Cell::Int(self.n_tags as u64),
            Cell::Num(self.alpha),
            Cell::Num(self.eta),
            Cell::Text(self.method.to_string()),
            Cell::Num(self.value),
            self.stderr.map_or(Cell::Empty, Cell::Num),
            self.wall_time_ms.map_or(Cell::Empty, Cell::Num),
        ]
    }
}

/// `P(N)` for one layout by the requested method.
pub fn evaluate(
    layout: &DeploymentLayout,
    regime: PhaseRegime,
    sigma_delta: f64,
    method: Method,
    mc: &McConfig,
) -> Result<ProbabilityEstimate, SweepError> {
    let c = layout.c_const();
    Ok(match (method, regime) {
        (Method::Mc, _) => montecarlo::estimate_p(layout, &PhasePolicy::new(regime, sigma_delta)?, mc)?,
        (Method::Gauss, PhaseRegime::Adjustable) => {
            analytic::p_adjustable_gauss(&analytic::adjustable_moments(layout, sigma_delta), c)
        }
        (Method::Gamma, PhaseRegime::Adjustable) => {
            analytic::p_adjustable_gamma(&analytic::adjustable_moments(layout, sigma_delta), c)?
        }
        (Method::Gauss, PhaseRegime::Random) => analytic::p_random_gauss_delta(&analytic::random_moments(layout), c),
        (Method::Gamma, PhaseRegime::Random) => analytic::p_random_gamma(&analytic::random_moments(layout), c)?,
        (Method::Exact, PhaseRegime::Random) => analytic::p_random_exact(layout)?,
        (Method::Exact, PhaseRegime::Adjustable) => return Err(SweepError::MethodPhaseMismatch),
    })
}

fn point_rows(cfg: &SweepConfig, regime: PhaseRegime, p: &GridPoint) -> Result<Vec<ResultRow>, SweepError> {
    let geom = cfg.geometry.with_length(p.length)?;
    let layout = build_layout(&geom, p.n_tags, p.l1, cfg.model.alpha, cfg.model.eta)?;
    let mc = cfg.mc.to_config();
    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let est = evaluate(&layout, regime, p.sigma_delta, method, &mc)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            Ok(ResultRow {
                phase: regime,
                length: p.length,
                l1: p.l1,
                sigma_delta: p.sigma_delta,
                n_tags: p.n_tags,
                alpha: cfg.model.alpha,
                eta: cfg.model.eta,
                method,
                value: est.value,
                stderr: est.stderr,
                wall_time_ms: cfg.output.timing.then_some(elapsed),
            })
        })
        .collect()
}

/// Evaluates every (phase, grid point, method) combination. Points run
/// concurrently; rows come back in grid order.
pub fn run_rows(cfg: &SweepConfig) -> Result<Vec<ResultRow>, SweepError> {
    let points = cfg.points();
    let jobs: Vec<(PhaseRegime, GridPoint)> = cfg
        .phase
        .regimes()
        .into_iter()
        .flat_map(|r| points.iter().map(move |p| (r, *p)))
        .collect();
    let nested: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|(regime, p)| point_rows(cfg, *regime, p))
        .collect::<Result<_, _>>()?;
    Ok(nested.into_iter().flatten().collect())
}

pub fn rows_table(rows: &[ResultRow]) -> Table {
    let mut t = Table::new(RESULT_COLUMNS.to_vec());
    for r in rows {
        t.push(r.cells());
    }
    t
}

/// Histograms of `Re G_a` and `|G_a|²` against `N(μ_G, σ_G²)` and the
/// moment-matched Gamma law, one block per tag count.
pub fn pdf_table(cfg: &SweepConfig, n_tags: &[usize], samples: u64, bins: usize) -> Result<Table, SweepError> {
    let length = cfg.geometry.length;
    let geom = cfg.geometry.with_length(length)?;
    let l1 = cfg.model.l1.unwrap_or(cfg.model.l1_fraction * length);
    let sigma = cfg.model.sigma_delta;
    let mc = McConfig::new(samples, cfg.mc.seed, cfg.mc.chunk)?;
    let mut table = Table::new(PDF_COLUMNS.to_vec());
    for &n in n_tags {
        let layout = build_layout(&geom, n, l1, cfg.model.alpha, cfg.model.eta)?;
        let ga = montecarlo::sample_ga(&layout, sigma, &mc)?;
        let m = analytic::adjustable_moments(&layout, sigma);
        let re: Vec<f64> = ga.iter().map(|z| z.re).collect();
        let sq: Vec<f64> = ga.iter().map(|z| z.norm_sqr()).collect();
        let gauss = Reference::Gaussian {
            mean: m.mu_g,
            std: m.sigma2_g.sqrt(),
        };
        let mean = m.mu_g * m.mu_g + m.sigma2_g;
        let var = 2.0 * m.sigma2_g * m.sigma2_g + 4.0 * m.sigma2_g * m.mu_g * m.mu_g;
        let gamma = Reference::Gamma(gamma_moment_match(mean, var)?);
        for (quantity, reference, name, data) in [("re_ga", gauss, "gaussian", re), ("ga_sq", gamma, "gamma", sq)] {
            let report = fit_and_compare(&data, &reference, bins)?;
            let edges = &report.histogram.edges;
            for (i, (h, r)) in report.histogram.heights().iter().zip(&report.reference_pdf).enumerate() {
                table.push(vec![
                    Cell::Int(n as u64),
                    Cell::Text(quantity.into()),
                    Cell::Text(name.into()),
                    Cell::Num(edges[i]),
                    Cell::Num(edges[i + 1]),
                    Cell::Num(*h),
                    Cell::Num(*r),
                    Cell::Num(report.ks),
                ]);
            }
        }
    }
    Ok(table)
}

/// Runs the sweep described by `cfg` and returns its table.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Table, SweepError> {
    match &cfg.pdf {
        Some(pdf) => pdf_table(cfg, &pdf.n_tags, pdf.samples, pdf.bins),
        None => Ok(rows_table(&run_rows(cfg)?)),
    }
}
