//! Sweep configuration: TOML schema, defaults and validation.
//!
//! Every key is optional. Omitted keys take the reference-tunnel defaults
//! (H = 5.3 m, W = 4.8 m, H_t = 4.9 m, H_r = 3.4 m, L = 40 m, η = 0.5,
//! α = 2, 10^5 Monte Carlo runs).

use std::fmt;
use std::path::{Path, PathBuf};

use bstunnel::montecarlo::MIN_FIT_SAMPLES;
use bstunnel::{GeometryError, Method, PhaseRegime, TunnelGeometry};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tag counts above this are rejected as a likely typo.
pub const MAX_TAGS: usize = 10_000;
/// Upper bound on the number of grid points in one sweep.
pub const MAX_POINTS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}syntax error: {message}", at(*line))]
    Syntax { line: Option<usize>, message: String },
    #[error("{}invalid `{field}`: {message}", at(*line))]
    Invalid {
        field: String,
        line: Option<usize>,
        message: String,
    },
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            line: None,
            message: message.to_string(),
        }
    }
}

/// One phase regime or several, written as `phase = "random"` or
/// `phase = ["adjustable", "random"]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseSpec {
    One(PhaseRegime),
    Many(Vec<PhaseRegime>),
}

impl PhaseSpec {
    pub fn regimes(&self) -> Vec<PhaseRegime> {
        match self {
            PhaseSpec::One(r) => vec![*r],
            PhaseSpec::Many(v) => v.clone(),
        }
    }
}

impl Default for PhaseSpec {
    fn default() -> Self {
        PhaseSpec::One(PhaseRegime::Adjustable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryBlock {
    pub height: f64,
    pub width: f64,
    pub length: f64,
    pub tx_height: f64,
    pub rx_height: f64,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        Self {
            height: 5.3,
            width: 4.8,
            length: 40.0,
            tx_height: 4.9,
            rx_height: 3.4,
        }
    }
}

impl GeometryBlock {
    pub fn with_length(&self, length: f64) -> Result<TunnelGeometry, GeometryError> {
        TunnelGeometry::new(self.height, self.width, length, self.tx_height, self.rx_height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    pub alpha: f64,
    pub eta: f64,
    pub sigma_delta: f64,
    pub n_tags: usize,
    /// Tx-Rx axial distance in metres; when absent, `l1_fraction · L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    pub l1_fraction: f64,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            eta: 0.5,
            sigma_delta: 0.1,
            n_tags: 20,
            l1: None,
            l1_fraction: 0.5,
        }
    }
}

/// A grid axis: an explicit list or an inclusive `from`/`to`/`step` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Axis::List(ref v) => v.clone(),
            Axis::Range { from, to, step } => {
                if !(step > 0.0 && from <= to) || !(from.is_finite() && to.is_finite()) {
                    return Vec::new();
                }
                // Small slack so that e.g. 0.1..0.5 step 0.1 keeps its endpoint.
                let count = ((to - from) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| from + i as f64 * step).collect()
            }
        }
    }

    fn check(&self, field: &str) -> Result<Vec<f64>, ConfigError> {
        if let Axis::Range { from, to, step } = *self {
            if !(step > 0.0 && step.is_finite()) {
                return Err(ConfigError::invalid(
                    field,
                    format!("step must be positive, got {step}"),
                ));
            }
            if !(from <= to) {
                return Err(ConfigError::invalid(field, format!("empty range {from}..{to}")));
            }
            if (to - from) / step > MAX_POINTS as f64 {
                return Err(ConfigError::invalid(field, "range has too many points"));
            }
        }
        let values = self.values();
        if values.is_empty() {
            return Err(ConfigError::invalid(field, "axis has no values"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ConfigError::invalid(field, format!("non-finite value {v}")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_delta: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_tags: Option<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McBlock {
    pub runs: u64,
    pub seed: u64,
    pub chunk: u64,
}

impl Default for McBlock {
    fn default() -> Self {
        let mc = bstunnel::McConfig::default();
        Self {
            runs: mc.runs,
            seed: mc.seed,
            chunk: mc.chunk,
        }
    }
}

impl McBlock {
    pub fn to_config(self) -> bstunnel::McConfig {
        bstunnel::McConfig {
            runs: self.runs,
            seed: self.seed,
            chunk: self.chunk,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
    /// Fill `wall_time_ms`. Off by default because it breaks byte-identical output.
    pub timing: bool,
}

/// Distribution mode: histograms of `G_a` and `|G_a|²` against their
/// Gaussian and moment-matched Gamma references instead of `P(N)` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdfBlock {
    pub n_tags: Vec<usize>,
    pub samples: u64,
    pub bins: usize,
}

impl Default for PdfBlock {
    fn default() -> Self {
        Self {
            n_tags: vec![2, 5, 20],
            samples: 100_000,
            bins: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub phase: PhaseSpec,
    pub methods: Vec<Method>,
    pub geometry: GeometryBlock,
    pub model: ModelBlock,
    pub grid: GridBlock,
    pub mc: McBlock,
    pub output: OutputBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdf: Option<PdfBlock>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            phase: PhaseSpec::default(),
            methods: vec![Method::Mc, Method::Gauss, Method::Gamma],
            geometry: GeometryBlock::default(),
            model: ModelBlock::default(),
            grid: GridBlock::default(),
            mc: McBlock::default(),
            output: OutputBlock::default(),
            pdf: None,
        }
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub length: f64,
    pub l1: f64,
    pub sigma_delta: f64,
    pub n_tags: usize,
}

impl SweepConfig {
    pub fn lengths(&self) -> Vec<f64> {
        self.grid
            .length
            .as_ref()
            .map_or_else(|| vec![self.geometry.length], Axis::values)
    }

    fn l1_values(&self, length: f64) -> Vec<f64> {
        match (&self.grid.l1, self.model.l1) {
            (Some(axis), _) => axis.values(),
            (None, Some(l1)) => vec![l1],
            (None, None) => vec![self.model.l1_fraction * length],
        }
    }

    fn sigma_values(&self) -> Vec<f64> {
        self.grid
            .sigma_delta
            .as_ref()
            .map_or_else(|| vec![self.model.sigma_delta], Axis::values)
    }

    fn tag_values(&self) -> Vec<usize> {
        self.grid.n_tags.as_ref().map_or_else(
            || vec![self.model.n_tags],
            |a| a.values().iter().map(|&n| n as usize).collect(),
        )
    }

    /// Grid points in output order: length, then l1, then sigma_delta, with
    /// n_tags varying fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let sigmas = self.sigma_values();
        let tags = self.tag_values();
        let mut out = Vec::new();
        for length in self.lengths() {
            for l1 in self.l1_values(length) {
                for &sigma_delta in &sigmas {
                    for &n_tags in &tags {
                        out.push(GridPoint {
                            length,
                            l1,
                            sigma_delta,
                            n_tags,
                        });
                    }
                }
            }
        }
        out
    }

    /// Checks every invariant; errors name the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let regimes = self.phase.regimes();
        if regimes.is_empty() {
            return Err(ConfigError::invalid("phase", "at least one phase regime is required"));
        }
        if self.pdf.is_none() {
            if self.methods.is_empty() {
                return Err(ConfigError::invalid("methods", "at least one method is required"));
            }
            for (i, m) in self.methods.iter().enumerate() {
                if self.methods[..i].contains(m) {
                    return Err(ConfigError::invalid("methods", format!("`{m}` listed twice")));
                }
            }
            if self.methods.contains(&Method::Exact) && regimes.contains(&PhaseRegime::Adjustable) {
                return Err(ConfigError::invalid(
                    "methods",
                    "method `exact` is only valid with phase = \"random\"",
                ));
            }
        }

        let m = &self.model;
        if !(m.alpha.is_finite() && m.alpha > 0.0) {
            return Err(ConfigError::invalid(
                "model.alpha",
                format!("must be positive, got {}", m.alpha),
            ));
        }
        if !(m.eta > 0.0 && m.eta <= 1.0) {
            return Err(ConfigError::invalid(
                "model.eta",
                format!("must lie in (0, 1], got {}", m.eta),
            ));
        }
        check_sigma("model.sigma_delta", m.sigma_delta)?;
        check_tags("model.n_tags", m.n_tags as f64)?;
        if !(0.0..=1.0).contains(&m.l1_fraction) {
            return Err(ConfigError::invalid(
                "model.l1_fraction",
                format!("must lie in [0, 1], got {}", m.l1_fraction),
            ));
        }

        self.geometry
            .with_length(self.geometry.length)
            .map_err(|e| geometry_error("geometry", e))?;
        let lengths = match &self.grid.length {
            Some(axis) => {
                let v = axis.check("grid.length")?;
                for &l in &v {
                    self.geometry
                        .with_length(l)
                        .map_err(|e| geometry_error("grid.length", e))?;
                }
                v
            }
            None => vec![self.geometry.length],
        };
        if let Some(axis) = &self.grid.sigma_delta {
            for s in axis.check("grid.sigma_delta")? {
                check_sigma("grid.sigma_delta", s)?;
            }
        }
        let mut n_points = lengths.len() as f64 * self.sigma_values().len() as f64;
        if let Some(axis) = &self.grid.n_tags {
            let v = axis.check("grid.n_tags")?;
            for &n in &v {
                check_tags("grid.n_tags", n)?;
            }
            n_points *= v.len() as f64;
        }
        let (l1_field, l1s) = match (&self.grid.l1, m.l1) {
            (Some(axis), _) => ("grid.l1", axis.check("grid.l1")?),
            (None, Some(l1)) => ("model.l1", vec![l1]),
            (None, None) => ("model.l1_fraction", vec![]),
        };
        n_points *= l1s.len().max(1) as f64;
        for &length in &lengths {
            for &l1 in &l1s {
                if !(0.0..=length).contains(&l1) {
                    return Err(ConfigError::invalid(
                        l1_field,
                        format!("l1 = {l1} lies outside [0, L] for L = {length}"),
                    ));
                }
            }
        }
        if n_points > MAX_POINTS as f64 {
            return Err(ConfigError::invalid(
                "grid",
                format!("{n_points} points exceed the limit of {MAX_POINTS}"),
            ));
        }

        if self.mc.runs == 0 {
            return Err(ConfigError::invalid("mc.runs", "must be at least 1"));
        }
        if self.mc.chunk == 0 {
            return Err(ConfigError::invalid("mc.chunk", "must be at least 1"));
        }

        if let Some(pdf) = &self.pdf {
            if pdf.n_tags.is_empty() {
                return Err(ConfigError::invalid("pdf.n_tags", "at least one tag count is required"));
            }
            if let Some(&n) = pdf.n_tags.iter().find(|&&n| n == 0 || n > MAX_TAGS) {
                return Err(ConfigError::invalid(
                    "pdf.n_tags",
                    format!("must lie in 1..={MAX_TAGS}, got {n}"),
                ));
            }
            if pdf.samples < MIN_FIT_SAMPLES as u64 {
                return Err(ConfigError::invalid(
                    "pdf.samples",
                    format!("need at least {MIN_FIT_SAMPLES}, got {}", pdf.samples),
                ));
            }
            if pdf.bins == 0 {
                return Err(ConfigError::invalid("pdf.bins", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}

fn check_sigma(field: &str, s: f64) -> Result<(), ConfigError> {
    if s.is_finite() && s >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("must be non-negative, got {s}")))
    }
}

fn check_tags(field: &str, n: f64) -> Result<(), ConfigError> {
    if n >= 0.0 && n.fract() == 0.0 && n <= MAX_TAGS as f64 {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            field,
            format!("must be an integer in 0..={MAX_TAGS}, got {n}"),
        ))
    }
}

fn geometry_error(section: &str, e: GeometryError) -> ConfigError {
    match e {
        GeometryError::InvalidParameter { name, .. } if section == "geometry" => {
            ConfigError::invalid(format!("geometry.{name}"), e)
        }
        _ => ConfigError::invalid(section, e),
    }
}

/// Parses and validates config text. Errors carry the line they refer to
/// when it can be located.
pub fn parse_config(text: &str) -> Result<SweepConfig, ConfigError> {
    let cfg: SweepConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    cfg.validate().map_err(|e| match e {
        ConfigError::Invalid { field, message, .. } => ConfigError::Invalid {
            line: locate(text, &field),
            field,
            message,
        },
        other => other,
    })?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SweepConfig, ConfigError> {
    if !path.exists() {
        return Err(ConfigError::NotFound(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `section.key` (or a top-level `key`) in `text`.
fn locate(text: &str, field: &str) -> Option<usize> {
    let (section, key) = field.rsplit_once('.').unwrap_or(("", field));
    let mut current = "";
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if current == field {
                section_line = Some(i + 1);
            }
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim();
        if (current == section && k == key) || (current.is_empty() && k == field) {
            return Some(i + 1);
        }
    }
    section_line
}
