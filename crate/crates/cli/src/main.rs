use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bstunnel::{build_layout, Method, PhaseRegime};
use bstunnel_cli::commands::{doppler_report, run_baseband, BasebandCommandError, BasebandRequest};
use bstunnel_cli::config::{Format, PdfBlock, PhaseSpec, SweepConfig};
use bstunnel_cli::sweep::{evaluate, pdf_table, run_sweep, SweepError};
use bstunnel_cli::units::{parse_duration, parse_frequency, parse_speed};
use bstunnel_cli::{init_threads_from_env, load_config, ConfigError};
use clap::{Parser, Subcommand};

/// Backscatter-assisted rail-tunnel link calculator.
#[derive(Parser)]
#[command(name = "bstunnel", version, about)]
struct Cli {
    /// Worker threads; overrides the BSTUNNEL_THREADS environment variable.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate P(N) at a single operating point.
    Prob {
        #[arg(long, value_parser = parse_phase, default_value = "adjustable")]
        phase: PhaseRegime,
        #[arg(long, default_value = "gamma")]
        method: Method,
        /// Number of tags.
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Tx-Rx axial distance in metres (default: half the tunnel length).
        #[arg(long)]
        l1: Option<f64>,
        #[arg(long, default_value_t = 40.0)]
        length: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma_delta: f64,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        chunk: u64,
    },
    /// Run a parameter sweep described by a TOML config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output path; overrides `output.path` from the config. `-` is stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<Format>,
    },
    /// Histograms of G_a and |G_a|^2 with their reference densities.
    Pdf {
        /// Tag counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "20")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 60)]
        bins: usize,
        #[arg(long, default_value_t = 0.1)]
        sigma_delta: f64,
        #[arg(long, default_value_t = 40.0)]
        length: f64,
        #[arg(long)]
        l1: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_parser = parse_format, default_value = "csv")]
        format: Format,
    },
    /// Doppler shift and residual phase step per sample.
    Doppler {
        /// Speed, m/s or with a `kmh` suffix.
        #[arg(long, value_parser = parse_speed)]
        speed: f64,
        /// Carrier frequency, Hz or with a `GHz`/`MHz`/`kHz` suffix.
        #[arg(long, value_parser = parse_frequency)]
        fc: f64,
        /// Sample period, s or with a `ms`/`us` suffix.
        #[arg(long, value_parser = parse_duration, default_value = "1ms")]
        ts: f64,
        /// Fraction of the Doppler shift left after compensation.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
    /// Synthesize a baseband trace and report the residual phase after compensation.
    Baseband {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        n_tags: usize,
        #[arg(long, default_value_t = 20.0)]
        l1: f64,
        #[arg(long, default_value_t = 40.0)]
        length: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Trace CSV path; the trace goes to stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_phase(s: &str) -> Result<PhaseRegime, String> {
    match s {
        "adjustable" => Ok(PhaseRegime::Adjustable),
        "random" => Ok(PhaseRegime::Random),
        _ => Err(format!("unknown phase `{s}` (expected adjustable or random)")),
    }
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format `{s}` (expected csv or json)")),
    }
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Io(e) => Failure::Io(e.to_string()),
            e if e.is_config() => Failure::Config(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn point_config(length: f64, l1: Option<f64>, sigma_delta: f64, seed: u64) -> SweepConfig {
    let mut cfg = SweepConfig::default();
    cfg.geometry.length = length;
    cfg.model.l1 = l1;
    cfg.model.sigma_delta = sigma_delta;
    cfg.mc.seed = seed;
    cfg
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Prob {
            phase,
            method,
            n,
            l1,
            length,
            sigma_delta,
            eta,
            alpha,
            runs,
            seed,
            chunk,
        } => {
            let mut cfg = point_config(length, l1, sigma_delta, seed);
            cfg.phase = PhaseSpec::One(phase);
            cfg.methods = vec![method];
            cfg.model.n_tags = n;
            cfg.model.eta = eta;
            cfg.model.alpha = alpha;
            cfg.mc.runs = runs;
            cfg.mc.chunk = chunk;
            cfg.validate()?;
            let point = cfg.points()[0];
            let geom = cfg.geometry.with_length(point.length).map_err(SweepError::from)?;
            let layout = build_layout(&geom, n, point.l1, alpha, eta).map_err(SweepError::from)?;
            let est = evaluate(&layout, phase, sigma_delta, method, &cfg.mc.to_config())?;
            let json = serde_json::to_string_pretty(&est).map_err(|e| Failure::Io(e.to_string()))?;
            println!("{json}");
        }
        Command::Sweep { config, output, format } => {
            let mut cfg = load_config(&config)?;
            if let Some(path) = output {
                cfg.output.path = Some(path);
            }
            if let Some(f) = format {
                cfg.output.format = f;
            }
            let table = run_sweep(&cfg)?;
            match cfg.output.path.as_ref().filter(|p| p.as_os_str() != "-") {
                Some(path) => {
                    table.write_atomic(path, cfg.output.format)?;
                    eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
                }
                None => table.write(io::stdout().lock(), cfg.output.format)?,
            }
        }
        Command::Pdf {
            n,
            samples,
            bins,
            sigma_delta,
            length,
            l1,
            seed,
            output,
            format,
        } => {
            let mut cfg = point_config(length, l1, sigma_delta, seed);
            cfg.pdf = Some(PdfBlock {
                n_tags: n.clone(),
                samples,
                bins,
            });
            cfg.validate()?;
            let table = pdf_table(&cfg, &n, samples, bins)?;
            match output {
                Some(path) => table.write_atomic(&path, format)?,
                None => table.write(io::stdout().lock(), format)?,
            }
        }
        Command::Doppler { speed, fc, ts, eps } => {
            let report = doppler_report(speed, fc, ts, eps).map_err(Failure::Config)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Io(e.to_string()))?;
            println!("{json}");
        }
        Command::Baseband {
            preset,
            samples,
            n_tags,
            l1,
            length,
            seed,
            eps,
            output,
        } => {
            let req = BasebandRequest {
                preset,
                samples,
                n_tags,
                length,
                l1,
                seed,
                eps,
            };
            let (trace, summary) = run_baseband(&req).map_err(|e| match e {
                BasebandCommandError::Baseband(e) => Failure::Numerical(e.to_string()),
                e => Failure::Config(e.to_string()),
            })?;
            let json = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Io(e.to_string()))?;
            match output {
                Some(path) => {
                    let mut buf = Vec::new();
                    trace.write_csv(&mut buf).map_err(|e| Failure::Io(e.to_string()))?;
                    std::fs::write(&path, buf)?;
                    println!("{json}");
                }
                None => {
                    trace
                        .write_csv(io::stdout().lock())
                        .map_err(|e| Failure::Io(e.to_string()))?;
                    eprintln!("{json}");
                }
            }
        }
    }
    io::stdout().flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match cli.threads {
        Some(0) => Err("--threads must be a positive integer".to_string()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map(|_| ())
            .map_err(|e| e.to_string()),
        None => init_threads_from_env().map(|_| ()),
    };
    if let Err(msg) = threads {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
