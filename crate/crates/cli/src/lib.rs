//! `qcc`: point evaluations, sweeps, channel capacity and the invariant suite.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical
//! failure, 3 validation failure.

pub mod format;
pub mod sweep;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use qcc_core::channel::{ChannelError, ChannelStats};
use qcc_core::config::{ConfigError, ExperimentConfig};
use qcc_core::quadrature::QuadOptions;
use qcc_core::scenario::Dimension;
use qcc_core::signalling::{s2_null_3p1, SignallingError};
use qcc_core::validation::{run_suite, SuiteOptions};
use thiserror::Error;

use crate::format::number;
use crate::sweep::{run_sweep, write_sweep_csv, GridRange, Row, RowStatus, SweepParam, SweepSpec, SWEEP_HEADER};

pub const TOLERANCE_ENV: &str = "QCC_QUAD_TOL";
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "qcc", version, about = "Leading-order detector signalling and channel capacity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one configuration; CSV on stdout, summary on stderr.
    Point {
        config: PathBuf,
        /// Evaluation time for s2, hB_sig and hf_sig (default: Bob's switch-off).
        #[arg(long, allow_negative_numbers = true)]
        eval_time: Option<f64>,
    },
    /// Sweep one parameter and write a CSV file.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Grid as start:stop:step.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        eval_time: Option<f64>,
    },
    /// Channel statistics; the options override the configuration file.
    Capacity {
        config: PathBuf,
        #[arg(long)]
        lambda_product: Option<f64>,
        #[arg(long = "noise-R")]
        noise_r: Option<f64>,
    },
    /// Run the built-in invariant suite.
    Validate {
        /// Random scenarios per randomized check.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Relative tolerance of the 1+1D generic-vs-closed-form check.
        #[arg(long, default_value_t = 1e-8)]
        equivalence_tol: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
    #[error("{0}")]
    Rejected(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0} invariant check(s) failed")]
    ValidationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Output { .. } | CliError::Rejected(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::ValidationFailed(_) => 3,
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::Signalling(SignallingError::Quadrature(q)) => CliError::Numerical(q.to_string()),
            other => CliError::Rejected(other.to_string()),
        }
    }
}

/// Quadrature options from `QCC_QUAD_TOL`, or the default tolerance.
pub fn quad_options(env_value: Option<&str>) -> Result<QuadOptions, CliError> {
    let tol = match env_value {
        None => DEFAULT_TOLERANCE,
        Some(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0 && t.is_finite())
            .ok_or_else(|| CliError::Usage(format!("{TOLERANCE_ENV}={v:?} is not a positive number")))?,
    };
    Ok(QuadOptions::default().with_abs_tol(tol))
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn row_error(row: &Row) -> Option<CliError> {
    let msg = row.message.clone().unwrap_or_default();
    match row.status {
        RowStatus::Ok => None,
        RowStatus::NonConvergence => Some(CliError::Numerical(msg)),
        _ => Some(CliError::Rejected(format!("{}: {msg}", row.status.as_str()))),
    }
}

fn channel_fields(c: &Option<ChannelStats>) -> [String; 6] {
    match c {
        Some(c) => [
            number(c.p),
            number(c.q),
            number(c.success),
            number(c.capacity_closed),
            c.capacity_expansion.map(number).unwrap_or_default(),
            number(c.capacity_bruteforce),
        ],
        None => Default::default(),
    }
}

const CHANNEL_HEADER: [&str; 6] = [
    "p",
    "q",
    "success",
    "capacity_closed",
    "capacity_expansion",
    "capacity_bruteforce",
];

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn write_records<W: Write>(out: W, records: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    for r in records {
        w.write_record(r).map_err(|e| output_error(Path::new("<stdout>"), e))?;
    }
    w.flush().map_err(|e| output_error(Path::new("<stdout>"), e))
}

fn point(
    config: &Path,
    eval_time: Option<f64>,
    opts: &QuadOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let s = &cfg.scenario;
    let row = Row::evaluate(f64::NAN, s, eval_time, opts);
    let channel = ChannelStats::compute(s, cfg.lambda_product, cfg.noise_r, opts);

    let mut header: Vec<String> = SWEEP_HEADER[1..].iter().map(|h| h.to_string()).collect();
    header.extend(CHANNEL_HEADER.iter().map(|h| h.to_string()));
    let mut values: Vec<String> = row.signalling_fields().to_vec();
    values.extend(channel_fields(&channel.as_ref().ok().copied()));
    write_records(&mut *out, &[header, values])?;

    let _ = writeln!(
        err,
        "{} detectors, separation {}, windows [{}, {}] and [{}, {}]: {}",
        s.dimension(),
        s.separation(),
        s.alice().window.t_on,
        s.alice().window.t_off,
        s.bob().window.t_on,
        s.bob().window.t_off,
        s.causal_class()
    );
    let show = |x: Option<f64>| x.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.10e}"));
    let _ = writeln!(err, "  s2      = {} (per lambda_A lambda_B)", show(row.s2));
    let _ = writeln!(err, "  hB_sig  = {}", show(row.hb_sig));
    let _ = writeln!(err, "  hI_on   = {}   hI_off = {}", show(row.hi_on), show(row.hi_off));
    let _ = writeln!(err, "  hf_sig  = {}", show(row.hf_sig));
    let _ = writeln!(err, "  quadrature error estimate {:.3e}, status {}", row.quad_error, row.status.as_str());
    if let Some(m) = &row.message {
        let _ = writeln!(err, "  note: {m}");
    }
    if s.dimension() == Dimension::D3p1 && s.separation() > 0.0 {
        if let Ok(n) = s2_null_3p1(s, opts) {
            if n.intersects {
                let _ = writeln!(
                    err,
                    "  null-cone s2 = {:.10e} (sign depends on the commutator convention)",
                    n.value
                );
            }
        }
    }
    match &channel {
        Ok(c) => {
            let _ = writeln!(
                err,
                "  channel: p = {:.12}, q = {:.12}, guessing success 1/2 + (p - q)/2 = {:.12}",
                c.p, c.q, c.success
            );
            let _ = writeln!(
                err,
                "  capacity (bits): closed {:.6e}, brute force {:.6e}, small-signal {}",
                c.capacity_closed,
                c.capacity_bruteforce,
                c.capacity_expansion.map_or_else(|| "n/a".into(), |v| format!("{v:.6e}"))
            );
        }
        Err(e) => {
            let _ = writeln!(err, "  channel: {e}");
        }
    }
    if let Some(e) = row_error(&row) {
        return Err(e);
    }
    channel.map(|_| ()).map_err(CliError::from)
}

fn sweep(
    config: &Path,
    spec: &SweepSpec,
    out_path: &Path,
    opts: &QuadOptions,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let file = File::create(out_path).map_err(|e| output_error(out_path, e))?;
    let rows = run_sweep(&cfg.scenario, spec, opts);
    write_sweep_csv(&rows, BufWriter::new(file)).map_err(|e| output_error(out_path, e))?;
    let failed = rows.iter().filter(|r| r.status != RowStatus::Ok).count();
    let _ = writeln!(
        err,
        "{} rows written to {} ({} not ok)",
        rows.len(),
        out_path.display(),
        failed
    );
    Ok(())
}

fn capacity(
    config: &Path,
    lambda_product: Option<f64>,
    noise_r: Option<f64>,
    opts: &QuadOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let lp = lambda_product.unwrap_or(cfg.lambda_product);
    let r = noise_r.unwrap_or(cfg.noise_r);
    let c = ChannelStats::compute(&cfg.scenario, lp, r, opts)?;
    let mut header: Vec<String> = vec!["lambda_product".into(), "noise_R".into()];
    header.extend(CHANNEL_HEADER.iter().map(|h| h.to_string()));
    let mut values = vec![number(lp), number(r)];
    values.extend(channel_fields(&Some(c)));
    write_records(&mut *out, &[header, values])?;
    let _ = writeln!(
        err,
        "capacity {:.6e} bits per use (brute force {:.6e}); guessing success {:.12}",
        c.capacity_closed, c.capacity_bruteforce, c.success
    );
    Ok(())
}

fn validate(o: &SuiteOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let checks = run_suite(o);
    for c in &checks {
        let _ = writeln!(out, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(out, "{} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        Err(CliError::ValidationFailed(failed))
    } else {
        Ok(())
    }
}

fn dispatch(cli: Cli, opts: &QuadOptions, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Point { config, eval_time } => point(&config, eval_time, opts, out, err),
        Command::Sweep {
            config,
            param,
            range,
            out: out_path,
            eval_time,
        } => {
            let spec = SweepSpec {
                param,
                range: GridRange::parse(&range).map_err(CliError::Usage)?,
                eval_time,
            };
            sweep(&config, &spec, &out_path, opts, err)
        }
        Command::Capacity {
            config,
            lambda_product,
            noise_r,
        } => capacity(&config, lambda_product, noise_r, opts, out, err),
        Command::Validate {
            samples,
            equivalence_tol,
            seed,
        } => {
            let mut o = SuiteOptions {
                quad: *opts,
                equivalence_tol,
                samples: samples.max(1),
                ..SuiteOptions::default()
            };
            if let Some(seed) = seed {
                o.seed = seed;
            }
            validate(&o, out)
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, tolerance_env: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = quad_options(tolerance_env).and_then(|opts| dispatch(cli, &opts, out, err));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
