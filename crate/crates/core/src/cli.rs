//! Command-line front end. [`run`] is the whole program minus process exit,
//! so it can be driven from tests.

use crate::data::{self, ColumnSpec, Growth};
use crate::error::{MagmarError, Result};
use crate::estimation::{self, Candidate, Criterion, FitOptions, FitResult};
use crate::model::{self, DEFAULT_BURN_IN, DEFAULT_INIT};
use crate::model_string::parse_model_string;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Candidates used by `select` when no `--model` is given.
pub const DEFAULT_CANDIDATES: [&str; 5] =
    ["MAGMAR(4,0)-ggtg", "MAGMAR(4,1)-nnnn-n", "MAGMAR(4,1)-gggg-t", "MAGMAR(4,1)-ggtg-t", "MAGMAR(4,1)-ging-t"];

#[derive(Debug, Parser)]
#[command(name = "magmar", version, about = "MAGMAR copula time-series models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn a level series into pseudo-observations.
    Transform {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Simulate a path from a model with given parameters.
    Simulate {
        #[arg(long)]
        model: String,
        /// Comma-separated parameter values, AR part first. Defaults to the
        /// family defaults.
        #[arg(long, allow_hyphen_values = true)]
        params: Option<String>,
        #[arg(long, short = 'n')]
        length: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Fit one model by pseudo-maximum likelihood.
    Fit {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long)]
        model: String,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Fit several models and rank them by an information criterion.
    Select {
        #[command(flatten)]
        io: InputArgs,
        /// Candidate model; repeat for several. Defaults to a standard set.
        #[arg(long = "model")]
        models: Vec<String>,
        #[arg(long, default_value = "aic")]
        criterion: Criterion,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Lag-wise autocorrelation and Kendall's tau.
    Diagnose {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long, default_value_t = 10)]
        max_lag: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Treat the input as levels and convert growth rates to
    /// pseudo-observations. Without it, `transform` uses the values as they
    /// are and the other commands expect pseudo-observations.
    #[arg(long)]
    growth: Option<Growth>,
    #[arg(long, default_value = "date")]
    date_column: String,
    /// Value column; defaults to `value` for levels and `u` otherwise.
    #[arg(long)]
    value_column: Option<String>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, default_value_t = DEFAULT_INIT)]
    init: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random restarts besides the default starting point.
    #[arg(long, default_value_t = 5)]
    restarts: usize,
}

impl FitArgs {
    fn options(&self) -> Result<FitOptions> {
        if !(self.init > 0.0 && self.init < 1.0) {
            return Err(MagmarError::NotInUnitInterval(self.init));
        }
        Ok(FitOptions { init: self.init, restarts: self.restarts, seed: self.seed, ..FitOptions::default() })
    }
}

/// Fit record as written by `fit` and `select`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub model: String,
    pub n_params: usize,
    pub nll: f64,
    pub aic: f64,
    pub bic: f64,
    pub params: Vec<f64>,
    pub converged: bool,
}

/// Rounds to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float")
}

impl From<&FitResult> for FitRecord {
    fn from(r: &FitResult) -> Self {
        FitRecord {
            model: r.spec.model_string(),
            n_params: r.n_params,
            nll: sig6(r.nll),
            aic: sig6(r.aic),
            bic: sig6(r.bic),
            params: r.spec.params().into_iter().map(sig6).collect(),
            converged: r.converged,
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &MagmarError) -> i32 {
    if e.is_numerical() {
        return EXIT_NUMERICAL;
    }
    match e {
        MagmarError::Data { .. }
        | MagmarError::Io(_)
        | MagmarError::NotInUnitInterval(_)
        | MagmarError::SeriesTooShort { .. }
        | MagmarError::DimensionMismatch { .. } => EXIT_DATA,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Transform { io, output } => {
            let raw = load(&io, "value")?;
            let series = match io.growth {
                Some(g) => data::growth_rates(&raw, g)?,
                None => raw,
            };
            let (u, _) = data::pseudo_observations(&series.values)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["date", "x", "u"]).map_err(csv_err)?;
            for ((d, x), u) in series.dates.iter().zip(&series.values).zip(u.values()) {
                w.write_record([d.as_str(), &x.to_string(), &u.to_string()]).map_err(csv_err)?;
            }
            emit(output.as_deref(), &w.into_inner().map_err(|e| MagmarError::Io(e.to_string()))?, stdout)
        }
        Command::Simulate { model, params, length, seed, burn_in, output } => {
            let mut spec = parse_model_string(&model)?;
            if let Some(p) = params {
                spec = spec.with_params(&parse_params(&p)?)?;
            }
            let sim = model::simulate(&spec, length, seed, burn_in)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["t", "u", "w"]).map_err(csv_err)?;
            for (t, (u, e)) in sim.series.values().iter().zip(&sim.innovations).enumerate() {
                w.write_record([(t + 1).to_string(), u.to_string(), e.to_string()]).map_err(csv_err)?;
            }
            emit(output.as_deref(), &w.into_inner().map_err(|e| MagmarError::Io(e.to_string()))?, stdout)
        }
        Command::Fit { io, model, fit, output } => {
            let spec = parse_model_string(&model)?;
            let opts = fit.options()?;
            let series = pseudo_series(&io)?;
            let result = estimation::fit(&spec, &series, &opts)?;
            let mut text = serde_json::to_string_pretty(&FitRecord::from(&result)).map_err(json_err)?;
            text.push('\n');
            emit(output.as_deref(), text.as_bytes(), stdout)
        }
        Command::Select { io, models, criterion, jobs, fit, output } => {
            let models: Vec<String> =
                if models.is_empty() { DEFAULT_CANDIDATES.iter().map(|s| s.to_string()).collect() } else { models };
            for m in &models {
                parse_model_string(m)?;
            }
            let opts = fit.options()?;
            let series = pseudo_series(&io)?;
            let ranked = estimation::select(&models, &series, criterion, &opts, jobs)?;
            if let Some(Candidate { result: Err(e), .. }) = ranked.first() {
                // Failures sort last, so every candidate failed.
                return Err(e.clone());
            }
            emit(output.as_deref(), select_table(&ranked).as_bytes(), stdout)
        }
        Command::Diagnose { io, max_lag, output } => {
            let series = pseudo_series(&io)?;
            let rows = data::diagnostics(&series, max_lag)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["lag", "acf", "kendall_tau"]).map_err(csv_err)?;
            for r in rows {
                w.write_record([r.lag.to_string(), sig6(r.acf).to_string(), sig6(r.kendall_tau).to_string()])
                    .map_err(csv_err)?;
            }
            emit(output.as_deref(), &w.into_inner().map_err(|e| MagmarError::Io(e.to_string()))?, stdout)
        }
    }
}

/// Ranked table with one row per candidate; failed fits are listed last.
pub fn select_table(ranked: &[Candidate]) -> String {
    let width = ranked.iter().map(|c| c.model.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}  {:>8}  {:>10}  {:>10}  {:>10}\n", "model", "n_params", "nll", "aic", "bic");
    for c in ranked {
        match &c.result {
            Ok(r) => {
                let rec = FitRecord::from(r);
                out += &format!(
                    "{:<width$}  {:>8}  {:>10}  {:>10}  {:>10}\n",
                    c.model, rec.n_params, rec.nll, rec.aic, rec.bic
                );
            }
            Err(e) => out += &format!("{:<width$}  failed: {e}\n", c.model),
        }
    }
    out
}

fn load(io: &InputArgs, default_value: &str) -> Result<data::RawSeries> {
    let columns = ColumnSpec {
        date: io.date_column.clone(),
        value: io.value_column.clone().unwrap_or_else(|| default_value.to_string()),
    };
    data::load_csv(&io.input, &columns)
}

/// Pseudo-observations from the input, transforming levels if `--growth`
/// was given.
fn pseudo_series(io: &InputArgs) -> Result<Vec<f64>> {
    match io.growth {
        Some(g) => {
            let raw = load(io, "value")?;
            let x = data::growth_rates(&raw, g)?;
            Ok(data::pseudo_observations(&x.values)?.0.values().to_vec())
        }
        None => {
            let raw = load(io, "u")?;
            Ok(model::PseudoSeries::new(raw.values)?.values().to_vec())
        }
    }
}

fn parse_params(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| MagmarError::Params(format!("'{}' is not a number", s.trim()))))
        .collect()
}

fn emit(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| MagmarError::Io(format!("{}: {e}", p.display()))),
        None => stdout.write_all(bytes).map_err(MagmarError::from),
    }
}

fn csv_err(e: csv::Error) -> MagmarError {
    MagmarError::Io(e.to_string())
}

fn json_err(e: serde_json::Error) -> MagmarError {
    MagmarError::Io(e.to_string())
}
