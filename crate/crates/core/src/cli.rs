//! Command-line front end. Each analysis command reads a `date,<value>` CSV,
//! runs one pipeline and writes a plot-ready table (CSV or JSON).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::estimators::{
    classical_derivative, decompose, estimate_derivative, estimate_trend, moving_average, EstimatorConfig,
};
use crate::portfolio::{run_backtest, RebalancePolicy};
use crate::series::{format_value, load_csv_with, load_panel_csv, Calendar, Chronicle, LoadOptions, Origin};
use crate::stats::{asset_volatility, log_return, mean_return, predict_volatility, MomentConfig};
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "chronicle", version, about = "Model-free trend, volatility and portfolio analytics")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price, classical moving average and algebraic trend.
    Trend(SeriesArgs),
    /// Classical (moving average + finite difference) and algebraic derivatives.
    Derivative {
        #[command(flatten)]
        series: SeriesArgs,
        /// Moving-average length of the classical baseline.
        #[arg(long, default_value_t = 50)]
        ma_window: usize,
    },
    /// Fast fluctuations against the moving average and against the algebraic trend.
    Fluctuations(SeriesArgs),
    /// Log returns, historical volatility and its linear extrapolation.
    Volatility {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long = "delta-t", default_value_t = 1)]
        delta_t: usize,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
    },
    /// Dynamic no-leverage rebalancing against the static equal-weight portfolio.
    Backtest(BacktestArgs),
    /// Writes a seeded synthetic fixture as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Estimator window in samples.
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    /// Local polynomial degree (0, 1 or 2).
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Evaluation delay in samples; defaults to window / 2.
    #[arg(long)]
    pub delay: Option<usize>,
}

impl EstimatorArgs {
    fn config(&self, step: f64) -> Result<EstimatorConfig> {
        EstimatorConfig::new(self.window, self.degree, self.delay.unwrap_or(self.window / 2), step)
    }
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Input CSV with a `date` column.
    #[arg(long)]
    pub input: PathBuf,
    /// Value column; defaults to the first non-date column.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub max_gap: usize,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Panel CSV: `date` plus one price column per leg.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub max_gap: usize,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 20)]
    pub rebalance_every: usize,
    /// Return horizon of the Sharpe objective; defaults to the rebalance interval.
    #[arg(long = "delta-t")]
    pub delta_t: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 250)]
    pub sharpe_window: usize,
    #[arg(long, default_value_t = 1.0)]
    pub capital: f64,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    Constant,
    Ramp,
    SineNoise,
    Gold,
    Exponential,
    ConstantVol,
    RisingVol,
    Dominance,
    Panel,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Fixture,
    #[arg(long, default_value_t = 1000)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of legs for `panel`.
    #[arg(long, default_value_t = 10)]
    pub legs: usize,
    #[arg(long)]
    pub output: PathBuf,
}

/// Exit status for an error: 1 for I/O, 2 for everything the modules reject.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => 1,
        _ => 2,
    }
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    match &cfg.command {
        Command::Trend(args) => cmd_trend(args),
        Command::Derivative { series, ma_window } => cmd_derivative(series, *ma_window),
        Command::Fluctuations(args) => cmd_fluctuations(args),
        Command::Volatility {
            series,
            delta_t,
            horizon,
        } => cmd_volatility(series, *delta_t, *horizon),
        Command::Backtest(args) => cmd_backtest(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

/// Named columns over a chronicle's grid, possibly extended past its end.
struct Table {
    time: Vec<String>,
    columns: Vec<(String, Vec<Option<f64>>)>,
}

impl Table {
    fn over(grid: &Chronicle, rows: usize) -> Self {
        Self {
            time: (0..rows).map(|i| grid.time_label(i)).collect(),
            columns: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, c: &Chronicle) {
        let mut v = c.values().to_vec();
        v.resize(self.time.len(), None);
        self.columns.push((name.to_string(), v));
    }

    fn write(&self, path: &Path, format: Format) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut out);
                let csv_err = |e: csv::Error| Error::Format(format!("csv write failed: {e}"));
                let mut header = vec!["time".to_string()];
                header.extend(self.columns.iter().map(|(n, _)| n.clone()));
                w.write_record(&header).map_err(csv_err)?;
                for (i, t) in self.time.iter().enumerate() {
                    let mut rec = vec![t.clone()];
                    rec.extend(self.columns.iter().map(|(_, v)| format_value(v[i])));
                    w.write_record(&rec).map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::io(path, e))?;
            }
            Format::Json => {
                let mut obj = Map::new();
                obj.insert("time".into(), json!(self.time));
                for (name, v) in &self.columns {
                    obj.insert(name.clone(), json!(v));
                }
                write_json(&mut out, path, &Value::Object(obj))?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

fn write_json<W: Write>(out: &mut W, path: &Path, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)
        .map_err(|e| Error::Format(format!("json write failed: {e}")))?;
    writeln!(out).map_err(|e| Error::io(path, e))
}

fn first_value_column(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("cannot read header row: {e}")))?;
    headers
        .iter()
        .find(|h| !h.eq_ignore_ascii_case("date"))
        .map(str::to_string)
        .ok_or_else(|| Error::Format("no value column besides 'date'".into()))
}

fn load_series(args: &SeriesArgs) -> Result<Chronicle> {
    let column = match &args.column {
        Some(c) => c.clone(),
        None => first_value_column(&args.input)?,
    };
    let opts = LoadOptions {
        max_gap: args.max_gap,
        ..LoadOptions::default()
    };
    let loaded = load_csv_with(&args.input, &column, &opts)?;
    if loaded.fill_count > 0 {
        eprintln!("note: forward-filled {} missing grid points", loaded.fill_count);
    }
    Ok(loaded.chronicle)
}

/// Columns: time, price, moving_average, algebraic_trend.
pub fn cmd_trend(args: &SeriesArgs) -> Result<()> {
    let x = load_series(args)?;
    let cfg = args.estimator.config(x.step())?;
    let trend = estimate_trend(&x, &cfg)?;
    let ma = moving_average(&x, cfg.window())?;
    let mut t = Table::over(&x, x.len());
    t.push("price", &x);
    t.push("moving_average", &ma);
    t.push("algebraic_trend", &trend);
    t.write(&args.output, args.format)
}

/// Columns: time, price, classical_derivative, algebraic_derivative.
pub fn cmd_derivative(args: &SeriesArgs, ma_window: usize) -> Result<()> {
    let x = load_series(args)?;
    let cfg = args.estimator.config(x.step())?;
    let algebraic = estimate_derivative(&x, &cfg)?;
    let classical = classical_derivative(&x, ma_window)?;
    let mut t = Table::over(&x, x.len());
    t.push("price", &x);
    t.push("classical_derivative", &classical);
    t.push("algebraic_derivative", &algebraic);
    t.write(&args.output, args.format)
}

/// Columns: time, price, classical_fluctuation (price minus its trailing
/// moving average), algebraic_fluctuation.
pub fn cmd_fluctuations(args: &SeriesArgs) -> Result<()> {
    let x = load_series(args)?;
    let cfg = args.estimator.config(x.step())?;
    let dec = decompose(&x, &cfg)?;
    let ma = moving_average(&x, cfg.window())?;
    let classical = x.with_values(
        "classical_fluctuation",
        x.values()
            .iter()
            .zip(ma.values())
            .map(|(p, m)| Some((*p)? - (*m)?))
            .collect(),
    );
    let mut t = Table::over(&x, x.len());
    t.push("price", &x);
    t.push("classical_fluctuation", &classical);
    t.push("algebraic_fluctuation", &dec.fluctuation);
    t.write(&args.output, args.format)
}

/// Columns: time, price, raw_return, normalized_return, mean_return,
/// volatility, predicted_volatility. The table runs `horizon` rows past the
/// last price to hold the newest predictions.
pub fn cmd_volatility(args: &SeriesArgs, delta_t: usize, horizon: usize) -> Result<()> {
    let x = load_series(args)?;
    let cfg = MomentConfig::new(args.estimator.config(x.step())?);
    let ret = log_return(&x, delta_t)?;
    let rbar = mean_return(&x, delta_t, &cfg)?;
    let vol = asset_volatility(&x, delta_t, &cfg)?;
    if vol.clamped > 0 {
        eprintln!("note: clamped {} negative variance estimates to zero", vol.clamped);
    }
    let pred = predict_volatility(&vol.series, horizon, &cfg)?;
    let mut t = Table::over(&x, x.len() + horizon);
    t.push("price", &x);
    t.push("raw_return", &ret.raw);
    t.push("normalized_return", &ret.normalized);
    t.push("mean_return", &rbar);
    t.push("volatility", &vol.series);
    t.push("predicted_volatility", &pred);
    t.write(&args.output, args.format)
}

/// Sidecar path for the metrics block of a CSV backtest: `out.csv` ->
/// `out.metrics.json`.
pub fn metrics_path(output: &Path) -> PathBuf {
    output.with_extension("metrics.json")
}

pub fn cmd_backtest(args: &BacktestArgs) -> Result<()> {
    let opts = LoadOptions {
        max_gap: args.max_gap,
        ..LoadOptions::default()
    };
    let loaded = load_panel_csv(&args.input, &opts)?;
    let panel = loaded.panel;
    let estimator = args.estimator.config(panel.step())?;
    let policy = RebalancePolicy {
        delta_t: args.rebalance_every,
        return_horizon: args.delta_t.unwrap_or(args.rebalance_every),
        eta: args.eta,
        epsilon: args.epsilon,
        grad_tol: args.grad_tol,
        sharpe_window: args.sharpe_window,
        moment_cfg: MomentConfig::new(estimator),
    };
    policy.validate()?;
    let report = run_backtest(&panel, &policy, args.capital)?;
    if report.skipped > 0 {
        eprintln!("note: skipped {} rebalances with an undefined objective", report.skipped);
    }
    match args.format {
        Format::Csv => {
            let file = File::create(&args.output).map_err(|e| Error::io(&args.output, e))?;
            let mut out = BufWriter::new(file);
            report.write_csv(&mut out)?;
            out.flush().map_err(|e| Error::io(&args.output, e))?;
            let mpath = metrics_path(&args.output);
            let file = File::create(&mpath).map_err(|e| Error::io(&mpath, e))?;
            let mut out = BufWriter::new(file);
            write_json(&mut out, &mpath, &report.metrics_json())?;
            out.flush().map_err(|e| Error::io(&mpath, e))
        }
        Format::Json => {
            let file = File::create(&args.output).map_err(|e| Error::io(&args.output, e))?;
            let mut out = BufWriter::new(file);
            write_json(&mut out, &args.output, &report.to_json())?;
            out.flush().map_err(|e| Error::io(&args.output, e))
        }
    }
}

fn synth_origin() -> Origin {
    Origin::Date {
        first: NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"),
        calendar: Calendar::Business,
    }
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let n = args.length;
    let seed = args.seed;
    let columns: Vec<(String, Vec<f64>)> = match args.kind {
        Fixture::Constant => vec![("price".into(), synth::constant(n, 100.0))],
        Fixture::Ramp => vec![("price".into(), synth::ramp(n, 100.0, 0.5))],
        Fixture::SineNoise => vec![("price".into(), synth::noisy_sine(n, 1.0, 200.0, 0.05, seed).values)],
        Fixture::Gold => vec![("price".into(), synth::gold_like(n, seed))],
        Fixture::Exponential => vec![("price".into(), synth::exponential(n, 100.0, 0.01))],
        Fixture::ConstantVol => vec![("price".into(), synth::alternating_returns(n, 100.0, 0.0, |_| 0.01))],
        Fixture::RisingVol => vec![(
            "price".into(),
            synth::alternating_returns(n, 100.0, 0.0, |i| 0.005 + 1e-5 * i as f64),
        )],
        Fixture::Dominance | Fixture::Panel => {
            let panel = if args.kind == Fixture::Dominance {
                synth::dominance_pair(n, 0.15, 0.0, 0.15, seed)?
            } else {
                synth::random_panel(n, args.legs, seed)?
            };
            panel
                .labels()
                .iter()
                .cloned()
                .zip(panel.columns().iter().cloned())
                .collect()
        }
    };
    let chronicles = columns
        .into_iter()
        .map(|(label, v)| Chronicle::new(label, synth_origin(), 1.0, v.into_iter().map(Some).collect()))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Chronicle> = chronicles.iter().collect();
    let file = File::create(&args.output).map_err(|e| Error::io(&args.output, e))?;
    let mut out = BufWriter::new(file);
    crate::series::write_csv(&mut out, &refs)?;
    out.flush().map_err(|e| Error::io(&args.output, e))
}
