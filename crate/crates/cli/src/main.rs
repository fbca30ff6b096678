//! `ebdo` — command-line valuation of equity-based debt obligations.
//!
//! Subcommands:
//! * `value`    — deterministic valuation report (JSON)
//! * `simulate` — Monte Carlo per-maturity value estimates (CSV)
//! * `price`    — risk-neutral vs. subjective price of one contract (JSON)
//! * `converge` — discretization study against the linear-rate closed form (CSV)
//!
//! Exit codes: 0 success, 1 parse/validation failure, 2 grid too coarse.

mod config;
mod report;

use clap::{Args, Parser, Subcommand};
use ebdo_core::continuous::{decoupling_linear, discretize_rate, LinearRateModel};
use ebdo_core::{
    build_value_functions, contract_value_functions, estimate_values_mc, net_equity,
    value_schedule, EngineError, GridSpec,
};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ebdo", about = "Valuation of equity-based debt obligations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Number of interpolation nodes for the value functions.
    #[arg(long, default_value_t = 2048)]
    grid_points: usize,
    /// Log-normal quantile mass the node range covers.
    #[arg(long, default_value_t = 0.9999)]
    quantile_span: f64,
}

impl GridArgs {
    fn spec(&self, anchor: f64) -> Result<GridSpec, CliError> {
        GridSpec::new(self.grid_points, self.quantile_span, anchor).map_err(CliError::from)
    }
}

#[derive(Args, Clone)]
struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic valuation: net equity, contract values, conservation residual.
    Value {
        /// JSON problem description.
        config: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Monte Carlo estimates of the per-maturity expected payoffs.
    Simulate {
        config: PathBuf,
        /// Simulation drift; value functions stay at zero drift.
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArg,
        /// Also dump per-path terminal net equity to this CSV file.
        #[arg(long)]
        dump_paths: Option<PathBuf>,
    },
    /// Risk-neutral and subjective price of a single contract.
    Price {
        config: PathBuf,
        /// 1-based index of the maturity to price.
        #[arg(long)]
        contract: usize,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Grid-refinement study of the lumped discretization of a linear payoff rate.
    Converge {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
        #[arg(long, default_value_t = 100.0)]
        x0: f64,
        /// Comma-separated list of maturity counts.
        #[arg(long, value_delimiter = ',', default_value = "4,16,64,128")]
        levels: Vec<usize>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug)]
enum CliError {
    /// Bad input: parse or validation failure.
    Input(String),
    /// The value-function grid could not resolve the problem.
    GridTooCoarse,
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::GridTooCoarse => CliError::GridTooCoarse,
            other => CliError::Input(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("EBDO_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::GridTooCoarse) => {
            eprintln!("error: grid too coarse; increase --grid-points");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Value { config, grid, out } => {
            let schedule = config::load_schedule(&config)?;
            let spec = grid.spec(schedule.gross_equity)?;
            let result = value_schedule(&schedule, &spec)?;
            let doc = report::value_report(&result, &spec);
            report::emit(&out.out, &doc)
        }
        Command::Simulate { config, mu, paths, seed, grid, out, dump_paths } => {
            if paths < 2 {
                return Err(CliError::Input("--paths must be at least 2".into()));
            }
            let schedule = config::load_schedule(&config)?;
            let spec = grid.spec(schedule.gross_equity)?;
            let table = build_value_functions(&schedule, &spec)?;
            let est = estimate_values_mc(&table, &schedule, mu, paths, seed)?;
            let mut csv = String::from("maturity_index,maturity,estimate,stderr\n");
            for (i, &t) in schedule.maturities.iter().enumerate() {
                writeln!(
                    csv,
                    "{},{},{},{}",
                    i + 1,
                    report::num(t),
                    report::num(est.payoff_mean[i]),
                    report::num(est.payoff_stderr[i])
                )
                .expect("string write");
            }
            if let Some(path) = dump_paths {
                let mut dump = String::from("path,terminal_net_equity\n");
                for p in 0..paths {
                    let mut rng = ebdo_core::rng::SubstreamRng::new(seed, p as u64);
                    let sample = ebdo_core::simulate_path(&table, &schedule, mu, &mut rng);
                    writeln!(dump, "{},{}", p, report::num(*sample.y.last().unwrap()))
                        .expect("string write");
                }
                std::fs::write(&path, dump)
                    .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
            }
            report::emit(&out.out, &csv)
        }
        Command::Price { config, contract, mu, grid, out } => {
            let schedule = config::load_schedule(&config)?;
            if contract == 0 || contract > schedule.n() {
                return Err(CliError::Input(format!(
                    "unknown contract {contract}; schedule has {} maturities",
                    schedule.n()
                )));
            }
            let spec = grid.spec(schedule.gross_equity)?;
            let table = build_value_functions(&schedule, &spec)?;
            let x0 = schedule.gross_equity;
            let neutral = contract_value_functions(&table, 0.0)?[contract - 1]
                .eval(x0)
                .map_err(EngineError::from)?;
            let market = contract_value_functions(&table, mu)?[contract - 1]
                .eval(x0)
                .map_err(EngineError::from)?;
            let doc = report::price_report(contract, neutral, market);
            report::emit(&out.out, &doc)
        }
        Command::Converge { gamma, horizon, sigma, x0, levels, grid, out } => {
            let model = LinearRateModel::new(gamma, horizon, sigma, x0)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let closed_form = decoupling_linear(0.0, x0, &model)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let mut csv =
                String::from("n,discrete_net_equity,closed_form_net_equity,relative_error\n");
            for n in levels {
                if n == 0 {
                    return Err(CliError::Input("--levels entries must be positive".into()));
                }
                let schedule = discretize_rate(&model, n);
                let spec = grid.spec(x0)?;
                let table = build_value_functions(&schedule, &spec)?;
                let y0 = net_equity(&table, x0)?;
                let rel = if closed_form != 0.0 {
                    ((y0 - closed_form) / closed_form).abs()
                } else {
                    y0.abs()
                };
                writeln!(csv, "{},{},{},{:e}", n, report::num(y0), report::num(closed_form), rel)
                    .expect("string write");
            }
            report::emit(&out.out, &csv)
        }
    }
}
