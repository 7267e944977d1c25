use std::path::PathBuf;
use std::process::ExitCode;

use abusetrend::simulate::{Curve, ParamCurves};
use abusetrend::smooth::{Penalty, DEFAULT_WINDOW};
use abusetrend::tvbarc::{summarize, PosteriorDraws};
use abusetrend::EmptyDayPolicy;
use abusetrend_cli::config::{Overrides, PipelineConfig, ResolvedConfig, OUT_DIR_ENV};
use abusetrend_cli::pipeline::{self, RunOutcome, SmoothMethod};
use abusetrend_cli::{exit, CliError};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "abusetrend",
    version,
    about = "Adjusted abusive-speech counts and time-varying Poisson autoregression"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check the scored-tweet and count inputs.
    Validate(PipelineArgs),
    /// Apply the x/y filter and write proportions and adjusted counts.
    Filter(PipelineArgs),
    /// Fit the model to a `date,count` series.
    Fit(PipelineArgs),
    /// Full pipeline: filter, adjust, fit and summarize.
    Run(PipelineArgs),
    /// Write a synthetic series from known trend and lag curves.
    Simulate(SimulateArgs),
    /// Rolling-mean or penalized-spline smoothing of a daily series.
    Smooth(SmoothArgs),
    /// Re-summarize a saved draws checkpoint.
    Report(ReportArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML or JSON config file (a run manifest also works).
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scored: Option<PathBuf>,
    #[arg(long)]
    counts: Option<PathBuf>,
    /// `date,count` series for `fit`.
    #[arg(long)]
    series: Option<PathBuf>,
    #[arg(long)]
    start: Option<NaiveDate>,
    #[arg(long)]
    end: Option<NaiveDate>,
    /// Thresholds in percent, e.g. 25/50.
    #[arg(long)]
    filter: Option<String>,
    /// zero | neighbor-mean
    #[arg(long)]
    empty_policy: Option<EmptyDayPolicy>,
    #[arg(short, long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lag_order: Option<usize>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    n_burn: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
}

impl PipelineArgs {
    fn resolve(self) -> Result<ResolvedConfig, CliError> {
        let base = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        base.merge(Overrides {
            scored: self.scored,
            counts: self.counts,
            series: self.series,
            start: self.start,
            end: self.end,
            filter: self.filter,
            empty_policy: self.empty_policy,
            out_dir: self.out_dir,
            seed: self.seed,
            lag_order: self.lag_order,
            n_iter: self.n_iter,
            n_burn: self.n_burn,
            thin: self.thin,
            chains: self.chains,
        })
        .resolve()
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON or TOML file with `mu` and `lags` curves.
    #[arg(long, conflicts_with_all = ["mu", "lag"])]
    curves: Option<PathBuf>,
    /// Constant trend level.
    #[arg(long)]
    mu: Option<f64>,
    /// Constant lag coefficient; repeat for a_1, a_2, ...
    #[arg(long = "lag")]
    lag: Vec<f64>,
    #[arg(long)]
    len: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "2019-01-01")]
    start: NaiveDate,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Rolling,
    Spline,
}

#[derive(Args)]
struct SmoothArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Value column; defaults to the first non-date column.
    #[arg(long)]
    column: Option<String>,
    #[arg(long, value_enum, default_value = "rolling")]
    method: Method,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// `gcv` or a non-negative number.
    #[arg(long, default_value = "gcv")]
    penalty: Penalty,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Draws checkpoint written by `fit` or `run`.
    #[arg(long)]
    draws: PathBuf,
    #[arg(short, long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

fn print_outcome(outcome: &RunOutcome) {
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    println!("run digest {}", outcome.manifest.run_digest);
}

fn print_diagnostics(draws: &PosteriorDraws) {
    for chain in &draws.diagnostics {
        let rates: Vec<f64> = chain.blocks.iter().map(|b| b.acceptance_rate()).collect();
        let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "chain {}: acceptance {lo:.2}..{hi:.2} over {} blocks",
            chain.chain,
            rates.len()
        );
    }
    if let Ok(summary) = summarize(draws) {
        let min_ess = summary
            .mu
            .ess
            .iter()
            .chain(summary.lags.iter().flat_map(|l| l.ess.iter()))
            .cloned()
            .fold(f64::INFINITY, f64::min);
        println!("{} draws, minimum ESS {min_ess:.0}", summary.n_draws);
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(args) => {
            let report = pipeline::validate(&args.resolve()?)?;
            println!(
                "{} .. {}: {} days, {} tweets accepted, {} outside window, total count {}",
                report.window.start(),
                report.window.end(),
                report.window.len(),
                report.accepted,
                report.rejected_outside_window,
                report.total_count
            );
            if !report.empty_days.is_empty() {
                let days: Vec<String> = report.empty_days.iter().map(|d| d.to_string()).collect();
                println!("empty sample days: {}", days.join(", "));
            }
        }
        Command::Filter(args) => print_outcome(&pipeline::run_filter(&args.resolve()?)?),
        Command::Fit(args) => print_outcome(&pipeline::run_fit(&args.resolve()?)?),
        Command::Run(args) => print_outcome(&pipeline::run_pipeline(&args.resolve()?)?),
        Command::Simulate(args) => {
            let curves = match (&args.curves, args.mu) {
                (Some(path), _) => pipeline::read_curves(path)?,
                (None, Some(mu)) => ParamCurves {
                    mu: Curve::constant(mu),
                    lags: args.lag.iter().map(|&a| Curve::constant(a)).collect(),
                },
                (None, None) => return Err(CliError::Config("give --curves or --mu".into())),
            };
            let series =
                pipeline::run_simulate(&curves, args.len, args.seed, args.start, &args.out)?;
            println!("wrote {} days to {}", series.len(), args.out.display());
        }
        Command::Smooth(args) => {
            let method = match args.method {
                Method::Rolling => SmoothMethod::Rolling {
                    window: args.window,
                },
                Method::Spline => SmoothMethod::Spline {
                    penalty: args.penalty,
                },
            };
            let smoothed =
                pipeline::run_smooth(&args.input, args.column.as_deref(), method, &args.out)?;
            println!(
                "{}",
                serde_json::to_string(&smoothed.smoother).expect("smoother info serializes")
            );
        }
        Command::Report(args) => {
            let out_dir = args
                .out_dir
                .unwrap_or_else(|| args.draws.parent().map(PathBuf::from).unwrap_or_default());
            let (outcome, draws) = pipeline::run_report(&args.draws, &out_dir)?;
            print_diagnostics(&draws);
            print_outcome(&outcome);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("abusetrend: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
