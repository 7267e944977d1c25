//! Pipeline stages behind each subcommand.
//!
//! `run` chains ingest -> filter -> adjust -> fit -> summarize and writes
//! every artifact into one output directory together with a manifest.

use std::path::{Path, PathBuf};

use abusetrend::filter::{
    adjust, daily_proportions, score_histogram, ProportionSeries, ScoreHistogram,
};
use abusetrend::ingest::{parse_counts, parse_scored_tweets, ScoredSamples};
use abusetrend::series::{
    read_series_file, write_series_csv, AdjustedSeries, CountSeries, DateWindow,
};
use abusetrend::simulate::{simulate, ParamCurves};
use abusetrend::smooth::{
    read_daily_values_file, rolling_mean_series, spline_smooth_series, Penalty, SmoothError,
    SmoothedSeries,
};
use abusetrend::tvbarc::{
    fit_chains, load_checkpoint, summarize, Checkpoint, FitSummary, ModelError, PosteriorDraws,
};
use chrono::NaiveDate;
use log::info;

use crate::artifacts::{write_atomically, StagedOutputs};
use crate::config::{Input, PipelineConfig, ResolvedConfig};
use crate::manifest::{FileDigest, Manifest, MANIFEST_NAME};
use crate::CliError;

pub const PROPORTIONS: &str = "proportions.csv";
pub const ADJUSTED: &str = "adjusted.csv";
pub const HISTOGRAM: &str = "score_histogram.csv";
pub const FIT_CSV: &str = "fit_summary.csv";
pub const FIT_JSON: &str = "fit_summary.json";
pub const DRAWS: &str = "draws.json";

const HISTOGRAM_BINS: usize = 20;

/// What a directory-producing command wrote.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub window: DateWindow,
    pub accepted: usize,
    pub rejected_outside_window: usize,
    pub empty_days: Vec<NaiveDate>,
    pub total_count: u64,
}

fn model_error(err: ModelError) -> CliError {
    match err {
        ModelError::InvalidSpec(_) | ModelError::InvalidConfig(_) => {
            CliError::Config(err.to_string())
        }
        other => CliError::Model(other.to_string()),
    }
}

fn ingest(cfg: &ResolvedConfig) -> Result<(ScoredSamples, CountSeries), CliError> {
    let window = cfg.require_window()?;
    let scored_path = cfg.require_input(Input::Scored)?;
    let counts_path = cfg.require_input(Input::Counts)?;
    let samples = parse_scored_tweets(scored_path, window)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", scored_path.display())))?;
    let counts = parse_counts(counts_path, window)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", counts_path.display())))?;
    info!(
        "ingested {} tweets over {} days ({} outside window)",
        samples.accepted(),
        window.len(),
        samples.rejected_outside_window
    );
    Ok((samples, counts))
}

fn input_digests(paths: &[&Path]) -> Result<Vec<FileDigest>, CliError> {
    paths.iter().map(|p| FileDigest::of_file(p)).collect()
}

/// Parses both inputs and reports what was found without writing anything.
pub fn validate(cfg: &ResolvedConfig) -> Result<IngestReport, CliError> {
    let (samples, counts) = ingest(cfg)?;
    Ok(IngestReport {
        window: samples.window,
        accepted: samples.accepted(),
        rejected_outside_window: samples.rejected_outside_window,
        empty_days: samples.empty_days(),
        total_count: counts.values.iter().sum(),
    })
}

struct Filtered {
    proportions: ProportionSeries,
    adjusted: AdjustedSeries,
    histogram: ScoreHistogram,
}

fn filter_stage(
    cfg: &ResolvedConfig,
    samples: &ScoredSamples,
    counts: &CountSeries,
) -> Result<Filtered, CliError> {
    let proportions = daily_proportions(&samples.days, &cfg.filter, cfg.empty_policy)
        .map_err(|e| CliError::Ingest(format!("filter: {e}")))?;
    let adjusted =
        adjust(&proportions, counts).map_err(|e| CliError::Ingest(format!("adjust: {e}")))?;
    let histogram = score_histogram(samples.tweets(), HISTOGRAM_BINS)
        .map_err(|e| CliError::Ingest(format!("histogram: {e}")))?;
    info!(
        "filter {} kept {} of {} tweets",
        cfg.filter_notation,
        proportions.passing.iter().sum::<usize>(),
        samples.accepted()
    );
    Ok(Filtered {
        proportions,
        adjusted,
        histogram,
    })
}

fn stage_filtered(out: &mut StagedOutputs, f: &Filtered) -> Result<(), CliError> {
    out.write(PROPORTIONS, |w| f.proportions.write_csv(w))?;
    out.write(ADJUSTED, |w| {
        write_series_csv(w, f.adjusted.start_date, &f.adjusted.values)
    })?;
    out.write(HISTOGRAM, |w| f.histogram.write_csv(w))
}

fn fit_stage(
    cfg: &ResolvedConfig,
    series: &AdjustedSeries,
) -> Result<(PosteriorDraws, FitSummary), CliError> {
    info!(
        "fitting lag order {} on {} days ({} iterations, {} chain(s))",
        cfg.model.lag_order,
        series.len(),
        cfg.mcmc.n_iter,
        cfg.mcmc.n_chains
    );
    let draws = fit_chains(series, &cfg.model, &cfg.mcmc).map_err(model_error)?;
    let summary = summarize(&draws).map_err(model_error)?;
    Ok((draws, summary))
}

fn stage_fit(
    out: &mut StagedOutputs,
    draws: &PosteriorDraws,
    summary: &FitSummary,
) -> Result<(), CliError> {
    let json = summary
        .to_json()
        .map_err(|e| CliError::Output(e.to_string()))?;
    let checkpoint = Checkpoint::new(draws.clone())
        .to_json()
        .map_err(model_error)?;
    out.write(FIT_CSV, |w| summary.write_csv(w))?;
    out.write_bytes(FIT_JSON, json.as_bytes())?;
    out.write_bytes(DRAWS, checkpoint.as_bytes())
}

fn finish(
    out: StagedOutputs,
    command: &str,
    config: PipelineConfig,
    seed: u64,
    inputs: Vec<FileDigest>,
) -> Result<RunOutcome, CliError> {
    let outputs = out.digests()?;
    let manifest = Manifest::new(command, config, seed, inputs, outputs);
    let out_dir = out.dir().to_path_buf();
    let mut files = out.commit()?;
    let path = out_dir.join(MANIFEST_NAME);
    write_atomically(&path, manifest.to_json().as_bytes())?;
    files.push(path);
    Ok(RunOutcome {
        out_dir,
        files,
        manifest,
    })
}

/// Filter and adjust only: proportions, adjusted counts and the score
/// histogram.
pub fn run_filter(cfg: &ResolvedConfig) -> Result<RunOutcome, CliError> {
    let (samples, counts) = ingest(cfg)?;
    let inputs = input_digests(&[
        cfg.require_input(Input::Scored)?,
        cfg.require_input(Input::Counts)?,
    ])?;
    let filtered = filter_stage(cfg, &samples, &counts)?;
    let mut out = StagedOutputs::new(&cfg.out_dir)?;
    stage_filtered(&mut out, &filtered)?;
    finish(out, "filter", cfg.echo(), cfg.mcmc.seed, inputs)
}

/// Fits a ready-made `date,count` series.
pub fn run_fit(cfg: &ResolvedConfig) -> Result<RunOutcome, CliError> {
    let path = cfg.require_input(Input::Series)?;
    let series =
        read_series_file(path).map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))?;
    let inputs = input_digests(&[path])?;
    let (draws, summary) = fit_stage(cfg, &series)?;
    let mut out = StagedOutputs::new(&cfg.out_dir)?;
    stage_fit(&mut out, &draws, &summary)?;
    finish(out, "fit", cfg.echo(), cfg.mcmc.seed, inputs)
}

/// The full pipeline. Filter artifacts are staged before the fit starts, so a
/// model failure leaves them behind as `.partial` files.
pub fn run_pipeline(cfg: &ResolvedConfig) -> Result<RunOutcome, CliError> {
    let (samples, counts) = ingest(cfg)?;
    let inputs = input_digests(&[
        cfg.require_input(Input::Scored)?,
        cfg.require_input(Input::Counts)?,
    ])?;
    let filtered = filter_stage(cfg, &samples, &counts)?;
    let mut out = StagedOutputs::new(&cfg.out_dir)?;
    stage_filtered(&mut out, &filtered)?;
    let (draws, summary) = fit_stage(cfg, &filtered.adjusted)?;
    stage_fit(&mut out, &draws, &summary)?;
    finish(out, "run", cfg.echo(), cfg.mcmc.seed, inputs)
}

/// Re-summarizes a saved draws checkpoint.
pub fn run_report(
    draws_path: &Path,
    out_dir: &Path,
) -> Result<(RunOutcome, PosteriorDraws), CliError> {
    let draws = load_checkpoint(draws_path).map_err(|e| match e {
        ModelError::Io { .. } => CliError::Ingest(e.to_string()),
        other => CliError::Config(format!("{}: {other}", draws_path.display())),
    })?;
    let summary = summarize(&draws).map_err(model_error)?;
    let json = summary
        .to_json()
        .map_err(|e| CliError::Output(e.to_string()))?;
    let mut out = StagedOutputs::new(out_dir)?;
    out.write(FIT_CSV, |w| summary.write_csv(w))?;
    out.write_bytes(FIT_JSON, json.as_bytes())?;
    let config = PipelineConfig {
        out_dir: Some(out_dir.to_path_buf()),
        seed: Some(draws.config.seed),
        model: draws.spec.clone(),
        mcmc: draws.config.clone(),
        ..Default::default()
    };
    let inputs = input_digests(&[draws_path])?;
    let outcome = finish(out, "report", config, draws.config.seed, inputs)?;
    Ok((outcome, draws))
}

/// Reads ground-truth curves from a JSON or TOML file.
pub fn read_curves(path: &Path) -> Result<ParamCurves, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Simulates a series and writes it as `date,count`.
pub fn run_simulate(
    curves: &ParamCurves,
    len: usize,
    seed: u64,
    start: NaiveDate,
    out: &Path,
) -> Result<AdjustedSeries, CliError> {
    let series = simulate(curves, len, seed, start).map_err(|e| CliError::Config(e.to_string()))?;
    let mut bytes = Vec::new();
    write_series_csv(&mut bytes, series.start_date, &series.values)
        .map_err(|e| CliError::Output(e.to_string()))?;
    write_atomically(out, &bytes)?;
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothMethod {
    Rolling { window: usize },
    Spline { penalty: Penalty },
}

/// Smooths one column of a dated CSV and writes `date,value,smoothed`.
pub fn run_smooth(
    input: &Path,
    column: Option<&str>,
    method: SmoothMethod,
    out: &Path,
) -> Result<SmoothedSeries, CliError> {
    let series = read_daily_values_file(input, column)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", input.display())))?;
    let smoothed = match method {
        SmoothMethod::Rolling { window } => rolling_mean_series(&series, window),
        SmoothMethod::Spline { penalty } => spline_smooth_series(&series, penalty),
    }
    .map_err(|e| match e {
        SmoothError::Singular => CliError::Model(e.to_string()),
        other => CliError::Config(other.to_string()),
    })?;
    let mut bytes = Vec::new();
    smoothed
        .write_csv(&series.values, &mut bytes)
        .map_err(|e| CliError::Output(e.to_string()))?;
    write_atomically(out, &bytes)?;
    Ok(smoothed)
}
