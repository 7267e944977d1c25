//! Pipeline configuration from a TOML or JSON file, with command-line
//! overrides applied on top.
//!
//! ```toml
//! scored = "scored.csv"
//! counts = "counts.csv"
//! start = "2019-01-01"
//! end = "2019-03-01"
//! filter = "25/0"
//! empty_policy = "zero"
//! seed = 7
//!
//! [model]
//! lag_order = 10
//!
//! [mcmc]
//! n_iter = 6000
//! ```
//!
//! Relative paths in a file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use abusetrend::series::DateWindow;
use abusetrend::tvbarc::{McmcConfig, ModelSpec};
use abusetrend::{EmptyDayPolicy, ThresholdFilter};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ABUSETREND_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "abusetrend-out";
pub const DEFAULT_FILTER: &str = "25/0";

/// Configuration as written by the user; every field is optional so a file
/// and the command line can each supply part of it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scored: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    /// Ready-made `date,count` series for the `fit` command.
    pub series: Option<PathBuf>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    /// Thresholds in percent, `x/y`.
    pub filter: Option<String>,
    pub empty_policy: Option<EmptyDayPolicy>,
    pub out_dir: Option<PathBuf>,
    /// Overrides `mcmc.seed` when set.
    pub seed: Option<u64>,
    pub model: ModelSpec,
    pub mcmc: McmcConfig,
}

impl PipelineConfig {
    /// Reads a `.toml` or `.json` config. A run manifest is also accepted, in
    /// which case its embedded config is used.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg: PipelineConfig = if is_json {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let inner = match value.get("config") {
                Some(c) if value.get("run_digest").is_some() => c.clone(),
                _ => value,
            };
            serde_json::from_value(inner)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        for p in [
            &mut self.scored,
            &mut self.counts,
            &mut self.series,
            &mut self.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    /// Layers `other` on top of `self`; set fields in `other` win.
    pub fn merge(mut self, other: Overrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(if other.$f.is_some() { self.$f = other.$f; })*};
        }
        take!(
            scored,
            counts,
            series,
            start,
            end,
            filter,
            empty_policy,
            out_dir,
            seed
        );
        if let Some(v) = other.lag_order {
            self.model.lag_order = v;
        }
        if let Some(v) = other.n_iter {
            self.mcmc.n_iter = v;
        }
        if let Some(v) = other.n_burn {
            self.mcmc.n_burn = v;
        }
        if let Some(v) = other.thin {
            self.mcmc.thin = v;
        }
        if let Some(v) = other.chains {
            self.mcmc.n_chains = v;
        }
        self
    }

    pub fn resolve(self) -> Result<ResolvedConfig, CliError> {
        let filter_text = self.filter.unwrap_or_else(|| DEFAULT_FILTER.to_string());
        let filter = ThresholdFilter::from_notation(&filter_text)
            .map_err(|e| CliError::Config(format!("filter: {e}")))?;
        let window = match (self.start, self.end) {
            (Some(s), Some(e)) => {
                Some(DateWindow::new(s, e).map_err(|e| CliError::Config(format!("window: {e}")))?)
            }
            (None, None) => None,
            _ => return Err(CliError::Config("window needs both start and end".into())),
        };
        let out_dir = self
            .out_dir
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let absolute = |p: Option<PathBuf>| -> Result<Option<PathBuf>, CliError> {
            p.map(|p| {
                std::path::absolute(&p)
                    .map_err(|e| CliError::Config(format!("bad path {}: {e}", p.display())))
            })
            .transpose()
        };
        let out_dir = absolute(Some(out_dir))?.expect("set above");
        let mut mcmc = self.mcmc;
        if let Some(seed) = self.seed {
            mcmc.seed = seed;
        }
        self.model
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        mcmc.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(ResolvedConfig {
            scored: absolute(self.scored)?,
            counts: absolute(self.counts)?,
            series: absolute(self.series)?,
            window,
            filter_notation: filter_text,
            filter,
            empty_policy: self.empty_policy.unwrap_or_default(),
            out_dir,
            model: self.model,
            mcmc,
        })
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scored: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub series: Option<PathBuf>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub filter: Option<String>,
    pub empty_policy: Option<EmptyDayPolicy>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub lag_order: Option<usize>,
    pub n_iter: Option<usize>,
    pub n_burn: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
}

/// Fully resolved configuration with defaults filled in and every path made
/// absolute, so an echoed config means the same thing from any directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scored: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub series: Option<PathBuf>,
    pub window: Option<DateWindow>,
    pub filter_notation: String,
    pub filter: ThresholdFilter,
    pub empty_policy: EmptyDayPolicy,
    pub out_dir: PathBuf,
    pub model: ModelSpec,
    pub mcmc: McmcConfig,
}

impl ResolvedConfig {
    pub fn require_window(&self) -> Result<DateWindow, CliError> {
        self.window
            .ok_or_else(|| CliError::Config("start and end dates are required".into()))
    }

    /// Returns the path or a config error naming the missing setting.
    pub fn require_input(&self, which: Input) -> Result<&Path, CliError> {
        let (path, name) = match which {
            Input::Scored => (&self.scored, "scored"),
            Input::Counts => (&self.counts, "counts"),
            Input::Series => (&self.series, "series"),
        };
        path.as_deref()
            .ok_or_else(|| CliError::Config(format!("no `{name}` input configured")))
    }

    /// Echo suitable for a manifest; loading it back gives the same run.
    pub fn echo(&self) -> PipelineConfig {
        PipelineConfig {
            scored: self.scored.clone(),
            counts: self.counts.clone(),
            series: self.series.clone(),
            start: self.window.map(|w| w.start()),
            end: self.window.map(|w| w.end()),
            filter: Some(self.filter_notation.clone()),
            empty_policy: Some(self.empty_policy),
            out_dir: Some(self.out_dir.clone()),
            seed: Some(self.mcmc.seed),
            model: self.model.clone(),
            mcmc: self.mcmc.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Input {
    Scored,
    Counts,
    Series,
}
