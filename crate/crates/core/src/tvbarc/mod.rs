//! Time-varying Bayesian autoregressive Poisson count model.
//!
//! Observations follow `X_t | past ~ Poisson(lambda_t)` with
//!
//! ```text
//! lambda_t = mu(t/T) + sum_{i=1..p} a_i(t/T) * X_{t-i}
//! ```
//!
//! where `mu(u) = sum_j b_j B_j(u)` and `a_i(u) = sum_j c_ij B'_j(u)` are
//! clamped B-spline expansions. Coefficients are non-negative and the lag
//! coefficients obey `sum_i max_j c_ij <= 1 - eps`. Because the basis is a
//! partition of unity, `a_i(u) <= max_j c_ij`, which keeps `sum_i a_i(u) < 1`
//! everywhere on [0, 1].

mod checkpoint;
mod likelihood;
mod sampler;
mod summary;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use likelihood::{
    lambda_at, log_likelihood, log_poisson_pmf, log_posterior, log_prior, LAMBDA_FLOOR,
};
pub use sampler::{
    fit, fit_chains, BlockDiagnostics, ChainDiagnostics, McmcConfig, PosteriorDraws,
};
pub use summary::{effective_sample_size, quantile, summarize, CurveSummary, FitSummary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{combine, BSplineBasis, BasisError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid MCMC config: {0}")]
    InvalidConfig(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("history has {got} values, lag order needs {needed}")]
    IncompleteHistory { needed: usize, got: usize },
    #[error("time index {t} outside 1..={len}")]
    TimeIndex { t: usize, len: usize },
    #[error("series of length {len} is too short: need more than {needed} points")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("no posterior draws to summarize")]
    EmptyDraws,
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint format error: {0}")]
    Format(String),
}

/// Model dimensions and constraint margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub lag_order: usize,
    /// Basis size for the mean trend `mu`.
    pub n_basis_trend: usize,
    /// Basis size for each lag function `a_i`.
    pub n_basis_lag: usize,
    pub spline_degree: usize,
    pub stability_margin: f64,
    /// Half-normal scale for the trend coefficients; `None` uses twice the
    /// series mean.
    #[serde(default)]
    pub prior_scale: Option<f64>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            lag_order: 10,
            n_basis_trend: 8,
            n_basis_lag: 5,
            spline_degree: 3,
            stability_margin: 0.01,
            prior_scale: None,
        }
    }
}

impl ModelSpec {
    pub fn with_lag_order(lag_order: usize) -> Self {
        Self {
            lag_order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidSpec(m));
        if self.lag_order < 1 {
            return bad("lag order must be at least 1".into());
        }
        for (name, k) in [("trend", self.n_basis_trend), ("lag", self.n_basis_lag)] {
            if k < self.spline_degree + 1 {
                return bad(format!(
                    "{name} basis size {k} is below spline degree + 1 = {}",
                    self.spline_degree + 1
                ));
            }
        }
        if !(self.stability_margin > 0.0 && self.stability_margin < 1.0) {
            return bad(format!(
                "stability margin {} must lie in (0, 1)",
                self.stability_margin
            ));
        }
        if let Some(s) = self.prior_scale {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("prior scale {s} must be positive"));
            }
        }
        Ok(())
    }

    pub fn bases(&self) -> Result<ModelBases, ModelError> {
        self.validate()?;
        Ok(ModelBases {
            trend: BSplineBasis::clamped(self.spline_degree, self.n_basis_trend)?,
            lag: BSplineBasis::clamped(self.spline_degree, self.n_basis_lag)?,
        })
    }

    /// Prior scale actually used for a series with the given mean.
    pub fn resolved_prior_scale(&self, series_mean: f64) -> f64 {
        self.prior_scale
            .unwrap_or_else(|| (2.0 * series_mean).max(MIN_PRIOR_SCALE))
    }

    /// Minimum series length accepted by `fit`.
    pub fn min_series_len(&self) -> usize {
        self.lag_order + self.n_basis_trend + 1
    }
}

/// Lower bound on the default trend prior scale, so an all-zero series still
/// has a proper prior.
pub const MIN_PRIOR_SCALE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBases {
    pub trend: BSplineBasis,
    pub lag: BSplineBasis,
}

/// Spline coefficients: `b` for the trend, `c[i]` for lag `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvbarcParams {
    pub b: Vec<f64>,
    pub c: Vec<Vec<f64>>,
}

impl TvbarcParams {
    /// Parameters with constant curves `mu(u) = mu` and `a_i(u) = lags[i]`.
    pub fn constant(spec: &ModelSpec, mu: f64, lags: &[f64]) -> Self {
        let mut c = vec![vec![0.0; spec.n_basis_lag]; spec.lag_order];
        for (row, &a) in c.iter_mut().zip(lags) {
            row.iter_mut().for_each(|v| *v = a);
        }
        Self {
            b: vec![mu; spec.n_basis_trend],
            c,
        }
    }

    pub fn lag_order(&self) -> usize {
        self.c.len()
    }

    /// `sum_i max_j c_ij`, an upper bound on `sum_i a_i(u)`.
    pub fn stability_sum(&self) -> f64 {
        self.c
            .iter()
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .sum()
    }

    pub fn satisfies_constraints(&self, margin: f64) -> bool {
        self.b.iter().all(|&v| v >= 0.0)
            && self.c.iter().flatten().all(|&v| v >= 0.0)
            && self.stability_sum() <= 1.0 - margin
    }

    pub fn check_shape(&self, spec: &ModelSpec) -> Result<(), ModelError> {
        if self.b.len() != spec.n_basis_trend
            || self.c.len() != spec.lag_order
            || self.c.iter().any(|r| r.len() != spec.n_basis_lag)
        {
            return Err(ModelError::InvalidParams(format!(
                "expected {} trend coefficients and {}x{} lag coefficients",
                spec.n_basis_trend, spec.lag_order, spec.n_basis_lag
            )));
        }
        Ok(())
    }

    pub fn mu(&self, bases: &ModelBases, u: f64) -> Result<f64, ModelError> {
        Ok(combine(&bases.trend.eval(u)?, &self.b))
    }

    /// All lag functions at `u`, `a_1(u)..a_p(u)`.
    pub fn lags(&self, bases: &ModelBases, u: f64) -> Result<Vec<f64>, ModelError> {
        let values = bases.lag.eval(u)?;
        Ok(self.c.iter().map(|row| combine(&values, row)).collect())
    }
}
