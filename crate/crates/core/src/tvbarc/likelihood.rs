use statrs::function::factorial::ln_factorial;

use super::{ModelBases, ModelError, ModelSpec, TvbarcParams};
use crate::series::AdjustedSeries;

/// Intensities are floored here so `log(lambda)` stays finite.
pub const LAMBDA_FLOOR: f64 = 1e-10;

/// Intensity at 1-based day `t` of a series of length `len`. `history[i]` is
/// `X_{t-1-i}`, most recent first.
pub fn lambda_at(
    params: &TvbarcParams,
    bases: &ModelBases,
    t: usize,
    len: usize,
    history: &[u64],
) -> Result<f64, ModelError> {
    let p = params.lag_order();
    if history.len() < p {
        return Err(ModelError::IncompleteHistory {
            needed: p,
            got: history.len(),
        });
    }
    if t == 0 || t > len {
        return Err(ModelError::TimeIndex { t, len });
    }
    let u = t as f64 / len as f64;
    let mu = params.mu(bases, u)?;
    let lags = params.lags(bases, u)?;
    let ar: f64 = lags.iter().zip(history).map(|(a, &x)| a * x as f64).sum();
    Ok((mu + ar).max(LAMBDA_FLOOR))
}

pub fn log_poisson_pmf(x: u64, lambda: f64) -> f64 {
    let xf = x as f64;
    let term = if x == 0 { 0.0 } else { xf * lambda.ln() };
    term - lambda - ln_factorial(x)
}

/// Conditional Poisson log-likelihood of `X_{p+1..T}` given the first `p`
/// observations.
pub fn log_likelihood(
    params: &TvbarcParams,
    bases: &ModelBases,
    series: &AdjustedSeries,
    lag_order: usize,
) -> Result<f64, ModelError> {
    let x = &series.values;
    let len = x.len();
    if len <= lag_order {
        return Err(ModelError::SeriesTooShort {
            len,
            needed: lag_order,
        });
    }
    if params.lag_order() != lag_order {
        return Err(ModelError::InvalidParams(format!(
            "parameters carry {} lags, expected {lag_order}",
            params.lag_order()
        )));
    }
    let mut trend = vec![0.0; bases.trend.n_basis()];
    let mut lag = vec![0.0; bases.lag.n_basis()];
    let mut total = 0.0;
    for t in lag_order + 1..=len {
        let u = t as f64 / len as f64;
        bases.trend.eval_into(u, &mut trend)?;
        bases.lag.eval_into(u, &mut lag)?;
        let mut lambda: f64 = trend.iter().zip(&params.b).map(|(b, c)| b * c).sum();
        for (i, row) in params.c.iter().enumerate() {
            let a: f64 = lag.iter().zip(row).map(|(b, c)| b * c).sum();
            lambda += a * x[t - 2 - i] as f64;
        }
        total += log_poisson_pmf(x[t - 1], lambda.max(LAMBDA_FLOOR));
    }
    Ok(total)
}

/// Half-normal prior on the trend coefficients, flat on the constrained lag
/// region, `-inf` outside it.
pub fn log_prior(params: &TvbarcParams, spec: &ModelSpec, prior_scale: f64) -> f64 {
    if !params.satisfies_constraints(spec.stability_margin) {
        return f64::NEG_INFINITY;
    }
    let norm = (2.0 / std::f64::consts::PI).sqrt().ln() - prior_scale.ln();
    params
        .b
        .iter()
        .map(|&b| norm - 0.5 * (b / prior_scale).powi(2))
        .sum()
}

pub fn log_posterior(
    params: &TvbarcParams,
    spec: &ModelSpec,
    bases: &ModelBases,
    series: &AdjustedSeries,
    prior_scale: f64,
) -> Result<f64, ModelError> {
    let prior = log_prior(params, spec, prior_scale);
    if prior == f64::NEG_INFINITY {
        return Ok(prior);
    }
    Ok(prior + log_likelihood(params, bases, series, spec.lag_order)?)
}
