use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ModelError, PosteriorDraws};
use crate::basis::combine;
use crate::series::{day_offset, DATE_FORMAT};

pub const LOWER_QUANTILE: f64 = 0.025;
pub const UPPER_QUANTILE: f64 = 0.975;

/// Pointwise posterior summary of one curve over the observed days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub ess: Vec<f64>,
}

impl CurveSummary {
    fn with_len(len: usize) -> Self {
        Self {
            mean: Vec::with_capacity(len),
            lower: Vec::with_capacity(len),
            upper: Vec::with_capacity(len),
            ess: Vec::with_capacity(len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub start_date: NaiveDate,
    pub n_draws: usize,
    pub lower_quantile: f64,
    pub upper_quantile: f64,
    pub mu: CurveSummary,
    /// `lags[i]` summarizes `a_{i+1}`.
    pub lags: Vec<CurveSummary>,
}

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Effective sample size of one chain using Geyer's initial monotone
/// sequence estimator. A constant chain reports its length.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let var = autocov(0);
    if var <= (1e-12 * mean.abs()).powi(2) {
        return n as f64;
    }
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (autocov(2 * k) + autocov(2 * k + 1)) / var;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        k += 1;
    }
    n as f64 / tau.max(1.0 / n as f64)
}

fn summarize_values(values: &mut [f64], chains: &[std::ops::Range<usize>], out: &mut CurveSummary) {
    let ess = chains
        .iter()
        .map(|r| effective_sample_size(&values[r.clone()]))
        .sum();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    out.mean.push(mean);
    out.lower.push(quantile(values, LOWER_QUANTILE));
    out.upper.push(quantile(values, UPPER_QUANTILE));
    out.ess.push(ess);
}

/// Pointwise posterior mean and 95% band of `mu(t/T)` and every `a_i(t/T)`
/// at each observed day `t = 1..T`.
pub fn summarize(draws: &PosteriorDraws) -> Result<FitSummary, ModelError> {
    if draws.is_empty() {
        return Err(ModelError::EmptyDraws);
    }
    let bases = draws.spec.bases()?;
    let len = draws.series_len;
    let p = draws.spec.lag_order;
    let chains = draws.chain_ranges();
    let mut mu = CurveSummary::with_len(len);
    let mut lags = vec![CurveSummary::with_len(len); p];
    let mut trend = vec![0.0; bases.trend.n_basis()];
    let mut lag = vec![0.0; bases.lag.n_basis()];
    let mut scratch = vec![0.0; draws.len()];

    for t in 1..=len {
        let u = t as f64 / len as f64;
        bases.trend.eval_into(u, &mut trend)?;
        bases.lag.eval_into(u, &mut lag)?;
        for (s, d) in scratch.iter_mut().zip(&draws.draws) {
            *s = combine(&trend, &d.b);
        }
        summarize_values(&mut scratch, &chains, &mut mu);
        for (i, out) in lags.iter_mut().enumerate() {
            for (s, d) in scratch.iter_mut().zip(&draws.draws) {
                *s = combine(&lag, &d.c[i]);
            }
            summarize_values(&mut scratch, &chains, out);
        }
    }

    Ok(FitSummary {
        start_date: draws.start_date,
        n_draws: draws.len(),
        lower_quantile: LOWER_QUANTILE,
        upper_quantile: UPPER_QUANTILE,
        mu,
        lags,
    })
}

impl FitSummary {
    pub fn len(&self) -> usize {
        self.mu.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.mean.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.len()).map(move |i| day_offset(self.start_date, i))
    }

    /// `date,mu_mean,mu_lo,mu_hi,a1_mean,a1_lo,a1_hi,...`
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(["mu_mean", "mu_lo", "mu_hi"].map(String::from));
        for i in 1..=self.lags.len() {
            header.extend(["mean", "lo", "hi"].map(|s| format!("a{i}_{s}")));
        }
        w.write_record(&header)?;
        for (t, date) in self.dates().enumerate() {
            let mut row = vec![date.format(DATE_FORMAT).to_string()];
            for curve in std::iter::once(&self.mu).chain(&self.lags) {
                row.push(curve.mean[t].to_string());
                row.push(curve.lower[t].to_string());
                row.push(curve.upper[t].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
