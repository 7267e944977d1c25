//! Threshold filtering of scored samples and construction of the adjusted
//! count series `X_t = round(p_t * Y_t)`.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DailySample, ScoredTweet};
use crate::series::{day_offset, AdjustedSeries, CountSeries, DATE_FORMAT};

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("invalid filter `{0}`: expected x/y with 0 <= x, y <= 100 (e.g. 25/50)")]
    Notation(String),
    #[error("no days to compute proportions over")]
    EmptyWindow,
    #[error("samples are not contiguous: day {index} is {found}, expected {expected}")]
    NotContiguous {
        index: usize,
        expected: NaiveDate,
        found: NaiveDate,
    },
    #[error(
        "alignment error: proportions start {p_start} with {p_len} days, counts start {c_start} with {c_len} days"
    )]
    Alignment {
        p_start: NaiveDate,
        p_len: usize,
        c_start: NaiveDate,
        c_len: usize,
    },
    #[error("histogram needs at least one bin")]
    ZeroBins,
}

/// Keeps tweets whose offensiveness and hatefulness probabilities are both
/// strictly above the thresholds.
///
/// In x/y notation a `25/0` filter is `x_off = 0.25, y_hate = 0.0`; because the
/// comparison is strict, `y = 0` still drops tweets whose hate score is exactly
/// zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFilter {
    x_off: f64,
    y_hate: f64,
}

impl ThresholdFilter {
    pub fn new(x_off: f64, y_hate: f64) -> Result<Self, FilterError> {
        for v in [x_off, y_hate] {
            if !(0.0..=1.0).contains(&v) {
                return Err(FilterError::ThresholdOutOfRange(v));
            }
        }
        Ok(Self { x_off, y_hate })
    }

    pub fn x_off(&self) -> f64 {
        self.x_off
    }

    pub fn y_hate(&self) -> f64 {
        self.y_hate
    }

    /// Parses x/y percentage notation, `"25/50"` → `(0.25, 0.50)`.
    pub fn from_notation(s: &str) -> Result<Self, FilterError> {
        let bad = || FilterError::Notation(s.to_string());
        let (x, y) = s.trim().split_once('/').ok_or_else(bad)?;
        let percent = |raw: &str| -> Result<f64, FilterError> {
            let v: f64 = raw.trim().parse().map_err(|_| bad())?;
            if !v.is_finite() || !(0.0..=100.0).contains(&v) {
                return Err(bad());
            }
            Ok(v / 100.0)
        };
        Self::new(percent(x)?, percent(y)?)
    }

    pub fn passes(&self, tweet: &ScoredTweet) -> bool {
        passes_scores(self, tweet.p_off, tweet.p_hate)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &ThresholdFilter) -> bool {
        self.x_off <= other.x_off && self.y_hate <= other.y_hate
    }
}

pub fn passes(filter: &ThresholdFilter, tweet: &ScoredTweet) -> bool {
    filter.passes(tweet)
}

fn passes_scores(filter: &ThresholdFilter, p_off: f64, p_hate: f64) -> bool {
    p_off > filter.x_off && p_hate > filter.y_hate
}

impl FromStr for ThresholdFilter {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_notation(s)
    }
}

impl fmt::Display for ThresholdFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.x_off * 100.0, self.y_hate * 100.0)
    }
}

/// How to assign a proportion to a day with no sampled tweets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyDayPolicy {
    #[default]
    Zero,
    /// Mean of the nearest observed day on each side (one side at the edges).
    NeighborMean,
}

impl FromStr for EmptyDayPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(Self::Zero),
            "neighbor-mean" => Ok(Self::NeighborMean),
            other => Err(format!(
                "unknown empty-day policy `{other}` (zero | neighbor-mean)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DayFlag {
    Observed,
    ImputedEmpty,
}

impl DayFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            DayFlag::Observed => "observed",
            DayFlag::ImputedEmpty => "imputed-empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionSeries {
    pub start_date: NaiveDate,
    pub values: Vec<f64>,
    pub flags: Vec<DayFlag>,
    /// Per-day sample size and passing count, kept for export.
    pub sample_sizes: Vec<usize>,
    pub passing: Vec<usize>,
}

impl ProportionSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `date,sample_size,passing,proportion,flag`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "sample_size", "passing", "proportion", "flag"])?;
        for i in 0..self.len() {
            w.write_record([
                day_offset(self.start_date, i)
                    .format(DATE_FORMAT)
                    .to_string(),
                self.sample_sizes[i].to_string(),
                self.passing[i].to_string(),
                self.values[i].to_string(),
                self.flags[i].as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn daily_proportions(
    samples: &[DailySample],
    filter: &ThresholdFilter,
    policy: EmptyDayPolicy,
) -> Result<ProportionSeries, FilterError> {
    let first = samples.first().ok_or(FilterError::EmptyWindow)?;
    let start_date = first.date;
    for (index, day) in samples.iter().enumerate() {
        let expected = day_offset(start_date, index);
        if day.date != expected {
            return Err(FilterError::NotContiguous {
                index,
                expected,
                found: day.date,
            });
        }
    }

    let sample_sizes: Vec<usize> = samples.iter().map(DailySample::len).collect();
    let passing: Vec<usize> = samples
        .iter()
        .map(|d| d.tweets.iter().filter(|t| filter.passes(t)).count())
        .collect();
    let observed: Vec<Option<f64>> = sample_sizes
        .iter()
        .zip(&passing)
        .map(|(&n, &k)| (n > 0).then(|| k as f64 / n as f64))
        .collect();

    let mut values = Vec::with_capacity(samples.len());
    let mut flags = Vec::with_capacity(samples.len());
    for (t, p) in observed.iter().enumerate() {
        match p {
            Some(p) => {
                values.push(*p);
                flags.push(DayFlag::Observed);
            }
            None => {
                let imputed = match policy {
                    EmptyDayPolicy::Zero => 0.0,
                    EmptyDayPolicy::NeighborMean => neighbor_mean(&observed, t),
                };
                values.push(imputed);
                flags.push(DayFlag::ImputedEmpty);
            }
        }
    }

    Ok(ProportionSeries {
        start_date,
        values,
        flags,
        sample_sizes,
        passing,
    })
}

fn neighbor_mean(observed: &[Option<f64>], t: usize) -> f64 {
    let before = observed[..t].iter().rev().find_map(|p| *p);
    let after = observed[t + 1..].iter().find_map(|p| *p);
    match (before, after) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => 0.0,
    }
}

/// `X_t = round_half_even(p_t * Y_t)`.
pub fn adjust(
    props: &ProportionSeries,
    counts: &CountSeries,
) -> Result<AdjustedSeries, FilterError> {
    if props.start_date != counts.start_date || props.len() != counts.len() {
        return Err(FilterError::Alignment {
            p_start: props.start_date,
            p_len: props.len(),
            c_start: counts.start_date,
            c_len: counts.len(),
        });
    }
    let values = props
        .values
        .iter()
        .zip(&counts.values)
        .map(|(&p, &y)| adjusted_count(p, y))
        .collect();
    Ok(AdjustedSeries::new(props.start_date, values))
}

pub fn adjusted_count(p: f64, y: u64) -> u64 {
    let x = (p.clamp(0.0, 1.0) * y as f64).round_ties_even() as u64;
    x.min(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub bin_edges: Vec<f64>,
    pub off_counts: Vec<u64>,
    pub hate_counts: Vec<u64>,
}

impl ScoreHistogram {
    /// `bin_lo,bin_hi,p_off,p_hate`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bin_lo", "bin_hi", "p_off", "p_hate"])?;
        for (k, edge) in self.bin_edges.windows(2).enumerate() {
            w.write_record([
                edge[0].to_string(),
                edge[1].to_string(),
                self.off_counts[k].to_string(),
                self.hate_counts[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn bin_index(score: f64, n_bins: usize) -> usize {
    ((score * n_bins as f64).floor() as usize).min(n_bins - 1)
}

/// Equal-width histogram of both scores on [0, 1]; the last bin includes 1.0.
pub fn score_histogram<'a, I>(tweets: I, n_bins: usize) -> Result<ScoreHistogram, FilterError>
where
    I: IntoIterator<Item = &'a ScoredTweet>,
{
    if n_bins == 0 {
        return Err(FilterError::ZeroBins);
    }
    let bin_edges = (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect();
    let mut off_counts = vec![0u64; n_bins];
    let mut hate_counts = vec![0u64; n_bins];
    for tweet in tweets {
        off_counts[bin_index(tweet.p_off, n_bins)] += 1;
        hate_counts[bin_index(tweet.p_hate, n_bins)] += 1;
    }
    Ok(ScoreHistogram {
        bin_edges,
        off_counts,
        hate_counts,
    })
}
