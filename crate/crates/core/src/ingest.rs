//! Scored-tweet and daily-count file ingestion, plus keyword ranking.
//!
//! Scored files carry `id,date,p_off,p_hate[,text]`; count files carry
//! `date,count`. Column order is free, lookup is by header name.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{self, parse_date, CountSeries, DateWindow, SeriesError, DATE_FORMAT};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: missing required column `{0}`")]
    MissingColumn(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("gap error: {0}")]
    Gap(String),
    #[error("validation error at line {line}: count {value} is negative")]
    NegativeCount { line: u64, value: i64 },
    #[error("keyword ranking needs at least one candidate keyword")]
    EmptyCandidates,
    #[error(transparent)]
    Series(SeriesError),
}

impl From<SeriesError> for IngestError {
    fn from(err: SeriesError) -> Self {
        match err {
            SeriesError::MissingColumn(c) => IngestError::MissingColumn(c),
            SeriesError::Malformed { line, reason } => IngestError::Parse { line, reason },
            SeriesError::Csv { line, source } => IngestError::Parse {
                line,
                reason: source.to_string(),
            },
            SeriesError::Io { path, source } => IngestError::Io { path, source },
            e @ SeriesError::Gap { .. } => IngestError::Gap(e.to_string()),
            other => IngestError::Series(other),
        }
    }
}

/// One sampled post with its two classifier probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTweet {
    pub id: String,
    pub date: NaiveDate,
    pub p_off: f64,
    pub p_hate: f64,
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySample {
    pub date: NaiveDate,
    pub tweets: Vec<ScoredTweet>,
}

impl DailySample {
    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }
}

/// Day-bucketed samples for a window. Every day of the window is present,
/// including days with no sampled tweets.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSamples {
    pub window: DateWindow,
    pub days: Vec<DailySample>,
    /// Rows that parsed cleanly but fell outside the window.
    pub rejected_outside_window: usize,
}

impl ScoredSamples {
    pub fn accepted(&self) -> usize {
        self.days.iter().map(DailySample::len).sum()
    }

    pub fn tweets(&self) -> impl Iterator<Item = &ScoredTweet> {
        self.days.iter().flat_map(|d| d.tweets.iter())
    }

    pub fn empty_days(&self) -> Vec<NaiveDate> {
        self.days
            .iter()
            .filter(|d| d.is_empty())
            .map(|d| d.date)
            .collect()
    }
}

fn parse_probability(raw: &str, column: &str, line: u64) -> Result<f64, IngestError> {
    let value: f64 = raw.trim().parse().map_err(|_| IngestError::Parse {
        line,
        reason: format!("{column} `{raw}` is not a number"),
    })?;
    if !(0.0..=1.0).contains(&value) {
        return Err(IngestError::Parse {
            line,
            reason: format!("{column} = {value} is outside [0, 1]"),
        });
    }
    Ok(value)
}

/// Parses a scored-tweet CSV from any reader and buckets it by day.
pub fn read_scored_tweets<R: Read>(
    reader: R,
    window: DateWindow,
) -> Result<ScoredSamples, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Parse {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let required = |name: &str| column(name).ok_or_else(|| IngestError::MissingColumn(name.into()));
    let id_idx = required("id")?;
    let date_idx = required("date")?;
    let off_idx = required("p_off")?;
    let hate_idx = required("p_hate")?;
    let text_idx = column("text");

    let mut days: Vec<DailySample> = window
        .dates()
        .map(|date| DailySample {
            date,
            tweets: Vec::new(),
        })
        .collect();
    let mut rejected = 0usize;

    for record in rdr.records() {
        let record = record.map_err(|e| IngestError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize| record.get(idx).unwrap_or_default();
        let raw_date = field(date_idx);
        let date = parse_date(raw_date).map_err(|e| IngestError::Parse {
            line,
            reason: format!("bad date `{raw_date}`: {e}"),
        })?;
        let p_off = parse_probability(field(off_idx), "p_off", line)?;
        let p_hate = parse_probability(field(hate_idx), "p_hate", line)?;
        let Some(idx) = window.index_of(date) else {
            rejected += 1;
            continue;
        };
        let text = text_idx
            .map(|i| field(i).to_string())
            .filter(|t| !t.is_empty());
        days[idx].tweets.push(ScoredTweet {
            id: field(id_idx).trim().to_string(),
            date,
            p_off,
            p_hate,
            text,
        });
    }

    Ok(ScoredSamples {
        window,
        days,
        rejected_outside_window: rejected,
    })
}

pub fn parse_scored_tweets(path: &Path, window: DateWindow) -> Result<ScoredSamples, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_scored_tweets(std::io::BufReader::new(file), window)
}

/// Writes samples back in the scored-tweet schema. The `text` column is
/// emitted only when at least one tweet carries text.
pub fn write_scored_tweets<W: Write>(writer: W, days: &[DailySample]) -> Result<(), IngestError> {
    let with_text = days
        .iter()
        .flat_map(|d| &d.tweets)
        .any(|t| t.text.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| IngestError::Parse {
        line: 0,
        reason: e.to_string(),
    };
    let mut header = vec!["id", "date", "p_off", "p_hate"];
    if with_text {
        header.push("text");
    }
    w.write_record(&header).map_err(wrap)?;
    for tweet in days.iter().flat_map(|d| &d.tweets) {
        let mut row = vec![
            tweet.id.clone(),
            tweet.date.format(DATE_FORMAT).to_string(),
            tweet.p_off.to_string(),
            tweet.p_hate.to_string(),
        ];
        if with_text {
            row.push(tweet.text.clone().unwrap_or_default());
        }
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|source| IngestError::Io {
        path: "<writer>".into(),
        source,
    })
}

pub fn read_counts<R: Read>(reader: R, window: DateWindow) -> Result<CountSeries, IngestError> {
    let rows = series::read_dated_column(reader, "count")?;
    let mut negative = None;
    let values = series::place_in_window(&rows, &window, |line, raw| {
        let value: i64 = raw.trim().parse().map_err(|_| SeriesError::Malformed {
            line,
            reason: format!("count `{raw}` is not an integer"),
        })?;
        if value < 0 && negative.is_none() {
            negative = Some((line, value));
        }
        Ok(value.max(0) as u64)
    });
    if let Some((line, value)) = negative {
        return Err(IngestError::NegativeCount { line, value });
    }
    Ok(CountSeries {
        start_date: window.start(),
        values: values?,
    })
}

/// Parses a `date,count` file into a contiguous series covering `window`
/// exactly. Rows outside the window are ignored.
pub fn parse_counts(path: &Path, window: DateWindow) -> Result<CountSeries, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_counts(std::io::BufReader::new(file), window)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRanking {
    pub entries: Vec<(String, u64)>,
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Ranks candidate keywords by the number of texts containing them as a whole
/// token (case-insensitive). Returns the top `k`; ties go to the
/// lexicographically smaller keyword.
pub fn rank_keywords<S: AsRef<str>, K: AsRef<str>>(
    texts: &[S],
    candidates: &[K],
    k: usize,
) -> Result<KeywordRanking, IngestError> {
    if candidates.is_empty() {
        return Err(IngestError::EmptyCandidates);
    }
    let mut counts: BTreeMap<String, u64> = candidates
        .iter()
        .map(|c| (c.as_ref().to_lowercase(), 0))
        .collect();
    for text in texts {
        let seen: HashSet<String> = tokens(text.as_ref()).collect();
        for token in &seen {
            if let Some(count) = counts.get_mut(token) {
                *count += 1;
            }
        }
    }
    let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    Ok(KeywordRanking { entries })
}
