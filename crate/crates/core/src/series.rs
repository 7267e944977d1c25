//! Daily date windows and the integer count series shared by every stage.
//!
//! All dates are UTC calendar days. A series is stored as a start date plus a
//! contiguous vector of values, one per day, so day `t` (zero-based) is
//! `start_date + t days`.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// ISO-8601 calendar date format used by every CSV file.
pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("empty date window: start {start} is after end {end}")]
    EmptyWindow { start: NaiveDate, end: NaiveDate },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error at line {line}: {source}")]
    Csv {
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("series has gaps; missing dates: {}", format_dates(.missing))]
    Gap { missing: Vec<NaiveDate> },
    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: u64, date: NaiveDate },
    #[error("series file contains no rows")]
    Empty,
}

pub(crate) fn format_dates(dates: &[NaiveDate]) -> String {
    const SHOWN: usize = 20;
    let mut s = dates
        .iter()
        .take(SHOWN)
        .map(|d| d.format(DATE_FORMAT).to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if dates.len() > SHOWN {
        s.push_str(&format!(" (and {} more)", dates.len() - SHOWN));
    }
    s
}

pub fn parse_date(raw: &str) -> Result<NaiveDate, chrono::ParseError> {
    NaiveDate::parse_from_str(raw.trim(), DATE_FORMAT)
}

/// Inclusive range of UTC calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, SeriesError> {
        if start > end {
            return Err(SeriesError::EmptyWindow { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    /// Number of days in the window (always at least one).
    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && date <= self.end
    }

    /// Zero-based day index of `date`, if it lies inside the window.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.contains(date)
            .then(|| (date - self.start).num_days() as usize)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.len()).map(move |i| day_offset(self.start, i))
    }
}

pub fn day_offset(start: NaiveDate, offset: usize) -> NaiveDate {
    start + Days::new(offset as u64)
}

/// Exhaustive daily totals `Y_t` from the count endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSeries {
    pub start_date: NaiveDate,
    pub values: Vec<u64>,
}

impl CountSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len()).map(move |i| day_offset(self.start_date, i))
    }
}

/// Integer series `X_t = round(p_t * Y_t)`, the estimate of the true abusive
/// counts. Simulated series share this shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustedSeries {
    pub start_date: NaiveDate,
    pub values: Vec<u64>,
}

impl AdjustedSeries {
    pub fn new(start_date: NaiveDate, values: Vec<u64>) -> Self {
        Self { start_date, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len()).map(move |i| day_offset(self.start_date, i))
    }
}

/// Writes a `date,count` CSV.
pub fn write_series_csv<W: Write>(
    writer: W,
    start_date: NaiveDate,
    values: &[u64],
) -> Result<(), SeriesError> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |source| SeriesError::Csv { line: 0, source };
    w.write_record(["date", "count"]).map_err(wrap)?;
    for (i, v) in values.iter().enumerate() {
        let date = day_offset(start_date, i).format(DATE_FORMAT).to_string();
        w.write_record([date, v.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|source| SeriesError::Io {
        path: "<writer>".into(),
        source,
    })
}

pub fn write_series_file(
    path: &Path,
    start_date: NaiveDate,
    values: &[u64],
) -> Result<(), SeriesError> {
    let file = std::fs::File::create(path).map_err(|source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_series_csv(std::io::BufWriter::new(file), start_date, values)
}

/// Raw `(line, date, text)` rows of a two-column date/value file, located by
/// header name.
pub(crate) fn read_dated_column<R: Read>(
    reader: R,
    value_column: &str,
) -> Result<Vec<(u64, NaiveDate, String)>, SeriesError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|source| SeriesError::Csv { line: 1, source })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| SeriesError::MissingColumn(name.to_string()))
    };
    let date_idx = find("date")?;
    let value_idx = find(value_column)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| SeriesError::Csv {
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let raw_date = record.get(date_idx).unwrap_or_default();
        let date = parse_date(raw_date).map_err(|e| SeriesError::Malformed {
            line,
            reason: format!("bad date `{raw_date}`: {e}"),
        })?;
        let value = record.get(value_idx).unwrap_or_default().to_string();
        rows.push((line, date, value));
    }
    Ok(rows)
}

/// Reads a contiguous `date,<value_column>` series of non-negative integers
/// whose window is taken from its first and last dates.
pub fn read_series_csv<R: Read>(
    reader: R,
    value_column: &str,
) -> Result<AdjustedSeries, SeriesError> {
    let rows = read_dated_column(reader, value_column)?;
    let first = rows.iter().map(|r| r.1).min().ok_or(SeriesError::Empty)?;
    let last = rows.iter().map(|r| r.1).max().ok_or(SeriesError::Empty)?;
    let window = DateWindow::new(first, last)?;
    let values = place_in_window(&rows, &window, |line, raw| {
        raw.parse::<u64>().map_err(|_| SeriesError::Malformed {
            line,
            reason: format!("count `{raw}` is not a non-negative integer"),
        })
    })?;
    Ok(AdjustedSeries::new(first, values))
}

pub fn read_series_file(path: &Path) -> Result<AdjustedSeries, SeriesError> {
    let file = std::fs::File::open(path).map_err(|source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_series_csv(std::io::BufReader::new(file), "count")
}

/// Places dated rows into a contiguous window. Rows outside the window are
/// skipped; duplicates and gaps are errors.
pub(crate) fn place_in_window<T: Clone, F>(
    rows: &[(u64, NaiveDate, String)],
    window: &DateWindow,
    mut parse: F,
) -> Result<Vec<T>, SeriesError>
where
    F: FnMut(u64, &str) -> Result<T, SeriesError>,
{
    let mut slots: Vec<Option<T>> = vec![None; window.len()];
    for (line, date, raw) in rows {
        let Some(idx) = window.index_of(*date) else {
            continue;
        };
        let value = parse(*line, raw)?;
        if slots[idx].is_some() {
            return Err(SeriesError::DuplicateDate {
                line: *line,
                date: *date,
            });
        }
        slots[idx] = Some(value);
    }
    let missing: Vec<NaiveDate> = slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_none())
        .map(|(i, _)| day_offset(window.start(), i))
        .collect();
    if !missing.is_empty() {
        return Err(SeriesError::Gap { missing });
    }
    Ok(slots
        .into_iter()
        .map(|s| s.expect("checked above"))
        .collect())
}
