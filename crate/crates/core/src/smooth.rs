//! Presentation smoothers: centered rolling means and a penalized cubic
//! regression spline (P-spline) with optional GCV penalty selection.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::BSplineBasis;
use crate::series::{self, day_offset, DateWindow, SeriesError, DATE_FORMAT};

#[derive(Debug, Error)]
pub enum SmoothError {
    #[error("window must be a positive odd integer, got {0}")]
    BadWindow(usize),
    #[error("window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("spline smoothing needs at least 4 points, got {0}")]
    TooShort(usize),
    #[error("non-finite input at index {0}")]
    NonFinite(usize),
    #[error("penalty {0} must be finite and non-negative")]
    BadPenalty(f64),
    #[error("penalized normal equations are singular")]
    Singular,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Daily real-valued series (proportions, case counts, adjusted counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyValues {
    pub start_date: NaiveDate,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SmootherInfo {
    RollingMean {
        window: usize,
    },
    PenalizedSpline {
        penalty: f64,
        n_basis: usize,
        selected_by_gcv: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedSeries {
    pub start_date: NaiveDate,
    pub fitted: Vec<f64>,
    pub smoother: SmootherInfo,
}

impl SmoothedSeries {
    pub fn write_csv<W: std::io::Write>(&self, input: &[f64], writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "value", "smoothed"])?;
        for (i, (v, s)) in input.iter().zip(&self.fitted).enumerate() {
            let date = day_offset(self.start_date, i)
                .format(DATE_FORMAT)
                .to_string();
            w.write_record([date, v.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const DEFAULT_WINDOW: usize = 7;

fn check_finite(values: &[f64]) -> Result<(), SmoothError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(SmoothError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Centered moving average; near the ends the window is truncated to the
/// available points.
pub fn rolling_mean(values: &[f64], window: usize) -> Result<Vec<f64>, SmoothError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(SmoothError::BadWindow(window));
    }
    if window > values.len() {
        return Err(SmoothError::WindowTooLarge {
            window,
            len: values.len(),
        });
    }
    check_finite(values)?;
    let half = window / 2;
    let n = values.len();
    Ok((0..n)
        .map(|t| {
            let slice = &values[t.saturating_sub(half)..(t + half + 1).min(n)];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect())
}

pub fn rolling_mean_series(
    series: &DailyValues,
    window: usize,
) -> Result<SmoothedSeries, SmoothError> {
    Ok(SmoothedSeries {
        start_date: series.start_date,
        fitted: rolling_mean(&series.values, window)?,
        smoother: SmootherInfo::RollingMean { window },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penalty {
    Fixed(f64),
    /// Minimize generalized cross-validation over a log grid.
    Gcv,
}

impl std::str::FromStr for Penalty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("gcv") {
            return Ok(Penalty::Gcv);
        }
        s.parse::<f64>()
            .map(Penalty::Fixed)
            .map_err(|_| format!("penalty `{s}` is neither a number nor `gcv`"))
    }
}

/// Basis size used for a series of `n` points.
pub fn default_n_basis(n: usize) -> usize {
    (n / 5).clamp(4, 40).min(n)
}

/// Penalized least-squares fit on a cubic B-spline basis.
pub struct SplineSmoother {
    basis: BSplineBasis,
    design: DMatrix<f64>,
    gram: DMatrix<f64>,
    penalty_matrix: DMatrix<f64>,
}

impl SplineSmoother {
    pub fn new(n: usize, n_basis: usize) -> Result<Self, SmoothError> {
        if n < 4 {
            return Err(SmoothError::TooShort(n));
        }
        let basis = BSplineBasis::uniform_extended(3, n_basis.max(4))
            .map_err(|_| SmoothError::TooShort(n))?;
        let k = basis.n_basis();
        let points: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let rows = basis
            .design_matrix(&points)
            .expect("grid points lie in [0, 1]");
        let design = DMatrix::from_row_slice(n, k, &rows);
        let gram = design.transpose() * &design;
        let mut diff = DMatrix::zeros(k.saturating_sub(2), k);
        for r in 0..k.saturating_sub(2) {
            diff[(r, r)] = 1.0;
            diff[(r, r + 1)] = -2.0;
            diff[(r, r + 2)] = 1.0;
        }
        let penalty_matrix = diff.transpose() * diff;
        Ok(Self {
            basis,
            design,
            gram,
            penalty_matrix,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.basis.n_basis()
    }

    fn system(&self, penalty: f64) -> DMatrix<f64> {
        &self.gram + &self.penalty_matrix * penalty
    }

    /// Spline coefficients for a fixed penalty.
    pub fn coefficients(&self, y: &[f64], penalty: f64) -> Result<DVector<f64>, SmoothError> {
        let rhs = self.design.transpose() * DVector::from_column_slice(y);
        let chol = self
            .system(penalty)
            .cholesky()
            .ok_or(SmoothError::Singular)?;
        Ok(chol.solve(&rhs))
    }

    pub fn fit(&self, y: &[f64], penalty: f64) -> Result<Vec<f64>, SmoothError> {
        let coef = self.coefficients(y, penalty)?;
        Ok((&self.design * coef).iter().copied().collect())
    }

    /// `n * RSS / (n - tr(H))^2`.
    pub fn gcv(&self, y: &[f64], penalty: f64) -> Result<f64, SmoothError> {
        let chol = self
            .system(penalty)
            .cholesky()
            .ok_or(SmoothError::Singular)?;
        let n = y.len() as f64;
        let edf = chol.solve(&self.gram).trace();
        let fitted = self.fit(y, penalty)?;
        let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
        let denom = n - edf;
        if denom <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(n * rss / (denom * denom))
    }

    /// Penalty on the grid `10^-6 .. 10^8` (quarter decades) with smallest GCV.
    pub fn select_penalty(&self, y: &[f64]) -> Result<f64, SmoothError> {
        let mut best = (f64::INFINITY, 1.0);
        for step in -24..=32 {
            let penalty = 10f64.powf(step as f64 / 4.0);
            let score = self.gcv(y, penalty)?;
            if score < best.0 {
                best = (score, penalty);
            }
        }
        Ok(best.1)
    }
}

/// Smooths `values` with a cubic P-spline. `Penalty::Gcv` picks the penalty by
/// generalized cross-validation.
pub fn spline_smooth(
    values: &[f64],
    penalty: Penalty,
) -> Result<(Vec<f64>, SmootherInfo), SmoothError> {
    let n = values.len();
    if n < 4 {
        return Err(SmoothError::TooShort(n));
    }
    check_finite(values)?;
    let smoother = SplineSmoother::new(n, default_n_basis(n))?;
    let (lambda, by_gcv) = match penalty {
        Penalty::Fixed(l) if l.is_finite() && l >= 0.0 => (l, false),
        Penalty::Fixed(l) => return Err(SmoothError::BadPenalty(l)),
        Penalty::Gcv => (smoother.select_penalty(values)?, true),
    };
    let fitted = smoother.fit(values, lambda)?;
    Ok((
        fitted,
        SmootherInfo::PenalizedSpline {
            penalty: lambda,
            n_basis: smoother.n_basis(),
            selected_by_gcv: by_gcv,
        },
    ))
}

pub fn spline_smooth_series(
    series: &DailyValues,
    penalty: Penalty,
) -> Result<SmoothedSeries, SmoothError> {
    let (fitted, smoother) = spline_smooth(&series.values, penalty)?;
    Ok(SmoothedSeries {
        start_date: series.start_date,
        fitted,
        smoother,
    })
}

/// Reads a contiguous `date,<column>` series of reals. With no column given,
/// the first column other than `date` is used, so `date,count`,
/// `date,proportion` and `date,new_cases` files all load directly.
pub fn read_daily_values<R: Read>(
    reader: R,
    column: Option<&str>,
) -> Result<DailyValues, SmoothError> {
    let mut buf = Vec::new();
    let mut reader = reader;
    reader
        .read_to_end(&mut buf)
        .map_err(|source| SeriesError::Io {
            path: "<reader>".into(),
            source,
        })?;
    let column = match column {
        Some(c) => c.to_string(),
        None => {
            let mut rdr = csv::Reader::from_reader(&buf[..]);
            let headers = rdr
                .headers()
                .map_err(|source| SeriesError::Csv { line: 1, source })?;
            headers
                .iter()
                .find(|h| !h.trim().eq_ignore_ascii_case("date"))
                .map(|h| h.trim().to_string())
                .ok_or_else(|| SeriesError::MissingColumn("<value>".into()))?
        }
    };
    let rows = series::read_dated_column(&buf[..], &column)?;
    let first = rows.iter().map(|r| r.1).min().ok_or(SeriesError::Empty)?;
    let last = rows.iter().map(|r| r.1).max().ok_or(SeriesError::Empty)?;
    let window = DateWindow::new(first, last)?;
    let values = series::place_in_window(&rows, &window, |line, raw| {
        raw.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| SeriesError::Malformed {
                line,
                reason: format!("`{raw}` is not a finite number"),
            })
    })?;
    Ok(DailyValues {
        start_date: first,
        values,
    })
}

pub fn read_daily_values_file(
    path: &Path,
    column: Option<&str>,
) -> Result<DailyValues, SmoothError> {
    let file = std::fs::File::open(path).map_err(|source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_daily_values(std::io::BufReader::new(file), column)
}
