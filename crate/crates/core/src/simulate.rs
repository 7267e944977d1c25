//! Synthetic series from the generative model with known curves.
//!
//! The first `p` values are drawn from the trend alone, `Poisson(mu(t/T))`;
//! afterwards `X_t ~ Poisson(mu(t/T) + sum_i a_i(t/T) X_{t-i})`.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::AdjustedSeries;

#[derive(Debug, Error, PartialEq)]
pub enum SimulateError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("stability constraint violated: sum of lag suprema is {0}, must be below 1")]
    Unstable(f64),
    #[error("length {len} must exceed the lag order {lag_order}")]
    TooShort { len: usize, lag_order: usize },
    #[error("need at least one lag function")]
    NoLags,
}

/// A non-negative function on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Curve {
    Constant {
        value: f64,
    },
    /// Linear interpolation through `(u, value)` points sorted by `u`,
    /// held flat outside the first and last point.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
    /// `level + amplitude * sin(2 pi cycles u + phase)`.
    Sine {
        level: f64,
        amplitude: f64,
        #[serde(default = "one")]
        cycles: f64,
        #[serde(default)]
        phase: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Curve {
    pub fn constant(value: f64) -> Self {
        Curve::Constant { value }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Curve::Constant { value } => *value,
            Curve::PiecewiseLinear { points } => {
                let (first, last) = (points[0], points[points.len() - 1]);
                if u <= first.0 {
                    return first.1;
                }
                if u >= last.0 {
                    return last.1;
                }
                let k = points.partition_point(|&(x, _)| x <= u);
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                if x1 == x0 {
                    y1
                } else {
                    y0 + (y1 - y0) * (u - x0) / (x1 - x0)
                }
            }
            Curve::Sine {
                level,
                amplitude,
                cycles,
                phase,
            } => level + amplitude * (std::f64::consts::TAU * cycles * u + phase).sin(),
        }
    }

    /// `(inf, sup)` over [0, 1]. Exact for constants and tabulations; the
    /// sine bound is the envelope `level -/+ |amplitude|`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Curve::Constant { value } => (*value, *value),
            Curve::PiecewiseLinear { points } => points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
                    (lo.min(y), hi.max(y))
                }),
            Curve::Sine {
                level, amplitude, ..
            } => (level - amplitude.abs(), level + amplitude.abs()),
        }
    }

    fn validate(&self, name: &str) -> Result<(), SimulateError> {
        let bad = |m: String| Err(SimulateError::InvalidCurve(format!("{name}: {m}")));
        match self {
            Curve::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return bad("piecewise-linear curve needs at least one point".into());
                }
                if points.windows(2).any(|w| w[1].0 < w[0].0) {
                    return bad("points must be sorted by u".into());
                }
                if points
                    .iter()
                    .any(|&(x, y)| !x.is_finite() || !y.is_finite())
                {
                    return bad("non-finite point".into());
                }
            }
            Curve::Constant { value } if !value.is_finite() => {
                return bad("non-finite value".into())
            }
            Curve::Sine {
                level,
                amplitude,
                cycles,
                phase,
            } if ![level, amplitude, cycles, phase]
                .iter()
                .all(|v| v.is_finite()) =>
            {
                return bad("non-finite sine parameter".into())
            }
            _ => {}
        }
        let (lo, _) = self.bounds();
        if lo < 0.0 {
            return bad(format!("takes negative values (minimum {lo})"));
        }
        Ok(())
    }
}

/// Ground-truth trend and lag functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCurves {
    pub mu: Curve,
    pub lags: Vec<Curve>,
}

impl ParamCurves {
    /// Constant trend and lags; `lags` sets the lag order.
    pub fn constant(mu: f64, lags: &[f64]) -> Self {
        Self {
            mu: Curve::constant(mu),
            lags: lags.iter().map(|&a| Curve::constant(a)).collect(),
        }
    }

    pub fn lag_order(&self) -> usize {
        self.lags.len()
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.lags.is_empty() {
            return Err(SimulateError::NoLags);
        }
        self.mu.validate("mu")?;
        for (i, lag) in self.lags.iter().enumerate() {
            lag.validate(&format!("a{}", i + 1))?;
        }
        let total: f64 = self.lags.iter().map(|c| c.bounds().1).sum();
        if total >= 1.0 {
            return Err(SimulateError::Unstable(total));
        }
        Ok(())
    }
}

fn draw_poisson(lambda: f64, rng: &mut ChaCha8Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(lambda).expect("positive finite intensity");
    dist.sample(rng) as u64
}

/// Simulates `len` days starting at `start_date`; deterministic per seed.
pub fn simulate(
    curves: &ParamCurves,
    len: usize,
    seed: u64,
    start_date: NaiveDate,
) -> Result<AdjustedSeries, SimulateError> {
    curves.validate()?;
    let p = curves.lag_order();
    if len <= p {
        return Err(SimulateError::TooShort { len, lag_order: p });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<u64> = Vec::with_capacity(len);
    for t in 1..=len {
        let u = t as f64 / len as f64;
        let mut lambda = curves.mu.eval(u);
        if t > p {
            for (i, lag) in curves.lags.iter().enumerate() {
                lambda += lag.eval(u) * x[t - 2 - i] as f64;
            }
        }
        x.push(draw_poisson(lambda, &mut rng));
    }
    Ok(AdjustedSeries::new(start_date, x))
}
