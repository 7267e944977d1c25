//! Reconstruction and modeling of abusive-speech count series.
//!
//! The pipeline turns classifier-scored daily samples of posts plus an
//! exhaustive daily total into an adjusted count series, `X_t = round(p_t Y_t)`
//! where `p_t` is the share of the day's sample passing an x/y probability
//! filter, and then fits a time-varying Poisson autoregression
//!
//! ```text
//! X_t | past ~ Poisson(mu(t/T) + sum_{i=1..p} a_i(t/T) X_{t-i})
//! ```
//!
//! by constrained MCMC.
//!
//! Modules:
//!
//! - [`ingest`]: scored-tweet and count files, keyword ranking
//! - [`filter`]: x/y thresholds, daily proportions, adjusted counts
//! - [`tvbarc`]: model, likelihood, sampler, posterior summaries
//! - [`simulate`]: synthetic series from known curves
//! - [`smooth`]: rolling means and penalized-spline trend smoothing
//! - [`basis`], [`series`]: shared B-spline and daily-series plumbing

pub mod basis;
pub mod filter;
pub mod ingest;
pub mod series;
pub mod simulate;
pub mod smooth;
pub mod tvbarc;

pub use filter::{EmptyDayPolicy, ThresholdFilter};
pub use series::{AdjustedSeries, CountSeries, DateWindow};
