//! Sampler correctness against brute-force quadrature on models small enough
//! to integrate on a grid: piecewise-constant bases with one function each,
//! so the posterior lives in `(b, c_1, .., c_p)`.

use abusetrend::series::{parse_date, AdjustedSeries};
use abusetrend::simulate::{simulate, ParamCurves};
use abusetrend::tvbarc::{fit_chains, log_posterior, McmcConfig, ModelSpec, TvbarcParams};

fn flat_spec(p: usize) -> ModelSpec {
    ModelSpec {
        n_basis_trend: 1,
        n_basis_lag: 1,
        spline_degree: 0,
        ..ModelSpec::with_lag_order(p)
    }
}

struct Moments {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

/// Midpoint rule over `b in [b_lo, b_hi]` and the stability simplex for `c`.
fn grid_moments(
    spec: &ModelSpec,
    series: &AdjustedSeries,
    b_range: (f64, f64),
    n: usize,
) -> Moments {
    let p = spec.lag_order;
    let bases = spec.bases().unwrap();
    let scale = spec.resolved_prior_scale(series.mean());
    let cap = 1.0 - spec.stability_margin;
    let dims = p + 1;
    let mut logs = Vec::new();
    let mut points = Vec::new();
    let mut idx = vec![0usize; dims];
    loop {
        let b = b_range.0 + (idx[0] as f64 + 0.5) * (b_range.1 - b_range.0) / n as f64;
        let c: Vec<f64> = idx[1..]
            .iter()
            .map(|&k| (k as f64 + 0.5) * cap / n as f64)
            .collect();
        if c.iter().sum::<f64>() <= cap {
            let params = TvbarcParams {
                b: vec![b],
                c: c.iter().map(|&v| vec![v]).collect(),
            };
            let lp = log_posterior(&params, spec, &bases, series, scale).unwrap();
            let mut point = vec![b];
            point.extend(c);
            points.push(point);
            logs.push(lp);
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dims {
                break;
            }
        }
        if d == dims {
            break;
        }
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut mean = vec![0.0; dims];
    let mut sq = vec![0.0; dims];
    for (pt, wi) in points.iter().zip(&w) {
        for k in 0..dims {
            mean[k] += wi * pt[k] / total;
            sq[k] += wi * pt[k] * pt[k] / total;
        }
    }
    let sd = (0..dims)
        .map(|k| (sq[k] - mean[k] * mean[k]).sqrt())
        .collect();
    Moments { mean, sd }
}

fn mcmc_moments(spec: &ModelSpec, series: &AdjustedSeries, seed: u64) -> Moments {
    let cfg = McmcConfig {
        n_iter: 22_000,
        n_burn: 2_000,
        thin: 5,
        n_chains: 4,
        seed,
        ..McmcConfig::default()
    };
    let draws = fit_chains(series, spec, &cfg).unwrap();
    let dims = spec.lag_order + 1;
    let n = draws.len() as f64;
    let value = |d: &TvbarcParams, k: usize| if k == 0 { d.b[0] } else { d.c[k - 1][0] };
    let mean: Vec<f64> = (0..dims)
        .map(|k| draws.draws.iter().map(|d| value(d, k)).sum::<f64>() / n)
        .collect();
    let sd = (0..dims)
        .map(|k| {
            let v = draws
                .draws
                .iter()
                .map(|d| (value(d, k) - mean[k]).powi(2))
                .sum::<f64>()
                / n;
            v.sqrt()
        })
        .collect();
    Moments { mean, sd }
}

fn check(spec: &ModelSpec, series: &AdjustedSeries, b_range: (f64, f64), n: usize) {
    let grid = grid_moments(spec, series, b_range, n);
    let mc = mcmc_moments(spec, series, 11);
    for k in 0..grid.mean.len() {
        // 16000 correlated draws; allow a generous Monte Carlo margin
        let tol = 0.1 * grid.sd[k];
        assert!(
            (grid.mean[k] - mc.mean[k]).abs() < tol,
            "coordinate {k}: grid mean {} sd {}, mcmc mean {} sd {}",
            grid.mean[k],
            grid.sd[k],
            mc.mean[k],
            mc.sd[k]
        );
        assert!(
            (grid.sd[k] - mc.sd[k]).abs() < 0.1 * grid.sd[k],
            "coordinate {k}: grid sd {}, mcmc sd {}",
            grid.sd[k],
            mc.sd[k]
        );
    }
}

#[test]
fn one_lag_matches_quadrature() {
    let spec = flat_spec(1);
    let series = simulate(
        &ParamCurves::constant(10.0, &[0.3]),
        300,
        5,
        parse_date("2020-01-01").unwrap(),
    )
    .unwrap();
    check(&spec, &series, (4.0, 16.0), 300);
}

#[test]
fn two_lags_match_quadrature() {
    let spec = flat_spec(2);
    let series = simulate(
        &ParamCurves::constant(8.0, &[0.3, 0.2]),
        300,
        9,
        parse_date("2020-01-01").unwrap(),
    )
    .unwrap();
    check(&spec, &series, (2.0, 14.0), 64);
}
