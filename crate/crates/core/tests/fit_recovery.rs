//! Simulate-then-fit checks with the default sampler settings.

use abusetrend::series::parse_date;
use abusetrend::simulate::{simulate, ParamCurves};
use abusetrend::tvbarc::{fit, summarize, McmcConfig, ModelSpec, PosteriorDraws};

fn assert_grid_invariant(draws: &PosteriorDraws) {
    let bases = draws.spec.bases().unwrap();
    for (k, params) in draws.draws.iter().enumerate() {
        assert!(
            params.satisfies_constraints(draws.spec.stability_margin),
            "draw {k}"
        );
        for g in 0..200 {
            let u = g as f64 / 199.0;
            let total: f64 = params.lags(&bases, u).unwrap().iter().sum();
            assert!(total < 1.0, "draw {k}: sum of lags {total} at u = {u}");
        }
    }
}

#[test]
fn constant_trend_and_single_lag_recovered() {
    let len = 1000;
    let curves = ParamCurves::constant(20.0, &[0.4]);
    let series = simulate(&curves, len, 1, parse_date("2019-01-01").unwrap()).unwrap();
    let cfg = McmcConfig {
        seed: 1,
        ..McmcConfig::default()
    };
    let draws = fit(&series, &ModelSpec::with_lag_order(1), &cfg).unwrap();
    assert_grid_invariant(&draws);
    let s = summarize(&draws).unwrap();
    for day in 0..len {
        let u = (day + 1) as f64 / len as f64;
        if !(0.1..=0.9).contains(&u) {
            continue;
        }
        let mu = s.mu.mean[day];
        let a1 = s.lags[0].mean[day];
        assert!((mu - 20.0).abs() <= 0.15 * 20.0, "mu({u:.3}) = {mu}");
        assert!((a1 - 0.4).abs() <= 0.1, "a1({u:.3}) = {a1}");
    }
}

#[test]
fn independent_counts_give_small_lags() {
    let len = 1000;
    let series = simulate(
        &ParamCurves::constant(30.0, &[0.0]),
        len,
        3,
        parse_date("2019-01-01").unwrap(),
    )
    .unwrap();
    let draws = fit(
        &series,
        &ModelSpec::with_lag_order(5),
        &McmcConfig::default(),
    )
    .unwrap();
    assert_grid_invariant(&draws);
    let s = summarize(&draws).unwrap();
    for (i, lag) in s.lags.iter().enumerate() {
        let worst = lag.mean.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 0.15, "a{} posterior mean reaches {worst}", i + 1);
    }
    for (lo, (m, hi)) in s.mu.lower.iter().zip(s.mu.mean.iter().zip(&s.mu.upper)) {
        assert!(lo <= m && m <= hi && *lo >= 0.0);
    }
}
