//! Metropolis-within-Gibbs sampler for the constrained model.
//!
//! One sweep updates, in order:
//!
//! 1. each trend coefficient `b_j` by a random walk on `log b_j`;
//! 2. each lag row `c_i` by an isotropic Gaussian random walk;
//! 3. each lag coefficient `c_ik` jointly with the trend, moving along a fixed
//!    direction `(c_ik + d, b - d * w_ik)`, where `w_ik` are the least-squares
//!    trend coefficients closest to the lag term `B'_k(u) * X_{t-i}`. The move
//!    follows the posterior ridge between trend level and lag mass.
//!
//! Proposals leaving the constrained region are rejected outright. Step sizes
//! adapt toward the target acceptance rate during burn-in and are frozen
//! afterwards.

use std::ops::Range;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::likelihood::LAMBDA_FLOOR;
use super::{ModelBases, ModelError, ModelSpec, TvbarcParams};
use crate::series::AdjustedSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub seed: u64,
    /// Initial random-walk scale on `log b_j`.
    pub step_trend: f64,
    /// Initial random-walk scale for each lag-row coefficient.
    pub step_lag: f64,
    /// Initial scale of the joint trend/lag moves.
    pub step_joint: f64,
    pub target_acceptance: f64,
    /// Independent chains; chain `k` uses stream `k` of the seeded generator.
    pub n_chains: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_iter: 6000,
            n_burn: 1000,
            thin: 5,
            seed: 20190101,
            step_trend: 0.05,
            step_lag: 0.01,
            step_joint: 0.01,
            target_acceptance: 0.3,
            n_chains: 1,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.n_burn >= self.n_iter {
            return bad(format!(
                "burn-in {} must be below iteration count {}",
                self.n_burn, self.n_iter
            ));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        if self.n_chains == 0 {
            return bad("need at least one chain".into());
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return bad(format!(
                "target acceptance {} must lie in (0, 1)",
                self.target_acceptance
            ));
        }
        for (name, s) in [
            ("step_trend", self.step_trend),
            ("step_lag", self.step_lag),
            ("step_joint", self.step_joint),
        ] {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("{name} = {s} must be positive"));
            }
        }
        if (self.n_iter - self.n_burn) < self.thin {
            return bad("no draws would be retained after burn-in and thinning".into());
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn n_retained(&self) -> usize {
        (self.n_iter - self.n_burn) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagnostics {
    pub name: String,
    /// Frozen step size after burn-in.
    pub step: f64,
    /// Post-burn-in counts.
    pub proposed: u64,
    pub accepted: u64,
}

impl BlockDiagnostics {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    pub blocks: Vec<BlockDiagnostics>,
}

/// Retained, thinned states of one or more chains, in chain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub spec: ModelSpec,
    pub config: McmcConfig,
    pub start_date: NaiveDate,
    pub series_len: usize,
    pub prior_scale: f64,
    pub draws: Vec<TvbarcParams>,
    pub log_posterior: Vec<f64>,
    pub chain_index: Vec<usize>,
    pub diagnostics: Vec<ChainDiagnostics>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn n_chains(&self) -> usize {
        self.diagnostics.len()
    }

    /// Index ranges of each chain's draws.
    pub fn chain_ranges(&self) -> Vec<Range<usize>> {
        let mut ranges: Vec<Range<usize>> = Vec::new();
        for (i, &c) in self.chain_index.iter().enumerate() {
            match ranges.last_mut() {
                Some(r) if self.chain_index[r.start] == c => r.end = i + 1,
                _ => ranges.push(i..i + 1),
            }
        }
        ranges
    }
}

/// Precomputed basis rows and data for the rows `t = p+1..T`.
struct Design {
    p: usize,
    m: usize,
    kb: usize,
    kc: usize,
    counts: Vec<f64>,
    /// Modeled observations `X_{p+1..T}`.
    y: Vec<f64>,
    trend: Vec<f64>,
    lag: Vec<f64>,
    trend_support: Vec<Range<usize>>,
    log_fact_sum: f64,
    /// `joint[i][k]`: trend coefficients mimicking the lag-`i+1`, basis-`k` term.
    joint: Vec<Vec<Vec<f64>>>,
}

impl Design {
    fn new(
        series: &AdjustedSeries,
        spec: &ModelSpec,
        bases: &ModelBases,
    ) -> Result<Self, ModelError> {
        let len = series.len();
        let p = spec.lag_order;
        let m = len - p;
        let kb = bases.trend.n_basis();
        let kc = bases.lag.n_basis();
        let points: Vec<f64> = (p + 1..=len).map(|t| t as f64 / len as f64).collect();
        let trend = bases.trend.design_matrix(&points)?;
        let lag = bases.lag.design_matrix(&points)?;
        let counts: Vec<f64> = series.values.iter().map(|&v| v as f64).collect();
        let y = counts[p..].to_vec();
        let log_fact_sum = series.values[p..].iter().map(|&v| ln_factorial(v)).sum();

        let trend_support = (0..kb)
            .map(|j| {
                let nz = |n: &usize| trend[n * kb + j] != 0.0;
                let first = (0..m).find(nz).unwrap_or(0);
                let last = (0..m).rev().find(nz).map_or(0, |n| n + 1);
                first..last.max(first)
            })
            .collect();

        let tmat = DMatrix::from_row_slice(m, kb, &trend);
        let gram = tmat.transpose() * &tmat;
        let chol = gram.cholesky();
        let joint = (0..p)
            .map(|i| {
                (0..kc)
                    .map(|k| {
                        let target = DVector::from_iterator(
                            m,
                            (0..m).map(|n| lag[n * kc + k] * counts[p + n - i - 1]),
                        );
                        match &chol {
                            Some(c) => c
                                .solve(&(tmat.transpose() * target))
                                .iter()
                                .copied()
                                .collect(),
                            None => vec![0.0; kb],
                        }
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            p,
            m,
            kb,
            kc,
            counts,
            y,
            trend,
            lag,
            trend_support,
            log_fact_sum,
            joint,
        })
    }

    fn mu_row(&self, n: usize, b: &[f64]) -> f64 {
        let row = &self.trend[n * self.kb..(n + 1) * self.kb];
        row.iter().zip(b).map(|(x, c)| x * c).sum()
    }

    fn lag_row(&self, n: usize, i: usize, c: &[f64]) -> f64 {
        let row = &self.lag[n * self.kc..(n + 1) * self.kc];
        let a: f64 = row.iter().zip(c).map(|(x, c)| x * c).sum();
        a * self.counts[self.p + n - i - 1]
    }

    /// `x log(lambda) - lambda` with the floor applied.
    fn kernel(&self, n: usize, lambda: f64) -> f64 {
        let lambda = lambda.max(LAMBDA_FLOOR);
        let y = self.y[n];
        if y == 0.0 {
            -lambda
        } else {
            y * lambda.ln() - lambda
        }
    }
}

#[derive(Clone)]
struct State {
    params: TvbarcParams,
    mu: Vec<f64>,
    lag_parts: Vec<Vec<f64>>,
    lag_sum: Vec<f64>,
    ll_rows: Vec<f64>,
}

impl State {
    fn new(params: TvbarcParams, d: &Design) -> Self {
        let mu: Vec<f64> = (0..d.m).map(|n| d.mu_row(n, &params.b)).collect();
        let lag_parts: Vec<Vec<f64>> = (0..d.p)
            .map(|i| (0..d.m).map(|n| d.lag_row(n, i, &params.c[i])).collect())
            .collect();
        let lag_sum: Vec<f64> = (0..d.m)
            .map(|n| lag_parts.iter().map(|r| r[n]).sum())
            .collect();
        let ll_rows = (0..d.m).map(|n| d.kernel(n, mu[n] + lag_sum[n])).collect();
        Self {
            params,
            mu,
            lag_parts,
            lag_sum,
            ll_rows,
        }
    }

    fn log_likelihood(&self, d: &Design) -> f64 {
        self.ll_rows.iter().sum::<f64>() - d.log_fact_sum
    }
}

struct Block {
    name: String,
    log_step: f64,
    proposed: u64,
    accepted: u64,
}

impl Block {
    fn new(name: String, step: f64) -> Self {
        Self {
            name,
            log_step: step.ln(),
            proposed: 0,
            accepted: 0,
        }
    }

    fn step(&self) -> f64 {
        self.log_step.exp()
    }
}

struct Chain<'a> {
    d: &'a Design,
    spec: &'a ModelSpec,
    prior_scale: f64,
    state: State,
    rng: ChaCha8Rng,
    // scratch
    mu_new: Vec<f64>,
    part_new: Vec<f64>,
    sum_new: Vec<f64>,
    ll_new: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn half_normal(&self, b: f64) -> f64 {
        -0.5 * (b / self.prior_scale).powi(2)
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        let u: f64 = self.rng.random();
        log_ratio.is_finite() && u.ln() < log_ratio
    }

    fn stability_with_row(&self, i: usize, row: &[f64]) -> f64 {
        self.state
            .params
            .c
            .iter()
            .enumerate()
            .map(|(r, c)| {
                let c = if r == i { row } else { c.as_slice() };
                c.iter().copied().fold(0.0, f64::max)
            })
            .sum()
    }

    fn update_trend(&mut self, j: usize, step: f64) -> bool {
        let d = self.d;
        let old = self.state.params.b[j];
        let z: f64 = self.rng.sample(StandardNormal);
        let log_new = old.ln() + step * z;
        let new = log_new.exp();
        if !(new > 0.0 && new.is_finite()) {
            return false;
        }
        let mut b = self.state.params.b.clone();
        b[j] = new;
        let rows = d.trend_support[j].clone();
        let mut delta = 0.0;
        for n in rows.clone() {
            let mu = d.mu_row(n, &b);
            let ll = d.kernel(n, mu + self.state.lag_sum[n]);
            self.mu_new[n] = mu;
            self.ll_new[n] = ll;
            delta += ll - self.state.ll_rows[n];
        }
        let log_ratio =
            delta + self.half_normal(new) - self.half_normal(old) + (log_new - old.ln());
        if !self.accept(log_ratio) {
            return false;
        }
        self.state.params.b = b;
        for n in rows {
            self.state.mu[n] = self.mu_new[n];
            self.state.ll_rows[n] = self.ll_new[n];
        }
        true
    }

    fn update_lag_row(&mut self, i: usize, step: f64) -> bool {
        let d = self.d;
        let row: Vec<f64> = self.state.params.c[i]
            .iter()
            .map(|&c| {
                let z: f64 = self.rng.sample(StandardNormal);
                c + step * z
            })
            .collect();
        if row.iter().any(|&c| c < 0.0)
            || self.stability_with_row(i, &row) > 1.0 - self.spec.stability_margin
        {
            return false;
        }
        let mut delta = 0.0;
        for n in 0..d.m {
            let part = d.lag_row(n, i, &row);
            let sum = self.lag_sum_with(n, i, part);
            let ll = d.kernel(n, self.state.mu[n] + sum);
            self.part_new[n] = part;
            self.sum_new[n] = sum;
            self.ll_new[n] = ll;
            delta += ll - self.state.ll_rows[n];
        }
        if !self.accept(delta) {
            return false;
        }
        self.state.params.c[i] = row;
        self.state.lag_parts[i].copy_from_slice(&self.part_new[..d.m]);
        self.state.lag_sum.copy_from_slice(&self.sum_new[..d.m]);
        self.state.ll_rows.copy_from_slice(&self.ll_new[..d.m]);
        true
    }

    fn lag_sum_with(&self, n: usize, i: usize, part: f64) -> f64 {
        self.state
            .lag_parts
            .iter()
            .enumerate()
            .map(|(r, parts)| if r == i { part } else { parts[n] })
            .sum()
    }

    fn update_joint(&mut self, i: usize, k: usize, step: f64) -> bool {
        let d = self.d;
        let z: f64 = self.rng.sample(StandardNormal);
        let shift = step * z;
        let mut row = self.state.params.c[i].clone();
        row[k] += shift;
        if row[k] < 0.0 || self.stability_with_row(i, &row) > 1.0 - self.spec.stability_margin {
            return false;
        }
        let direction = &d.joint[i][k];
        let b: Vec<f64> = self
            .state
            .params
            .b
            .iter()
            .zip(direction)
            .map(|(b, w)| b - shift * w)
            .collect();
        if b.iter().any(|&v| v <= 0.0) {
            return false;
        }
        let mut delta = 0.0;
        for n in 0..d.m {
            let mu = d.mu_row(n, &b);
            let part = d.lag_row(n, i, &row);
            let sum = self.lag_sum_with(n, i, part);
            let ll = d.kernel(n, mu + sum);
            self.mu_new[n] = mu;
            self.part_new[n] = part;
            self.sum_new[n] = sum;
            self.ll_new[n] = ll;
            delta += ll - self.state.ll_rows[n];
        }
        let prior_delta: f64 = b
            .iter()
            .zip(&self.state.params.b)
            .map(|(&new, &old)| self.half_normal(new) - self.half_normal(old))
            .sum();
        if !self.accept(delta + prior_delta) {
            return false;
        }
        self.state.params.b = b;
        self.state.params.c[i] = row;
        self.state.mu.copy_from_slice(&self.mu_new[..d.m]);
        self.state.lag_parts[i].copy_from_slice(&self.part_new[..d.m]);
        self.state.lag_sum.copy_from_slice(&self.sum_new[..d.m]);
        self.state.ll_rows.copy_from_slice(&self.ll_new[..d.m]);
        true
    }

    fn log_posterior(&self) -> f64 {
        let prior_norm = (2.0 / std::f64::consts::PI).sqrt().ln() - self.prior_scale.ln();
        let prior: f64 = self
            .state
            .params
            .b
            .iter()
            .map(|&b| prior_norm + self.half_normal(b))
            .sum();
        prior + self.state.log_likelihood(self.d)
    }
}

fn initial_params(spec: &ModelSpec, series_mean: f64) -> TvbarcParams {
    const INITIAL_LAG_MASS: f64 = 0.2;
    let lag = INITIAL_LAG_MASS / spec.lag_order as f64;
    let mu = (1.0 - INITIAL_LAG_MASS) * series_mean.max(0.1);
    TvbarcParams {
        b: vec![mu; spec.n_basis_trend],
        c: vec![vec![lag; spec.n_basis_lag]; spec.lag_order],
    }
}

fn check_inputs(
    series: &AdjustedSeries,
    spec: &ModelSpec,
    mcmc: &McmcConfig,
) -> Result<ModelBases, ModelError> {
    let bases = spec.bases()?;
    mcmc.validate()?;
    let needed = spec.lag_order + spec.n_basis_trend;
    if series.len() <= needed {
        return Err(ModelError::SeriesTooShort {
            len: series.len(),
            needed,
        });
    }
    if series.values.iter().all(|&v| v == 0) {
        log::warn!(
            "series is identically zero; the posterior is degenerate and driven by the prior"
        );
    }
    Ok(bases)
}

struct ChainOutput {
    draws: Vec<TvbarcParams>,
    log_posterior: Vec<f64>,
    diagnostics: ChainDiagnostics,
}

fn run_chain(
    design: &Design,
    spec: &ModelSpec,
    mcmc: &McmcConfig,
    prior_scale: f64,
    init: TvbarcParams,
    chain: usize,
) -> ChainOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(mcmc.seed);
    rng.set_stream(chain as u64);
    let m = design.m;
    let mut c = Chain {
        d: design,
        spec,
        prior_scale,
        state: State::new(init, design),
        rng,
        mu_new: vec![0.0; m],
        part_new: vec![0.0; m],
        sum_new: vec![0.0; m],
        ll_new: vec![0.0; m],
    };

    let (p, kb, kc) = (design.p, design.kb, design.kc);
    let mut trend_blocks: Vec<Block> = (0..kb)
        .map(|j| Block::new(format!("b{j}"), mcmc.step_trend))
        .collect();
    let mut lag_blocks: Vec<Block> = (0..p)
        .map(|i| Block::new(format!("c{}", i + 1), mcmc.step_lag))
        .collect();
    let mut joint_blocks: Vec<Block> = (0..p * kc)
        .map(|ik| Block::new(format!("joint{}_{}", ik / kc + 1, ik % kc), mcmc.step_joint))
        .collect();

    let n_keep = mcmc.n_retained();
    let mut draws = Vec::with_capacity(n_keep);
    let mut log_posterior = Vec::with_capacity(n_keep);
    let target = mcmc.target_acceptance;

    for iter in 0..mcmc.n_iter {
        let burning = iter < mcmc.n_burn;
        let gain = ((iter + 1) as f64).powf(-0.6);
        let record = |block: &mut Block, accepted: bool| {
            if burning {
                block.log_step += gain * (f64::from(u8::from(accepted)) - target);
            } else {
                block.proposed += 1;
                block.accepted += u64::from(accepted);
            }
        };

        for (j, block) in trend_blocks.iter_mut().enumerate() {
            let accepted = c.update_trend(j, block.step());
            record(block, accepted);
        }
        for (i, block) in lag_blocks.iter_mut().enumerate() {
            let accepted = c.update_lag_row(i, block.step());
            record(block, accepted);
        }
        for (ik, block) in joint_blocks.iter_mut().enumerate() {
            let accepted = c.update_joint(ik / kc, ik % kc, block.step());
            record(block, accepted);
        }

        if !burning && (iter - mcmc.n_burn + 1).is_multiple_of(mcmc.thin) {
            debug_assert!(c.state.params.satisfies_constraints(spec.stability_margin));
            draws.push(c.state.params.clone());
            log_posterior.push(c.log_posterior());
        }
    }

    let blocks = trend_blocks
        .into_iter()
        .chain(lag_blocks)
        .chain(joint_blocks)
        .map(|b| BlockDiagnostics {
            step: b.step(),
            name: b.name,
            proposed: b.proposed,
            accepted: b.accepted,
        })
        .collect();
    ChainOutput {
        draws,
        log_posterior,
        diagnostics: ChainDiagnostics { chain, blocks },
    }
}

/// Runs a single chain (stream 0) regardless of `mcmc.n_chains`.
pub fn fit(
    series: &AdjustedSeries,
    spec: &ModelSpec,
    mcmc: &McmcConfig,
) -> Result<PosteriorDraws, ModelError> {
    let single = McmcConfig {
        n_chains: 1,
        ..mcmc.clone()
    };
    fit_chains(series, spec, &single)
}

/// Runs `mcmc.n_chains` independent chains in parallel threads and
/// concatenates their draws in chain order.
pub fn fit_chains(
    series: &AdjustedSeries,
    spec: &ModelSpec,
    mcmc: &McmcConfig,
) -> Result<PosteriorDraws, ModelError> {
    let bases = check_inputs(series, spec, mcmc)?;
    let design = Design::new(series, spec, &bases)?;
    let mean = series.mean();
    let prior_scale = spec.resolved_prior_scale(mean);
    let init = initial_params(spec, mean);

    let outputs: Vec<ChainOutput> = if mcmc.n_chains == 1 {
        vec![run_chain(&design, spec, mcmc, prior_scale, init, 0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..mcmc.n_chains)
                .map(|k| {
                    let (design, init) = (&design, init.clone());
                    scope.spawn(move || run_chain(design, spec, mcmc, prior_scale, init, k))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler thread panicked"))
                .collect()
        })
    };

    let mut out = PosteriorDraws {
        spec: spec.clone(),
        config: mcmc.clone(),
        start_date: series.start_date,
        series_len: series.len(),
        prior_scale,
        draws: Vec::new(),
        log_posterior: Vec::new(),
        chain_index: Vec::new(),
        diagnostics: Vec::new(),
    };
    for o in outputs {
        out.chain_index
            .extend(std::iter::repeat_n(o.diagnostics.chain, o.draws.len()));
        out.draws.extend(o.draws);
        out.log_posterior.extend(o.log_posterior);
        out.diagnostics.push(o.diagnostics);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::parse_date;
    use crate::tvbarc::log_posterior;

    fn series(values: Vec<u64>) -> AdjustedSeries {
        AdjustedSeries::new(parse_date("2021-01-01").unwrap(), values)
    }

    fn short_config(seed: u64) -> McmcConfig {
        McmcConfig {
            n_iter: 300,
            n_burn: 100,
            thin: 2,
            seed,
            ..McmcConfig::default()
        }
    }

    fn wavy(len: usize) -> Vec<u64> {
        (0..len).map(|t| 10 + (t * 7 % 13) as u64).collect()
    }

    #[test]
    fn config_validation() {
        assert!(McmcConfig::default().validate().is_ok());
        assert_eq!(McmcConfig::default().n_retained(), 1000);
        let bad = McmcConfig {
            n_burn: 6000,
            ..McmcConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = McmcConfig {
            thin: 0,
            ..McmcConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn identifiability_guard() {
        let spec = ModelSpec::with_lag_order(3);
        let s = series(vec![1; 11]);
        assert!(matches!(
            fit(&s, &spec, &short_config(1)),
            Err(ModelError::SeriesTooShort {
                len: 11,
                needed: 11
            })
        ));
        assert!(fit(&series(vec![1; 12]), &spec, &short_config(1)).is_ok());
    }

    #[test]
    fn same_seed_bit_identical() {
        let spec = ModelSpec::with_lag_order(2);
        let s = series(wavy(80));
        let a = fit(&s, &spec, &short_config(9)).unwrap();
        let b = fit(&s, &spec, &short_config(9)).unwrap();
        assert_eq!(a, b);
        let c = fit(&s, &spec, &short_config(10)).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn draws_respect_constraints_and_bookkeeping() {
        let spec = ModelSpec::with_lag_order(3);
        let s = series(wavy(120));
        let draws = fit(&s, &spec, &short_config(4)).unwrap();
        assert_eq!(draws.len(), 100);
        let bases = spec.bases().unwrap();
        for (params, &stored) in draws.draws.iter().zip(&draws.log_posterior) {
            assert!(params.satisfies_constraints(spec.stability_margin));
            // the incrementally tracked state matches a from-scratch evaluation
            let fresh = log_posterior(params, &spec, &bases, &s, draws.prior_scale).unwrap();
            assert!(
                (fresh - stored).abs() < 1e-7 * fresh.abs().max(1.0),
                "{fresh} vs {stored}"
            );
        }
    }

    #[test]
    fn all_zero_series_fits() {
        let spec = ModelSpec::with_lag_order(2);
        let draws = fit(&series(vec![0; 40]), &spec, &short_config(2)).unwrap();
        assert_eq!(draws.prior_scale, crate::tvbarc::MIN_PRIOR_SCALE);
        assert!(draws.log_posterior.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn parallel_chains_are_deterministic_and_distinct() {
        let spec = ModelSpec::with_lag_order(2);
        let s = series(wavy(60));
        let cfg = McmcConfig {
            n_chains: 3,
            ..short_config(5)
        };
        let a = fit_chains(&s, &spec, &cfg).unwrap();
        let b = fit_chains(&s, &spec, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_chains(), 3);
        assert_eq!(a.chain_ranges(), vec![0..100, 100..200, 200..300]);
        assert_ne!(a.draws[0..100], a.draws[100..200]);
        // chain 0 equals the single-chain run
        let single = fit(&s, &spec, &cfg).unwrap();
        assert_eq!(single.draws[..], a.draws[0..100]);
    }
}
