//! Replication-parallel Monte Carlo experiments.
//!
//! Replication `l` of a task seeded with `seed` draws only from
//! `seed.stream(l)`, results are collected in replication order and reduced
//! with pairwise summation, so every aggregate is bit-identical for any
//! worker count.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::Dgp;
use crate::error::{invalid, Error, Result};
use crate::innovations::InnovationDist;
use crate::linalg::dot;
use crate::linear_process::LinearFilter;
use crate::population::{estimate_moments, DEFAULT_N_LONG, MIN_N_LONG};
use crate::predictor::{fit, SubsetSpec};
use crate::rng::{RngStream, Seed};
use crate::selection::{check_cn_exponent, oracle_sets, score_all, Criterion, OracleInput, DEFAULT_CN_EXPONENT};
use crate::stats::{mean_se, pairwise_sum};
use crate::volatility::{Estimate, VolatilityModel};

pub const DEFAULT_MASTER_SEED: u64 = 20_240_917;

// Child-seed tags separating the population path from the replications.
const TAG_POPULATION: u64 = 1;
const TAG_REPLICATIONS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub index: usize,
    pub reason: String,
}

/// Runs `task(l, stream_l)` for `l = 0..reps` on a pool of `workers` threads.
/// A replication that errors or panics yields a [`ReplicationFailure`]
/// without affecting the others.
pub fn run_replications<T, F>(
    reps: usize,
    seed: Seed,
    workers: usize,
    task: F,
) -> Result<Vec<std::result::Result<T, ReplicationFailure>>>
where
    T: Send,
    F: Fn(usize, &mut RngStream) -> Result<T> + Sync,
{
    if workers == 0 {
        return Err(invalid("worker count must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))?;
    let one = |l: usize| {
        let mut rng = seed.stream(l as u64);
        match catch_unwind(AssertUnwindSafe(|| task(l, &mut rng))) {
            Ok(Ok(v)) => Ok(v),
            Ok(Err(e)) => Err(ReplicationFailure { index: l, reason: e.to_string() }),
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(ReplicationFailure { index: l, reason: format!("panicked: {msg}") })
            }
        }
    };
    Ok(pool.install(|| (0..reps).into_par_iter().map(one).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Working {
    /// One working model, evaluated by the ratio experiment.
    Lags(Vec<usize>),
    /// Candidate lag sets, compared by the selection experiment.
    Candidates(Vec<Vec<usize>>),
}

fn default_n_long() -> usize {
    DEFAULT_N_LONG
}

fn default_cn() -> f64 {
    DEFAULT_CN_EXPONENT
}

fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dgp: Dgp,
    pub working: Working,
    pub horizons: Vec<usize>,
    pub n_list: Vec<usize>,
    #[serde(rename = "M", alias = "replications")]
    pub replications: usize,
    #[serde(default = "default_n_long")]
    pub n_long: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_cn")]
    pub cn_exponent: f64,
    #[serde(default)]
    pub burn_in: Option<usize>,
}

impl ExperimentConfig {
    pub fn candidate_sets(&self) -> Vec<Vec<usize>> {
        match &self.working {
            Working::Lags(l) => vec![l.clone()],
            Working::Candidates(c) => c.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("M must be at least 1"));
        }
        if self.horizons.is_empty() || self.n_list.is_empty() {
            return Err(invalid("horizons and n_list must be non-empty"));
        }
        if self.n_long < MIN_N_LONG {
            return Err(invalid(format!("n_long must be at least {MIN_N_LONG}")));
        }
        check_cn_exponent(self.cn_exponent)?;
        let sets = self.candidate_sets();
        if sets.is_empty() {
            return Err(invalid("candidate list is empty"));
        }
        let d_bar = sets.iter().flatten().copied().max().unwrap_or(0);
        for lags in &sets {
            for &h in &self.horizons {
                let spec = SubsetSpec::new(lags.clone(), h)?;
                for &n in &self.n_list {
                    let needed = d_bar.max(spec.max_lag()) + h + spec.len() + 5;
                    if n < needed {
                        return Err(invalid(format!("n = {n} is too small for {spec}; need at least {needed}")));
                    }
                }
            }
        }
        let diag = self.dgp.volatility.check_stationarity(&self.dgp.innovations);
        if !diag.ok {
            return Err(Error::NonStationary { margin: diag.margin });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    T1,
    T2,
    T3,
    S1,
}

impl std::str::FromStr for Table {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t1" => Ok(Table::T1),
            "t2" => Ok(Table::T2),
            "t3" => Ok(Table::T3),
            "s1" => Ok(Table::S1),
            other => Err(invalid(format!("unknown table '{other}' (expected t1, t2, t3 or s1)"))),
        }
    }
}

fn arma(ar: &[f64], ma: &[f64]) -> LinearFilter {
    LinearFilter::from_arma(ar, ma, crate::linear_process::DEFAULT_TRUNC_TOL).expect("preset filter")
}

fn garch(phi0: f64, phi: f64, psi: f64) -> VolatilityModel {
    VolatilityModel::garch(phi0, &[phi], &[psi]).expect("preset GARCH")
}

fn table_sv() -> VolatilityModel {
    VolatilityModel::sv(0.01, &[0.98], 0.04).expect("preset SV")
}

impl Table {
    /// The preset blocks of one table, each a complete experiment.
    pub fn configs(self, replications: Option<usize>, master_seed: u64) -> Vec<ExperimentConfig> {
        let normal = InnovationDist::std_normal();
        let block = |name: &str, filter: &LinearFilter, vol: VolatilityModel, working: Working, horizons: Vec<usize>, n_list: Vec<usize>, m: usize| {
            ExperimentConfig {
                name: name.to_string(),
                dgp: Dgp::new(filter.clone(), vol, normal),
                working,
                horizons,
                n_list,
                replications: replications.unwrap_or(m),
                n_long: DEFAULT_N_LONG,
                master_seed,
                cn_exponent: DEFAULT_CN_EXPONENT,
                burn_in: None,
            }
        };
        let h5: Vec<usize> = (1..=5).collect();
        match self {
            Table::T1 | Table::T2 => {
                let (filter, tag) = if self == Table::T1 {
                    (arma(&[0.0, -0.5], &[]), "t1")
                } else {
                    (arma(&[], &[-0.8]), "t2")
                };
                vec![
                    block(&format!("{tag}-garch"), &filter, garch(0.4, 0.2, 0.55), Working::Lags(vec![1]), h5.clone(), vec![500, 2000], 2000),
                    block(&format!("{tag}-sv"), &filter, table_sv(), Working::Lags(vec![1]), h5, vec![500, 2000], 2000),
                ]
            }
            Table::T3 => vec![block(
                "t3",
                &arma(&[0.0, 0.0, 0.4], &[]),
                garch(0.4, 0.2, 0.55),
                Working::Candidates(vec![vec![1], vec![2]]),
                vec![1, 2, 3],
                vec![500, 1000, 2000, 3000],
                1000,
            )],
            Table::S1 => {
                let filter = arma(&[-0.5], &[]);
                vec![
                    block("s1-heavy", &filter, garch(0.4, 0.5, 0.2), Working::Lags(vec![1]), vec![1], vec![500, 2000, 5000], 2000),
                    block("s1-light", &filter, garch(0.4, 0.2, 0.55), Working::Lags(vec![1]), vec![1], vec![500, 2000, 5000], 2000),
                ]
            }
        }
    }
}

/// One output line: `(experiment, n, h, criterion, estimate, se, count)`.
/// `criterion` is `na` for ratio cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub n: usize,
    pub h: usize,
    pub criterion: String,
    pub estimate: f64,
    pub se: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub h: usize,
    pub g_tilde: Estimate,
    pub f_h: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    pub n: usize,
    pub h: usize,
    /// Monte Carlo average of `n {(x - x̂ - ε)² + 2 (x - x̂ - ε)(ε - ε̃)}`.
    pub g_tilde_nh: f64,
    pub g_tilde_nh_se: f64,
    pub ratio: f64,
    /// Combines the replication SE with the population SE.
    pub ratio_se: f64,
    pub completed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub experiment: String,
    pub population: Vec<PopulationSummary>,
    pub cells: Vec<RatioCell>,
    pub failures: Vec<(usize, ReplicationFailure)>,
}

impl RatioResult {
    pub fn cell(&self, n: usize, h: usize) -> Option<&RatioCell> {
        self.cells.iter().find(|c| c.n == n && c.h == h)
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells
            .iter()
            .map(|c| ResultRow {
                experiment: self.experiment.clone(),
                n: c.n,
                h: c.h,
                criterion: "na".into(),
                estimate: c.ratio,
                se: c.ratio_se,
                count: c.completed,
            })
            .collect()
    }
}

fn population_summary(cfg: &ExperimentConfig, lags: &[usize], h: usize) -> Result<PopulationSummary> {
    let spec = SubsetSpec::new(lags.to_vec(), h)?;
    let seed = Seed::new(cfg.master_seed).child(TAG_POPULATION).child(h as u64);
    let m = estimate_moments(&cfg.dgp, &spec, cfg.n_long, seed)?;
    Ok(PopulationSummary { h, g_tilde: m.g_tilde_estimate()?, f_h: m.f_h })
}

fn replication_seed(cfg: &ExperimentConfig, n_index: usize) -> Seed {
    Seed::new(cfg.master_seed).child(TAG_REPLICATIONS).child(n_index as u64)
}

/// Compares the finite-sample second-order MSPE with its population limit
/// for each `(n, h)` cell.
pub fn ratio_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<RatioResult> {
    cfg.validate()?;
    let lags = match &cfg.working {
        Working::Lags(l) => l.clone(),
        Working::Candidates(_) => return Err(invalid("ratio experiment needs a single working model")),
    };
    let population =
        cfg.horizons.iter().map(|&h| population_summary(cfg, &lags, h)).collect::<Result<Vec<_>>>()?;
    let specs = cfg.horizons.iter().map(|&h| SubsetSpec::new(lags.clone(), h)).collect::<Result<Vec<_>>>()?;
    let sigma2 = cfg.dgp.error_variance()?.value;
    let gamma = |lag: usize| cfg.dgp.filter.autocovariance(sigma2, lag);
    let betas = specs.iter().map(|s| crate::population::projection(gamma, s)).collect::<Result<Vec<_>>>()?;
    let alpha = cfg.dgp.filter.alpha();
    let alpha_at = |j: usize| alpha.get(j).copied().unwrap_or(0.0);
    let h_max = *cfg.horizons.iter().max().expect("validated");

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let outcomes = run_replications(cfg.replications, replication_seed(cfg, ni), workers, |_, rng| {
            let path = cfg.dgp.simulate(n + h_max, cfg.burn_in, rng)?;
            let x = &path.x;
            let sample = &x[..n];
            specs
                .iter()
                .zip(&betas)
                .map(|(spec, beta)| {
                    let h = spec.horizon();
                    let f = fit(sample, spec)?;
                    let v = spec.regressors(x, n);
                    let pred = dot(&f.beta_hat, &v);
                    let target = x[n + h - 1];
                    let e = target - dot(beta, &v);
                    let e_tilde: f64 = (0..h).map(|j| alpha_at(j) * path.eps[n + h - 1 - j]).sum();
                    let d = target - pred - e;
                    Ok(n as f64 * (d * d + 2.0 * d * (e - e_tilde)))
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        let ok: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        for o in &outcomes {
            if let Err(f) = o {
                failures.push((n, f.clone()));
            }
        }
        for (hi, pop) in population.iter().enumerate() {
            let vals: Vec<f64> = ok.iter().map(|v| v[hi]).collect();
            let (g, se) = mean_se(&vals);
            let ratio = g / pop.g_tilde.value;
            let rel = (se / g).hypot(pop.g_tilde.se / pop.g_tilde.value);
            cells.push(RatioCell {
                n,
                h: pop.h,
                g_tilde_nh: g,
                g_tilde_nh_se: se,
                ratio,
                ratio_se: (ratio * rel).abs(),
                completed: vals.len(),
            });
        }
    }
    Ok(RatioResult { experiment: cfg.name.clone(), population, cells, failures })
}

/// GARCH(1,1) parameterizations `(φ0, φ1, ψ1)` contrasting a barely finite
/// and a comfortably finite fourth moment.
pub const SENSITIVITY_GARCH: [(f64, f64, f64); 2] = [(0.4, 0.5, 0.2), (0.4, 0.2, 0.55)];

/// Runs the ratio experiment of `base` once per GARCH parameterization in
/// [`SENSITIVITY_GARCH`], keeping everything else fixed.
pub fn sensitivity_experiment(base: &ExperimentConfig, workers: usize) -> Result<Vec<RatioResult>> {
    SENSITIVITY_GARCH
        .iter()
        .map(|&(phi0, phi, psi)| {
            let mut cfg = base.clone();
            cfg.dgp.volatility = VolatilityModel::garch(phi0, &[phi], &[psi])?;
            cfg.name = format!("{}-garch({phi0},{phi},{psi})", base.name);
            ratio_experiment(&cfg, workers)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub h: usize,
    pub f_h: Vec<Estimate>,
    pub g_tilde: Vec<Estimate>,
    /// Candidate-list indices.
    pub m1: Vec<usize>,
    pub m2: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCell {
    pub n: usize,
    pub h: usize,
    pub criterion: Criterion,
    /// Replications whose selected candidate lies in `M_2(h)`.
    pub count: usize,
    pub completed: usize,
    pub frequency: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub experiment: String,
    pub candidates: Vec<Vec<usize>>,
    pub oracle: Vec<OracleSummary>,
    pub cells: Vec<SelectionCell>,
    pub failures: Vec<(usize, ReplicationFailure)>,
}

impl SelectionResult {
    pub fn cell(&self, n: usize, h: usize, criterion: Criterion) -> Option<&SelectionCell> {
        self.cells.iter().find(|c| c.n == n && c.h == h && c.criterion == criterion)
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells
            .iter()
            .map(|c| ResultRow {
                experiment: self.experiment.clone(),
                n: c.n,
                h: c.h,
                criterion: c.criterion.name().into(),
                estimate: c.frequency,
                se: c.se,
                count: c.count,
            })
            .collect()
    }
}

/// Population oracle sets of every horizon in `cfg`.
pub fn oracle_summaries(cfg: &ExperimentConfig) -> Result<Vec<OracleSummary>> {
    let sets = cfg.candidate_sets();
    cfg.horizons
        .iter()
        .map(|&h| {
            let pops = sets.iter().map(|lags| population_summary(cfg, lags, h)).collect::<Result<Vec<_>>>()?;
            let inputs: Vec<OracleInput> =
                pops.iter().map(|p| OracleInput { f_h: p.f_h, g_tilde: p.g_tilde }).collect();
            let o = oracle_sets(&inputs)?;
            Ok(OracleSummary {
                h,
                f_h: pops.iter().map(|p| p.f_h).collect(),
                g_tilde: pops.iter().map(|p| p.g_tilde).collect(),
                m1: o.m1,
                m2: o.m2,
            })
        })
        .collect()
}

/// Counts, per `(h, n, criterion)`, how often the criterion's choice lies
/// in the population oracle set `M_2(h)`.
pub fn selection_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<SelectionResult> {
    cfg.validate()?;
    let candidates = cfg.candidate_sets();
    let oracle = oracle_summaries(cfg)?;
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let outcomes = run_replications(cfg.replications, replication_seed(cfg, ni), workers, |_, rng| {
            let x = cfg.dgp.simulate(n, cfg.burn_in, rng)?.x;
            Ok(cfg
                .horizons
                .iter()
                .map(|&h| {
                    score_all(&x, &candidates, h, cfg.cn_exponent)
                        .ok()
                        .map(|out| Criterion::ALL.map(|c| out.argmin(c)))
                })
                .collect::<Vec<_>>())
        })?;
        for o in &outcomes {
            if let Err(f) = o {
                failures.push((n, f.clone()));
            }
        }
        for (hi, orc) in oracle.iter().enumerate() {
            for (ci, criterion) in Criterion::ALL.into_iter().enumerate() {
                let hits: Vec<f64> = outcomes
                    .iter()
                    .filter_map(|o| o.as_ref().ok().and_then(|v| v[hi]))
                    .map(|choice| if orc.m2.contains(&choice[ci]) { 1.0 } else { 0.0 })
                    .collect();
                let completed = hits.len();
                let count = pairwise_sum(&hits) as usize;
                let frequency = count as f64 / completed as f64;
                let se = (frequency * (1.0 - frequency) / completed as f64).sqrt();
                cells.push(SelectionCell { n, h: orc.h, criterion, count, completed, frequency, se });
            }
        }
    }
    Ok(SelectionResult { experiment: cfg.name.clone(), candidates, oracle, cells, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExperimentOutput {
    Ratio(RatioResult),
    Selection(SelectionResult),
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<ResultRow> {
        match self {
            ExperimentOutput::Ratio(r) => r.rows(),
            ExperimentOutput::Selection(s) => s.rows(),
        }
    }
}

/// Dispatches on the working-model shape: one lag set runs the ratio
/// experiment, a candidate list runs the selection experiment.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput> {
    match cfg.working {
        Working::Lags(_) => ratio_experiment(cfg, workers).map(ExperimentOutput::Ratio),
        Working::Candidates(_) => selection_experiment(cfg, workers).map(ExperimentOutput::Selection),
    }
}
