//! `hetforecast` command-line tool.
//!
//! Exit codes: 0 on success, 1 on a runtime or model error, 2 on a
//! configuration error (bad flags, malformed or invalid config, invalid
//! candidate sets).

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hetforecast::autocov_probe::negative_moment_sweep;
use hetforecast::experiments::{run_experiment, ExperimentConfig, Table, DEFAULT_MASTER_SEED};
use hetforecast::selection::{score_all, Criterion, DEFAULT_CN_EXPONENT};
use hetforecast::{RngStream, Seed, SubsetSpec};

use config::{load_experiments, load_run_config, parse_candidates, parse_grid, read_series, CliError, RunConfig};
use output::{fmt_num, write_atomic, write_csv, Manifest};

#[derive(Parser)]
#[command(
    name = "hetforecast",
    version = output::VERSION,
    about = "Simulate heteroscedastic linear processes and study direct multi-step subset-AR prediction",
    after_help = "Exit codes: 0 success, 1 runtime or model error, 2 configuration error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one series and write it as CSV (t, x, eps, sigma2).
    Simulate(SimulateArgs),
    /// Run a preset table or a configured experiment.
    Experiment(ExperimentArgs),
    /// Score candidate subset-AR models with MRIC, AIC and BIC.
    Select(SelectArgs),
    /// Monte Carlo sweep of E[λ_min^{-q}] of sample autocovariance matrices.
    Eigprobe(EigprobeArgs),
}

#[derive(Args)]
struct WorkerArgs {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, env = "HETFORECAST_WORKERS")]
    workers: Option<usize>,
}

impl WorkerArgs {
    fn resolve(&self) -> Result<usize, CliError> {
        match self.workers {
            Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
            Some(w) => Ok(w),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Preset table: t1, t2, t3 or s1.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    table: Option<String>,
    /// Experiment config (one object or an array), or a manifest to rerun.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "M")]
    replications: Option<usize>,
    #[arg(long)]
    n_long: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    workers: WorkerArgs,
    /// Output directory for results.csv, summary.json and manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV series: an `x` column, or the first column.
    #[arg(long, conflicts_with = "simulate")]
    data: Option<PathBuf>,
    /// Simulate the series from the config's DGP.
    #[arg(long)]
    simulate: bool,
    /// Candidate lag sets, e.g. "1;2" or "1,2;3".
    #[arg(long)]
    candidates: Option<String>,
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cn_exponent: Option<f64>,
    /// JSON output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EigprobeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    workers: WorkerArgs,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Experiment(a) => experiment(a),
        Command::Select(a) => select(a),
        Command::Eigprobe(a) => eigprobe(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn require<T>(v: Option<T>, what: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing {what} (flag or config field)")))
}

fn sibling_manifest(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let started = output::now();
    let mut cfg = load_run_config(&a.config)?;
    cfg.n = a.n.or(cfg.n);
    cfg.master_seed = Some(a.seed.or(cfg.master_seed).unwrap_or(DEFAULT_MASTER_SEED));
    cfg.burn_in = a.burn_in.or(cfg.burn_in);
    let dgp = require(cfg.dgp.clone(), "dgp")?;
    let n = require(cfg.n, "n")?;
    let seed = cfg.master_seed.expect("resolved");
    let r = dgp.simulate(n, cfg.burn_in, &mut Seed::new(seed).stream(0))?;
    let rows = (0..n).map(|i| vec![(i + 1).to_string(), fmt_num(r.x[i]), fmt_num(r.eps[i]), fmt_num(r.sigma2[i])]);
    write_csv(&a.out, &["t", "x", "eps", "sigma2"], rows)?;
    Manifest::new("simulate", Some(&a.config), &cfg, seed, started, vec![&a.out]).write(&sibling_manifest(&a.out))
}

fn experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let started = output::now();
    let workers = a.workers.resolve()?;
    let mut configs: Vec<ExperimentConfig> = match (&a.table, &a.config) {
        (Some(t), _) => t.parse::<Table>().map_err(|e| CliError::Config(e.to_string()))?.configs(None, DEFAULT_MASTER_SEED),
        (None, Some(path)) => load_experiments(path)?,
        (None, None) => return Err(CliError::Config("either --table or --config is required".into())),
    };
    for cfg in &mut configs {
        if let Some(m) = a.replications {
            cfg.replications = m;
        }
        if let Some(n) = a.n_long {
            cfg.n_long = n;
        }
        if let Some(s) = a.seed {
            cfg.master_seed = s;
        }
        cfg.validate()?;
    }
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", a.out.display())))?;
    let outputs = configs.iter().map(|cfg| run_experiment(cfg, workers)).collect::<Result<Vec<_>, _>>()?;
    let rows = outputs.iter().flat_map(|o| o.rows()).map(|r| {
        vec![r.experiment, r.n.to_string(), r.h.to_string(), r.criterion, fmt_num(r.estimate), fmt_num(r.se), r.count.to_string()]
    });
    let csv_path = a.out.join("results.csv");
    write_csv(&csv_path, &["experiment", "n", "h", "criterion", "estimate", "se", "count"], rows)?;
    let summary_path = a.out.join("summary.json");
    write_atomic(&summary_path, &output::to_json(&outputs)?)?;
    let seed = configs.first().map_or(DEFAULT_MASTER_SEED, |c| c.master_seed);
    Manifest::new("experiment", a.config.as_deref(), &configs, seed, started, vec![&csv_path, &summary_path])
        .write(&a.out.join("manifest.json"))
}

#[derive(Serialize)]
struct CandidateRecord {
    #[serde(rename = "J")]
    lags: Vec<usize>,
    sigma2_hat: f64,
    g_hat: f64,
    mric: f64,
    aic: f64,
    bic: f64,
}

#[derive(Serialize)]
struct ExcludedRecord {
    #[serde(rename = "J")]
    lags: Vec<usize>,
    reason: String,
}

#[derive(Serialize)]
struct Argmins {
    mric: Vec<usize>,
    aic: Vec<usize>,
    bic: Vec<usize>,
}

#[derive(Serialize)]
struct SelectRecord {
    h: usize,
    n: usize,
    common_start: usize,
    cn_exponent: f64,
    candidates: Vec<CandidateRecord>,
    excluded: Vec<ExcludedRecord>,
    argmin: Argmins,
}

fn select(a: SelectArgs) -> Result<(), CliError> {
    let started = output::now();
    let mut cfg = match &a.config {
        Some(p) => load_run_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &a.candidates {
        cfg.candidates = Some(parse_candidates(c)?);
    }
    cfg.h = a.h.or(cfg.h);
    cfg.cn_exponent = Some(a.cn_exponent.or(cfg.cn_exponent).unwrap_or(DEFAULT_CN_EXPONENT));
    let candidates = require(cfg.candidates.clone(), "candidates")?;
    let h = require(cfg.h, "h")?;
    for lags in &candidates {
        SubsetSpec::new(lags.clone(), h)?;
    }
    let x = match (&a.data, a.simulate) {
        (Some(path), _) => read_series(path)?,
        (None, true) => {
            cfg.n = a.n.or(cfg.n);
            cfg.master_seed = Some(a.seed.or(cfg.master_seed).unwrap_or(DEFAULT_MASTER_SEED));
            let dgp = require(cfg.dgp.clone(), "dgp")?;
            let n = require(cfg.n, "n")?;
            let mut rng: RngStream = Seed::new(cfg.master_seed.expect("resolved")).stream(0);
            dgp.simulate(n, cfg.burn_in, &mut rng)?.x
        }
        (None, false) => return Err(CliError::Config("either --data or --simulate is required".into())),
    };
    let out = score_all(&x, &candidates, h, cfg.cn_exponent.expect("resolved"))?;
    let pick = |c: Criterion| candidates[out.argmin(c)].clone();
    let record = SelectRecord {
        h,
        n: out.n,
        common_start: out.common_start,
        cn_exponent: out.cn_exponent,
        candidates: out
            .scores
            .iter()
            .map(|s| CandidateRecord {
                lags: s.candidate.lags().to_vec(),
                sigma2_hat: s.sigma2_hat,
                g_hat: s.g_hat,
                mric: s.mric,
                aic: s.aic,
                bic: s.bic,
            })
            .collect(),
        excluded: out
            .excluded
            .iter()
            .map(|e| ExcludedRecord { lags: e.candidate.lags().to_vec(), reason: e.reason.clone() })
            .collect(),
        argmin: Argmins { mric: pick(Criterion::Mric), aic: pick(Criterion::Aic), bic: pick(Criterion::Bic) },
    };
    let json = output::to_json(&record)?;
    match &a.out {
        Some(path) => {
            write_atomic(path, &json)?;
            let seed = cfg.master_seed.unwrap_or(DEFAULT_MASTER_SEED);
            Manifest::new("select", a.config.as_deref(), &cfg, seed, started, vec![path]).write(&sibling_manifest(path))
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&json).map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn eigprobe(a: EigprobeArgs) -> Result<(), CliError> {
    let started = output::now();
    let workers = a.workers.resolve()?;
    let mut cfg = load_run_config(&a.config)?;
    cfg.k = a.k.or(cfg.k);
    cfg.q = a.q.or(cfg.q);
    if let Some(g) = &a.n_grid {
        cfg.n_grid = Some(parse_grid(g)?);
    }
    cfg.reps = a.reps.or(cfg.reps);
    cfg.master_seed = Some(a.seed.or(cfg.master_seed).unwrap_or(DEFAULT_MASTER_SEED));
    let dgp = require(cfg.dgp.clone(), "dgp")?;
    let (k, q) = (require(cfg.k, "k")?, require(cfg.q, "q")?);
    let grid = require(cfg.n_grid.clone(), "n_grid")?;
    let reps = require(cfg.reps, "reps")?;
    let seed = cfg.master_seed.expect("resolved");
    let sweep = negative_moment_sweep(&dgp, k, q, &grid, reps, Seed::new(seed), workers)?;
    let rows = sweep.rows.iter().map(|r| {
        vec![r.n.to_string(), fmt_num(r.q), r.k.to_string(), fmt_num(r.mean_negq_moment), fmt_num(r.se), r.nonfinite_count.to_string()]
    });
    write_csv(&a.out, &["n", "q", "k", "mean_negq_moment", "se", "nonfinite_count"], rows)?;
    Manifest::new("eigprobe", Some(&a.config), &cfg, seed, started, vec![&a.out]).write(&sibling_manifest(&a.out))
}
