//! Model-selection criteria for direct `h`-step subset-AR prediction (MRIC,
//! AIC, BIC) and the population oracle sets they are judged against.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::predictor::{fit_from, residuals, FitResult, SubsetSpec};
use crate::volatility::Estimate;

pub const DEFAULT_CN_EXPONENT: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Mric,
    Aic,
    Bic,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Mric, Criterion::Aic, Criterion::Bic];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Mric => "mric",
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
        }
    }
}

/// `σ̂²_h(J) = (n - h - d̄ + 1)^{-1} Σ_{t=d̄}^{n-h} ε̂²_{t,h,J}`.
pub fn sigma2_hat(x: &[f64], fit: &FitResult, common_start: usize) -> Result<f64> {
    let res = residuals(fit, x, common_start)?;
    if res.is_empty() {
        return Err(Error::InsufficientData { needed: common_start + fit.spec.horizon(), available: x.len() });
    }
    Ok(res.iter().map(|e| e * e).sum::<f64>() / res.len() as f64)
}

/// `ĝ_h(J) = tr{R̂^{-1} L̂_0} + 2 Σ_{s=1}^{h-1} tr{R̂^{-1} L̂_s}` with
/// `L̂_s = (n - h - d̄ - s + 1)^{-1} Σ_{t=d̄}^{n-h-s} x_t x_{t+s}ᵀ ε̂_t ε̂_{t+s}`.
pub fn g_hat(x: &[f64], fit: &FitResult, common_start: usize) -> Result<f64> {
    let spec = &fit.spec;
    let h = spec.horizon();
    let n = x.len();
    let needed = common_start + 2 * h - 1;
    if n < needed {
        return Err(Error::InsufficientData { needed, available: n });
    }
    let res = residuals(fit, x, common_start)?;
    let chol = fit.rhat_factor();
    // tr{R̂^{-1} x_t x_{t+s}ᵀ} = x_{t+s}ᵀ R̂^{-1} x_t.
    let regs: Vec<Vec<f64>> = (common_start..=n - h).map(|t| spec.regressors(x, t)).collect();
    let solved: Vec<Vec<f64>> = regs.iter().map(|v| chol.solve(v)).collect();
    let mut total = 0.0;
    for s in 0..h {
        let rows = res.len() - s;
        let sum: f64 = (0..rows)
            .map(|i| res[i] * res[i + s] * solved[i].iter().zip(&regs[i + s]).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        let w = if s == 0 { 1.0 } else { 2.0 };
        total += w * sum / rows as f64;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    /// Position in the candidate list.
    pub index: usize,
    pub candidate: SubsetSpec,
    pub sigma2_hat: f64,
    pub g_hat: f64,
    pub mric: f64,
    pub aic: f64,
    pub bic: f64,
}

impl CandidateScore {
    pub fn value(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Mric => self.mric,
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub index: usize,
    pub candidate: SubsetSpec,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub horizon: usize,
    pub n: usize,
    pub common_start: usize,
    pub cn_exponent: f64,
    pub scores: Vec<CandidateScore>,
    pub excluded: Vec<Exclusion>,
}

impl SelectionOutcome {
    /// Candidate-list index minimizing `criterion`; ties go to the smallest index.
    pub fn argmin(&self, criterion: Criterion) -> usize {
        let mut best = &self.scores[0];
        for s in &self.scores[1..] {
            if s.value(criterion) < best.value(criterion) {
                best = s;
            }
        }
        best.index
    }
}

pub fn check_cn_exponent(exponent: f64) -> Result<()> {
    if exponent > 0.5 && exponent < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("C_n exponent must lie in (0.5, 1), got {exponent}")))
    }
}

/// Scores every candidate lag set at horizon `h` on the common window
/// `t = d̄, ..., n - h`, where `d̄` is the largest lag over all candidates.
/// Candidates whose fit fails are excluded with the reason recorded.
pub fn score_all(x: &[f64], candidates: &[Vec<usize>], h: usize, cn_exponent: f64) -> Result<SelectionOutcome> {
    check_cn_exponent(cn_exponent)?;
    if candidates.is_empty() {
        return Err(invalid("candidate list is empty"));
    }
    let specs = candidates.iter().map(|lags| SubsetSpec::new(lags.clone(), h)).collect::<Result<Vec<_>>>()?;
    let common_start = specs.iter().map(SubsetSpec::max_lag).max().expect("non-empty");
    let n = x.len();
    let nf = n as f64;
    let penalty = nf.powf(cn_exponent) / nf;
    let mut scores = Vec::new();
    let mut excluded = Vec::new();
    for (index, spec) in specs.into_iter().enumerate() {
        let scored = fit_from(x, &spec, common_start).and_then(|fit| {
            let s2 = sigma2_hat(x, &fit, common_start)?;
            let g = g_hat(x, &fit, common_start)?;
            Ok((s2, g))
        });
        match scored {
            Ok((s2, g)) => {
                let size = spec.len() as f64;
                scores.push(CandidateScore {
                    index,
                    candidate: spec,
                    sigma2_hat: s2,
                    g_hat: g,
                    mric: s2 + penalty * g,
                    aic: s2.ln() + 2.0 * size / nf,
                    bic: s2.ln() + size * nf.ln() / nf,
                });
            }
            Err(e) => excluded.push(Exclusion { index, candidate: spec, reason: e.to_string() }),
        }
    }
    if scores.is_empty() {
        let reasons: Vec<String> = excluded.iter().map(|e| format!("{}: {}", e.candidate, e.reason)).collect();
        return Err(Error::AllCandidatesFailed(reasons.join("; ")));
    }
    Ok(SelectionOutcome { horizon: h, n, common_start, cn_exponent, scores, excluded })
}

/// Population `f_h` and `g̃_h` of one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleInput {
    pub f_h: Estimate,
    pub g_tilde: Estimate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSets {
    /// Indices of candidates with the smallest `f_h`.
    pub m1: Vec<usize>,
    /// Indices within `m1` with the smallest `g̃_h`.
    pub m2: Vec<usize>,
}

/// Relative floor on the equality tolerance, for exactly computed values.
const TIE_FLOOR: f64 = 1e-10;

fn tie_tolerance(a: Estimate, b: Estimate, scale: f64) -> f64 {
    (4.0 * a.se.hypot(b.se)).max(TIE_FLOOR * scale)
}

/// Indices whose value is within `4·(combined SE)` of the minimum. When an
/// excluded value is itself tied with an included one, the tie relation is
/// not transitive and the set is reported as ambiguous.
fn near_minimum(values: &[(usize, Estimate)], what: &str) -> Result<Vec<usize>> {
    let (_, best) = values
        .iter()
        .copied()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .ok_or_else(|| invalid("no candidates"))?;
    let scale = values.iter().map(|(_, e)| e.value.abs()).fold(0.0, f64::max);
    let (inside, outside): (Vec<_>, Vec<_>) =
        values.iter().copied().partition(|(_, e)| e.value - best.value <= tie_tolerance(*e, best, scale));
    for (i, e) in &outside {
        for (j, f) in &inside {
            if (e.value - f.value).abs() <= tie_tolerance(*e, *f, scale) {
                return Err(Error::AmbiguousOracle(format!(
                    "{what} of candidate {i} is tied with candidate {j} but not with the minimum; increase n_long"
                )));
            }
        }
    }
    Ok(inside.into_iter().map(|(i, _)| i).collect())
}

pub fn oracle_sets(pop: &[OracleInput]) -> Result<OracleSets> {
    let f: Vec<(usize, Estimate)> = pop.iter().map(|p| p.f_h).enumerate().collect();
    let m1 = near_minimum(&f, "f_h")?;
    let g: Vec<(usize, Estimate)> = m1.iter().map(|&i| (i, pop[i].g_tilde)).collect();
    let m2 = near_minimum(&g, "g_tilde")?;
    Ok(OracleSets { m1, m2 })
}
