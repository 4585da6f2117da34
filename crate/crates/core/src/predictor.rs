//! Direct `h`-step least-squares prediction with subset AR models.
//!
//! Time indices in this module are 1-based to match the usual notation:
//! `x_t` is `x[t - 1]`, and the regressor vector of candidate `J` at time
//! `t` is `x_t(J) = (x_{t+1-j}, j ∈ J)`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::linalg::{condition_number, dot, Cholesky, Matrix};

/// Fits whose sample second-moment matrix exceeds this condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSubsetSpec")]
pub struct SubsetSpec {
    lags: Vec<usize>,
    horizon: usize,
}

#[derive(Deserialize)]
struct RawSubsetSpec {
    lags: Vec<usize>,
    horizon: usize,
}

impl TryFrom<RawSubsetSpec> for SubsetSpec {
    type Error = Error;
    fn try_from(raw: RawSubsetSpec) -> Result<Self> {
        SubsetSpec::new(raw.lags, raw.horizon)
    }
}

impl SubsetSpec {
    /// Lags are sorted; duplicates, zero lags and an empty set are rejected.
    pub fn new(lags: impl Into<Vec<usize>>, horizon: usize) -> Result<Self> {
        let mut lags = lags.into();
        if lags.is_empty() {
            return Err(invalid("lag set must be non-empty"));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        lags.sort_unstable();
        if lags[0] == 0 {
            return Err(invalid("lags must be positive"));
        }
        if lags.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate lags in {lags:?}")));
        }
        Ok(SubsetSpec { lags, horizon })
    }

    /// The full-order AR(k) working model `J = {1, ..., k}`.
    pub fn ar(order: usize, horizon: usize) -> Result<Self> {
        Self::new((1..=order).collect::<Vec<_>>(), horizon)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.lags.clone(), horizon)
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `d̃ = max J`.
    pub fn max_lag(&self) -> usize {
        *self.lags.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when `J = {1, ..., k}`.
    pub fn is_full_order(&self) -> bool {
        self.lags.iter().enumerate().all(|(i, l)| *l == i + 1)
    }

    /// `x_t(J)` at 1-based time `t` (requires `t >= d̃`).
    #[inline]
    pub fn regressors_into(&self, x: &[f64], t: usize, out: &mut [f64]) {
        for (o, j) in out.iter_mut().zip(&self.lags) {
            *o = x[t - j];
        }
    }

    pub fn regressors(&self, x: &[f64], t: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.regressors_into(x, t, &mut out);
        out
    }

    pub fn lag_label(&self) -> String {
        let inner: Vec<String> = self.lags.iter().map(usize::to_string).collect();
        format!("{{{}}}", inner.join(","))
    }
}

impl fmt::Display for SubsetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J={} h={}", self.lag_label(), self.horizon)
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: SubsetSpec,
    pub beta_hat: Vec<f64>,
    /// `R̂_{n,h}(J)` over the fitting window.
    pub rhat: Matrix,
    pub n: usize,
    /// First (1-based) time index of the fitting window.
    pub start: usize,
    pub cond: f64,
    chol: Cholesky,
}

impl FitResult {
    /// Number of rows in the fitting window, `n - h - start + 1`.
    pub fn rows(&self) -> usize {
        self.n - self.spec.horizon() - self.start + 1
    }

    /// Cholesky factor of `R̂_{n,h}(J)`.
    pub fn rhat_factor(&self) -> &Cholesky {
        &self.chol
    }
}

/// Least-squares fit over the candidate's own window `t = d̃, ..., n - h`.
pub fn fit(x: &[f64], spec: &SubsetSpec) -> Result<FitResult> {
    fit_from(x, spec, spec.max_lag())
}

/// Least-squares fit over `t = start, ..., n - h`. Criteria comparing
/// several candidates pass the largest lag over all of them as `start`.
pub fn fit_from(x: &[f64], spec: &SubsetSpec, start: usize) -> Result<FitResult> {
    let n = x.len();
    let h = spec.horizon();
    let k = spec.len();
    if start < spec.max_lag() {
        return Err(invalid(format!("window start {start} precedes max lag {}", spec.max_lag())));
    }
    let needed = start + h + k + 5;
    if n < needed {
        return Err(Error::InsufficientData { needed, available: n });
    }
    let rows = n - h - start + 1;
    let mut r = Matrix::zeros(k, k);
    let mut rhs = vec![0.0; k];
    let mut v = vec![0.0; k];
    for t in start..=n - h {
        spec.regressors_into(x, t, &mut v);
        let y = x[t + h - 1];
        for a in 0..k {
            rhs[a] += v[a] * y;
            for b in 0..=a {
                r[(a, b)] += v[a] * v[b];
            }
        }
    }
    let scale = 1.0 / rows as f64;
    for a in 0..k {
        rhs[a] *= scale;
        for b in 0..=a {
            let val = r[(a, b)] * scale;
            r[(a, b)] = val;
            r[(b, a)] = val;
        }
    }
    let cond = condition_number(&r)?;
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned { candidate: spec.to_string(), cond });
    }
    let chol = Cholesky::new(&r).map_err(|_| Error::IllConditioned { candidate: spec.to_string(), cond })?;
    let beta_hat = chol.solve(&rhs);
    Ok(FitResult { spec: spec.clone(), beta_hat, rhat: r, n, start, cond, chol })
}

/// `x̂_{t+h}(J) = β̂ᵀ x_t(J)` for `d̃ <= t <= x.len()`.
pub fn predict(fit: &FitResult, x: &[f64], t: usize) -> Result<f64> {
    let lo = fit.spec.max_lag();
    if t < lo || t > x.len() {
        return Err(Error::OutOfRange { index: t, lo, hi: x.len() });
    }
    Ok(dot(&fit.beta_hat, &fit.spec.regressors(x, t)))
}

/// `ε̂_{t,h,J} = x_{t+h} - β̂ᵀ x_t(J)` for `t = start, ..., n - h`.
pub fn residuals(fit: &FitResult, x: &[f64], start: usize) -> Result<Vec<f64>> {
    let h = fit.spec.horizon();
    let lo = fit.spec.max_lag();
    if start < lo || start + h > x.len() {
        return Err(Error::OutOfRange { index: start, lo, hi: x.len().saturating_sub(h) });
    }
    let mut v = vec![0.0; fit.spec.len()];
    Ok((start..=x.len() - h)
        .map(|t| {
            fit.spec.regressors_into(x, t, &mut v);
            x[t + h - 1] - dot(&fit.beta_hat, &v)
        })
        .collect())
}
