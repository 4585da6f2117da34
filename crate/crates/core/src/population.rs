//! Population quantities of a subset-AR working model: the projection
//! `β_h(J)`, the model-error variance `f_h(J)`, and the fourth-order moment
//! matrices behind the second-order MSPE `g̃_h(J)`.
//!
//! Second-order moments come from the autocovariance function. The
//! fourth-order matrices are ergodic averages over one long simulated path,
//! split into equal batches whose means give standard errors.

use serde::{Deserialize, Serialize};

use crate::dgp::Dgp;
use crate::error::{invalid, Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::predictor::SubsetSpec;
use crate::rng::Seed;
use crate::stats::{mean_se, pairwise_sum};
use crate::volatility::Estimate;

pub const DEFAULT_N_LONG: usize = 2_000_000;
pub const MIN_N_LONG: usize = 100_000;
pub const DEFAULT_BATCHES: usize = 100;

/// `R(J)` with entries `γ(|j_a - j_b|)`.
pub fn covariance_matrix(gamma: impl Fn(usize) -> f64, spec: &SubsetSpec) -> Matrix {
    let lags = spec.lags();
    Matrix::from_fn(lags.len(), lags.len(), |a, b| gamma(lags[a].abs_diff(lags[b])))
}

/// `(γ(h + j - 1), j ∈ J)`, the covariances of `x_{t+h}` with `x_t(J)`.
pub fn cross_covariance(gamma: impl Fn(usize) -> f64, spec: &SubsetSpec) -> Vec<f64> {
    spec.lags().iter().map(|j| gamma(spec.horizon() + j - 1)).collect()
}

/// `β_h(J) = R(J)^{-1} (γ(h + j - 1), j ∈ J)`.
pub fn projection(gamma: impl Fn(usize) -> f64, spec: &SubsetSpec) -> Result<Vec<f64>> {
    let r = covariance_matrix(&gamma, spec);
    let chol = Cholesky::new(&r).map_err(|_| Error::IllConditioned { candidate: spec.to_string(), cond: f64::INFINITY })?;
    Ok(chol.solve(&cross_covariance(&gamma, spec)))
}

/// `f_h(J) = γ(0) - β_h(J)ᵀ (γ(h + j - 1), j ∈ J)`.
pub fn f_h(gamma: impl Fn(usize) -> f64, spec: &SubsetSpec) -> Result<f64> {
    let beta = projection(&gamma, spec)?;
    let r = cross_covariance(&gamma, spec);
    Ok(gamma(0) - beta.iter().zip(&r).map(|(b, c)| b * c).sum::<f64>())
}

/// Batch means of every averaged quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMoments {
    pub l: Vec<Matrix>,
    pub lstar: Vec<Matrix>,
    pub ltilde: Vec<Matrix>,
    pub lxx: Vec<Matrix>,
    pub eps_tilde_cov: Vec<f64>,
    pub e2: f64,
}

/// Entrywise standard errors of the averaged matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSe {
    pub r: Matrix,
    pub l: Vec<Matrix>,
    pub lstar: Vec<Matrix>,
    pub ltilde: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationMoments {
    pub spec: SubsetSpec,
    /// `E{x_t(J) x_t(J)ᵀ}` as a time average on the simulated path.
    pub r: Matrix,
    /// `L_{s,h}(J)`, `s = 0, ..., h-1`.
    pub l: Vec<Matrix>,
    /// `L*_{s,h}(J)`: regressor products against the centred `ε̃_t ε̃_{t+s}`.
    pub lstar: Vec<Matrix>,
    /// `L̃_{s,h}(J)`: regressor products against `ε_t ε_{t+s} - ε̃_t ε̃_{t+s}`.
    pub ltilde: Vec<Matrix>,
    /// `E{x_t(J) x_{t+s}(J)ᵀ}` time averages; `lxx[0] == r`.
    pub lxx: Vec<Matrix>,
    /// Analytic `E(ε̃_t ε̃_{t+s}) = σ² Σ_j α_j α_{j+s}` over `j, j+s <= h-1`.
    pub eps_tilde_cov: Vec<f64>,
    /// Time-average counterpart of `eps_tilde_cov`.
    pub eps_tilde_cov_mc: Vec<Estimate>,
    pub f_h: Estimate,
    /// Time average of `ε²_{t,h,J}`; its SE times `sqrt(n_long)` is the long-run SD.
    pub f_h_mc: Estimate,
    pub beta: Vec<f64>,
    pub error_variance: Estimate,
    pub mc_se: MomentSe,
    pub n_long: usize,
    pub batches: Vec<BatchMoments>,
}

/// The three parts of `g̃_h(k)` with batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub a: Estimate,
    pub b: Estimate,
    pub c: Estimate,
}

fn weights(h: usize) -> impl Iterator<Item = f64> {
    (0..h).map(|s| if s == 0 { 1.0 } else { 2.0 })
}

fn add_outer(acc: &mut Matrix, u: &[f64], v: &[f64], w: f64) {
    let k = u.len();
    let data = acc.as_mut_slice();
    for a in 0..k {
        let ua = u[a] * w;
        for b in 0..k {
            data[a * k + b] += ua * v[b];
        }
    }
}

fn mean_matrix(ms: &[&Matrix]) -> Matrix {
    let (r, c) = (ms[0].rows(), ms[0].cols());
    let mut vals = vec![0.0; ms.len()];
    Matrix::from_fn(r, c, |i, j| {
        for (v, m) in vals.iter_mut().zip(ms) {
            *v = m[(i, j)];
        }
        pairwise_sum(&vals) / ms.len() as f64
    })
}

fn se_matrix(ms: &[&Matrix]) -> Matrix {
    let (r, c) = (ms[0].rows(), ms[0].cols());
    let mut vals = vec![0.0; ms.len()];
    Matrix::from_fn(r, c, |i, j| {
        for (v, m) in vals.iter_mut().zip(ms) {
            *v = m[(i, j)];
        }
        mean_se(&vals).1
    })
}

/// Estimates the population moments of `spec` under `dgp` from a path of
/// `n_long` averaging points (rounded down to a multiple of the batch count).
pub fn estimate_moments(dgp: &Dgp, spec: &SubsetSpec, n_long: usize, seed: Seed) -> Result<PopulationMoments> {
    estimate_moments_with(dgp, spec, n_long, DEFAULT_BATCHES, seed)
}

pub fn estimate_moments_with(
    dgp: &Dgp,
    spec: &SubsetSpec,
    n_long: usize,
    batches: usize,
    seed: Seed,
) -> Result<PopulationMoments> {
    if n_long < MIN_N_LONG {
        return Err(invalid(format!("n_long must be at least {MIN_N_LONG}, got {n_long}")));
    }
    if batches < 2 || batches > n_long {
        return Err(invalid(format!("batch count {batches} out of range")));
    }
    let diag = dgp.volatility.check_stationarity(&dgp.innovations);
    if !diag.ok {
        return Err(Error::NonStationary { margin: diag.margin });
    }
    let sigma2 = dgp.error_variance()?;
    let gamma = |lag: usize| dgp.filter.autocovariance(sigma2.value, lag);
    let beta = projection(gamma, spec)?;
    let f = f_h(gamma, spec)?;
    let h = spec.horizon();
    let k = spec.len();
    let d = spec.max_lag();
    let alpha = dgp.filter.alpha();
    let alpha_at = |j: usize| alpha.get(j).copied().unwrap_or(0.0);
    let eps_tilde_cov: Vec<f64> =
        (0..h).map(|s| sigma2.value * (0..h - s).map(|j| alpha_at(j) * alpha_at(j + s)).sum::<f64>()).collect();

    let batch_len = n_long / batches;
    let n_used = batch_len * batches;
    // Averaging times t = d, ..., d + n_used - 1 (1-based) need x up to t + 2h - 2.
    let n_path = d + n_used + 2 * h;
    let path = dgp.simulate(n_path, None, &mut seed.stream(0))?;
    let x = &path.x;
    let eps = &path.eps;

    // e[t] = x_{t+h} - βᵀ x_t(J) and ẽ[t] = Σ_{j<h} α_j ε_{t+h-j}, indexed by 1-based t.
    let last = d + n_used + h - 2;
    let mut e = vec![0.0; last + 1];
    let mut et = vec![0.0; last + 1];
    let mut v = vec![0.0; k];
    for t in d..=last {
        spec.regressors_into(x, t, &mut v);
        e[t] = x[t + h - 1] - v.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
        et[t] = (0..h).map(|j| alpha_at(j) * eps[t + h - 1 - j]).sum();
    }

    let zero = Matrix::zeros(k, k);
    let mut batch_out = Vec::with_capacity(batches);
    let mut vs = vec![vec![0.0; k]; h];
    for b in 0..batches {
        let mut l = vec![zero.clone(); h];
        let mut lstar = vec![zero.clone(); h];
        let mut ltilde = vec![zero.clone(); h];
        let mut lxx = vec![zero.clone(); h];
        let mut ecov = vec![0.0; h];
        let mut e2 = 0.0;
        let start = d + b * batch_len;
        for t in start..start + batch_len {
            for (s, vs_s) in vs.iter_mut().enumerate() {
                spec.regressors_into(x, t + s, vs_s);
            }
            e2 += e[t] * e[t];
            for s in 0..h {
                let ee = e[t] * e[t + s];
                let tt = et[t] * et[t + s];
                add_outer(&mut l[s], &vs[0], &vs[s], ee);
                add_outer(&mut lstar[s], &vs[0], &vs[s], tt - eps_tilde_cov[s]);
                add_outer(&mut ltilde[s], &vs[0], &vs[s], ee - tt);
                add_outer(&mut lxx[s], &vs[0], &vs[s], 1.0);
                ecov[s] += tt;
            }
        }
        let w = 1.0 / batch_len as f64;
        let sc = |ms: Vec<Matrix>| ms.into_iter().map(|m| m.scale(w)).collect::<Vec<_>>();
        batch_out.push(BatchMoments {
            l: sc(l),
            lstar: sc(lstar),
            ltilde: sc(ltilde),
            lxx: sc(lxx),
            eps_tilde_cov: ecov.into_iter().map(|c| c * w).collect(),
            e2: e2 * w,
        });
    }

    let collect = |f: &dyn Fn(&BatchMoments) -> &Matrix| -> (Matrix, Matrix) {
        let ms: Vec<&Matrix> = batch_out.iter().map(f).collect();
        (mean_matrix(&ms), se_matrix(&ms))
    };
    let mut l = Vec::new();
    let mut lstar = Vec::new();
    let mut ltilde = Vec::new();
    let mut lxx = Vec::new();
    let mut se_l = Vec::new();
    let mut se_lstar = Vec::new();
    let mut se_ltilde = Vec::new();
    let mut se_r = zero.clone();
    let mut eps_tilde_cov_mc = Vec::new();
    for s in 0..h {
        let (m, se) = collect(&|bm: &BatchMoments| &bm.l[s]);
        l.push(m);
        se_l.push(se);
        let (m, se) = collect(&|bm: &BatchMoments| &bm.lstar[s]);
        lstar.push(m);
        se_lstar.push(se);
        let (m, se) = collect(&|bm: &BatchMoments| &bm.ltilde[s]);
        ltilde.push(m);
        se_ltilde.push(se);
        let (m, se) = collect(&|bm: &BatchMoments| &bm.lxx[s]);
        lxx.push(m);
        if s == 0 {
            se_r = se;
        }
        let cs: Vec<f64> = batch_out.iter().map(|bm| bm.eps_tilde_cov[s]).collect();
        let (value, se) = mean_se(&cs);
        eps_tilde_cov_mc.push(Estimate { value, se });
    }
    let e2s: Vec<f64> = batch_out.iter().map(|bm| bm.e2).collect();
    let (e2_mean, e2_se) = mean_se(&e2s);
    let f_se = if sigma2.value > 0.0 { f * sigma2.se / sigma2.value } else { 0.0 };

    Ok(PopulationMoments {
        spec: spec.clone(),
        r: lxx[0].clone(),
        l,
        lstar,
        ltilde,
        lxx,
        eps_tilde_cov,
        eps_tilde_cov_mc,
        f_h: Estimate { value: f, se: f_se },
        f_h_mc: Estimate { value: e2_mean, se: e2_se },
        beta,
        error_variance: sigma2,
        mc_se: MomentSe { r: se_r, l: se_l, lstar: se_lstar, ltilde: se_ltilde },
        n_long: n_used,
        batches: batch_out,
    })
}

impl PopulationMoments {
    fn r_factor(&self) -> Result<Cholesky> {
        Cholesky::new(&self.r).map_err(|_| Error::IllConditioned { candidate: self.spec.to_string(), cond: f64::INFINITY })
    }

    /// `Σ_s w_s tr{R^{-1} M_s}` with its delta-method batch-means SE.
    fn weighted_trace(&self, chol: &Cholesky, pick: impl Fn(&BatchMoments, usize) -> Matrix, full: &[Matrix]) -> Estimate {
        let h = self.spec.horizon();
        let rinv = chol.inverse();
        let value = pairwise_sum(&weights(h).zip(full).map(|(w, m)| w * chol.trace_solve(m)).collect::<Vec<_>>());
        // Linearization in the batch means of R and M_s:
        // d tr(R⁻¹M) = tr(R⁻¹ dM) - tr(R⁻¹ dR R⁻¹ M).
        let rinv_m: Vec<Matrix> = full.iter().map(|m| m.matmul(&rinv)).collect();
        let lin: Vec<f64> = self
            .batches
            .iter()
            .map(|bm| {
                let rb = &bm.lxx[0];
                weights(h)
                    .enumerate()
                    .map(|(s, w)| {
                        let ms = pick(bm, s);
                        w * (chol.trace_solve(&ms) - chol.trace_solve(&rb.matmul(&rinv_m[s])))
                    })
                    .sum()
            })
            .collect();
        Estimate { value, se: mean_se(&lin).1 }
    }

    /// `g̃_h(J) = tr{R^{-1} L_0} + 2 Σ_{s=1}^{h-1} tr{R^{-1} L_s}`.
    pub fn g_tilde(&self) -> Result<f64> {
        Ok(self.g_tilde_estimate()?.value)
    }

    pub fn g_tilde_estimate(&self) -> Result<Estimate> {
        let chol = self.r_factor()?;
        Ok(self.weighted_trace(&chol, |bm, s| bm.l[s].clone(), &self.l))
    }

    /// Splits `g̃_h(k)` into the conditional-homoscedastic part `A`, the
    /// heteroscedasticity part `B` and the misspecification part `C`.
    /// `A + B + C` equals [`Self::g_tilde`] up to rounding.
    pub fn decompose(&self) -> Result<Decomposition> {
        if !self.spec.is_full_order() {
            return Err(Error::Unsupported(format!(
                "decomposition needs a full-order AR(k) working model, got {}",
                self.spec
            )));
        }
        let chol = self.r_factor()?;
        let c_s = &self.eps_tilde_cov;
        let a_full: Vec<Matrix> = self.lxx.iter().zip(c_s).map(|(m, c)| m.scale(*c)).collect();
        let a = self.weighted_trace(&chol, |bm, s| bm.lxx[s].scale(c_s[s]), &a_full);
        let b = self.weighted_trace(&chol, |bm, s| bm.lstar[s].clone(), &self.lstar);
        let c = self.weighted_trace(&chol, |bm, s| bm.ltilde[s].clone(), &self.ltilde);
        Ok(Decomposition { a, b, c })
    }
}
