//! Conditionally heteroscedastic errors `ε_t = σ_t z_t`.
//!
//! Three families are supported: the asymmetric power GARCH recursion
//! (with plain GARCH and GJR-GARCH as parameter restrictions), the
//! log-normal stochastic volatility model with AR log-variance, and a
//! constant-variance baseline that yields i.i.d. errors.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::innovations::InnovationDist;
use crate::linalg::{Cholesky, Matrix};
use crate::linear_process::LinearFilter;
use crate::poly;
use crate::rng::{RngStream, Seed};
use crate::stats;

/// Warm-up steps discarded before the first returned error, on top of the
/// downstream filter's truncation length.
pub const DEFAULT_BURN_IN: usize = 5000;

/// Conditional variances above this abort the simulation.
pub const SIGMA2_CEILING: f64 = 1e12;

/// Configuration form of a [`VolatilityModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VolatilitySpec {
    Garch { phi0: f64, phi: Vec<f64>, psi: Vec<f64> },
    Gjr { phi0: f64, phi: Vec<f64>, lambda: Vec<f64>, psi: Vec<f64> },
    Apgarch { phi0: f64, phi: Vec<f64>, lambda: Vec<f64>, psi: Vec<f64>, mu: f64 },
    Sv { a0: f64, a: Vec<f64>, v_var: f64 },
    Constant { sigma2: f64 },
}

/// `σ_t^μ = φ0 + Σ φ_i (|ε_{t-i}| - λ_i ε_{t-i})^μ + Σ ψ_j σ_{t-j}^μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApGarch {
    pub phi0: f64,
    pub phi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub psi: Vec<f64>,
    pub mu: f64,
}

/// `(1 - Σ a_i B^i) log σ_t² = a0 + v_t`, `v_t ~ N(0, v_var)` independent of `z_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticVolatility {
    pub a0: f64,
    pub a: Vec<f64>,
    pub v_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VolatilitySpec", into = "VolatilitySpec")]
pub enum VolatilityModel {
    ApGarch(ApGarch),
    Sv(StochasticVolatility),
    Constant { sigma2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityDiagnostic {
    pub ok: bool,
    pub margin: f64,
    /// Standard error of `margin`; zero when computed in closed form.
    pub se: f64,
}

/// A moment with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }
}

/// Simulated errors after burn-in. `eps[t] == sigma2[t].sqrt() * z[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPath {
    pub eps: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub z: Vec<f64>,
}

impl ErrorPath {
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }
}

fn check_finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

impl VolatilityModel {
    pub fn constant(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(invalid(format!("constant variance must be positive, got {sigma2}")));
        }
        Ok(VolatilityModel::Constant { sigma2 })
    }

    /// GARCH(p', q'): power 2, no leverage.
    pub fn garch(phi0: f64, phi: &[f64], psi: &[f64]) -> Result<Self> {
        Self::ap_garch(phi0, phi, &vec![0.0; phi.len()], psi, 2.0)
    }

    /// GJR-GARCH: power 2 with leverage coefficients.
    pub fn gjr(phi0: f64, phi: &[f64], lambda: &[f64], psi: &[f64]) -> Result<Self> {
        Self::ap_garch(phi0, phi, lambda, psi, 2.0)
    }

    pub fn ap_garch(phi0: f64, phi: &[f64], lambda: &[f64], psi: &[f64], mu: f64) -> Result<Self> {
        check_finite("apGARCH coefficients", &[phi0, mu])?;
        check_finite("phi", phi)?;
        check_finite("lambda", lambda)?;
        check_finite("psi", psi)?;
        if !(phi0 > 0.0) {
            return Err(invalid(format!("phi0 must be positive, got {phi0}")));
        }
        if !(mu > 0.0) {
            return Err(invalid(format!("power mu must be positive, got {mu}")));
        }
        if phi.len() != lambda.len() {
            return Err(invalid("phi and lambda must have the same length"));
        }
        if phi.iter().any(|p| *p < 0.0) || psi.iter().any(|p| *p < 0.0) {
            return Err(invalid("phi and psi must be non-negative"));
        }
        if lambda.iter().any(|l| l.abs() >= 1.0) {
            return Err(invalid("leverage coefficients need |lambda| < 1"));
        }
        Ok(VolatilityModel::ApGarch(ApGarch {
            phi0,
            phi: phi.to_vec(),
            lambda: lambda.to_vec(),
            psi: psi.to_vec(),
            mu,
        }))
    }

    pub fn sv(a0: f64, a: &[f64], v_var: f64) -> Result<Self> {
        check_finite("SV coefficients", &[a0, v_var])?;
        check_finite("SV AR coefficients", a)?;
        if !(v_var > 0.0) {
            return Err(invalid(format!("SV shock variance must be positive, got {v_var}")));
        }
        if a.is_empty() {
            return Err(invalid("SV needs at least one AR coefficient"));
        }
        Ok(VolatilityModel::Sv(StochasticVolatility { a0, a: a.to_vec(), v_var }))
    }

    pub fn spec(&self) -> VolatilitySpec {
        match self {
            VolatilityModel::ApGarch(g) if g.mu == 2.0 && g.lambda.iter().all(|l| *l == 0.0) => {
                VolatilitySpec::Garch { phi0: g.phi0, phi: g.phi.clone(), psi: g.psi.clone() }
            }
            VolatilityModel::ApGarch(g) if g.mu == 2.0 => VolatilitySpec::Gjr {
                phi0: g.phi0,
                phi: g.phi.clone(),
                lambda: g.lambda.clone(),
                psi: g.psi.clone(),
            },
            VolatilityModel::ApGarch(g) => VolatilitySpec::Apgarch {
                phi0: g.phi0,
                phi: g.phi.clone(),
                lambda: g.lambda.clone(),
                psi: g.psi.clone(),
                mu: g.mu,
            },
            VolatilityModel::Sv(s) => VolatilitySpec::Sv { a0: s.a0, a: s.a.clone(), v_var: s.v_var },
            VolatilityModel::Constant { sigma2 } => VolatilitySpec::Constant { sigma2: *sigma2 },
        }
    }

    pub fn check_stationarity(&self, dist: &InnovationDist) -> StationarityDiagnostic {
        let margin = match self {
            VolatilityModel::ApGarch(g) => 1.0 - g.persistence(dist),
            VolatilityModel::Sv(s) => s.min_root_modulus() - 1.0,
            VolatilityModel::Constant { .. } => 1.0,
        };
        StationarityDiagnostic { ok: margin > 0.0, margin, se: 0.0 }
    }

    fn require_stationary(&self, dist: &InnovationDist) -> Result<()> {
        let diag = self.check_stationarity(dist);
        if diag.ok {
            Ok(())
        } else {
            Err(Error::NonStationary { margin: diag.margin })
        }
    }

    /// `E ε_t² = E σ_t²`.
    ///
    /// Closed form for power-2 GARCH, SV and constant variance. For other
    /// powers the second moment of `σ_t` has no closed form and is estimated
    /// from one long simulated path (10^6 draws, fixed internal seed) with a
    /// batch-means standard error.
    pub fn unconditional_variance(&self, dist: &InnovationDist) -> Result<Estimate> {
        self.require_stationary(dist)?;
        match self {
            VolatilityModel::ApGarch(g) if g.mu == 2.0 => Ok(Estimate::exact(g.stationary_power_mean(dist))),
            VolatilityModel::ApGarch(_) => {
                let path =
                    self.simulate_errors(dist, 1_000_000, 10 * DEFAULT_BURN_IN, &mut Seed::new(0x5eed).stream(0))?;
                Ok(Estimate { value: stats::mean(&path.sigma2), se: stats::batch_means_se(&path.sigma2, 100) })
            }
            VolatilityModel::Sv(s) => {
                let (m, var) = s.log_variance_moments()?;
                Ok(Estimate::exact((m + var / 2.0).exp()))
            }
            VolatilityModel::Constant { sigma2 } => Ok(Estimate::exact(*sigma2)),
        }
    }

    /// Simulates `burn_in + n` steps and returns the last `n`.
    pub fn simulate_errors(
        &self,
        dist: &InnovationDist,
        n: usize,
        burn_in: usize,
        rng: &mut RngStream,
    ) -> Result<ErrorPath> {
        self.require_stationary(dist)?;
        let total = burn_in + n;
        let mut eps = Vec::with_capacity(total);
        let mut sigma2 = Vec::with_capacity(total);
        let mut zs = Vec::with_capacity(total);
        match self {
            VolatilityModel::Constant { sigma2: s2 } => {
                let s = s2.sqrt();
                for _ in 0..total {
                    let z = dist.sample(rng);
                    zs.push(z);
                    sigma2.push(*s2);
                    eps.push(s * z);
                }
            }
            VolatilityModel::ApGarch(g) => g.run(dist, total, rng, &mut eps, &mut sigma2, &mut zs)?,
            VolatilityModel::Sv(s) => s.run(dist, total, rng, &mut eps, &mut sigma2, &mut zs)?,
        }
        Ok(ErrorPath {
            eps: eps.split_off(burn_in),
            sigma2: sigma2.split_off(burn_in),
            z: zs.split_off(burn_in),
        })
    }
}

impl ApGarch {
    fn kappas(&self, dist: &InnovationDist) -> Vec<f64> {
        self.lambda.iter().map(|l| dist.power_asymmetry_moment(*l, self.mu)).collect()
    }

    /// `Σ φ_i E(|z| - λ_i z)^μ + Σ ψ_j`.
    pub fn persistence(&self, dist: &InnovationDist) -> f64 {
        let arch: f64 = self.phi.iter().zip(self.kappas(dist)).map(|(p, k)| p * k).sum();
        arch + self.psi.iter().sum::<f64>()
    }

    /// Stationary mean of `σ_t^μ`.
    pub fn stationary_power_mean(&self, dist: &InnovationDist) -> f64 {
        self.phi0 / (1.0 - self.persistence(dist))
    }

    fn run(
        &self,
        dist: &InnovationDist,
        total: usize,
        rng: &mut RngStream,
        eps: &mut Vec<f64>,
        sigma2: &mut Vec<f64>,
        zs: &mut Vec<f64>,
    ) -> Result<()> {
        let kappa = self.kappas(dist);
        let mean_power = self.stationary_power_mean(dist);
        let square = self.mu == 2.0;
        // σ^μ history; pre-sample values sit at the stationary mean, and
        // pre-sample shock terms at their expectation κ_i E σ^μ.
        let mut power: Vec<f64> = Vec::with_capacity(total);
        for t in 0..total {
            let mut s = self.phi0;
            for (i, (&phi, &lambda)) in self.phi.iter().zip(&self.lambda).enumerate() {
                let term = if t > i {
                    let e = eps[t - i - 1];
                    let d = e.abs() - lambda * e;
                    if square {
                        d * d
                    } else {
                        d.powf(self.mu)
                    }
                } else {
                    kappa[i] * mean_power
                };
                s += phi * term;
            }
            for (j, &psi) in self.psi.iter().enumerate() {
                let prev = if t > j { power[t - j - 1] } else { mean_power };
                s += psi * prev;
            }
            let s2 = if square { s } else { s.powf(2.0 / self.mu) };
            if !(s2 <= SIGMA2_CEILING) {
                return Err(Error::Overflow { step: t, value: s2 });
            }
            let z = dist.sample(rng);
            power.push(s);
            sigma2.push(s2);
            zs.push(z);
            eps.push(s2.sqrt() * z);
        }
        Ok(())
    }
}

impl StochasticVolatility {
    pub fn min_root_modulus(&self) -> f64 {
        let neg: Vec<f64> = self.a.iter().map(|a| -a).collect();
        poly::min_root_modulus(&neg)
    }

    fn log_filter(&self) -> Result<LinearFilter> {
        LinearFilter::from_arma(&self.a, &[], crate::linear_process::DEFAULT_TRUNC_TOL)
    }

    /// Stationary mean and variance of `log σ_t²`.
    pub fn log_variance_moments(&self) -> Result<(f64, f64)> {
        let mean = self.a0 / (1.0 - self.a.iter().sum::<f64>());
        let var = self.log_filter()?.autocovariance(self.v_var, 0);
        Ok((mean, var))
    }

    fn run(
        &self,
        dist: &InnovationDist,
        total: usize,
        rng: &mut RngStream,
        eps: &mut Vec<f64>,
        sigma2: &mut Vec<f64>,
        zs: &mut Vec<f64>,
    ) -> Result<()> {
        let p = self.a.len();
        let filter = self.log_filter()?;
        let mean = self.a0 / (1.0 - self.a.iter().sum::<f64>());
        // Exact draw of (l_{-1}, ..., l_{-p}) from the stationary Gaussian law.
        let cov = Matrix::from_fn(p, p, |i, j| filter.autocovariance(self.v_var, i.abs_diff(j)));
        let chol = Cholesky::new(&cov)?;
        let white: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let l = chol.factor();
        // init[0] is l_{-1}, init[p-1] is l_{-p}.
        let init: Vec<f64> = (0..p).map(|i| mean + (0..=i).map(|k| l[(i, k)] * white[k]).sum::<f64>()).collect();
        let v_sd = self.v_var.sqrt();
        let mut logs: Vec<f64> = Vec::with_capacity(total);
        for t in 0..total {
            let mut lt = self.a0 + v_sd * rng.sample::<f64, _>(StandardNormal);
            for (i, a) in self.a.iter().enumerate() {
                let lag = if t > i { logs[t - i - 1] } else { init[i - t] };
                lt += a * lag;
            }
            let s2 = lt.exp();
            if !(s2 <= SIGMA2_CEILING) {
                return Err(Error::Overflow { step: t, value: s2 });
            }
            let z = dist.sample(rng);
            logs.push(lt);
            sigma2.push(s2);
            zs.push(z);
            eps.push(s2.sqrt() * z);
        }
        Ok(())
    }
}

impl TryFrom<VolatilitySpec> for VolatilityModel {
    type Error = Error;

    fn try_from(spec: VolatilitySpec) -> Result<Self> {
        match spec {
            VolatilitySpec::Garch { phi0, phi, psi } => Self::garch(phi0, &phi, &psi),
            VolatilitySpec::Gjr { phi0, phi, lambda, psi } => Self::gjr(phi0, &phi, &lambda, &psi),
            VolatilitySpec::Apgarch { phi0, phi, lambda, psi, mu } => Self::ap_garch(phi0, &phi, &lambda, &psi, mu),
            VolatilitySpec::Sv { a0, a, v_var } => Self::sv(a0, &a, v_var),
            VolatilitySpec::Constant { sigma2 } => Self::constant(sigma2),
        }
    }
}

impl From<VolatilityModel> for VolatilitySpec {
    fn from(m: VolatilityModel) -> Self {
        m.spec()
    }
}
