//! Standardized innovation laws for `z_t` (mean 0, variance 1).

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_lr, ln_gamma};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Error, Result};

/// Configuration form: `{"kind": "normal"}`, `{"kind": "t", "nu": 5}`,
/// `{"kind": "symgamma", "xi": 0.5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InnovationSpec {
    Normal,
    T { nu: f64 },
    Symgamma { xi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Normal,
    T { nu: f64, scale: f64, sampler: StudentT<f64> },
    SymGamma { xi: f64, scale: f64, sampler: Gamma<f64> },
}

/// A validated innovation law. Parameters are checked once, at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InnovationSpec", into = "InnovationSpec")]
pub struct InnovationDist {
    law: Law,
}

impl Default for InnovationDist {
    fn default() -> Self {
        Self::std_normal()
    }
}

impl InnovationDist {
    pub fn std_normal() -> Self {
        InnovationDist { law: Law::Normal }
    }

    /// Student t with `nu > 2` degrees of freedom divided by `sqrt(nu/(nu-2))`.
    pub fn normalized_t(nu: f64) -> Result<Self> {
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(invalid(format!("t innovations need nu > 2, got {nu}")));
        }
        let sampler = StudentT::new(nu).map_err(|e| invalid(e.to_string()))?;
        Ok(InnovationDist { law: Law::T { nu, scale: (nu / (nu - 2.0)).sqrt(), sampler } })
    }

    /// Symmetric Gamma(xi, 1) magnitude with a random sign, rescaled by
    /// `sqrt(xi (xi + 1))` so the sampled law has unit variance.
    pub fn sym_gamma(xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(invalid(format!("symmetric Gamma innovations need 0 < xi < 1, got {xi}")));
        }
        let sampler = Gamma::new(xi, 1.0).map_err(|e| invalid(e.to_string()))?;
        Ok(InnovationDist { law: Law::SymGamma { xi, scale: (xi * (xi + 1.0)).sqrt(), sampler } })
    }

    pub fn spec(&self) -> InnovationSpec {
        match self.law {
            Law::Normal => InnovationSpec::Normal,
            Law::T { nu, .. } => InnovationSpec::T { nu },
            Law::SymGamma { xi, .. } => InnovationSpec::Symgamma { xi },
        }
    }

    /// The divisor applied to the raw draw: `sqrt(nu/(nu-2))` for t,
    /// `sqrt(xi(xi+1))` for symmetric Gamma, 1 for the normal.
    pub fn standardizing_scale(&self) -> f64 {
        match self.law {
            Law::Normal => 1.0,
            Law::T { scale, .. } | Law::SymGamma { scale, .. } => scale,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            Law::Normal => rng.sample(StandardNormal),
            Law::T { scale, sampler, .. } => sampler.sample(rng) / scale,
            Law::SymGamma { scale, sampler, .. } => {
                let mag = sampler.sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * mag / scale
            }
        }
    }

    /// Density `g(x)`.
    ///
    /// Normal and t report the density of the standardized law. Symmetric
    /// Gamma reports `|x|^(xi-1) e^(-|x|) / (2 Γ(xi))`, i.e. the law *before*
    /// the unit-variance rescaling done by [`sample`](Self::sample); the
    /// sampled variable has density `s g(s x)` with `s` the standardizing scale.
    pub fn density(&self, x: f64) -> Result<f64> {
        match self.law {
            Law::Normal => Ok((-0.5 * x * x).exp() / (2.0 * PI).sqrt()),
            Law::T { nu, scale, .. } => Ok(scale * t_density(nu, scale * x)),
            Law::SymGamma { xi, .. } => {
                if x == 0.0 {
                    return Err(Error::InvalidParameter(
                        "symmetric Gamma density is unbounded at 0".into(),
                    ));
                }
                let a = x.abs();
                Ok(a.powf(xi - 1.0) * (-a).exp() / (2.0 * gamma(xi)))
            }
        }
    }

    /// CDF of the standardized (sampled) law.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.law {
            Law::Normal => 0.5 * erfc(-x / SQRT_2),
            Law::T { nu, scale, .. } => StudentsT::new(0.0, 1.0, nu)
                .expect("nu validated at construction")
                .cdf(scale * x),
            Law::SymGamma { xi, scale, .. } => {
                if x == 0.0 {
                    0.5
                } else {
                    0.5 + 0.5 * x.signum() * gamma_lr(xi, x.abs() * scale)
                }
            }
        }
    }

    /// `E|z|^p` of the standardized law (infinite when the moment does not exist).
    pub fn abs_moment(&self, p: f64) -> f64 {
        match self.law {
            Law::Normal => (p / 2.0 * 2f64.ln() + ln_gamma((p + 1.0) / 2.0)).exp() / PI.sqrt(),
            Law::T { nu, scale, .. } => {
                if p >= nu {
                    return f64::INFINITY;
                }
                let log = 0.5 * p * nu.ln() + ln_gamma((p + 1.0) / 2.0) + ln_gamma((nu - p) / 2.0)
                    - 0.5 * PI.ln()
                    - ln_gamma(nu / 2.0);
                log.exp() / scale.powf(p)
            }
            Law::SymGamma { xi, scale, .. } => (ln_gamma(xi + p) - ln_gamma(xi)).exp() / scale.powf(p),
        }
    }

    /// `E(|z| - λ z)^μ`, the quantity entering the asymmetric power GARCH
    /// stationarity condition. All supported laws are symmetric, so this
    /// equals `E|z|^μ ((1-λ)^μ + (1+λ)^μ) / 2`; for μ = 2 that is `1 + λ²`.
    pub fn power_asymmetry_moment(&self, lambda: f64, mu: f64) -> f64 {
        if mu == 2.0 {
            return 1.0 + lambda * lambda;
        }
        self.abs_moment(mu) * 0.5 * ((1.0 - lambda).powf(mu) + (1.0 + lambda).powf(mu))
    }
}

fn t_density(nu: f64, t: f64) -> f64 {
    let log_c = ln_gamma((nu + 1.0) / 2.0) - 0.5 * (nu * PI).ln() - ln_gamma(nu / 2.0);
    (log_c - (nu + 1.0) / 2.0 * (1.0 + t * t / nu).ln()).exp()
}

impl TryFrom<InnovationSpec> for InnovationDist {
    type Error = Error;

    fn try_from(spec: InnovationSpec) -> Result<Self> {
        match spec {
            InnovationSpec::Normal => Ok(Self::std_normal()),
            InnovationSpec::T { nu } => Self::normalized_t(nu),
            InnovationSpec::Symgamma { xi } => Self::sym_gamma(xi),
        }
    }
}

impl From<InnovationDist> for InnovationSpec {
    fn from(d: InnovationDist) -> Self {
        d.spec()
    }
}
