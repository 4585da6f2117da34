//! A complete data-generating process: linear filter driven by
//! conditionally heteroscedastic errors.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::innovations::InnovationDist;
use crate::linear_process::LinearFilter;
use crate::rng::RngStream;
use crate::volatility::{Estimate, VolatilityModel, DEFAULT_BURN_IN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dgp {
    pub filter: LinearFilter,
    pub volatility: VolatilityModel,
    #[serde(default)]
    pub innovations: InnovationDist,
}

/// One simulated sample; all three series are aligned in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub x: Vec<f64>,
    pub eps: Vec<f64>,
    pub sigma2: Vec<f64>,
}

impl Dgp {
    pub fn new(filter: LinearFilter, volatility: VolatilityModel, innovations: InnovationDist) -> Self {
        Dgp { filter, volatility, innovations }
    }

    /// Default warm-up: the base burn-in plus the filter truncation length.
    pub fn default_burn_in(&self) -> usize {
        DEFAULT_BURN_IN + self.filter.truncation()
    }

    pub fn error_variance(&self) -> Result<Estimate> {
        self.volatility.unconditional_variance(&self.innovations)
    }

    /// Population autocovariance `γ(j)` under the unconditional error variance.
    pub fn autocovariance(&self, lag: usize) -> Result<f64> {
        Ok(self.filter.autocovariance(self.error_variance()?.value, lag))
    }

    /// Simulates `n` observations. The error path also covers the `L`
    /// pre-sample errors consumed by the convolution.
    pub fn simulate(&self, n: usize, burn_in: Option<usize>, rng: &mut RngStream) -> Result<Realization> {
        let l = self.filter.truncation();
        let burn = burn_in.unwrap_or_else(|| self.default_burn_in());
        let path = self.volatility.simulate_errors(&self.innovations, n + l, burn, rng)?;
        let x = self.filter.simulate(&path.eps)?;
        Ok(Realization { x, eps: path.eps[l..].to_vec(), sigma2: path.sigma2[l..].to_vec() })
    }
}
