//! The stationary mean process `x_t = Σ α_i ε_{t-i}` generated by an ARMA
//! filter, truncated once the coefficients become negligible.
//!
//! Sign convention: the AR polynomial is `a(z) = 1 - Σ a_i z^i` (applied to
//! `x`), the MA polynomial `b(z) = 1 + Σ b_i z^i` (applied to `ε`), so
//! `x_t = -0.5 x_{t-2} + ε_t` is `ar = [0, -0.5]` and `x_t = ε_t - 0.8 ε_{t-1}`
//! is `ma = [-0.8]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly;

pub const DEFAULT_TRUNC_TOL: f64 = 1e-12;

/// Hard cap on the number of retained MA(∞) coefficients.
pub const MAX_TRUNCATION: usize = 100_000;

/// Minimum distance of every polynomial root from the unit circle.
const ROOT_MARGIN: f64 = 1e-8;

/// Configuration form: `{"ar": [...], "ma": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmaSpec {
    #[serde(default)]
    pub ar: Vec<f64>,
    #[serde(default)]
    pub ma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArmaSpec", into = "ArmaSpec")]
pub struct LinearFilter {
    alpha: Vec<f64>,
    ar: Vec<f64>,
    ma: Vec<f64>,
    trunc_tol: f64,
    tail_bound: f64,
}

impl LinearFilter {
    pub fn identity() -> Self {
        LinearFilter { alpha: vec![1.0], ar: Vec::new(), ma: Vec::new(), trunc_tol: DEFAULT_TRUNC_TOL, tail_bound: 0.0 }
    }

    /// Expands `b(z)/a(z)` into MA(∞) weights, truncated at the smallest
    /// index whose geometric tail bound falls below `trunc_tol`.
    pub fn from_arma(ar: &[f64], ma: &[f64], trunc_tol: f64) -> Result<Self> {
        if !(trunc_tol > 0.0) {
            return Err(invalid(format!("truncation tolerance must be positive, got {trunc_tol}")));
        }
        if ar.iter().chain(ma).any(|c| !c.is_finite()) {
            return Err(invalid("ARMA coefficients must be finite"));
        }
        let neg_ar: Vec<f64> = ar.iter().map(|a| -a).collect();
        let ar_min = poly::min_root_modulus(&neg_ar);
        if ar_min - 1.0 <= ROOT_MARGIN {
            return Err(Error::RootInsideUnitCircle { modulus: ar_min, context: "AR polynomial".into() });
        }
        let ma_min = poly::min_root_modulus(ma);
        if ma_min - 1.0 <= ROOT_MARGIN {
            return Err(Error::RootInsideUnitCircle { modulus: ma_min, context: "MA polynomial".into() });
        }

        let p = ar.len();
        let q = ma.len();
        // Dominant decay rate of the AR recursion.
        let rho = if ar_min.is_finite() { 1.0 / ar_min } else { 0.0 };
        let mut alpha = vec![1.0];
        let mut tail_bound = 0.0;
        let mut i = 1;
        loop {
            let mut next = if i <= q { ma[i - 1] } else { 0.0 };
            for j in 1..=p.min(i) {
                next += ar[j - 1] * alpha[i - j];
            }
            alpha.push(next);
            if i >= q && (p == 0 || i >= q + p) {
                if p == 0 {
                    break;
                }
                // Beyond the MA part the weights follow the AR recursion, so
                // the tail is dominated by the largest recent weight times a
                // geometric series in the dominant root.
                let recent = alpha[i + 1 - p..=i].iter().fold(0.0f64, |m, a| m.max(a.abs()));
                tail_bound = p as f64 * recent * rho / (1.0 - rho);
                if tail_bound < trunc_tol && recent < trunc_tol {
                    break;
                }
            }
            if i >= MAX_TRUNCATION {
                return Err(Error::TruncationCap { tol: trunc_tol, cap: MAX_TRUNCATION });
            }
            i += 1;
        }
        while alpha.len() > 1 && *alpha.last().unwrap() == 0.0 {
            alpha.pop();
        }
        Ok(LinearFilter { alpha, ar: ar.to_vec(), ma: ma.to_vec(), trunc_tol, tail_bound })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Truncation index `L` (the last retained weight is `α_L`).
    pub fn truncation(&self) -> usize {
        self.alpha.len() - 1
    }

    /// Bound on `Σ_{i>L} |α_i|` implied by the dominant AR root.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    pub fn ma(&self) -> &[f64] {
        &self.ma
    }

    /// `β_1..β_m` with `x_t = Σ β_i x_{t-i} + ε_t`: the coefficients of
    /// `1 - a(z)/b(z)`.
    pub fn ar_infinity(&self, m: usize) -> Vec<f64> {
        let q = self.ma.len();
        // pi(z) = a(z)/b(z), pi_0 = 1.
        let mut pi = vec![1.0; m + 1];
        for i in 1..=m {
            let mut v = if i <= self.ar.len() { -self.ar[i - 1] } else { 0.0 };
            for j in 1..=q.min(i) {
                v -= self.ma[j - 1] * pi[i - j];
            }
            pi[i] = v;
        }
        pi[1..].iter().map(|v| -v).collect()
    }

    /// `γ(j) = σ² Σ α_i α_{i+j}` over the retained weights.
    pub fn autocovariance(&self, sigma2: f64, lag: usize) -> f64 {
        if lag >= self.alpha.len() {
            return 0.0;
        }
        sigma2 * self.alpha.iter().zip(&self.alpha[lag..]).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Convolves `eps` with the truncated filter. The first `L` errors are
    /// pre-sample values; the output has length `eps.len() - L` and
    /// `x[t] = Σ_{i=0}^{L} α_i eps[t + L - i]`.
    pub fn simulate(&self, eps: &[f64]) -> Result<Vec<f64>> {
        let l = self.truncation();
        if eps.len() <= l {
            return Err(Error::InsufficientData { needed: l + 1, available: eps.len() });
        }
        let n = eps.len() - l;
        let mut x = Vec::with_capacity(n);
        for t in 0..n {
            let end = t + l;
            let mut s = 0.0;
            for (i, a) in self.alpha.iter().enumerate() {
                s += a * eps[end - i];
            }
            x.push(s);
        }
        Ok(x)
    }
}

impl TryFrom<ArmaSpec> for LinearFilter {
    type Error = Error;

    fn try_from(spec: ArmaSpec) -> Result<Self> {
        Self::from_arma(&spec.ar, &spec.ma, spec.trunc_tol.unwrap_or(DEFAULT_TRUNC_TOL))
    }
}

impl From<LinearFilter> for ArmaSpec {
    fn from(f: LinearFilter) -> Self {
        let trunc_tol = (f.trunc_tol != DEFAULT_TRUNC_TOL).then_some(f.trunc_tol);
        ArmaSpec { ar: f.ar, ma: f.ma, trunc_tol }
    }
}
