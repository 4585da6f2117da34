//! Sample autocovariance matrices and a Monte Carlo probe of the negative
//! moments `E[λ_min^{-q}(R̂_n(k))]` of their smallest eigenvalue.

use serde::{Deserialize, Serialize};

use crate::dgp::Dgp;
use crate::error::{invalid, Error, Result};
use crate::experiments::run_replications;
use crate::linalg::{self, Matrix, MAX_ORDER};
use crate::rng::Seed;
use crate::stats::{mean_se, ols_slope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `R̂_n(k) = (n - k)^{-1} Σ_{j=k}^{n-1} x_j(k) x_j(k)ᵀ`.
    Plain,
    /// `R̂_{n,h}(k) = (n - h - k + 1)^{-1} Σ_{j=k}^{n-h} x_j(k) x_j(k)ᵀ`.
    HStep(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleAutocovMatrix {
    pub entries: Matrix,
    pub n: usize,
    pub k: usize,
    pub variant: Variant,
}

/// Builds the order-`k` sample autocovariance matrix, with
/// `x_j(k) = (x_j, ..., x_{j-k+1})ᵀ` in 1-based time.
pub fn sample_autocov(x: &[f64], k: usize, variant: Variant) -> Result<SampleAutocovMatrix> {
    let n = x.len();
    let h = match variant {
        Variant::Plain => 1,
        Variant::HStep(h) if h >= 1 => h,
        Variant::HStep(_) => return Err(invalid("horizon must be at least 1")),
    };
    if k == 0 || k > MAX_ORDER {
        return Err(invalid(format!("order must be in 1..={MAX_ORDER}, got {k}")));
    }
    if n <= k + h + 1 {
        return Err(Error::InsufficientData { needed: k + h + 2, available: n });
    }
    let mut m = Matrix::zeros(k, k);
    for j in k..=n - h {
        // x_j(k)[a] = x_{j-a} = x[j - 1 - a].
        for a in 0..k {
            let xa = x[j - 1 - a];
            for b in 0..=a {
                m[(a, b)] += xa * x[j - 1 - b];
            }
        }
    }
    let rows = (n - h - k + 1) as f64;
    for a in 0..k {
        for b in 0..=a {
            let v = m[(a, b)] / rows;
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(SampleAutocovMatrix { entries: m, n, k, variant })
}

/// Smallest eigenvalue; NaN when the matrix has non-finite entries.
pub fn min_eigenvalue(m: &SampleAutocovMatrix) -> f64 {
    linalg::min_eigenvalue(&m.entries).unwrap_or(f64::NAN)
}

/// One CSV line of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub q: f64,
    pub k: usize,
    pub mean_negq_moment: f64,
    pub se: f64,
    /// Replications without a finite `λ_min^{-q}`, including failed simulations.
    pub nonfinite_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// OLS slope of `log Ê` on `log n`.
    pub fn log_slope(&self) -> f64 {
        let lx: Vec<f64> = self.rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ly: Vec<f64> = self.rows.iter().map(|r| r.mean_negq_moment.ln()).collect();
        ols_slope(&lx, &ly)
    }

    /// `Ê` at the largest `n` divided by `Ê` at the smallest.
    pub fn last_first_ratio(&self) -> f64 {
        self.rows[self.rows.len() - 1].mean_negq_moment / self.rows[0].mean_negq_moment
    }
}

pub const MIN_SWEEP_REPS: usize = 200;

/// Monte Carlo mean of `λ_min^{-q}(R̂_n(k))` for each `n` in `n_grid`.
pub fn negative_moment_sweep(
    dgp: &Dgp,
    k: usize,
    q: f64,
    n_grid: &[usize],
    reps: usize,
    seed: Seed,
    workers: usize,
) -> Result<SweepResult> {
    if !(q > 0.0) {
        return Err(invalid(format!("q must be positive, got {q}")));
    }
    if reps < MIN_SWEEP_REPS {
        return Err(invalid(format!("at least {MIN_SWEEP_REPS} replications required, got {reps}")));
    }
    if n_grid.is_empty() {
        return Err(invalid("n grid is empty"));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        if n <= k + 2 {
            return Err(Error::InsufficientData { needed: k + 3, available: n });
        }
        let out = run_replications(reps, seed.child(i as u64), workers, |_, rng| {
            let x = dgp.simulate(n, None, rng)?.x;
            let m = sample_autocov(&x, k, Variant::Plain)?;
            Ok(min_eigenvalue(&m).powf(-q))
        })?;
        let finite: Vec<f64> = out.iter().filter_map(|o| o.as_ref().ok().copied()).filter(|v| v.is_finite()).collect();
        let (mean, se) = mean_se(&finite);
        rows.push(SweepRow { n, q, k, mean_negq_moment: mean, se, nonfinite_count: reps - finite.len() });
    }
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::InnovationDist;
    use crate::linear_process::LinearFilter;
    use crate::rng::RngStream;
    use crate::volatility::VolatilityModel;

    #[test]
    fn constant_series_is_rank_one() {
        let m = sample_autocov(&[2.0; 20], 3, Variant::Plain).unwrap();
        assert!(m.entries.as_slice().iter().all(|v| (v - 4.0).abs() < 1e-14));
        assert!(min_eigenvalue(&m).abs() < 1e-12);
    }

    #[test]
    fn order_one_is_mean_square() {
        let x = [1.0, -2.0, 3.0, 0.5, 4.0];
        let m = sample_autocov(&x, 1, Variant::Plain).unwrap();
        let expect = (1.0 + 4.0 + 9.0 + 0.25) / 4.0;
        assert!((m.entries[(0, 0)] - expect).abs() < 1e-15);
    }

    #[test]
    fn plain_equals_one_step() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).cos()).collect();
        let a = sample_autocov(&x, 4, Variant::Plain).unwrap();
        let b = sample_autocov(&x, 4, Variant::HStep(1)).unwrap();
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn hstep_drops_the_last_rows() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sqrt()).collect();
        let a = sample_autocov(&x[..28], 2, Variant::Plain).unwrap();
        let b = sample_autocov(&x, 2, Variant::HStep(3)).unwrap();
        assert!(a.entries.max_abs_diff(&b.entries) < 1e-13);
    }

    #[test]
    fn white_noise_matrix_is_near_identity() {
        let dgp = Dgp::new(LinearFilter::identity(), VolatilityModel::constant(1.0).unwrap(), InnovationDist::std_normal());
        let x = dgp.simulate(100_000, Some(0), &mut RngStream::from_seed(8)).unwrap().x;
        let m = sample_autocov(&x, 3, Variant::Plain).unwrap();
        assert!(m.entries.max_abs_diff(&Matrix::identity(3)) < 0.02);
    }

    #[test]
    fn input_checks() {
        assert!(sample_autocov(&[1.0, 2.0, 3.0], 2, Variant::Plain).is_err());
        assert!(sample_autocov(&[1.0; 10], 0, Variant::Plain).is_err());
        assert!(sample_autocov(&[1.0; 100], 33, Variant::Plain).is_err());
        let dgp = Dgp::new(LinearFilter::identity(), VolatilityModel::constant(1.0).unwrap(), InnovationDist::std_normal());
        assert!(negative_moment_sweep(&dgp, 1, 2.0, &[100], 10, Seed::new(1), 1).is_err());
        assert!(negative_moment_sweep(&dgp, 1, 0.0, &[100], 300, Seed::new(1), 1).is_err());
    }

    #[test]
    fn iid_scalar_inverse_moment() {
        let dgp = Dgp::new(LinearFilter::identity(), VolatilityModel::constant(1.0).unwrap(), InnovationDist::std_normal());
        let r = negative_moment_sweep(&dgp, 1, 2.0, &[1000], 400, Seed::new(2), 4).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.nonfinite_count, 0);
        assert!(row.mean_negq_moment > 0.95 && row.mean_negq_moment < 1.10, "{row:?}");
    }
}
