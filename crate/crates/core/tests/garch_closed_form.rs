//! Independent oracle for `g̃` under GARCH(1,1) errors with normal shocks.
//!
//! For symmetric GARCH errors the only non-zero fourth-order moments are the
//! paired ones, `E[ε_u² ε_v²]`, which follow a one-step recursion in `|u - v|`.
//! Every quantity in `g̃` is then a finite sum over moving-average weights.

use std::collections::BTreeMap;

use hetforecast::population::estimate_moments;
use hetforecast::{Dgp, InnovationDist, LinearFilter, Seed, SubsetSpec, VolatilityModel};
use nalgebra::{DMatrix, DVector};

type Combo = BTreeMap<i64, f64>;

struct Garch11 {
    variance: f64,
    // fourth[j] = E[ε_t² ε_{t+j}²]
    fourth: Vec<f64>,
}

impl Garch11 {
    fn new(omega: f64, arch: f64, garch: f64, max_lag: usize) -> Self {
        let variance = omega / (1.0 - arch - garch);
        let sigma4 = omega * omega * (1.0 + arch + garch)
            / ((1.0 - arch - garch) * (1.0 - garch * garch - 2.0 * arch * garch - 3.0 * arch * arch));
        let mut fourth = vec![3.0 * sigma4];
        fourth.push(omega * variance + arch * fourth[0] + garch * sigma4);
        for j in 2..=max_lag {
            fourth.push(omega * variance + (arch + garch) * fourth[j - 1]);
        }
        Garch11 { variance, fourth }
    }

    fn pair(&self, a: &Combo, b: &Combo, c: &Combo, d: &Combo) -> f64 {
        let mut total = 0.0;
        for (&u, &au) in a {
            let Some(&bu) = b.get(&u) else { continue };
            for (&v, &cv) in c {
                if u == v {
                    continue;
                }
                if let Some(&dv) = d.get(&v) {
                    total += au * bu * cv * dv * self.fourth[(u - v).unsigned_abs() as usize];
                }
            }
        }
        total
    }

    fn fourth_moment(&self, a: &Combo, b: &Combo, c: &Combo, d: &Combo) -> f64 {
        let mut total = self.pair(a, b, c, d) + self.pair(a, c, b, d) + self.pair(a, d, b, c);
        for (u, au) in a {
            if let (Some(bu), Some(cu), Some(du)) = (b.get(u), c.get(u), d.get(u)) {
                total += au * bu * cu * du * self.fourth[0];
            }
        }
        total
    }
}

fn ar_weights(ar: &[f64], len: usize) -> Vec<f64> {
    let mut w = vec![1.0];
    for i in 1..len {
        w.push((0..ar.len()).filter(|&j| j < i).map(|j| ar[j] * w[i - 1 - j]).sum());
    }
    w
}

fn gamma(w: &[f64], variance: f64, lag: usize) -> f64 {
    variance * (0..w.len().saturating_sub(lag)).map(|i| w[i] * w[i + lag]).sum::<f64>()
}

fn series_at(w: &[f64], t: i64) -> Combo {
    w.iter().enumerate().map(|(i, &c)| (t - i as i64, c)).collect()
}

fn axpy(mut acc: Combo, scale: f64, other: &Combo) -> Combo {
    for (&k, &v) in other {
        *acc.entry(k).or_insert(0.0) += scale * v;
    }
    acc
}

/// `Σ_{|s|<h} tr(R⁻¹ L_s)` with `L_s = E[x_t(J) x_{t+s}(J)' e_t e_{t+s}]`.
fn closed_form_g(w: &[f64], g: &Garch11, lags: &[usize], h: usize) -> f64 {
    let k = lags.len();
    let r = DMatrix::from_fn(k, k, |a, b| gamma(w, g.variance, lags[a].abs_diff(lags[b])));
    let cross = DVector::from_fn(k, |a, _| gamma(w, g.variance, h + lags[a] - 1));
    let beta = r.clone().lu().solve(&cross).unwrap();
    let rinv = r.try_inverse().unwrap();

    let regressor = |t: i64, a: usize| series_at(w, t + 1 - lags[a] as i64);
    let error = |t: i64| {
        (0..k).fold(series_at(w, t + h as i64), |acc, a| axpy(acc, -beta[a], &regressor(t, a)))
    };

    let mut total = 0.0;
    for s in 0..h as i64 {
        let (e0, es) = (error(0), error(s));
        let mut trace = 0.0;
        for a in 0..k {
            for b in 0..k {
                trace += rinv[(b, a)] * g.fourth_moment(&regressor(0, a), &regressor(s, b), &e0, &es);
            }
        }
        total += if s == 0 { trace } else { 2.0 * trace };
    }
    total
}

fn garch_dgp(ar: &[f64], ma: &[f64], omega: f64, arch: f64, garch: f64) -> Dgp {
    Dgp::new(
        LinearFilter::from_arma(ar, ma, 1e-12).unwrap(),
        VolatilityModel::garch(omega, &[arch], &[garch]).unwrap(),
        InnovationDist::std_normal(),
    )
}

#[test]
fn oracle_reproduces_published_population_values() {
    let light = Garch11::new(0.4, 0.2, 0.55, 400);
    let heavy = Garch11::new(0.4, 0.5, 0.2, 400);
    let ar1 = ar_weights(&[-0.5], 60);
    let ar2 = ar_weights(&[0.0, -0.5], 90);
    let ma1 = [1.0, -0.8];

    let rel = |got: f64, want: f64| (got - want).abs() / want;
    assert!(rel(closed_form_g(&ar1, &light, &[1], 1), 2.571) < 2e-4);
    assert!(rel(closed_form_g(&ar1, &heavy, &[1], 1), 105.579) < 1e-4);
    let t2: Vec<f64> = (1..=5).map(|h| closed_form_g(&ma1, &light, &[1], h)).collect();
    for (got, want) in t2.iter().zip([2.964, 5.808, 5.324, 4.961, 4.689]) {
        assert!((got - want).abs() < 5e-4, "{t2:?}");
    }
    // The published AR(2) row was itself simulated and sits about 3% above these.
    let t1: Vec<f64> = (1..=5).map(|h| closed_form_g(&ar2, &light, &[1], h)).collect();
    for (got, want) in t1.iter().zip([3.357, 2.288, 3.594, 3.553, 3.878]) {
        assert!((got - want).abs() < 5e-4, "{t1:?}");
    }
}

#[test]
fn monte_carlo_moments_agree_with_closed_form() {
    let cases: [(&[f64], &[f64], &[usize], usize); 5] = [
        (&[-0.5], &[], &[1], 1),
        (&[0.0, -0.5], &[], &[1], 1),
        (&[0.0, -0.5], &[], &[1], 3),
        (&[], &[-0.8], &[1], 2),
        (&[0.0, -0.5], &[], &[1, 3], 2),
    ];
    let g = Garch11::new(0.4, 0.2, 0.55, 400);
    for (i, (ar, ma, lags, h)) in cases.into_iter().enumerate() {
        let dgp = garch_dgp(ar, ma, 0.4, 0.2, 0.55);
        let w: Vec<f64> = if ar.is_empty() {
            std::iter::once(1.0).chain(ma.iter().copied()).collect()
        } else {
            ar_weights(ar, 120)
        };
        let want = closed_form_g(&w, &g, lags, h);
        let spec = SubsetSpec::new(lags.to_vec(), h).unwrap();
        let got = estimate_moments(&dgp, &spec, 1_000_000, Seed::new(100 + i as u64)).unwrap().g_tilde_estimate().unwrap();
        assert!(
            (got.value - want).abs() <= 4.0 * got.se,
            "case {i}: MC {} ± {} vs closed form {want}",
            got.value,
            got.se
        );
    }
}
