use hetforecast::{InnovationDist, Seed, VolatilityModel};

fn laws() -> Vec<(&'static str, InnovationDist)> {
    vec![
        ("normal", InnovationDist::std_normal()),
        ("t(5)", InnovationDist::normalized_t(5.0).unwrap()),
        ("t(2.5)", InnovationDist::normalized_t(2.5).unwrap()),
        ("symgamma(0.5)", InnovationDist::sym_gamma(0.5).unwrap()),
        ("symgamma(0.9)", InnovationDist::sym_gamma(0.9).unwrap()),
    ]
}

#[test]
fn samples_have_unit_variance_and_match_the_cdf() {
    const N: usize = 1_000_000;
    for (i, (name, dist)) in laws().into_iter().enumerate() {
        let mut rng = Seed::new(41).stream(i as u64);
        let mut draws: Vec<f64> = (0..N).map(|_| dist.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / N as f64;
        let var = draws.iter().map(|z| z * z).sum::<f64>() / N as f64;
        assert!(mean.abs() < 0.01, "{name}: mean {mean}");
        // t(2.5) has infinite fourth moment; its sample variance converges slowly.
        let tol = if name == "t(2.5)" { 0.1 } else { 0.01 };
        assert!((var - 1.0).abs() < tol, "{name}: variance {var}");

        draws.sort_by(f64::total_cmp);
        let ks = draws
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let f = dist.cdf(z);
                (f - k as f64 / N as f64).abs().max(((k + 1) as f64 / N as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.002, "{name}: KS distance {ks}");
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn density_integrates_to_cdf_increments() {
    for (name, dist) in laws() {
        let s = dist.standardizing_scale();
        // symmetric Gamma densities are reported before rescaling
        let sampled = |x: f64| {
            if name.starts_with("symgamma") {
                s * dist.density(s * x).unwrap()
            } else {
                dist.density(x).unwrap()
            }
        };
        for (a, b) in [(0.1, 1.0), (-3.0, -0.25), (0.5, 8.0)] {
            let quad = simpson(sampled, a, b, 20_000);
            let exact = dist.cdf(b) - dist.cdf(a);
            assert!((quad - exact).abs() < 1e-8, "{name} on [{a}, {b}]: {quad} vs {exact}");
        }
    }
    let normal = InnovationDist::std_normal();
    let total = simpson(|x| normal.density(x).unwrap(), -12.0, 12.0, 20_000);
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn absolute_moments_match_simulation() {
    const N: usize = 400_000;
    for (i, (name, dist)) in laws().into_iter().enumerate() {
        let mut rng = Seed::new(43).stream(i as u64);
        for p in [1.0, 1.5] {
            // a sample mean of |z|^p only settles when |z|^(2p) is integrable
            if name == "t(2.5)" && p > 1.2 {
                continue;
            }
            let mc = (0..N).map(|_| dist.sample(&mut rng).abs().powf(p)).sum::<f64>() / N as f64;
            let exact = dist.abs_moment(p);
            assert!((mc / exact - 1.0).abs() < 0.01, "{name} p={p}: {mc} vs {exact}");
        }
    }
}

#[test]
fn garch_sample_moments_match_the_stationary_law() {
    // GARCH(1,1) with normal shocks: Var ε = ω/(1-a-b) and the autocorrelation of
    // ε² decays at rate a+b from ρ(1) = a(1 - ab - b²)/(1 - 2ab - b²).
    let (omega, a, b) = (0.4, 0.2, 0.55);
    let model = VolatilityModel::garch(omega, &[a], &[b]).unwrap();
    let path = model.simulate_errors(&InnovationDist::std_normal(), 2_000_000, 5_000, &mut Seed::new(44).stream(0)).unwrap();
    let n = path.len() as f64;
    let var = path.eps.iter().map(|e| e * e).sum::<f64>() / n;
    assert!((var / (omega / (1.0 - a - b)) - 1.0).abs() < 0.02, "{var}");

    let sq: Vec<f64> = path.eps.iter().map(|e| e * e).collect();
    let rho1 = hetforecast::stats::autocorrelation(&sq, 1);
    let want = a * (1.0 - a * b - b * b) / (1.0 - 2.0 * a * b - b * b);
    assert!((rho1 - want).abs() < 0.02, "{rho1} vs {want}");
    assert!(path.sigma2.iter().all(|s| *s > 0.0 && s.is_finite()));
}

#[test]
fn sv_log_variance_matches_its_ar_law() {
    let model = VolatilityModel::sv(0.01, &[0.95], 0.04).unwrap();
    let path = model.simulate_errors(&InnovationDist::std_normal(), 1_000_000, 5_000, &mut Seed::new(45).stream(0)).unwrap();
    let logs: Vec<f64> = path.sigma2.iter().map(|s| s.ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    let (m, v) = (0.01 / (1.0 - 0.95), 0.04 / (1.0 - 0.95 * 0.95));
    assert!((mean - m).abs() < 0.02, "{mean} vs {m}");
    assert!((var / v - 1.0).abs() < 0.05, "{var} vs {v}");
}
