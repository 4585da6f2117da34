//! Root moduli of lag polynomials `1 + c_1 z + ... + c_p z^p`.

use nalgebra::DMatrix;

/// Moduli of the roots of `1 + Σ c_i z^i`, via the companion matrix of the
/// reciprocal polynomial (whose roots are `1/z`). Zero roots of the
/// reciprocal correspond to roots at infinity and are dropped.
pub fn root_moduli(coeffs: &[f64]) -> Vec<f64> {
    let p = coeffs.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
    if p == 0 {
        return Vec::new();
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        companion[(0, j)] = -coeffs[j];
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    let mut out: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .map(|w| w.norm())
        .filter(|m| *m > 0.0)
        .map(|m| 1.0 / m)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Smallest root modulus, `+inf` for a constant polynomial.
pub fn min_root_modulus(coeffs: &[f64]) -> f64 {
    root_moduli(coeffs).first().copied().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_root() {
        // 1 - 0.98 z has its root at 1/0.98.
        assert!((min_root_modulus(&[-0.98]) - 1.0 / 0.98).abs() < 1e-12);
    }

    #[test]
    fn lag_two_roots() {
        // 1 + 0.5 z^2: roots ±i√2.
        let m = root_moduli(&[0.0, 0.5]);
        assert_eq!(m.len(), 2);
        for r in m {
            assert!((r - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_polynomial_has_no_roots() {
        assert_eq!(min_root_modulus(&[]), f64::INFINITY);
        assert_eq!(min_root_modulus(&[0.0, 0.0]), f64::INFINITY);
    }
}
