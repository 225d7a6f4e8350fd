//! Physicists' Hermite polynomials and the normalised Hermite functions
//! `φ_n(y) = H_n(y) e^{−y²/2} / √(2ⁿ n! √π)`.

use crate::error::{Error, Result};

/// Largest order accepted by the evaluators.
pub const N_MAX_SUPPORTED: usize = 512;

const RESCALE_ABOVE: f64 = 1e150;

fn check_order(n: usize) -> Result<()> {
    if n > N_MAX_SUPPORTED {
        return Err(Error::Precondition(format!(
            "Hermite order {n} exceeds the supported maximum {N_MAX_SUPPORTED}"
        )));
    }
    Ok(())
}

/// `H_n(y)` from `H_{k+1} = 2y H_k − 2k H_{k−1}`. Intermediate values carry
/// a separate power-of-two exponent, so only a final result outside the
/// `f64` range is an error.
pub fn hermite(n: usize, y: f64) -> Result<f64> {
    check_order(n)?;
    if !y.is_finite() {
        return Err(Error::Overflow { n, y });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let (mut prev, mut cur) = (1.0f64, 2.0 * y);
    let mut exponent: i32 = 0;
    for k in 1..n {
        let next = 2.0 * y * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            let shift = cur.abs().log2().floor() as i32;
            let scale = (-shift as f64).exp2();
            cur *= scale;
            prev *= scale;
            exponent += shift;
        }
    }
    if exponent == 0 {
        return Ok(cur);
    }
    let value = cur * 2f64.powi(exponent.min(1100));
    if value.is_finite() && exponent < 1100 {
        Ok(value)
    } else {
        Err(Error::Overflow { n, y })
    }
}

/// `[φ_0(y), …, φ_{n_max}(y)]` via the normalised recurrence
/// `φ_{k+1} = √(2/(k+1)) y φ_k − √(k/(k+1)) φ_{k−1}`.
pub fn hermite_functions(n_max: usize, y: f64) -> Result<Vec<f64>> {
    check_order(n_max)?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp());
    if n_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * y * out[0]);
    }
    for k in 1..n_max {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    Ok(out)
}

/// Single normalised Hermite function `φ_n(y)`.
pub fn hermite_function(n: usize, y: f64) -> Result<f64> {
    Ok(hermite_functions(n, y)?[n])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `H_n(y) = n! Σ_m (−1)^m (2y)^{n−2m} / (m! (n−2m)!)`
    fn explicit(n: usize, y: f64) -> f64 {
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        (0..=n / 2)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign * fact(n) / (fact(m) * fact(n - 2 * m)) * (2.0 * y).powi((n - 2 * m) as i32)
            })
            .sum()
    }

    #[test]
    fn base_cases() {
        assert_eq!(hermite(0, 0.7).unwrap(), 1.0);
        assert_eq!(hermite(1, 2.0).unwrap(), 4.0);
        assert_eq!(hermite(2, 1.0).unwrap(), 2.0);
        assert_eq!(hermite(3, 0.5).unwrap(), -5.0);
    }

    #[test]
    fn tenth_order_against_coefficients() {
        let a = hermite(10, 3.7).unwrap();
        let b = explicit(10, 3.7);
        assert!((a - b).abs() < 1e-10 * b.abs());
    }

    #[test]
    fn large_orders_rescale_without_overflow() {
        // intermediate values pass 1e150 and get rescaled; compare in log
        // space with the normalised-function route
        let (n, y) = (150usize, 10.0f64);
        let a = hermite(n, y).unwrap();
        let log_norm = 0.5 * (n as f64 * 2f64.ln() + (1..=n).map(|i| (i as f64).ln()).sum::<f64>() + 0.5 * std::f64::consts::PI.ln());
        let phi = hermite_function(n, y).unwrap();
        let log_b = phi.abs().ln() + log_norm + 0.5 * y * y;
        assert!(a.is_finite() && a.signum() == phi.signum());
        assert!((a.abs().ln() - log_b).abs() < 1e-10, "{} vs {log_b}", a.abs().ln());
        assert!(matches!(hermite(400, 30.0), Err(Error::Overflow { .. })));
        assert!(hermite(N_MAX_SUPPORTED + 1, 0.1).is_err());
    }

    #[test]
    fn functions_match_polynomials() {
        let y = 1.3;
        let phi = hermite_functions(12, y).unwrap();
        for (n, p) in phi.iter().enumerate() {
            let norm = (2f64.powi(n as i32) * (1..=n).map(|i| i as f64).product::<f64>() * std::f64::consts::PI.sqrt()).sqrt();
            let direct = hermite(n, y).unwrap() * (-0.5 * y * y).exp() / norm;
            assert!((p - direct).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn high_order_functions_are_bounded() {
        for y in [0.0, 5.0, 20.0, 31.0] {
            for p in hermite_functions(N_MAX_SUPPORTED, y).unwrap() {
                assert!(p.is_finite() && p.abs() < 1.0);
            }
        }
    }

    #[test]
    fn orthonormal_by_quadrature() {
        let n = 30;
        let dy = 0.01;
        let rows: Vec<Vec<f64>> = (-1500..=1500).map(|i| hermite_functions(n, i as f64 * dy).unwrap()).collect();
        for a in [0, 7, 30] {
            for b in [0, 7, 29, 30] {
                let s: f64 = rows.iter().map(|r| r[a] * r[b]).sum::<f64>() * dy;
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((s - target).abs() < 1e-10, "{a},{b}: {s}");
            }
        }
    }
}
