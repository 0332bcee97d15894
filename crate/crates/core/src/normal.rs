//! Standard normal CDF and its logarithm, plus Gaussian interval probabilities.
//!
//! The log form follows `ln(a) + ln(1 - exp(ln b - ln a))` with `a`, `b` the
//! upper and lower CDF values. Intervals lying above the mean are reflected
//! through the mean first so that both CDF values sit in the lower tail,
//! where their logarithms keep full relative precision.

use crate::error::{invalid, Result};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Smallest predictive standard deviation used inside CDF computations.
pub const SD_FLOOR: f64 = 1e-8;

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Natural log of the standard normal CDF, finite for every finite `z`.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z > 6.0 {
        // Φ(z) = 1 - Φ(-z), and Φ(-z) < 1e-9 here
        return -norm_cdf(-z);
    }
    if z > -30.0 {
        return norm_cdf(z).ln();
    }
    // Asymptotic series of the Mills ratio for the far lower tail.
    let z2 = z * z;
    let inv = 1.0 / z2;
    let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv + 105.0 * inv.powi(4);
    -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NEG_INFINITY
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Numerically stable `ln(sum(exp(v)))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if lo.is_nan() || hi.is_nan() {
        return Err(invalid("interval bounds must not be NaN"));
    }
    if lo > hi {
        return Err(invalid(format!("interval lower bound {lo} exceeds upper bound {hi}")));
    }
    Ok(())
}

/// `P(lo <= Y <= hi)` for `Y ~ N(mean, sd²)`.
pub fn gaussian_interval_probability(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<f64> {
    check_interval(lo, hi)?;
    if lo == hi {
        return Ok(0.0);
    }
    let sd = sd.max(SD_FLOOR);
    let (zl, zh) = ((lo - mean) / sd, (hi - mean) / sd);
    let p = if zl > 0.0 {
        norm_cdf(-zl) - norm_cdf(-zh)
    } else {
        norm_cdf(zh) - norm_cdf(zl)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Log of [`gaussian_interval_probability`], finite down to roughly `1e-300`.
pub fn gaussian_log_interval_probability(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<f64> {
    check_interval(lo, hi)?;
    if lo == hi {
        return Ok(f64::NEG_INFINITY);
    }
    let sd = sd.max(SD_FLOOR);
    let (zl, zh) = ((lo - mean) / sd, (hi - mean) / sd);
    // a = upper CDF value, b = lower CDF value, both taken in the lower tail
    let (ln_a, ln_b) = if zl > 0.0 {
        (log_norm_cdf(-zl), log_norm_cdf(-zh))
    } else {
        (log_norm_cdf(zh), log_norm_cdf(zl))
    };
    if ln_a == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let out = ln_a + log1m_exp(ln_b - ln_a);
    Ok(out.min(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_reference_values() {
        assert_abs_diff_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(norm_cdf(1.96), 0.9750021048517795, epsilon = 1e-14);
        assert_abs_diff_eq!(norm_cdf(-1.0), 0.15865525393145707, epsilon = 1e-15);
    }

    #[test]
    fn log_cdf_tail_matches_series_and_direct() {
        // Overlap region where both branches are accurate.
        for z in [-29.0, -25.0, -10.0, -3.0, 0.5, 5.0, 8.0] {
            let direct = norm_cdf(z).ln();
            assert!((log_norm_cdf(z) - direct).abs() < 1e-12 * direct.abs().max(1e-300) + 1e-15, "z = {z}");
        }
        // ln Φ(-40) from mpmath: -804.6084420137538
        assert!((log_norm_cdf(-40.0) - (-804.6084420137538)).abs() < 1e-8);
        // Continuity across the series switch.
        assert!((log_norm_cdf(-30.0 + 1e-9) - log_norm_cdf(-30.0 - 1e-9)).abs() < 1e-6);
    }

    #[test]
    fn interval_examples() {
        let p = gaussian_interval_probability(0.0, 1.0, -1.96, 1.96).unwrap();
        assert_abs_diff_eq!(p, 0.95, epsilon = 1e-4);
        assert_eq!(gaussian_interval_probability(0.0, 1.0, 0.3, 0.3).unwrap(), 0.0);
        // Φ(1.4) − Φ(−0.6), 40-digit mpmath oracle
        let p = gaussian_interval_probability(0.3, 0.5, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(p, 0.6449902230161554, epsilon = 1e-12);
        assert!(gaussian_interval_probability(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn log_interval_examples() {
        let lp = gaussian_log_interval_probability(0.0, 1.0, -1.96, 1.96).unwrap();
        let direct = gaussian_interval_probability(0.0, 1.0, -1.96, 1.96).unwrap().ln();
        assert_abs_diff_eq!(lp, direct, epsilon = 1e-12);
        // the interval holds 0.9500042, not exactly 0.95
        assert_abs_diff_eq!(lp, 0.95f64.ln(), epsilon = 1e-5);
        // ln(Φ(−10) − Φ(−11)) = -53.23131022558312 (mpmath, 40 digits)
        let lp = gaussian_log_interval_probability(0.0, 1.0, 10.0, 11.0).unwrap();
        assert!(lp.is_finite());
        assert!((lp - (-53.23131022558312)).abs() < 1e-9, "{lp}");
        // floored sd, point far outside
        let lp = gaussian_log_interval_probability(0.0, 0.0, 1.0, 2.0).unwrap();
        assert!(lp.is_finite() && lp <= -700.0, "{lp}");
        assert_eq!(gaussian_log_interval_probability(0.0, 1.0, 2.0, 2.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn log1m_exp_branches() {
        assert_abs_diff_eq!(log1m_exp(-1e-20), (1e-20f64).ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(log1m_exp(-2.0), (1.0 - (-2.0f64).exp()).ln(), epsilon = 1e-15);
    }
}
