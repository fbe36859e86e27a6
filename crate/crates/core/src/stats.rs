//! Distribution helpers and the one-sample Kolmogorov–Smirnov test.

use std::f64::consts::SQRT_2;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper quantile `z_α` with `P(Z > z_α) = α`.
pub fn normal_upper_quantile(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha)
}

pub fn chi2_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if df == 2.0 {
        return -(-0.5 * x).exp_m1();
    }
    ChiSquared::new(df).expect("df > 0").cdf(x)
}

/// Upper quantile of χ²(df).
pub fn chi2_upper_quantile(alpha: f64, df: f64) -> f64 {
    if df == 2.0 {
        return -2.0 * alpha.ln();
    }
    ChiSquared::new(df).expect("df > 0").inverse_cdf(1.0 - alpha)
}

/// `sup |F_n − F|` for the sample against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic Kolmogorov p-value with Stephens' finite-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Critical value of the KS distance at level `alpha`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ks_pvalue(mid, n) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_test<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsResult {
    let statistic = ks_statistic(sample, cdf);
    KsResult {
        statistic,
        p_value: ks_pvalue(statistic, sample.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        assert_relative_eq!(normal_cdf(1.959_963_984_540_054), 0.975, max_relative = 1e-14);
        assert_relative_eq!(normal_upper_quantile(0.05), 1.644_853_626_951_472_7, max_relative = 1e-9);
        assert_relative_eq!(chi2_upper_quantile(0.05, 2.0), 5.991_464_547_107_979, max_relative = 1e-14);
        assert_relative_eq!(chi2_cdf(5.991_464_547_107_979, 2.0), 0.95, max_relative = 1e-14);
        assert_relative_eq!(chi2_cdf(3.0, 3.0), 0.608_374_823_728_911_1, max_relative = 1e-9);
    }

    #[test]
    fn kolmogorov_tail() {
        // asymptotic 1% point of the Kolmogorov distribution
        let lam = 1.627_623_611_518_95;
        let n = 1_000_000;
        let d = lam / ((n as f64).sqrt() + 0.12 + 0.11 / (n as f64).sqrt());
        assert_relative_eq!(ks_pvalue(d, n), 0.01, max_relative = 1e-6);
        assert_relative_eq!(ks_critical(0.01, n), d, max_relative = 1e-9);
    }

    #[test]
    fn uniform_grid_has_small_distance() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert_relative_eq!(ks_statistic(&xs, |x| x), 0.0005, max_relative = 1e-9);
    }
}
