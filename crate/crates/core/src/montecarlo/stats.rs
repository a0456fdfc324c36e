//! Interval and distance primitives shared by the estimators.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

pub(crate) fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Validation(format!("confidence level must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// Inverse of the regularized incomplete beta function in `x` by bisection.
fn beta_quantile(a: f64, b: f64, prob: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Clopper–Pearson interval for `successes` out of `trials` at `level`.
pub fn clopper_pearson(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Validation("Clopper-Pearson interval needs at least one trial".into()));
    }
    if successes > trials {
        return Err(Error::Validation(format!("{successes} successes exceed {trials} trials")));
    }
    check_level(level)?;
    let alpha = 1.0 - level;
    let k = successes as f64;
    let n = trials as f64;
    let point = k / n;
    let low = if successes == 0 { 0.0 } else { beta_quantile(k, n - k + 1.0, alpha / 2.0) };
    let high = if successes == trials { 1.0 } else { beta_quantile(k + 1.0, n - k, 1.0 - alpha / 2.0) };
    Ok((low.min(point), high.max(point)))
}

/// Dvoretzky–Kiefer–Wolfowitz half-width `√(ln(2/α)/(2N))`.
pub fn dkw_halfwidth(trials: u64, alpha: f64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Validation("DKW band needs at least one trial".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Validation(format!("band level must lie in (0, 1), got {alpha}")));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * trials as f64)).sqrt())
}

/// Two-sided standard normal critical value for `level`.
pub fn normal_critical(level: f64) -> Result<f64> {
    check_level(level)?;
    let std = Normal::standard();
    Ok(std.inverse_cdf(0.5 + 0.5 * level))
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_t |F_a(t) − F_b(t)|`.
///
/// Ties are handled by stepping both empirical CDFs past every copy of a
/// value before comparing.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let t = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Empirical `q`-quantile (inverse ECDF, lower convention) of sorted data.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}
