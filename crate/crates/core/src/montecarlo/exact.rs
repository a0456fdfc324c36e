//! Exact tail probabilities by enumerating every multinomial outcome.

use statrs::function::gamma::ln_gamma;

use crate::deviation::l1_counts;
use crate::distributions::{compensated_sum, SimplexVector};
use crate::error::{Error, Result};

/// Largest number of outcomes [`exact_tail_small`] will enumerate.
pub const MAX_COMPOSITIONS: u64 = 10_000_000;

/// `C(n + S − 1, S − 1)`, or `None` once it exceeds `limit`.
pub fn composition_count(n: u64, s: usize, limit: u64) -> Option<u64> {
    if s == 0 {
        return Some(0);
    }
    let k = (s - 1) as u64;
    let mut acc: u128 = 1;
    // C(n+k, k) = Π_{i=1..k} (n + i) / i, exact at every step.
    for i in 1..=k {
        acc = acc * (n as u128 + i as u128) / i as u128;
        if acc > limit as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Visits every count vector of length `s` summing to `n` in colexicographic order.
pub fn for_each_composition<F: FnMut(&[u64])>(n: u64, s: usize, mut visit: F) {
    if s == 0 {
        return;
    }
    let mut c = vec![0u64; s];
    c[0] = n;
    loop {
        visit(&c);
        let Some(i) = c.iter().position(|&x| x > 0) else { return };
        if i + 1 == s {
            return;
        }
        let v = c[i];
        c[i] = 0;
        c[0] = v - 1;
        c[i + 1] += 1;
    }
}

fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// Multinomial pmf at `counts` via log-factorials.
pub fn multinomial_pmf(counts: &[u64], n: u64, p: &[f64]) -> f64 {
    let mut ln = ln_factorial(n);
    for (&c, &q) in counts.iter().zip(p) {
        if c == 0 {
            continue;
        }
        if q == 0.0 {
            return 0.0;
        }
        ln += c as f64 * q.ln() - ln_factorial(c);
    }
    ln.exp()
}

/// `P(‖c/n − p‖₁ ≥ threshold)` for `c ~ Multinomial(n, p)`, by enumeration.
pub fn exact_tail_small(p: &SimplexVector, n: u64, threshold: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Validation("exact tail requires n >= 1".into()));
    }
    let s = p.dim();
    if composition_count(n, s, MAX_COMPOSITIONS).is_none() {
        return Err(Error::Capacity(format!(
            "C(n+S-1, S-1) for n = {n}, S = {s} exceeds {MAX_COMPOSITIONS} outcomes"
        )));
    }
    let probs = p.entries();
    let mut terms = Vec::new();
    for_each_composition(n, s, |c| {
        if l1_counts(c, n, probs) >= threshold {
            terms.push(multinomial_pmf(c, n, probs));
        }
    });
    Ok(compensated_sum(terms).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_all_compositions() {
        let mut seen = Vec::new();
        for_each_composition(2, 3, |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![vec![2, 0, 0], vec![1, 1, 0], vec![0, 2, 0], vec![1, 0, 1], vec![0, 1, 1], vec![0, 0, 2]]
        );
        for (n, s) in [(0u64, 4usize), (5, 1), (7, 4), (12, 3)] {
            let mut count = 0u64;
            for_each_composition(n, s, |c| {
                assert_eq!(c.iter().sum::<u64>(), n);
                count += 1;
            });
            assert_eq!(Some(count), composition_count(n, s, u64::MAX));
        }
    }

    #[test]
    fn composition_count_guard() {
        assert_eq!(composition_count(2, 2, 100), Some(3));
        assert_eq!(composition_count(100, 10, MAX_COMPOSITIONS), None);
    }

    #[test]
    fn tail_examples() {
        let p = SimplexVector::uniform(2).unwrap();
        assert!((exact_tail_small(&p, 2, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((exact_tail_small(&p, 2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(exact_tail_small(&p, 2, 2.5).unwrap(), 0.0);
        let p3 = SimplexVector::uniform(3).unwrap();
        assert!((exact_tail_small(&p3, 6, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(exact_tail_small(&SimplexVector::uniform(10).unwrap(), 100, 0.5).is_err());
        assert!(exact_tail_small(&p, 0, 0.5).is_err());
    }

    #[test]
    fn pmf_matches_binomial_closed_form() {
        // Binomial(4, 0.3) at 1: 4·0.3·0.7³ = 0.4116.
        assert!((multinomial_pmf(&[1, 3], 4, &[0.3, 0.7]) - 0.4116).abs() < 1e-12);
        assert_eq!(multinomial_pmf(&[1, 3], 4, &[0.0, 1.0]), 0.0);
    }
}
