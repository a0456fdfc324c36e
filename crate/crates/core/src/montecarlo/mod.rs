//! Monte Carlo estimation of deviation tails and quantiles, and the
//! falsification verdict for a claimed bound.
//!
//! Trial `i` of a run with master seed `m` always draws from
//! `StreamKey { master_seed: m, trial_index: i }`, and per-trial values are
//! gathered in trial order. Exceedance and CDF counts are integers, and sums
//! are accumulated sequentially over the ordered values, so results do not
//! depend on how many workers execute the trials.

mod exact;
mod experiment;
mod stats;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{helmert_diagonalizer, OrthogonalDiagonalizer};
use crate::bounds::{BoundEvaluation, BoundSpec};
use crate::deviation::{l1_counts, l1_raw};
use crate::distributions::{dirichlet_with, multinomial_with, SimplexVector, StreamKey};
use crate::error::{Error, Result};

pub use exact::{composition_count, exact_tail_small, for_each_composition, multinomial_pmf, MAX_COMPOSITIONS};
pub use experiment::run_experiment;
pub use stats::{clopper_pearson, dkw_halfwidth, empirical_quantile, ks_two_sample, normal_critical};

pub const DEFAULT_CI_LEVEL: f64 = 0.95;
pub const DEFAULT_BAND_ALPHA: f64 = 0.05;
/// Smallest trial count accepted by [`Estimator::falsify`].
pub const MIN_FALSIFY_TRIALS: u64 = 100;

/// Which distribution family generates `p̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Multinomial,
    Dirichlet,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Multinomial => "multinomial",
            Family::Dirichlet => "dirichlet",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "multinomial" => Ok(Family::Multinomial),
            "dirichlet" => Ok(Family::Dirichlet),
            other => Err(Error::Validation(format!("unknown family '{other}' (expected multinomial or dirichlet)"))),
        }
    }
}

/// A random deviation to estimate.
///
/// Finite-`n` sources produce `‖p̂ − p‖₁`; [`Source::Limit`] produces `Z_S`
/// (which carries the scale `D`).
#[derive(Debug, Clone)]
pub enum Source {
    /// `p̂ = Multinomial(n, p)/n`.
    Multinomial { p: SimplexVector, n: u64 },
    /// `p̂ ~ Dirichlet(n·p)`.
    Dirichlet { p: SimplexVector, n: u64 },
    /// The limit `Z_S` for uniform `p`.
    Limit { s: usize, d: f64 },
}

impl Source {
    pub fn finite(family: Family, p: SimplexVector, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("finite-n source requires n >= 1".into()));
        }
        Ok(match family {
            Family::Multinomial => Source::Multinomial { p, n },
            Family::Dirichlet => {
                if let Some(i) = p.entries().iter().position(|&x| x <= 0.0) {
                    return Err(Error::Validation(format!("dirichlet source requires p[{i}] > 0")));
                }
                Source::Dirichlet { p, n }
            }
        })
    }

    pub fn limit(s: usize, d: f64) -> Result<Self> {
        if s < 2 {
            return Err(Error::Validation(format!("limit source requires S >= 2, got {s}")));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Validation(format!("D must be a finite positive real, got {d}")));
        }
        Ok(Source::Limit { s, d })
    }

    /// Parses a source descriptor: `multinomial`, `dirichlet` or `limit`.
    pub fn from_descriptor(kind: &str, s: usize, n: Option<u64>, d: f64) -> Result<Self> {
        match kind.trim().to_ascii_lowercase().as_str() {
            "limit" | "asymptotic" => Source::limit(s, d),
            other => {
                let family: Family = other.parse()?;
                let n = n.ok_or_else(|| Error::Validation(format!("{family} source requires n")))?;
                Source::finite(family, SimplexVector::uniform(s)?, n)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Source::Multinomial { p, .. } | Source::Dirichlet { p, .. } => p.dim(),
            Source::Limit { s, .. } => *s,
        }
    }

    fn sampler(&self) -> Result<Sampler<'_>> {
        Ok(match self {
            Source::Multinomial { p, n } => Sampler::Multinomial { p: p.entries(), n: *n },
            Source::Dirichlet { p, n } => {
                let alpha = p.entries().iter().map(|&x| x * *n as f64).collect();
                Sampler::Dirichlet { p: p.entries(), alpha }
            }
            Source::Limit { s, d } => Sampler::Limit { u: helmert_diagonalizer(*s)?, d: *d },
        })
    }
}

enum Sampler<'a> {
    Multinomial { p: &'a [f64], n: u64 },
    Dirichlet { p: &'a [f64], alpha: Vec<f64> },
    Limit { u: OrthogonalDiagonalizer, d: f64 },
}

impl Sampler<'_> {
    fn draw(&self, key: StreamKey) -> f64 {
        let mut rng = key.rng();
        match self {
            Sampler::Multinomial { p, n } => {
                let c = multinomial_with(p, *n, &mut rng);
                l1_counts(c.counts(), *n, p)
            }
            Sampler::Dirichlet { p, alpha } => l1_raw(dirichlet_with(alpha, &mut rng).entries(), p),
            Sampler::Limit { u, d } => u.z_from_w(&u.draw_w(&mut rng), *d),
        }
    }
}

/// Empirical exceedance probability `P(X ≥ threshold)` with a Clopper–Pearson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub threshold: f64,
    pub exceedance_count: u64,
    pub trials: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
}

impl TailEstimate {
    pub fn from_counts(threshold: f64, exceedance_count: u64, trials: u64, ci_level: f64) -> Result<Self> {
        let (ci_low, ci_high) = clopper_pearson(exceedance_count, trials, ci_level)?;
        Ok(Self {
            threshold,
            exceedance_count,
            trials,
            point: exceedance_count as f64 / trials as f64,
            ci_low,
            ci_high,
            ci_level,
        })
    }
}

/// Empirical CDF on a grid with a uniform DKW band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileCurve {
    pub grid: Vec<f64>,
    pub cdf_estimates: Vec<f64>,
    pub dkw_halfwidth: f64,
    pub band_alpha: f64,
    pub trials: u64,
}

impl QuantileCurve {
    pub fn band(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cdf_estimates
            .iter()
            .map(|&f| ((f - self.dkw_halfwidth).max(0.0), (f + self.dkw_halfwidth).min(1.0)))
    }
}

/// Sample mean with a normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Violated,
    Consistent,
    Inconclusive,
}

impl Outcome {
    /// Violated iff `ci_low > δ`; Consistent iff `ci_high ≤ δ`.
    pub fn classify(estimate: &TailEstimate, claimed_delta: f64) -> Self {
        if estimate.ci_low > claimed_delta {
            Outcome::Violated
        } else if estimate.ci_high <= claimed_delta {
            Outcome::Consistent
        } else {
            Outcome::Inconclusive
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Violated => "Violated",
            Outcome::Consistent => "Consistent",
            Outcome::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub spec: BoundSpec,
    pub bound: BoundEvaluation,
    pub estimate: TailEstimate,
    pub claimed_delta: f64,
    pub outcome: Outcome,
}

/// Runs trials on a fixed number of workers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimator {
    workers: Option<usize>,
    ci_level: f64,
}

impl Default for Estimator {
    fn default() -> Self {
        Self { workers: None, ci_level: DEFAULT_CI_LEVEL }
    }
}

impl Estimator {
    /// `workers = None` uses rayon's global pool.
    pub fn new(workers: Option<usize>) -> Self {
        Self { workers, ..Self::default() }
    }

    pub fn with_ci_level(mut self, level: f64) -> Result<Self> {
        stats::check_level(level)?;
        self.ci_level = level;
        Ok(self)
    }

    pub fn ci_level(&self) -> f64 {
        self.ci_level
    }

    fn run<T: Send, F: Fn() -> T + Send>(&self, f: F) -> Result<T> {
        match self.workers {
            None => Ok(f()),
            Some(0) => Err(Error::Validation("worker count must be >= 1".into())),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(|e| Error::Validation(format!("cannot start {w} workers: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }

    /// Per-trial values of `source`, in trial order.
    pub fn sample(&self, source: &Source, trials: u64, master_seed: u64) -> Result<Vec<f64>> {
        if trials == 0 {
            return Err(Error::Validation("trials must be >= 1".into()));
        }
        let sampler = source.sampler()?;
        self.run(|| {
            (0..trials).into_par_iter().map(|i| sampler.draw(StreamKey::new(master_seed, i))).collect()
        })
    }

    pub fn tail(&self, source: &Source, threshold: f64, trials: u64, master_seed: u64) -> Result<TailEstimate> {
        let values = self.sample(source, trials, master_seed)?;
        tail_from_values(&values, threshold, self.ci_level)
    }

    pub fn quantile_curve(
        &self,
        source: &Source,
        grid: &[f64],
        trials: u64,
        master_seed: u64,
        band_alpha: f64,
    ) -> Result<QuantileCurve> {
        check_grid(grid)?;
        let values = self.sample(source, trials, master_seed)?;
        curve_from_values(values, grid, band_alpha)
    }

    pub fn mean(&self, source: &Source, trials: u64, master_seed: u64) -> Result<MeanEstimate> {
        let values = self.sample(source, trials, master_seed)?;
        mean_from_values(&values, self.ci_level)
    }

    /// Estimates `P(‖p̂ − p‖₁ ≥ ε)` for uniform `p` and classifies the claim `≤ δ`.
    pub fn falsify(&self, spec: &BoundSpec, family: Family, trials: u64, master_seed: u64) -> Result<Verdict> {
        if trials < MIN_FALSIFY_TRIALS {
            return Err(Error::Validation(format!("falsification needs >= {MIN_FALSIFY_TRIALS} trials, got {trials}")));
        }
        let spec = BoundSpec::new(spec.family, spec.n, spec.s, spec.delta)?;
        let bound = spec.evaluate()?;
        let source = Source::finite(family, SimplexVector::uniform(spec.s)?, spec.n)?;
        let estimate = self.tail(&source, bound.epsilon, trials, master_seed)?;
        Ok(Verdict { spec, bound, estimate, claimed_delta: spec.delta, outcome: Outcome::classify(&estimate, spec.delta) })
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Validation("threshold grid is empty".into()));
    }
    if grid.iter().any(|x| x.is_nan()) {
        return Err(Error::Validation("threshold grid contains NaN".into()));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Validation(format!("threshold grid is not ascending at index {}", i + 1)));
    }
    Ok(())
}

pub fn tail_from_values(values: &[f64], threshold: f64, ci_level: f64) -> Result<TailEstimate> {
    let hits = values.iter().filter(|&&x| x >= threshold).count() as u64;
    TailEstimate::from_counts(threshold, hits, values.len() as u64, ci_level)
}

/// Empirical CDF `#{x ≤ t}/N` on an ascending grid.
pub fn curve_from_values(mut values: Vec<f64>, grid: &[f64], band_alpha: f64) -> Result<QuantileCurve> {
    check_grid(grid)?;
    let trials = values.len() as u64;
    let dkw = dkw_halfwidth(trials, band_alpha)?;
    values.sort_by(f64::total_cmp);
    let cdf_estimates =
        grid.iter().map(|&t| values.partition_point(|&x| x <= t) as f64 / trials as f64).collect();
    Ok(QuantileCurve { grid: grid.to_vec(), cdf_estimates, dkw_halfwidth: dkw, band_alpha, trials })
}

pub fn mean_from_values(values: &[f64], ci_level: f64) -> Result<MeanEstimate> {
    if values.is_empty() {
        return Err(Error::Validation("trials must be >= 1".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let std_error = (var / n).sqrt();
    let z = normal_critical(ci_level)?;
    Ok(MeanEstimate { mean, std_error, ci_low: mean - z * std_error, ci_high: mean + z * std_error, trials: values.len() as u64 })
}

/// [`Estimator::tail`] on the global pool at the default level.
pub fn estimate_tail_probability(source: &Source, threshold: f64, trials: u64, master_seed: u64) -> Result<TailEstimate> {
    Estimator::default().tail(source, threshold, trials, master_seed)
}

pub fn estimate_quantile_curve(
    source: &Source,
    grid: &[f64],
    trials: u64,
    master_seed: u64,
    band_alpha: f64,
) -> Result<QuantileCurve> {
    Estimator::default().quantile_curve(source, grid, trials, master_seed, band_alpha)
}

pub fn falsify_bound(spec: &BoundSpec, trials: u64, master_seed: u64) -> Result<Verdict> {
    Estimator::default().falsify(spec, Family::Multinomial, trials, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotic::{expected_z_s, lipschitz_quantile_bound};
    use crate::bounds::BoundFamily;
    use proptest::prelude::*;

    fn uniform_multinomial(s: usize, n: u64) -> Source {
        Source::finite(Family::Multinomial, SimplexVector::uniform(s).unwrap(), n).unwrap()
    }

    #[test]
    fn trivial_thresholds() {
        let sources = [
            uniform_multinomial(3, 10),
            Source::finite(Family::Dirichlet, SimplexVector::uniform(3).unwrap(), 10).unwrap(),
            Source::limit(4, 1.0).unwrap(),
        ];
        for src in &sources {
            assert_eq!(estimate_tail_probability(src, -1.0, 500, 1).unwrap().point, 1.0);
            assert_eq!(estimate_tail_probability(src, f64::INFINITY, 500, 1).unwrap().point, 0.0);
        }
        assert!(estimate_tail_probability(&sources[0], 0.5, 0, 1).is_err());
        assert!(Source::from_descriptor("poisson", 3, Some(5), 1.0).is_err());
        assert!(Source::from_descriptor("multinomial", 3, None, 1.0).is_err());
        assert!(Source::from_descriptor("limit", 3, None, 1.0).is_ok());
    }

    #[test]
    fn two_draws_of_a_fair_coin() {
        let est = estimate_tail_probability(&uniform_multinomial(2, 2), 1.0, 20_000, 3).unwrap();
        let exact = exact_tail_small(&SimplexVector::uniform(2).unwrap(), 2, 1.0).unwrap();
        assert!((exact - 0.5).abs() < 1e-15);
        assert!(est.ci_low <= exact && exact <= est.ci_high, "{est:?}");
    }

    #[test]
    fn s3_n6_matches_exact_oracle() {
        let p = SimplexVector::uniform(3).unwrap();
        let exact = exact_tail_small(&p, 6, 2.0 / 3.0).unwrap();
        let est = estimate_tail_probability(&uniform_multinomial(3, 6), 2.0 / 3.0, 1_000_000, 11).unwrap();
        assert!(est.ci_low <= exact && exact <= est.ci_high, "exact {exact} vs {est:?}");
    }

    #[test]
    fn curve_examples() {
        let src = Source::limit(5, 1.0).unwrap();
        let c = estimate_quantile_curve(&src, &[-1.0], 10_000, 5, 0.05).unwrap();
        assert_eq!(c.cdf_estimates, vec![0.0]);
        assert!((c.dkw_halfwidth - 0.013581).abs() < 1e-6);
        assert!(estimate_quantile_curve(&src, &[1.0, 0.5], 100, 5, 0.05).is_err());
        let grid: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let c = estimate_quantile_curve(&src, &grid, 5_000, 5, 0.05).unwrap();
        assert!(c.cdf_estimates.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn limit_quantile_at_s50() {
        // Lower 5% quantile of Z_S against the mean-based Lipschitz bound.
        let values = Estimator::default().sample(&Source::limit(50, 1.0).unwrap(), 100_000, 17).unwrap();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let q05 = empirical_quantile(&sorted, 0.05);
        let slack = dkw_halfwidth(100_000, 0.05).unwrap();
        let lower = empirical_quantile(&sorted, (0.05 - slack).max(0.0));
        assert!(lower >= lipschitz_quantile_bound(50, 0.05).unwrap(), "q05 = {q05}");
        assert!(q05 < expected_z_s(50).unwrap());
    }

    #[test]
    fn falsify_examples() {
        let agrawal = BoundSpec::new(BoundFamily::Agrawal, 10_000, 50, 0.05).unwrap();
        let v = falsify_bound(&agrawal, 10_000, 42).unwrap();
        assert_eq!(v.outcome, Outcome::Violated);
        assert!(v.estimate.point >= 0.5);

        let weissman = BoundSpec::new(BoundFamily::WeissmanUnion, 100, 2, 0.05).unwrap();
        assert_eq!(falsify_bound(&weissman, 100_000, 42).unwrap().outcome, Outcome::Consistent);
        let exact = exact_tail_small(&SimplexVector::uniform(2).unwrap(), 100, weissman.evaluate().unwrap().epsilon).unwrap();
        assert!(exact <= 0.05);

        let small = BoundSpec::new(BoundFamily::Agrawal, 100, 2, 0.5).unwrap();
        let exact =
            exact_tail_small(&SimplexVector::uniform(2).unwrap(), 100, small.evaluate().unwrap().epsilon).unwrap();
        assert!(exact <= 0.5, "exact exceedance {exact}");
        let v = falsify_bound(&small, 100_000, 42).unwrap();
        assert_ne!(v.outcome, Outcome::Violated);

        assert!(falsify_bound(&small, 99, 42).is_err());
    }

    #[test]
    fn worker_count_does_not_change_values() {
        let src = uniform_multinomial(7, 1000);
        let a = Estimator::new(Some(1)).sample(&src, 3_000, 9).unwrap();
        let b = Estimator::new(Some(4)).sample(&src, 3_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(Estimator::new(Some(0)).sample(&src, 10, 9).is_err());
    }

    #[test]
    fn clopper_pearson_coverage_against_exact() {
        // 95% intervals from 400-trial runs should cover the exact tail in >= 93% of 1000 repetitions.
        let p = SimplexVector::uniform(3).unwrap();
        let threshold = 0.5;
        let exact = exact_tail_small(&p, 8, threshold).unwrap();
        let values = Estimator::default().sample(&uniform_multinomial(3, 8), 400_000, 1234).unwrap();
        let covered = values
            .chunks(400)
            .filter(|chunk| {
                let est = tail_from_values(chunk, threshold, 0.95).unwrap();
                est.ci_low <= exact && exact <= est.ci_high
            })
            .count();
        assert!(covered >= 930, "coverage {covered}/1000");
    }

    #[test]
    fn mean_estimate_brackets_expected_limit_mean() {
        let m = Estimator::default().mean(&Source::limit(10, 1.0).unwrap(), 200_000, 8).unwrap();
        let e = expected_z_s(10).unwrap();
        assert!((m.mean - e).abs() < 3.0 * m.std_error, "{m:?}");
        assert!(m.ci_low < m.mean && m.mean < m.ci_high);
    }

    proptest! {
        #[test]
        fn verdict_trichotomy(k in 0u64..=200, extra in 0u64..200, delta in 0.0f64..1.0) {
            let trials = k + extra + 1;
            let est = TailEstimate::from_counts(0.0, k, trials, 0.95).unwrap();
            prop_assert!(est.ci_low <= est.point && est.point <= est.ci_high);
            let outcome = Outcome::classify(&est, delta);
            let flags = [est.ci_low > delta, est.ci_high <= delta];
            prop_assert!(!(flags[0] && flags[1]));
            match outcome {
                Outcome::Violated => prop_assert!(flags[0]),
                Outcome::Consistent => prop_assert!(flags[1]),
                Outcome::Inconclusive => prop_assert!(!flags[0] && !flags[1]),
            }
        }
    }
}
