//! Reproducible samplers for multinomial counts, Dirichlet vectors and
//! standard Gaussian vectors.
//!
//! Every sampler is a pure function of its parameters and a [`StreamKey`].
//! A key selects one ChaCha8 stream: the master seed fixes the 256-bit key
//! and the trial index selects the 64-bit stream id, so trial `i` draws the
//! same numbers no matter which worker runs it or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Open01, StandardNormal};

use crate::error::{Error, Result};

/// Absolute tolerance on the sum of a probability vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A probability vector on the (S−1)-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector {
    entries: Vec<f64>,
}

impl SimplexVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Validation("simplex vector must have at least one entry".into()));
        }
        if let Some((i, x)) = entries.iter().enumerate().find(|(_, x)| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::Validation(format!("simplex entry {i} is {x}, expected a finite value >= 0")));
        }
        let total = compensated_sum(entries.iter().copied());
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Validation(format!(
                "simplex entries sum to {total:.17}, expected 1 within {SIMPLEX_TOLERANCE:e}"
            )));
        }
        Ok(Self { entries })
    }

    /// Uniform distribution over `s` outcomes.
    pub fn uniform(s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::Validation("dimension must be >= 1".into()));
        }
        Ok(Self { entries: vec![1.0 / s as f64; s] })
    }

    /// Entries that are already known to lie on the simplex up to rounding.
    pub(crate) fn from_normalized(entries: Vec<f64>) -> Self {
        debug_assert!((compensated_sum(entries.iter().copied()) - 1.0).abs() <= 1e-9);
        Self { entries }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.entries
    }
}

/// Multinomial outcome counts; `counts` always sums to `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    counts: Vec<u64>,
    n: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let n = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::Validation("count total overflows u64".into()))?;
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self { master_seed, trial_index }
    }

    /// The generator backing this key, positioned at the start of its stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trial_index);
        rng
    }
}

/// Draws counts from Multinomial(n, p) using sequential conditional binomials.
pub fn sample_multinomial(p: &SimplexVector, n: u64, key: StreamKey) -> CountVector {
    let mut rng = key.rng();
    multinomial_with(p.entries(), n, &mut rng)
}

pub(crate) fn multinomial_with<R: Rng + ?Sized>(p: &[f64], n: u64, rng: &mut R) -> CountVector {
    let s = p.len();
    let mut counts = vec![0u64; s];
    let mut remaining = n;
    let mut mass_left = 1.0_f64;
    for (i, &pi) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == s {
            counts[i] = remaining;
            remaining = 0;
            break;
        }
        let q = if mass_left > 0.0 { (pi / mass_left).clamp(0.0, 1.0) } else { 1.0 };
        let x = if q == 0.0 {
            0
        } else if q == 1.0 {
            remaining
        } else {
            // q is strictly inside (0, 1) so construction cannot fail.
            Binomial::new(remaining, q).expect("binomial parameters").sample(rng)
        };
        counts[i] = x;
        remaining -= x;
        mass_left -= pi;
    }
    debug_assert_eq!(remaining, 0);
    CountVector { counts, n }
}

/// `counts / n` as a point on the simplex.
pub fn empirical_frequency(c: &CountVector) -> Result<SimplexVector> {
    if c.n == 0 {
        return Err(Error::Validation("empirical frequency is undefined for n = 0".into()));
    }
    let n = c.n as f64;
    Ok(SimplexVector::from_normalized(c.counts.iter().map(|&k| k as f64 / n).collect()))
}

/// Draws a Dirichlet(alpha) vector.
///
/// Gamma variates are generated in log space (`Gamma(a) = Gamma(a + 1) · U^(1/a)`
/// for `a < 1`) and normalised with a log-sum-exp, so tiny concentration
/// parameters never underflow the whole vector to zero.
pub fn sample_dirichlet(alpha: &[f64], key: StreamKey) -> Result<SimplexVector> {
    validate_alpha(alpha)?;
    let mut rng = key.rng();
    Ok(dirichlet_with(alpha, &mut rng))
}

pub(crate) fn validate_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(Error::Validation("dirichlet parameter vector is empty".into()));
    }
    if let Some((i, a)) = alpha.iter().enumerate().find(|(_, a)| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::Validation(format!("dirichlet alpha[{i}] = {a}, expected > 0")));
    }
    Ok(())
}

pub(crate) fn dirichlet_with<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> SimplexVector {
    if alpha.len() == 1 {
        return SimplexVector::from_normalized(vec![1.0]);
    }
    let logs: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            if a >= 1.0 {
                let g: f64 = Gamma::new(a, 1.0).expect("gamma shape").sample(rng);
                g.ln()
            } else {
                let g: f64 = Gamma::new(a + 1.0, 1.0).expect("gamma shape").sample(rng);
                let u: f64 = Open01.sample(rng);
                g.ln() + u.ln() / a
            }
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total = compensated_sum(weights.iter().copied());
    for w in &mut weights {
        *w /= total;
    }
    SimplexVector::from_normalized(weights)
}

/// `dim` i.i.d. standard normal variates.
pub fn sample_standard_normal_vector(dim: usize, key: StreamKey) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::Validation("gaussian vector dimension must be >= 1".into()));
    }
    let mut rng = key.rng();
    Ok(normals_with(dim, &mut rng))
}

pub(crate) fn normals_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}
