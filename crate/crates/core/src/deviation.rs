//! The deviation statistic `Z_n = max_{v ∈ [0,D]^S} (p̂ − p)ᵀv`.
//!
//! Since `(p̂ − p)ᵀe = 0`, the maximum equals `(D/2)·‖p̂ − p‖₁` and is attained
//! at the vertex that puts `D` on every coordinate where `p̂ᵢ > pᵢ`.

use crate::distributions::SimplexVector;
use crate::error::{Error, Result};

/// `Z_n` together with its ℓ1 form and the maximizing vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationResult {
    pub l1: f64,
    pub z_n: f64,
    pub maximizer: Vec<f64>,
}

fn check_lengths(phat: &[f64], p: &[f64]) -> Result<()> {
    if phat.len() != p.len() {
        return Err(Error::Validation(format!(
            "length mismatch: phat has {} entries, p has {}",
            phat.len(),
            p.len()
        )));
    }
    Ok(())
}

fn check_scale(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Validation(format!("D must be a finite positive real, got {d}")));
    }
    Ok(())
}

/// Plain index-ascending `Σ |aᵢ − bᵢ|` with no validation.
#[inline]
pub(crate) fn l1_raw(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// ℓ1 distance between `counts / n` and `p`, without materialising `p̂`.
#[inline]
pub(crate) fn l1_counts(counts: &[u64], n: u64, p: &[f64]) -> f64 {
    let n = n as f64;
    counts.iter().zip(p).map(|(&c, &q)| (c as f64 / n - q).abs()).sum()
}

pub fn l1_deviation(phat: &SimplexVector, p: &SimplexVector) -> Result<f64> {
    check_lengths(phat.entries(), p.entries())?;
    Ok(l1_raw(phat.entries(), p.entries()))
}

pub fn z_n_value(phat: &SimplexVector, p: &SimplexVector, d: f64) -> Result<f64> {
    check_scale(d)?;
    Ok(0.5 * d * l1_deviation(phat, p)?)
}

/// Vertex of `[0, D]^S` attaining `Z_n`; ties `p̂ᵢ = pᵢ` map to 0.
pub fn maximizer(phat: &SimplexVector, p: &SimplexVector, d: f64) -> Result<Vec<f64>> {
    check_lengths(phat.entries(), p.entries())?;
    check_scale(d)?;
    Ok(phat
        .entries()
        .iter()
        .zip(p.entries())
        .map(|(a, b)| if a - b > 0.0 { d } else { 0.0 })
        .collect())
}

pub fn deviation(phat: &SimplexVector, p: &SimplexVector, d: f64) -> Result<DeviationResult> {
    let l1 = l1_deviation(phat, p)?;
    let maximizer = maximizer(phat, p, d)?;
    Ok(DeviationResult { l1, z_n: 0.5 * d * l1, maximizer })
}

/// `(p̂ − p)ᵀv`.
pub fn objective(phat: &SimplexVector, p: &SimplexVector, v: &[f64]) -> Result<f64> {
    check_lengths(phat.entries(), p.entries())?;
    check_lengths(phat.entries(), v)?;
    Ok(phat.entries().iter().zip(p.entries()).zip(v).map(|((a, b), w)| (a - b) * w).sum())
}
