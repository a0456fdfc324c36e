//! Limit law of `√n·Z_n` for uniform `p`.
//!
//! With `p = e/S`, the centred and scaled counts converge to
//! `Y ~ N(0, Σ)` where `Σ = I − (eeᵀ − I)/(S − 1)` has unit diagonal and
//! `−1/(S − 1)` off the diagonal, and
//!
//! ```text
//! Z_S = D·√((S − 1)/S²)·Σᵢ max(Yᵢ, 0).
//! ```
//!
//! `Σ` is singular (`Σe = 0`), so `Y` is never drawn through a Cholesky
//! factor. Instead the Helmert matrix `U` diagonalises it,
//! `UΣUᵀ = blockdiag(S/(S−1)·I_{S−1}, 0)`, and `Y = √(S/(S−1))·UᵀW` where `W`
//! has `S − 1` i.i.d. standard normal coordinates and a zero last coordinate.
//! Products with `U` and `Uᵀ` run in O(S) through prefix/suffix sums.

use std::f64::consts::PI;

use crate::distributions::{normals_with, StreamKey};
use crate::error::{Error, Result};

fn check_dim(s: usize) -> Result<()> {
    if s < 2 {
        return Err(Error::Validation(format!("limit law requires S >= 2, got {s}")));
    }
    Ok(())
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let other_row = &other.data[k * n..(k + 1) * n];
                for (r, b) in row.iter_mut().zip(other_row) {
                    *r += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len());
        self.data.chunks(self.dim).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Covariance of the limiting Gaussian vector `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCovariance {
    pub s: usize,
    pub matrix: DenseMatrix,
}

pub fn limit_covariance(s: usize) -> Result<LimitCovariance> {
    check_dim(s)?;
    let off = -1.0 / (s as f64 - 1.0);
    let mut matrix = DenseMatrix::zeros(s);
    for i in 0..s {
        for j in 0..s {
            matrix.data[i * s + j] = if i == j { 1.0 } else { off };
        }
    }
    Ok(LimitCovariance { s, matrix })
}

/// The Helmert matrix of order `S`.
///
/// Row `k` (1-based, `k < S`) holds `1/√(k(k+1))` in its first `k` columns and
/// `−k/√(k(k+1))` in column `k + 1`; the last row is `e/√S`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalDiagonalizer {
    s: usize,
    /// `coef[k] = 1/√(k(k+1))` for `k = 1..S−1`; `coef[0]` is unused.
    coef: Vec<f64>,
    inv_sqrt_s: f64,
}

pub fn helmert_diagonalizer(s: usize) -> Result<OrthogonalDiagonalizer> {
    check_dim(s)?;
    let coef = (0..s).map(|k| if k == 0 { 0.0 } else { 1.0 / ((k * (k + 1)) as f64).sqrt() }).collect();
    Ok(OrthogonalDiagonalizer { s, coef, inv_sqrt_s: 1.0 / (s as f64).sqrt() })
}

impl OrthogonalDiagonalizer {
    pub fn dim(&self) -> usize {
        self.s
    }

    pub fn matrix(&self) -> DenseMatrix {
        let s = self.s;
        let mut m = DenseMatrix::zeros(s);
        for k in 1..s {
            let row = k - 1;
            for col in 0..k {
                m.data[row * s + col] = self.coef[k];
            }
            m.data[row * s + k] = -(k as f64) * self.coef[k];
        }
        for col in 0..s {
            m.data[(s - 1) * s + col] = self.inv_sqrt_s;
        }
        m
    }

    /// `Uᵀw` in O(S).
    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        let s = self.s;
        assert_eq!(w.len(), s, "vector length must equal S");
        let mut out = vec![0.0; s];
        let base = w[s - 1] * self.inv_sqrt_s;
        // suffix = Σ_{k > j} coef[k]·w[k−1]
        let mut suffix = 0.0;
        for j in (0..s).rev() {
            let diag = if j >= 1 { j as f64 * self.coef[j] * w[j - 1] } else { 0.0 };
            out[j] = base + suffix - diag;
            if j >= 1 {
                suffix += self.coef[j] * w[j - 1];
            }
        }
        out
    }

    /// `Uy` in O(S).
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let s = self.s;
        assert_eq!(y.len(), s, "vector length must equal S");
        let mut out = vec![0.0; s];
        let mut prefix = 0.0;
        for k in 1..s {
            prefix += y[k - 1];
            out[k - 1] = self.coef[k] * (prefix - k as f64 * y[k]);
        }
        out[s - 1] = (prefix + y[s - 1]) * self.inv_sqrt_s;
        out
    }

    /// `Y = √(S/(S−1))·UᵀW`.
    pub fn y_from_w(&self, w: &[f64]) -> Vec<f64> {
        let scale = (self.s as f64 / (self.s as f64 - 1.0)).sqrt();
        let mut y = self.apply_transpose(w);
        for v in &mut y {
            *v *= scale;
        }
        y
    }

    /// `g(w) = eᵀ(Uᵀw)⁺/√S`, a 1-Lipschitz function of `w`.
    pub fn lipschitz_functional(&self, w: &[f64]) -> f64 {
        positive_part_sum(&self.apply_transpose(w)) * self.inv_sqrt_s
    }

    /// `Z_S` from a whitened vector, through the `Y` representation
    /// `D·√((S−1)/S²)·‖Y⁺‖₁`.
    pub fn z_from_w(&self, w: &[f64], d: f64) -> f64 {
        let s = self.s as f64;
        d * ((s - 1.0) / (s * s)).sqrt() * positive_part_sum(&self.y_from_w(w))
    }

    /// Draws `W` (with a zero last coordinate) from a stream.
    pub(crate) fn draw_w<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut w = normals_with(self.s - 1, rng);
        w.push(0.0);
        w
    }
}

#[inline]
pub(crate) fn positive_part_sum(v: &[f64]) -> f64 {
    v.iter().map(|x| x.max(0.0)).sum()
}

/// One draw of `Z_S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSample {
    pub z: f64,
    pub s: usize,
    pub d: f64,
}

pub fn sample_limit_y(s: usize, key: StreamKey) -> Result<Vec<f64>> {
    let u = helmert_diagonalizer(s)?;
    let w = u.draw_w(&mut key.rng());
    Ok(u.y_from_w(&w))
}

pub fn sample_z_s(s: usize, d: f64, key: StreamKey) -> Result<LimitSample> {
    let u = helmert_diagonalizer(s)?;
    sample_z_s_with(&u, d, key)
}

/// [`sample_z_s`] with a prebuilt diagonalizer.
pub fn sample_z_s_with(u: &OrthogonalDiagonalizer, d: f64, key: StreamKey) -> Result<LimitSample> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Validation(format!("D must be a finite positive real, got {d}")));
    }
    let w = u.draw_w(&mut key.rng());
    Ok(LimitSample { z: u.z_from_w(&w, d), s: u.dim(), d })
}

/// `E[Z_S] = √((S−1)/(2π))` at `D = 1`.
pub fn expected_z_s(s: usize) -> Result<f64> {
    check_dim(s)?;
    Ok(((s as f64 - 1.0) / (2.0 * PI)).sqrt())
}

/// `√(2(S−1)/π) − √(2·ln(2/δ))`, returned as-is even when negative.
pub fn anticoncentration_threshold(s: usize, delta: f64) -> Result<f64> {
    check_dim(s)?;
    check_open_delta(delta)?;
    Ok((2.0 * (s as f64 - 1.0) / PI).sqrt() - lipschitz_deviation(delta))
}

/// `E[Z_S] − √(2·ln(2/δ))`: the lower quantile bound obtained by combining the
/// closed-form mean with the two-sided Gaussian Lipschitz tail at `D = 1`.
///
/// Note that [`anticoncentration_threshold`] uses `√(2(S−1)/π) = 2·E[Z_S]`
/// as its leading term and therefore sits above the mean once `S` is large.
pub fn lipschitz_quantile_bound(s: usize, delta: f64) -> Result<f64> {
    check_open_delta(delta)?;
    Ok(expected_z_s(s)? - lipschitz_deviation(delta))
}

fn check_open_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `t` solving `2·exp(−t²/2) = δ`.
fn lipschitz_deviation(delta: f64) -> f64 {
    (2.0 * (2.0 / delta).ln()).sqrt()
}

/// `2·exp(−t²/2)`.
pub fn gaussian_lipschitz_tail(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    Ok(2.0 * (-0.5 * t * t).exp())
}
