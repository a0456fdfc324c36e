//! Concentration and anticoncentration of the ℓ1 deviation between an
//! empirical multinomial distribution and its mean.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: reproducible multinomial, Dirichlet and Gaussian samplers
//!   keyed by a [`StreamKey`](distributions::StreamKey).
//! * [`deviation`]: the `Z_n` statistic in its max form and its ℓ1 form.
//! * [`bounds`]: closed-form deviation thresholds ε(n, S, δ).
//! * [`asymptotic`]: the `n → ∞` limit law for uniform `p` built on the Helmert basis.
//! * [`montecarlo`]: tail/quantile estimation, the exact enumeration oracle and
//!   bound falsification verdicts.
//! * [`cli`]: experiment configs, the experiment runner and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod bounds;
pub mod cli;
pub mod deviation;
pub mod distributions;
pub mod error;
pub mod montecarlo;

pub use error::{Error, Result};
