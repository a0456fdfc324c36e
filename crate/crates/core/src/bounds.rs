//! Closed-form ℓ1 deviation thresholds ε(n, S, δ).
//!
//! Each family claims `P(‖p̂ − p‖₁ ≥ ε) ≤ δ` for `p̂ ~ Multinomial(n, p)/n`:
//!
//! | family          | ε                              | regime                  |
//! |-----------------|--------------------------------|-------------------------|
//! | WeissmanUnion   | √(2S·ln(2/δ)/n)                | S ≥ 2                   |
//! | WeissmanExact   | √(2·ln((2^S − 2)/δ)/n)         | S ≥ 2                   |
//! | Devroye         | 5·√(ln(3/δ)/n)                 | δ ≤ 3·exp(−4S/5)        |
//! | Agrawal         | √(2·ln(1/δ)/n)                 | any δ (disputed)        |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The largest possible ℓ1 distance between two probability vectors.
pub const L1_DIAMETER: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundFamily {
    WeissmanUnion,
    WeissmanExact,
    Devroye,
    Agrawal,
}

impl BoundFamily {
    pub const ALL: [BoundFamily; 4] =
        [BoundFamily::WeissmanUnion, BoundFamily::WeissmanExact, BoundFamily::Devroye, BoundFamily::Agrawal];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundFamily::WeissmanUnion => "weissman-union",
            BoundFamily::WeissmanExact => "weissman-exact",
            BoundFamily::Devroye => "devroye",
            BoundFamily::Agrawal => "agrawal",
        }
    }
}

impl fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "weissman-union" | "weissmanunion" | "union" => Ok(BoundFamily::WeissmanUnion),
            "weissman-exact" | "weissmanexact" | "exact" => Ok(BoundFamily::WeissmanExact),
            "devroye" => Ok(BoundFamily::Devroye),
            "agrawal" => Ok(BoundFamily::Agrawal),
            other => Err(Error::Validation(format!(
                "unknown bound family '{other}' (expected weissman-union, weissman-exact, devroye or agrawal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeissmanForm {
    Union,
    Exact,
}

/// One bound family instantiated at `(n, S, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub family: BoundFamily,
    pub n: u64,
    pub s: usize,
    pub delta: f64,
}

impl BoundSpec {
    pub fn new(family: BoundFamily, n: u64, s: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("bound requires n >= 1".into()));
        }
        if s < 2 {
            return Err(Error::Validation(format!("bound requires S >= 2, got {s}")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Validation(format!("bound requires delta in (0, 1], got {delta}")));
        }
        Ok(Self { family, n, s, delta })
    }

    pub fn evaluate(&self) -> Result<BoundEvaluation> {
        let epsilon = match self.family {
            BoundFamily::WeissmanUnion => weissman_epsilon(self.n, self.s, self.delta, WeissmanForm::Union)?,
            BoundFamily::WeissmanExact => weissman_epsilon(self.n, self.s, self.delta, WeissmanForm::Exact)?,
            BoundFamily::Devroye => devroye_epsilon(self.n, self.delta)?,
            BoundFamily::Agrawal => agrawal_epsilon(self.n, self.delta)?,
        };
        let valid = match self.family {
            BoundFamily::Devroye => devroye_valid(self.s, self.delta),
            _ => true,
        };
        Ok(BoundEvaluation { spec: *self, epsilon, valid, vacuous: epsilon > L1_DIAMETER })
    }
}

/// ε for a [`BoundSpec`]. `valid` is the Devroye regime flag (always true for the
/// other families); `vacuous` marks ε beyond the ℓ1 diameter 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub spec: BoundSpec,
    pub epsilon: f64,
    pub valid: bool,
    pub vacuous: bool,
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    Ok(())
}

fn check_delta(delta: f64, max: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be > 0, got {delta}")));
    }
    if !(delta <= max) {
        return Err(Error::Domain(format!("delta must be <= {max}, got {delta}")));
    }
    Ok(())
}

/// `ln(2^S − 2)`.
fn ln_two_pow_minus_two(s: usize) -> f64 {
    if s <= 60 {
        (((1u64 << s) - 2) as f64).ln()
    } else {
        s as f64 * std::f64::consts::LN_2 + (-(2.0_f64).powi(1 - s as i32)).ln_1p()
    }
}

pub fn weissman_epsilon(n: u64, s: usize, delta: f64, form: WeissmanForm) -> Result<f64> {
    check_n(n)?;
    if s < 2 {
        return Err(Error::Domain(format!("Weissman bound requires S >= 2, got {s}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be > 0, got {delta}")));
    }
    let radicand = match form {
        WeissmanForm::Union => 2.0 * s as f64 * (2.0 / delta).ln(),
        WeissmanForm::Exact => 2.0 * (ln_two_pow_minus_two(s) - delta.ln()),
    };
    if radicand < 0.0 {
        return Err(Error::Domain(format!("negative radicand for delta = {delta}, S = {s}")));
    }
    Ok((radicand / n as f64).sqrt())
}

pub fn devroye_epsilon(n: u64, delta: f64) -> Result<f64> {
    check_n(n)?;
    check_delta(delta, 3.0)?;
    Ok(5.0 * ((3.0 / delta).ln().max(0.0) / n as f64).sqrt())
}

/// True iff `δ ≤ 3·exp(−4S/5)`, the regime where the Devroye bound is stated.
pub fn devroye_valid(s: usize, delta: f64) -> bool {
    delta <= 3.0 * (-0.8 * s as f64).exp()
}

pub fn agrawal_epsilon(n: u64, delta: f64) -> Result<f64> {
    check_n(n)?;
    check_delta(delta, 1.0)?;
    Ok((2.0 * (1.0 / delta).ln().max(0.0) / n as f64).sqrt())
}
