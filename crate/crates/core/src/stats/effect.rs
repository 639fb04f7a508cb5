//! Vargha-Delaney Â12 and its effect-size categories.

use std::fmt;

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};

/// `(#{a > b} + #{a == b}/2) / (|A| |B|)`, exactly.
pub fn a12_exact<T: PartialOrd>(a: &[T], b: &[T]) -> Result<Rational64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let mut twice = 0i64;
    for x in a {
        for y in b {
            if x > y {
                twice += 2;
            } else if x == y {
                twice += 1;
            }
        }
    }
    Ok(Rational64::new(twice, 2 * (a.len() * b.len()) as i64))
}

/// Probability that a value drawn from `a` exceeds one drawn from `b`, ties counting half.
pub fn a12<T: PartialOrd>(a: &[T], b: &[T]) -> Result<f64> {
    let r = a12_exact(a, b)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectSize {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectSize {
    pub fn from_d(d: f64) -> Self {
        if d < 0.147 {
            EffectSize::Negligible
        } else if d < 0.33 {
            EffectSize::Small
        } else if d < 0.474 {
            EffectSize::Medium
        } else {
            EffectSize::Large
        }
    }

    /// Category of `d = 2 |a12 - 0.5|`.
    pub fn from_a12(a12: f64) -> Self {
        Self::from_d(2.0 * (a12 - 0.5).abs())
    }
}

impl fmt::Display for EffectSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectSize::Negligible => "negligible",
            EffectSize::Small => "small",
            EffectSize::Medium => "medium",
            EffectSize::Large => "large",
        })
    }
}
