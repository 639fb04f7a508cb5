//! Quality indicators and statistical tests for comparing repair runs.

pub mod effect;
pub mod hypervolume;
pub mod wilcoxon;

use serde::Serialize;

use crate::error::Result;
use crate::scalar::Real;

pub use effect::{a12, a12_exact, EffectSize};
pub use hypervolume::{confidence_hypervolume, hypervolume};
pub use wilcoxon::{exact_u_counts, rank_sum, wilcoxon_rank_sum, Alternative, RankSum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StatResult {
    pub a12: f64,
    pub p_value: f64,
    pub effect: EffectSize,
}

/// Â12 of `a` over `b`, two-sided rank-sum p-value and effect category.
pub fn compare<T: Real>(a: &[T], b: &[T]) -> Result<StatResult> {
    let a12 = a12(a, b)?;
    Ok(StatResult {
        a12,
        p_value: wilcoxon_rank_sum(a, b)?,
        effect: EffectSize::from_a12(a12),
    })
}
