//! Patch generation: suspiciousness-proportionate parameter choice and mutation.

use rand::Rng;

use crate::config::{random_value, Configuration};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Roulette-wheel choice of a parameter index with probability proportional to its score.
///
/// Indices flagged in `excluded` are skipped. When every remaining score is zero the
/// choice is uniform over the remaining indices.
pub fn select_parameter<T: Real, R: Rng + ?Sized>(scores: &[T], excluded: &[bool], rng: &mut R) -> Result<usize> {
    debug_assert_eq!(scores.len(), excluded.len());
    let open: Vec<usize> = (0..scores.len()).filter(|&i| !excluded[i]).collect();
    if open.is_empty() {
        return Err(Error::AllExcluded);
    }
    let total = open.iter().fold(T::zero(), |acc, &i| acc + scores[i].max(T::zero()));
    if total <= T::zero() {
        return Ok(open[rng.random_range(0..open.len())]);
    }
    let r = T::from_f64(rng.random::<f64>()).expect("unit interval representable") * total;
    let mut cumulative = T::zero();
    let mut last_positive = open[0];
    for &i in &open {
        let s = scores[i].max(T::zero());
        if s > T::zero() {
            cumulative = cumulative + s;
            last_positive = i;
            if r < cumulative {
                return Ok(i);
            }
        }
    }
    // Only reachable through rounding when r lands on the total.
    Ok(last_positive)
}

/// Mutates a copy of `parent`: at least one parameter, then another with probability
/// `0.5^m` after `m` mutations. A parameter is never mutated twice and the new value
/// always differs from the old one.
///
/// Returns the patch and the mutated indices in mutation order.
pub fn generate_patch<R: Rng + ?Sized>(parent: &Configuration, scores: &[f64], rng: &mut R) -> Result<(Configuration, Vec<usize>)> {
    let space = parent.space();
    if scores.len() != space.len() {
        return Err(Error::InvalidArgument(format!(
            "{} suspiciousness scores for {} parameters",
            scores.len(),
            space.len()
        )));
    }
    let mut excluded: Vec<bool> = space.specs().iter().map(|s| s.is_single_valued()).collect();
    let mut patch = parent.clone();
    let mut mutated = Vec::new();
    loop {
        let i = select_parameter(scores, &excluded, rng)?;
        let v = random_value(space.spec(i), rng, Some(parent.get(i)))?;
        patch.set(i, v)?;
        excluded[i] = true;
        mutated.push(i);
        if excluded.iter().all(|&e| e) {
            break;
        }
        let p: f64 = rng.random();
        if p >= 0.5f64.powi(mutated.len() as i32) {
            break;
        }
    }
    Ok((patch, mutated))
}
