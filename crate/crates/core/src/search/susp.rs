//! Per-parameter impact counters and suspiciousness scores.

use serde::{Deserialize, Serialize};

use crate::scalar::Ratio;

/// Mutations a parameter needs before its score departs from the neutral value.
pub const DEFAULT_N_SUSP: u32 = 5;

/// Effect of a patch relative to its parent and the archive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impact {
    Positive,
    Negative,
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub positive: u64,
    pub negative: u64,
    pub no_impact: u64,
    pub times_mutated: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuspTracker {
    counters: Vec<Counters>,
    n_susp: u32,
}

impl SuspTracker {
    pub fn new(n_params: usize, n_susp: u32) -> Self {
        assert!(n_susp >= 1, "n_susp must be at least 1");
        Self {
            counters: vec![Counters::default(); n_params],
            n_susp,
        }
    }

    pub fn counters(&self, i: usize) -> Counters {
        self.counters[i]
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn n_susp(&self) -> u32 {
        self.n_susp
    }

    /// Neutral 1/2 during warm-up, then `(P + N) / (P + N + S)`.
    pub fn suspiciousness<T: Ratio>(&self, i: usize) -> T {
        let c = self.counters[i];
        let from = |v: u64| T::from_u64(v).expect("counter representable");
        if c.times_mutated < u64::from(self.n_susp) {
            return from(1) / from(2);
        }
        from(c.positive + c.negative) / from(c.positive + c.negative + c.no_impact)
    }

    pub fn scores<T: Ratio>(&self) -> Vec<T> {
        (0..self.counters.len()).map(|i| self.suspiciousness(i)).collect()
    }

    /// Credits `impact` to every mutated parameter.
    pub fn update(&mut self, mutated: &[usize], impact: Impact) {
        for &i in mutated {
            let c = &mut self.counters[i];
            match impact {
                Impact::Positive => c.positive += 1,
                Impact::Negative => c.negative += 1,
                Impact::None => c.no_impact += 1,
            }
            c.times_mutated += 1;
        }
    }
}
