//! Archive of improved patches.
//!
//! Guided mode keeps a bounded set of mutually non-dominated entries; unguided mode
//! keeps every evaluated patch.

use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Configuration;
use crate::oracles::{ScoreVector, ORACLE_COUNT};

use super::dominance::{dominates, non_dominated_indices};
use super::susp::Impact;

/// Scores closer than this count as unchanged when classifying impact.
pub const IMPACT_TOLERANCE: f64 = 1e-6;

/// Default guided archive bound: twice the number of oracles.
pub const DEFAULT_ARCHIVE_CAP: usize = 2 * ORACLE_COUNT;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lineage {
    /// Evaluation index of the parent; `None` for the initial configuration.
    pub parent: Option<usize>,
    /// Copy of the parent's score, kept even if the parent leaves the archive.
    pub parent_score: Option<ScoreVector>,
    pub mutated: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArchiveEntry {
    pub patch: Configuration,
    pub score: ScoreVector,
    pub lineage: Lineage,
    pub eval_index: usize,
}

/// What an insertion did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Update {
    /// The candidate was dominated and discarded.
    Rejected,
    Inserted {
        /// Eval indices of entries removed because the candidate dominates them.
        dominated: Vec<usize>,
        /// Eval index of the entry evicted to respect the size bound.
        evicted: Option<usize>,
    },
}

#[derive(Clone, Debug)]
pub struct Archive {
    entries: Vec<ArchiveEntry>,
    cap: Option<usize>,
    filter_dominated: bool,
}

impl Archive {
    /// Non-dominated archive bounded to `cap` entries.
    pub fn guided(cap: usize) -> Self {
        assert!(cap >= 1, "archive cap must be positive");
        Self {
            entries: Vec::new(),
            cap: Some(cap),
            filter_dominated: true,
        }
    }

    /// Archive that keeps every candidate, optionally bounded.
    pub fn unguided(cap: Option<usize>) -> Self {
        Self {
            entries: Vec::new(),
            cap,
            filter_dominated: false,
        }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn is_guided(&self) -> bool {
        self.filter_dominated
    }

    pub fn into_entries(self) -> Vec<ArchiveEntry> {
        self.entries
    }

    /// Inserts `candidate` following the archive's rules.
    pub fn update<R: Rng + ?Sized>(&mut self, candidate: ArchiveEntry, rng: &mut R) -> Update {
        if self.filter_dominated {
            self.update_guided(candidate, rng)
        } else {
            self.update_unguided(candidate, rng)
        }
    }

    fn update_guided<R: Rng + ?Sized>(&mut self, candidate: ArchiveEntry, rng: &mut R) -> Update {
        let c = &candidate.score.conf;
        if self.entries.iter().any(|e| dominates(&e.score.conf, c)) {
            return Update::Rejected;
        }
        let mut dominated = Vec::new();
        self.entries.retain(|e| {
            let gone = dominates(c, &e.score.conf);
            if gone {
                dominated.push(e.eval_index);
            }
            !gone
        });
        self.entries.push(candidate);
        let evicted = self.enforce_cap(rng);
        Update::Inserted { dominated, evicted }
    }

    fn update_unguided<R: Rng + ?Sized>(&mut self, candidate: ArchiveEntry, rng: &mut R) -> Update {
        self.entries.push(candidate);
        let evicted = self.enforce_cap(rng);
        Update::Inserted {
            dominated: Vec::new(),
            evicted,
        }
    }

    /// Drops the entry with the longest average waiting time; ties are broken uniformly at random.
    fn enforce_cap<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        let cap = self.cap?;
        if self.entries.len() <= cap {
            return None;
        }
        let worst = self.entries.iter().map(|e| e.score.metrics.awt_s).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..self.entries.len())
            .filter(|&i| self.entries[i].score.metrics.awt_s == worst)
            .collect();
        let pick = if tied.len() == 1 { tied[0] } else { tied[rng.random_range(0..tied.len())] };
        Some(self.entries.remove(pick).eval_index)
    }

    /// Entries not dominated by any other entry.
    pub fn front(&self) -> Vec<&ArchiveEntry> {
        let confs: Vec<&[f64]> = self.entries.iter().map(|e| e.score.conf.as_slice()).collect();
        non_dominated_indices(&confs).into_iter().map(|i| &self.entries[i]).collect()
    }

    /// Short digest of the archive contents, for run logs.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update((e.eval_index as u64).to_le_bytes());
            for c in &e.score.conf {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// Impact of a patch: `None` if it scores like its parent, `Positive` if nothing in the
/// archive or the parent dominates it, `Negative` otherwise.
pub fn classify_impact(patch: &ScoreVector, parent: &ScoreVector, archive: &Archive) -> Impact {
    if patch.approx_eq(parent, IMPACT_TOLERANCE) {
        return Impact::None;
    }
    let beaten = dominates(&parent.conf, &patch.conf) || archive.entries.iter().any(|e| dominates(&e.score.conf, &patch.conf));
    if beaten {
        Impact::Negative
    } else {
        Impact::Positive
    }
}
