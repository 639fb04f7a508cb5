//! The repair loop and patch confirmation.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::oracles::{Evaluator, MetricVector, ScoreVector, ORACLE_NAMES};

use super::archive::{classify_impact, Archive, ArchiveEntry, Lineage, DEFAULT_ARCHIVE_CAP};
use super::patch::generate_patch;
use super::susp::{Impact, SuspTracker, DEFAULT_N_SUSP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Suspiciousness-driven selection with a bounded non-dominated archive.
    Guided,
    /// Uniform selection; every patch is archived.
    Unguided,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Guided => "guided",
            Mode::Unguided => "unguided",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "guided" => Ok(Mode::Guided),
            "unguided" | "baseline" => Ok(Mode::Unguided),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    /// Patches evaluated beyond the initial configuration.
    pub evaluations: usize,
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepairConfig {
    pub n_susp: u32,
    pub budget: Budget,
    pub seed: u64,
    pub mode: Mode,
    pub archive_cap: usize,
    /// Bound for the unguided archive; `None` keeps everything.
    pub unguided_cap: Option<usize>,
    /// Evaluation counts at which the archive front is recorded.
    pub checkpoints: Vec<usize>,
}

impl RepairConfig {
    pub fn new(mode: Mode, evaluations: usize, seed: u64) -> Self {
        Self {
            n_susp: DEFAULT_N_SUSP,
            budget: Budget {
                evaluations,
                seconds: None,
            },
            seed,
            mode,
            archive_cap: DEFAULT_ARCHIVE_CAP,
            unguided_cap: None,
            checkpoints: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_susp < 1 {
            return Err(Error::InvalidArgument("n_susp must be at least 1".into()));
        }
        if self.budget.evaluations == 0 {
            return Err(Error::InvalidArgument("evaluation budget must be positive".into()));
        }
        if let Some(s) = self.budget.seconds {
            if s.is_nan() || s <= 0.0 {
                return Err(Error::InvalidArgument("time budget must be positive".into()));
            }
        }
        if self.archive_cap == 0 || self.unguided_cap == Some(0) {
            return Err(Error::InvalidArgument("archive cap must be positive".into()));
        }
        Ok(())
    }
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub eval_index: usize,
    pub parent: Option<usize>,
    pub mutated_params: Vec<String>,
    pub new_values: Vec<String>,
    pub conf: Vec<f64>,
    pub metrics: MetricVector,
    pub impact: Option<Impact>,
    pub archive_size: usize,
    pub archive_hash: String,
}

/// Non-dominated archive entries after a given number of evaluations.
#[derive(Clone, Debug)]
pub struct FrontSnapshot {
    pub evaluations: usize,
    pub front: Vec<ArchiveEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AllPassing,
    EvaluationBudget,
    TimeBudget,
}

#[derive(Clone, Debug)]
pub struct RunLog {
    pub mode: Mode,
    pub seed: u64,
    pub original: ArchiveEntry,
    pub records: Vec<EvalRecord>,
    pub archive: Archive,
    pub tracker: SuspTracker,
    pub snapshots: Vec<FrontSnapshot>,
    pub stop: StopReason,
}

impl RunLog {
    /// Patches evaluated beyond the initial configuration.
    pub fn evaluations(&self) -> usize {
        self.records.len() - 1
    }

    /// Final suspiciousness scores.
    pub fn suspiciousness(&self) -> Vec<f64> {
        self.tracker.scores()
    }

    /// Non-dominated entries of the final archive.
    pub fn front(&self) -> Vec<&ArchiveEntry> {
        self.archive.front()
    }

    /// The first evaluated patch that passes every oracle.
    pub fn passing(&self) -> Option<&ArchiveEntry> {
        self.archive
            .entries()
            .iter()
            .filter(|e| e.score.is_passing())
            .min_by_key(|e| e.eval_index)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Writes every archive entry as `patch-<eval>.cfg` plus `archive.csv`.
    pub fn export_archive(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["eval_index".to_string(), "file".into(), "parent".into(), "mutated".into()];
        header.extend(ORACLE_NAMES.iter().map(|n| format!("conf_{n}")));
        header.extend(["awt_s", "lwt_s", "pct_wt_gt55", "att_s", "ltt_s", "pct_tt_gt70"].map(String::from));
        w.write_record(&header)?;
        for e in self.archive.entries() {
            let file = format!("patch-{}.cfg", e.eval_index);
            let path = dir.join(&file);
            fs::write(&path, e.patch.to_text()).map_err(|err| Error::io(&path, err))?;
            let names: Vec<&str> = e.lineage.mutated.iter().map(|&i| e.patch.space().spec(i).name()).collect();
            let mut row = vec![
                e.eval_index.to_string(),
                file,
                e.lineage.parent.map(|p| p.to_string()).unwrap_or_default(),
                names.join(";"),
            ];
            row.extend(e.score.conf.iter().map(|c| c.to_string()));
            row.extend(e.score.metrics.to_array().iter().map(|m| m.to_string()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(dir, e.into_error()))?;
        let path = dir.join("archive.csv");
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

fn record(entry: &ArchiveEntry, impact: Option<Impact>, archive: &Archive) -> EvalRecord {
    let space = entry.patch.space();
    EvalRecord {
        eval_index: entry.eval_index,
        parent: entry.lineage.parent,
        mutated_params: entry.lineage.mutated.iter().map(|&i| space.spec(i).name().to_string()).collect(),
        new_values: entry
            .lineage
            .mutated
            .iter()
            .map(|&i| space.spec(i).format_value(entry.patch.get(i)))
            .collect(),
        conf: entry.score.conf.clone(),
        metrics: entry.score.metrics,
        impact,
        archive_size: archive.len(),
        archive_hash: archive.digest(),
    }
}

fn snapshot(archive: &Archive, evaluations: usize) -> FrontSnapshot {
    FrontSnapshot {
        evaluations,
        front: archive.front().into_iter().cloned().collect(),
    }
}

/// Searches for a patch of `initial` that makes the evaluator's suite pass.
pub fn repair(initial: &Configuration, evaluator: &Evaluator, cfg: &RepairConfig) -> Result<RunLog> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let guided = cfg.mode == Mode::Guided;
    let mut archive = if guided {
        Archive::guided(cfg.archive_cap)
    } else {
        Archive::unguided(cfg.unguided_cap)
    };
    let mut tracker = SuspTracker::new(initial.space().len(), cfg.n_susp);
    let mut checkpoints = cfg.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut pending = checkpoints.into_iter().peekable();
    let mut snapshots = Vec::new();

    let original = ArchiveEntry {
        patch: initial.clone(),
        score: evaluator.score_suite(initial)?,
        lineage: Lineage {
            parent: None,
            parent_score: None,
            mutated: Vec::new(),
        },
        eval_index: 0,
    };
    archive.update(original.clone(), &mut rng);
    let mut records = vec![record(&original, None, &archive)];
    while pending.next_if(|&c| c == 0).is_some() {
        snapshots.push(snapshot(&archive, 0));
    }

    let mut evaluations = 0;
    let stop = if original.score.is_passing() {
        log::warn!("initial configuration already passes every oracle");
        StopReason::AllPassing
    } else {
        loop {
            if evaluations >= cfg.budget.evaluations {
                break StopReason::EvaluationBudget;
            }
            if cfg.budget.seconds.is_some_and(|s| started.elapsed().as_secs_f64() >= s) {
                break StopReason::TimeBudget;
            }
            let parent = archive.entries()[rng.random_range(0..archive.len())].clone();
            let scores: Vec<f64> = if guided {
                tracker.scores()
            } else {
                vec![0.5; tracker.len()]
            };
            let (patch, mutated) = generate_patch(&parent.patch, &scores, &mut rng)?;
            evaluations += 1;
            let score = evaluator.score_suite(&patch)?;
            let impact = classify_impact(&score, &parent.score, &archive);
            if guided {
                tracker.update(&mutated, impact);
            }
            let entry = ArchiveEntry {
                patch,
                score,
                lineage: Lineage {
                    parent: Some(parent.eval_index),
                    parent_score: Some(parent.score.clone()),
                    mutated,
                },
                eval_index: evaluations,
            };
            let passing = entry.score.is_passing();
            let rec_entry = entry.clone();
            archive.update(entry, &mut rng);
            records.push(record(&rec_entry, Some(impact), &archive));
            log::debug!("eval {evaluations}: {impact:?}, archive {}", archive.len());
            while pending.next_if(|&c| c <= evaluations).is_some() {
                snapshots.push(snapshot(&archive, evaluations));
            }
            if passing {
                break StopReason::AllPassing;
            }
        }
    };
    // Checkpoints past an early stop see the final archive.
    for c in pending {
        let mut s = snapshot(&archive, evaluations);
        s.evaluations = c;
        snapshots.push(s);
    }
    Ok(RunLog {
        mode: cfg.mode,
        seed: cfg.seed,
        original,
        records,
        archive,
        tracker,
        snapshots,
        stop,
    })
}

/// Outcome of re-checking a patch on a held-out suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Confirmation {
    pub original: ScoreVector,
    pub patch: ScoreVector,
    /// Oracles on which the patch scores below the original.
    pub regressions: Vec<String>,
}

impl Confirmation {
    pub fn passed(&self) -> bool {
        self.regressions.is_empty()
    }
}

/// Scores `patch` and `original` on `validation`; the patch passes if no oracle regresses.
pub fn confirm_patch(original: &Configuration, patch: &Configuration, validation: &Evaluator) -> Result<Confirmation> {
    let o = validation.score_suite(original)?;
    let p = validation.score_suite(patch)?;
    let regressions = (0..o.conf.len())
        .filter(|&i| p.conf[i] < o.conf[i])
        .map(|i| ORACLE_NAMES[i].to_string())
        .collect();
    Ok(Confirmation {
        original: o,
        patch: p,
        regressions,
    })
}
