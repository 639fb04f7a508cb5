//! Multi-run comparison of search modes, manual patches and the original configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Configuration;
use crate::decision::{decide, DmThresholds};
use crate::error::{Error, Result};
use crate::oracles::{Evaluator, MetricVector, ScoreVector, ORACLE_NAMES};
use crate::search::{confirm_patch, non_dominated_indices, repair, ArchiveEntry, Budget, Confirmation, Lineage, Mode, RepairConfig, RunLog, StopReason, DEFAULT_ARCHIVE_CAP, DEFAULT_N_SUSP};
use crate::stats::{compare, confidence_hypervolume, StatResult};

/// Everything an experiment needs besides its settings.
#[derive(Clone, Debug)]
pub struct ExperimentInput {
    pub initial: Configuration,
    pub evaluator: Evaluator,
    /// Held-out suite for confirming chosen patches.
    pub validation: Option<Evaluator>,
    pub manual: Vec<(String, Configuration)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub runs: usize,
    pub budget: Budget,
    pub modes: Vec<Mode>,
    /// Run `r` of every mode uses seed `base_seed + r`.
    pub base_seed: u64,
    pub checkpoints: Vec<usize>,
    pub thresholds: DmThresholds,
    pub n_susp: u32,
    pub archive_cap: usize,
    pub unguided_cap: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(runs: usize, evaluations: usize, base_seed: u64) -> Self {
        Self {
            runs,
            budget: Budget {
                evaluations,
                seconds: None,
            },
            modes: vec![Mode::Guided, Mode::Unguided],
            base_seed,
            checkpoints: default_checkpoints(evaluations),
            thresholds: DmThresholds::default(),
            n_susp: DEFAULT_N_SUSP,
            archive_cap: DEFAULT_ARCHIVE_CAP,
            unguided_cap: None,
        }
    }

    /// Sorted, deduplicated checkpoints, always ending at the evaluation budget.
    pub fn effective_checkpoints(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.checkpoints.iter().copied().filter(|&c| c <= self.budget.evaluations).collect();
        c.push(self.budget.evaluations);
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// Five evenly spaced checkpoints.
pub fn default_checkpoints(evaluations: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (1..=5).map(|i| evaluations * i / 5).filter(|&c| c > 0).collect();
    c.dedup();
    c
}

/// The decision maker's pick from a front.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Choice {
    pub eval_index: usize,
    pub hamming: usize,
    pub conf: Vec<f64>,
    pub metrics: MetricVector,
    pub trace: Vec<String>,
    #[serde(skip)]
    pub patch: Configuration,
}

fn choose(front: &[&ArchiveEntry], original: &Configuration, thr: &DmThresholds) -> Result<Choice> {
    let d = decide(front, original, thr)?;
    let e = front[d.index];
    Ok(Choice {
        eval_index: e.eval_index,
        hamming: e.patch.hamming_distance(original)?,
        conf: e.score.conf.clone(),
        metrics: e.score.metrics,
        trace: d.trace,
        patch: e.patch.clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub mode: Mode,
    /// Position of the mode in the experiment's mode list.
    pub mode_slot: usize,
    pub run: usize,
    pub seed: u64,
    pub stop: StopReason,
    pub evaluations: usize,
    /// Hypervolume of the front at each checkpoint.
    pub hv: Vec<f64>,
    pub front_size: usize,
    pub choice: Choice,
    pub confirmation: Option<Confirmation>,
    pub suspiciousness: BTreeMap<String, f64>,
    #[serde(skip)]
    pub log: RunLog,
}

#[derive(Clone, Debug, Serialize)]
pub struct ManualOutcome {
    pub names: Vec<String>,
    pub scores: Vec<ScoreVector>,
    /// Names of the non-dominated manual patches.
    pub non_dominated: Vec<String>,
    pub hv: f64,
    pub choice: Choice,
    pub choice_name: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckpointComparison {
    pub evaluations: usize,
    pub first: Mode,
    pub second: Mode,
    #[serde(flatten)]
    pub stat: StatResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub runs: usize,
    pub evaluations: usize,
    pub modes: Vec<Mode>,
    pub checkpoints: Vec<usize>,
    pub original: ScoreVector,
    pub original_hv: f64,
    pub outcomes: Vec<RunOutcome>,
    pub manual: Option<ManualOutcome>,
    /// First mode against the second at every checkpoint.
    pub comparisons: Vec<CheckpointComparison>,
}

fn run_one(input: &ExperimentInput, cfg: &ExperimentConfig, mode: Mode, mode_slot: usize, run: usize) -> Result<RunOutcome> {
    let checkpoints = cfg.effective_checkpoints();
    let seed = cfg.base_seed.wrapping_add(run as u64);
    let rc = RepairConfig {
        n_susp: cfg.n_susp,
        budget: cfg.budget,
        seed,
        mode,
        archive_cap: cfg.archive_cap,
        unguided_cap: cfg.unguided_cap,
        checkpoints: checkpoints.clone(),
    };
    let context = |e: Error| Error::InvalidArgument(format!("{mode} run {run} (seed {seed}): {e}"));
    let log = repair(&input.initial, &input.evaluator, &rc).map_err(context)?;
    let hv = log
        .snapshots
        .iter()
        .map(|s| confidence_hypervolume(&s.front.iter().map(|e| e.score.conf.clone()).collect::<Vec<_>>()))
        .collect::<Result<Vec<f64>>>()?;
    let front = log.front();
    let choice = choose(&front, &input.initial, &cfg.thresholds)?;
    let confirmation = match &input.validation {
        Some(v) => Some(confirm_patch(&input.initial, &choice.patch, v).map_err(context)?),
        None => None,
    };
    let space = input.initial.space();
    let suspiciousness = log
        .suspiciousness()
        .into_iter()
        .enumerate()
        .map(|(i, s)| (space.spec(i).name().to_string(), s))
        .collect();
    Ok(RunOutcome {
        mode,
        mode_slot,
        run,
        seed,
        stop: log.stop,
        evaluations: log.evaluations(),
        hv,
        front_size: front.len(),
        choice,
        confirmation,
        suspiciousness,
        log,
    })
}

fn score_manual(input: &ExperimentInput, thr: &DmThresholds) -> Result<Option<ManualOutcome>> {
    if input.manual.is_empty() {
        return Ok(None);
    }
    let entries = input
        .manual
        .iter()
        .enumerate()
        .map(|(i, (_, patch))| {
            Ok(ArchiveEntry {
                patch: patch.clone(),
                score: input.evaluator.score_suite(patch)?,
                lineage: Lineage {
                    parent: None,
                    parent_score: None,
                    mutated: Vec::new(),
                },
                eval_index: i,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let confs: Vec<Vec<f64>> = entries.iter().map(|e| e.score.conf.clone()).collect();
    let keep = non_dominated_indices(&confs);
    let front: Vec<&ArchiveEntry> = keep.iter().map(|&i| &entries[i]).collect();
    let hv = confidence_hypervolume(&keep.iter().map(|&i| confs[i].clone()).collect::<Vec<_>>())?;
    let choice = choose(&front, &input.initial, thr)?;
    Ok(Some(ManualOutcome {
        names: input.manual.iter().map(|(n, _)| n.clone()).collect(),
        scores: entries.iter().map(|e| e.score.clone()).collect(),
        non_dominated: keep.iter().map(|&i| input.manual[i].0.clone()).collect(),
        hv,
        choice_name: input.manual[choice.eval_index].0.clone(),
        choice,
    }))
}

/// Runs every mode `runs` times and compares them.
pub fn run_experiment(input: &ExperimentInput, cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.runs == 0 {
        return Err(Error::InvalidArgument("at least one run is required".into()));
    }
    if cfg.modes.is_empty() {
        return Err(Error::InvalidArgument("at least one mode is required".into()));
    }
    let jobs: Vec<(usize, Mode, usize)> = cfg
        .modes
        .iter()
        .enumerate()
        .flat_map(|(slot, &m)| (0..cfg.runs).map(move |r| (slot, m, r)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(slot, mode, run)| run_one(input, cfg, mode, slot, run))
        .collect::<Result<Vec<_>>>()?;
    let original = input.evaluator.score_suite(&input.initial)?;
    let original_hv = confidence_hypervolume(std::slice::from_ref(&original.conf))?;
    let checkpoints = cfg.effective_checkpoints();
    let mut comparisons = Vec::new();
    if cfg.modes.len() >= 2 {
        for (c, &evals) in checkpoints.iter().enumerate() {
            let hv_of = |slot: usize| outcomes.iter().filter(|o| o.mode_slot == slot).map(|o| o.hv[c]).collect::<Vec<f64>>();
            comparisons.push(CheckpointComparison {
                evaluations: evals,
                first: cfg.modes[0],
                second: cfg.modes[1],
                stat: compare(&hv_of(0), &hv_of(1))?,
            });
        }
    }
    Ok(Report {
        runs: cfg.runs,
        evaluations: cfg.budget.evaluations,
        modes: cfg.modes.clone(),
        checkpoints,
        original,
        original_hv,
        outcomes,
        manual: score_manual(input, &cfg.thresholds)?,
        comparisons,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl Report {
    pub fn outcomes_of(&self, slot: usize) -> impl Iterator<Item = &RunOutcome> {
        self.outcomes.iter().filter(move |o| o.mode_slot == slot)
    }

    /// Column label of a mode slot: the guided search is the repair, the unguided one the baseline.
    fn mode_label(&self, slot: usize) -> String {
        let base = match self.modes[slot] {
            Mode::Guided => "repair",
            Mode::Unguided => "baseline",
        };
        let dup = self.modes[..slot].iter().filter(|&&m| m == self.modes[slot]).count();
        if dup == 0 {
            base.to_string()
        } else {
            format!("{base}{}", dup + 1)
        }
    }

    /// Hypervolume of every run at every checkpoint.
    pub fn hv_csv(&self) -> String {
        let mut s = String::from("mode,run,seed");
        for c in &self.checkpoints {
            let _ = write!(s, ",hv_{c}");
        }
        s.push('\n');
        for o in &self.outcomes {
            let _ = write!(s, "{},{},{}", o.mode, o.run, o.seed);
            for h in &o.hv {
                let _ = write!(s, ",{h}");
            }
            s.push('\n');
        }
        s
    }

    /// Â12 and p-value of the first mode against the second per checkpoint.
    pub fn stats_csv(&self) -> String {
        let mut s = String::from("evaluations,first,second,a12,p_value,effect\n");
        for c in &self.comparisons {
            let _ = writeln!(s, "{},{},{},{},{},{}", c.evaluations, c.first, c.second, c.stat.a12, c.stat.p_value, c.stat.effect);
        }
        s
    }

    /// Per-metric values: original, manual choice, and mean decision-maker pick per mode.
    pub fn metrics_csv(&self) -> String {
        let mut s = String::from("metric,misconf");
        if self.manual.is_some() {
            s.push_str(",manual");
        }
        for slot in 0..self.modes.len() {
            let _ = write!(s, ",{}_dm", self.mode_label(slot));
        }
        s.push('\n');
        let orig = self.original.metrics.to_array();
        for (i, name) in ORACLE_NAMES.iter().enumerate() {
            let _ = write!(s, "{name},{}", orig[i]);
            if let Some(m) = &self.manual {
                let _ = write!(s, ",{}", m.choice.metrics.to_array()[i]);
            }
            for slot in 0..self.modes.len() {
                let _ = write!(s, ",{}", mean(self.outcomes_of(slot).map(|o| o.choice.metrics.to_array()[i])));
            }
            s.push('\n');
        }
        s
    }

    /// Per-run stop reason, chosen patch and confirmation verdict.
    pub fn runs_csv(&self) -> String {
        let mut s = String::from("mode,run,seed,stop,evaluations,front_size,final_hv,dm_eval_index,dm_hamming");
        for n in ORACLE_NAMES {
            let _ = write!(s, ",dm_{n}");
        }
        s.push_str(",confirmed\n");
        for o in &self.outcomes {
            let stop = serde_json::to_value(o.stop).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                o.mode,
                o.run,
                o.seed,
                stop,
                o.evaluations,
                o.front_size,
                o.hv.last().copied().unwrap_or(0.0),
                o.choice.eval_index,
                o.choice.hamming
            );
            for m in o.choice.metrics.to_array() {
                let _ = write!(s, ",{m}");
            }
            let verdict = match &o.confirmation {
                Some(c) if c.passed() => "yes",
                Some(_) => "no",
                None => "",
            };
            let _ = writeln!(s, ",{verdict}");
        }
        s
    }

    /// Mean hypervolume per mode over evaluations, for plotting.
    pub fn hv_dat(&self) -> String {
        let mut s = String::from("# evaluations");
        for slot in 0..self.modes.len() {
            let _ = write!(s, " {}", self.mode_label(slot));
        }
        s.push('\n');
        let _ = write!(s, "0");
        for _ in 0..self.modes.len() {
            let _ = write!(s, " {}", self.original_hv);
        }
        s.push('\n');
        for (c, evals) in self.checkpoints.iter().enumerate() {
            let _ = write!(s, "{evals}");
            for slot in 0..self.modes.len() {
                let _ = write!(s, " {}", mean(self.outcomes_of(slot).map(|o| o.hv[c])));
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes every table plus one run log per run under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let logs = dir.join("logs");
        fs::create_dir_all(&logs).map_err(|e| Error::io(&logs, e))?;
        let files = [
            ("hv.csv", self.hv_csv()),
            ("stats.csv", self.stats_csv()),
            ("metrics.csv", self.metrics_csv()),
            ("runs.csv", self.runs_csv()),
            ("hv.dat", self.hv_dat()),
            ("summary.json", self.summary_json()?),
        ];
        for (name, text) in files {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        for o in &self.outcomes {
            let p = logs.join(format!("{}-{}-run{}.jsonl", o.mode_slot, o.mode, o.run));
            fs::write(&p, o.log.to_jsonl()?).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
