//! Rule-based choice of a single patch from a non-dominated set.

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::kv::{parse_f64, parse_kv};
use crate::oracles::MetricVector;
use crate::search::ArchiveEntry;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DmThresholds {
    pub awt_max_s: f64,
    pub wt55_pct_max: f64,
    pub att_max_s: f64,
    pub tt70_pct_max: f64,
}

impl Default for DmThresholds {
    fn default() -> Self {
        Self {
            awt_max_s: 25.0,
            wt55_pct_max: 10.0,
            att_max_s: 45.0,
            tt70_pct_max: 10.0,
        }
    }
}

impl DmThresholds {
    /// Parses `key=value` lines over the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Self::default();
        for (line, key, v) in parse_kv(text)? {
            let x = parse_f64(line, &key, &v)?;
            if x <= 0.0 {
                return Err(Error::parse(line, format!("`{key}` must be positive")));
            }
            match key.as_str() {
                "awt_max_s" => t.awt_max_s = x,
                "wt55_pct_max" => t.wt55_pct_max = x,
                "att_max_s" => t.att_max_s = x,
                "tt70_pct_max" => t.tt70_pct_max = x,
                _ => return Err(Error::parse(line, format!("unknown threshold `{key}`"))),
            }
        }
        Ok(t)
    }

    pub fn to_text(&self) -> String {
        format!(
            "awt_max_s={}\nwt55_pct_max={}\natt_max_s={}\ntt70_pct_max={}\n",
            self.awt_max_s, self.wt55_pct_max, self.att_max_s, self.tt70_pct_max
        )
    }
}

/// What the cascade looks at for each candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub metrics: MetricVector,
    pub hamming: usize,
    pub eval_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    /// Position of the chosen candidate in the input.
    pub index: usize,
    /// One line per stage.
    pub trace: Vec<String>,
}

fn label(c: &Candidate) -> String {
    format!("#{}", c.eval_index)
}

fn labels(cands: &[Candidate], idx: &[usize]) -> String {
    idx.iter().map(|&i| label(&cands[i])).collect::<Vec<_>>().join(", ")
}

/// Keeps the candidates below `limit`, or the ones with the smallest value if none are.
fn threshold_stage(
    cands: &[Candidate],
    alive: Vec<usize>,
    name: &str,
    limit: f64,
    value: impl Fn(&Candidate) -> f64,
    trace: &mut Vec<String>,
) -> Vec<usize> {
    let below: Vec<usize> = alive.iter().copied().filter(|&i| value(&cands[i]) < limit).collect();
    let (kept, how) = if below.is_empty() {
        let best = alive.iter().map(|&i| value(&cands[i])).fold(f64::INFINITY, f64::min);
        let kept = alive.iter().copied().filter(|&i| value(&cands[i]) == best).collect();
        (kept, format!("none below {limit}, kept minimum {name} {best}"))
    } else {
        (below, format!("kept {name} < {limit}"))
    };
    trace.push(stage_line(cands, &alive, &kept, &how, &value));
    kept
}

fn argmin_stage<V: PartialOrd + Copy + std::fmt::Display>(
    cands: &[Candidate],
    alive: Vec<usize>,
    name: &str,
    value: impl Fn(&Candidate) -> V,
    trace: &mut Vec<String>,
) -> Vec<usize> {
    let best = alive
        .iter()
        .map(|&i| value(&cands[i]))
        .reduce(|a, b| if b < a { b } else { a })
        .expect("stage input is never empty");
    let kept: Vec<usize> = alive.iter().copied().filter(|&i| value(&cands[i]) == best).collect();
    trace.push(stage_line(cands, &alive, &kept, &format!("kept minimum {name} {best}"), &value));
    kept
}

fn stage_line<V: std::fmt::Display>(cands: &[Candidate], alive: &[usize], kept: &[usize], how: &str, value: &impl Fn(&Candidate) -> V) -> String {
    let mut line = format!("{how}: {}", labels(cands, kept));
    let gone: Vec<String> = alive
        .iter()
        .filter(|i| !kept.contains(i))
        .map(|&i| format!("{} ({})", label(&cands[i]), value(&cands[i])))
        .collect();
    if !gone.is_empty() {
        let _ = write!(line, "; eliminated {}", gone.join(", "));
    }
    line
}

/// Runs the filter cascade: AWT, long-wait share, ATT, long-transit share (threshold
/// or argmin), then LWT, LTT, distance to the original and evaluation order.
pub fn decide_candidates(cands: &[Candidate], thr: &DmThresholds) -> Result<Decision> {
    if cands.is_empty() {
        return Err(Error::Empty("candidate set"));
    }
    let mut trace = Vec::new();
    let mut alive: Vec<usize> = (0..cands.len()).collect();
    alive = threshold_stage(cands, alive, "awt", thr.awt_max_s, |c| c.metrics.awt_s, &mut trace);
    alive = threshold_stage(cands, alive, "wt55", thr.wt55_pct_max, |c| c.metrics.pct_wt_gt55, &mut trace);
    alive = threshold_stage(cands, alive, "att", thr.att_max_s, |c| c.metrics.att_s, &mut trace);
    alive = threshold_stage(cands, alive, "tt70", thr.tt70_pct_max, |c| c.metrics.pct_tt_gt70, &mut trace);
    alive = argmin_stage(cands, alive, "lwt", |c| c.metrics.lwt_s, &mut trace);
    alive = argmin_stage(cands, alive, "ltt", |c| c.metrics.ltt_s, &mut trace);
    alive = argmin_stage(cands, alive, "hamming distance", |c| c.hamming, &mut trace);
    alive = argmin_stage(cands, alive, "eval index", |c| c.eval_index, &mut trace);
    let index = alive[0];
    trace.push(format!("chose {}", label(&cands[index])));
    Ok(Decision { index, trace })
}

/// Picks one entry of `front` using suite-worst metrics and distance to `original`.
pub fn decide(front: &[&ArchiveEntry], original: &Configuration, thr: &DmThresholds) -> Result<Decision> {
    let cands = front
        .iter()
        .map(|e| {
            Ok(Candidate {
                metrics: e.score.metrics,
                hamming: e.patch.hamming_distance(original)?,
                eval_index: e.eval_index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    decide_candidates(&cands, thr)
}
