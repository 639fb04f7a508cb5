//! Timing metrics, their confidence mapping, and suite-level scoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::kv::{parse_f64, parse_kv};
use crate::scalar::Real;
use crate::sim::{simulate, Building, SimResult, TestCase};

/// Number of oracles in the default set.
pub const ORACLE_COUNT: usize = 6;

/// Oracle keys, in score-vector order.
pub const ORACLE_NAMES: [&str; ORACLE_COUNT] = ["awt", "lwt", "wt55", "att", "ltt", "tt70"];

/// Waits strictly above this count toward `pct_wt_gt55`.
pub const LONG_WAIT_S: f64 = 55.0;
/// Transits strictly above this count toward `pct_tt_gt70`.
pub const LONG_TRANSIT_S: f64 = 70.0;

/// The six timing metrics of one run, or suite-worst values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub awt_s: f64,
    pub lwt_s: f64,
    pub pct_wt_gt55: f64,
    pub att_s: f64,
    pub ltt_s: f64,
    pub pct_tt_gt70: f64,
}

impl MetricVector {
    pub fn to_array(&self) -> [f64; ORACLE_COUNT] {
        [self.awt_s, self.lwt_s, self.pct_wt_gt55, self.att_s, self.ltt_s, self.pct_tt_gt70]
    }

    pub fn from_array(a: [f64; ORACLE_COUNT]) -> Self {
        Self {
            awt_s: a[0],
            lwt_s: a[1],
            pct_wt_gt55: a[2],
            att_s: a[3],
            ltt_s: a[4],
            pct_tt_gt70: a[5],
        }
    }

    /// Componentwise maximum, i.e. the worse value of every metric.
    pub fn worst(&self, other: &MetricVector) -> MetricVector {
        let (a, b) = (self.to_array(), other.to_array());
        MetricVector::from_array(std::array::from_fn(|i| a[i].max(b[i])))
    }
}

/// Computes the metrics of a run.
///
/// Waiting statistics cover every passenger (unserved ones truncated at the horizon);
/// transit statistics cover passengers who boarded.
pub fn compute_metrics(result: &SimResult) -> Result<MetricVector> {
    if result.passengers.is_empty() {
        return Err(Error::Empty("simulation result"));
    }
    let n = result.passengers.len() as f64;
    let waits = result.passengers.iter().map(|p| p.waiting_time_s);
    let awt = waits.clone().sum::<f64>() / n;
    let lwt = waits.clone().fold(0.0, f64::max);
    let long_waits = waits.filter(|&w| w > LONG_WAIT_S).count() as f64;

    let transits: Vec<f64> = result.passengers.iter().filter(|p| p.boarded).map(|p| p.transit_time_s).collect();
    let (att, ltt, pct_tt) = if transits.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let m = transits.len() as f64;
        (
            transits.iter().sum::<f64>() / m,
            transits.iter().copied().fold(0.0, f64::max),
            100.0 * transits.iter().filter(|&&t| t > LONG_TRANSIT_S).count() as f64 / m,
        )
    };
    Ok(MetricVector {
        awt_s: awt,
        lwt_s: lwt,
        pct_wt_gt55: 100.0 * long_waits / n,
        att_s: att,
        ltt_s: ltt,
        pct_tt_gt70: pct_tt,
    })
}

/// Pass boundary and violation normalizer of one oracle, in the metric's units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry<T> {
    pub threshold: T,
    pub severity_scale: T,
}

/// Maps a metric value to a confidence in [-1, 0]: 0 at or below the threshold,
/// -1 at or beyond `threshold + severity_scale`, linear in between.
pub fn confidence<T: Real>(value: T, entry: &OracleEntry<T>) -> T {
    let excess = (value - entry.threshold) / entry.severity_scale;
    if excess <= T::zero() {
        T::zero()
    } else {
        -excess.min(T::one())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec<T = f64> {
    pub entries: [OracleEntry<T>; ORACLE_COUNT],
}

const DEFAULT_SCALES: [f64; ORACLE_COUNT] = [60.0, 300.0, 25.0, 60.0, 300.0, 25.0];
const EXPERIMENT_SCALES: [f64; ORACLE_COUNT] = [120.0, 600.0, 100.0, 120.0, 600.0, 100.0];
const DEFAULT_THRESHOLDS: [f64; ORACLE_COUNT] = [25.0, 90.0, 10.0, 45.0, 120.0, 10.0];

impl Default for OracleSpec<f64> {
    fn default() -> Self {
        Self {
            entries: std::array::from_fn(|i| OracleEntry {
                threshold: DEFAULT_THRESHOLDS[i],
                severity_scale: DEFAULT_SCALES[i],
            }),
        }
    }
}

impl OracleSpec<f64> {
    /// All thresholds zero: every nonzero metric value is a violation. Scales are
    /// widened so that only extreme values saturate at -1.
    pub fn experiment() -> Self {
        Self {
            entries: std::array::from_fn(|i| OracleEntry {
                threshold: 0.0,
                severity_scale: EXPERIMENT_SCALES[i],
            }),
        }
    }

    /// Parses `awt.threshold=..`, `awt.scale=..` lines over the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (line, key, v) in parse_kv(text)? {
            let (name, field) = key
                .split_once('.')
                .ok_or_else(|| Error::parse(line, format!("expected `<oracle>.threshold` or `<oracle>.scale`, got `{key}`")))?;
            let i = ORACLE_NAMES
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Error::parse(line, format!("unknown oracle `{name}`")))?;
            let x = parse_f64(line, &key, &v)?;
            match field {
                "threshold" => spec.entries[i].threshold = x,
                "scale" => spec.entries[i].severity_scale = x,
                _ => return Err(Error::parse(line, format!("unknown field `{field}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, e) in ORACLE_NAMES.iter().zip(&self.entries) {
            s.push_str(&format!("{name}.threshold={}\n{name}.scale={}\n", e.threshold, e.severity_scale));
        }
        s
    }
}

impl<T: Real> OracleSpec<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in ORACLE_NAMES.iter().zip(&self.entries) {
            if e.severity_scale.is_nan() || e.severity_scale <= T::zero() {
                return Err(Error::InvalidOracle(format!("{name}.scale must be positive")));
            }
        }
        Ok(())
    }

    pub fn confidences(&self, metrics: &[T; ORACLE_COUNT]) -> Vec<T> {
        metrics.iter().zip(&self.entries).map(|(&m, e)| confidence(m, e)).collect()
    }
}

/// Per-oracle confidences of a patch plus the suite-worst metrics behind them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector<T = f64> {
    pub conf: Vec<T>,
    pub metrics: MetricVector,
}

impl<T: Real> ScoreVector<T> {
    /// All oracles pass on all test cases.
    pub fn is_passing(&self) -> bool {
        self.conf.iter().all(|c| *c == T::zero())
    }

    /// Componentwise equality within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        self.conf.len() == other.conf.len() && self.conf.iter().zip(&other.conf).all(|(a, b)| (*a - *b).abs() <= tol)
    }
}

/// Scores configurations against a failing suite.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub building: Building,
    pub oracles: OracleSpec,
    pub suite: Vec<TestCase>,
    /// Base simulation seed; each case derives its own from its id.
    pub sim_seed: u64,
}

impl Evaluator {
    pub fn new(building: Building, oracles: OracleSpec, suite: Vec<TestCase>, sim_seed: u64) -> Result<Self> {
        if suite.is_empty() {
            return Err(Error::Empty("test suite"));
        }
        building.validate()?;
        oracles.validate()?;
        Ok(Self {
            building,
            oracles,
            suite,
            sim_seed,
        })
    }

    fn case_seed(&self, tc: &TestCase) -> u64 {
        let digest = Sha256::digest(tc.id.as_bytes());
        let mut b = [0u8; 8];
        b.copy_from_slice(&digest[..8]);
        self.sim_seed ^ u64::from_le_bytes(b)
    }

    /// Runs one case and returns its metrics and confidences.
    pub fn score_case(&self, patch: &Configuration, tc: &TestCase) -> Result<(MetricVector, Vec<f64>)> {
        let tag = |e: Error| Error::TestCase {
            id: tc.id.clone(),
            source: Box::new(e),
        };
        let result = simulate(patch, tc, &self.building, self.case_seed(tc)).map_err(tag)?;
        let metrics = compute_metrics(&result).map_err(tag)?;
        let conf = self.oracles.confidences(&metrics.to_array());
        Ok((metrics, conf))
    }

    /// Scores `patch` on every case; each oracle keeps its most severe confidence.
    pub fn score_suite(&self, patch: &Configuration) -> Result<ScoreVector> {
        let per_case = self
            .suite
            .par_iter()
            .map(|tc| self.score_case(patch, tc))
            .collect::<Result<Vec<_>>>()?;
        Ok(aggregate(&per_case))
    }
}

/// Reduces per-case results: minimum confidence and maximum metric per oracle.
pub fn aggregate(per_case: &[(MetricVector, Vec<f64>)]) -> ScoreVector {
    let (first_m, first_c) = &per_case[0];
    let mut conf = first_c.clone();
    let mut metrics = *first_m;
    for (m, c) in &per_case[1..] {
        for (acc, x) in conf.iter_mut().zip(c) {
            *acc = acc.min(*x);
        }
        metrics = metrics.worst(m);
    }
    ScoreVector { conf, metrics }
}
