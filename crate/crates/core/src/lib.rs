//! Search-based repair of misconfigured elevator dispatchers.
//!
//! A simulator scores dispatcher configurations against passenger-list test cases,
//! a many-objective search repairs failing configurations, and a rule-based decision
//! maker picks one patch from the resulting front.

pub mod config;
pub mod decision;
pub mod error;
pub mod experiment;
pub mod kv;
pub mod oracles;
pub mod scalar;
pub mod scenario;
pub mod search;
pub mod sim;
pub mod stats;

pub use config::{Configuration, ParameterSpace, Value};
pub use decision::{decide, DmThresholds};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentInput, Report};
pub use oracles::{Evaluator, MetricVector, OracleSpec};
pub use search::{repair, Mode, RepairConfig, RunLog};
pub use sim::{simulate, Building, TestCase};

/// Scores in double precision, as produced by the evaluator.
pub type Score = oracles::ScoreVector<f64>;
/// Exact ratios for suspiciousness and Â12.
pub type Rational = num_rational::Rational64;
