//! Bundled repair scenarios.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::config::{Configuration, ParameterSpace};
use crate::error::{Error, Result};
use crate::experiment::ExperimentInput;
use crate::oracles::{Evaluator, OracleSpec};
use crate::sim::{default_configuration, default_space, traffic, Building, TestCase};

/// Name of the bundled scenario with a deliberately degraded dispatcher.
pub const SEEDED_MISCONFIG_A: &str = "seeded-misconfig-A";

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub building: Building,
    pub space: Arc<ParameterSpace>,
    pub misconfig: Configuration,
    /// Failing cases the search repairs against.
    pub suite: Vec<TestCase>,
    /// Held-out cases for patch confirmation.
    pub validation: Vec<TestCase>,
    pub manual: Vec<(String, Configuration)>,
    pub sim_seed: u64,
}

fn with(base: &Configuration, settings: &[(&str, &str)]) -> Configuration {
    let mut c = base.clone();
    for (k, v) in settings {
        c.set_by_name(k, v).expect("bundled settings are valid");
    }
    c
}

/// Three cars, twelve floors, the default dispatcher space and a configuration
/// degraded in several performance-relevant parameters.
pub fn seeded_misconfig_a() -> Scenario {
    let building = Building::default();
    let misconfig = with(
        &default_configuration(),
        &[
            ("eta_weight", "0.1"),
            ("load_weight", "250"),
            ("stop_count_weight", "50"),
            ("door_dwell_extra_s", "10"),
            ("car_full_ratio", "0.45"),
            ("parking_policy", "none"),
        ],
    );
    let case = |profile, seed| traffic::generate(profile, 300, 3600.0, &building, seed);
    use traffic::Profile::*;
    let suite = vec![case(UpPeak, 101), case(DownPeak, 102), case(Mixed, 103)];
    let validation = vec![case(UpPeak, 201), case(DownPeak, 202), case(Mixed, 203)];
    // Each expert fixes part of the problem.
    let manual = vec![
        ("expert-1", with(&misconfig, &[("eta_weight", "1"), ("load_weight", "20")])),
        ("expert-2", with(&misconfig, &[("door_dwell_extra_s", "1"), ("car_full_ratio", "0.8")])),
        ("expert-3", with(&misconfig, &[("stop_count_weight", "3"), ("parking_policy", "lobby")])),
        ("expert-4", with(&misconfig, &[("eta_weight", "2"), ("stop_count_weight", "5"), ("door_dwell_extra_s", "3")])),
        ("expert-5", with(&misconfig, &[("zoning_enabled", "true"), ("up_peak_mode", "true")])),
        ("expert-6", with(&misconfig, &[("load_weight", "40"), ("car_full_ratio", "0.9"), ("parking_policy", "spread")])),
    ];
    Scenario {
        name: SEEDED_MISCONFIG_A.to_string(),
        building,
        space: default_space(),
        misconfig,
        suite,
        validation,
        manual: manual.into_iter().map(|(n, c)| (n.to_string(), c)).collect(),
        sim_seed: 1,
    }
}

pub fn by_name(name: &str) -> Result<Scenario> {
    match name {
        SEEDED_MISCONFIG_A => Ok(seeded_misconfig_a()),
        other => Err(Error::InvalidArgument(format!("unknown scenario `{other}`"))),
    }
}

impl Scenario {
    pub fn evaluator(&self, oracles: OracleSpec) -> Result<Evaluator> {
        Evaluator::new(self.building.clone(), oracles, self.suite.clone(), self.sim_seed)
    }

    pub fn validation_evaluator(&self, oracles: OracleSpec) -> Result<Evaluator> {
        Evaluator::new(self.building.clone(), oracles, self.validation.clone(), self.sim_seed)
    }

    pub fn experiment_input(&self, oracles: OracleSpec) -> Result<ExperimentInput> {
        Ok(ExperimentInput {
            initial: self.misconfig.clone(),
            evaluator: self.evaluator(oracles.clone())?,
            validation: Some(self.validation_evaluator(oracles)?),
            manual: self.manual.clone(),
        })
    }

    /// Writes the scenario as plain input files:
    /// `space.txt`, `building.txt`, `misconfig.cfg`, `suite/`, `validation/` and `manual/`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        let put = |rel: &str, text: String| -> Result<()> {
            let p = dir.join(rel);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put("space.txt", self.space.to_text())?;
        put("building.txt", self.building.to_text())?;
        put("misconfig.cfg", self.misconfig.to_text())?;
        for tc in &self.suite {
            put(&format!("suite/{}.csv", tc.id), tc.to_csv())?;
        }
        for tc in &self.validation {
            put(&format!("validation/{}.csv", tc.id), tc.to_csv())?;
        }
        for (name, c) in &self.manual {
            put(&format!("manual/{name}.cfg"), c.to_text())?;
        }
        Ok(())
    }
}
