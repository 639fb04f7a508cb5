//! `cfgrepair`: repair, baseline, simulation and experiment commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use misconfig_repair::experiment::{default_checkpoints, run_experiment, ExperimentConfig, ExperimentInput};
use misconfig_repair::oracles::compute_metrics;
use misconfig_repair::scenario;
use misconfig_repair::search::{confirm_patch, repair, Budget, Mode, RepairConfig, StopReason};
use misconfig_repair::sim::{default_space, parse_passenger_file, simulate};
use misconfig_repair::{Building, Configuration, DmThresholds, Evaluator, OracleSpec, ParameterSpace, TestCase};

#[derive(Parser)]
#[command(name = "cfgrepair", version, about = "Search-based repair of elevator dispatcher configurations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repair a failing configuration with the suspiciousness-guided search.
    Repair(RepairArgs),
    /// Same as `repair --mode unguided`.
    Baseline(BaselineArgs),
    /// Run one configuration on test cases and print the metrics.
    Simulate(SimulateArgs),
    /// Repeated runs of the guided and unguided searches plus manual patches.
    Experiment(ExperimentArgs),
    /// Write a bundled scenario's input files.
    Scenario(ScenarioArgs),
}

#[derive(Args)]
struct Inputs {
    /// Parameter space file; defaults to the built-in dispatcher space.
    #[arg(long)]
    space: Option<PathBuf>,
    /// Configuration to repair.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Building description; defaults to three cars serving twelve floors.
    #[arg(long)]
    building: Option<PathBuf>,
    /// Comma-separated passenger files of the failing suite.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<PathBuf>,
    /// Comma-separated held-out passenger files for patch confirmation.
    #[arg(long, value_delimiter = ',')]
    validation: Vec<PathBuf>,
    /// Use a bundled scenario for any input not given explicitly.
    #[arg(long)]
    scenario: Option<String>,
    /// Oracle thresholds and scales (`awt.threshold=25` lines).
    #[arg(long)]
    oracles: Option<PathBuf>,
    /// Decision-maker thresholds (`awt_max_s=25` lines).
    #[arg(long)]
    dm_thresholds: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for simulations; defaults to the number of logical cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 500)]
    budget_evals: usize,
    #[arg(long)]
    budget_seconds: Option<f64>,
}

#[derive(Args)]
struct RepairArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    search: SearchArgs,
    /// `guided` or `unguided`.
    #[arg(long, default_value = "guided")]
    mode: Mode,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    inputs: Inputs,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Comma-separated evaluation counts; defaults to five evenly spaced points.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<usize>,
    /// Directory of `.cfg` files written by experts.
    #[arg(long)]
    manual_patches: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value = scenario::SEEDED_MISCONFIG_A)]
    name: String,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn read_cases(paths: &[PathBuf]) -> Result<Vec<TestCase>> {
    paths
        .iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            parse_passenger_file(&id, &read(p)?).with_context(|| format!("invalid passenger file {}", p.display()))
        })
        .collect()
}

/// Inputs resolved from files, falling back to a scenario and then to defaults.
struct Loaded {
    space: Arc<ParameterSpace>,
    config: Configuration,
    building: Building,
    suite: Vec<TestCase>,
    validation: Vec<TestCase>,
    manual: Vec<(String, Configuration)>,
    thresholds: DmThresholds,
}

impl Inputs {
    fn load(&self) -> Result<Loaded> {
        let sc = self.scenario.as_deref().map(scenario::by_name).transpose()?;
        let space = match &self.space {
            Some(p) => Arc::new(ParameterSpace::parse(&read(p)?).with_context(|| format!("invalid space file {}", p.display()))?),
            None => sc.as_ref().map_or_else(default_space, |s| s.space.clone()),
        };
        let config = match (&self.config, &sc) {
            (Some(p), _) => Configuration::parse(&read(p)?, &space).with_context(|| format!("invalid configuration {}", p.display()))?,
            (None, Some(s)) => s.misconfig.clone(),
            (None, None) => bail!("--config or --scenario is required"),
        };
        let building = match (&self.building, &sc) {
            (Some(p), _) => Building::parse(&read(p)?).with_context(|| format!("invalid building file {}", p.display()))?,
            (None, Some(s)) => s.building.clone(),
            (None, None) => Building::default(),
        };
        let suite = match (self.suite.is_empty(), &sc) {
            (false, _) => read_cases(&self.suite)?,
            (true, Some(s)) => s.suite.clone(),
            (true, None) => bail!("--suite or --scenario is required"),
        };
        let validation = match (self.validation.is_empty(), &sc) {
            (false, _) => read_cases(&self.validation)?,
            (true, Some(s)) => s.validation.clone(),
            (true, None) => Vec::new(),
        };
        let thresholds = match &self.dm_thresholds {
            Some(p) => DmThresholds::parse(&read(p)?).with_context(|| format!("invalid thresholds file {}", p.display()))?,
            None => DmThresholds::default(),
        };
        Ok(Loaded {
            space,
            config,
            building,
            suite,
            validation,
            manual: sc.map(|s| s.manual).unwrap_or_default(),
            thresholds,
        })
    }

    fn oracles(&self, default: OracleSpec) -> Result<OracleSpec> {
        match &self.oracles {
            Some(p) => OracleSpec::parse(&read(p)?).with_context(|| format!("invalid oracle file {}", p.display())),
            None => Ok(default),
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        Ok(&self.out_dir)
    }
}

fn cmd_repair(inputs: &Inputs, search: &SearchArgs, mode: Mode) -> Result<ExitCode> {
    let l = inputs.load()?;
    let oracles = inputs.oracles(OracleSpec::default())?;
    let evaluator = Evaluator::new(l.building.clone(), oracles.clone(), l.suite, inputs.seed)?;
    let mut cfg = RepairConfig::new(mode, search.budget_evals, inputs.seed);
    cfg.budget.seconds = search.budget_seconds;
    let log = repair(&l.config, &evaluator, &cfg)?;
    let out = inputs.out_dir()?;
    write(&out.join("runlog.jsonl"), log.to_jsonl()?)?;
    log.export_archive(&out.join("archive"))?;

    let (chosen, trace) = match log.passing() {
        Some(e) => (e, vec![format!("#{} passes every oracle", e.eval_index)]),
        None => {
            let front = log.front();
            let d = misconfig_repair::decide(&front, &l.config, &l.thresholds)?;
            (front[d.index], d.trace)
        }
    };
    write(&out.join("patch.cfg"), chosen.patch.to_text())?;
    let mut decision = format!("chosen: #{}\n", chosen.eval_index);
    for line in &trace {
        decision.push_str(line);
        decision.push('\n');
    }
    write(&out.join("decision.txt"), &decision)?;

    println!("stopped: {:?} after {} evaluations", log.stop, log.evaluations());
    print!("{decision}");
    if !l.validation.is_empty() {
        let v = Evaluator::new(l.building, oracles, l.validation, inputs.seed)?;
        let c = confirm_patch(&l.config, &chosen.patch, &v)?;
        write(&out.join("confirmation.json"), serde_json::to_string_pretty(&c)? + "\n")?;
        if c.passed() {
            println!("confirmation: passed");
        } else {
            println!("confirmation: regressed on {}", c.regressions.join(", "));
        }
    }
    Ok(match log.stop {
        StopReason::AllPassing => ExitCode::SUCCESS,
        _ => ExitCode::from(2),
    })
}

fn cmd_simulate(inputs: &Inputs) -> Result<ExitCode> {
    let l = inputs.load()?;
    println!("case,awt_s,lwt_s,pct_wt_gt55,att_s,ltt_s,pct_tt_gt70,unserved");
    for tc in &l.suite {
        let r = simulate(&l.config, tc, &l.building, inputs.seed).with_context(|| format!("simulating {}", tc.id))?;
        let m = compute_metrics(&r)?;
        let cols: Vec<String> = m.to_array().iter().map(f64::to_string).collect();
        println!("{},{},{}", tc.id, cols.join(","), r.unserved());
    }
    Ok(ExitCode::SUCCESS)
}

fn read_manual(dir: &Path, space: &Arc<ParameterSpace>) -> Result<Vec<(String, Configuration)>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let c = Configuration::parse(&read(p)?, space).with_context(|| format!("invalid configuration {}", p.display()))?;
            Ok((name, c))
        })
        .collect()
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<ExitCode> {
    let inputs = &args.inputs;
    let l = inputs.load()?;
    let oracles = inputs.oracles(OracleSpec::experiment())?;
    let manual = match &args.manual_patches {
        Some(dir) => read_manual(dir, &l.space)?,
        None => l.manual,
    };
    let validation = if l.validation.is_empty() {
        None
    } else {
        Some(Evaluator::new(l.building.clone(), oracles.clone(), l.validation, inputs.seed)?)
    };
    let input = ExperimentInput {
        initial: l.config,
        evaluator: Evaluator::new(l.building, oracles, l.suite, inputs.seed)?,
        validation,
        manual,
    };
    let cfg = ExperimentConfig {
        runs: args.runs,
        budget: Budget {
            evaluations: args.search.budget_evals,
            seconds: args.search.budget_seconds,
        },
        checkpoints: if args.checkpoints.is_empty() {
            default_checkpoints(args.search.budget_evals)
        } else {
            args.checkpoints.clone()
        },
        thresholds: l.thresholds,
        ..ExperimentConfig::new(args.runs, args.search.budget_evals, inputs.seed)
    };
    let report = run_experiment(&input, &cfg)?;
    report.write(inputs.out_dir()?)?;
    print!("{}", report.stats_csv());
    print!("{}", report.metrics_csv());
    Ok(ExitCode::SUCCESS)
}

fn cmd_scenario(args: &ScenarioArgs) -> Result<ExitCode> {
    scenario::by_name(&args.name)?.write_files(&args.out_dir)?;
    println!("wrote {} to {}", args.name, args.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn with_workers(workers: Option<usize>, f: impl FnOnce() -> Result<ExitCode> + Send) -> Result<ExitCode> {
    match workers {
        Some(0) => bail!("--workers must be positive"),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f),
        None => f(),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Repair(a) => with_workers(a.inputs.workers, || cmd_repair(&a.inputs, &a.search, a.mode)),
        Command::Baseline(a) => with_workers(a.inputs.workers, || cmd_repair(&a.inputs, &a.search, Mode::Unguided)),
        Command::Simulate(a) => with_workers(a.inputs.workers, || cmd_simulate(&a.inputs)),
        Command::Experiment(a) => with_workers(a.inputs.workers, || cmd_experiment(a)),
        Command::Scenario(a) => cmd_scenario(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
