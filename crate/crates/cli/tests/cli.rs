use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cfgrepair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfgrepair")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sc");
        let o = cfgrepair(&["scenario", "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        Self { dir }
    }

    fn path(&self, rel: &str) -> String {
        self.dir.path().join(rel).to_string_lossy().into_owned()
    }

    fn suite(&self) -> String {
        format!("{},{}", self.path("sc/suite/up-peak-101.csv"), self.path("sc/suite/down-peak-102.csv"))
    }

    fn oracles(&self, text: &str) -> String {
        let p = self.path("oracles.txt");
        fs::write(&p, text).unwrap();
        p
    }
}

fn lines(p: impl AsRef<Path>) -> usize {
    fs::read_to_string(p).unwrap().lines().count()
}

#[test]
fn help_lists_every_flag() {
    for cmd in ["repair", "baseline", "experiment"] {
        let help = stdout(&cfgrepair(&[cmd, "--help"]));
        for flag in ["--space", "--config", "--building", "--suite", "--oracles", "--dm-thresholds", "--budget-evals", "--budget-seconds", "--seed", "--workers", "--out-dir"] {
            assert!(help.contains(flag), "{cmd} help lacks {flag}");
        }
    }
    assert!(stdout(&cfgrepair(&["repair", "--help"])).contains("--mode"));
    let help = stdout(&cfgrepair(&["experiment", "--help"]));
    for flag in ["--runs", "--checkpoints", "--manual-patches"] {
        assert!(help.contains(flag));
    }
}

#[test]
fn unknown_flag_is_an_error() {
    let o = cfgrepair(&["repair", "--budget", "3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--budget"));
}

#[test]
fn missing_suite_file_names_it() {
    let f = Fixture::new();
    let o = cfgrepair(&["repair", "--config", &f.path("sc/misconfig.cfg"), "--suite", "no-such-case.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no-such-case.csv"));
}

#[test]
fn passing_configuration_exits_zero_immediately() {
    let f = Fixture::new();
    let oracles = f.oracles("awt.threshold=1000\nlwt.threshold=1000\nwt55.threshold=100\natt.threshold=1000\nltt.threshold=1000\ntt70.threshold=100\n");
    let out = f.path("pass");
    let o = cfgrepair(&["repair", "--config", &f.path("sc/misconfig.cfg"), "--suite", &f.suite(), "--oracles", &oracles, "--out-dir", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(lines(PathBuf::from(&out).join("runlog.jsonl")), 1);
}

#[test]
fn budget_expiry_exits_two_with_outputs() {
    let f = Fixture::new();
    let oracles = f.oracles("awt.threshold=0\nlwt.threshold=0\n");
    let out = f.path("repair");
    let o = cfgrepair(&[
        "repair",
        "--space",
        &f.path("sc/space.txt"),
        "--config",
        &f.path("sc/misconfig.cfg"),
        "--building",
        &f.path("sc/building.txt"),
        "--suite",
        &f.suite(),
        "--validation",
        &f.path("sc/validation/mixed-203.csv"),
        "--oracles",
        &oracles,
        "--budget-evals",
        "25",
        "--seed",
        "7",
        "--workers",
        "2",
        "--out-dir",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let out = PathBuf::from(out);
    assert_eq!(lines(out.join("runlog.jsonl")), 26);
    let first: serde_json::Value = serde_json::from_str(fs::read_to_string(out.join("runlog.jsonl")).unwrap().lines().nth(1).unwrap()).unwrap();
    for key in ["eval_index", "mutated_params", "conf", "metrics", "impact", "archive_size"] {
        assert!(first.get(key).is_some(), "run log lacks {key}");
    }
    assert_eq!(first["conf"].as_array().unwrap().len(), 6);
    assert!(out.join("patch.cfg").exists());
    assert!(out.join("archive/archive.csv").exists());
    assert!(fs::read_to_string(out.join("decision.txt")).unwrap().starts_with("chosen: #"));
    assert!(out.join("confirmation.json").exists());
    assert!(stdout(&o).contains("confirmation:"));
}

#[test]
fn baseline_archives_every_patch() {
    let f = Fixture::new();
    let oracles = f.oracles("awt.threshold=0\n");
    let out = f.path("baseline");
    let o = cfgrepair(&["baseline", "--config", &f.path("sc/misconfig.cfg"), "--suite", &f.suite(), "--oracles", &oracles, "--budget-evals", "12", "--out-dir", &out]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(lines(PathBuf::from(&out).join("archive/archive.csv")), 14);
}

#[test]
fn simulate_prints_metrics() {
    let f = Fixture::new();
    let args = ["simulate", "--config", &f.path("sc/misconfig.cfg"), "--suite", &f.suite(), "--seed", "3"];
    let a = cfgrepair(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "case,awt_s,lwt_s,pct_wt_gt55,att_s,ltt_s,pct_tt_gt70,unserved");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("up-peak-101,"));
    assert_eq!(stdout(&cfgrepair(&args)), text);

    let bad = f.path("bad.cfg");
    fs::write(&bad, "eta_weight=-4\n").unwrap();
    let o = cfgrepair(&["simulate", "--config", &bad, "--suite", &f.suite()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn experiment_smoke() {
    let f = Fixture::new();
    let out = f.path("exp");
    let o = cfgrepair(&[
        "experiment",
        "--scenario",
        "seeded-misconfig-A",
        "--runs",
        "2",
        "--budget-evals",
        "20",
        "--checkpoints",
        "10,20",
        "--manual-patches",
        &f.path("sc/manual"),
        "--out-dir",
        &out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = PathBuf::from(out);
    let hv = fs::read_to_string(out.join("hv.csv")).unwrap();
    assert!(hv.starts_with("mode,run,seed,hv_10,hv_20\n"));
    assert_eq!(hv.lines().count(), 5);
    assert_eq!(lines(out.join("stats.csv")), 3);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,misconf,manual,repair_dm,baseline_dm\n"));
    assert_eq!(metrics.lines().count(), 7);
    assert!(out.join("hv.dat").exists());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["manual"]["names"].as_array().unwrap().len(), 6);
    assert_eq!(fs::read_dir(out.join("logs")).unwrap().count(), 4);
}
