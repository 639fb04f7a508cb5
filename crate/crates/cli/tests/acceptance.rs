//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use misconfig_repair::decision::{decide_candidates, Candidate, DmThresholds};
use misconfig_repair::experiment::{run_experiment, ExperimentConfig, Report};
use misconfig_repair::oracles::{MetricVector, ScoreVector};
use misconfig_repair::scenario::seeded_misconfig_a;
use misconfig_repair::search::{
    dominates, generate_patch, select_parameter, Archive, ArchiveEntry, Impact, Lineage, Mode, SuspTracker, Update,
};
use misconfig_repair::sim::{default_configuration, NEAR_INERT, PERFORMANCE_CRITICAL};
use misconfig_repair::stats::{a12_exact, confidence_hypervolume, exact_u_counts, rank_sum, Alternative, EffectSize};
use misconfig_repair::{OracleSpec, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scenario_report() -> Report {
    let input = seeded_misconfig_a().experiment_input(OracleSpec::experiment()).expect("scenario inputs");
    run_experiment(&input, &ExperimentConfig::new(10, 500, 1)).expect("experiment runs")
}

fn end_to_end(r: &Report) -> Outcome {
    let last = r.comparisons.last().ok_or("no comparison")?;
    ensure(r.modes[..2] == [Mode::Guided, Mode::Unguided], "unexpected mode order")?;
    let mean = |slot| r.outcomes_of(slot).map(|o| *o.hv.last().unwrap()).sum::<f64>() / r.runs as f64;
    let (g, u) = (mean(0), mean(1));
    ensure(g > u, format!("mean HV guided {g:.4} <= unguided {u:.4}"))?;
    ensure(last.stat.a12 >= 0.7, format!("A12 {} < 0.7", last.stat.a12))?;
    let orig = r.original.metrics;
    for o in r.outcomes_of(0) {
        let m = o.choice.metrics;
        ensure(
            m.awt_s < orig.awt_s && m.lwt_s < orig.lwt_s,
            format!("run {}: DM patch AWT {:.2} LWT {:.2} vs original {:.2} {:.2}", o.run, m.awt_s, m.lwt_s, orig.awt_s, orig.lwt_s),
        )?;
    }
    Ok(format!("mean HV guided {g:.4} vs unguided {u:.4}, A12 {:.2}, p {:.4}; all 10 DM patches improve AWT and LWT", last.stat.a12, last.stat.p_value))
}

fn suspiciousness_learning(r: &Report) -> Outcome {
    let mean_of = |o: &misconfig_repair::experiment::RunOutcome, names: &[&str]| names.iter().map(|n| o.suspiciousness[*n]).sum::<f64>() / names.len() as f64;
    let crit: Vec<f64> = r.outcomes_of(0).map(|o| mean_of(o, &PERFORMANCE_CRITICAL)).collect();
    let inert: Vec<f64> = r.outcomes_of(0).map(|o| mean_of(o, &NEAR_INERT)).collect();
    let t = rank_sum(&crit, &inert, Alternative::Greater).map_err(|e| e.to_string())?;
    ensure(t.p_value < 0.05, format!("one-sided p {}", t.p_value))?;
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(format!("critical {:.3} vs inert {:.3}, one-sided p {:.2e}", avg(&crit), avg(&inert), t.p_value))
}

fn susp_exact() -> Outcome {
    let triples: [(u64, u64, u64); 14] = [
        (0, 0, 0),
        (1, 1, 1),
        (2, 1, 1),
        (1, 2, 2),
        (3, 1, 1),
        (0, 0, 5),
        (5, 0, 0),
        (0, 5, 0),
        (2, 2, 1),
        (1, 0, 4),
        (4, 3, 2),
        (0, 1, 9),
        (7, 0, 13),
        (10, 10, 10),
    ];
    let n_susp = 5;
    for (p, n, s) in triples {
        let mut t = SuspTracker::new(1, n_susp);
        for (count, impact) in [(p, Impact::Positive), (n, Impact::Negative), (s, Impact::None)] {
            for _ in 0..count {
                t.update(&[0], impact);
            }
        }
        let total = p + n + s;
        let expected = if total < u64::from(n_susp) {
            Rational::new(1, 2)
        } else {
            Rational::new((p + n) as i64, total as i64)
        };
        let got: Rational = t.suspiciousness(0);
        ensure(got == expected, format!("({p},{n},{s}): got {got}, expected {expected}"))?;
    }
    Ok(format!("{} triples exact, warm-up boundary at 4/5 mutations", triples.len()))
}

fn mutation_counts() -> Outcome {
    let parent = default_configuration();
    let scores = vec![0.5; parent.space().len()];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws = 100_000;
    let mut hist = [0usize; 4];
    for _ in 0..draws {
        let (_, mutated) = generate_patch(&parent, &scores, &mut rng).map_err(|e| e.to_string())?;
        ensure(!mutated.is_empty(), "patch without mutation")?;
        ensure(mutated.iter().collect::<BTreeSet<_>>().len() == mutated.len(), "parameter mutated twice")?;
        if mutated.len() <= 3 {
            hist[mutated.len()] += 1;
        }
    }
    let mut details = Vec::new();
    let mut reach = 1.0;
    for m in 1..=3 {
        let stop = 1.0 - 0.5f64.powi(m as i32);
        let expected = reach * stop;
        reach *= 1.0 - stop;
        let freq = hist[m] as f64 / draws as f64;
        ensure((freq - expected).abs() <= 0.01, format!("P({m}) = {freq}, expected {expected}"))?;
        details.push(format!("P({m}) {freq:.4}/{expected:.4}"));
    }
    Ok(details.join(", "))
}

fn roulette() -> Outcome {
    let scores = [0.8, 0.4, 0.0, 0.2, 0.6];
    let total: f64 = scores.iter().sum();
    let excluded = [false; 5];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let mut hist = [0usize; 5];
    for _ in 0..draws {
        hist[select_parameter(&scores, &excluded, &mut rng).map_err(|e| e.to_string())?] += 1;
    }
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let dev = (hist[i] as f64 / draws as f64 - scores[i] / total).abs();
        worst = worst.max(dev);
        ensure(dev <= 0.01, format!("index {i}: deviation {dev}"))?;
    }
    Ok(format!("max deviation {worst:.4} over {draws} draws"))
}

fn entry(conf: Vec<f64>, awt: f64, eval_index: usize) -> ArchiveEntry {
    let mut m = [0.0; 6];
    m[0] = awt;
    ArchiveEntry {
        patch: default_configuration(),
        score: ScoreVector {
            conf,
            metrics: MetricVector::from_array(m),
        },
        lineage: Lineage {
            parent: None,
            parent_score: None,
            mutated: vec![],
        },
        eval_index,
    }
}

fn archive_stress() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut archive = Archive::guided(12);
    let mut evictions = 0;
    for i in 0..10_000 {
        // Coarse grids make dominance, duplicates and AWT ties common.
        let conf: Vec<f64> = (0..6).map(|_| -(rng.random_range(0..8) as f64) / 8.0).collect();
        let awt = rng.random_range(0..30) as f64;
        let cand = entry(conf, awt, i);
        let before: Vec<ArchiveEntry> = archive.entries().to_vec();
        let update = archive.update(cand.clone(), &mut rng);

        // Independent re-computation of the rules.
        let rejected = before.iter().any(|e| dominates(&e.score.conf, &cand.score.conf));
        let mut expected: Vec<ArchiveEntry> = if rejected {
            before.clone()
        } else {
            let mut kept: Vec<ArchiveEntry> = before.iter().filter(|e| !dominates(&cand.score.conf, &e.score.conf)).cloned().collect();
            kept.push(cand.clone());
            kept
        };
        if expected.len() > 12 {
            let max_awt = expected.iter().map(|e| e.score.metrics.awt_s).fold(f64::MIN, f64::max);
            let Update::Inserted { evicted: Some(gone), .. } = update else {
                return Err(format!("insertion {i}: expected an eviction"));
            };
            let victim = expected.iter().position(|e| e.eval_index == gone).ok_or("evicted unknown entry")?;
            ensure(expected[victim].score.metrics.awt_s == max_awt, format!("insertion {i}: evicted AWT below maximum"))?;
            expected.remove(victim);
            evictions += 1;
        }
        let ids = |v: &[ArchiveEntry]| v.iter().map(|e| e.eval_index).collect::<BTreeSet<_>>();
        ensure(ids(&expected) == ids(archive.entries()), format!("insertion {i}: archive differs from brute force"))?;
        ensure(archive.len() <= 12, format!("insertion {i}: size {}", archive.len()))?;
        let a = archive.entries();
        for x in a {
            for y in a {
                ensure(!dominates(&x.score.conf, &y.score.conf), format!("insertion {i}: dominated member"))?;
            }
        }
    }
    Ok(format!("10000 insertions, {evictions} evictions, all checks hold"))
}

/// Dominated fraction of uniform samples from the front's bounding box, times its volume.
fn monte_carlo(front: &[Vec<f64>], samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let top: Vec<f64> = (0..6).map(|d| front.iter().map(|p| p[d]).fold(-1.0, f64::max)).collect();
    let volume: f64 = top.iter().map(|t| t + 1.0).product();
    let mut hits = 0usize;
    let mut x = [0.0; 6];
    for _ in 0..samples {
        for (v, t) in x.iter_mut().zip(&top) {
            *v = rng.random_range(-1.0..=*t);
        }
        if front.iter().any(|p| p.iter().zip(&x).all(|(a, b)| a >= b)) {
            hits += 1;
        }
    }
    volume * hits as f64 / samples as f64
}

fn hypervolume_check() -> Outcome {
    let e = |x: f64, y: f64| (x - y).abs() <= 1e-12;
    let cube = confidence_hypervolume(&[vec![0.0; 6]]).map_err(|e| e.to_string())?;
    let small = confidence_hypervolume(&[vec![-0.5; 6]]).map_err(|e| e.to_string())?;
    ensure(e(cube, 1.0) && e(small, 0.015625), format!("analytic cases {cube} {small}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for f in 0..50 {
        let n = rng.random_range(1..=12);
        let front: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| -rng.random_range(0.0..0.6)).collect()).collect();
        let exact = confidence_hypervolume(&front).map_err(|e| e.to_string())?;
        let mc = monte_carlo(&front, 1_000_000, &mut rng);
        let rel = (exact - mc).abs() / exact;
        worst = worst.max(rel);
        ensure(rel <= 0.01, format!("front {f}: exact {exact} vs Monte Carlo {mc}"))?;
    }
    Ok(format!("analytic cases exact; 50 fronts, max relative gap {:.3}%", worst * 100.0))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

fn statistics() -> Outcome {
    let mut checked = 0;
    for total in 2..=12 {
        for m in 1..total {
            let n = total - m;
            let arrangements = subsets(total, m);
            // U of every arrangement, with ranks 1..=total.
            let us: Vec<usize> = arrangements.iter().map(|s| s.iter().map(|&r| r + 1).sum::<usize>() - m * (m + 1) / 2).collect();
            let mut counts = vec![0u64; m * n + 1];
            for &u in &us {
                counts[u] += 1;
            }
            ensure(counts == exact_u_counts(m, n), format!("count table ({m},{n})"))?;
            let all = us.len() as f64;
            for (s, &u) in arrangements.iter().zip(&us) {
                let a: Vec<f64> = s.iter().map(|&r| r as f64).collect();
                let b: Vec<f64> = (0..total).filter(|r| !s.contains(r)).map(|r| r as f64).collect();
                let lower = us.iter().filter(|&&v| v <= u).count() as f64 / all;
                let upper = us.iter().filter(|&&v| v >= u).count() as f64 / all;
                let expected = (2.0 * lower.min(upper)).min(1.0);
                let got = rank_sum(&a, &b, Alternative::TwoSided).map_err(|e| e.to_string())?;
                ensure(got.exact && (got.p_value - expected).abs() < 1e-12, format!("({m},{n}) u={u}: p {} vs {expected}", got.p_value))?;
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let a: Vec<u8> = (0..rng.random_range(1..12)).map(|_| rng.random_range(0..6)).collect();
        let b: Vec<u8> = (0..rng.random_range(1..12)).map(|_| rng.random_range(0..6)).collect();
        let ab = a12_exact(&a, &b).map_err(|e| e.to_string())?;
        let ba = a12_exact(&b, &a).map_err(|e| e.to_string())?;
        ensure(ab + ba == Rational::from_integer(1), "A12 complement")?;
        ensure(a12_exact(&a, &a).map_err(|e| e.to_string())? == Rational::new(1, 2), "A12 self")?;
    }
    let cuts = [
        (0.146, EffectSize::Negligible),
        (0.147, EffectSize::Small),
        (0.329, EffectSize::Small),
        (0.33, EffectSize::Medium),
        (0.473, EffectSize::Medium),
        (0.474, EffectSize::Large),
    ];
    for (d, cat) in cuts {
        ensure(EffectSize::from_d(d) == cat, format!("d={d} categorized as {}", EffectSize::from_d(d)))?;
    }
    Ok(format!("{checked} exact p-values match enumeration; A12 identities exact; effect cut points hold"))
}

fn cand(eval_index: usize, m: [f64; 6], hamming: usize) -> Candidate {
    Candidate {
        metrics: MetricVector::from_array(m),
        hamming,
        eval_index,
    }
}

/// The cascade written as a lexicographic minimum over per-stage keys.
fn brute_force(cands: &[Candidate], t: &DmThresholds) -> usize {
    let key = |c: &Candidate| {
        let m = c.metrics;
        let st = |v: f64, lim: f64| if v < lim { [0.0, 0.0] } else { [1.0, v] };
        let mut k = Vec::new();
        k.extend(st(m.awt_s, t.awt_max_s));
        k.extend(st(m.pct_wt_gt55, t.wt55_pct_max));
        k.extend(st(m.att_s, t.att_max_s));
        k.extend(st(m.pct_tt_gt70, t.tt70_pct_max));
        k.extend([m.lwt_s, m.ltt_s, c.hamming as f64, c.eval_index as f64]);
        k
    };
    (0..cands.len())
        .min_by(|&i, &j| key(&cands[i]).partial_cmp(&key(&cands[j])).unwrap())
        .unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn decision_maker() -> Outcome {
    let t = DmThresholds::default();
    // Stage 1 drops A, stage 2 drops B, stage 3 drops C; stages 5 and 6 decide among ties below.
    let table = [
        cand(1, [27.0, 60.0, 4.0, 30.0, 80.0, 3.0], 2),
        cand(2, [21.0, 70.0, 14.0, 32.0, 85.0, 4.0], 3),
        cand(3, [23.0, 75.0, 6.0, 48.0, 70.0, 2.0], 1),
        cand(4, [24.0, 90.0, 7.0, 40.0, 95.0, 9.0], 6),
    ];
    let d = decide_candidates(&table, &t).map_err(|e| e.to_string())?;
    ensure(table[d.index].eval_index == 4, format!("chose #{}", table[d.index].eval_index))?;
    ensure(d.index == brute_force(&table, &t), "cascade disagrees with brute force")?;
    for (stage, gone) in [(0, "#1"), (1, "#2"), (2, "#3")] {
        ensure(d.trace[stage].contains(&format!("eliminated {gone}")), format!("stage {} trace: {}", stage + 1, d.trace[stage]))?;
    }
    let late = [
        cand(5, [20.0, 50.0, 2.0, 30.0, 60.0, 12.0], 1),
        cand(6, [20.0, 55.0, 2.0, 30.0, 60.0, 4.0], 1),
        cand(7, [20.0, 50.0, 2.0, 30.0, 65.0, 4.0], 1),
        cand(8, [20.0, 50.0, 2.0, 30.0, 60.0, 4.0], 3),
        cand(9, [20.0, 50.0, 2.0, 30.0, 60.0, 4.0], 2),
    ];
    let d2 = decide_candidates(&late, &t).map_err(|e| e.to_string())?;
    ensure(late[d2.index].eval_index == 9 && d2.index == brute_force(&late, &t), "late-stage table")?;
    for perm in permutations(4) {
        let shuffled: Vec<Candidate> = perm.iter().map(|&i| table[i]).collect();
        let pick = decide_candidates(&shuffled, &t).map_err(|e| e.to_string())?.index;
        ensure(shuffled[pick].eval_index == 4, "result depends on input order")?;
    }
    Ok("cascade tables match brute force; all 24 orderings agree".into())
}

fn run_cli(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cfgrepair")).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let mut files = 0;
    for entry in std::fs::read_dir(a).map_err(|e| e.to_string())? {
        let p = entry.map_err(|e| e.to_string())?.path();
        let q = b.join(p.file_name().unwrap());
        if p.is_dir() {
            files += same_tree(&p, &q)?;
        } else {
            let x = std::fs::read(&p).map_err(|e| e.to_string())?;
            let y = std::fs::read(&q).map_err(|e| format!("{}: {e}", q.display()))?;
            ensure(x == y, format!("{} differs", p.display()))?;
            files += 1;
        }
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let sc = d("scenario");
    run_cli(&["scenario", "--out-dir", &sc])?;
    let cfg = format!("{sc}/misconfig.cfg");
    let suite = format!("{sc}/suite/up-peak-101.csv,{sc}/suite/mixed-103.csv");
    let mut files = 0;
    let mut stdout = Vec::new();
    for (name, base) in [
        ("repair", vec!["repair", "--config", &cfg, "--suite", &suite, "--oracles", "", "--budget-evals", "60", "--seed", "7"]),
        ("baseline", vec!["baseline", "--config", &cfg, "--suite", &suite, "--oracles", "", "--budget-evals", "60", "--seed", "7"]),
        ("experiment", vec!["experiment", "--scenario", "seeded-misconfig-A", "--runs", "2", "--budget-evals", "30", "--seed", "3"]),
        ("simulate", vec!["simulate", "--config", &cfg, "--suite", &suite, "--seed", "5"]),
    ] {
        let mut outs = Vec::new();
        for rep in 0..2 {
            let out = d(&format!("{name}-{rep}"));
            // Experiment-mode oracles keep the search running for the whole budget.
            let oracle_file = d("experiment.oracles");
            std::fs::write(&oracle_file, OracleSpec::experiment().to_text()).map_err(|e| e.to_string())?;
            let mut args: Vec<&str> = base.iter().map(|s| if s.is_empty() { oracle_file.as_str() } else { s }).collect();
            args.extend(["--out-dir", &out]);
            let (code, text) = run_cli(&args)?;
            ensure(code == 0 || code == 2, format!("{name} exited with {code}"))?;
            stdout.push(text);
            outs.push(out);
        }
        ensure(stdout[stdout.len() - 1] == stdout[stdout.len() - 2], format!("{name} stdout differs"))?;
        if Path::new(&outs[0]).exists() {
            files += same_tree(Path::new(&outs[0]), Path::new(&outs[1]))?;
        }
    }
    Ok(format!("repair, baseline, experiment and simulate repeat byte-identically ({files} files)"))
}

fn confirmation(r: &Report) -> Outcome {
    for o in &r.outcomes {
        let c = o.confirmation.as_ref().ok_or("no validation result")?;
        ensure(c.passed(), format!("{} run {}: regressed on {}", o.mode, o.run, c.regressions.join(", ")))?;
    }
    Ok(format!("{} DM patches confirmed on the held-out suite", r.outcomes.len()))
}

fn main() {
    let report = catch_unwind(scenario_report).map_err(|_| "scenario experiment panicked".to_string());
    let with_report = |f: fn(&Report) -> Outcome| match &report {
        Ok(r) => f(r),
        Err(e) => Err(e.clone()),
    };
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut check = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match &r {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d}"),
            Err(d) => println!("criterion {n:>2} FAIL  {name}: {d}"),
        }
        results.push((n, name, r));
    };
    check(1, "end-to-end guided vs unguided", &mut || with_report(end_to_end));
    check(2, "suspiciousness learning", &mut || with_report(suspiciousness_learning));
    check(3, "suspiciousness exact values", &mut susp_exact);
    check(4, "mutation count distribution", &mut mutation_counts);
    check(5, "roulette wheel frequencies", &mut roulette);
    check(6, "archive invariants under stress", &mut archive_stress);
    check(7, "hypervolume exactness", &mut hypervolume_check);
    check(8, "rank-sum, A12 and effect sizes", &mut statistics);
    check(9, "decision-maker cascade", &mut decision_maker);
    check(10, "CLI determinism", &mut determinism);
    check(11, "patch confirmation", &mut || with_report(confirmation));
    let failed = results.iter().filter(|(_, _, r)| r.is_err()).count();
    println!("{} of {} acceptance criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
