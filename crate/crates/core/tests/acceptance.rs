//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use tempnet::cli;
use tempnet::io::{parse_problem, render_report, ProblemDocument, ReportFormat, ReportOptions};
use tempnet::model::{intervals_overlap, ExtYear, Interval, Problem};
use tempnet::network::{build_network, check_admissible, NetVertex, SearchOptions, Summary};
use tempnet::oracle::{oracle_admissible, oracle_feasible};
use tempnet::solver::{all_pairs, enumerate_candidates, solve, Mode, SolverConfig};
use tempnet::temporal::{build_constraints, check_feasible, contact_interval, Variable};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn toy4() -> Problem {
    parse_problem(&std::fs::read_to_string(data("toy4.tnp")).unwrap()).unwrap()
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["tempnet"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    (code, out)
}

fn worked_example() -> Outcome {
    let q = toy4();
    let p = &q.phylogeny;
    let r = solve(&q, Mode::Minimum, &SolverConfig::default()).map_err(|e| e.to_string())?;
    ensure(r.minimum_cardinality == Some(1), format!("minimum cardinality {:?}", r.minimum_cardinality))?;
    let bd = Summary::from_names(p, &[("B", "D")]).unwrap();
    let sol = r.solutions.iter().find(|s| s.summary == bd).ok_or("{pre-B, pre-D} missing")?;
    let up = |n: &str| Variable::Vertex(NetVertex::Up(p.vertex(n).unwrap()));
    let (tb, td) = (&sol.witness.times[&up("B")], &sol.witness.times[&up("D")]);
    ensure(tb == td, "contact endpoints differ in time")?;
    let (lo, hi) = (800.into(), 2000.into());
    ensure(*tb > lo && *tb < hi, format!("contact time {tb} outside (800, 2000)"))?;

    let c = p.character_by_name("1").unwrap();
    let classes: BTreeSet<BTreeSet<String>> = sol
        .labeling
        .classes(c)
        .into_values()
        .map(|vs| vs.iter().map(|v| v.display_name(p)).collect())
        .collect();
    let expected: BTreeSet<BTreeSet<String>> = [
        vec!["A", "C", "E", "F", "R"],
        vec!["B", "pre-B", "D", "pre-D"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    ensure(classes == expected, format!("classes {classes:?}"))?;

    let path = data("toy4.tnp");
    let (code, out) = run_cli(&["solve", &path, "--max-contacts", "2", "--mode", "minimum", "--format", "json"]);
    let json: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    ensure(code == 0, format!("exit code {code}"))?;
    ensure(json["minimum_cardinality"] == 1, "CLI minimum cardinality")?;
    Ok(format!("contact at {tb}, classes match"))
}

fn empty_increment() -> Outcome {
    let mut q = toy4();
    q.max_contacts = 0;
    let r = solve(&q, Mode::Minimum, &SolverConfig::default()).map_err(|e| e.to_string())?;
    ensure(r.minimum_cardinality.is_none() && r.solutions.is_empty(), "unexpected solution")?;
    let (code, _) = run_cli(&["solve", &data("toy4.tnp"), "--max-contacts", "0"]);
    ensure(code == 1, format!("exit code {code}"))?;
    Ok("no solution, exit 1".into())
}

fn double_oracle() -> Outcome {
    let mut q = toy4();
    q.max_contacts = 1;
    let p = &q.phylogeny;
    let pairs = all_pairs(&q);
    ensure(pairs.len() == 15, "expected 15 candidate pairs")?;
    let mut expected = BTreeSet::new();
    for pair in pairs {
        let x = Summary::new([pair]);
        let adm = oracle_admissible(p, &x, 12).map_err(|e| e.to_string())?.is_some();
        let feas = oracle_feasible(&build_constraints(&q, &x), 10).map_err(|e| e.to_string())?;
        if adm && feas {
            expected.insert(x);
        }
    }
    let r = solve(&q, Mode::Minimum, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let got: BTreeSet<Summary> = r.solutions.into_iter().map(|s| s.summary).collect();
    ensure(got == expected, format!("solver {} vs oracle {}", got.len(), expected.len()))?;
    for names in [("B", "D"), ("A", "C")] {
        ensure(got.contains(&Summary::from_names(p, &[names]).unwrap()), format!("{names:?} missing"))?;
    }
    Ok(format!("{} size-1 solutions agree", got.len()))
}

fn interval_exclusion() -> Outcome {
    let mut q = toy4();
    q.max_contacts = 1;
    let p = q.phylogeny.clone();
    let v = |n: &str| p.vertex(n).unwrap();
    q.intervals.set(v("E"), Interval::years(-100, 500).unwrap());
    q.intervals.set(v("F"), Interval::years(600, 1100).unwrap());
    let mut excluded = 0;
    for d in ["C", "D"] {
        let a = contact_interval(&q, v("E")).unwrap();
        let b = contact_interval(&q, v(d)).unwrap();
        ensure(!intervals_overlap(a, b), format!("pre-E/pre-{d} intervals {a} {b} overlap"))?;
        let x = Summary::from_names(&p, &[("E", d)]).unwrap();
        ensure(
            enumerate_candidates(&q, 1, true).all(|s| s != x),
            format!("pre-E/pre-{d} not pruned"),
        )?;
        ensure(
            enumerate_candidates(&q, 1, false).any(|s| s == x),
            format!("pre-E/pre-{d} missing without prefilter"),
        )?;
        ensure(!check_feasible(&build_constraints(&q, &x)).is_feasible(), format!("pre-E/pre-{d} feasible"))?;
        excluded += 1;
    }
    Ok(format!("{excluded} pairs excluded by both checks"))
}

fn prefilter_soundness() -> Outcome {
    let mut rng = rng(5);
    let mut rejected = 0;
    for i in 0..300 {
        let q = random_problem(&mut rng, 7, 1, false);
        for pair in all_pairs(&q) {
            let a = contact_interval(&q, pair.first().base()).unwrap();
            let b = contact_interval(&q, pair.second().base()).unwrap();
            if intervals_overlap(a, b) {
                continue;
            }
            rejected += 1;
            let sys = build_constraints(&q, &Summary::new([pair]));
            ensure(!check_feasible(&sys).is_feasible(), format!("problem {i}: pruned pair is feasible"))?;
            ensure(!oracle_feasible(&sys, 12).map_err(|e| e.to_string())?, format!("problem {i}: oracle feasible"))?;
        }
    }
    Ok(format!("300 problems, {rejected} pruned pairs, 0 violations"))
}

fn feasibility_oracle() -> Outcome {
    let mut rng = rng(6);
    let mut feasible = 0;
    for i in 0..1000 {
        let sys = random_system(&mut rng, 8);
        let fast = check_feasible(&sys).is_feasible();
        let slow = oracle_feasible(&sys, 8).map_err(|e| e.to_string())?;
        ensure(fast == slow, format!("system {i}: solver {fast}, oracle {slow}"))?;
        feasible += fast as usize;
    }
    Ok(format!("1000 systems ({feasible} feasible), 0 disagreements"))
}

fn admissibility_oracle() -> Outcome {
    let mut rng = rng(7);
    let mut admissible = 0;
    let mut checked = 0;
    while checked < 300 {
        let p = random_phylogeny(&mut rng, 10, 3);
        let x = random_summary(&mut rng, &p, 2);
        let net = build_network(&p, &x).unwrap();
        let free = net.vertices().iter().filter(|v| !net.is_leaf(**v)).count();
        if free > 8 {
            continue;
        }
        checked += 1;
        let fast = check_admissible(&p, &x, SearchOptions::default()).unwrap();
        let slow = oracle_admissible(&p, &x, 8).map_err(|e| e.to_string())?;
        ensure(fast.is_some() == slow.is_some(), format!("instance {checked}: disagreement"))?;
        if let Some(g) = fast {
            ensure(net.is_perfect_labeling(&g), "returned labeling is not perfect")?;
            admissible += 1;
        }
    }
    Ok(format!("300 instances ({admissible} admissible), 0 disagreements"))
}

fn pruning_completeness() -> Outcome {
    let mut rng = rng(8);
    for i in 0..80 {
        let q = random_problem(&mut rng, 6, 2, i % 2 == 0);
        let pruned = solve(&q, Mode::All, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let plain = solve(&q, Mode::All, &SolverConfig::unpruned()).map_err(|e| e.to_string())?;
        let a: Vec<_> = pruned.solutions.iter().map(|s| &s.summary).collect();
        let b: Vec<_> = plain.solutions.iter().map(|s| &s.summary).collect();
        ensure(a == b, format!("problem {i}: {} vs {} solutions", a.len(), b.len()))?;
    }
    Ok("80 problems, 0 differences".into())
}

fn table_ingestion() -> Outcome {
    let text = std::fs::read_to_string(data("ie_intervals.tnp")).unwrap();
    let doc = ProblemDocument::parse(&text).map_err(|e| e.to_string())?;
    let expected: [(&str, i64, i64); 19] = [
        ("proto-Indo-European", -4500, -3800),
        ("proto-Indo-Iranian", -2100, -1700),
        ("proto-Balto-Slavic", -1400, -800),
        ("proto-Baltic", 600, 1000),
        ("Old Church Slavonic", 870, 1000),
        ("proto-Greco-Armenian", -2500, -2200),
        ("proto-Germanic", -400, 0),
        ("Albanian", 1800, 2100),
        ("proto-Italo-Celtic", -3000, -2400),
        ("proto-Italic", -1500, -1000),
        ("proto-Celtic", -700, -300),
        ("proto-Tocharian", -700, -300),
        ("proto-Anatolian", -2500, -2100),
        ("Vertex 28", -3900, -3300),
        ("Vertex 29", -3600, -3000),
        ("Vertex 30", -3500, -2900),
        ("Vertex 31", -2400, -1800),
        ("Vertex 39", -3400, -2800),
        ("Vertex 41", -2600, -2200),
    ];
    let got: Vec<(String, ExtYear, ExtYear)> = doc.intervals.iter().map(|r| r.value.clone()).collect();
    let want: Vec<(String, ExtYear, ExtYear)> = expected
        .iter()
        .map(|&(n, lo, hi)| (n.to_string(), ExtYear::Year(lo), ExtYear::Year(hi)))
        .collect();
    ensure(got == want, "interval rows differ")?;
    let anatolian = Interval::years(-2500, -2100).unwrap();
    let albanian = Interval::years(1800, 2100).unwrap();
    ensure(!intervals_overlap(anatolian, albanian), "proto-Anatolian/Albanian overlap")?;

    let chars = std::fs::read_to_string(data("ie_partial_characters.tnp")).unwrap();
    let doc = ProblemDocument::parse(&chars).map_err(|e| e.to_string())?;
    ensure(doc.characters.len() == 6 && doc.labels.len() == 60, "character table shape")?;
    Ok("19 rows exact".into())
}

fn determinism() -> Outcome {
    let path = data("toy4.tnp");
    let commands: Vec<Vec<&str>> = vec![
        vec!["solve", &path, "--max-contacts", "2", "--mode", "minimum", "--format", "json"],
        vec!["solve", &path, "--max-contacts", "2", "--mode", "minimum", "--format", "text"],
        vec!["solve", &path, "--max-contacts", "0"],
        vec!["solve", &path, "--max-contacts", "2", "--mode", "all", "--format", "json"],
        vec!["solve", &path, "--max-contacts", "2", "--mode", "subset-minimal", "--format", "json"],
        vec!["solve", &path, "--max-contacts", "2", "--no-prune", "--no-overlap-prefilter", "--format", "json"],
        vec!["check", &path, "--contacts", "B:D", "--format", "json"],
    ];
    for cmd in &commands {
        let base = run_cli(cmd);
        for workers in [None, Some("1"), Some("8")] {
            let mut c = cmd.clone();
            if let (Some(w), "solve") = (workers, cmd[0]) {
                c.extend(["--workers", w]);
            }
            ensure(run_cli(&c) == base, format!("output differs for {}", c.join(" ")))?;
        }
    }
    let mut rng = rng(10);
    for _ in 0..20 {
        let q = random_problem(&mut rng, 6, 2, true);
        let render = |workers| {
            let cfg = SolverConfig {
                workers,
                ..SolverConfig::default()
            };
            let r = solve(&q, Mode::All, &cfg).unwrap();
            render_report(&r, &q, ReportFormat::Json, ReportOptions::default())
        };
        let one = render(1);
        ensure(one == render(8) && one == render(1), "random report differs across worker counts")?;
    }
    Ok(format!("{} commands and 20 random reports byte-identical", commands.len()))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 toy4 worked example", worked_example, Duration::from_secs(1)),
        ("2 empty-increment rejection", empty_increment, Duration::from_secs(1)),
        ("3 double-oracle sweep", double_oracle, Duration::from_secs(5)),
        ("4 interval exclusion", interval_exclusion, Duration::from_secs(1)),
        ("5 prefilter soundness", prefilter_soundness, Duration::from_secs(60)),
        ("6 feasibility oracle equivalence", feasibility_oracle, Duration::from_secs(60)),
        ("7 admissibility oracle equivalence", admissibility_oracle, Duration::from_secs(120)),
        ("8 pruning completeness", pruning_completeness, Duration::from_secs(120)),
        ("9 interval table ingestion", table_ingestion, Duration::from_secs(1)),
        ("10 determinism", determinism, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed < limit {
                Ok(msg)
            } else {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(msg) => println!("PASS  criterion {name}: {msg} ({elapsed:.2?})"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name}: {msg} ({elapsed:.2?})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
