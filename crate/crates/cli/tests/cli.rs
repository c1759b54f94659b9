use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use shr_core::dsl;
use shr_core::engine::{applicable_steps, Registry, SyncPolicy, TraceStep};
use shr_core::hypergraph::is_isomorphic;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn valid_fixtures() -> Vec<PathBuf> {
    let mut all: Vec<PathBuf> = std::fs::read_dir(fixture(""))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "shr"))
        .collect();
    all.sort();
    assert!(all.len() >= 8);
    all
}

fn shr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shr"))
        .args(args)
        .env_remove("SHR_COLOR")
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn every_fixture_validates() {
    for f in valid_fixtures() {
        let o = shr(&["validate", path_str(&f)]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", f.display(), stderr(&o));
    }
}

#[test]
fn arity_clash_exits_one_with_code() {
    let o = shr(&["validate", path_str(&fixture("invalid/arity_clash.shr"))]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("ACTION_ARITY_CLASH"), "{err}");
    assert!(err.contains("arity_clash.shr:6:5"), "{err}");
    assert!(!err.contains('\x1b'));
}

#[test]
fn color_is_opt_in() {
    let o = Command::new(env!("CARGO_BIN_EXE_shr"))
        .args(["validate", path_str(&fixture("invalid/arity_clash.shr"))])
        .env("SHR_COLOR", "1")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("\x1b[1;31merror"));
}

#[test]
fn missing_file_exits_one() {
    let o = shr(&["validate", "/nonexistent/spec.shr"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn migration_has_one_transition() {
    let o = shr(&["steps", path_str(&fixture("migration.shr"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("1 transition"));
    assert!(out.contains("#0 AM:trigger F:start"), "{out}");
    assert!(out.contains("fired start_sigma at g"), "{out}");
}

#[test]
fn quiescent_spec_prints_zero_transitions() {
    let o = shr(&["steps", path_str(&fixture("quiescent.shr"))]);
    assert_eq!(stdout(&o).lines().next(), Some("0 transitions"));
}

#[test]
fn printed_counts_match_the_engine() {
    for f in valid_fixtures() {
        let spec = dsl::parse(&std::fs::read_to_string(&f).unwrap()).unwrap();
        let registry = Registry::new(spec.productions.clone()).unwrap();
        for policy in [SyncPolicy::Milner, SyncPolicy::Broadcast] {
            let n = applicable_steps(&spec.graph, &registry, policy).len();
            let o = shr(&["steps", path_str(&f), "--policy", &policy.to_string()]);
            let first = stdout(&o).lines().next().unwrap().to_string();
            let printed: usize = first.split(' ').next().unwrap().parse().unwrap();
            assert_eq!(printed, n, "{} under {policy}", f.display());
        }
    }
}

#[test]
fn unknown_policy_is_a_usage_error() {
    let o = shr(&["steps", path_str(&fixture("migration.shr")), "--policy", "gossip"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn apply_reaches_the_final_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("after.shr");
    let o = shr(&["apply", path_str(&fixture("migration.shr")), "0", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let after = dsl::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let expected = dsl::parse(&std::fs::read_to_string(fixture("migration_final.shr")).unwrap()).unwrap();
    assert!(is_isomorphic(&after.graph, &expected.graph));
}

#[test]
fn apply_out_of_range_exits_one() {
    let o = shr(&["apply", path_str(&fixture("migration.shr")), "99"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("out of range"));
}

#[test]
fn applied_specs_revalidate() {
    let dir = tempfile::tempdir().unwrap();
    let mut applied = 0;
    for f in valid_fixtures() {
        let o = shr(&["apply", path_str(&f), "0"]);
        if o.status.code() == Some(1) {
            continue;
        }
        assert_eq!(o.status.code(), Some(0));
        let out = dir.path().join(f.file_name().unwrap());
        std::fs::write(&out, o.stdout).unwrap();
        let v = shr(&["validate", path_str(&out)]);
        assert_eq!(v.status.code(), Some(0), "{}: {}", f.display(), stderr(&v));
        applied += 1;
    }
    assert!(applied >= 4);
}

#[test]
fn producer_farm_scenario_passes() {
    let o = shr(&["run", path_str(&fixture("producer_farm.shr"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("2 steps"));
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.shr");
    let text = std::fs::read_to_string(fixture("migration.shr"))
        .unwrap()
        .replace("assert count(f) == 1;", "assert count(f) == 5;");
    std::fs::write(&spec, text).unwrap();
    let o = shr(&["run", path_str(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("assert count(f) == 5: found 1"), "{}", stderr(&o));
}

#[test]
fn apply_beyond_the_list_fails_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.shr");
    let text = std::fs::read_to_string(fixture("migration.shr")).unwrap().replace("apply 0;", "apply 3;");
    std::fs::write(&spec, text).unwrap();
    assert_eq!(shr(&["run", path_str(&spec)]).status.code(), Some(2));
}

#[test]
fn empty_scenario_gives_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let o = shr(&["run", path_str(&fixture("quiescent.shr")), "--trace", path_str(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(trace).unwrap(), "");
}

#[test]
fn zero_step_budget_writes_only_an_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let dots = dir.path().join("dots");
    let o = shr(&[
        "run",
        path_str(&fixture("producer_farm.shr")),
        "--max-steps",
        "0",
        "--trace",
        path_str(&trace),
        "--dot-dir",
        path_str(&dots),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(trace).unwrap(), "");
    assert!(!dots.exists());
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[test]
fn trace_digests_match_recomputed_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let o = shr(&["run", path_str(&fixture("migration.shr")), "--trace", path_str(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    let lines = std::fs::read_to_string(trace).unwrap();
    let steps: Vec<TraceStep> = lines.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(steps.len(), 1);

    let spec = dsl::parse(&std::fs::read_to_string(fixture("migration.shr")).unwrap()).unwrap();
    let registry = Registry::new(spec.productions.clone()).unwrap();
    let result = &applicable_steps(&spec.graph, &registry, SyncPolicy::Milner)[0].result;
    assert_eq!(steps[0].result_digest, sha256_hex(&dsl::print_graph(result)));
    assert_eq!(steps[0].assignment.len(), 2);
}

#[test]
fn dot_files_are_written_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let dots = dir.path().join("dots");
    let o = shr(&["run", path_str(&fixture("producer_farm.shr")), "--dot-dir", path_str(&dots)]);
    assert_eq!(o.status.code(), Some(0));
    let mut names: Vec<String> = std::fs::read_dir(&dots)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["step-000.dot", "step-001.dot", "step-002.dot"]);
    let last = std::fs::read_to_string(dots.join("step-002.dot")).unwrap();
    assert_eq!(last.matches("label=\"f\"").count(), 3);
}

#[test]
fn free_run_stops_at_the_step_cap() {
    let o = shr(&["run", path_str(&fixture("broadcast.shr")), "--max-steps", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("3 steps"));
}

#[test]
fn commands_are_deterministic() {
    for args in [
        vec!["steps", "broadcast.shr"],
        vec!["run", "producer_farm.shr"],
        vec!["apply", "copy.shr", "0"],
        vec!["dot", "migration.shr"],
    ] {
        let f = fixture(args[1]);
        let mut full: Vec<&str> = args.clone();
        full[1] = path_str(&f);
        let a = shr(&full);
        let b = shr(&full);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

#[test]
fn dot_prints_the_graph() {
    let o = shr(&["dot", path_str(&fixture("migration.shr"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("graph hypergraph {"));
    assert_eq!(out.matches("shape=point").count(), 4);
    assert_eq!(out.matches("shape=box").count(), 3);
}
