use std::path::Path;
use std::process::{Command, Output};

use etas_core::{TaskAllocation, TaskSet};
use serde_json::Value;
use tempfile::TempDir;

fn etas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etas"))
        .args(args)
        .env_remove("ETAS_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn structured(args: &[&str]) -> (Value, i32) {
    let mut full = args.to_vec();
    full.extend(["--format", "structured"]);
    let out = etas(&full);
    let code = out.status.code().unwrap();
    let text = stdout(&out);
    (serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}")), code)
}

fn write_cyclic(dir: &Path) -> String {
    let path = dir.join("cyclic.json");
    let p = path.to_str().unwrap();
    let out = etas(&["generate", "cyclic", "--n", "5", "--l", "3", "--f", "20", "-o", p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p.to_string()
}

fn leave_waste(tas: &str, strategy: &str) -> (i64, Value) {
    let (v, code) = structured(&["transition", tas, "--event", "leave:5", "--strategy", strategy]);
    assert_eq!(code, 0);
    (v["record"]["waste"].as_i64().unwrap(), v)
}

#[test]
fn generated_files_parse_back() {
    let dir = TempDir::new().unwrap();
    let cases: &[&[&str]] = &[
        &["cyclic", "--n", "5", "--l", "3", "--f", "20"],
        &["shifted", "--n", "4", "--l", "3", "--f", "20", "--shift", "17"],
        &["random", "--n", "6", "--l", "3", "--f", "12", "--seed", "4"],
        &["fano", "--f", "14"],
        &["projective", "--q", "3"],
        &["q2", "--q", "3"],
        &["q2m1", "--q", "3"],
    ];
    for (i, case) in cases.iter().enumerate() {
        let path = dir.path().join(format!("{i}.json"));
        let mut args = vec!["generate"];
        args.extend_from_slice(case);
        args.extend(["-o", path.to_str().unwrap()]);
        let out = etas(&args);
        assert!(out.status.success(), "{case:?}: {}", String::from_utf8_lossy(&out.stderr));
        let alloc = TaskAllocation::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(alloc.validate().is_ok(), "{case:?}");
    }
}

#[test]
fn leave_of_the_last_machine_under_each_strategy() {
    let dir = TempDir::new().unwrap();
    let tas = write_cyclic(dir.path());

    let (waste, _) = leave_waste(&tas, "cyclic");
    assert_eq!(waste, 12);

    let (waste, v) = leave_waste(&tas, "shifted");
    assert_eq!(waste, 0);
    assert_eq!(v["record"]["shift"], 17);

    let (waste, v) = leave_waste(&tas, "zero-waste");
    assert_eq!(waste, 0);
    let assignment = v["matching"]["assignment"].as_object().unwrap();
    assert_eq!(assignment.len(), 12);
    for machine in 1..=4 {
        let count = assignment.values().filter(|m| m.as_u64() == Some(machine)).count();
        assert_eq!(count, 3, "machine {machine}");
    }

    let (waste, _) = leave_waste(&tas, "fallback");
    assert_eq!(waste, 0);
}

/// Machines 1 and 2 hold the same tasks, as do 3 and 4, so no survivor can
/// absorb machine 1's three tasks one at a time.
fn paired_allocation(dir: &Path) -> String {
    let sets = [[0, 1, 2], [0, 1, 2], [3, 4, 5], [3, 4, 5]];
    let alloc = TaskAllocation::from_sets(2, 6, sets.iter().map(|s| TaskSet::from_iter(*s)).collect()).unwrap();
    let path = dir.join("paired.json");
    std::fs::write(&path, alloc.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let tas = write_cyclic(dir.path());
    let paired = paired_allocation(dir.path());

    let code = |args: &[&str]| etas(args).status.code().unwrap();
    assert_eq!(code(&["transition", &tas, "--event", "join"]), 0);
    assert_eq!(code(&["transition", &paired, "--event", "leave:1"]), 1);
    // The fallback still writes an allocation but reports the missing zero-waste option.
    let out = dir.path().join("fallback.json");
    let args = ["transition", &paired, "--event", "leave:1", "--strategy", "fallback", "-o", out.to_str().unwrap()];
    assert_eq!(code(&args), 1);
    let after = TaskAllocation::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(after.validate().is_ok());
    assert_eq!(code(&["transition", &tas, "--event", "leave:x"]), 2);
    assert_eq!(code(&["transition", &paired, "--event", "leave:1", "--strategy", "shifted"]), 2);
    assert_eq!(
        code(&["transition", &paired, "--event", "leave:1", "--strategy", "shifted", "--brute-force"]),
        0
    );
    assert_eq!(code(&["transition", "/nonexistent/tas.json", "--event", "join"]), 2);
    assert_eq!(code(&["generate", "projective", "--q", "6"]), 2);
    assert_eq!(code(&["coded-demo", "--stragglers", "1,2"]), 1);
    assert_eq!(code(&["no-such-command"]), 2);
}

#[test]
fn infeasible_leave_names_a_witness() {
    let dir = TempDir::new().unwrap();
    let paired = paired_allocation(dir.path());
    let (v, code) = structured(&["transition", &paired, "--event", "leave:1"]);
    assert_eq!(code, 1);
    assert_eq!(v["feasible"], false);
    assert!(!v["witness"]["machines"].as_array().unwrap().is_empty());
}

#[test]
fn output_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_etas"))
        .args(["generate", "cyclic", "--n", "5", "--l", "3", "--f", "20"])
        .env("ETAS_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let written = dir.path().join("cyclic-5-3-20.json");
    assert!(written.exists());
    assert!(stdout(&out).contains("wrote"));

    let explicit = dir.path().join("elsewhere").join("x.json");
    let out = Command::new(env!("CARGO_BIN_EXE_etas"))
        .args(["generate", "cyclic", "--n", "5", "--l", "3", "--f", "20", "-o"])
        .arg(&explicit)
        .env("ETAS_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(explicit.exists());
}

#[test]
fn simulate_compares_strategies() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.json");
    std::fs::write(
        &trace,
        r#"{"initial":{"n0":5,"L":3,"F":20},"events":[{"kind":"leave","machine":5}]}"#,
    )
    .unwrap();
    let (v, code) = structured(&["simulate", trace.to_str().unwrap(), "--compare"]);
    assert_eq!(code, 0);
    let waste: Vec<(String, i64)> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["strategy"].as_str().unwrap().to_string(), r["cumulative_waste"].as_i64().unwrap()))
        .collect();
    assert_eq!(
        waste,
        [
            ("cyclic".to_string(), 12),
            ("shifted_cyclic".to_string(), 0),
            ("zero_waste".to_string(), 0),
            ("zero_waste_with_fallback".to_string(), 0),
        ]
    );

    std::fs::write(&trace, "{").unwrap();
    assert_eq!(etas(&["simulate", trace.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn zero_waste_range_of_the_fano_plane() {
    let (v, code) = structured(&["zwr", "--family", "fano"]);
    assert_eq!(code, 0);
    assert_eq!(v["range"]["n_min"], 5);
    assert_eq!(v["range"]["n_max"], 7);

    let out = etas(&["verify", "zwr", "--family", "fano"]);
    assert!(out.status.success(), "{}", stdout(&out));
}

#[test]
fn coded_demo_recovers_every_single_straggler() {
    let out = etas(&["coded-demo", "--format", "tabular"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(!text.contains("not recoverable"), "{text}");
}

#[test]
fn shift_profile_has_a_zero_at_the_optimal_shift() {
    let out = etas(&["shift-profile", "--n", "5", "--l", "3", "--f", "20", "--leave", "5", "--format", "tabular"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "17\t0"), "{text}");
}
