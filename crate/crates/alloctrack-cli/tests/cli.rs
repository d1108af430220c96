//! End-to-end behavior of the `alloctrack` binary: exit codes, output
//! layout, overrides, and cleanup on failure.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_alloctrack"));
    cmd.args(args);
    cmd.env_remove("ALLOCTRACK_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn read_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

#[test]
fn alloc_example_matches_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "--experiment",
            "alloc",
            "--distance",
            "l2",
            "--n",
            "700",
            "--dists",
            "[[0.75,0.25],[0.5,0.5]]",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    let lines = read_lines(&dir.path().join("alloc.csv"));
    assert!(lines[0].starts_with("# alloctrack seed=0 config="));
    assert_eq!(lines[1], "distance,arm,c,t_fractional,t_integer");
    assert!(lines[2].contains("3.0000000000000000e2,300"), "{}", lines[2]);
    assert!(lines[3].contains("4.0000000000000000e2,400"), "{}", lines[3]);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 0);
    assert!(meta["config_hash"].as_str().unwrap().len() == 64);
    assert_eq!(
        meta["rng_algorithm"].as_str().unwrap(),
        alloctrack::RNG_ALGORITHM_ID
    );
}

#[test]
fn invalid_masses_exit_one_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "--experiment",
            "alloc",
            "--distance",
            "l2",
            "--n",
            "100",
            "--dists",
            "[[0.7,0.5]]",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dists[0]"), "stderr: {stderr}");
    assert!(!dir.path().join("alloc.csv").exists());
}

#[test]
fn runtime_failure_exits_two_and_removes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // Hellinger has no allocation pipeline, so the adaptive scheme fails
    // after validation.
    let out = run(
        &[
            "--experiment",
            "risk",
            "--distance",
            "hellinger",
            "--scheme",
            "adaptive",
            "--n",
            "50",
            "--reps",
            "10",
            "--dists",
            "[[0.5,0.5],[0.9,0.1]]",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("risk.csv").exists());
    assert!(!dir.path().join("metadata.json").exists());
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "--experiment",
            "alloc",
            "--distance",
            "l1",
            "--n",
            "90",
            "--dists",
            "[[0.5,0.5],[0.8,0.2]]",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[("ALLOCTRACK_SEED", "123")],
    );
    assert!(out.status.success());
    let lines = read_lines(&dir.path().join("alloc.csv"));
    assert!(lines[0].starts_with("# alloctrack seed=123"), "{}", lines[0]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        r#"{
            "experiment": "risk",
            "distances": ["l2"],
            "n": 40,
            "reps": 50,
            "seed": 3,
            "scheme": "uniform",
            "dists": [[0.5, 0.5], [0.9, 0.1]]
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(
        &[
            "--config",
            config_path.to_str().unwrap(),
            "--reps",
            "80",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = read_lines(&out_dir.join("risk.csv"));
    assert!(lines[0].contains("seed=3"));
    // The flag override shows up in the rows' replication count.
    assert!(lines[2].ends_with(",80"), "{}", lines[2]);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "--experiment".to_string(),
            "regret".into(),
            "--distance".into(),
            "l2".into(),
            "--n".into(),
            "200".into(),
            "--reps".into(),
            "60".into(),
            "--seed".into(),
            "9".into(),
            "--dists".into(),
            "[[0.5,0.5],[0.9,0.1]]".into(),
            "--out".into(),
            out.to_string(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let args = args(out.to_str().unwrap());
        let argrefs: Vec<&str> = args.iter().map(String::as_str).collect();
        assert!(run(&argrefs, &[]).status.success());
    }
    assert_eq!(
        fs::read(a.join("regret.csv")).unwrap(),
        fs::read(b.join("regret.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("metadata.json")).unwrap(),
        fs::read(b.join("metadata.json")).unwrap()
    );
}

#[test]
fn verbose_simulate_dumps_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "--experiment",
            "simulate",
            "--distance",
            "l2",
            "--n",
            "25",
            "--dists",
            "[[0.5,0.5],[0.9,0.1]]",
            "--verbose",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    let jsonl = fs::read_to_string(dir.path().join("simulate_l2.jsonl")).unwrap();
    let rows: Vec<&str> = jsonl.lines().collect();
    // One stamp line plus one record per round.
    assert_eq!(rows.len(), 26);
    let stamp: serde_json::Value = serde_json::from_str(rows[0]).unwrap();
    assert_eq!(stamp["alloctrack"]["seed"], 0);
    let first: serde_json::Value = serde_json::from_str(rows[1]).unwrap();
    assert_eq!(first["t"], 1);
    // Unpulled arms carry the infinite sentinel, serialized as "inf".
    assert_eq!(first["uppers"][0], "inf");
    let pulls: u64 = read_lines(&dir.path().join("simulate.csv"))[2..]
        .iter()
        .map(|row| row.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(pulls, 25);
}

#[test]
fn print_schema_is_valid_json() {
    let out = run(&["--print-schema"], &[]);
    assert!(out.status.success());
    let schema: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(schema["properties"]["experiment"].is_object());
}
