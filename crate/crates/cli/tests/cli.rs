use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ratio-sparse"));
    cmd.env_remove("RATIO_SPARSE_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_identity(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    fs::write(
        dir.join("instance.json"),
        r#"{"id":"eye3","m":3,"n":3,"noise_radius":0.0}"#,
    )
    .unwrap();
    fs::write(dir.join("A.csv"), "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    fs::write(dir.join("b.csv"), "1\n-2\n3\n").unwrap();
}

fn datagen(dir: &Path, m: usize, n: usize, k: usize, seed: u64) {
    let matrix = format!(r#"{{"kind":"correlated_gaussian","m":{m},"n":{n}}}"#);
    let signal = format!(r#"{{"k":{k},"mag_low":10,"mag_high":10}}"#);
    let out = run(&[
        "datagen",
        "--matrix",
        &matrix,
        "--signal",
        &signal,
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_identity_returns_b() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("eye");
    write_identity(&inst);
    let out = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--p",
        "1",
        "--q",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let x: Vec<f64> = serde_json::from_value(v["x_hat"].clone()).unwrap();
    for (got, want) in x.iter().zip([1.0, -2.0, 3.0]) {
        assert!((got - want).abs() < 1e-9, "{x:?}");
    }
    assert!(v["alpha_trace"].as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn solve_missing_instance_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent");
    let out = run(&[
        "solve",
        "--instance",
        missing.to_str().unwrap(),
        "--p",
        "1",
        "--q",
        "2",
    ]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
}

#[test]
fn solve_rejects_bad_params_and_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("eye");
    write_identity(&inst);
    let path = inst.to_str().unwrap();
    assert_eq!(
        code(&run(&[
            "solve",
            "--instance",
            path,
            "--p",
            "2",
            "--q",
            "1.5"
        ])),
        1
    );
    assert_eq!(code(&run(&["solve", "--instance", path, "--p", "1"])), 1);
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn solve_planted_one_sparse_reports_small_error() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("planted");
    datagen(&inst, 4, 8, 1, 7);
    let out_file = tmp.path().join("res").join("out.json");
    let out = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--p",
        "0.5",
        "--q",
        "2",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_file).unwrap()).unwrap();
    assert!(v["rel_error"].as_f64().unwrap() < 1e-3, "{v}");
    assert!((v["alpha_final"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn solve_flags_override_config_and_max_iter_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("planted");
    datagen(&inst, 8, 32, 3, 11);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"outer_max": 500}"#).unwrap();
    let out = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--p",
        "0.5",
        "--q",
        "2",
        "--init",
        "min-norm",
        "--config",
        cfg.to_str().unwrap(),
        "--outer-max",
        "1",
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stdout));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["stop_reason"], "max_iter");
    assert_eq!(v["iterations"], 1);
}

#[test]
fn solve_with_unknown_config_field_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("eye");
    write_identity(&inst);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"outer_maxx": 5}"#).unwrap();
    let out = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--p",
        "1",
        "--q",
        "2",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

fn small_plan(extra: &str) -> String {
    format!(
        r#"{{
  "name": "cli-test",
  "matrix": {{"kind": "correlated_gaussian", "m": 8, "n": 16, "r": 0.2}},
  "signal": {{"mag_low": 1, "mag_high": 100}},
  "trials_per_cell": 1,
  "base_seed": 5,
  "solver_config": {{"outer_max": 50, "inner_max": 300}},
  {extra}
}}"#
    )
}

fn bench(plan: &Path, out: &Path, workers: &str) -> Output {
    run(&[
        "bench",
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        workers,
    ])
}

#[test]
fn bench_single_cell_writes_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    fs::write(
        &plan,
        small_plan(r#""sparsity_grid": [2], "param_grid": [{"p": 0.5, "q": 2}]"#),
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = bench(&plan, &out_dir, "1");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trials = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 2, "{trials}");
    assert!(out_dir.join("aggregate.json").exists());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().count() >= 2 && table.contains("success"));
}

#[test]
fn bench_is_byte_identical_across_reruns_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    fs::write(
        &plan,
        small_plan(r#""sparsity_grid": [1, 3], "p_grid": [0.5, 1], "q_grid": [2]"#),
    )
    .unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    assert_eq!(code(&bench(&plan, &a, "1")), 0);
    assert_eq!(code(&bench(&plan, &b, "1")), 0);
    assert_eq!(code(&bench(&plan, &c, "3")), 0);
    for f in ["trials.csv", "heatmap.csv", "aggregate.json"] {
        let first = fs::read(a.join(f)).unwrap();
        assert_eq!(first, fs::read(b.join(f)).unwrap(), "{f} rerun");
        assert_eq!(first, fs::read(c.join(f)).unwrap(), "{f} workers");
    }
}

#[test]
fn bench_heatmap_has_one_row_per_param_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    fs::write(
        &plan,
        small_plan(r#""sparsity_grid": [1], "p_grid": [0.5, 0.7, 1], "q_grid": [1.5, 2]"#),
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    assert_eq!(code(&bench(&plan, &out_dir, "2")), 0);
    let heat = fs::read_to_string(out_dir.join("heatmap.csv")).unwrap();
    assert_eq!(heat.lines().count(), 1 + 3 * 2, "{heat}");
}

#[test]
fn bench_seed_env_changes_trials() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    fs::write(
        &plan,
        small_plan(r#""sparsity_grid": [2], "param_grid": [{"p": 1, "q": 2}]"#),
    )
    .unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(code(&bench(&plan, &a, "1")), 0);
    let out = bin()
        .args([
            "bench",
            "--plan",
            plan.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
        ])
        .env("RATIO_SPARSE_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_ne!(
        fs::read(a.join("trials.csv")).unwrap(),
        fs::read(b.join("trials.csv")).unwrap()
    );
}

#[test]
fn bench_invalid_plan_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    fs::write(&plan, r#"{"matrix": 3}"#).unwrap();
    let out = bench(&plan, &tmp.path().join("out"), "1");
    assert_eq!(code(&out), 1);
    assert_eq!(code(&bench(&plan, &tmp.path().join("out"), "0")), 1);
}

fn theory_rows(grid: &str) -> (i32, Vec<Vec<String>>) {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("grid.json");
    fs::write(&path, grid).unwrap();
    let out_path = tmp.path().join("bounds.csv");
    let out = run(&[
        "theory",
        "--grid",
        path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    if code(&out) != 0 {
        return (code(&out), Vec::new());
    }
    let text = fs::read_to_string(out_path).unwrap();
    let rows = text
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (0, rows)
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap()
}

#[test]
fn theory_single_tuple_matches_hand_value() {
    let (status, rows) = theory_rows(r#"{"p": [1], "q": [2], "k": [1], "beta": [1]}"#);
    assert_eq!(status, 0);
    assert_eq!(rows.len(), 2);
    let new: f64 = rows[1][column(&rows, "delta_new")].parse().unwrap();
    let zhu: f64 = rows[1][column(&rows, "delta_zhu")].parse().unwrap();
    assert!((new - 0.242536).abs() < 1e-6);
    assert!((zhu - 0.242536).abs() < 1e-6);
}

#[test]
fn theory_grid_shape_and_ordering() {
    let (status, rows) = theory_rows(
        r#"{"p": [0.3, 0.5, 1], "q": [1.5, 2, 3], "k": [1, 4, 9], "beta": ["worst_case", 1.5]}"#,
    );
    assert_eq!(status, 0);
    assert_eq!(rows.len(), 1 + 3 * 3 * 3 * 2);
    let (i_new, i_zhu) = (column(&rows, "delta_new"), column(&rows, "delta_zhu"));
    for r in &rows[1..] {
        let new: f64 = r[i_new].parse().unwrap();
        let zhu: f64 = r[i_zhu].parse().unwrap();
        assert!(new >= zhu - 1e-12, "{r:?}");
    }
}

#[test]
fn theory_invalid_grid_exits_one() {
    assert_eq!(theory_rows(r#"{"p": [], "q": [2], "k": [1]}"#).0, 1);
    assert_eq!(
        theory_rows(r#"{"p": [1], "q": [2], "k": [1], "zeta": 3}"#).0,
        1
    );
}

#[test]
fn datagen_is_deterministic_and_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    datagen(&a, 6, 20, 2, 3);
    datagen(&b, 6, 20, 2, 3);
    for f in ["instance.json", "A.csv", "b.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let out = run(&[
        "datagen",
        "--matrix",
        r#"{"kind":"correlated_gaussian","m":6,"n":20,"r":1.5}"#,
        "--signal",
        r#"{"k":2,"mag_low":1,"mag_high":2}"#,
        "--out",
        tmp.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}
