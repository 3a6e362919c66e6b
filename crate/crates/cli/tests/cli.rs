use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ergodic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergodic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_with(dir: &TempDir, out: &str, command: &str, config: &Path) -> Output {
    let out_dir = dir.path().join(out);
    ergodic(&[
        "--output-dir",
        out_dir.to_str().unwrap(),
        command,
        "--config",
        config.to_str().unwrap(),
    ])
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn ds_check_on_a_permutation() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "perm.json",
        r#"{"schema": 1, "space": {"weights": [1, 1, 1]},
            "operator": {"kind": "composition", "map": [2, 0, 1], "measure_preserving": true}}"#,
    );
    let o = run_with(&dir, "out", "ds-check", &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = read_json(dir.path().join("out/ds_check.json"));
    assert_eq!(report["is_ds"], true);
    assert_eq!(report["certificate"]["l1_ok"], true);
    assert_eq!(report["certificate"]["linf_ok"], true);
    assert_eq!(report["seed"], 0);
}

#[test]
fn ds_check_reports_a_failing_kernel() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "k.json",
        r#"{"schema": 1, "space": {"weights": [1, 1]},
            "operator": {"kind": "kernel", "matrix_re": [[0.5, 0.5], [0.5, 0.9]]}}"#,
    );
    let o = run_with(&dir, "out", "ds-check", &cfg);
    assert_eq!(o.status.code(), Some(0));
    let report = read_json(dir.path().join("out/ds_check.json"));
    assert_eq!(report["is_ds"], false);
    assert_eq!(report["certificate"]["linf_ok"], false);
}

#[test]
fn counterexample_first_three_breakpoints() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ce");
    let o = ergodic(&[
        "--output-dir",
        out.to_str().unwrap(),
        "counterexample",
        "--eps",
        "0.1",
        "--stages",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cert = read_json(out.join("certificate.json"));
    assert_eq!(cert["certificate"]["breakpoints"], serde_json::json!([1, 5, 17]));
    assert_eq!(cert["verified"], true);
    let traces = fs::read_to_string(out.join("counterexample_traces.csv")).unwrap();
    let mut lines = traces.lines();
    assert_eq!(lines.next(), Some("# seed=0 command=counterexample"));
    assert_eq!(lines.next(), Some("n,probe_id,re,im,l1_norm,linf_norm,majorized"));
    let row5 = traces.lines().find(|l| l.starts_with("5,")).unwrap();
    assert!(row5.starts_with("5,0,-0.6,"), "{row5}");
}

#[test]
fn counterexample_window_too_short_is_invalid() {
    let dir = TempDir::new().unwrap();
    let o = ergodic(&[
        "--output-dir",
        dir.path().to_str().unwrap(),
        "counterexample",
        "--stages",
        "4",
        "--window",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!dir.path().join("certificate.json").exists());
}

#[test]
fn counterexample_budget_exit_code() {
    let dir = TempDir::new().unwrap();
    let o = ergodic(&[
        "--output-dir",
        dir.path().to_str().unwrap(),
        "counterexample",
        "--stages",
        "4",
        "--budget",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"schema\": 1,\n  \"space\": {\"weights\": [1, 2,]}\n}");
    let o = run_with(&dir, "out", "rearrange", &cfg);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validate_subcommand() {
    let dir = TempDir::new().unwrap();
    let good = write_config(
        dir.path(),
        "good.json",
        r#"{"schema": 1, "command": "average", "space": {"atoms": 3},
            "function": {"re": [1, 2, 3]}, "operator": {"kind": "cyclic_shift"},
            "checkpoints": [1, 3, 9]}"#,
    );
    let o = ergodic(&["validate", "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "config is valid");

    let dims = write_config(
        dir.path(),
        "dims.json",
        r#"{"schema": 1, "space": {"atoms": 4},
            "operator": {"kind": "kernel", "matrix_re": [[1,0,0],[0,1,0],[0,0,1]]}}"#,
    );
    let o = ergodic(&["validate", "--config", dims.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with("operator:"));

    let mono = write_config(dir.path(), "mono.json", r#"{"schema": 1, "checkpoints": [5, 5]}"#);
    let o = ergodic(&["validate", "--config", mono.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("checkpoints:"));
}

#[test]
fn invalid_config_does_not_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "space": {"atoms": 4}, "function": {"re": [1, 2, 3]},
            "operator": {"kind": "identity"}}"#,
    );
    let o = run_with(&dir, "out", "average", &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("function: 3 values for a 4-atom space"));
    assert!(!dir.path().join("out").exists());
}

const RANDOM_AVERAGE: &str = r#"{
    "schema": 1, "seed": SEED,
    "space": {"atoms": 50, "weight": 0.02},
    "function": {"kind": "random", "complex": true},
    "operator": {"kind": "cyclic_shift", "step": 3},
    "checkpoints": {"geometric": 200},
    "probes": [0, 7, 49],
    "full": true
}"#;

#[test]
fn identical_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg7 = write_config(dir.path(), "a.json", &RANDOM_AVERAGE.replace("SEED", "7"));
    let cfg8 = write_config(dir.path(), "b.json", &RANDOM_AVERAGE.replace("SEED", "8"));
    for (out, cfg) in [("r1", &cfg7), ("r2", &cfg7), ("r3", &cfg8)] {
        let o = run_with(&dir, out, "average", cfg);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &str| fs::read(dir.path().join(d).join("average.csv")).unwrap();
    assert_eq!(read("r1"), read("r2"));
    assert_ne!(read("r1"), read("r3"));
    let text = String::from_utf8(read("r1")).unwrap();
    assert!(text.starts_with("# seed=7 command=average\nn,probe_id,re,im,l1_norm,linf_norm,majorized\n"));
    // 1, 2, 4, …, 128, 200 for three probes
    assert_eq!(text.lines().count(), 2 + 9 * 3);
    assert!(text.lines().skip(2).all(|l| l.ends_with(",true")));
    let summary = read_json(dir.path().join("r1/average.json"));
    assert_eq!(summary["all_majorized"], true);
}

#[test]
fn budget_exceeded_exit_code() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "space": {"atoms": 3}, "function": {"re": [1, 2, 3]},
            "operator": {"kind": "identity"}, "checkpoints": [10, 1000], "budget": 100}"#,
    );
    let o = run_with(&dir, "out", "average", &cfg);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn weighted_average_normalizes_by_the_weight_bound() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "space": {"weights": [1, 2, 0.5]}, "function": {"re": [1, -2, 3]},
            "operator": {"kind": "identity"}, "weight": {"kind": "constant", "re": 3},
            "checkpoints": {"every": 5}, "probes": [2], "full": true}"#,
    );
    let o = run_with(&dir, "out", "weighted-average", &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read_json(dir.path().join("out/weighted_average.json"));
    assert_eq!(summary["weight_normalizer"], 3.0);
    assert_eq!(summary["all_majorized"], true);
    let csv = fs::read_to_string(dir.path().join("out/weighted_average.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("1,2,9,0,"));
}

#[test]
fn rearrange_and_norms() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "seed": 3, "space": {"weights": [1, 2, 1]}, "function": {"re": [1, -3, 3]},
            "norms": ["L1", "Linf", {"kind": "luxemburg", "power": 1}]}"#,
    );
    let o = run_with(&dir, "out", "rearrange", &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/rearrangement.csv")).unwrap();
    assert_eq!(text, "# seed=3 command=rearrange\nt_left,t_right,value\n0,3,3\n3,4,1\n");

    let o = run_with(&dir, "out", "norms", &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/norms.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[..4], ["# seed=3 command=norms", "norm,value", "L1,10", "Linf,3"]);
    let lux: f64 = lines[4].split(',').nth(1).unwrap().parse().unwrap();
    assert!((lux - 10.0).abs() < 1e-9);
}

#[test]
fn wiener_wintner_sweep_with_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "command": "wiener-wintner",
            "system": {"kind": "rotation", "order": 32, "step": 4},
            "function": {"kind": "character", "freq": 1},
            "lambda_grid": 16, "probes": [0, 5], "checkpoints": {"geometric": 4096}}"#,
    );
    let out = dir.path().join("ww");
    let o = ergodic(&["-o", out.to_str().unwrap(), "run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read_json(out.join("sweep.json"));
    assert_eq!(summary["closed_form"], true);
    assert!(summary["max_abs_err"].as_f64().unwrap() <= 1e-9);
    // λ = e^{-2πi·4/32} is grid point 14 of 16
    assert_eq!(summary["resonant_lambdas"], serde_json::json!([14]));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().nth(1).unwrap(),
        "lambda_index,lambda_re,lambda_im,probe,n,avg_re,avg_im,oracle_re,oracle_im,abs_err"
    );
}

#[test]
fn return_times_via_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "command": "return-times",
            "system": {"kind": "rotation", "order": 5, "step": 1},
            "second_system": {"kind": "rotation", "order": 3, "step": 1},
            "function": {"kind": "indicator", "atoms": [3]},
            "second_function": {"kind": "indicator", "atoms": [2]},
            "probe_pairs": [[0, 0]], "checkpoints": [15, 30]}"#,
    );
    let out = dir.path().join("rt");
    let o = ergodic(&["--output-dir", out.to_str().unwrap(), "run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("return_times.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    // exactly one k < 15 has k ≡ 3 (mod 5) and k ≡ 2 (mod 3)
    let expect = format!("{}", 1.0 / 15.0);
    assert_eq!(rows[0], format!("0,0,0,15,{expect},0"));
    assert_eq!(rows[1], format!("0,0,0,30,{expect},0"));
}

#[test]
fn run_needs_a_config_command() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema": 1, "command": "counterexample"}"#);
    let o = ergodic(&["-o", dir.path().to_str().unwrap(), "run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "d.json", r#"{"schema": 1}"#);
    let o = ergodic(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flags_exit_2() {
    let o = ergodic(&["counterexample", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ergodic(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = String::from_utf8_lossy(&o.stdout).into_owned();
    for name in [
        "rearrange", "norms", "ds-check", "average", "weighted-average", "wiener-wintner",
        "return-times", "counterexample", "run", "validate",
    ] {
        assert!(help.contains(name), "{name} missing from help");
    }
}
