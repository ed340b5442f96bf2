use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn qcond(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcond"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not a report ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn matrix(rows: usize, cols: usize, entries: &[f64]) -> Value {
    let data: Vec<[f64; 2]> = entries.iter().map(|&x| [x, 0.0]).collect();
    json!({"rows": rows, "cols": cols, "data": data})
}

fn write(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn max_mixed() -> Value {
    json!({"dim": 2, "matrix": matrix(2, 2, &[0.5, 0.0, 0.0, 0.5])})
}

fn identity_channel() -> Value {
    json!({"din": 2, "dout": 2, "kraus": [matrix(2, 2, &[1.0, 0.0, 0.0, 1.0])]})
}

fn dephasing() -> Value {
    json!({"din": 2, "dout": 2, "kraus": [
        matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]),
    ]})
}

#[test]
fn iso_forward_of_identity_at_max_mixed_is_bell_state() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &max_mixed());
    let e = write(&dir, "e.json", &identity_channel());
    let tau_path = dir.path().join("tau.json");
    let out = qcond(&["iso", "forward", "--rho", s(&rho), "--channel", s(&e), "--out", s(&tau_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let tau: Value = serde_json::from_str(&std::fs::read_to_string(&tau_path).unwrap()).unwrap();
    assert_eq!(tau["dims"], json!([2, 2]));
    let data = tau["matrix"]["data"].as_array().unwrap();
    for (k, z) in data.iter().enumerate() {
        let (i, j) = (k / 4, k % 4);
        let expect = if [0, 3].contains(&i) && [0, 3].contains(&j) { 0.5 } else { 0.0 };
        assert!((z[0].as_f64().unwrap() - expect).abs() < 1e-12, "entry ({i},{j})");
        assert!(z[1].as_f64().unwrap().abs() < 1e-12);
    }
}

#[test]
fn iso_reverse_recovers_the_pair() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &json!({"dim": 2, "matrix": matrix(2, 2, &[0.7, 0.2, 0.2, 0.3])}));
    let e = write(&dir, "e.json", &dephasing());
    let tau = dir.path().join("tau.json");
    let pair = dir.path().join("pair.json");
    assert_eq!(qcond(&["iso", "forward", "--rho", s(&rho), "--channel", s(&e), "--out", s(&tau)]).status.code(), Some(0));
    let out = qcond(&["iso", "reverse", "--tau", s(&tau), "--out", s(&pair)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let back: Value = serde_json::from_str(&std::fs::read_to_string(&pair).unwrap()).unwrap();
    let data = back["rho"]["matrix"]["data"].as_array().unwrap();
    let expect = [0.7, 0.2, 0.2, 0.3];
    for (z, e) in data.iter().zip(expect) {
        assert!((z[0].as_f64().unwrap() - e).abs() < 1e-9);
    }
}

#[test]
fn std_iso_forward_then_reverse() {
    let dir = TempDir::new().unwrap();
    let e = write(&dir, "e.json", &dephasing());
    let tau = dir.path().join("tau.json");
    assert_eq!(qcond(&["std-iso", "forward", "--channel", s(&e), "--out", s(&tau)]).status.code(), Some(0));
    let sigma = write(&dir, "sigma.json", &json!({"dim": 2, "matrix": matrix(2, 2, &[0.5, 0.5, 0.5, 0.5])}));
    let out = qcond(&["std-iso", "reverse", "--tau", s(&tau), "--state", s(&sigma)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    let data = r["details"]["output"]["data"].as_array().unwrap();
    let got: Vec<f64> = data.iter().map(|z| z[0].as_f64().unwrap()).collect();
    for (g, e) in got.iter().zip([0.5, 0.0, 0.0, 0.5]) {
        assert!((g - e).abs() < 1e-12, "{got:?}");
    }
}

#[test]
fn random_equivalence_suite_passes() {
    let out = qcond(&["verify", "equivalence", "--dimA", "2", "--dimB", "3", "--trials", "200", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["seed"], json!(7));
    assert!(r["checks"][0]["value"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn random_roundtrip_and_trace_commute_pass() {
    for args in [
        vec!["verify", "roundtrip", "--dimA", "3", "--dimB", "2", "--trials", "20"],
        vec!["verify", "trace-commute", "--dimA", "2", "--dimB", "2", "--dimC", "3", "--trials", "20"],
        vec!["verify", "povm-ensemble", "--dimA", "3", "--dimB", "1", "--trials", "20"],
    ] {
        let out = qcond(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn measure_commute_on_generic_instances_reports_failed_check() {
    let out = qcond(&["verify", "measure-commute", "--dimA", "2", "--dimB", "2", "--trials", "5", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["pass"], json!(false));
    assert_eq!(r["checks"][1]["name"], json!("measure_commute.marginal_a"));
    assert_eq!(r["checks"][1]["pass"], json!(true));
}

#[test]
fn measure_commute_file_mode_with_commuting_effect_passes() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &json!({"dim": 2, "matrix": matrix(2, 2, &[0.6, 0.0, 0.0, 0.4])}));
    let e = write(&dir, "e.json", &dephasing());
    let povm = write(
        &dir,
        "m.json",
        &json!({"dim": 2, "elements": [matrix(2, 2, &[0.8, 0.0, 0.0, 0.1]), matrix(2, 2, &[0.2, 0.0, 0.0, 0.9])], "labels": ["a", "b"]}),
    );
    let out = qcond(&["verify", "measure-commute", "--rho", s(&rho), "--channel", s(&e), "--povm", s(&povm), "--outcome", "b"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn fixed_points_of_dephasing_has_dimension_two() {
    let dir = TempDir::new().unwrap();
    let e = write(&dir, "dephasing.json", &dephasing());
    let out = qcond(&["fixed-points", "--channel", s(&e)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(report(&out)["details"]["dim"], json!(2));
}

#[test]
fn decompose_rejects_trace_decreasing_map() {
    let dir = TempDir::new().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let e = write(&dir, "half.json", &json!({"din": 2, "dout": 2, "kraus": [matrix(2, 2, &[h, 0.0, 0.0, h])]}));
    let out = qcond(&["decompose", "--channel", s(&e)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("trace-preserving"), "{}", stderr(&out));
}

#[test]
fn demos_pass_on_builtin_examples() {
    for args in [
        vec!["broadcast-demo", "--example", "qubit"],
        vec!["broadcast-demo", "--example", "block"],
        vec!["monogamy-demo", "--example", "qubit"],
        vec!["monogamy-demo", "--example", "block"],
        vec!["cloning-demo", "--example", "qubit"],
        vec!["cloning-demo", "--example", "block"],
        vec!["universal-demo", "--example", "qubit"],
    ] {
        let out = qcond(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn decompose_block_example_from_file() {
    let dir = TempDir::new().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let unit = |i: usize, j: usize, x: f64| {
        let mut m = [0.0; 16];
        m[i * 4 + j] = x;
        matrix(4, 4, &m)
    };
    let mut p1 = [0.0; 16];
    p1[0] = 1.0;
    p1[5] = 1.0;
    let mut kraus = vec![matrix(4, 4, &p1)];
    for i in 2..4 {
        for j in 2..4 {
            kraus.push(unit(i, j, h));
        }
    }
    let e = write(&dir, "block.json", &json!({"din": 4, "dout": 4, "kraus": kraus}));
    let out = qcond(&["decompose", "--channel", s(&e)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let blocks = report(&out)["details"]["blocks"].clone();
    let shape: Vec<(u64, u64)> = blocks
        .as_array()
        .unwrap()
        .iter()
        .map(|b| (b["d1"].as_u64().unwrap(), b["d2"].as_u64().unwrap()))
        .collect();
    assert_eq!(shape, vec![(2, 1), (1, 2)]);
}

#[test]
fn sample_is_deterministic_except_elapsed() {
    let dir = TempDir::new().unwrap();
    let table = write(
        &dir,
        "table.json",
        &json!({"matrix": matrix(2, 2, &[0.25, 0.25, 0.25, 0.25]), "mLabels": ["0", "1"], "nLabels": ["0", "1"]}),
    );
    let run = || {
        let out = qcond(&["sample", "--table", s(&table), "--trials", "100000", "--seed", "42"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let mut r = report(&out);
        r["elapsedMs"] = json!(0);
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn equivalence_table_feeds_sampler() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &max_mixed());
    let e = write(&dir, "e.json", &identity_channel());
    let z = json!({"dim": 2, "elements": [matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]), matrix(2, 2, &[0.0, 0.0, 0.0, 1.0])], "labels": ["0", "1"]});
    let m = write(&dir, "m.json", &z);
    let table = dir.path().join("table.json");
    let out = qcond(&["verify", "equivalence", "--rho", s(&rho), "--channel", s(&e), "--m", s(&m), "--n", s(&m), "--out", s(&table)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = qcond(&["sample", "--table", s(&table), "--trials", "1000", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let counts = report(&out)["details"]["counts"].clone();
    assert_eq!(counts[0][1], json!(0));
    assert_eq!(counts[1][0], json!(0));
}

#[test]
fn state_with_wrong_trace_is_rejected_by_name() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &json!({"dim": 2, "matrix": matrix(2, 2, &[0.5, 0.0, 0.0, 0.4])}));
    let e = write(&dir, "e.json", &identity_channel());
    let out = qcond(&["iso", "forward", "--rho", s(&rho), "--channel", s(&e)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("trace"), "{}", stderr(&out));
}

#[test]
fn incomplete_povm_is_rejected_by_name() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &max_mixed());
    let povm = write(&dir, "m.json", &json!({"dim": 2, "elements": [matrix(2, 2, &[1.0, 0.0, 0.0, 0.5])], "labels": ["x"]}));
    let out = qcond(&["verify", "povm-ensemble", "--rho", s(&rho), "--povm", s(&povm)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("completeness"), "{}", stderr(&out));
}

#[test]
fn malformed_json_reports_position() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"din\": 2,\n \"dout\": 2,\n \"kraus\": [}").unwrap();
    let out = qcond(&["fixed-points", "--channel", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn tolerance_override_flips_verdict() {
    let out = qcond(&["--tol", "0", "verify", "roundtrip", "--dimA", "3", "--dimB", "3", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qcond(&["verify", "measure-commute", "--dimA", "2", "--dimB", "2", "--trials", "3", "--tol", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_one_and_help_lists_theorem_map() {
    assert_eq!(qcond(&["verify", "roundtrip"]).status.code(), Some(1));
    assert_eq!(qcond(&["no-such-command"]).status.code(), Some(1));
    let help = qcond(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in ["verify roundtrip", "verify measure-commute", "decompose", "universal-demo", "sample"] {
        assert!(text.contains(cmd), "help misses {cmd}");
    }
}

#[test]
fn saved_files_reload_bit_identically() {
    let dir = TempDir::new().unwrap();
    let rho = write(&dir, "rho.json", &json!({"dim": 2, "matrix": matrix(2, 2, &[0.7, 0.1, 0.1, 0.3])}));
    let povm = write(
        &dir,
        "m.json",
        &json!({"dim": 2, "elements": [matrix(2, 2, &[0.3, 0.1, 0.1, 0.6]), matrix(2, 2, &[0.7, -0.1, -0.1, 0.4])], "labels": ["u", "v"]}),
    );
    let ens = dir.path().join("ens.json");
    let out = qcond(&["verify", "povm-ensemble", "--rho", s(&rho), "--povm", s(&povm), "--out", s(&ens)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let first = std::fs::read(&ens).unwrap();
    let text: Value = serde_json::from_slice(&first).unwrap();
    let copy = write(&dir, "copy.json", &text);
    let second = std::fs::read(&copy).unwrap();
    let a: Value = serde_json::from_slice(&first).unwrap();
    let b: Value = serde_json::from_slice(&second).unwrap();
    assert_eq!(a, b);
    let out = qcond(&["cloning-demo", "--ensemble", s(&ens), "--channel1", s(&ens), "--channel2", s(&ens)]);
    assert_eq!(out.status.code(), Some(1));
}
