use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fdp_core::mechanisms::{binomial_noise_pair, ternary_curve};
use serde_json::Value;

fn fdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdp")).args(args).output().expect("run fdp")
}

fn ok(args: &[&str]) -> String {
    let out = fdp(args);
    assert!(out.status.success(), "fdp {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows of a `#`-commented CSV, header removed.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn curve_rows(text: &str, kind: &str) -> Vec<(f64, f64)> {
    rows(text).into_iter().filter(|r| r[0] == kind).map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap())).collect()
}

fn header_value(text: &str, key: &str) -> String {
    let prefix = format!("# {key}: ");
    text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no {key} header")).to_string()
}

#[test]
fn tradeoff_ternary_vertices_and_header() {
    let text = ok(&["tradeoff", "--mech", "ternary", "--A", "0.25", "--B", "0.5", "--c", "0.1"]);
    assert!(text.starts_with(&format!("# fdp {}", env!("CARGO_PKG_VERSION"))));
    assert!(header_value(&text, "params").contains(r#""mechanism":"ternary""#));
    assert_eq!(header_value(&text, "seed"), "none (deterministic)");
    let want = [(0.0, 1.0), (0.15, 0.65), (0.65, 0.15), (1.0, 0.0)];
    let got = curve_rows(&text, "vertex");
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!((g.0 - w.0).abs() < 1e-15 && (g.1 - w.1).abs() < 1e-15, "{g:?} vs {w:?}");
    }
    assert_eq!(curve_rows(&text, "sample").len(), 1001);
}

#[test]
fn tradeoff_with_b_equal_a_is_two_segments() {
    let text = ok(&["tradeoff", "--mech", "ternary", "--A", "0.25", "--B", "0.25", "--c", "0.1"]);
    let v = curve_rows(&text, "vertex");
    assert_eq!(v.len(), 3);
    assert!((v[1].0 - 0.3).abs() < 1e-15 && (v[1].1 - 0.3).abs() < 1e-15);
}

#[test]
fn tradeoff_binomial_noise_improves_with_m() {
    let sample = |m: &str| {
        curve_rows(&ok(&["tradeoff", "--mech", "binomial-noise", "--M", m, "--p", "0.5", "--l", "8"]), "sample")
    };
    let (small, large) = (sample("20"), sample("100"));
    assert!(small.iter().zip(&large).all(|(s, l)| l.1 >= s.1 - 1e-12));
    assert!(small.iter().zip(&large).any(|(s, l)| l.1 > s.1 + 1e-3));
}

#[test]
fn invalid_parameters_exit_nonzero_with_reason() {
    let out = fdp(&["tradeoff", "--mech", "ternary", "--A", "0.05", "--B", "0.5", "--c", "0.1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("A must exceed c"));
    let out = fdp(&["tradeoff", "--mech", "ternary", "--A", "0.25", "--c", "0.1"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires --B"));
    assert!(!fdp(&["tradeoff", "--mech", "nonsense"]).status.success());
}

#[test]
fn convert_examples() {
    let json: Value = serde_json::from_str(&ok(&[
        "convert",
        "--mech",
        "binomial-noise",
        "--M",
        "500",
        "--p",
        "0.5",
        "--l",
        "8",
        "--eps",
        "1.67,inf",
    ]))
    .unwrap();
    let points = json["profile"]["points"].as_array().unwrap();
    assert_eq!(points[1]["epsilon"], "inf");
    let tail = points[1]["delta"].as_f64().unwrap();
    assert!((tail / 4.61e-136 - 1.0).abs() < 0.01);
    assert!(points[0]["delta"].as_f64().unwrap() > tail);

    let json: Value = serde_json::from_str(&ok(&[
        "convert", "--mech", "ternary", "--A", "0.25", "--B", "0.5", "--c", "0.1", "--delta", "0",
    ]))
    .unwrap();
    let eps = json["profile"]["points"][0]["epsilon"].as_f64().unwrap();
    assert!((eps - (7.0f64 / 3.0).ln()).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perfect.csv");
    fs::write(&path, "alpha,beta\n0,1\n1,0\n").unwrap();
    let p = path.to_str().unwrap();
    let json: Value =
        serde_json::from_str(&ok(&["convert", "--curve", p, "--delta", "0", "--eps", "0", "--gdp"])).unwrap();
    for point in json["profile"]["points"].as_array().unwrap() {
        assert_eq!((point["epsilon"].as_f64(), point["delta"].as_f64()), (Some(0.0), Some(0.0)));
    }
    assert_eq!(json["profile"]["mu"].as_f64(), Some(0.0));
    assert!(!fdp(&["convert", "--curve", p]).status.success());
}

#[test]
fn convert_reads_tradeoff_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cldp.csv");
    let p = path.to_str().unwrap();
    ok(&["tradeoff", "--mech", "cldp", "--epsilon", "1", "--c", "0.1", "-o", p]);
    let text = ok(&["convert", "--curve", p, "--delta", "0", "--gdp", "--format", "csv"]);
    let mu: f64 = header_value(&text, "mu").parse().unwrap();
    assert!((mu - 1.232_035_385_344_901).abs() < 1e-9);
    let eps: f64 = rows(&text)[0][0].parse().unwrap();
    assert!((eps - 1.0).abs() < 1e-12);
}

#[test]
fn oracle_examples() {
    let same = r#"{"support":[0,1,2],"probs":[0.2,0.3,0.5]}"#;
    let text = ok(&["oracle", "--P", same, "--Q", same]);
    for (a, b) in curve_rows(&text, "sample") {
        assert!((b - (1.0 - a)).abs() < 1e-12);
    }
    let text = ok(&[
        "oracle",
        "--P",
        r#"{"support":[0,1],"probs":[0.25,0.75]}"#,
        "--Q",
        r#"{"support":[0,1],"probs":[0.75,0.25]}"#,
    ]);
    let half = curve_rows(&text, "sample")[500];
    assert!((half.0 - 0.5).abs() < 1e-15 && (half.1 - 1.0 / 6.0).abs() < 1e-12);
    assert!(!fdp(&["oracle", "--P", r#"{"support":[0],"probs":[0.5]}"#, "--Q", same]).status.success());
}

#[test]
fn oracle_on_worst_case_pair_matches_tradeoff() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = binomial_noise_pair(30, 0.4, 3).unwrap();
    let (pp, qp) = (dir.path().join("p.json"), dir.path().join("q.json"));
    fs::write(&pp, serde_json::to_string(&p).unwrap()).unwrap();
    fs::write(&qp, serde_json::to_string(&q).unwrap()).unwrap();
    let oracle = ok(&["oracle", "--P", pp.to_str().unwrap(), "--Q", qp.to_str().unwrap(), "--symmetric"]);
    let closed = ok(&["tradeoff", "--mech", "binomial-noise", "--M", "30", "--p", "0.4", "--l", "3"]);
    let (a, b) = (curve_rows(&oracle, "sample"), curve_rows(&closed, "sample"));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x.1 - y.1).abs() <= 1e-10, "{x:?} vs {y:?}");
    }
}

fn compose_rows(args: &[&str]) -> (String, Vec<Vec<f64>>) {
    let text = ok(args);
    let data = rows(&text).into_iter().map(|r| r.iter().map(|v| v.parse().unwrap()).collect()).collect();
    (text, data)
}

#[test]
fn compose_examples() {
    let c = 1.0 / 250f64.sqrt();
    let a = (c * c + 1.0).sqrt().to_string();
    let (text, _) = compose_rows(&["compose", "--A", &a, "--B", &a, "--c", &c.to_string(), "--d", "250"]);
    let mu: f64 = header_value(&text, "mu").parse().unwrap();
    assert!((mu - 2.0).abs() < 1e-12);

    let (_, data) = compose_rows(&["compose", "--A", "0.25", "--B", "0.5", "--c", "0.1", "--d", "1", "--exact"]);
    let f = ternary_curve(0.25, 0.5, 0.1).unwrap();
    for r in &data {
        assert!((r[4] - f.eval(r[0]).unwrap()).abs() < 1e-12);
    }

    let (text, data) = compose_rows(&["compose", "--A", "1", "--B", "1.2", "--c", "0.3", "--d", "6", "--exact"]);
    let gamma: f64 = header_value(&text, "gamma").parse().unwrap();
    assert_eq!(header_value(&text, "gamma_warning"), "false");
    for r in data.iter().filter(|r| r[0] >= gamma && r[0] <= 1.0 - gamma) {
        assert!(r[1] <= r[4] && r[4] <= r[2], "alpha {}", r[0]);
    }
    assert!(!fdp(&["compose", "--A", "1", "--B", "1.2", "--c", "0.3", "--d", "9", "--exact"]).status.success());
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("bench.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn bench_is_deterministic_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"N":40,"d":8,"C":1,"trials":10,"seed":9,"mechanisms":[
            {"mechanism":"ternary","A":0.5,"B":1.0},{"mechanism":"sqkr","eps":2,"k":2},{"mechanism":"identity"}]}"#,
    );
    let first = ok(&["bench", "--config", &cfg]);
    assert_eq!(first, ok(&["bench", "--config", &cfg]));
    assert_eq!(header_value(&first, "seed"), "9");
    let data = rows(&first);
    assert_eq!(data.len(), 3);
    assert_ne!(first, ok(&["bench", "--config", &cfg, "--seed", "10"]));

    let json: Value = serde_json::from_str(&ok(&["bench", "--config", &cfg, "--format", "json"])).unwrap();
    assert_eq!(json["rows"][2]["mu_gdp"], "inf");
    assert_eq!(json["meta"]["seed"], 9);

    let bad = write_config(
        dir.path(),
        r#"{"N":40,"d":8,"C":1,"trials":5,"seed":1,"mechanisms":[
            {"mechanism":"ternary-match-gaussian","sigma":0.01,"r":0.01},{"mechanism":"identity"}]}"#,
    );
    let out = fdp(&["bench", "--config", &bad]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 0"));
    assert_eq!(rows(&String::from_utf8(out.stdout).unwrap()).len(), 2);
}

#[test]
fn compare_sqkr_preset_emits_rows_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let (out, curves) = (dir.path().join("rows.csv"), dir.path().join("curves.csv"));
    ok(&[
        "compare",
        "--preset",
        "fig4-left",
        "--trials",
        "3",
        "-o",
        out.to_str().unwrap(),
        "--curves",
        curves.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let data = rows(&text);
    assert_eq!(data.len(), 6);
    let curves = fs::read_to_string(&curves).unwrap();
    let at_half = |name: &str, row: &str| -> f64 {
        rows(&curves)
            .into_iter()
            .find(|r| r[0] == row && r[2] == name && r[3].parse::<f64>().unwrap() == 0.5)
            .map(|r| r[4].parse().unwrap())
            .unwrap()
    };
    // rows 2 and 3 are SQKR and matched ternary at ε = 2
    assert!((at_half("sqkr", "2") - (-2.0f64).exp() / 2.0).abs() < 1e-12);
    assert!((at_half("ternary-gdp", "3") - 0.484).abs() < 0.001);
    assert!(!fdp(&["compare", "--preset", "fig5"]).status.success());
}
