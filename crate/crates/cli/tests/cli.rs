use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_markov-copula");

const PAIR: &str = r#"[{"name": "X1", "states": ["0", "1"]}, {"name": "X2", "states": ["0", "1"]}]"#;

fn family(name: &str, params: &str) -> String {
    format!(r#"{{"factors": {PAIR}, "generator": {{"kind": "family", "name": "{name}", "params": {params}}}}}"#)
}

fn common_shock() -> String {
    family("example_3_1", r#"{"a": 0.5, "b": 0.3, "c": 0.2}"#)
}

fn contagion() -> String {
    family("example_3_2_joint", r#"{"a": 0.5, "b": 0.3, "c": 0.2}"#)
}

fn pinning() -> String {
    family("example_3_3", r#"{"a": 0.4, "b": 0.3, "c": 0.2, "d": 0.25, "e": 0.15, "f": 0.1, "g": 0.35}"#)
}

fn absorbing(name: &str, rate: f64) -> String {
    format!(
        r#"{{"factors": [{{"name": "{name}", "states": ["0", "1"]}}],
            "generator": {{"kind": "constant", "matrix": [[{}, {rate}], [0.0, 0.0]]}}}}"#,
        -rate
    )
}

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let d = Dir::new();
    let good = d.file("common_shock.json", &common_shock());
    assert_eq!(code(&run(&["validate", s(&good)])), 0);

    let bad = d.file("neg.json", &absorbing("X", -0.5));
    let out_path = d.path("neg-report.json");
    let out = run(&["validate", s(&bad), "--out", s(&out_path)]);
    assert_eq!(code(&out), 1);
    let r = report(&out_path);
    let v = &r["result"]["report"]["violations"][0];
    assert_eq!(v["row"], 0);
    assert_eq!(v["column"], 1);

    let broken = d.file("broken.json", "{\"factors\": [\n  {\"name\": \"X\",,}\n]}");
    let out = run(&["validate", s(&broken)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(code(&run(&["validate", s(&d.path("missing.json"))])), 2);
}

#[test]
fn check_example_3_1_passes() {
    let d = Dir::new();
    let m = d.file("common_shock.json", &common_shock());
    let out_path = d.path("r.json");
    assert_eq!(code(&run(&["check", s(&m), "--mode", "both", "--out", s(&out_path)])), 0);
    let r = report(&out_path);
    for f in r["result"]["factors"].as_array().unwrap() {
        assert_eq!(f["verdict"], "strong");
        assert_eq!(f["immersion"], "holds");
    }
}

#[test]
fn check_example_3_2_by_mode() {
    let d = Dir::new();
    let m = d.file("contagion.json", &contagion());
    assert_eq!(code(&run(&["check", s(&m), "--mode", "strong"])), 1);
    assert_eq!(code(&run(&["check", s(&m), "--mode", "weak"])), 0);
    let out_path = d.path("both.json");
    assert_eq!(code(&run(&["check", s(&m), "--mode", "both", "--out", s(&out_path)])), 0);
    let r = report(&out_path);
    let f = &r["result"]["factors"][0];
    assert_eq!(f["strong"]["verdict"], "inconsistent");
    assert_eq!(f["weak"]["verdict"], "weak_evidence");
    assert_eq!(f["immersion"], "fails");
}

#[test]
fn check_example_3_3_certificate() {
    let d = Dir::new();
    let m = d.file("pinning.json", &pinning());
    let out_path = d.path("r.json");
    let out = run(&["check", s(&m), "--mode", "weak", "--factor", "2", "--grid", "1", "--out", s(&out_path)]);
    assert_eq!(code(&out), 1);
    let r = report(&out_path);
    let cert = &r["result"]["factors"][0]["weak"]["certificates"][0];
    assert_eq!(cert["kind"], "projected_intensity");
    let f = 0.1;
    // {X²_1 = 0} alone gives (b+c−f)q+f; adding X²_0.5 = 1 pins X¹ = 1 and gives f
    assert!(cert["left_value"].as_f64().unwrap() > f);
    assert!((cert["right_value"].as_f64().unwrap() - f).abs() < 1e-12);
    assert_eq!(cert["right"]["constraints"], serde_json::json!([[0.5, 1], [1.0, 0]]));
}

#[test]
fn check_argument_errors() {
    let d = Dir::new();
    let m = d.file("common_shock.json", &common_shock());
    assert_eq!(code(&run(&["check", s(&m), "--factor", "3"])), 2);
    assert_eq!(code(&run(&["check", s(&m), "--depth", "4"])), 2);
    assert_eq!(code(&run(&["check", s(&m), "--mode", "sideways"])), 2);
}

#[test]
fn build_independent_and_lp() {
    let d = Dir::new();
    let m1 = d.file("m1.json", &absorbing("X1", 0.7));
    let m2 = d.file("m2.json", &absorbing("X2", 0.5));

    let joint = d.path("indep.json");
    assert_eq!(code(&run(&["build", s(&m1), s(&m2), "--objective", "independent", "--model-out", s(&joint)])), 0);
    let model = report(&joint);
    assert_eq!(model["generator"]["kind"], "constant");
    assert_eq!(model["generator"]["matrix"][0][3], 0.0);
    assert_eq!(model["generator"]["matrix"][0][1], 0.5);

    let joint = d.path("max.json");
    let rep = d.path("max-report.json");
    let out = run(&["build", s(&m1), s(&m2), "--objective", "maximize-common-jumps", "--model-out", s(&joint), "--out", s(&rep)]);
    assert_eq!(code(&out), 0);
    let model = report(&joint);
    assert!((model["generator"]["matrix"][0][3].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(report(&rep)["result"]["verification"]["pass"], true);

    // the built joint model is strongly consistent by construction
    assert_eq!(code(&run(&["check", s(&joint), "--mode", "strong"])), 0);

    let bad = d.file("bad.json", &absorbing("X2", -0.5));
    assert_eq!(code(&run(&["build", s(&m1), s(&bad)])), 2);
}

#[test]
fn build_weighted_objective() {
    let d = Dir::new();
    let m1 = d.file("m1.json", &absorbing("X1", 0.7));
    let m2 = d.file("m2.json", &absorbing("X2", 0.5));
    let joint = d.path("w.json");
    let out = run(&["build", s(&m1), s(&m2), "--objective", "maximize-weighted", "--weight", "0:3=1", "--model-out", s(&joint)]);
    assert_eq!(code(&out), 0);
    assert!((report(&joint)["generator"]["matrix"][0][3].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(code(&run(&["build", s(&m1), s(&m2), "--objective", "maximize-weighted", "--weight", "0:1=1"])), 2);
    assert_eq!(code(&run(&["build", s(&m1), s(&m2), "--weight", "0:3=1"])), 2);
}

#[test]
fn simulate_reports() {
    let d = Dir::new();
    let m = d.file("common_shock.json", &common_shock());
    let a = d.path("a.json");
    let b = d.path("b.json");
    let args = |out: &Path| {
        vec!["simulate".to_string(), s(&m).into(), "--t".into(), "1".into(), "--paths".into(), "20000".into(), "--seed".into(), "7".into(), "--report".into(), "both".into(), "--out".into(), s(out).into()]
    };
    let out = Command::new(BIN).args(args(&a)).env("MARKOV_COPULA_THREADS", "1").output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    // same seed on a different worker count gives the same bytes, apart from the output path
    let out = Command::new(BIN).args(args(&b)).env("MARKOV_COPULA_THREADS", "3").output().unwrap();
    assert_eq!(code(&out), 0);
    let mut ra = report(&a);
    let mut rb = report(&b);
    ra["command"] = Value::Null;
    rb["command"] = Value::Null;
    assert_eq!(ra, rb);
    let again = d.path("a2.json");
    let out = Command::new(BIN).args(args(&a)).output().unwrap();
    assert_eq!(code(&out), 0);
    std::fs::copy(&a, &again).unwrap();
    Command::new(BIN).args(args(&a)).output().unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&again).unwrap());

    assert_eq!(code(&run(&["simulate", s(&m), "--t", "1", "--paths", "0"])), 2);
    assert_eq!(code(&run(&["simulate", s(&m), "--t", "1", "--paths", "10"])), 2);
    assert_eq!(code(&run(&["simulate", s(&m), "--t", "-1", "--paths", "2000"])), 2);
    assert_eq!(code(&Command::new(BIN).args(["simulate", s(&m), "--t", "1"]).env("MARKOV_COPULA_THREADS", "many").output().unwrap()), 2);
}

#[test]
fn emitted_models_reparse() {
    let d = Dir::new();
    let m1 = d.file("m1.json", &family("example_3_2_marginal_1", r#"{"a": 0.5, "b": 0.3, "c": 0.2}"#).replace(PAIR, r#"[{"name": "X1", "states": ["0", "1"]}]"#));
    let m2 = d.file("m2.json", &family("example_3_2_marginal_2", r#"{"a": 0.5, "b": 0.3, "c": 0.2}"#).replace(PAIR, r#"[{"name": "X2", "states": ["0", "1"]}]"#));
    for objective in ["independent", "maximize-common-jumps"] {
        let first = d.path(&format!("{objective}-1.json"));
        assert_eq!(code(&run(&["build", s(&m1), s(&m2), "--objective", objective, "--grid", "0.5,1,2", "--model-out", s(&first)])), 0);
        // validating the emitted model reads it back; check it is the same document after a second build
        assert_eq!(code(&run(&["validate", s(&first)])), 0);
        let second = d.path(&format!("{objective}-2.json"));
        run(&["build", s(&m1), s(&m2), "--objective", objective, "--grid", "0.5,1,2", "--model-out", s(&second)]);
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
        assert_eq!(code(&run(&["check", s(&first), "--mode", "strong", "--grid", "0.5,1,2"])), 0);
    }
}
