use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cw-randers"))
        .args(args)
        .env_remove("RANDERS_LOG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn solve(l: &str) -> Value {
    let o = run(&["solve", "--l", "1", "--m", "1", "--x1", "0.5", "--x2", "1", "--L", l]);
    assert_eq!(code(&o), 0);
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let round = write(dir.path(), "round.json", r#"{"family":"u_sphere","n":1,"a":1,"b":1,"c":0}"#);
    let o = run(&["validate", &round]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).is_empty());

    let edge = write(dir.path(), "edge.json", r#"{"family":"u_sphere","n":1,"a":4,"b":1,"c":2}"#);
    let o = run(&["validate", &edge]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("|c|<√a"));
    assert_eq!(stdout(&o).lines().count(), 1);

    let truncated = write(dir.path(), "trunc.json", r#"{"family":"u_sphere","n":1,"a":1"#);
    let o = run(&["validate", &truncated]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("EOF"));

    let o = run(&["--config", &round, "validate"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn solve_instance() {
    let v = solve("1");
    let s = &v["spec"];
    assert_eq!(s["family"], "u_sphere");
    assert!((s["a"].as_f64().unwrap() - 16.0 / 9.0).abs() < 1e-12);
    assert!((s["b"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert!((s["c"].as_f64().unwrap() + 2.0 / 3.0).abs() < 1e-12);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn solve_scale_law() {
    let one = solve("1");
    let two = solve("2");
    let get = |v: &Value, k: &str| v["spec"][k].as_f64().unwrap();
    assert!((get(&two, "c") - 2.0 * get(&one, "c")).abs() < 1e-12);
    assert!((get(&two, "b") - 4.0 * get(&one, "b")).abs() < 1e-12);
    let coupled = get(&two, "b") + get(&two, "c").powi(2);
    assert!((get(&two, "a") - coupled).abs() < 1e-12);
}

#[test]
fn solve_infeasible() {
    let o = run(&["solve", "--l", "1", "--m", "2", "--x1", "3", "--x2", "1", "--L", "1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(x1 - m x2)(x1 + l x2)"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&["verify", "nope"])), 2);
    assert_eq!(code(&run(&["solve", "--l", "1"])), 2);
    assert_eq!(code(&run(&["--tolerance", "-1", "verify", "focus"])), 2);
    assert_eq!(code(&run(&["verify", "eigenlemma", "--trials", "x"])), 2);
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn config_file_drives_command() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.json");
    let cfg = write(
        dir.path(),
        "run.json",
        &format!(
            r#"{{"command":"solve","params":{{"l":2,"m":1,"x1":0.2,"x2":1,"L":1.5}},"seed":1,"out":{}}}"#,
            serde_json::to_string(out.to_str().unwrap()).unwrap()
        ),
    );
    let o = run(&["--config", &cfg]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["spec"]["n"], 2);

    let bad = write(dir.path(), "bad.json", r#"{"command":"frobnicate"}"#);
    assert_eq!(code(&run(&["--config", &bad])), 2);
}

#[test]
fn orbit_constant_on_solved_instance() {
    let o = run(&[
        "verify", "orbit", "--l", "1", "--m", "1", "--x1", "0.5", "--x2", "1", "--L", "1", "--trials", "1000",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("candidate_id,min,max,mean,stddev,verdict\n"));
    assert!(text.trim_end().ends_with(",constant"));
}

#[test]
fn orbit_non_constant_with_foreign_spec() {
    let dir = TempDir::new().unwrap();
    let round = write(dir.path(), "round.json", r#"{"family":"u_sphere","n":1,"a":1,"b":1,"c":0.5}"#);
    let o = run(&[
        "--config", &round, "verify", "orbit", "--l", "1", "--m", "1", "--x1", "0.5", "--x2", "1", "--L", "1",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("non-constant"));
}

#[test]
fn eigenlemma_zero_violations() {
    let o = run(&["verify", "eigenlemma", "--n", "4", "--trials", "10000"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10_001);
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn verify_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cases: [&[&str]; 4] = [
        &["verify", "eigenlemma", "--n", "2,3", "--trials", "200"],
        &["verify", "commutator", "--k", "2", "--trials", "20"],
        &["verify", "nonintersection", "--trials", "100"],
        &["verify", "orbit", "--l", "2", "--m", "1", "--x1", "0.1", "--x2", "1", "--L", "1", "--trials", "200"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("{i}-{rep}.csv"));
            let mut full = vec!["--seed", "11", "--out", path.to_str().unwrap()];
            full.extend_from_slice(args);
            assert_eq!(code(&run(&full)), 0, "{args:?}");
            outputs.push(fs::read(&path).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{args:?}");
        assert!(!outputs[0].is_empty());
    }
    let a = stdout(&run(&["--seed", "1", "verify", "eigenlemma", "--trials", "5"]));
    let b = stdout(&run(&["--seed", "2", "verify", "eigenlemma", "--trials", "5"]));
    assert_ne!(a, b);
}

#[test]
fn sp_scan_classifies_candidates() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "sp.json", r#"{"family":"sp_sphere","n":1,"a1":1,"a2":2,"b":1,"c":0.3}"#);
    let o = run(&["--config", &spec, "verify", "sp-scan", "--trials", "300", "--candidates", "2"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let verdicts: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(verdicts, ["constant", "non-constant", "non-constant", "non-constant", "non-constant"]);

    let flat = write(dir.path(), "flat.json", r#"{"family":"sp_sphere","n":1,"a1":1,"a2":1,"b":1,"c":0.3}"#);
    assert_eq!(code(&run(&["--config", &flat, "verify", "sp-scan"])), 2);
}

#[test]
fn focus_and_nonintersection() {
    let o = run(&["verify", "focus", "--v", "0.5", "--samples", "20"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("v,samples,spread,verdict\n"));
    assert_eq!(code(&run(&["verify", "focus", "--v", "1.5"])), 1);

    let o = run(&["verify", "nonintersection", "--x", "0.5", "--trials", "200"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("trials,failures,min_distance,verdict\n200,0,"));
}

#[test]
fn displacement_round_central_flow() {
    let o = run(&["verify", "displacement", "--points", "2000", "--k", "10", "--samples", "10", "--t", "0.4"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("vertex,snap,displacement\n"));
    for line in text.lines().skip(1) {
        let d: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((d - 0.4).abs() < 0.4 * 0.07, "{line}");
    }
}
