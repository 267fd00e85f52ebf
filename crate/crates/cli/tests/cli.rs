use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn mec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mec"))
        .args(args)
        .env_remove("MEC_TOL")
        .env_remove("MEC_TAIL")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = mec(&all);
    let value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    });
    (value, out.status.code().unwrap())
}

fn instance_file(name: &str, body: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("mec-cli-{}-{name}.json", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a float: {v}"))
}

fn h(ps: &[f64]) -> f64 {
    ps.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

#[test]
fn couple_identical_marginals_has_zero_gap() {
    let p = instance_file("same", r#"{"distributions": [[0.5, 0.5], [0.5, 0.5]]}"#);
    let (v, code) = json(&["couple", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(f(&v["gap"]).abs() < 1e-12);
    assert_eq!(v["passed"], true);
}

#[test]
fn couple_reports_gap_and_certificate() {
    let p = instance_file("pair", r#"{"distributions": [[0.6, 0.4], [0.5, 0.5]]}"#);
    let (v, code) = json(&["couple", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    // cells 0.5, 0.4, 0.1 against a uniform meet
    let want = h(&[0.5, 0.4, 0.1]) - 1.0;
    assert!((f(&v["gap"]) - want).abs() < 1e-12);
    assert!((f(&v["gap"]) - 0.360964).abs() < 1e-6);
    let cert = v["certificate"].as_array().unwrap();
    assert_eq!(cert.len(), 3);
    assert!(cert.iter().all(|row| row["holds"] == true));
    assert_eq!(v["split_bounds"].as_array().unwrap().len(), 4);
}

#[test]
fn couple_in_exact_mode_prints_rationals() {
    let p = instance_file(
        "exact",
        r#"{"distributions": [["3/5", "2/5"], [0.5, 0.5]]}"#,
    );
    let (v, code) = json(&["couple", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["numeric_mode"], "exact-rational");
    let masses: Vec<&str> = v["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["mass"].as_str().unwrap())
        .collect();
    assert_eq!(masses, ["1/2", "2/5", "1/10"]);
}

#[test]
fn malformed_input_exits_with_one() {
    let cases = [
        ("syntax", r#"{"distributions": [[0.5, "#),
        ("shape", r#"{"distributions": 3}"#),
        ("mass", r#"{"distributions": [[0.5, "half"]]}"#),
        ("sum", r#"{"distributions": [[0.5, 0.6]]}"#),
        ("negative", r#"{"distributions": [[1.5, -0.5]]}"#),
        ("field", r#"{"distributions": [[1.0]], "extra": 1}"#),
    ];
    for (name, body) in cases {
        let p = instance_file(name, body);
        let out = mec(&["couple", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(!out.stderr.is_empty(), "{name}");
    }
    let missing = mec(&["couple", "/nonexistent/instance.json"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn parse_errors_locate_the_problem() {
    let p = instance_file("loc", "{\"distributions\": [[0.5, 0.5],\n [0.25, \"x\"]]}");
    let out = mec(&["couple", p.to_str().unwrap()]);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("distributions[1][1]"), "{msg}");

    let p = instance_file("line", "{\"distributions\":\n [[0.5 0.5]]}");
    let out = mec(&["couple", p.to_str().unwrap()]);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains(":2:"), "{msg}");
}

#[test]
fn usage_errors_exit_with_one_and_help_with_zero() {
    assert_eq!(mec(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mec(&["verify", "--trials", "many"]).status.code(), Some(1));
    assert_eq!(mec(&["verify", "--z", "1"]).status.code(), Some(1));
    assert_eq!(mec(&["--help"]).status.code(), Some(0));
    assert_eq!(mec(&["--version"]).status.code(), Some(0));
}

#[test]
fn meet_of_pair() {
    let p = instance_file("meet", r#"{"distributions": [[0.6, 0.4], [0.5, 0.5]]}"#);
    let (v, code) = json(&["meet", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let meet: Vec<f64> = v["meet"].as_array().unwrap().iter().map(f).collect();
    assert_eq!(meet, [0.5, 0.5]);
}

#[test]
fn split_of_point_mass() {
    let (v, code) = json(&[
        "split", "--dist", "1.0", "--gamma", "0.5", "--tail", "0.0625",
    ]);
    assert_eq!(code, 0);
    let masses: Vec<f64> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| f(&e["mass"]))
        .collect();
    assert_eq!(masses, [0.5, 0.25, 0.125, 0.0625]);

    let (v, _) = json(&[
        "split", "--dist", "1", "--gamma", "1/2", "--tail", "1/16", "--exact",
    ]);
    let masses: Vec<&str> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["mass"].as_str().unwrap())
        .collect();
    assert_eq!(masses, ["1/2", "1/4", "1/8", "1/16"]);
}

#[test]
fn split_rejects_gamma_outside_unit_interval() {
    let out = mec(&["split", "--dist", "1.0", "--gamma", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gprime_of_uniform_follows_geometric_states() {
    let (v, code) = json(&["gprime", "--dist", "1/4,1/4,1/4,1/4", "--tail", "1/100"]);
    assert_eq!(code, 0);
    let states = v["states"].as_array().unwrap();
    assert!(states.len() > 4);
    // (3/4)^(i-1) / 4
    let mut want = Frac(1, 4);
    for s in states {
        assert_eq!(s.as_str().unwrap(), want.to_string());
        want = Frac(want.0 * 3, want.1 * 4).reduced();
    }
}

#[derive(Clone, Copy)]
struct Frac(u128, u128);

impl Frac {
    fn reduced(self) -> Self {
        let (mut a, mut b) = (self.0, self.1);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        Frac(self.0 / a, self.1 / a)
    }
}

impl std::fmt::Display for Frac {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.0, self.1)
    }
}

#[test]
fn oracle_matches_greedy_on_pair() {
    let p = instance_file("oracle", r#"{"distributions": [[0.6, 0.4], [0.5, 0.5]]}"#);
    let (v, code) = json(&["oracle", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["optimal"], true);
    assert!(f(&v["difference"]).abs() < 1e-12);
    assert!((f(&v["best_entropy"]) - h(&[0.5, 0.4, 0.1])).abs() < 1e-12);
}

#[test]
fn oracle_cap_exits_with_two() {
    let p = instance_file(
        "cap",
        r#"{"distributions": [[0.4, 0.3, 0.2, 0.1], [0.35, 0.3, 0.25, 0.1]]}"#,
    );
    let (v, code) = json(&["oracle", p.to_str().unwrap(), "--max-nodes", "1"]);
    assert_eq!(code, 2);
    assert_eq!(v["exhaustive"], false);
}

#[test]
fn uniform_gap_table() {
    let (v, code) = json(&["uniform", "--n-max", "4"]);
    assert_eq!(code, 0);
    let rows = v["rows"].as_array().unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| f(&r["gap"])).collect();
    let want: Vec<f64> = (2..=4)
        .map(|n| {
            let n = n as f64;
            (n - 1.0) * (n / (n - 1.0)).log2()
        })
        .collect();
    for (g, w) in gaps.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
    for (g, w) in gaps.iter().zip([1.0, 1.169925, 1.245112]) {
        assert!((g - w).abs() < 1e-6);
    }
}

#[test]
fn verify_with_no_trials_passes() {
    let (v, code) = json(&["verify", "--trials", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["failed"], 0);
    assert_eq!(v["max_gap"], Value::Null);
}

#[test]
fn verify_two_marginals_stays_within_one_bit() {
    let (v, code) = json(&[
        "verify", "--trials", "1000", "--m", "2", "--n", "3", "--seed", "7",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["failed"], 0);
    assert!(f(&v["max_gap"]) <= 1.0);
    assert!(f(&v["max_oracle_difference"]) <= 1.0);
}

#[test]
#[allow(clippy::approx_constant)] // the stated six-digit bound, not log2(e) itself
fn verify_four_marginals_stays_in_band() {
    let (v, code) = json(&[
        "verify", "--trials", "1000", "--m", "4", "--n", "6", "--seed", "7",
    ]);
    assert_eq!(code, 0);
    assert!(f(&v["max_gap"]) <= 1.442695);
}

#[test]
fn structured_output_is_deterministic() {
    let args = [
        "verify", "--trials", "200", "--m", "3", "--n", "4", "--seed", "11", "--json",
    ];
    let a = mec(&args);
    let b = mec(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let p = instance_file(
        "det",
        r#"{"distributions": [[0.7, 0.2, 0.1], [0.4, 0.4, 0.2]]}"#,
    );
    let a = mec(&["couple", p.to_str().unwrap(), "--json"]);
    let b = mec(&["couple", p.to_str().unwrap(), "--json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn flags_override_environment() {
    let run = |env_tail: Option<&str>, args: &[&str]| -> usize {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mec"));
        cmd.args(["split", "--dist", "1", "--gamma", "1/2", "--json"])
            .args(args);
        cmd.env_remove("MEC_TAIL").env_remove("MEC_TOL");
        if let Some(t) = env_tail {
            cmd.env("MEC_TAIL", t);
        }
        let out = cmd.output().unwrap();
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["entries"].as_array().unwrap().len()
    };
    assert_eq!(run(Some("0.25"), &[]), 2);
    assert_eq!(run(Some("0.25"), &["--tail", "0.0625"]), 4);

    // a huge MEC_TOL accepts a badly normalized file; the flag restores strictness
    let p = instance_file("tol", r#"{"distributions": [[0.5, 0.45]]}"#);
    let loose = Command::new(env!("CARGO_BIN_EXE_mec"))
        .args(["meet", p.to_str().unwrap()])
        .env("MEC_TOL", "0.1")
        .output()
        .unwrap();
    assert_eq!(loose.status.code(), Some(0));
    let strict = Command::new(env!("CARGO_BIN_EXE_mec"))
        .args(["meet", p.to_str().unwrap(), "--tol", "1e-9"])
        .env("MEC_TOL", "0.1")
        .output()
        .unwrap();
    assert_eq!(strict.status.code(), Some(1));
}
