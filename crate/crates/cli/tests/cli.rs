use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value as Json;
use tempfile::{NamedTempFile, TempDir};

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Workspace {
        let dir = tempfile::tempdir().unwrap();
        for (name, src) in scm::fixtures::all() {
            std::fs::write(dir.path().join(format!("{name}.scm")), src).unwrap();
        }
        std::fs::write(dir.path().join("hiring.paths"), scm::fixtures::HIRING_PATHS).unwrap();
        Workspace { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

fn scm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scm")).args(args).env_remove("SCM_BUDGET").output().unwrap()
}

fn json(args: &[&str]) -> (i32, Json) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = scm(&all);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1, "exactly one JSON document: {text}");
    (out.status.code().unwrap(), serde_json::from_str(&text).unwrap())
}

fn temp_with(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn path_of(f: &NamedTempFile) -> &str {
    f.path().to_str().unwrap()
}

#[test]
fn universal_query_on_the_loan_model() {
    let w = Workspace::new();
    let (code, doc) = json(&["query", "--model", &w.path("loan.scm"), "[X2<-45001](Y=1)", "--universal"]);
    assert_eq!(code, 0);
    assert_eq!(doc["status"], "ok");
    assert_eq!(doc["holds"], true);
    let (code, doc) = json(&["query", "--model", &w.path("loan.scm"), "[X4<-1](Y=1)", "--universal"]);
    assert_eq!(code, 0);
    assert_eq!(doc["status"], "refuted");
    assert!(doc["counterexample"].is_object());
}

#[test]
fn solve_the_unsuccessful_applicant() {
    let w = Workspace::new();
    let (code, doc) = json(&["solve", "--model", &w.path("loan.scm"), "--context", "U1=75000,U3=2500"]);
    assert_eq!(code, 0);
    assert_eq!(doc["solution"]["Y"], 0);
    assert_eq!(doc["solution"]["X2"], 25000);
}

#[test]
fn fire_is_not_an_actual_cause() {
    let w = Workspace::new();
    let fire = w.path("fire.scm");
    let args = ["cause", "actual", "--model", &fire, "--context", "U_F=1", "--x", "F=1", "--xprime", "F=0", "--target", "B=0"];
    let (code, doc) = json(&args);
    assert_eq!(code, 0);
    assert_eq!(doc["status"], "refuted");
    assert_eq!(doc["blocked"][0]["replacing_network"], serde_json::json!(["B"]));
    let args = ["cause", "actual", "--model", &fire, "--context", "U_F=0", "--x", "F=0", "--xprime", "F=1", "--target", "B=0"];
    let (_, doc) = json(&args);
    assert_eq!(doc["status"], "ok");
}

#[test]
fn optimal_and_direct_causes() {
    let w = Workspace::new();
    let sc = w.path("shortcut.scm");
    let base = ["--model", &sc, "--context", "U_X=1,U_A=1", "--x", "X=1", "--target", "Y=1"];
    let (_, doc) = json(&[&["cause", "direct"][..], &base].concat());
    assert_eq!(doc["status"], "ok");
    let (_, doc) = json(&[&["cause", "optimal"][..], &base].concat());
    assert_eq!(doc["status"], "refuted");
}

#[test]
fn explanations_for_the_applicants() {
    let w = Workspace::new();
    let loan = w.path("loan.scm");
    let (_, doc) = json(&["explain", "sufficient", "--model", &loan, "--context", "U1=250000,U3=50000", "--target", "Y=1", "--good"]);
    let list = doc["explanations"].as_array().unwrap();
    assert!(list.iter().any(|e| e["antecedent"] == serde_json::json!({"X1": 250000}) && e["network"] == serde_json::json!(["Y"])));
    let (_, doc) = json(&["explain", "counterfactual", "--model", &loan, "--context", "U1=75000,U3=2500", "--target", "Y=0"]);
    let want = serde_json::json!({
        "cause": {"X1": 75000}, "contrast": {"X1": 85000}, "witness": {"X3": 2500}, "network": ["X2", "Y"]
    });
    assert!(doc["explanations"].as_array().unwrap().iter().any(|e| ["cause", "contrast", "witness", "network"].iter().all(|k| e[k] == want[k])));
    let args = ["explain", "dependence", "--model", &loan, "--context", "U1=250000,U3=50000", "--x", "X1=250000", "--xprime", "X1=0", "--target", "Y=1"];
    let (_, doc) = json(&args);
    assert_eq!(doc["status"], "refuted");
}

#[test]
fn hiring_fairness_from_a_path_file() {
    let w = Workspace::new();
    let args = ["fairness", "--model", &w.path("hiring.scm"), "--protected", "A", "--unfair-paths", &w.path("hiring.paths"), "--target", "Y", "--all"];
    let (code, doc) = json(&args);
    assert_eq!(code, 0);
    assert_eq!(doc["fair"], false);
    assert_eq!(doc["standard"]["fair"], true);
    let certs = doc["certificates"].as_array().unwrap();
    assert!(certs.iter().any(|c| c["a"] == 1 && c["a_prime"] == 0 && c["y"] == 0 && c["network_paths"] == serde_json::json!(["A -> B -> Y"])));
    let none = temp_with("# nothing is unfair\n");
    let args = ["fairness", "--model", &w.path("hiring.scm"), "--protected", "A", "--unfair-paths", path_of(&none), "--target", "Y"];
    let (_, doc) = json(&args);
    assert_eq!(doc["fair"], true);
}

#[test]
fn bad_path_file_is_a_parse_error() {
    let w = Workspace::new();
    let bad = temp_with("A -> Q -> Y\n");
    let args = ["fairness", "--model", &w.path("hiring.scm"), "--protected", "A", "--unfair-paths", path_of(&bad), "--target", "Y"];
    let (code, doc) = json(&args);
    assert_eq!(code, 3);
    assert_eq!(doc["diagnostics"][0]["line"], 1);
}

#[test]
fn exit_codes() {
    let w = Workspace::new();
    let syntax = temp_with("model m\nexo U: {0, 1}\nvar X: {0, 1} = U +\n");
    let (code, doc) = json(&["validate", "--model", path_of(&syntax)]);
    assert_eq!((code, doc["status"].as_str().unwrap()), (3, "parse-error"));
    assert_eq!(doc["diagnostics"][0]["line"], 3);
    let invalid = temp_with("model m\nexo U: {0, 1}\nvar X: {0, 1} = Q\n");
    let (code, doc) = json(&["validate", "--model", path_of(&invalid)]);
    assert_eq!((code, doc["status"].as_str().unwrap()), (4, "validation-error"));
    let (code, _) = json(&["query", "--model", &w.path("loan.scm"), "Y=1"]);
    assert_eq!(code, 2);
    let (code, _) = json(&["solve", "--model", &w.path("loan.scm"), "--context", "U1=75000"]);
    assert_eq!(code, 2);
    let args = ["explain", "sufficient", "--model", &w.path("loan.scm"), "--context", "U1=75000,U3=2500", "--target", "Y=0", "--budget", "5"];
    let (code, doc) = json(&args);
    assert_eq!((code, doc["status"].as_str().unwrap()), (5, "budget-exceeded"));
    assert_eq!(scm(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn budget_flag_overrides_environment() {
    let w = Workspace::new();
    let loan = w.path("loan.scm");
    let args = ["explain", "sufficient", "--model", &loan, "--context", "U1=75000,U3=2500", "--target", "Y=0", "--json"];
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_scm"));
        c.args(args).args(extra);
        match env {
            Some(v) => c.env("SCM_BUDGET", v),
            None => c.env_remove("SCM_BUDGET"),
        };
        c.output().unwrap().status.code().unwrap()
    };
    assert_eq!(run(Some("5"), &[]), 5);
    assert_eq!(run(Some("5"), &["--budget", "10000000"]), 0);
    assert_eq!(run(None, &["--budget", "5"]), 5);
}

#[test]
fn json_output_is_byte_for_byte_deterministic() {
    let w = Workspace::new();
    let loan = w.path("loan.scm");
    let cases: Vec<Vec<&str>> = vec![
        vec!["explain", "counterfactual", "--model", &loan, "--context", "U1=75000,U3=2500", "--target", "Y=0", "--json"],
        vec!["validate", "--model", &loan, "--json"],
        vec!["verify-theorems", "--theorem", "direct-then-actual", "--trials", "30", "--seed", "5", "--json"],
    ];
    for args in cases {
        assert_eq!(scm(&args).stdout, scm(&args).stdout, "{args:?}");
    }
}

#[test]
fn human_output_mirrors_json() {
    let w = Workspace::new();
    let out = scm(&["solve", "--model", &w.path("loan.scm"), "--context", "U1=75000,U3=2500"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("status: ok\n"));
    assert!(text.contains("Y=0"));
    let err = scm(&["validate", "--model", "/definitely/missing.scm"]);
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8(err.stderr).unwrap().contains("cannot read"));
}

#[test]
fn verify_theorems_reports() {
    let (code, doc) = json(&["verify-theorems", "--theorem", "roots-fix-solution", "--trials", "50"]);
    assert_eq!(code, 0);
    assert_eq!(doc["status"], "ok");
    assert_eq!(doc["rng"], "ChaCha8");
    assert_eq!(doc["trials"], 50);
    let (_, doc) = json(&["verify-theorems", "--negative-control", "--trials", "100"]);
    assert_eq!(doc["reports"].as_array().unwrap().len(), 3);
    assert_eq!(doc["status"], "ok");
    let (code, _) = json(&["verify-theorems", "--theorem", "no-such-result"]);
    assert_eq!(code, 2);
}

/// Every command shown in the README runs under the default budget in < 1 s.
#[test]
fn documented_examples_are_fast() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let readme = std::fs::read_to_string(root.join("README.md")).unwrap();
    let mut ran = 0;
    for line in readme.lines() {
        let Some(cmd) = line.trim().strip_prefix("$ scm ") else { continue };
        let args = shell_words(cmd);
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_scm")).args(&args).current_dir(&root).env_remove("SCM_BUDGET").output().unwrap();
        let elapsed = start.elapsed();
        assert!(out.status.code().unwrap() == 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(elapsed < Duration::from_secs(1), "{cmd} took {elapsed:?}");
        ran += 1;
    }
    assert!(ran >= 5, "README lists {ran} examples");
}

/// Splits on spaces, keeping double-quoted runs together.
fn shell_words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for ch in s.chars() {
        match ch {
            '"' => quoted = !quoted,
            ' ' if !quoted => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(ch),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
