use std::path::Path;
use std::process::{Command, Output};

fn georep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_georep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

const TIGHT_PAIR: &str = r#"{
  "lambda": 1.0,
  "initial_server": 1,
  "rates": [1.0, 2.0],
  "requests": [{"t": 0.51, "s": 2}, {"t": 1.01, "s": 1}]
}
"#;

fn tight_pair(dir: &Path) -> String {
    let path = dir.join("tight_pair.json");
    std::fs::write(&path, TIGHT_PAIR).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_prints_total() {
    let dir = tempfile::tempdir().unwrap();
    let path = tight_pair(dir.path());
    let out = georep(&["simulate", "--policy", "alg1", "--instance", &path]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().any(|l| l == "total 4"), "{}", stdout(&out));
}

#[test]
fn full_oracle_prints_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let path = tight_pair(dir.path());
    let out = georep(&["opt", "--oracle", "full", "--instance", &path]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().any(|l| l == "total 2.01"), "{}", stdout(&out));
}

#[test]
fn random_verification_passes() {
    let out = georep(&["verify", "--random", "--seed", "1", "--count", "500"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("checked 500 instances: 0 failed"));
}

#[test]
fn usage_and_input_errors_exit_two() {
    assert_eq!(georep(&["simulate", "--policy", "nope", "--instance", "x.json"]).status.code(), Some(2));
    assert_eq!(georep(&["opt", "--oracle", "approx", "--instance", "x.json"]).status.code(), Some(2));
    assert_eq!(georep(&[]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"lambda\": 1.0,\n  \"initial_server\": 1,\n  \"rates\": [2.0, 1.0]\n}\n").unwrap();
    let out = georep(&["simulate", "--policy", "alg1", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.json:4"), "{err}");
}

#[test]
fn oracle_budget_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let path = tight_pair(dir.path());
    let out = georep(&["opt", "--oracle", "full", "--budget", "3", "--instance", &path]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generated_instances_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t1.json");
    let out = georep(&["gen", "tight1", "--mu2", "2", "--epsilon", "0.01", "--out", file.to_str().unwrap()]);
    assert!(out.status.success());
    let sim = georep(&["simulate", "--policy", "alg1", "--instance", file.to_str().unwrap()]);
    assert!(stdout(&sim).lines().any(|l| l == "total 4"));

    for which in ["fig1", "fig2", "tight2", "tight3", "random", "adversary"] {
        let out = georep(&["gen", which]);
        assert!(out.status.success(), "{which}");
        assert!(stdout(&out).contains("\"rates\""), "{which}");
    }
    let a = georep(&["gen", "random", "--seed", "9", "--n", "3", "--m", "7"]);
    let b = georep(&["gen", "random", "--seed", "9", "--n", "3", "--m", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn allocation_csv_and_verify_single_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = tight_pair(dir.path());
    let out = georep(&["allocate", "--instance", &path]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("j,type,q,t_prime,allocated_cost,surcharge\n"));
    assert_eq!(text.lines().count(), 3);

    let out = georep(&["verify", "--instance", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("opt full 2.01"));
}

#[test]
fn adversary_table_reports_every_policy() {
    let out = georep(&["adversary", "--mu", "5", "--lambda", "1", "--epsilon", "1e-4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let ratio: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(ratio > 2.0, "{row}");
    }
}

#[test]
fn sweep_is_deterministic_and_reads_traces() {
    let args = ["sweep", "--rates", "1,2,5", "--servers", "3", "--lambda-min", "2", "--lambda-max", "4",
        "--lambda-step", "2", "--total", "150", "--mean-gap", "1", "--seed", "3"];
    let a = georep(&args);
    let b = georep(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    assert!(text.lines().nth(1).unwrap().starts_with("custom,2,alg1,"));

    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    std::fs::write(&trace, "timestamp,op,object_id\n0,GET,A\n3,GET,B\n4,GET,A\n4,GET,A\n9,PUT,A\n12,GET,A\n").unwrap();
    let out = georep(&["sweep", "--rates", "set1", "--lambda-min", "5", "--lambda-max", "5",
        "--trace", trace.to_str().unwrap(), "--object-id", "A", "--oracle", "full", "--budget", "100000000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",4,1")), "{text}");

    let out = georep(&["sweep", "--rates", "set1", "--lambda-min", "5", "--lambda-max", "5",
        "--trace", trace.to_str().unwrap(), "--object-id", "A", "--oracle", "full", "--budget", "10"]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().skip(1).all(|l| l.contains(",NA,NA,")));
}
