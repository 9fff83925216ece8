use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn pmk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmk")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_trace_that_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let inst = fixture("worked_example.json");
    let out = pmk(&[
        "run",
        "--scheme=dynrel-known:1",
        &format!("--instance={}", inst.display()),
        "--ties=lowest",
        &format!("--trace={}", trace.display()),
        "--check",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("makespan: 101/100"));
    assert!(text.contains("ratio: 101/100"));
    assert!(text.contains("assignment: 1 2 3"));

    let golden = std::fs::read_to_string(fixture("worked_example_dynrel_known.csv")).unwrap();
    assert_eq!(std::fs::read_to_string(&trace).unwrap(), golden);

    let v = pmk(&["verify", trace.to_str().unwrap(), inst.to_str().unwrap(), "--known-lambda", "1"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains("OK-S-nonempty=3 VIOLATION=0"));
}

#[test]
fn greedy_trace_fails_verification() {
    let out = pmk(&[
        "verify",
        fixture("worked_example_greedy.csv").to_str().unwrap(),
        fixture("worked_example.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("VIOLATION=3"));
}

#[test]
fn opt_prints_fraction_and_witness() {
    let out = pmk(&["opt", fixture("worked_example.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "opt: 1/1\nwitness: 2 1 3\n");
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let inst = fixture("worked_example.json");
    assert_eq!(pmk(&["run", "--scheme", "nope", "--instance", inst.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(pmk(&["opt", "/nonexistent/instance.json"]).status.code(), Some(2));
    assert_eq!(pmk(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"model\":\"related\",\"speeds\":[\"1\"],\"jobs\":[\"-1\"]}").unwrap();
    assert_eq!(pmk(&["opt", bad.to_str().unwrap()]).status.code(), Some(2));

    // A trace for a different instance is a mismatch, not a violation.
    let other = dir.path().join("other.json");
    std::fs::write(&other, "{\"model\":\"related\",\"speeds\":[\"1\",\"1\"],\"jobs\":[\"1\"]}").unwrap();
    let trace = fixture("worked_example_greedy.csv");
    assert_eq!(pmk(&["verify", trace.to_str().unwrap(), other.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn det_adversary_certifies_its_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("adv.json");
    let out = pmk(&["adversary", "det", "--m", "3", "--phases", "3", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("ratio: 5/2"), "{text}");
    assert!(text.contains("witness_makespan: 18/5"));
    assert!(std::fs::read_to_string(&out_path).unwrap().contains("\"unrelated\""));
}

#[test]
fn scale_and_flatten_emit_instances() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fixture("worked_example.json");
    let scaled = dir.path().join("scaled.json");
    let out = pmk(&["adversary", "scale", "--instance", inst.to_str().unwrap(), "--price-bound", "1/10", "--out", scaled.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("factor: 128/1"));
    assert_eq!(pmk(&["opt", scaled.to_str().unwrap()]).status.code(), Some(0));

    let prices = dir.path().join("p.json");
    std::fs::write(&prices, "[\"0\",\"1/2\",\"1\"]").unwrap();
    let flat = dir.path().join("flat.json");
    let out = pmk(&["adversary", "flatten", "--prices", prices.to_str().unwrap(), "--instance", inst.to_str().unwrap(), "--out", flat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("prefix_jobs: 3"));
    let run = pmk(&["run", "--scheme", &format!("static:{}", prices.display()), "--instance", flat.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn bench_table1_is_csv() {
    let out = pmk(&["bench", "table1", "--trials", "3", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("model,scheme,workload,trials,max_ratio,approx,worst_seed"));
    assert!(lines.all(|l| l.split(',').count() == 7));
}
