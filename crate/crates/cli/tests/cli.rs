use std::path::Path;
use std::process::{Command, Output};

fn cocktail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocktail"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_builtin_converges_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("x1.json");
    let out = cocktail(&["solve", "--space", "x1", "--n", "100", "--algorithm", "cocktail", "--out", path(&json)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("CONVERGED"), "{text}");

    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["n"], 100);
    assert_eq!(doc["m"], 4);
    assert!(doc["certificate"].as_f64().unwrap() <= 1.0 + 1e-6);
    let trace = std::fs::read_to_string(dir.path().join("x1.trace.csv")).unwrap();
    assert!(trace.lines().nth(1).unwrap().starts_with("iteration,logdet"));
}

#[test]
fn ragged_csv_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3,4\n5\n").unwrap();
    let spec = format!("csv:{}", path(&bad));
    let out = cocktail(&["solve", "--space", &spec]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3"), "{err}");
}

#[test]
fn iteration_cap_exits_two_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("ma.json");
    let out = cocktail(&[
        "solve", "--space", "x1", "--n", "200", "--algorithm", "ma", "--max-iter", "100", "--out", path(&json),
    ]);
    assert_eq!(code(&out), 2);
    let trace = std::fs::read_to_string(dir.path().join("ma.trace.csv")).unwrap();
    // comment, header, starting design and 100 iterations
    assert_eq!(trace.lines().count(), 103);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["status"], "ITERATION_CAP");
}

#[test]
fn certify_round_trip_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("x2.json");
    assert_eq!(code(&cocktail(&["solve", "--space", "x2", "--n", "100", "--out", path(&json)])), 0);
    let ok = cocktail(&["certify", "--space", "x2", "--n", "100", "--weights", path(&json)]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));

    let uniform = dir.path().join("uniform.json");
    let entries: Vec<String> = (0..100).map(|i| format!(r#"{{"index": {i}, "weight": 0.01}}"#)).collect();
    std::fs::write(&uniform, format!(r#"{{"n": 100, "support": [{}]}}"#, entries.join(","))).unwrap();
    let bad = cocktail(&["certify", "--space", "x2", "--n", "100", "--weights", path(&uniform)]);
    assert_eq!(code(&bad), 3);
    assert!(stdout(&bad).contains("optimal      no"));

    let mismatch = cocktail(&["certify", "--space", "x2", "--n", "50", "--weights", path(&json)]);
    assert_eq!(code(&mismatch), 1);
}

#[test]
fn certify_diagonal_toy() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("toy.csv");
    std::fs::write(&space, "1,0\n0,1\n0.5,0.5\n").unwrap();
    let weights = dir.path().join("w.json");
    std::fs::write(&weights, r#"{"n": 3, "support": [{"index": 0, "weight": 0.5}, {"index": 1, "weight": 0.5}]}"#).unwrap();
    let spec = format!("csv:{}", path(&space));
    let out = cocktail(&["certify", "--space", &spec, "--weights", path(&weights)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn bench_table_orders_algorithms_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_cocktail"))
        .args(["bench", "--space", "x1:20", "--replications", "1", "--csv", path(&csv)])
        .env("COCKTAIL_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    for row in ["ma", "vem", "cocktail"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(row)), "{text}");
    }
    let read = |p: &Path| {
        let mut iters = std::collections::HashMap::new();
        let body = std::fs::read_to_string(p).unwrap();
        let mut lines = body.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            iters.insert(cells[col("algorithm")].to_owned(), cells[col("median_iterations")].parse::<usize>().unwrap());
        }
        iters
    };
    let first = read(&csv);
    assert!(first["cocktail"] < first["vem"] && first["vem"] < first["ma"], "{first:?}");

    let again = dir.path().join("u.csv");
    let out = cocktail(&["bench", "--space", "x1:20", "--replications", "1", "--csv", path(&again)]);
    assert_eq!(code(&out), 0);
    assert_eq!(read(&again), first);
}

#[test]
fn bench_rejects_empty_algorithm_list() {
    let out = cocktail(&["bench", "--space", "x1:20", "--algorithms", ""]);
    assert_eq!(code(&out), 1);
}

#[test]
fn gen_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x4.csv");
    assert_eq!(code(&cocktail(&["gen", "--space", "x4", "--n", "20", "--out", path(&csv)])), 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 400);
    let spec = format!("csv:{}", path(&csv));
    let out = cocktail(&["solve", "--space", &spec, "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_to_stdout_with_header() {
    let out = cocktail(&["gen", "--space", "x2", "--n", "5", "--header"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[5].split(',').count(), 5);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&cocktail(&["gen", "--space", "x9", "--n", "5"])), 1);
    assert_eq!(code(&cocktail(&["solve", "--space", "x1"])), 1);
    assert_eq!(code(&cocktail(&["solve", "--space", "x1", "--n", "2"])), 1);
    assert_eq!(code(&cocktail(&["frobnicate"])), 1);
    assert_eq!(code(&cocktail(&["--help"])), 0);
}
