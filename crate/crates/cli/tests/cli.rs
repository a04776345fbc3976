use std::path::Path;
use std::process::{Command, Output};

fn noisyknn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisyknn"))
        .args(args)
        .env_remove("NOISYKNN_SEED")
        .output()
        .expect("spawn noisyknn")
}

fn ok(args: &[&str]) -> Output {
    let out = noisyknn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn generate(dir: &Path, name: &str, n: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    let (n, seed) = (n.to_string(), seed.to_string());
    ok(&["generate", "--n", &n, "--p0", "0.1", "--p1", "0.3", "--keep-clean", "--seed", &seed, "-o", p(&path)]);
    path
}

#[test]
fn generate_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(generate(dir.path(), "a.csv", 500, 9)).unwrap();
    let b = std::fs::read(generate(dir.path(), "b.csv", 500, 9)).unwrap();
    let c = std::fs::read(generate(dir.path(), "c.csv", 500, 10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(String::from_utf8(a).unwrap().starts_with("x1,label,clean_label\n"));
}

#[test]
fn seed_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let flag = generate(dir.path(), "flag.csv", 100, 42);
    let env = dir.path().join("env.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_noisyknn"))
        .args(["generate", "--n", "100", "--p0", "0.1", "--p1", "0.3", "--keep-clean", "-o", p(&env)])
        .env("NOISYKNN_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 42"));
    assert_eq!(std::fs::read(flag).unwrap(), std::fs::read(env).unwrap());
}

#[test]
fn zero_noise_keeps_labels() {
    let out = ok(&["generate", "--n", "300", "--keep-clean", "--seed", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], cols[2], "{line}");
    }
}

#[test]
fn corrupt_flips_at_the_requested_rates() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.csv");
    ok(&["generate", "--n", "20000", "--seed", "2", "-o", p(&clean)]);
    let out = ok(&["corrupt", "-i", p(&clean), "--p0", "0.2", "--p1", "0.05", "--keep-clean", "--seed", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let (mut n, mut flips) = ([0usize; 2], [0usize; 2]);
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let (y, clean): (usize, usize) = (cols[1].parse().unwrap(), cols[2].parse().unwrap());
        n[clean] += 1;
        flips[clean] += (y != clean) as usize;
    }
    let rate0 = flips[0] as f64 / n[0] as f64;
    let rate1 = flips[1] as f64 / n[1] as f64;
    assert!((rate0 - 0.2).abs() < 0.02, "{rate0}");
    assert!((rate1 - 0.05).abs() < 0.02, "{rate1}");
}

#[test]
fn fit_predict_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let train = generate(dir.path(), "train.csv", 2000, 5);
    let query = generate(dir.path(), "query.csv", 50, 6);
    let summary = dir.path().join("summary.json");
    let preds = dir.path().join("preds.csv");

    ok(&["fit-predict", "--train", p(&train), "--query", p(&query), "--k", "100", "--known-rates", "0.1", "0.3",
        "--summary", p(&summary), "-o", p(&preds)]);
    let s = json(&std::fs::read(&summary).unwrap());
    assert_eq!(s["threshold"].as_f64().unwrap(), 0.4);
    assert_eq!(s["mode"], "known_rates");

    let text = std::fs::read_to_string(&preds).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x1,label,regression");
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let f: f64 = cols[2].parse().unwrap();
        assert_eq!(cols[1], if f >= 0.4 { "1" } else { "0" });
        rows += 1;
    }
    assert_eq!(rows, 50);

    ok(&["fit-predict", "--train", p(&train), "--query", p(&query), "--k", "100", "--standard",
        "--summary", p(&summary), "-o", p(&preds)]);
    assert_eq!(json(&std::fs::read(&summary).unwrap())["threshold"].as_f64().unwrap(), 0.5);

    ok(&["fit-predict", "--train", p(&train), "--query", p(&query), "--k-policy", "optimal",
        "--summary", p(&summary), "-o", p(&preds)]);
    let s = json(&std::fs::read(&summary).unwrap());
    assert_eq!(s["mode"], "robust");
    let (p0, p1) = (s["p0_hat"].as_f64().unwrap(), s["p1_hat"].as_f64().unwrap());
    assert_eq!(s["threshold"].as_f64().unwrap(), 0.5 + (p0 - p1) / 2.0);
}

#[test]
fn estimate_noise_recovers_rates_roughly() {
    let dir = tempfile::tempdir().unwrap();
    let train = generate(dir.path(), "train.csv", 20000, 8);
    let out = ok(&["estimate-noise", "-i", p(&train), "--k-policy", "optimal"]);
    let s = json(&out.stdout);
    assert!((s["p0_hat"].as_f64().unwrap() - 0.1).abs() < 0.08);
    assert!((s["p1_hat"].as_f64().unwrap() - 0.3).abs() < 0.08);
}

#[test]
fn evaluate_reports_exact_and_test_errors() {
    let dir = tempfile::tempdir().unwrap();
    let train = generate(dir.path(), "train.csv", 5000, 12);
    let test = generate(dir.path(), "test.csv", 2000, 13);
    let out = ok(&["evaluate", "--train", p(&train), "--test", p(&test), "--k", "300"]);
    let e = json(&out.stdout);
    let robust = e["excess_risk"]["robust"].as_f64().unwrap();
    let standard = e["excess_risk"]["standard"].as_f64().unwrap();
    assert!(robust >= 0.0 && robust < standard, "{robust} vs {standard}");
    assert!(e["clean_test_error"]["robust"].as_f64().is_some());
}

#[test]
fn bounds_table_and_json() {
    let out = ok(&["bounds", "--n", "50000"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("optimal k"));
    assert!(text.contains("1306"));
    let out = ok(&["bounds", "--n", "50000", "--k", "1000", "--json"]);
    let b = json(&out.stdout);
    assert_eq!(b["params"]["k"], 1000);
    assert_eq!(b["optimal_k"], 1306);
    assert!(b["pointwise_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_and_input_errors_have_distinct_codes() {
    assert_eq!(noisyknn(&["generate"]).status.code(), Some(2));
    assert_eq!(noisyknn(&["bounds"]).status.code(), Some(2));
    assert_eq!(noisyknn(&["generate", "--n", "10", "--p0", "0.7", "--p1", "0.5"]).status.code(), Some(2));
    assert_eq!(noisyknn(&["estimate-noise", "-i", "/nonexistent.csv", "--k", "3"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x1,label\n0.5,7\n").unwrap();
    assert_eq!(noisyknn(&["estimate-noise", "-i", p(&bad), "--k", "1"]).status.code(), Some(3));
    let train = generate(dir.path(), "train.csv", 100, 1);
    assert_eq!(noisyknn(&["estimate-noise", "-i", p(&train), "--k", "500"]).status.code(), Some(2));
}

#[test]
fn cv_k_returns_a_grid_value() {
    let dir = tempfile::tempdir().unwrap();
    let train = generate(dir.path(), "train.csv", 1000, 4);
    let out = ok(&["cv-k", "-i", p(&train), "--grid", "5,25,125", "--folds", "4", "--seed", "3"]);
    let r = json(&out.stdout);
    assert!([5, 25, 125].contains(&r["k"].as_u64().unwrap()));
    assert_eq!(r["errors"].as_array().unwrap().len(), 3);
}

#[test]
fn experiment_check_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("ball.json");
    std::fs::write(&config, r#"{"n_grid": [2000], "k_policy": {"policy": "fixed", "k": 100}}"#).unwrap();
    let out = dir.path().join("ball.csv");
    let run = noisyknn(&["experiment", "ball", "--config", p(&config), "--replicates", "50", "--seed", "1",
        "-o", p(&out), "--check"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.exists());
    let summary = json(&std::fs::read(dir.path().join("ball.summary.json")).unwrap());
    assert_eq!(summary["master_seed"], 1);

    let strict = dir.path().join("strict.json");
    std::fs::write(
        &strict,
        r#"{"n_grid": [200, 400, 800, 1600], "k_policy": {"policy": "fixed", "k": 50}, "slope_window": [-9.0, -8.0]}"#,
    )
    .unwrap();
    let run = noisyknn(&["experiment", "rate", "--config", p(&strict), "--replicates", "2", "--check"]);
    assert_eq!(run.status.code(), Some(1), "{}", String::from_utf8_lossy(&run.stderr));
    let run = noisyknn(&["experiment", "rate", "--config", p(&strict), "--replicates", "2"]);
    assert_eq!(run.status.code(), Some(0));
}

#[test]
fn experiment_output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("max.json");
    std::fs::write(&config, r#"{"n_grid": [1000], "k_policy": {"policy": "fixed", "k": 60}, "replicates": 6}"#)
        .unwrap();
    let mut files = Vec::new();
    for w in ["1", "3"] {
        let out = dir.path().join(format!("max{w}.csv"));
        ok(&["experiment", "max", "--config", p(&config), "--workers", w, "-o", p(&out)]);
        files.push((std::fs::read(&out).unwrap(), std::fs::read(dir.path().join(format!("max{w}.summary.json"))).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}
