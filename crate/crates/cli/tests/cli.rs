use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

const SUBCOMMANDS: [&str; 7] = ["sieve", "sigma", "model", "rate", "experiment", "bounds", "report"];

const SMALL_CONFIG: &str = r#"{
  "seed": 11,
  "model": {"kind": "coin", "n": 1, "components": [
    {"form": "1 1 0", "rule": {"type": "quadratic-residue", "a": 5}}]},
  "b-grid": [100, 300],
  "epsilons": [0.25],
  "sieve": {"lo": 1000, "hi": 5000},
  "sigma": {"source": {"type": "enumerated"}, "t-max": 2000},
  "model-run": {"probabilities": [0.1, 0.5, 0.3, 0.9], "samples": 20000, "b": 1000},
  "experiment": {"truncation-delta": 0.5,
                 "set-algebra": {"b": 60, "epsilon": 0.4, "delta": 0.1},
                 "synthetic-exponent": {"epsilon": 0.5, "delta": 1.0, "b-grid": [1000, 10000]}},
  "bounds": {"hardy-ramanujan": {"t-max": 3, "x-max": 5000},
             "radical": {"r": [1, 2], "t": [10, 30]},
             "nair-tenenbaum": {"f": {"type": "exp-omega", "c": 1.0}, "form": "1 1", "b-grid": [50, 200]},
             "truncated-moment": {"form": "1 1", "b": 500, "c1": 2, "c2": 1, "y": 3, "N": 1}}
}"#;

fn ldp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ldp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = ldp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for sub in fs::read_dir(dir).unwrap() {
        let sub = sub.unwrap().path();
        for f in fs::read_dir(&sub).unwrap() {
            let f = f.unwrap().path();
            let key = f.strip_prefix(dir).unwrap().display().to_string();
            files.insert(key, fs::read(&f).unwrap());
        }
    }
    files
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn double_run_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.json");
    fs::write(&cfg, SMALL_CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for sub in SUBCOMMANDS {
        run_ok(&[sub, "--config", cfg, "--out", a.to_str().unwrap(), "--quiet"]);
        run_ok(&[sub, "--config", cfg, "--out", b.to_str().unwrap(), "--quiet", "--threads", "1"]);
    }
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{k} differs between runs");
    }
    for sub in SUBCOMMANDS {
        assert!(a.join(sub).join("summary.json").exists());
        assert!(!tmp.path().join(format!("a/{sub}.partial")).exists());
    }
    // every artifact carries the schema version and the config echo
    for (k, v) in &ta {
        let text = String::from_utf8_lossy(v);
        assert!(text.contains("schema_version"), "{k}");
        assert!(text.contains("\"seed\":11") || text.contains("\"seed\": 11"), "{k}");
    }
}

#[test]
fn seed_flag_changes_only_sampled_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.json");
    fs::write(&cfg, SMALL_CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok(&["model", "--config", cfg, "--out", a.to_str().unwrap(), "-q"]);
    run_ok(&["model", "--config", cfg, "--out", b.to_str().unwrap(), "-q", "--seed", "12"]);
    let ha = fs::read_to_string(a.join("model/histogram.csv")).unwrap();
    let hb = fs::read_to_string(b.join("model/histogram.csv")).unwrap();
    assert_ne!(data_rows(&ha), data_rows(&hb));
    let pa = fs::read_to_string(a.join("model/pmf.csv")).unwrap();
    let pb = fs::read_to_string(b.join("model/pmf.csv")).unwrap();
    assert_eq!(data_rows(&pa), data_rows(&pb));
}

#[test]
fn default_rate_run_has_zero_at_one() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["rate", "--out", tmp.path().to_str().unwrap(), "-q"]);
    let csv = fs::read_to_string(tmp.path().join("rate/rate.csv")).unwrap();
    let row = data_rows(&csv).into_iter().find(|l| l.starts_with("1,")).unwrap();
    let rate: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(rate, 0.0);
    let neg = data_rows(&csv).into_iter().find(|l| l.starts_with("-0.5,")).unwrap();
    assert_eq!(neg.split(',').nth(1).unwrap(), "inf");
}

#[test]
fn two_fair_coins_give_binomial_pmf() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"model-run": {"probabilities": [0.5, 0.5]}}"#).unwrap();
    run_ok(&["model", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "-q"]);
    let csv = fs::read_to_string(tmp.path().join("model/pmf.csv")).unwrap();
    let probs: Vec<f64> = data_rows(&csv)
        .iter()
        .filter(|l| !l.starts_with('>'))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(probs, vec![0.25, 0.5, 0.25]);
}

#[test]
fn experiment_totals_are_monotone_and_config_is_echoed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"model": {"kind": "coin", "n": 1, "components": [
              {"form": "1 1 0", "rule": {"type": "always-nonsplit"}}]},
            "b-grid": [100, 1000], "epsilons": [0.5]}"#,
    )
    .unwrap();
    run_ok(&["experiment", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "-q"]);
    let csv = fs::read_to_string(tmp.path().join("experiment/tail.csv")).unwrap();
    assert!(csv.contains("# config={"));
    assert!(csv.contains("always-nonsplit"));
    let mut totals = BTreeMap::new();
    for row in data_rows(&csv) {
        let f: Vec<&str> = row.split(',').collect();
        totals.insert(f[0].parse::<u64>().unwrap(), f[3].parse::<u64>().unwrap());
    }
    assert_eq!(totals.len(), 2);
    assert!(totals[&100] < totals[&1000]);
}

#[test]
fn exit_codes_separate_config_budget_and_success() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"rate": {"dleta": 2}}"#).unwrap();
    assert_eq!(ldp(&["rate", "--config", bad.to_str().unwrap(), "--out", out]).status.code(), Some(2));
    assert_eq!(ldp(&["rate", "--config", "/nonexistent.json", "--out", out]).status.code(), Some(2));
    let missing_model = tmp.path().join("nomodel.json");
    fs::write(&missing_model, "{}").unwrap();
    assert_eq!(
        ldp(&["experiment", "--config", missing_model.to_str().unwrap(), "--out", out]).status.code(),
        Some(2)
    );
    let big = tmp.path().join("big.json");
    fs::write(&big, r#"{"sieve": {"hi": 100000}, "budget": {"primes": 1000}}"#).unwrap();
    assert_eq!(ldp(&["sieve", "--config", big.to_str().unwrap(), "--out", out]).status.code(), Some(3));
    assert!(!tmp.path().join("sieve").exists());
    assert_eq!(ldp(&["sieve", "--out", out, "-q"]).status.code(), Some(0));
}

#[test]
fn report_merges_what_exists() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    run_ok(&["rate", "--out", out, "-q"]);
    run_ok(&["report", "--out", out, "-q"]);
    let text = fs::read_to_string(tmp.path().join("report/report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["data"]["rate"]["data"]["nonnegative"].as_bool().unwrap());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("report/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["data"]["present"], serde_json::json!(["rate"]));
}
