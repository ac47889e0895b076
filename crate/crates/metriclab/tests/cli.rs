use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use metriclab::{emit_report, run_experiment_with, Cache, ExperimentConfig, Table};
use serde_json::Value;

fn metriclab(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metriclab"))
        .args(args)
        .env("METRICLAB_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_shows_every_experiment_with_anchor() {
    let tmp = tempfile::tempdir().unwrap();
    let o = metriclab(tmp.path(), &["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    for (line, entry) in lines.iter().zip(metriclab::list_experiments()) {
        assert!(line.starts_with(entry.name));
        assert!(line.contains(&format!("\"{}\"", entry.anchor)), "{line}");
    }
    let o = metriclab(tmp.path(), &["list", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 9);
    assert!(arr.iter().all(|e| e["anchor"].as_str().is_some_and(|a| !a.is_empty())));
    assert_eq!(arr[3]["name"], "chain-annulus");
}

#[test]
fn config_errors_exit_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("range.json", r#"{"spec":"annulus:1.5"}"#, "spec"),
        ("key.json", r#"{"experiment":"lu-scan","foo":3}"#, "foo"),
        ("json.json", r#"{"experiment":"#, "malformed"),
        ("strip.json", r#"{"boundary_strip":0}"#, "boundary_strip"),
        ("tol.json", r#"{"tolerances":{"reference":-1}}"#, "reference"),
    ];
    for (name, body, needle) in cases {
        let cfg = write_config(tmp.path(), name, body);
        let o = metriclab(tmp.path(), &["run", "lu-scan", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let cfg = write_config(tmp.path(), "other.json", r#"{"experiment":"rigidity-gap"}"#);
    let o = metriclab(tmp.path(), &["run", "lu-scan", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let o = metriclab(tmp.path(), &["run", "no-such-thing", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let o = metriclab(tmp.path(), &["run", "lu-scan", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_and_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "inv.json",
        r#"{"experiment":"invariance-suite","grid":{"count":3},"fan":{"count":4}}"#,
    );
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    let o = metriclab(tmp.path(), &["run", "invariance-suite", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json1 = fs::read(out.join("report.json")).unwrap();
    let csv1 = fs::read(out.join("samples.csv")).unwrap();
    let o = metriclab(tmp.path(), &["run", "invariance-suite", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json1, fs::read(out.join("report.json")).unwrap());
    assert_eq!(csv1, fs::read(out.join("samples.csv")).unwrap());

    let report: Value = serde_json::from_slice(&json1).unwrap();
    assert_eq!(report["tool"], "metriclab");
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["config"]["grid"]["count"], 3);
    assert_eq!(report["config"]["degree_cap"], 14);
    let rows = report["samples"]["rows"].as_array().unwrap().len();
    let csv = String::from_utf8(csv1).unwrap();
    assert_eq!(csv.lines().count(), rows + 1);
    assert!(csv.starts_with("check,spec,point,direction,defect,error\n"));
    let first = csv.lines().nth(1).unwrap();
    let defect = first.split(',').nth(4).unwrap();
    let mantissa = defect.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.replace('.', "").len(), 17, "{defect}");
    for v in report["verdicts"].as_array().unwrap() {
        assert!(v["assertion"].as_str().is_some());
        assert!(v["tolerance"].as_f64().is_some());
    }
}

#[test]
fn overrides_seed_and_degree_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "rep.json", r#"{"experiment":"rep-isometry","grid":{"count":4}}"#);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = metriclab(tmp.path(), &["run", "rep-isometry", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = metriclab(
        tmp.path(),
        &["run", "rep-isometry", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "99", "--degree-cap", "16"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rb: Value = serde_json::from_slice(&fs::read(b.join("report.json")).unwrap()).unwrap();
    assert_eq!(rb["config"]["grid"]["seed"], 99);
    assert_eq!(rb["config"]["fan"]["seed"], 99);
    assert_eq!(rb["config"]["degree_cap"], 16);
    assert_ne!(fs::read(a.join("samples.csv")).unwrap(), fs::read(b.join("samples.csv")).unwrap());
}

#[test]
fn failing_assertions_are_enumerated() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "lu.json",
        r#"{"experiment":"lu-scan","degree_cap":6,"grid":{"count":2},"fan":{"count":4}}"#,
    );
    let out = tmp.path().join("out");
    let o = metriclab(tmp.path(), &["run", "lu-scan", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("failed assertions: reference-value"), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["verdicts"].as_array().unwrap().iter().any(|v| v["status"] == "fail"));
}

#[test]
fn all_rows_failing_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "lu.json",
        r#"{"experiment":"lu-scan","spec":"ellipsoid:2","method":"exact","degree_cap":8,"grid":{"count":2},"fan":{"count":2}}"#,
    );
    let out = tmp.path().join("out");
    let o = metriclab(tmp.path(), &["run", "lu-scan", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("samples.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.contains("not supported")));
}

#[test]
fn cache_is_written_reused_and_cleared() {
    let tmp = tempfile::tempdir().unwrap();
    let cache_dir = tmp.path().join("cache");
    let cfg = write_config(tmp.path(), "rep.json", r#"{"experiment":"rep-isometry","grid":{"count":2}}"#);
    let out = tmp.path().join("out");
    for _ in 0..2 {
        let o = metriclab(&cache_dir, &["run", "rep-isometry", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let files: Vec<_> = fs::read_dir(&cache_dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let doc: Value = serde_json::from_slice(&fs::read(&files[0]).unwrap()).unwrap();
    assert_eq!(doc["spec"], "ball:2");
    assert_eq!(doc["degree_cap"], 14);
    let e = &doc["entries"][0];
    assert!(e["alpha"].is_array() && e["coeff"].is_f64() && e["ln_coeff"].is_f64());
    let o = metriclab(&cache_dir, &["cache", "clear"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("removed 1"));
    assert_eq!(fs::read_dir(&cache_dir).unwrap().count(), 0);
}

#[test]
fn cached_series_gives_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(r#"{"experiment":"ball-curvature","grid":{"count":3}}"#, None).unwrap();
    let fresh = run_experiment_with(&cfg, &Cache::disabled()).unwrap();
    let cache = Cache::at(tmp.path());
    let first = run_experiment_with(&cfg, &cache).unwrap();
    let second = run_experiment_with(&cfg, &cache).unwrap();
    let j = |r: &metriclab::Report| serde_json::to_string(r).unwrap();
    assert_eq!(j(&fresh), j(&first));
    assert_eq!(j(&first), j(&second));
}

#[test]
fn empty_sample_set_writes_header_only_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(r#"{"experiment":"rep-isometry","grid":{"count":1}}"#, None).unwrap();
    let mut report = run_experiment_with(&cfg, &Cache::disabled()).unwrap();
    report.samples = Table::new(vec!["z_re".into(), "z_im".into()]);
    let (json, csv) = emit_report(&report, tmp.path()).unwrap();
    assert_eq!(fs::read_to_string(csv).unwrap(), "z_re,z_im,error\n");
    let v: Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["samples"]["rows"].as_array().unwrap().len(), 0);
}
