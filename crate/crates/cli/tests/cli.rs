use std::path::PathBuf;
use std::process::{Command, Output};

fn psitwist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psitwist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("psitwist-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Parses the scan CSV into (c, valid, bound_min, bound_max, bh_flag).
fn scan_rows(csv: &str) -> Vec<(f64, bool, Option<f64>, Option<f64>, bool)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let opt = |s: &str| if s.is_empty() { None } else { Some(s.parse::<f64>().unwrap()) };
            (f[0].parse().unwrap(), f[1] == "true", opt(f[7]), opt(f[8]), f[10] == "true")
        })
        .collect()
}

#[test]
fn verify_s3s3_passes() {
    let out = temp("s3s3.json");
    let o = psitwist(&["verify", "--suite", "s3s3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let names: Vec<&str> = report[0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"christoffel_table"));
    assert!(names.contains(&"nijenhuis_twisted_max"));
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let o = psitwist(&["verify", "--suite", "bogus"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown suite"));
}

#[test]
fn verify_is_byte_identical_across_runs() {
    let a = temp("all-a.json");
    let b = temp("all-b.json");
    for p in [&a, &b] {
        let o = psitwist(&["verify", "--suite", "all", "--seed", "42", "--samples", "10", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn verify_csv_report() {
    let out = temp("r4.csv");
    let o = psitwist(&["verify", "--suite", "r4", "--samples", "5", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("case,check,residual,tolerance,pass\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn certify_x1x2_finds_witness() {
    let o = psitwist(&["certify", "--f", "x1*x2", "--c", "5", "--samples", "10000", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"], "certificate");
    assert_eq!(v["witness"].as_array().unwrap().len(), 7);
    assert!(v["residual"].as_f64().unwrap() > 1e-4);
}

#[test]
fn certify_inconclusive_exits_one() {
    let o = psitwist(&["certify", "--f", "x1*x2", "--c", "5", "--samples", "20", "--tol", "1e6"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"], "inconclusive");
}

#[test]
fn certify_degenerate_reports_witness() {
    let o = psitwist(&["certify", "--f", "x1*x2", "--c", "1"]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("degenerate near ["), "{e}");
}

#[test]
fn certify_parse_error_has_position() {
    let o = psitwist(&["certify", "--f", "x1*", "--c", "5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("column 4"), "{}", stderr(&o));
}

#[test]
fn certify_rejects_zero_samples_and_foreign_flags() {
    assert_eq!(code(&psitwist(&["certify", "--f", "x1", "--c", "3", "--samples", "0"])), 2);
    assert_eq!(code(&psitwist(&["certify", "--f", "x1", "--c", "3", "--suite", "r4"])), 2);
    assert_eq!(code(&psitwist(&["certify", "--f", "x9", "--c", "3"])), 2);
    assert_eq!(code(&psitwist(&["frobnicate"])), 2);
}

#[test]
fn scan_flag_brackets_threshold() {
    let o = psitwist(&["scan", "--f", "x1*x2", "--c-range", "16:20:0.5", "--samples", "500"]);
    assert_eq!(code(&o), 0);
    let rows = scan_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
    let first = rows.iter().position(|r| r.4).unwrap();
    assert!(rows[first..].iter().all(|r| r.4));
    assert_eq!(rows[first - 1].0, 17.5);
    assert_eq!(rows[first].0, 18.0);
}

#[test]
fn scan_single_value_has_closed_form_bounds() {
    let o = psitwist(&["scan", "--f", "x1*x2", "--c-range", "2:2:1", "--samples", "200"]);
    assert_eq!(code(&o), 0);
    let rows = scan_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let (c, valid, lo, hi, _) = rows[0];
    assert_eq!(c, 2.0);
    assert!(valid);
    assert!((lo.unwrap() - 1.0 / 3.5f64.powi(2)).abs() < 1e-15);
    assert!((hi.unwrap() - 1.0 / 0.5f64.powi(2)).abs() < 1e-15);
}

#[test]
fn scan_marks_invalid_rows() {
    let o = psitwist(&["scan", "--c-range", "-2:2:0.5", "--samples", "50"]);
    assert_eq!(code(&o), 0);
    for (c, valid, lo, _, flag) in scan_rows(&stdout(&o)) {
        assert_eq!(valid, c.abs() > 1.5, "c = {c}");
        if !valid {
            assert!(lo.is_none() && !flag);
        }
    }
}

#[test]
fn scan_empty_range_is_usage_error() {
    assert_eq!(code(&psitwist(&["scan", "--c-range", "3:2:1"])), 2);
    assert_eq!(code(&psitwist(&["scan", "--c-range", "2:3:0"])), 2);
    assert_eq!(code(&psitwist(&["scan", "--c-range", "a:b"])), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let cfg = temp("cfg.json");
    std::fs::write(&cfg, r#"{"f": "x1*x2", "c_range": "2:2:1", "samples": 100, "format": "json"}"#).unwrap();
    let o = psitwist(&["scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["samples"], 100);
    let o = psitwist(&["scan", "--config", cfg.to_str().unwrap(), "--samples", "30", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(scan_rows(&stdout(&o)).len(), 1);
    assert!(stdout(&o).contains(",30,"));

    std::fs::write(&cfg, r#"{"sead": 1}"#).unwrap();
    assert_eq!(code(&psitwist(&["scan", "--config", cfg.to_str().unwrap()])), 2);
}
