//! End-to-end runs of the `cpt` binary.

use std::path::Path;
use std::process::{Command, Output};

use cpt_core::bath::SusceptivityDocument;
use cpt_core::stationary::{admissible_interval, family_state, StationaryResult};

fn cpt(args: &[&str], env_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cpt"));
    cmd.args(args).env_remove("CPT_OUTPUT_DIR");
    if let Some(dir) = env_dir {
        cmd.env("CPT_OUTPUT_DIR", dir);
    }
    cmd.output().expect("spawn cpt")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn unknown_key_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"bath": {"occupation": {"kind": "planck", "beta": 1.0}, "tempp": 3}}"#,
    );
    let o = cpt(&["--config", &cfg, "sus"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tempp"), "{}", stderr(&o));
}

#[test]
fn negative_occupation_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"bath": {"occupation": {"kind": "flat", "n": -0.5}}}"#,
    );
    let o = cpt(&["--config", &cfg, "sus"], None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn beats_in_vacuum_is_a_regime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"bath": {"occupation": {"kind": "fock"}}}"#);
    let o = cpt(&["--config", &cfg, "beats"], None);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn bad_flag_is_a_usage_error() {
    let o = cpt(&["family", "--bogus"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = cpt(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn family_table_spans_the_admissible_interval() {
    let o = cpt(&["family", "--r", "1", "--points", "7"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(rows.len(), 7);
    let (lo, hi) = admissible_interval(1.0).unwrap();
    let s = column(&header, "s");
    let first: f64 = rows[0][s].parse().unwrap();
    let last: f64 = rows[6][s].parse().unwrap();
    assert_eq!(first, lo);
    assert_eq!(last, hi);
    let rho_g = column(&header, "rho_g");
    let expected = family_state(1.0, hi).unwrap().entry(0, 0).re;
    let got: f64 = rows[6][rho_g].parse().unwrap();
    assert!((got - expected).abs() < 1e-15);
    for row in &rows {
        assert_eq!(row[column(&header, "admissible")], "true");
    }
}

#[test]
fn occupation_sweep_lowers_the_ground_floor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"bath": {"occupation": {"kind": "flat", "n": 1.0}},
            "sweep": {"parameter": "n_bar", "grid": [0, 1, 10, 100]}}"#,
    );
    let o = cpt(&["--config", &cfg, "sweep"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(rows.len(), 4);
    let k = column(&header, "min_ground_population");
    let values: Vec<f64> = rows.iter().map(|r| r[k].parse().unwrap()).collect();
    assert!((values[0] - 0.5).abs() < 1e-15);
    for w in values.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(values.iter().all(|&v| v > 0.25));
    assert!(values[3] - 0.25 < 2e-3);
}

#[test]
fn evolve_writes_the_trajectory_columns() {
    let o = cpt(&["evolve", "--horizon", "1", "--samples", "11", "--exact"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(
        header,
        [
            "t", "rho11", "rho22", "rho33", "re_rho12", "im_rho12", "re_rho13", "im_rho13",
            "re_rho23", "im_rho23", "s", "C", "A", "min_eigenvalue"
        ]
    );
    assert_eq!(rows.len(), 11);
    for row in &rows {
        let tr: f64 = (1..=3).map(|i| row[i].parse::<f64>().unwrap()).sum();
        assert!((tr - 1.0).abs() < 1e-12);
    }
}

#[test]
fn json_artifacts_parse_back() {
    let o = cpt(&["sus"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: SusceptivityDocument = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc.schema_version, 1);
    doc.to_set().unwrap();

    let o = cpt(&["stationary"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let result: StationaryResult = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(result.kernel_dimension, 2);
}

#[test]
fn output_directory_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        for args in [&["sus"][..], &["evolve", "--samples", "21"], &["family"]] {
            let o = cpt(args, Some(dir));
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            assert!(stdout(&o).starts_with("wrote "));
        }
    }
    for name in ["susceptivities.json", "trajectory.csv", "family.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn config_output_directory_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(r#"{{"output": {{"dir": {:?}, "format": "json"}}}}"#, out.to_str().unwrap()),
    );
    let o = cpt(&["--config", &cfg, "family", "--points", "3"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("family.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn selftest_passes() {
    let o = cpt(&["selftest", "--seed", "11"], None);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("13 passed, 0 failed"));
}
