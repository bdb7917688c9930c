use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const GOLDEN: &str = r#"{"kind": "rotation_coding", "quotients": [1], "depth": 40, "betas": [0.3819660112501051]}"#;
const PM_HALF: &str = r#"{"window": 0, "entries": [["a", 0.5, 0.0], ["b", -0.5, 0.0]]}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    out: PathBuf,
    _dir: TempDir,
}

impl Run {
    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&self.read(name)).unwrap()
    }
}

fn opuc(cmd: &str, config: &str, extra: &[&str]) -> Run {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_opuc"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
        out,
        _dir: dir,
    }
}

fn config(subshift: &str, map: Option<&str>, rest: &str) -> String {
    let mut s = format!(r#"{{"subshift": {subshift}"#);
    if let Some(m) = map {
        s += &format!(r#", "map": {m}"#);
    }
    if !rest.is_empty() {
        s += ", ";
        s += rest;
    }
    s + "}"
}

/// Data rows of a CSV output, skipping `#` provenance lines and the header.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn constant_map(a: f64) -> String {
    format!(r#"{{"window": 0, "entries": [], "default": [{a}, 0.0]}}"#)
}

fn assert_exists(dir: &Path, names: &[&str]) {
    for n in names {
        assert!(dir.join(n).is_file(), "missing {n}");
    }
}

#[test]
fn bosh_periodic_and_golden_support_b() {
    let r = opuc("bosh", &config(r#"{"kind": "periodic", "word": "ab"}"#, None, r#""sample_length": 10000"#), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_exists(&r.out, &["bosh.json", "bosh.csv"]);
    assert_eq!(r.json("bosh.json")["result"]["verdict"], "supports_b");

    let r = opuc("bosh", &config(GOLDEN, None, r#""sample_length": 100000"#), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let eta = r.json("bosh.json")["result"]["eta"].clone();
    assert!(eta.as_array().unwrap().iter().all(|v| v.as_f64().unwrap() >= 0.2));
    assert!(r.stdout.starts_with("bosh: "));
}

#[test]
fn bosh_large_quotients_dip() {
    let spec = r#"{"kind": "rotation_coding", "quotients": [1, 50], "depth": 10, "betas": [0.3]}"#;
    let r = opuc(
        "bosh",
        &config(spec, None, r#""sample_length": 1000000, "lengths": [50, 51, 52, 53, 54, 2703, 2704, 2705]"#),
        &[],
    );
    assert_ne!(r.code, 1, "{}", r.stderr);
    let eta = r.json("bosh.json")["result"]["eta"].clone();
    assert!(eta.as_array().unwrap().iter().any(|v| v.as_f64().unwrap() < 0.05));
}

#[test]
fn invalid_inputs_exit_one() {
    let bad_beta = r#"{"kind": "rotation_coding", "quotients": [1], "depth": 40, "betas": [1.5]}"#;
    let r = opuc("bosh", &config(bad_beta, None, ""), &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("subshift.betas[0]"), "{}", r.stderr);

    let r = opuc("lyapunov", "{\"subshift\": ", &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("malformed config"), "{}", r.stderr);

    let r = opuc("bosh", &config(GOLDEN, None, r#""gird": 4"#), &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("gird"), "{}", r.stderr);

    let r = opuc("lyapunov", &config(GOLDEN, None, ""), &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("`map`"), "{}", r.stderr);

    let r = opuc("classify-beta", &config(r#"{"kind": "periodic", "word": "ab"}"#, None, ""), &[]);
    assert_eq!(r.code, 1);

    let o = Command::new(env!("CARGO_BIN_EXE_opuc")).arg("bosh").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lyapunov_constant_and_free() {
    let r = opuc(
        "lyapunov",
        &config(r#"{"kind": "periodic", "word": "a"}"#, Some(&constant_map(0.5)), ""),
        &["--grid", "16", "--steps", "100000"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&r.read("lyapunov.csv"));
    assert_eq!(rows.len(), 16);
    let at_one = rows
        .iter()
        .find(|row| row[0].parse::<f64>().unwrap().abs() < 1e-12)
        .expect("θ = 0 on the grid");
    let gamma: f64 = at_one[1].parse().unwrap();
    assert!((gamma - 3f64.sqrt().ln()).abs() <= 1e-4, "{gamma}");

    let r = opuc(
        "lyapunov",
        &config(GOLDEN, Some(r#"{"window": 0, "entries": [["a", 0.0, 0.0], ["b", 0.0, 0.0]]}"#), ""),
        &["--grid", "8", "--steps", "5000"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    for row in csv_rows(&r.read("lyapunov.csv")) {
        assert!(row[1].parse::<f64>().unwrap().abs() <= 1e-12);
        assert!(row[2].parse::<f64>().unwrap().abs() <= 1e-12);
    }
}

#[test]
fn spectrum_constant_band() {
    let r = opuc(
        "spectrum",
        &config(
            r#"{"kind": "periodic", "word": "a"}"#,
            Some(&constant_map(0.5)),
            r#""approximant_order": 1, "band_grid": 8192"#,
        ),
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_exists(
        &r.out,
        &["spectrum.json", "spectrum.csv", "spectrum_plot.dat", "bands.json", "bands.csv", "agreement.json"],
    );
    let report = r.json("spectrum.json");
    let measure = report["result"]["measure_estimate"].as_f64().unwrap();
    assert!((measure - 4.0 * PI / 3.0).abs() <= 0.1, "{measure}");
    assert_eq!(csv_rows(&r.read("spectrum.csv")).len(), 1024);
    let bands = r.json("bands.json")["result"]["bands"].clone();
    let (lo, hi) = (bands[0][0].as_f64().unwrap(), bands[0][1].as_f64().unwrap());
    assert!((lo - PI / 3.0).abs() <= 1e-8 && (hi - 5.0 * PI / 3.0).abs() <= 1e-8);
    assert!(r.json("agreement.json")["result"]["agreement"].as_f64().unwrap() >= 0.95);
}

#[test]
fn spectrum_fibonacci_with_bands() {
    let r = opuc(
        "spectrum",
        &config(GOLDEN, Some(PM_HALF), r#""approximant_order": 8"#),
        &["--steps", "1000"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let total = r.json("bands.json")["result"]["total_measure"].as_f64().unwrap();
    assert!((total - 1.271076087272442).abs() <= 1e-9, "{total}");
    assert!(r.json("agreement.json")["result"]["agreement"].as_f64().unwrap() >= 0.9);
}

#[test]
fn classify_beta_finds_orbit_witness() {
    let r = opuc("classify-beta", &config(GOLDEN, None, ""), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let result = r.json("classify_beta.json")["result"].clone();
    assert_eq!(result["orbit_witness"], serde_json::json!([-1, 1]));
}

#[test]
fn cmv_eig_outputs() {
    let r = opuc(
        "cmv-eig",
        &config(GOLDEN, Some(PM_HALF), r#""cmv_size": 64, "cmv_variant": "extended_truncated""#),
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&r.read("eigenphases.csv"));
    assert_eq!(rows.len(), 64);
    for row in &rows {
        let modulus: f64 = row[1].parse().unwrap();
        assert!(modulus <= 1.0 + 1e-10);
    }
    let triplets = csv_rows(&r.read("cmv_matrix.csv"));
    assert!(triplets.len() <= 5 * 64);
}

#[test]
fn overrides_beat_config() {
    let r = opuc(
        "lyapunov",
        &config(GOLDEN, Some(PM_HALF), r#""grid": 32, "steps": 2000"#),
        &["--grid", "4"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(csv_rows(&r.read("lyapunov.csv")).len(), 4);
    let header = r.read("lyapunov.csv");
    assert!(header.starts_with("# opuc lyapunov\n# config: "));
    assert!(header.contains("\"grid\":4"));
}
