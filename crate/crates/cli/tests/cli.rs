use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnetotunnel"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("ER_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// Cheap invocations of every subcommand, keyed by output directory.
const CASES: &[(&str, &[&str])] = &[
    ("resonance", &["resonance", "--tol", "1e-10"]),
    ("action", &["action", "--steps", "5"]),
    ("profile", &["profile", "--samples", "51"]),
    ("regions", &["regions", "--samples", "19"]),
    ("field", &["field", "--nx", "41", "--ny", "21"]),
    ("bounce", &["bounce", "--samples", "21"]),
    ("effpot", &["effpot", "--samples", "201", "--sweep", "8"]),
    ("oracle", &["oracle", "--nu", "2", "--nx", "128", "--ny", "64"]),
    ("scan", &["scan", "--nu", "2", "--alphas", "0.8,1.0", "--spacing", "0.06"]),
];

#[test]
fn headers_match_golden_file() {
    let tmp = tempfile::tempdir().unwrap();
    for (dir, args) in CASES {
        let out = run(&tmp.path().join(dir), args);
        assert!(out.status.success(), "{dir}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/headers.txt")).unwrap();
    for line in golden.lines() {
        let (file, header) = line.split_once(": ").unwrap();
        let text = fs::read_to_string(tmp.path().join(file)).unwrap();
        assert_eq!(text.lines().next().unwrap(), header, "{file}");
        assert!(!text.contains('\r'));
    }
    let keys = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/manifest_keys.txt")).unwrap();
    let text = fs::read_to_string(tmp.path().join("action/manifest.json")).unwrap();
    let order: Vec<&str> = keys.lines().collect();
    let mut at = 0;
    for key in &order {
        let pos = text.find(&format!("\"{key}\"")).unwrap_or_else(|| panic!("{key} missing"));
        assert!(pos >= at, "{key} out of order");
        at = pos;
    }
}

#[test]
fn resonance_line_on_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["resonance", "--tol", "1e-10"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().find(|l| l.starts_with("alpha_R =")).unwrap();
    let v: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert_eq!(format!("{v:.2}"), "1.66");
}

#[test]
fn domain_error_exits_2_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["action", "--alpha", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "error");
    assert_eq!(m["exit_code"], 2);
    assert_eq!(m["schema_version"], 1);
}

#[test]
fn non_convergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["oracle", "--nu", "2", "--nx", "128", "--ny", "64", "--tolerance", "1e-15", "--max-outer", "1"];
    let out = run(tmp.path(), &args);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(manifest(tmp.path())["exit_code"], 3);
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("setup.ini");
    fs::write(&cfg, "# natural units\nenergy = 8\nmass = 1\ncharge = 1\na = 1\nH = 4\nu0 = 400\nN = 4\n").unwrap();
    let out_dir = tmp.path().join("run");
    let out = run(&out_dir, &["--config", cfg.to_str().unwrap(), "--H", "2", "profile", "--samples", "11"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert_eq!(m["config"]["physical"]["H"], 2.0);
    // ω_c = 2, ν = 2|E|/ω_c = 8, L = sqrt(16)/2 = 2, α = 1/2
    assert_eq!(m["results"]["nu"], 8.0);
    assert_eq!(m["results"]["alpha"], 0.5);
    assert_eq!(m["results"]["setup"]["dimensionless"]["wall_energy_ratio"], 50.0);

    fs::write(&cfg, "energy = 8\nfield = 3\n").unwrap();
    let out = run(&out_dir, &["--config", cfg.to_str().unwrap(), "profile"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn json_format_mirrors_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["--format", "json", "profile", "--samples", "11"]);
    assert!(out.status.success());
    let rows: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("profile.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0]["x"], 0.0);
    assert_eq!(rows[10]["region"], 3);
}

#[test]
fn writes_stay_in_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("only");
    let out = run(&out_dir, &["regions", "--samples", "5"]);
    assert!(out.status.success());
    let mut top: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    top.sort();
    assert_eq!(top, vec!["only"]);
    let mut files: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["manifest.json", "regions.csv", "timing.json"]);
}
