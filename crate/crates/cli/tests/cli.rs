use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use pivcs::document::{self, Provenance};
use pivcs::susy::build_system;
use pivcs::verify::{self, Suite};
use pivcs::SystemSpec;

fn pivcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pivcs")).args(args).output().expect("run pivcs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Builds the k = 1 system used by most tests.
fn k1_system(dir: &Path) -> PathBuf {
    let path = dir.join("k1.json");
    let out = pivcs(&["build", "--k", "1", "--eps-top", "-1", "--nu", "0.5", "--out", path_str(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

#[test]
fn build_rejects_invalid_specs() {
    let out = pivcs(&["build", "--k", "1", "--eps-top", "0.7", "--nu", "0"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("eps_top"), "{}", stderr(&out));

    let out = pivcs(&["build", "--k", "1", "--eps-top", "-1", "--nu", "1.5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nu"), "{}", stderr(&out));
}

#[test]
fn build_k4_has_four_new_levels() {
    let out = pivcs(&["build", "--k", "4", "--eps-top", "-2.8", "--nu", "-0.9"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["schema_version"], Value::from(document::SCHEMA_VERSION));
    assert_eq!(doc["provenance"]["spec"]["k"], Value::from(4));
    let spectrum: Vec<f64> = serde_json::from_value(doc["spectrum"].clone()).unwrap();
    let below: Vec<f64> = spectrum.iter().copied().filter(|e| *e < 0.5).collect();
    assert_eq!(below.len(), 4);
    for (e, want) in below.iter().zip([-5.8, -4.8, -3.8, -2.8]) {
        assert!((e - want).abs() < 1e-12);
    }
}

#[test]
fn round_trip_matches_in_memory_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let path = k1_system(dir.path());
    let out = pivcs(&["verify", path_str(&path), "--suite", "orthonormality", "--suite", "pha"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let spec = SystemSpec::new(1, -1.0, 0.5);
    let system = build_system(&spec, pivcs::susy::DEFAULT_N_MAX).unwrap();
    let stored = std::fs::read_to_string(&path).unwrap();
    let fresh = serde_json::to_value(document::SystemDocument::from_system(&system)).unwrap();
    assert_eq!(stored, document::canonical_json(&fresh));

    let report = verify::run(&system, &[Suite::Orthonormality, Suite::Pha]);
    let mut provenance = Provenance::new(&spec, system.n_max);
    for (name, tol) in verify::TOLERANCES {
        provenance = provenance.with_tolerance(name, *tol);
    }
    let expected = document::canonical_json(&document::report_document(&report, &provenance).unwrap());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn painleve_default_and_alternative_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let path = k1_system(dir.path());
    let csv = dir.path().join("g.csv");

    let out = pivcs(&["painleve", path_str(&path), "--csv", path_str(&csv)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let default = json(&out);
    // ε₁ = ε₀ = −1, ε₂ = 1/2, ε₃ = ε_top + 1 = 0.
    let (e2, e3) = (0.5, 0.0);
    assert_eq!(default["b"].as_f64().unwrap(), -2.0 * (e2 - e3) * (e2 - e3));
    assert!(default["passed"].as_bool().unwrap());

    let (header, rows) = document::parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(header, ["x", "g", "residual"]);
    assert_eq!(rows.len(), 1601);

    let out = pivcs(&["painleve", path_str(&path), "--assign", "e1=half"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let alt = json(&out);
    let pair = |v: &Value| (v["a"].as_f64().unwrap(), v["b"].as_f64().unwrap());
    assert_ne!(pair(&default), pair(&alt));
    // ε₁ = 1/2, ε₂ = 0, ε₃ = −1.
    assert_eq!(pair(&alt), (0.0 - 1.0 - 1.0 - 1.0, -2.0 * 1.0));

    let out = pivcs(&["painleve", path_str(&path), "--assign", "e1=eps0,e2=top+1,e3=half"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["b"], default["b"]);
}

#[test]
fn painleve_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = k1_system(dir.path());
    let out = pivcs(&["painleve", path_str(&path), "--perturb-a", "1"]);
    assert_eq!(code(&out), 1);
    assert!(!json(&out)["passed"].as_bool().unwrap());
}

#[test]
fn painleve_masked_majority_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = k1_system(dir.path());
    // A band wider than the grid masks everything around the node at ε₁ = 1/2.
    let out = pivcs(&["painleve", path_str(&path), "--assign", "e1=half", "--band", "1000"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn cs_lin_iso_mean_energy_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let density = dir.path().join("d.csv");
    let out = pivcs(&["cs", "--family", "lin-iso", "--z", "1.2@-2.78", "--density", path_str(&density)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert!((doc["mean_energy"].as_f64().unwrap() - (1.2f64 * 1.2 + 0.5)).abs() < 1e-9);
    assert!((doc["density_norm"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let (header, rows) = document::parse_csv(&std::fs::read_to_string(&density).unwrap()).unwrap();
    assert_eq!(header, ["x", "density", "psi_re", "psi_im"]);
    let h = rows[1][0] - rows[0][0];
    let trapezoid: f64 = rows.windows(2).map(|w| 0.5 * h * (w[0][1] + w[1][1])).sum();
    assert!((trapezoid - 1.0).abs() < 1e-6);
}

#[test]
fn cs_lin_new_mean_energy() {
    let out = pivcs(&["cs", "--family", "lin-new", "--z", "1.5@-4.93"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!((json(&out)["mean_energy"].as_f64().unwrap() + 3.64945).abs() < 1e-4);
}

#[test]
fn cs_accepts_rectangular_labels() {
    let (re, im) = (1.2 * (-2.78f64).cos(), 1.2 * (-2.78f64).sin());
    let out = pivcs(&["cs", "--family", "lin-iso", "--z", &format!("{re},{im}")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!((json(&out)["mean_energy"].as_f64().unwrap() - 1.94).abs() < 1e-12);
}

#[test]
fn cs_docs_iso_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("w.json");
    let out = pivcs(&["cs", "--family", "docs-iso", "--z", "1@0.3", "--witness", path_str(&witness)]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("diverges") && err.contains(path_str(&witness)), "{err}");
    let w = document::read_json(&witness).unwrap();
    assert_eq!(w["kind"], "divergence_witness");
    let sums: Vec<f64> = serde_json::from_value(w["log10_partial_sums"].clone()).unwrap();
    assert!(sums.windows(2).all(|p| p[1] >= p[0]));
    assert!(*sums.last().unwrap() > 6.0);
}

#[test]
fn cs_family_misuse_exits_2() {
    assert_eq!(code(&pivcs(&["cs", "--family", "aocs-new", "--z", "1@0"])), 2);
    assert_eq!(code(&pivcs(&["cs", "--family", "nonsense", "--z", "1@0"])), 2);
    assert_eq!(code(&pivcs(&["cs", "--family", "lin-iso", "--z", "one"])), 2);
}

#[test]
fn verify_rejects_corrupt_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = k1_system(dir.path());
    let mut doc = document::read_json(&path).unwrap();
    doc["potential"][100] = Value::from(123.0);
    let corrupt = dir.path().join("corrupt.json");
    std::fs::write(&corrupt, document::canonical_json(&doc)).unwrap();
    assert_eq!(code(&pivcs(&["verify", path_str(&corrupt)])), 2);

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"schema_version\": 1").unwrap();
    assert_eq!(code(&pivcs(&["verify", path_str(&garbage)])), 2);
    assert_eq!(code(&pivcs(&["verify", path_str(&dir.path().join("missing.json"))])), 2);
}

#[test]
fn verify_suite_filter() {
    let dir = tempfile::tempdir().unwrap();
    let path = k1_system(dir.path());
    let out = pivcs(&["verify", path_str(&path), "--suite", "measures"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let checks = json(&out)["checks"].as_array().unwrap().clone();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["suite"] == "measures"));
    assert_eq!(code(&pivcs(&["verify", path_str(&path), "--suite", "bogus"])), 2);
}

#[test]
fn measure_and_density_tables() {
    let out = pivcs(&["measure", "--measure", "f3", "--count", "5", "--k", "1", "--eps-top", "-1", "--nu", "0.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = document::parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(header, ["r", "value"]);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[1] > 0.0));
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));

    let dir = tempfile::tempdir().unwrap();
    let path = k1_system(dir.path());
    let out = pivcs(&["density", "--system", path_str(&path), "--family", "docs-new", "--z", "0.8@1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (_, rows) = document::parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1601);
}

#[test]
fn kernel_grid_peaks_at_reference_label() {
    let out = pivcs(&["kernel", "--family", "lin-iso", "--zp", "1,0", "--extent", "2", "--count", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = document::parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(header, ["re", "im", "modulus"]);
    let peak = rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert_eq!((peak[0], peak[1]), (1.0, 0.0));
    assert!((peak[2] - 1.0).abs() < 1e-12);
}
