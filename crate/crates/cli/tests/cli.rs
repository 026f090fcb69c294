use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn iap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iap"))
        .args(args)
        .env_remove("IAP_TOL")
        .output()
        .expect("iap runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_exact_isometry_is_clean() {
    let out = iap(&["check", path(&fixture("exact_rotation.json")), "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert!(r["eps_measured"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["clean"], true);
}

#[test]
fn check_shear_sample_against_declared_eps() {
    let out = iap(&["check", path(&fixture("ar_m4.json")), "--eps", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn check_flags_a_declared_eps_that_is_too_small() {
    let out = iap(&["check", path(&fixture("halfspace_noisy.json")), "--eps", "0.01"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn corrupted_file_reports_position() {
    let out = iap(&["check", path(&fixture("corrupted.json"))]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn empty_sample_is_an_input_error() {
    assert_eq!(code(&iap(&["fit", path(&fixture("empty.json"))])), 2);
}

#[test]
fn missing_file_is_an_input_error() {
    assert_eq!(code(&iap(&["check", "/nonexistent/sample.json"])), 2);
}

#[test]
fn fit_noisy_half_space_passes() {
    let out = iap(&["fit", path(&fixture("halfspace_noisy.json"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cert = stdout_json(&out);
    assert_eq!(cert["passed"], true);
    assert!(cert["residual"].as_f64().unwrap() <= cert["bound"].as_f64().unwrap());
    assert_eq!(cert["Q"].as_array().unwrap().len(), 2);
    assert_eq!(cert["provenance"]["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn fit_exact_rotation_has_tiny_residual() {
    let out = iap(&["fit", path(&fixture("exact_rotation.json"))]);
    assert_eq!(code(&out), 0);
    assert!(stdout_json(&out)["residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn bad_map_fails_under_claimed_mu() {
    let out = iap(&["fit", path(&fixture("badmap_m100.json")), "--mu", "1", "--merge-angle", "0.002"]);
    assert_eq!(code(&out), 1);
    let cert = stdout_json(&out);
    assert_eq!(cert["passed"], false);
    assert!(cert["residual"].as_f64().unwrap() >= 5.0);
}

#[test]
fn bad_map_with_default_estimator_sees_a_degenerate_cone() {
    let out = iap(&["fit", path(&fixture("badmap_m100.json"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn non_spanning_sample_exits_3() {
    let out = iap(&["fit", path(&fixture("ray2d.json"))]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu estimate zero"));
}

fn mu_of(name: &str) -> f64 {
    let out = iap(&["mu", path(&fixture(name)), "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    stdout_json(&out)["mu"].as_f64().unwrap()
}

#[test]
fn mu_of_fixtures() {
    assert!((mu_of("cone_pi6.json") - 0.5).abs() <= 0.05);
    assert!((mu_of("plane.json") - 1.0).abs() <= 0.05);
    assert!((mu_of("ray.json") - 1.0).abs() <= 1e-12);
    assert!(mu_of("ray2d.json") < 1e-9);
}

#[test]
fn mu_with_tau() {
    let out = iap(&["mu", path(&fixture("cone_pi6.json")), "--tau", "--json"]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    let (mu, from_tau) = (r["mu"].as_f64().unwrap(), r["mu_from_tau"].as_f64().unwrap());
    assert!((mu - from_tau).abs() < 0.1, "mu {mu} vs sqrt(1-tau^2) {from_tau}");
}

#[test]
fn generated_files_are_valid_and_record_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, Vec<&str>); 3] = [
        ("cone.json", vec!["gen", "cone", "--alpha", "0.5", "--count", "200", "--seed", "11"]),
        ("ar.json", vec!["gen", "ar", "--M", "4", "--count", "200", "--seed", "12"]),
        ("badmap.json", vec!["gen", "badmap", "--M", "25", "--count", "100", "--seed", "13"]),
    ];
    for (name, args) in cases {
        let file = dir.path().join(name);
        let mut args = args.clone();
        args.extend(["-o", path(&file)]);
        let out = iap(&args);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
        assert_eq!(v["version"], "iap-1");
        let dim = v["dim"].as_u64().unwrap() as usize;
        let pairs = v["pairs"].as_array().unwrap();
        assert!(!pairs.is_empty());
        for p in pairs {
            assert_eq!(p[0].as_array().unwrap().len(), dim);
            assert_eq!(p[1].as_array().unwrap().len(), dim);
        }
        assert!(v["meta"]["seed"].is_u64(), "{name}");
        // The generated file is readable by the other subcommands.
        assert_ne!(code(&iap(&["check", path(&file)])), 2, "{name}");
    }
}

#[test]
fn generation_is_deterministic() {
    let a = iap(&["gen", "halfspace", "--count", "50", "--seed", "5"]);
    let b = iap(&["gen", "halfspace", "--count", "50", "--seed", "5"]);
    let c = iap(&["gen", "halfspace", "--count", "50", "--seed", "6"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn fit_is_deterministic_and_certificate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (one, two) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let input = fixture("halfspace_noisy.json");
    for f in [&one, &two] {
        assert_eq!(code(&iap(&["fit", path(&input), "--seed", "3", "-o", path(f)])), 0);
    }
    let a = std::fs::read(&one).unwrap();
    assert_eq!(a, std::fs::read(&two).unwrap());
    let cert = iap_core::io::CertificateFile::read(&one).unwrap();
    assert_eq!(cert.to_json().into_bytes(), a);
}

#[test]
fn csv_input_matches_json_input() {
    let dir = tempfile::tempdir().unwrap();
    let sample = iap_core::io::SampleFile::read(&fixture("exact_rotation.json")).unwrap();
    let mut csv = String::from("# exported pairs\n");
    let dim = sample.dim;
    let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).chain((0..dim).map(|i| format!("y{i}"))).collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    for (x, y) in &sample.pairs {
        let row: Vec<String> = x.iter().chain(y).map(|c| format!("{c:?}")).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let file = dir.path().join("pairs.csv");
    std::fs::write(&file, csv).unwrap();
    let from_csv = iap(&["check", path(&file), "--json"]);
    let from_json = iap(&["check", path(&fixture("exact_rotation.json")), "--json"]);
    assert_eq!(code(&from_csv), 0);
    assert_eq!(stdout_json(&from_csv)["eps_measured"], stdout_json(&from_json)["eps_measured"]);
}

#[test]
fn tolerance_override_from_environment() {
    let bad = Command::new(env!("CARGO_BIN_EXE_iap"))
        .args(["check", path(&fixture("exact_rotation.json"))])
        .env("IAP_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
    let ok = Command::new(env!("CARGO_BIN_EXE_iap"))
        .args(["check", path(&fixture("exact_rotation.json"))])
        .env("IAP_TOL", "1e-6")
        .output()
        .unwrap();
    assert_eq!(code(&ok), 0);
}

#[test]
fn verify_single_check() {
    let out = iap(&["verify", "3.5", "--M", "4", "--trials", "5000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let out = iap(&["verify", "wedge", "--M", "4", "--dim", "2", "--trials", "2000", "--json"]);
    let rows = stdout_json(&out);
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert_eq!(rows[0]["violations"], 0);
}

#[test]
fn verify_all_passes() {
    let out = iap(&["verify", "all", "--trials", "2000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn verify_rejects_bad_parameters() {
    assert_eq!(code(&iap(&["verify", "3.3", "--M", "0.5"])), 2);
    assert_eq!(code(&iap(&["verify", "no-such-check"])), 2);
}
