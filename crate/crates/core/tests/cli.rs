use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jcm_entropy::ensemble::load_betas;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jcm-entropy"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn calibrate_gibbs_rows_are_identity() {
    let o = run(&["calibrate", "--q", "1", "--grid", "0.5:10:20"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 20);
    for r in rows {
        assert!((r[1] - r[2]).abs() <= 1e-12 * r[1]);
    }
}

#[test]
fn calibrate_deformed_temperature_exceeds_auxiliary() {
    let o = run(&["calibrate", "--q", "1.6", "--grid", "0.5:10:50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("q,T_star,T\n"));
    assert!(csv_rows(&text).iter().all(|r| r[2] >= r[1]));
}

#[test]
fn calibrate_by_physical_beta_lists_beta_star() {
    let o = run(&["calibrate", "--q", "1.2,1.4,1.6", "--beta", "2.3978952727983707"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let expected = [0.102_773, 0.100_935, 0.094_662];
    for (r, want) in rows.iter().zip(expected) {
        assert!((r[3] / want - 1.0).abs() < 5e-3);
    }
}

#[test]
fn usage_errors_exit_with_code_2() {
    assert_eq!(run(&["calibrate", "--grid", "1:2"]).status.code(), Some(2));
    assert_eq!(run(&["timeseries", "--q", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["timeseries", "--nonsense"]).status.code(), Some(2));
    let o = run(&["timeseries", "--q", "1.5", "--beta", "2", "--beta-star", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exactly one"));
}

#[test]
fn domain_errors_exit_with_code_3() {
    assert_eq!(run(&["timeseries", "--beta", "1", "--epsilon", "1.5"]).status.code(), Some(3));
    assert_eq!(run(&["weights", "--q", "2.5", "--beta-star", "1"]).status.code(), Some(3));
}

#[test]
fn zero_coupling_gives_zero_columns() {
    let o = run(&["timeseries", "--beta", "2", "--lambda", "0", "--T", "5", "--samples", "51"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0 && r[3] == 0.0));
}

#[test]
fn sidecar_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let o = bin()
        .args(["timeseries", "--q", "1.4", "--beta", "2.3978952727983707", "--epsilon", "0.3"])
        .args(["--T", "10", "--samples", "300", "--out"])
        .arg(&first)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = dir.path().join("a.csv.meta.json");
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&meta).unwrap()).unwrap();
    assert!(sidecar["derived"]["beta_star"].as_f64().unwrap() > 0.0);
    assert!(sidecar["metadata"]["tail_mass"].as_f64().is_some());
    assert!(sidecar["metadata"]["n_max"].as_u64().is_some());
    assert_eq!(sidecar["config"]["tail_tol"].as_f64(), Some(1e-8));

    let o = bin().arg("timeseries").arg("--config").arg(&meta).arg("--out").arg(&second).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(
        std::fs::read(&meta).unwrap(),
        std::fs::read(dir.path().join("b.csv.meta.json")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"beta": 2.0, "lambda": 0.0, "T": 2.0, "samples": 11}"#).unwrap();
    let o = bin().arg("timeseries").arg("--config").arg(&cfg).output().unwrap();
    assert!(csv_rows(&stdout(&o)).iter().all(|r| r[1] == 0.0));
    let o = bin()
        .arg("timeseries")
        .arg("--config")
        .arg(&cfg)
        .args(["--lambda", "2"])
        .output()
        .unwrap();
    assert!(csv_rows(&stdout(&o)).iter().skip(1).any(|r| r[1] != 0.0));
}

#[test]
fn json_format_carries_data_and_metadata() {
    let o = run(&["weights", "--q", "1.5", "--beta-star", "2", "--format", "json", "--max-photons", "50"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = doc["data"]["p_n"].as_array().unwrap();
    assert_eq!(p.len(), 51);
    assert_eq!(doc["metadata"]["tail_limited"], serde_json::json!(true));
    let total: f64 = p.iter().map(|v| v.as_f64().unwrap()).sum::<f64>() + doc["metadata"]["tail_mass"].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn bloch_sweep_rows_and_ground_point() {
    let o = run(&["bloch-sweep", "--beta", "2.4", "--grid", "1x1", "--samples", "400"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    // A single point sits at r = 1, θ = π: the ground state.
    assert_eq!((rows[0][0], rows[0][1], rows[0][2]), (1.0, std::f64::consts::PI, 0.0));
    assert!(rows[0][3] > 0.0 && rows[0][4] < 0.0);

    let o = run(&["bloch-sweep", "--beta", "2.4", "--grid", "3x4", "--samples", "200", "--T", "5"]);
    assert_eq!(csv_rows(&stdout(&o)).len(), 12);
}

#[test]
fn ensemble_generation_matches_committed_fixtures() {
    for (shape, file) in [("normal", "betas_normal_n100.txt"), ("weibull", "betas_weibull_n100.txt")] {
        let o = run(&["ensemble-gen", "--ensemble", shape, "--count", "100", "--seed", "6"]);
        assert!(o.status.success());
        let committed = std::fs::read_to_string(fixture(file)).unwrap();
        assert_eq!(stdout(&o), committed);
        let loaded = load_betas(&fixture(file)).unwrap();
        assert_eq!(loaded.betas.len(), 100);
    }
}

#[test]
fn multilevel_timeseries_from_fixture() {
    let f = fixture("betas_normal_n100.txt");
    let o = bin()
        .args(["timeseries", "--epsilon", "1", "--T", "10", "--samples", "200", "--betas-file"])
        .arg(&f)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&stdout(&o)).len(), 200);
    let o = bin().args(["timeseries", "--q", "1.5", "--betas-file"]).arg(&f).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selfcheck_passes_and_detects_perturbation() {
    let o = run(&["selfcheck"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("tail_mass="));
    let o = run(&["selfcheck", "--perturb"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("FAIL oracle"));
}
