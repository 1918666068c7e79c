use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_unicirc");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("UNICIRC_OUT_DIR")
        .output()
        .expect("run unicirc")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn unity(dir: &Path, seed: &str, out: &str) {
    let o = run(dir, &["find-unity", "--preset", "chain3", "--seed", seed, "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn bounds_rejects_one_qubit_as_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["bounds", "--n", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bounds_table_lists_all_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["bounds", "--json"]);
    assert_eq!(code(&o), 0);
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    let ns: Vec<u64> = rows.as_array().unwrap().iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, vec![2, 3, 4, 5, 6, 7]);
}

#[test]
fn find_unity_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    unity(dir.path(), "7", "a.json");
    unity(dir.path(), "7", "b.json");
    let a = json(&dir.path().join("a.json"));
    let b = json(&dir.path().join("b.json"));
    assert_eq!(a["unity"]["unit_params"], b["unity"]["unit_params"]);
    assert!(a["unity"]["residual_cost"].as_f64().unwrap() <= 1e-10);
    assert!(dir.path().join("a.json.manifest.json").exists());
}

#[test]
fn malformed_topology_reports_the_zero_based_slot() {
    let dir = tempfile::tempdir().unwrap();
    let topology = r#"{"name":"bad","n":3,"slots":[{"kind":"rot","qubit":1},{"kind":"cnot","control":1,"target":1}]}"#;
    std::fs::write(dir.path().join("bad.json"), topology).unwrap();
    let o = run(dir.path(), &["find-unity", "--topology", "bad.json"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("slot 1"), "{}", stderr(&o));
}

#[test]
fn unity_for_another_topology_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    unity(dir.path(), "1", "u.json");
    let o = run(
        dir.path(),
        &["compile", "--preset", "triangle3", "--unity", "u.json", "--target", "id"],
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("hash"), "{}", stderr(&o));
}

#[test]
fn universality_report_echoes_its_settings() {
    let dir = tempfile::tempdir().unwrap();
    unity(dir.path(), "1", "u.json");
    let o = run(
        dir.path(),
        &["check-universal", "--preset", "chain3", "--unity", "u.json", "--targets", "10", "--seed", "3"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&dir.path().join("universality.json"));
    assert_eq!(report["report"]["config"]["n_targets"], 10);
    assert_eq!(report["report"]["config"]["seed"], 3);
    assert_eq!(report["report"]["per_target"].as_array().unwrap().len(), 10);
    assert_eq!(report["report"]["pass"], true);
}

#[test]
fn identity_target_compiles_exactly() {
    let dir = tempfile::tempdir().unwrap();
    unity(dir.path(), "1", "u.json");
    let o = run(
        dir.path(),
        &["compile", "--preset", "chain3", "--unity", "u.json", "--target", "id"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let result = json(&dir.path().join("compilation.json"));
    assert!(result["result"]["final_distance"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn non_unitary_matrix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    unity(dir.path(), "1", "u.json");
    let mut text = String::from("8\n");
    for k in 0..64 {
        text.push_str(&format!("{} {}\n", (k % 5) as f64 * 0.3, (k % 3) as f64 - 1.0));
    }
    std::fs::write(dir.path().join("garbage.txt"), text).unwrap();
    let o = run(
        dir.path(),
        &["compile", "--preset", "chain3", "--unity", "u.json", "--matrix", "garbage.txt"],
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("unitar"), "{}", stderr(&o));
}

#[test]
fn bench_with_one_topology_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["bench", "--preset", "chain3", "--targets", "2", "--skip-universality", "--seed", "4", "--out", out]
    };
    for out in ["a.csv", "b.csv"] {
        let o = run(dir.path(), &args(out));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 2, "{a}");
    assert!(a.lines().nth(1).unwrap().starts_with("chain3,3,16,"), "{a}");
}

#[test]
fn replay_detects_edited_inputs() {
    let dir = tempfile::tempdir().unwrap();
    unity(dir.path(), "1", "u.json");
    let o = run(
        dir.path(),
        &["compile", "--preset", "chain3", "--unity", "u.json", "--target", "id", "--out", "c.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let replay_dir = dir.path().join("again");
    let o = run(
        dir.path(),
        &["--out-dir", replay_dir.to_str().unwrap(), "replay", "c.json.manifest.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let mut text = std::fs::read_to_string(dir.path().join("u.json")).unwrap();
    text.push('\n');
    std::fs::write(dir.path().join("u.json"), text).unwrap();
    let o = run(
        dir.path(),
        &["--out-dir", replay_dir.to_str().unwrap(), "replay", "c.json.manifest.json"],
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}
