//! End-to-end tests of the `ncmart` binary: exit codes, output formats,
//! config/flag/env precedence, and byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn ncmart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncmart"))
        .args(args)
        .env_remove("NCMART_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = ncmart(&[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = ncmart(&["verify", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn demo_prints_the_worked_example() {
    let out = ncmart(&["demo"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("q[3]^(λ=2) = diag(0, 1, 1, 1)"), "{text}");
    assert!(text.contains("x[2] = diag(2, 2, 0, 0)"));
    assert!(text.contains("p[i=2,n=3] = diag(1, 0, 0, 0)"));
    assert!(text.contains("dz[3] = diag(0, 0, 0, 0)"));
    assert!(!text.contains("VIOLATED"));
}

#[test]
fn small_verify_passes_and_is_reproducible() {
    let args = ["verify", "--dim", "4", "--levels", "3", "--trials", "3", "--seed", "7"];
    let a = ncmart(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = ncmart(&args);
    assert_eq!(stdout(&a), stdout(&b), "identical runs must be byte-identical");
    let json: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    assert_eq!(json[0]["suite"], "weak-type");
    assert_eq!(json[0]["seed"], 7);
}

#[test]
fn verify_csv_format() {
    let out = ncmart(&[
        "verify", "--dim", "4", "--levels", "3", "--trials", "2", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("suite,name,max_observed,threshold,pass,worst_trial,worst_trial_seed"));
    assert!(text.contains("weak-type,stopping.level_membership"));
    assert!(text.contains("regular(k=2),pair.exactness"));
}

#[test]
fn constants_csv_schema_and_gate() {
    let out = ncmart(&[
        "constants", "--dim", "4", "--levels", "3", "--trials", "3", "--p-grid", "1.5,2,4",
        "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("p,ratio_name,max,mean,exact,trials,seed"));
    assert!(text.contains("2,alpha,"));
    assert!(text.contains("1.5,delta,"));
}

#[test]
fn out_file_and_dumps_are_written() {
    let dir = std::env::temp_dir().join(format!("ncmart-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let report = dir.join("report.json");
    let out = ncmart(&[
        "demo",
        "--out",
        report.to_str().unwrap(),
        "--dump-projections",
        "--dump-decomposition",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Path::new(&dir.join("projections.json")).exists());
    assert!(Path::new(&dir.join("decomposition.json")).exists());
    let dumped = std::fs::read_to_string(dir.join("projections.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&dumped).unwrap();
    let q = &json["q(lambda=2,n=3)"];
    assert_eq!(q["dim"], 4);
    assert_eq!(q["trace"], "normalized");
    // diag(0,1,1,1) in row-major [re, im] pairs.
    assert_eq!(q["entries"][0][0], 0.0);
    assert_eq!(q["entries"][5][0], 1.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = std::env::temp_dir().join(format!("ncmart-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"dim":4,"levels":3,"trials":4,"seed":11}"#).unwrap();
    let out = ncmart(&["verify", "--config", cfg.to_str().unwrap(), "--trials", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json[0]["seed"], 11, "config seed applies");
    assert_eq!(json[0]["trials"], 2, "explicit flag beats the config");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn env_seed_overrides_the_default() {
    let out = Command::new(env!("CARGO_BIN_EXE_ncmart"))
        .args(["verify", "--dim", "4", "--levels", "3", "--trials", "2"])
        .env("NCMART_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json[0]["seed"], 99);
    // An explicit flag still wins over the environment.
    let out = Command::new(env!("CARGO_BIN_EXE_ncmart"))
        .args(["verify", "--dim", "4", "--levels", "3", "--trials", "2", "--seed", "5"])
        .env("NCMART_SEED", "99")
        .output()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json[0]["seed"], 5);
}

#[test]
fn bmo_and_khintchine_smoke() {
    let out = ncmart(&["bmo", "--dims", "2,2", "--trials", "3", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(json["suite"].as_str().unwrap().starts_with("bmo"));
    let out = ncmart(&["khintchine", "--dims", "2,2", "--b-dim", "2", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["used"], 3);
}

#[test]
fn constants_can_emit_per_martingale_norm_rows() {
    let dir = std::env::temp_dir().join(format!("ncmart-norms-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let norms = dir.join("norms.csv");
    let out = ncmart(&[
        "constants", "--dim", "4", "--levels", "3", "--trials", "2", "--p-grid", "2,4",
        "--norms-out", norms.to_str().unwrap(), "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&norms).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,p,s_col_p,s_row_p,sigma_col_p,sigma_row_p,h_diag_p,hardy_p,hardy_exact,h_p,\
h_exact,bmo_col,bmo_row,bmo"
    );
    // 2 trials × 2 exponents.
    assert_eq!(lines.count(), 4);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn tensor_filtration_flag_is_accepted() {
    let out = ncmart(&[
        "verify", "--dim", "8", "--levels", "3", "--trials", "2", "--filtration", "tensor",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
