use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracradon"))
}

#[test]
fn theta_check_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"experiment": "theta-check", "form": [[2,1],[1,2]], "params": {"points": 16}}"#).unwrap();
    let out = dir.path().join("out");
    let status = bin().args(["theta-check", "--threads", "1", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["pass"], true);
    assert_eq!(manifest["experiment"], "theta-check");
    let csv = fs::read_to_string(out.join("theta_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn odd_diagonal_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"form": [[3]]}"#).unwrap();
    let out = bin().args(["gauss", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd"));
}

#[test]
fn unknown_fields_and_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"params": {"q_maxx": 3}}"#).unwrap();
    let out = bin().args(["gauss", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(bin().args(["gauss", "--bogus"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn failing_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // a slope window that cannot contain the measured decay
    fs::write(&cfg, r#"{"params": {"scan": "nu_rs", "points": 8, "window": 0.0001}}"#).unwrap();
    let out = dir.path().join("out");
    let status = bin().args(["multiplier", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(1));
    assert!(out.join("fits.csv").exists());
}

#[test]
fn same_config_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"form": [[2,0],[0,2]], "params": {"upto": 100000}}"#).unwrap();
    let mut csvs = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let st = bin().args(["representations", "--threads", threads, "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert_eq!(st.code(), Some(0));
        csvs.push((fs::read(out.join("representations.csv")).unwrap(), fs::read(out.join("fit.csv")).unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
}
