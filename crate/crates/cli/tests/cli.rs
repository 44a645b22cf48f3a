use std::process::Command;

fn phasefield() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phasefield"))
}

#[test]
fn lists_every_experiment() {
    let out = phasefield().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["e1", "e2", "e3", "e4", "e5", "e6", "e7"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing from\n{text}");
    }
}

#[test]
fn runs_a_config_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("slope.toml");
    let out = phasefield().args(["list-experiments", "--config", "e1"]).output().unwrap();
    assert!(out.status.success());
    std::fs::write(&config, out.stdout).unwrap();

    let out_dir = dir.path().join("out");
    let run = phasefield().arg("run").arg(&config).arg("--out-dir").arg(&out_dir).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("e1.json")).unwrap()).unwrap();
    for key in ["experiment", "pass", "fitted", "expected", "tolerance"] {
        assert!(json.get(key).is_some(), "{key} missing");
    }
    let table = std::fs::read_to_string(out_dir.join("e1.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 7);
}

#[test]
fn rejects_a_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "experiment = \"e3\"\nladder = [0.1, 0.2]\n").unwrap();
    let run = phasefield().arg("run").arg(&config).output().unwrap();
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("error"));
}

#[test]
fn exports_a_profile() {
    let out = phasefield().args(["export-profile", "--epsilon", "0.01"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,v"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(values.len() > 10);
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
}
