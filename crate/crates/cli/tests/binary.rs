use std::process::Command;

fn legis(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_legis"))
        .current_dir(dir)
        .env_remove("LEGIGPT_API_KEY")
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn synth_then_ingest_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("run.toml"), "output = \"out\"\n[synth]\nn_bills = 25\n").unwrap();
    let synth = legis(tmp.path(), &["synth", "--config", "run.toml"]);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    let ingest = legis(tmp.path(), &["ingest", "--config", "run.toml", "--offline"]);
    assert!(ingest.status.success(), "{}", String::from_utf8_lossy(&ingest.stderr));
    assert!(tmp.path().join("out/ingest/bills.csv").exists());
}

#[test]
fn failures_report_json_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = legis(tmp.path(), &["train", "--output", "out"]);
    assert_eq!(out.status.code(), Some(3));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["kind"], "missing_predecessor");
    assert_eq!(record["command"], "train");

    let out = legis(tmp.path(), &["filter", "--output", "out", "--provider", "remote", "--offline"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(tmp.path().join("bad.toml"), "[provider]\napi_key = \"secret\"\n").unwrap();
    let out = legis(tmp.path(), &["ingest", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn remote_mode_without_a_key_fails_before_any_request() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("run.toml"), "output = \"out\"\n[synth]\nn_bills = 10\n").unwrap();
    assert!(legis(tmp.path(), &["synth", "--config", "run.toml"]).status.success());
    assert!(legis(tmp.path(), &["ingest", "--config", "run.toml"]).status.success());
    let out = legis(tmp.path(), &["filter", "--config", "run.toml", "--provider", "remote"]);
    assert_eq!(out.status.code(), Some(5));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(record["message"].as_str().unwrap().contains("LEGIGPT_API_KEY"), "{record}");
}
