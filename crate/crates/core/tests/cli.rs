use std::process::Command;

fn nfdm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nfdm"))
}

fn error_body(out: &std::process::Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().unwrap_or_default()).unwrap_or_else(|e| panic!("{e}: {stderr}"))
}

#[test]
fn bad_config_reports_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"link": {"loops": -3}}"#).unwrap();
    let out = nfdm().args(["design", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("b.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let body = error_body(&out);
    assert_eq!(body["error"]["kind"], "config");
    assert!(body["error"]["message"].as_str().unwrap().contains("link.loops"), "{body}");
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nfdm()
        .args(["run", "--config"])
        .arg(dir.path().join("absent.json"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_body(&out)["error"]["kind"], "io");
}

#[test]
fn design_then_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(
        &cfg,
        r#"{"rules": {"z_samples": 3, "synthesis_samples": 512, "coordinate_starts": 1,
             "coordinate_passes": 1, "pattern_count": 4},
            "link": {"loops": 1, "dz_km": 0.5, "nf_db": null},
            "frame": {"symbols_per_frame": 4, "total_symbols": 4}}"#,
    )
    .unwrap();
    let book = dir.path().join("book.json");
    let out = nfdm().args(["design", "--config"]).arg(&cfg).arg("--out").arg(&book).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run_dir = dir.path().join("run");
    let out = nfdm()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--codebook")
        .arg(&book)
        .arg("--out-dir")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["bit_errors"], 0);
    let scatter = std::fs::read_to_string(run_dir.join("scatter.csv")).unwrap();
    assert!(scatter.starts_with("symbol_index,re_lambda,im_lambda"));
    assert!(run_dir.join("report.json").exists());
}
