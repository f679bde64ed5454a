use std::path::Path;
use std::process::{Command, Output};

fn s3flow(args: &[&str], env_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_s3flow"));
    cmd.args(args).env_remove("S3FLOW_OUTPUT_DIR");
    if let Some(d) = env_dir {
        cmd.env("S3FLOW_OUTPUT_DIR", d);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn spectrum_lists_integer_multipliers() {
    let o = s3flow(&["spectrum", "--K", "4"], None);
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines[0], "k,Lambda_k,multiplicity");
    assert_eq!(lines[1..], ["0,0,1", "1,6,4", "2,24,9", "3,60,16", "4,120,25"]);
}

#[test]
fn invalid_parameters_exit_with_usage_code() {
    let o = s3flow(&["flow", "--K", "-4"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("K"), "{}", stderr(&o));

    let o = s3flow(&["flow", "--f", "axial:5", "--K", "4", "--max-steps", "1"], None);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "K = 4\nbogus = 1\n").unwrap();
    let o = s3flow(&["--config", cfg.to_str().unwrap(), "flow"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
}

#[test]
fn flow_writes_diagnostics_snapshot_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let args = ["flow", "--K", "6", "--f", "axial:0.2", "--w0", "random:0.1", "--max-steps", "10", "--output-dir", out.to_str().unwrap()];
    let o = s3flow(&args, None);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,alpha,E_f,E,volume,F2,G2,"));
    assert!(csv.lines().count() >= 2);
    let snap: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("final_state.json")).unwrap()).unwrap();
    assert_eq!(snap["header"]["band_limit"], 6);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_hash"], snap["header"]["config_hash"]);

    // Resuming from the snapshot reproduces its state at the first record.
    let resumed = dir.path().join("resumed");
    let w0 = format!("snapshot:{}", out.join("final_state.json").display());
    let args = ["flow", "--K", "6", "--f", "axial:0.2", "--w0", &w0, "--max-steps", "1", "--output-dir", resumed.to_str().unwrap()];
    let o = s3flow(&args, None);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read_to_string(resumed.join("diagnostics.csv")).unwrap();
    let last_e = csv.lines().last().unwrap().split(',').nth(2).unwrap().to_owned();
    assert_eq!(first.lines().nth(1).unwrap().split(',').nth(2).unwrap(), last_e);
}

#[test]
fn environment_overrides_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = s3flow(&["shadow", "--f", "axial:0.3", "--p", "0.5,0.3,-0.2,0.1", "--eps", "0.3", "--horizon", "0.1", "--output-dir", "ignored"], Some(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("shadow.csv").exists());
    assert!(dir.path().join("shadow.json").exists());
    assert!(!Path::new("ignored").exists());
}

#[test]
fn morse_reads_critical_point_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.json");
    std::fs::write(
        &data,
        r#"[{"index": 3, "laplacian_negative": true, "value": 2.3},
            {"index": 0, "laplacian_negative": false, "value": 1.7}]"#,
    )
    .unwrap();
    let o = s3flow(&["morse", "--data", data.to_str().unwrap(), "--formats", "json"], Some(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("morse_report.json")).unwrap()).unwrap();
    assert_eq!(report["m"], serde_json::json!([1, 0, 0, 0]));
    let printed: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(printed, report);
}

#[test]
fn bubble_reports_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let o = s3flow(&["bubble", "--K", "12", "--p", "0,0,0,1", "--eps", "0.8"], Some(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("sup |T - 2|"));
    assert!(dir.path().join("bubble.json").exists());
}

#[test]
fn verify_runs_selected_items_and_detects_faults() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("verify.json");
    let o = s3flow(&["verify", "--only", "spectrum,morse", "--json", json.to_str().unwrap()], None);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("2 of 2 items passed"));
    let reports: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 2);

    let o = s3flow(&["verify", "--only", "spectrum", "--fault-multiplier", "1e-3"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));

    let o = s3flow(&["verify", "--only", "nonsense"], None);
    assert_ne!(o.status.code(), Some(0));
}
