use std::path::Path;
use std::process::{Command, Output};

fn netwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netwave"))
        .args(args)
        .output()
        .expect("spawn netwave")
}

fn scenario_text() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/four_node.toml"))
        .unwrap()
}

#[test]
fn validate_builtin_and_file() {
    let out = netwave(&["scenario", "validate", "four_node"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 nodes"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, scenario_text()).unwrap();
    assert!(netwave(&["scenario", "validate", path.to_str().unwrap()])
        .status
        .success());
}

#[test]
fn invalid_scenario_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        scenario_text().replace("zetas = [0.01, 0.05, 0.1, 0.15]", "zetas = [0.01, 3.0]"),
    )
    .unwrap();
    let out = netwave(&["scenario", "validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zetas[1]"));
}

#[test]
fn missing_scenario_exits_2() {
    let out = netwave(&[
        "run",
        "--scenario",
        "/nonexistent/scenario.toml",
        "--frames",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(
        netwave(&["run", "--zeta", "5", "--frames", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(netwave(&["run", "--frames", "0"]).status.code(), Some(2));
    assert_eq!(
        netwave(&["run", "--frames", "1", "--format", "xml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_writes_one_row_per_frame_and_zeta() {
    let dir = tempfile::tempdir().unwrap();
    let out = netwave(&[
        "sweep",
        "--frames",
        "3",
        "--zeta",
        "0.05,0.15",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("frame,zeta,pcrlb_trace,crlb_x,crlb_y,crlb_vx,crlb_vy,pd_node1"));
    assert!(header.ends_with("pd_bench_node4,accepted,iters"));
    // Reference rows plus two designed campaigns.
    assert_eq!(lines.count(), 3 * 3);
}

#[test]
fn run_json_to_stdout_parses() {
    let out = netwave(&["run", "--frames", "2", "--zeta", "0.1", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 2);
    assert_eq!(groups[1]["records"].as_array().unwrap().len(), 2);
}

#[test]
fn run_output_is_reproducible() {
    let a = netwave(&["run", "--frames", "2"]);
    let b = netwave(&["run", "--frames", "2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
