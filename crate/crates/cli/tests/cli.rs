use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ftroute");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("FTROUTE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn small_manifest(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("steane.toml");
    let text = fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../manifests/steane.toml"
    ))
    .unwrap()
    .replace("iterations = 100", "iterations = 4");
    fs::write(&path, text).unwrap();
    path
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "synthesize",
        "validate",
        "analyze",
        "render",
        "sweep",
        "golay-pipeline",
    ] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    let sub = run(&["synthesize", "--help"]);
    assert!(String::from_utf8_lossy(&sub.stdout).contains("FTROUTE_OUT_DIR"));
}

#[test]
fn synthesize_writes_every_file_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_manifest(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = run(&[
            "synthesize",
            manifest.to_str().unwrap(),
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files = dir_contents(&a);
    let circuits = files
        .iter()
        .filter(|(n, _)| n.ends_with(".json") && !n.ends_with(".report.json"))
        .filter(|(n, _)| n.starts_with("steane_"))
        .count();
    assert_eq!(circuits, 14);
    assert!(files.iter().any(|(n, _)| n == "logical_qubit_config.json"));
    assert_eq!(files, dir_contents(&b));
}

#[test]
fn output_dir_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_manifest(tmp.path());
    let out = tmp.path().join("env-out");
    let o = Command::new(BIN)
        .args(["synthesize", manifest.to_str().unwrap()])
        .env("FTROUTE_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("steane_sm.json").exists());
}

#[test]
fn bad_layout_exits_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_manifest(tmp.path());
    let text = fs::read_to_string(&manifest).unwrap().replace("5x7", "0x7");
    fs::write(&manifest, text).unwrap();
    let o = run(&["synthesize", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0x7"));

    let o = run(&["sweep", "builtin:steane_sm", "--layouts", "0x7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_protocol_file_exits_with_usage_code() {
    let o = run(&["analyze", "/nonexistent/protocol.qasm"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_reports_fixture_counts() {
    let o = run(&["analyze", "builtin:steane_sm", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["qubits"], 15);
    assert_eq!(v["barriers"], 3);
    assert_eq!(v["gate_counts"]["cx"], 36);
    assert_eq!(v["gate_counts"]["h"], 15);
    assert_eq!(v["gate_counts"]["prepz"], 16);
    assert_eq!(v["gate_counts"]["measz"], 16);
    assert_eq!(v["depth"], v["dag_longest_path"]);
}

#[test]
fn analyze_writes_dot() {
    let tmp = tempfile::tempdir().unwrap();
    let dot = tmp.path().join("g.dot");
    let o = run(&[
        "analyze",
        "builtin:steane_h",
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(fs::read_to_string(dot).unwrap().starts_with("digraph"));
}

#[test]
fn validate_render_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_manifest(tmp.path());
    let out = tmp.path().join("o");
    assert!(run(&[
        "synthesize",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let enc = out.join("steane_encoder.json");
    let cfg = out.join("logical_qubit_config.json");
    let o = run(&[
        "validate",
        enc.to_str().unwrap(),
        "--protocol",
        "builtin:steane_encoder",
        "--anchors",
        cfg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));

    // a circuit checked against the wrong protocol fails validation
    let o = run(&[
        "validate",
        enc.to_str().unwrap(),
        "--protocol",
        "builtin:steane_h",
    ]);
    assert_eq!(o.status.code(), Some(3));

    let o = run(&["render", out.join("steane_h.json").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("[H]"));
    let svg = tmp.path().join("h.svg");
    let o = run(&[
        "render",
        out.join("steane_h.json").to_str().unwrap(),
        "--format",
        "svg",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn sweep_emits_one_row_per_layout() {
    let o = run(&[
        "sweep",
        "builtin:steane_sm",
        "--layouts",
        "5x6,5x7",
        "--move-back",
        "data",
        "--iterations",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "layout");
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "5x6");
    // the ideal columns do not depend on the layout
    assert_eq!(rows[0][4], rows[1][4]);
    assert_eq!(rows[0][5], rows[1][5]);
    assert_eq!(&rows[0][9], "false");
}

#[test]
fn sweep_records_failed_layouts() {
    let o = run(&[
        "sweep",
        "builtin:steane_sm",
        "--layouts",
        "2x3",
        "--iterations",
        "1",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",true,"));
}

#[test]
fn golay_pipeline_command() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let o = run(&[
        "golay-pipeline",
        "--iterations",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "golay_prep.json",
        "golay_verify.json",
        "golay_sm.json",
        "logical_qubit_config.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}
