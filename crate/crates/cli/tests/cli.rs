use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn conflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conflow"))
        .args(args)
        .output()
        .unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_artifacts_and_compares_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("flat.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = conflow(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        for f in [
            "config.toml",
            "diagnostics.csv",
            "admissibility.json",
            "report.txt",
            "snapshot_0000.dat",
        ] {
            assert!(dir.join(f).is_file(), "missing {f}");
        }
    }
    let out = conflow(&[
        "compare",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["snapshot_gap"].as_f64(), Some(0.0));
}

#[test]
fn check_initial_reports_admissibility() {
    let out = conflow(&[
        "check-initial",
        config("cigar_exact.toml").to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v.is_object());
}

#[test]
fn verify_exact_passes_on_the_cigar() {
    let out = conflow(&[
        "verify-exact",
        config("cigar_exact.toml").to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
}

#[test]
fn bad_input_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nt_end = -1.0\n").unwrap();
    assert_eq!(
        conflow(&["run", bad.to_str().unwrap()]).status.code(),
        Some(3)
    );
    assert_eq!(
        conflow(&["run", "/nonexistent/config.toml"]).status.code(),
        Some(3)
    );
    assert_eq!(conflow(&["no-such-command"]).status.code(), Some(3));
    assert_eq!(conflow(&["--help"]).status.code(), Some(0));
}
