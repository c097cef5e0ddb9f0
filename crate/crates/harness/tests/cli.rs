use std::process::Command;

fn ckis() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ckis"))
}

#[test]
fn direct_run_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let status = ckis()
        .args(["direct", "--n", "120", "--epsilon", "3.0", "--h", "0.01", "--seed", "1"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 121);
    assert!(dir.path().join("d.manifest").exists());
}

#[test]
fn epsilon_and_alpha_conflict() {
    let out = ckis()
        .args(["direct", "--epsilon", "1", "--alpha", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_values_exit_two() {
    for args in [
        vec!["direct", "--n", "0"],
        vec!["indirect", "--h", "-0.1"],
        vec!["localize", "--log-base", "2", "--n", "5"],
        vec!["custom", "--phi", "cube", "--n", "5"],
        vec!["direct", "--n", "5", "--out", "/nonexistent-dir/a/b.csv"],
        vec!["sweep", "--experiment", "nope", "--out", "x.csv"],
    ] {
        let out = ckis().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n=30\nh=0.05\nepsilon=0.5\n").unwrap();
    let out = dir.path().join("c.csv");
    let status = ckis()
        .args(["indirect", "--n", "20", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 21);
    let manifest = std::fs::read_to_string(dir.path().join("c.manifest")).unwrap();
    assert!(manifest.contains("\nh=0.05\n"));
    assert!(manifest.contains("\nepsilon=0.5\n"));
}

#[test]
fn sweep_writes_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let status = ckis()
        .args(["sweep", "--experiment", "direct", "--grid", "n=20,40", "--replicates", "3"])
        .args(["--epsilon", "0", "--compare-uncompressed", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(ckis().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(ckis().arg("--version").output().unwrap().status.code(), Some(0));
}
