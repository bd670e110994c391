use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gep")).args(args).output().unwrap()
}

fn mini3() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini3").display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_reports_shape() {
    let o = gep(&["validate", &mini3()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "OK, 3 buses, 3 lines");
}

#[test]
fn validate_rejects_broken_dataset() {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(mini3()).unwrap() {
        let p = entry.unwrap().path();
        fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    let lines = dir.path().join("lines.csv");
    let text = fs::read_to_string(&lines).unwrap().replace("N3", "N9");
    fs::write(&lines, text).unwrap();
    let o = gep(&["validate", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn emit_only_writes_model_and_spec() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lego");
    let o = gep(&["run", "--data", &mini3(), "--case", "lego", "--kappa", "1", "--emit-only", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lp = fs::read_to_string(out.join("model.lp")).unwrap();
    assert!(lp.contains("ac_cone(") && lp.contains("rocof("));
    assert!(!lp.contains("dc_flow("));
    let spec: String = fs::read_to_string(out.join("spec.json")).unwrap();
    assert!(spec.contains("\"lego\""));
}

fn run_dir(dir: &Path, case: &str, kappa: &str) -> (Output, PathBuf) {
    let out = dir.join(format!("{case}-{kappa}"));
    let o = gep(&["run", "--data", &mini3(), "--case", case, "--kappa", kappa, "--out", out.to_str().unwrap()]);
    (o, out)
}

#[test]
fn ex_post_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (o, base) = run_dir(dir.path(), "bc", "1");
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("bc native status optimal"));
    for f in ["report.json", "solution.txt", "capacity.csv", "costs.csv", "model.lp"] {
        assert!(base.join(f).exists(), "{f}");
    }

    let b = base.to_str().unwrap();
    let ops = gep(&["expost", "inertia", "--mode", "ops-only", "--base", b]);
    assert_eq!(ops.status.code(), Some(2), "{}", stdout(&ops));
    let add = gep(&["expost", "inertia", "--mode", "add-investments", "--base", b]);
    assert!(add.status.success());
    assert!(base.join("add-investments/report.json").exists());
    let nofacts = gep(&["expost", "ac", "--base", b, "--no-facts"]);
    assert_eq!(nofacts.status.code(), Some(2));
}

#[test]
fn ex_post_needs_dc_base() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rc");
    let o = gep(&["run", "--data", &mini3(), "--case", "rc", "--emit-only", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let o = gep(&["expost", "ac", "--base", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_case_is_a_usage_error() {
    let o = gep(&["run", "--data", &mini3(), "--case", "xyz"]);
    assert!(!o.status.success());
}
