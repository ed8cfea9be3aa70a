use std::path::Path;
use std::process::{Command, Output};

fn gradlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradlab")).args(args).current_dir(cwd).output().unwrap()
}

#[test]
fn defaults_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = gradlab(&["defaults", "meyers"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("experiment = meyers\n"));
    let cfg = dir.path().join("meyers.conf");
    std::fs::write(&cfg, text.replace("meyers.fem = 1", "meyers.fem = 0")).unwrap();

    let out = gradlab(&["meyers", "--config", "meyers.conf", "--out", "res", "--threads", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("res/meyers_rays.csv").exists());
    assert!(dir.path().join("res/meyers_rays.svg").exists());
}

#[test]
fn mismatched_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.conf"), "experiment = sweep\n").unwrap();
    let out = gradlab(&["meyers", "--config", "c.conf"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep"));
}

#[test]
fn bad_override_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gradlab(&["degiorgi", "--set", "degiorgi.bogus=1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_check_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = gradlab(
        &["meyers", "--set", "meyers.fem=0", "--set", "meyers.ray_tol=1e-300", "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn plot_subcommand_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.csv"), "h,err\n0.1,0.01\n0.05,0.0025\n").unwrap();
    let out = gradlab(
        &["plot", "--csv", "d.csv", "--x", "h", "--y", "err", "--log-x", "--log-y", "--slope", "d.svg"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("d.svg")).unwrap();
    assert!(svg.contains("slope 2.0000"));

    let out = gradlab(&["plot", "--csv", "d.csv", "--x", "h", "--y", "nope", "e.svg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("e.svg").exists());
}
