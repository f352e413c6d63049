//! End-to-end tests of the `capwave` binary: determinism of data artifacts,
//! golden-directory comparison, config-file handling, and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn capwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capwave"))
        .args(args)
        .env_remove("CAPWAVE_OUT_ROOT")
        .output()
        .expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn config_sha(dir: &Path) -> String {
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    manifest["config_sha256"].as_str().unwrap().to_string()
}

#[test]
fn toy_run_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let r = capwave(&[
            "toy-schrodinger",
            "--t-final",
            "1.0",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_code(&r, 0);
    }
    for name in ["series.csv", "summary.json"] {
        let fa = fs::read(a.join(name)).unwrap();
        let fb = fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between identical runs");
    }
    assert_eq!(config_sha(&a), config_sha(&b));
}

#[test]
fn golden_comparison_passes_and_catches_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let golden = tmp.path().join("golden");
    let fresh = tmp.path().join("fresh");
    assert_code(
        &capwave(&[
            "resonance-map",
            "--xi",
            "0.4,0.1",
            "--out",
            golden.to_str().unwrap(),
        ]),
        0,
    );
    assert_code(
        &capwave(&[
            "resonance-map",
            "--xi",
            "0.4,0.1",
            "--out",
            fresh.to_str().unwrap(),
            "--golden",
            golden.to_str().unwrap(),
        ]),
        0,
    );
    // Corrupt one number in the golden CSV; the comparison must fail.
    let csv = golden.join("resonances.csv");
    let text = fs::read_to_string(&csv).unwrap().replacen('4', "5", 1);
    fs::write(&csv, text).unwrap();
    let r = capwave(&[
        "resonance-map",
        "--xi",
        "0.4,0.1",
        "--out",
        tmp.path().join("fresh2").to_str().unwrap(),
        "--golden",
        golden.to_str().unwrap(),
    ]);
    assert_code(&r, 2);
}

#[test]
fn config_file_overrides_flags_and_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("toy.toml");
    fs::write(&cfg, "t_final = 0.5\n").unwrap();
    let out = tmp.path().join("out");
    assert_code(
        &capwave(&[
            "toy-schrodinger",
            "--t-final",
            "2.0",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]),
        0,
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["t_final"].as_f64(), Some(0.5));

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "no_such_knob = 1\n").unwrap();
    let r = capwave(&[
        "toy-schrodinger",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        tmp.path().join("out2").to_str().unwrap(),
    ]);
    assert_code(&r, 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("no_such_knob"));
}

#[test]
fn validation_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    // Non-power-of-two grid.
    let r = capwave(&[
        "evolve",
        "--n",
        "7",
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_code(&r, 2);
    // Decay probe that would wrap the box refuses with the admissible time.
    let r = capwave(&[
        "decay-probe",
        "--n",
        "64",
        "--box-len",
        "6.283185307179586",
        "--band",
        "1",
        "--out",
        tmp.path().join("y").to_str().unwrap(),
    ]);
    assert_code(&r, 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("max admissible time"));
}

#[test]
fn io_errors_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let r = capwave(&[
        "resonance-map",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_code(&r, 4);
}

#[test]
fn empty_class_filter_yields_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_code(
        &capwave(&[
            "resonance-map",
            "--classes",
            "",
            "--out",
            out.to_str().unwrap(),
        ]),
        0,
    );
    let csv = fs::read_to_string(out.join("resonances.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "header only: {csv}");
}

#[test]
fn out_root_reroots_relative_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let r = Command::new(env!("CARGO_BIN_EXE_capwave"))
        .args(["resonance-map", "--out", "rel/res"])
        .env("CAPWAVE_OUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert!(tmp.path().join("rel/res/manifest.json").exists());
}
