//! End-to-end CLI tests: subcommand output, file emission, exit codes.

use assert_cmd::Command;
use predicates::prelude::*;

fn cmd() -> Command {
    Command::cargo_bin("intra-mcm").unwrap()
}

#[test]
fn throughput_defaults_match_published_figures() {
    cmd()
        .args(["throughput"])
        .assert()
        .success()
        .stdout(predicate::str::contains("5288"))
        .stdout(predicate::str::contains("2677050"))
        .stdout(predicate::str::contains("80311500"));
}

#[test]
fn tables_csv_has_64_rows_for_both_filters() {
    let out = cmd()
        .args(["tables", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("fc,")).count(), 32);
    assert_eq!(text.lines().filter(|l| l.starts_with("fg,")).count(), 32);
}

#[test]
fn demands_at_n16_show_published_tap2_set() {
    cmd()
        .args(["demands", "--n", "16", "--format", "csv"])
        .assert()
        .success()
        .stdout(predicate::str::contains("2,16 19 27 51"));
}

#[test]
fn mcm_reports_four_adders_for_tap2_n16() {
    // fundamentals {19, 27, 51} plus the shared node 3
    cmd()
        .args(["mcm", "--n", "16"])
        .assert()
        .success()
        .stdout(predicate::str::contains("tap 2: 4 adders"));
}

#[test]
fn emit_writes_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    cmd()
        .args(["emit", "--n", "16", "--parallel", "4"])
        .args(["--out", dir.path().to_str().unwrap()])
        .assert()
        .success();
    for name in [
        "mcm_n16_mcm0.v",
        "mcm_n16_mcm3.v",
        "mcm_n16_unit.v",
        "mcm_n16_par4.v",
        "manifest.json",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["implementation"], "mcm_n16");
}

#[test]
fn eval_csv_goes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    cmd()
        .args(["eval", "--cases", "5", "--n", "16", "--modes", "2,50,66"])
        .args(["--seed", "9", "--format", "csv"])
        .args(["--out", out.to_str().unwrap()])
        .assert()
        .success();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("seed,"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn eval_is_reproducible_from_the_seed() {
    let run = || {
        cmd()
            .args(["eval", "--cases", "5", "--n", "32", "--seed", "4"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn sweep_lists_all_implementations() {
    cmd()
        .args(["sweep", "--parallel", "1", "--format", "csv"])
        .assert()
        .success()
        .stdout(predicate::str::contains("mcm_n32"))
        .stdout(predicate::str::contains("mcm_precise"))
        .stdout(predicate::str::contains("mult"));
}

#[test]
fn bad_grouping_factor_exits_1() {
    cmd()
        .args(["tables", "--n", "7"])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("grouping factor"));
}

#[test]
fn bad_mode_index_exits_1() {
    cmd()
        .args(["eval", "--modes", "1", "--cases", "1"])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("invalid mode"));
}

#[test]
fn unknown_flag_exits_1() {
    cmd().args(["tables", "--bogus"]).assert().code(1);
}

#[test]
fn missing_image_file_exits_1() {
    cmd()
        .args(["eval", "--image", "/nonexistent.pgm"])
        .assert()
        .code(1);
}
