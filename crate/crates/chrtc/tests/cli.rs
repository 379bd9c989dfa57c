//! End-to-end checks of the `chrtc` binary: exit codes, file outputs and
//! byte-determinism of repeated runs.

mod common;

use common::fixture;
use std::path::Path;
use std::process::{Command, Output};

fn chrtc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chrtc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture_path(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn infer_exit_codes_distinguish_outcomes() {
    let f = fixture_path("f.hs");
    let answer = chrtc(&["infer", &f, "F Int b"]);
    assert_eq!(answer.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&answer.stdout),
        "answer: b = Bool\n"
    );

    let unknown = chrtc(&["infer", &f, "F [a] a", "--depth", "50"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert_eq!(
        String::from_utf8_lossy(&unknown.stdout),
        "unknown (depth bound 50 exceeded)\n"
    );

    let falsy = chrtc(&["infer", &f, "F Int Int"]);
    assert_eq!(falsy.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&falsy.stdout), "false\n");
}

#[test]
fn usage_and_parse_errors_exit_above_two() {
    let usage = chrtc(&["no-such-command"]);
    assert_eq!(usage.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.hs");
    std::fs::write(&bad, "class class\n").unwrap();
    let parse = chrtc(&["check", bad.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(3));
    assert!(!parse.stderr.is_empty());

    let missing = chrtc(&["infer", "/nonexistent/file.hs", "F Int b"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    assert_eq!(
        chrtc(&["check", &fixture_path("f.hs")]).status.code(),
        Some(0)
    );
    assert_eq!(
        chrtc(&["check", &fixture_path("fc_unsafe.hs")])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn translate_writes_a_reloadable_program() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.chr");
    let run = chrtc(&[
        "translate",
        &fixture_path("f.hs"),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stdout).contains("total: 5 rules"));

    // the written program drives inference directly
    let infer = chrtc(&["infer", out.to_str().unwrap(), "F [Int] b"]);
    assert_eq!(
        String::from_utf8_lossy(&infer.stdout),
        "answer: b = [Bool]\n"
    );
}

#[test]
fn project_writes_clauses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.pl");
    let run = chrtc(&[
        "project",
        &fixture_path("f.hs"),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("f(int, bool).\n"));
    assert!(text.contains("f(list(A), list(B)) :- f(A, B).\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let f = fixture_path("f.hs");
    for args in [
        vec!["check", f.as_str()],
        vec!["check", f.as_str(), "--format", "json"],
        vec!["infer", f.as_str(), "F [Int] b", "--probe", "25"],
        vec!["translate", f.as_str()],
    ] {
        let a = chrtc(&args);
        let b = chrtc(&args);
        assert_eq!(a.stdout, b.stdout, "args {args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

#[test]
fn fuse_flag_switches_to_combined_rules() {
    let run = chrtc(&["translate", &fixture_path("f.hs"), "--fuse"]);
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.contains("F_inst1 @ F Int b' <=> b' = Bool."), "{text}");
    assert!(!text.contains("imp"), "improvements are folded in: {text}");
}

#[test]
fn inert_goal_constraints_warn_but_answer() {
    let run = chrtc(&["infer", &fixture_path("f.hs"), "Unknown x"]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stderr).contains("inert"));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "answer: Unknown x\n");
}

#[test]
fn rank_spec_file_feeds_the_checker() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("rank.txt");
    std::fs::write(&spec, "measure F 1; weight List 1\n").unwrap();
    let run = chrtc(&[
        "check",
        &fixture_path("f.hs"),
        "--rank-spec",
        spec.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stdout).contains("GROUND-TERMINATING"));
}

#[test]
fn fixture_text_matches_documented_shape() {
    // the declaration fixtures stay parseable as documented
    for name in ["f.hs", "coll.hs", "eq.hs", "add.hs", "fc_unsafe.hs"] {
        assert!(
            chrtc::frontend::parse_decls(&fixture(name)).is_ok(),
            "{name}"
        );
    }
    for name in ["p_false.chr", "p_true.chr"] {
        assert!(
            chrtc::parse::parse_program(&fixture(name)).is_ok(),
            "{name}"
        );
    }
}
