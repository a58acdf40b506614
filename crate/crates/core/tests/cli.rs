mod common;

use std::process::{Command, Output};

use common::fixture;
use wifn::report::{Overall, Report};

fn wifn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wifn"))
        .args(args)
        .env("WIFN_COLOR", "0")
        .output()
        .expect("binary runs")
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn exit_codes_follow_the_verdict() {
    assert_eq!(
        wifn(&["analyze", "--protocol", &path("nsl.proto")]).status.code(),
        Some(1)
    );
    assert_eq!(
        wifn(&["analyze", "--protocol", &path("nsl-hash.proto")]).status.code(),
        Some(0)
    );
}

#[test]
fn json_round_trips() {
    let out = wifn(&[
        "analyze",
        "--protocol",
        &path("woolam-flawed.proto"),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let report: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(report.overall, Overall::NotIncreasing);
    assert_eq!(report.rows.len(), 6);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", text);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["overall"], "not-increasing");
    assert_eq!(value["theory"], "empty");
    assert_eq!(value["rows"][1]["type"], serde_json::json!(["A", "B", "S"]));
    assert!(value["rows"][0]["type"].is_null());
    assert_eq!(value["rows"][5]["cases"].as_array().unwrap().len(), 2);
}

#[test]
fn explicit_context_roles_and_out_file() {
    let dir = std::env::temp_dir().join(format!("wifn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out_file = dir.join("report.txt");
    let out = wifn(&[
        "analyze",
        "--context",
        &path("nsl.ctx"),
        "--protocol",
        &path("nsl.proto"),
        "--roles",
        &path("nsl.roles"),
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_file).unwrap();
    assert!(text.contains("may involve a flaw"));
    assert!(!text.contains('\x1b'));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn theory_and_variant_overrides() {
    let out = wifn(&[
        "analyze",
        "--protocol",
        &path("nsl.proto"),
        "--theory",
        "empty",
        "--variant",
        "ek",
        "--format",
        "json",
    ]);
    let report: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.theory, wifn::TheoryTag::Empty);
    assert_eq!(report.variant, wifn::SelectionVariant::Ek);
}

#[test]
fn input_errors_exit_two() {
    let missing = wifn(&["analyze", "--protocol", "/nonexistent/p.proto"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_ctx = wifn(&[
        "analyze",
        "--context",
        &path("nsl.roles"),
        "--protocol",
        &path("nsl.proto"),
    ]);
    assert_eq!(bad_ctx.status.code(), Some(2));
    let err = String::from_utf8(bad_ctx.stderr).unwrap();
    assert!(err.starts_with("error: ") && err.contains("nsl.roles"), "{err}");
    let wrong_ctx = wifn(&[
        "analyze",
        "--context",
        &path("woolam.ctx"),
        "--protocol",
        &path("nsl.proto"),
    ]);
    assert_eq!(wrong_ctx.status.code(), Some(2));
    assert!(String::from_utf8(wrong_ctx.stderr)
        .unwrap()
        .contains("has no declared inverse"));
}

#[test]
fn text_report_mentions_hash_opacity() {
    let out = wifn(&["analyze", "--protocol", &path("nsl-hash.proto")]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("note: hash bodies are opaque"));
    assert!(text.contains("increasing"));
}
