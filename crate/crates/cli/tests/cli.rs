use std::fs;
use std::path::{Path, PathBuf};

use layout_critic_cli::{parse_weights, run_with};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("layout-critic").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, err) = cli(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(cli(&[]).0, 1);
    assert_eq!(cli(&["train", "--iters", "many", "--out", "x"]).0, 1);
    assert_eq!(cli(&["score", "--spec", "a.json"]).0, 1);
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["score", "evaluate", "train", "rerank", "render", "gen", "ablate"] {
        let (code, out, _) = cli(&[sub, "--help"]);
        assert_eq!(code, 0, "{sub}");
        assert!(out.contains("Usage"), "{sub}: {out}");
    }
    assert_eq!(cli(&["--version"]).0, 0);
}

#[test]
fn runtime_errors_exit_two() {
    let (code, _, err) = cli(&["score", "--spec", "/nonexistent/spec.json", "--layout", "l.json"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn score_prints_breakdown() {
    let (code, out, err) = cli(&[
        "score",
        "--spec",
        &fixture("poster_spec.json"),
        "--output",
        &fixture("format/valid.txt"),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["format", "icr", "align", "dist", "spacing", "underlay", "quality", "iou", "total"] {
        assert!(v.get(key).is_some(), "missing {key} in {out}");
    }
    assert_eq!(v["format"], 1.0);

    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("layout.json");
    let raw = fs::read_to_string(fixtures().join("format/valid.txt")).unwrap();
    let body = raw.split("<layout>").nth(1).unwrap().split("</layout>").next().unwrap();
    fs::write(&layout, body).unwrap();
    let (code, again, _) = cli(&["score", "--spec", &fixture("poster_spec.json"), "--layout", layout.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(again, out);
}

#[test]
fn weights_accept_presets_and_triples() {
    assert_eq!(parse_weights("iou_focused").unwrap().iou, 0.8);
    let w = parse_weights("0.2, 0.3, 0.5").unwrap();
    assert_eq!((w.format, w.quality, w.iou), (0.2, 0.3, 0.5));
    assert!(parse_weights("0.2,0.3").is_err());
    assert!(parse_weights("heavy").is_err());
    assert!(parse_weights("0,0,0").is_err());
}

#[test]
fn train_with_zero_iterations_keeps_params() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let (code, _, err) = cli(&["train", "--iters", "0", "--seed", "4", "--out", first.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let init = fs::read_to_string(first.join("initial_params.json")).unwrap();
    assert_eq!(fs::read_to_string(first.join("params.json")).unwrap(), init);
    assert_eq!(fs::read_to_string(first.join("train_log.jsonl")).unwrap().lines().count(), 1);

    let second = dir.path().join("second");
    let init_path = first.join("initial_params.json");
    let (code, _, _) = cli(&[
        "train",
        "--iters",
        "0",
        "--init",
        init_path.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(second.join("params.json")).unwrap(), init);
}

#[test]
fn short_training_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let logs: Vec<String> = ["a", "b"]
        .iter()
        .map(|d| {
            let out = dir.path().join(d);
            let args = ["train", "--iters", "5", "--seed", "2", "--jobs", "2", "--out", out.to_str().unwrap()];
            assert_eq!(cli(&args).0, 0);
            fs::read_to_string(out.join("train_log.jsonl")).unwrap()
        })
        .collect();
    assert_eq!(logs[0], logs[1]);
    assert_eq!(logs[0].lines().count(), 6);
}

#[test]
fn ablate_emits_four_rows() {
    let (code, out, err) = cli(&["ablate", "--suite", &fixture("suite.jsonl"), "--iters", "3", "--seeds", "1"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5, "{out}");
    for (line, name) in lines[1..]
        .iter()
        .zip(["format_focused", "quality_focused", "iou_focused", "balanced_hybrid"])
    {
        assert!(line.starts_with(name), "{line}");
    }
    let (_, csv, _) = cli(&["ablate", "--iters", "3", "--seeds", "1", "--format", "csv"]);
    assert!(csv.starts_with("preset,lambda_f,lambda_q,lambda_u,collision"));
    assert!(csv.contains("quality_focused,0.1,0.8,0.1,"));
}

#[test]
fn gen_then_evaluate_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("designed.jsonl");
    let (code, _, _) = cli(&["gen", "--mode", "designed", "--count", "5", "--seed", "3", "--out", data.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, json, _) = cli(&["evaluate", "--data", data.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["n_layouts"], 5);
    let (code, svg, _) = cli(&["render", "--data", data.to_str().unwrap(), "--index", "4", "--width", "200", "--height", "300"]);
    assert_eq!(code, 0);
    assert!(svg.starts_with("<svg") && svg.contains(r#"width="200""#));
    assert_eq!(cli(&["render", "--data", data.to_str().unwrap(), "--index", "5"]).0, 2);
    assert_eq!(cli(&["gen", "--min-elements", "5", "--max-elements", "2"]).0, 2);
}

#[test]
fn evaluate_strict_rejects_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mixed.jsonl");
    let good = fs::read_to_string(fixtures().join("suite.jsonl")).unwrap();
    let first = good.lines().next().unwrap();
    fs::write(&data, format!("{first}\n{{\"id\": 3}}\n")).unwrap();
    let (code, out, err) = cli(&["evaluate", "--data", data.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(err.contains("line 2"), "{err}");
    assert_eq!(out.lines().count(), 2);
    let (code, _, err) = cli(&["evaluate", "--data", data.to_str().unwrap(), "--strict"]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");
}
