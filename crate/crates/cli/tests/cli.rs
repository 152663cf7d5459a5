use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Out {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn mrkit(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_mrkit")).args(args).current_dir(root()).output().unwrap();
    Out {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

const GEO: &[&str] = &["--env", "geo", "--data", "crates/core/data/geobase.jsonl"];

fn execute(dialect: &str, extra: &[&str]) -> Out {
    let mut args = vec!["execute"];
    args.extend(GEO);
    args.extend(["--dialect", dialect]);
    args.extend(extra);
    mrkit(&args)
}

#[test]
fn execute_prints_denotation() {
    let out = execute("funql", &["--program", "answer(elevation_1(highest(place(loc_2(largest(state(all)))))))"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v = out.json();
    assert_eq!(v["outcome"], "denotation");
    assert_eq!(v["number"]["value"], 2667.0);
}

#[test]
fn execute_failure_exits_two_with_json() {
    let out = execute("funql", &["--program", "answer(state("]);
    assert_eq!(out.code, 2);
    assert_eq!(out.json()["failure"]["stage"], "parse");
    let out = execute("pymr", &["--program", "def answer():\n    return geo_model.find_state('atlantis')"]);
    assert_eq!(out.code, 2);
    assert_eq!(out.json()["failure"]["stage"], "runtime");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.py");
    std::fs::write(&empty, "  \n").unwrap();
    let out = execute("pymr", &["--file", empty.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("empty"), "{}", out.stderr);
    assert!(out.stdout.is_empty());

    assert_eq!(execute("pymr", &[]).code, 1);
    assert_eq!(execute("klingon", &["--program", "x"]).code, 1);
    assert_eq!(
        mrkit(&[
            "execute",
            "--env",
            "geo",
            "--data",
            "/nonexistent",
            "--dialect",
            "funql",
            "--program",
            "answer(state(all))"
        ])
        .code,
        1
    );
    assert_eq!(mrkit(&["frobnicate"]).code, 1);
    assert_eq!(mrkit(&["--help"]).code, 0);
}

#[test]
fn evaluate_reports_verdict() {
    let mut args = vec!["evaluate"];
    args.extend(GEO);
    args.extend([
        "--pred-dialect",
        "pymr",
        "--pred",
        "def answer():\n    return len(geo_model.find_state('colorado').rivers)",
        "--gold-dialect",
        "funql",
        "--gold",
        "answer(count(river(loc_2(stateid('colorado')))))",
    ]);
    let out = mrkit(&args);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.json()["verdict"], "correct");
}

#[test]
fn simplify_batch_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let src = root().join("crates/core/data/overnight.jsonl");
    let text = std::fs::read_to_string(&src).unwrap();
    let (full, simple): (Vec<String>, Vec<String>) = text
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (
                v["programs"]["ldcs"].as_str().unwrap().to_string(),
                v["programs"]["ldcs-simple"].as_str().unwrap().to_string(),
            )
        })
        .unzip();
    let input = dir.path().join("full.txt");
    std::fs::write(&input, full.join("\n")).unwrap();
    let out = mrkit(&["simplify", "--input", input.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout.lines().collect::<Vec<_>>(), simple);

    let output = dir.path().join("back.txt");
    let simple_in = dir.path().join("simple.txt");
    std::fs::write(&simple_in, simple.join("\n")).unwrap();
    let out = mrkit(&[
        "simplify",
        "--direction",
        "desimplify",
        "--input",
        simple_in.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(std::fs::read_to_string(&output).unwrap().lines().collect::<Vec<_>>(), full);

    let out = mrkit(&["simplify", "--program", "(call SW.bogus (string x))"]);
    assert_eq!(out.code, 2);
}

#[test]
fn simplify_fills_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(root().join("crates/core/data/overnight.jsonl")).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            v["programs"].as_object_mut().unwrap().remove("ldcs");
            v.to_string() + "\n"
        })
        .collect();
    let path = dir.path().join("ds.jsonl");
    std::fs::write(&path, stripped).unwrap();
    let out = mrkit(&["simplify", "--direction", "desimplify", "--dataset", path.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.json()["filled"], 26);
    let filled = std::fs::read_to_string(&path).unwrap();
    for (a, b) in filled.lines().zip(text.lines()) {
        let a: Value = serde_json::from_str(a).unwrap();
        let b: Value = serde_json::from_str(b).unwrap();
        assert_eq!(a["programs"]["ldcs"], b["programs"]["ldcs"]);
    }
}

#[test]
fn select_methods() {
    let base = [
        "select",
        "--dataset",
        "crates/core/data/geoquery.jsonl",
        "--split",
        "crates/core/data/geoquery_split.json",
        "--dialect",
        "funql",
        "--k",
        "10",
    ];
    let cov = mrkit(&[&base[..], &["--method", "coverage"]].concat());
    assert_eq!(cov.code, 0, "{}", cov.stderr);
    assert_eq!(cov.json()["coverage_fraction"], 0.75);
    let bm = mrkit(&[&base[..], &["--method", "bm25", "--query", "what rivers run through texas"]].concat());
    assert_eq!(bm.json()["ids"].as_array().unwrap().len(), 10);
    assert_eq!(mrkit(&[&base[..], &["--method", "bm25"]].concat()).code, 1);
    let rnd = mrkit(&[&base[..], &["--method", "random", "--seed", "0"]].concat());
    assert_eq!(rnd.json()["ids"][0], "geo-052");
}

#[test]
fn prompt_for_one_id() {
    let out = mrkit(&["prompt", "--config", "experiments/geo_replay/config.toml", "--id", "geo-005"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("Domain description:\n"));
    assert!(out.stdout.trim_end().ends_with("Solution:"));
    assert_eq!(mrkit(&["prompt", "--config", "experiments/geo_replay/config.toml", "--id", "nope"]).code, 1);
    let all = mrkit(&["prompt", "--config", "experiments/geo_replay/config.toml"]);
    assert_eq!(all.json().as_array().unwrap().len(), 10);
}

fn config_with_cache(dir: &Path, cache: &str) -> PathBuf {
    let text = std::fs::read_to_string(root().join("experiments/geo_replay/config.toml")).unwrap();
    let data = root().join("crates/core/data");
    let text = text
        .replace("../../crates/core/data", data.to_str().unwrap())
        .replace("cache = \"cache.jsonl\"", &format!("cache = \"{cache}\""));
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_with_missing_cache_still_completes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let config = config_with_cache(dir.path(), "empty.jsonl");
    let out = mrkit(&["run", "--config", config.to_str().unwrap(), "--seeds", "0"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stderr.contains("completions failed"), "{}", out.stderr);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report_seed0.json")).unwrap()).unwrap();
    assert_eq!(report["n_execution_failures"], report["n_total"]);
    assert!(report["verdicts"].as_array().unwrap().iter().all(|v| v["verdict"] == "execution-failure"));
}

#[test]
fn run_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_with_cache(dir.path(), "absent.jsonl");
    assert_eq!(mrkit(&["run", "--config", config.to_str().unwrap()]).code, 1);
    assert_eq!(mrkit(&["run", "--config", "/nonexistent.toml"]).code, 1);
}

#[test]
fn bootstrap_replays_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let output = dir.path().join("grown.jsonl");
    let out = mrkit(&[
        "bootstrap",
        "--dataset",
        "experiments/bootstrap/pool.jsonl",
        "--env",
        "geo",
        "--data",
        "crates/core/data/geobase.jsonl",
        "--target",
        "pymr",
        "--gold",
        "funql",
        "--dd-source",
        "crates/core/data/dd/geo_pymr.json",
        "--model",
        "gpt-4",
        "--cache",
        "experiments/bootstrap/cache.jsonl",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v = out.json();
    assert_eq!(v["seed_pool"], 5);
    assert_eq!(v["pool"], 9);
    assert_eq!(v["added"], serde_json::json!(["geo-015", "geo-026", "geo-039", "geo-040"]));
    assert_eq!(std::fs::read_to_string(&output).unwrap().lines().count(), 9);
}
