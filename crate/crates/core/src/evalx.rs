//! Execution-based and exact-match evaluation.
//!
//! Denotations are compared without regard to order, either as sets or as
//! multisets. Calendar deltas are compared as multisets of events. Person
//! names in calendar programs can be canonicalized onto the world's people
//! before execution so that invented names do not decide the verdict.

use std::collections::{BTreeSet, HashMap};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calenv::{self, CalendarWorld, DfsNode, Event, WorldDelta};
use crate::denotation::{Denotation, EntityKey, Outcome};
use crate::dispatch::{self, Dialect, Environment, ExecFailure};
use crate::pymr::EnvTag;

/// Relative tolerance for numeric answers.
pub const NUMBER_RTOL: f64 = 1e-9;

/// Heads whose bare-word arguments name people.
const PERSON_HEADS: &[&str] = &["with_attendee", "avoid_attendee", "FindManager", "FindTeamOf"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{names} distinct person names but the world has only {people} people")]
    PoolExhausted { names: usize, people: usize },
    #[error("name canonicalization is not defined for dialect {0}")]
    UnsupportedDialect(Dialect),
    #[error("gold program does not execute: {0}")]
    GoldFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonMode {
    DenotationSet,
    DenotationMultiset,
    State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonPolicy {
    pub mode: ComparisonMode,
    #[serde(default = "yes")]
    pub ignore_subject: bool,
    #[serde(default)]
    pub name_canonicalization: bool,
}

fn yes() -> bool {
    true
}

impl ComparisonPolicy {
    /// Geography deduplicates, the social network keeps multiplicity, the
    /// calendar compares created events with canonicalized names.
    pub fn for_env(env: EnvTag) -> Self {
        match env {
            EnvTag::Geo => ComparisonPolicy::denotation(ComparisonMode::DenotationSet),
            EnvTag::Social => ComparisonPolicy::denotation(ComparisonMode::DenotationMultiset),
            EnvTag::Calendar => {
                ComparisonPolicy { mode: ComparisonMode::State, ignore_subject: true, name_canonicalization: true }
            }
        }
    }

    pub fn denotation(mode: ComparisonMode) -> Self {
        ComparisonPolicy { mode, ignore_subject: true, name_canonicalization: false }
    }
}

pub fn numbers_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= NUMBER_RTOL * a.abs().max(b.abs())
}

pub fn compare_denotations(pred: &Denotation, gold: &Denotation, policy: &ComparisonPolicy) -> bool {
    match (pred, gold) {
        (Denotation::Number { number: a }, Denotation::Number { number: b }) => numbers_equal(a.value, b.value),
        (Denotation::Entities { entities: a }, Denotation::Entities { entities: b }) => match policy.mode {
            ComparisonMode::DenotationSet => {
                a.iter().collect::<BTreeSet<&EntityKey>>() == b.iter().collect::<BTreeSet<&EntityKey>>()
            }
            ComparisonMode::DenotationMultiset | ComparisonMode::State => sorted(a) == sorted(b),
        },
        _ => false,
    }
}

fn sorted<T: Ord + Clone>(items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.sort();
    v
}

type EventKey =
    (chrono::NaiveDateTime, chrono::NaiveDateTime, Option<String>, BTreeSet<String>, BTreeSet<String>, Option<String>);

fn event_key(e: &Event, ignore_subject: bool) -> EventKey {
    let norm = |s: &Option<String>| s.as_ref().map(|x| x.trim().to_lowercase()).filter(|x| !x.is_empty());
    (
        e.start,
        e.end,
        norm(&e.location),
        e.attendees.clone(),
        e.avoided.clone(),
        if ignore_subject { None } else { e.subject.clone() },
    )
}

/// Multiset equality of created events. Locations compare trimmed and
/// case-insensitively.
pub fn compare_states(pred: &WorldDelta, gold: &WorldDelta, policy: &ComparisonPolicy) -> bool {
    let keys = |d: &WorldDelta| {
        let mut v: Vec<EventKey> = d.created.iter().map(|e| event_key(e, policy.ignore_subject)).collect();
        v.sort();
        v
    };
    keys(pred) == keys(gold)
}

pub fn compare_outcomes(pred: &Outcome, gold: &Outcome, policy: &ComparisonPolicy) -> bool {
    match (pred, gold) {
        (Outcome::Denotation(a), Outcome::Denotation(b)) => compare_denotations(a, b, policy),
        (Outcome::Delta(a), Outcome::Delta(b)) => compare_states(a, b, policy),
        _ => false,
    }
}

/// Program text equality after collapsing whitespace runs and trimming.
pub fn exact_match(pred: &str, gold: &str) -> bool {
    normalize_ws(pred) == normalize_ws(gold)
}

pub fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A located person name inside a program text.
struct NameSpan {
    range: std::ops::Range<usize>,
    name: String,
}

fn pymr_names(text: &str) -> Vec<NameSpan> {
    static PATTERN: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = PATTERN.get_or_init(|| {
        Regex::new(r#"find_person\(\s*(?:name\s*=\s*)?(?:"([^"\\]*)"|'([^'\\]*)')"#).expect("valid pattern")
    });
    re.captures_iter(text)
        .filter_map(|c| c.get(1).or_else(|| c.get(2)))
        .map(|m| NameSpan { range: m.range(), name: m.as_str().to_string() })
        .collect()
}

fn dfs_names(node: &DfsNode, in_person_slot: bool, out: &mut Vec<String>) {
    match node {
        DfsNode::Word(w) if in_person_slot => out.push(w.clone()),
        DfsNode::Call { head, args } => {
            let slot = PERSON_HEADS.contains(&head.as_str());
            args.iter().for_each(|a| dfs_names(a, slot, out));
        }
        _ => {}
    }
}

fn dfs_rename(node: &mut DfsNode, in_person_slot: bool, map: &HashMap<String, String>) {
    match node {
        DfsNode::Word(w) if in_person_slot => {
            if let Some(new) = map.get(&w.to_lowercase()) {
                *w = new.clone();
            }
        }
        DfsNode::Call { head, args } => {
            let slot = PERSON_HEADS.contains(&head.as_str());
            args.iter_mut().for_each(|a| dfs_rename(a, slot, map));
        }
        _ => {}
    }
}

fn names_in(dialect: Dialect, text: &str) -> Result<Vec<String>, EvalError> {
    match dialect {
        Dialect::Pymr => Ok(pymr_names(text).into_iter().map(|s| s.name).collect()),
        Dialect::DataflowSimple => {
            let mut out = Vec::new();
            if let Ok(ast) = calenv::parse_dfs(text) {
                dfs_names(&ast.root, false, &mut out);
            }
            Ok(out)
        }
        other => Err(EvalError::UnsupportedDialect(other)),
    }
}

fn rename(dialect: Dialect, text: &str, map: &HashMap<String, String>) -> String {
    match dialect {
        Dialect::Pymr => {
            let mut out = String::with_capacity(text.len());
            let mut last = 0;
            for span in pymr_names(text) {
                out.push_str(&text[last..span.range.start]);
                out.push_str(map.get(&span.name.to_lowercase()).unwrap_or(&span.name));
                last = span.range.end;
            }
            out.push_str(&text[last..]);
            out
        }
        Dialect::DataflowSimple => match calenv::parse_dfs(text) {
            Ok(mut ast) => {
                dfs_rename(&mut ast.root, false, map);
                calenv::render_dfs(&ast)
            }
            Err(_) => text.to_string(),
        },
        _ => text.to_string(),
    }
}

/// Maps distinct person names (case-insensitive, first appearance across
/// gold then prediction) onto the world's people in order and rewrites
/// both programs with the same map. Unparseable programs pass through.
pub fn canonicalize_names(
    pred: (Dialect, &str),
    gold: (Dialect, &str),
    world: &CalendarWorld,
) -> Result<(String, String), EvalError> {
    let mut order: Vec<String> = Vec::new();
    for name in names_in(gold.0, gold.1)?.into_iter().chain(names_in(pred.0, pred.1)?) {
        let key = name.to_lowercase();
        if !order.contains(&key) {
            order.push(key);
        }
    }
    if order.len() > world.people.len() {
        return Err(EvalError::PoolExhausted { names: order.len(), people: world.people.len() });
    }
    let map: HashMap<String, String> = order.into_iter().zip(world.people.iter().map(|p| p.name.clone())).collect();
    Ok((rename(pred.0, pred.1, &map), rename(gold.0, gold.1, &map)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Correct,
    WrongResult,
    ExecutionFailure,
}

/// Scores a prediction's execution result against the gold outcome.
pub fn judge(pred: &Result<Outcome, ExecFailure>, gold: &Outcome, policy: &ComparisonPolicy) -> Verdict {
    match pred {
        Err(_) => Verdict::ExecutionFailure,
        Ok(p) if compare_outcomes(p, gold, policy) => Verdict::Correct,
        Ok(_) => Verdict::WrongResult,
    }
}

/// Verdict for one prediction with a short explanation when not correct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgement {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Executes prediction and gold against `env` and compares the outcomes.
/// Calendar programs are name-canonicalized first when the policy asks for
/// it. Only a gold program that fails to run is an error.
pub fn evaluate_program(
    pred: (Dialect, &str),
    gold: (Dialect, &str),
    env: &Environment,
    policy: &ComparisonPolicy,
) -> Result<Judgement, EvalError> {
    let (pred_text, gold_text) = match env {
        Environment::Calendar(world) if policy.name_canonicalization => match canonicalize_names(pred, gold, world) {
            Ok(pair) => pair,
            Err(e) => {
                return Ok(Judgement { verdict: Verdict::ExecutionFailure, detail: Some(e.to_string()) });
            }
        },
        _ => (pred.1.to_string(), gold.1.to_string()),
    };
    let gold_outcome = dispatch::execute(gold.0, &gold_text, env).map_err(|e| EvalError::GoldFailure(e.to_string()))?;
    let pred_outcome = dispatch::execute(pred.0, &pred_text, env);
    let verdict = judge(&pred_outcome, &gold_outcome, policy);
    let detail = match (&pred_outcome, verdict) {
        (Err(e), _) => Some(e.to_string()),
        (Ok(_), Verdict::WrongResult) => Some("outcome differs from gold".to_string()),
        _ => None,
    };
    Ok(Judgement { verdict, detail })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleVerdict {
    pub id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub seed: u64,
    pub n_total: usize,
    pub n_correct: usize,
    pub n_execution_failures: usize,
    pub accuracy: f64,
    pub verdicts: Vec<ExampleVerdict>,
}

impl AccuracyReport {
    pub fn new(seed: u64, verdicts: Vec<ExampleVerdict>) -> Self {
        let n_total = verdicts.len();
        let n_correct = verdicts.iter().filter(|v| v.verdict == Verdict::Correct).count();
        let n_execution_failures = verdicts.iter().filter(|v| v.verdict == Verdict::ExecutionFailure).count();
        let accuracy = if n_total == 0 { 0.0 } else { n_correct as f64 / n_total as f64 };
        AccuracyReport { seed, n_total, n_correct, n_execution_failures, accuracy, verdicts }
    }

    pub fn exec_failure_rate(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.n_execution_failures as f64 / self.n_total as f64
        }
    }
}

/// Mean and population standard deviation across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_seeds: usize,
    pub mean_accuracy: f64,
    pub stddev_accuracy: f64,
    pub mean_exec_failure_rate: f64,
}

pub fn aggregate(reports: &[AccuracyReport]) -> Aggregate {
    let n = reports.len();
    if n == 0 {
        return Aggregate { n_seeds: 0, mean_accuracy: 0.0, stddev_accuracy: 0.0, mean_exec_failure_rate: 0.0 };
    }
    let mean = reports.iter().map(|r| r.accuracy).sum::<f64>() / n as f64;
    let var = reports.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n as f64;
    let fail = reports.iter().map(AccuracyReport::exec_failure_rate).sum::<f64>() / n as f64;
    Aggregate { n_seeds: n, mean_accuracy: mean, stddev_accuracy: var.sqrt(), mean_exec_failure_rate: fail }
}

/// Builds one report per seed and their aggregate.
pub fn score_run(runs: Vec<(u64, Vec<ExampleVerdict>)>) -> (Vec<AccuracyReport>, Aggregate) {
    let reports: Vec<AccuracyReport> = runs.into_iter().map(|(s, v)| AccuracyReport::new(s, v)).collect();
    let agg = aggregate(&reports);
    (reports, agg)
}
