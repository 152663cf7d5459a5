//! Experiment configuration and the select, prompt, complete, execute,
//! score pipeline.
//!
//! Configs are TOML. Relative paths resolve against the config file's
//! directory. Demonstration pools hold only train examples annotated in
//! the experiment's dialect.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, load_dataset, load_split, CorpusError, Dataset, Example, SelectionMethod, Split};
use crate::demosel::{self, Bm25Index, Bm25Params, DemoselError, OperatorSet};
use crate::dispatch::{self, Dialect, EnvLoadError, Environment};
use crate::evalx::{self, evaluate_program, AccuracyReport, Aggregate, ComparisonPolicy, ExampleVerdict, Verdict};
use crate::llmio::{
    extract_program, Client, ClientMode, CompletionRequest, FailingTransport, HttpTransport, LlmError, ReplayCache,
    RetryPolicy, Transport,
};
use crate::promptkit::{self, load_dd_source, render_dd, DdVariant, Demonstration, PromptError, PromptSpec, Template};
use crate::pymr::EnvTag;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Env(#[from] EnvLoadError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Demosel(#[from] DemoselError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("gold program of {id} does not execute: {message}")]
    GoldFailure { id: String, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool error: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub method: SelectionMethod,
    pub k: usize,
    /// Minimum demonstrations per `domain:` tag under random selection.
    #[serde(default)]
    pub min_per_domain: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    pub mode: ClientMode,
    pub model: String,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_endpoint() -> String {
    "https://api.openai.com/v1/chat/completions".into()
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_max_tokens() -> u32 {
    512
}
fn default_attempts() -> u32 {
    4
}
fn default_timeout() -> u64 {
    60
}
fn default_template() -> String {
    promptkit::DEFAULT_TEMPLATE.into()
}
fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: PathBuf,
    pub split: PathBuf,
    pub environment: EnvTag,
    /// Geobase, social database or calendar world file.
    pub env_data: PathBuf,
    pub dialect: Dialect,
    pub dd_variant: DdVariant,
    #[serde(default)]
    pub dd_source: Option<PathBuf>,
    #[serde(default = "default_template")]
    pub template: String,
    pub selection: SelectionConfig,
    pub seeds: Vec<u64>,
    pub client: ClientConfig,
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Reads a config and makes its paths absolute.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        fix(&mut self.split);
        fix(&mut self.env_data);
        fix(&mut self.output_dir);
        if let Some(p) = &mut self.dd_source {
            fix(p);
        }
        if let Some(p) = &mut self.client.cache {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !self.dialect.supports(self.environment) {
            return bad(format!("dialect {} does not run on {}", self.dialect, self.environment.as_str()));
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if self.dd_variant != DdVariant::None && self.dd_source.is_none() {
            return bad(format!("dd_variant {} needs dd_source", self.dd_variant.as_str()));
        }
        let mut files = vec![&self.dataset, &self.split, &self.env_data];
        files.extend(self.dd_source.as_ref());
        if self.client.mode == ClientMode::Replay {
            match &self.client.cache {
                Some(c) => files.push(c),
                None => return bad("replay mode needs client.cache".into()),
            }
        }
        for f in files {
            if !f.is_file() {
                return bad(format!("file {} does not exist", f.display()));
            }
        }
        Ok(())
    }
}

/// A loaded, validated experiment.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dataset: Dataset,
    pub split: Split,
    pub env: Environment,
    pub dd_text: String,
    pub policy: ComparisonPolicy,
    template: Template,
}

/// One model output and its verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub dialect: Dialect,
    pub program: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub report: AccuracyReport,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub runs: Vec<SeedRun>,
    pub aggregate: Aggregate,
}

/// Demonstrations chosen for a whole seed, or per test example.
enum Demos<'d> {
    Fixed(Vec<&'d Example>),
    PerTest(Bm25Index, Vec<&'d Example>),
}

impl Experiment {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::from_config(ExperimentConfig::load(path)?)
    }

    pub fn from_config(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let dataset = load_dataset(&config.dataset)?;
        let split = load_split(&config.split, &dataset)?;
        if split.test_ids.is_empty() {
            return Err(ExperimentError::Config("split has no test examples".into()));
        }
        let env = Environment::load(config.environment, &config.env_data)?;
        let dd_text = match &config.dd_source {
            Some(p) if config.dd_variant != DdVariant::None => {
                let src = load_dd_source(p)?;
                if src.environment != config.environment || src.dialect != config.dialect {
                    return Err(ExperimentError::Config(format!(
                        "DD source {} is for {}/{}",
                        p.display(),
                        src.environment.as_str(),
                        src.dialect
                    )));
                }
                render_dd(&src, config.dd_variant)
            }
            _ => String::new(),
        };
        let template = Template::builtin(&config.template)?;
        let policy = ComparisonPolicy::for_env(config.environment);
        let exp = Experiment { config, dataset, split, env, dd_text, policy, template };
        for ex in exp.split.test_examples(&exp.dataset) {
            let (d, text) = exp.gold_program(ex)?;
            dispatch::execute(d, text, &exp.env)
                .map_err(|e| ExperimentError::GoldFailure { id: ex.id.clone(), message: e.to_string() })?;
        }
        Ok(exp)
    }

    /// The experiment dialect's program if annotated, else the first
    /// annotated dialect that runs on the environment.
    pub fn gold_program<'e>(&self, ex: &'e Example) -> Result<(Dialect, &'e str), ExperimentError> {
        if let Some(p) = ex.program(self.config.dialect) {
            return Ok((self.config.dialect, p));
        }
        ex.programs.iter().find(|(d, _)| d.supports(self.config.environment)).map(|(d, p)| (*d, p.as_str())).ok_or_else(
            || ExperimentError::GoldFailure { id: ex.id.clone(), message: "no runnable gold program".into() },
        )
    }

    pub fn pool(&self) -> Vec<&Example> {
        self.split.train_pool(&self.dataset, Some(self.config.dialect))
    }

    fn operator_sets(&self, pool: &[&Example]) -> Vec<OperatorSet> {
        pool.iter()
            .map(|e| {
                self.config
                    .dialect
                    .operators(e.program(self.config.dialect).expect("annotated pool"))
                    .unwrap_or_default()
            })
            .collect()
    }

    fn demos_for_seed(&self, seed: u64) -> Result<Demos<'_>, ExperimentError> {
        let pool = self.pool();
        let sel = &self.config.selection;
        Ok(match sel.method {
            SelectionMethod::Random => Demos::Fixed(corpus::sample_from_pool(&pool, sel.k, seed, sel.min_per_domain)?),
            SelectionMethod::Coverage => {
                let sets = self.operator_sets(&pool);
                let s = demosel::structure_set(&sets);
                let chosen = demosel::greedy_select(&sets, &s, sel.k)?;
                Demos::Fixed(chosen.selected.iter().map(|&i| pool[i]).collect())
            }
            SelectionMethod::Bm25 => {
                if sel.k > pool.len() {
                    return Err(CorpusError::PoolExhausted { requested: sel.k, available: pool.len() }.into());
                }
                let index = Bm25Index::new(pool.iter().map(|e| e.utterance.as_str()), Bm25Params::default());
                Demos::PerTest(index, pool)
            }
        })
    }

    fn pick<'d>(&self, demos: &Demos<'d>, test: &Example) -> Vec<&'d Example> {
        match demos {
            Demos::Fixed(v) => v.clone(),
            Demos::PerTest(index, pool) => demosel::bm25_rank_with(
                index,
                &test.utterance,
                pool.iter().map(|e| e.id.as_str()),
                self.config.selection.k,
            )
            .into_iter()
            .map(|r| pool[r.index])
            .collect(),
        }
    }

    fn spec(&self, demos: &[&Example], test: &Example) -> PromptSpec {
        let dialect = self.config.dialect;
        PromptSpec {
            dd_variant: self.config.dd_variant,
            dd_text: self.dd_text.clone(),
            demonstrations: demos
                .iter()
                .map(|d| Demonstration {
                    utterance: d.utterance.clone(),
                    program: d.program(dialect).expect("annotated pool").to_string(),
                })
                .collect(),
            test_utterance: test.utterance.clone(),
            dialect,
        }
    }

    pub fn request(&self, prompt: String) -> CompletionRequest {
        let c = &self.config.client;
        let mut req = CompletionRequest::new(&c.model, prompt);
        req.temperature = c.temperature;
        req.max_tokens = c.max_tokens;
        req.stop = vec!["\nQuery:".to_string()];
        req
    }

    /// Prompts for every test example under `seed`, in split order.
    pub fn prompts(&self, seed: u64) -> Result<Vec<(String, String)>, ExperimentError> {
        let demos = self.demos_for_seed(seed)?;
        self.split
            .test_examples(&self.dataset)
            .into_iter()
            .map(|t| {
                let prompt = promptkit::build_prompt_with(&self.template, &self.spec(&self.pick(&demos, t), t))?;
                Ok((t.id.clone(), prompt))
            })
            .collect()
    }

    pub fn run(&self, client: &Client) -> Result<RunOutput, ExperimentError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.config.jobs).build()?;
        let mut runs = Vec::new();
        for &seed in &self.config.seeds {
            let prompts = self.prompts(seed)?;
            let tests = self.split.test_examples(&self.dataset);
            let results: Vec<(ExampleVerdict, Prediction)> = pool.install(|| {
                tests
                    .par_iter()
                    .zip(prompts.par_iter())
                    .map(|(t, (_, prompt))| self.score_one(client, t, prompt))
                    .collect()
            });
            let (verdicts, predictions) = results.into_iter().unzip();
            runs.push(SeedRun { report: AccuracyReport::new(seed, verdicts), predictions });
        }
        let reports: Vec<AccuracyReport> = runs.iter().map(|r| r.report.clone()).collect();
        Ok(RunOutput { aggregate: evalx::aggregate(&reports), runs })
    }

    fn score_one(&self, client: &Client, test: &Example, prompt: &str) -> (ExampleVerdict, Prediction) {
        let dialect = self.config.dialect;
        let failure = |program: String, detail: String| {
            (
                ExampleVerdict { id: test.id.clone(), verdict: Verdict::ExecutionFailure, detail: Some(detail) },
                Prediction { id: test.id.clone(), dialect, program },
            )
        };
        let completion = match client.complete(&self.request(prompt.to_string())) {
            Ok(c) => c,
            Err(e) => return failure(String::new(), format!("completion failed: {e}")),
        };
        let program = extract_program(&completion);
        let (gd, gold) = self.gold_program(test).expect("checked at load");
        match evaluate_program((dialect, &program), (gd, gold), &self.env, &self.policy) {
            Ok(j) => (
                ExampleVerdict { id: test.id.clone(), verdict: j.verdict, detail: j.detail },
                Prediction { id: test.id.clone(), dialect, program },
            ),
            Err(e) => failure(program, e.to_string()),
        }
    }

    /// Client per the config. Replay never gets a network transport;
    /// `transport` replaces the HTTP transport in live and record modes.
    pub fn client(&self, transport: Option<Box<dyn Transport>>) -> Result<Client, ExperimentError> {
        build_client(&self.config.client, transport)
    }
}

pub fn build_client(cfg: &ClientConfig, transport: Option<Box<dyn Transport>>) -> Result<Client, ExperimentError> {
    let cache = match &cfg.cache {
        Some(p) => ReplayCache::open(p)?,
        None => ReplayCache::in_memory(),
    };
    let transport: Box<dyn Transport> = match (cfg.mode, transport) {
        (ClientMode::Replay, _) => Box::new(FailingTransport::default()),
        (_, Some(t)) => t,
        (_, None) => Box::new(HttpTransport::new(
            &cfg.endpoint,
            &cfg.api_key_env,
            std::time::Duration::from_secs(cfg.timeout_secs),
        )),
    };
    let retry = RetryPolicy { max_attempts: cfg.max_attempts, ..RetryPolicy::default() };
    Ok(Client::new(transport, cache, cfg.mode).with_retry(retry))
}

pub const CSV_HEADER: [&str; 7] = ["seed", "split", "dialect", "dd_variant", "k", "accuracy", "exec_failure_rate"];

/// One row per seed followed by a `mean` row.
pub fn render_csv(cfg: &ExperimentConfig, split_name: &str, out: &RunOutput) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let k = cfg.selection.k.to_string();
    let mut row = |seed: String, acc: f64, fail: f64| {
        w.write_record([
            seed.as_str(),
            split_name,
            cfg.dialect.name(),
            cfg.dd_variant.as_str(),
            k.as_str(),
            &acc.to_string(),
            &fail.to_string(),
        ])
    };
    for r in &out.runs {
        row(r.report.seed.to_string(), r.report.accuracy, r.report.exec_failure_rate())?;
    }
    row("mean".into(), out.aggregate.mean_accuracy, out.aggregate.mean_exec_failure_rate)?;
    let bytes = w.into_inner().map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Files written by [`write_outputs`].
pub const RESULTS_CSV: &str = "results.csv";
pub const AGGREGATE_JSON: &str = "aggregate.json";

/// Writes `results.csv`, `aggregate.json`, and per seed
/// `report_seed{N}.json` plus `predictions_seed{N}.jsonl`.
pub fn write_outputs(exp: &Experiment, out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> Result<(), ExperimentError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
        Ok(())
    };
    for r in &out.runs {
        put(format!("report_seed{}.json", r.report.seed), pretty(&r.report))?;
        let lines: String =
            r.predictions.iter().map(|p| serde_json::to_string(p).expect("serializable") + "\n").collect();
        put(format!("predictions_seed{}.jsonl", r.report.seed), lines)?;
    }
    put(RESULTS_CSV.into(), render_csv(&exp.config, &exp.split.name, out)?)?;
    let agg = serde_json::json!({
        "name": exp.config.name,
        "split": exp.split.name,
        "dialect": exp.config.dialect,
        "dd_variant": exp.config.dd_variant,
        "k": exp.config.selection.k,
        "seeds": exp.config.seeds,
        "aggregate": out.aggregate,
    });
    put(AGGREGATE_JSON.into(), pretty(&agg))?;
    Ok(written)
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Demonstration ids chosen by a selection method, with coverage of the
/// pool's operator set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: SelectionMethod,
    pub k: usize,
    pub seed: u64,
    pub dialect: Dialect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub ids: Vec<String>,
    pub coverage_fraction: f64,
}

/// Runs one selection method over the annotated train pool of a split.
pub fn select_demos(
    dataset: &Dataset,
    split: &Split,
    dialect: Dialect,
    method: SelectionMethod,
    k: usize,
    seed: u64,
    query: Option<&str>,
) -> Result<SelectionReport, ExperimentError> {
    let pool = split.train_pool(dataset, Some(dialect));
    let sets: Vec<OperatorSet> =
        pool.iter().map(|e| dialect.operators(e.program(dialect).expect("annotated")).unwrap_or_default()).collect();
    let s = demosel::structure_set(&sets);
    let indices: Vec<usize> = match method {
        SelectionMethod::Random => {
            let chosen = corpus::sample_from_pool(&pool, k, seed, None)?;
            chosen.iter().map(|c| pool.iter().position(|p| p.id == c.id).expect("from pool")).collect()
        }
        SelectionMethod::Coverage => demosel::greedy_select(&sets, &s, k)?.selected,
        SelectionMethod::Bm25 => {
            let q = query.ok_or_else(|| ExperimentError::Config("bm25 selection needs a query".into()))?;
            if k > pool.len() {
                return Err(CorpusError::PoolExhausted { requested: k, available: pool.len() }.into());
            }
            let docs: Vec<(&str, &str)> = pool.iter().map(|e| (e.id.as_str(), e.utterance.as_str())).collect();
            demosel::bm25_rank(q, &docs, k, Bm25Params::default()).into_iter().map(|r| r.index).collect()
        }
    };
    let chosen: BTreeSet<usize> = indices.iter().copied().collect();
    Ok(SelectionReport {
        method,
        k,
        seed,
        dialect,
        query: query.map(str::to_string),
        ids: indices.iter().map(|&i| pool[i].id.clone()).collect(),
        coverage_fraction: demosel::coverage_fraction(&s, chosen.iter().map(|&i| &sets[i])),
    })
}
