//! Completion client with record/replay caching, and annotation
//! bootstrapping.
//!
//! The cache is an append-only JSONL file. Each line holds one
//! [`CacheEntry`] keyed by the SHA-256 of the canonical JSON encoding
//! `{"model":..,"prompt":..,"temperature":..}`. The entry also stores the
//! SHA-256 of the prompt alone, which is checked on every hit.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{sample_from_pool, CorpusError, Example};
use crate::dispatch::{Dialect, Environment};
use crate::evalx::{evaluate_program, ComparisonPolicy, Verdict};
use crate::promptkit::{build_prompt, DdVariant, Demonstration, PromptError, PromptSpec};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("replay cache has no entry for fingerprint {fingerprint}")]
    CacheMiss { fingerprint: String },
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default)]
    pub stop: Vec<String>,
}

impl CompletionRequest {
    pub fn new(model: impl Into<String>, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            model: model.into(),
            temperature: 0.0,
            max_tokens: 512,
            stop: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical `(model, prompt, temperature)` encoding.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canon<'a> {
            model: &'a str,
            prompt: &'a str,
            temperature: f64,
        }
        let canon = Canon { model: &self.model, prompt: &self.prompt, temperature: self.temperature };
        sha256_hex(serde_json::to_string(&canon).expect("serializable").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub fingerprint: String,
    pub model: String,
    pub temperature: f64,
    pub prompt_sha256: String,
    pub completion: String,
}

/// In-memory view of a JSONL cache file plus its append handle.
#[derive(Debug, Default)]
pub struct ReplayCache {
    path: Option<PathBuf>,
    entries: HashMap<String, CacheEntry>,
}

impl ReplayCache {
    pub fn in_memory() -> Self {
        ReplayCache::default()
    }

    /// Loads `path`; a missing file is an empty cache.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let mut cache = ReplayCache { path: Some(path.clone()), entries: HashMap::new() };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => return Err(e.into()),
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: CacheEntry =
                serde_json::from_str(line).map_err(|e| LlmError::Cache(format!("line {}: {e}", i + 1)))?;
            cache.insert(entry)?;
        }
        Ok(cache)
    }

    fn insert(&mut self, entry: CacheEntry) -> Result<(), LlmError> {
        match self.entries.get(&entry.fingerprint) {
            Some(old) if old != &entry => {
                Err(LlmError::Cache(format!("conflicting entries for fingerprint {}", entry.fingerprint)))
            }
            Some(_) => Ok(()),
            None => {
                self.entries.insert(entry.fingerprint.clone(), entry);
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, req: &CompletionRequest) -> Result<Option<&CacheEntry>, LlmError> {
        let fp = req.fingerprint();
        match self.entries.get(&fp) {
            Some(e) if e.prompt_sha256 != sha256_hex(req.prompt.as_bytes()) => {
                Err(LlmError::Cache(format!("prompt digest mismatch for fingerprint {fp}")))
            }
            other => Ok(other),
        }
    }

    /// Adds an entry and appends it to the backing file.
    pub fn append(&mut self, req: &CompletionRequest, completion: &str) -> Result<(), LlmError> {
        let entry = CacheEntry {
            fingerprint: req.fingerprint(),
            model: req.model.clone(),
            temperature: req.temperature,
            prompt_sha256: sha256_hex(req.prompt.as_bytes()),
            completion: completion.to_string(),
        };
        if self.entries.contains_key(&entry.fingerprint) {
            return self.insert(entry);
        }
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", serde_json::to_string(&entry).expect("serializable"))?;
        }
        self.insert(entry)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("transient: {0}")]
    Transient(String),
    #[error("{0}")]
    Fatal(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// Something that turns a request into completion text.
pub trait Transport: Send + Sync {
    fn send(&self, req: &CompletionRequest) -> Result<String, TransportError>;
}

/// OpenAI-style chat completion endpoint.
pub struct HttpTransport {
    pub endpoint: String,
    pub api_key_env: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, api_key_env: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        HttpTransport { endpoint: endpoint.into(), api_key_env: api_key_env.into(), agent }
    }
}

impl Transport for HttpTransport {
    fn send(&self, req: &CompletionRequest) -> Result<String, TransportError> {
        let key = std::env::var(&self.api_key_env)
            .map_err(|_| TransportError::Fatal(format!("environment variable {} is not set", self.api_key_env)))?;
        let body = serde_json::json!({
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "stop": if req.stop.is_empty() { serde_json::Value::Null } else { serde_json::json!(req.stop) },
        });
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
                    TransportError::Transient(format!("http status {code}"))
                }
                ureq::Error::StatusCode(code) => TransportError::Fatal(format!("http status {code}")),
                ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::ConnectionFailed => {
                    TransportError::Transient(e.to_string())
                }
                other => TransportError::Fatal(other.to_string()),
            })?;
        let json: serde_json::Value =
            resp.body_mut().read_json().map_err(|e| TransportError::Malformed(e.to_string()))?;
        json.pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| TransportError::Malformed("missing choices[0].message.content".into()))
    }
}

/// Answers from a fixed table keyed by the prompt's final query line.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTransport {
    answers: HashMap<String, String>,
}

impl ScriptedTransport {
    pub fn new(answers: HashMap<String, String>) -> Self {
        ScriptedTransport { answers }
    }

    /// Reads a JSON object mapping utterances to completions.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)?;
        let answers = serde_json::from_str(&text).map_err(|e| LlmError::Malformed(e.to_string()))?;
        Ok(ScriptedTransport { answers })
    }
}

/// The text after the last `Query: ` line of a prompt.
pub fn final_query(prompt: &str) -> Option<&str> {
    prompt.lines().rev().find_map(|l| l.strip_prefix("Query: ")).map(str::trim)
}

impl Transport for ScriptedTransport {
    fn send(&self, req: &CompletionRequest) -> Result<String, TransportError> {
        let q = final_query(&req.prompt).ok_or_else(|| TransportError::Fatal("prompt has no query line".into()))?;
        self.answers.get(q).cloned().ok_or_else(|| TransportError::Fatal(format!("no scripted answer for {q:?}")))
    }
}

/// Refuses every request and counts attempts.
#[derive(Debug, Default)]
pub struct FailingTransport {
    calls: AtomicUsize,
}

impl FailingTransport {
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for FailingTransport {
    fn send(&self, _req: &CompletionRequest) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(TransportError::Fatal("network access is disabled".into()))
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn send(&self, req: &CompletionRequest) -> Result<String, TransportError> {
        (**self).send(req)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientMode {
    Live,
    Record,
    Replay,
}

impl std::str::FromStr for ClientMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(ClientMode::Live),
            "record" => Ok(ClientMode::Record),
            "replay" => Ok(ClientMode::Replay),
            other => Err(format!("unknown client mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 4, base_delay: Duration::from_millis(500) }
    }
}

pub struct Client {
    transport: Box<dyn Transport>,
    cache: Mutex<ReplayCache>,
    mode: ClientMode,
    retry: RetryPolicy,
}

impl Client {
    pub fn new(transport: Box<dyn Transport>, cache: ReplayCache, mode: ClientMode) -> Self {
        Client { transport, cache: Mutex::new(cache), mode, retry: RetryPolicy::default() }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> ClientMode {
        self.mode
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// Replay reads the cache only. Record serves cached entries and
    /// appends new ones. Live always calls the transport.
    pub fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        req.validate()?;
        if self.mode != ClientMode::Live {
            let cache = self.cache.lock().expect("cache lock");
            if let Some(hit) = cache.lookup(req)? {
                return Ok(hit.completion.clone());
            }
            if self.mode == ClientMode::Replay {
                return Err(LlmError::CacheMiss { fingerprint: req.fingerprint() });
            }
        }
        let text = self.send_with_retry(req)?;
        if self.mode == ClientMode::Record {
            self.cache.lock().expect("cache lock").append(req, &text)?;
        }
        Ok(text)
    }

    fn send_with_retry(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            match self.transport.send(req) {
                Ok(text) => return Ok(text),
                Err(TransportError::Transient(msg)) => {
                    log::warn!("transient completion failure (attempt {}): {msg}", attempt + 1);
                    last = msg;
                    if attempt + 1 < attempts {
                        std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt));
                    }
                }
                Err(TransportError::Fatal(msg)) => {
                    return Err(LlmError::Transport { attempts: attempt + 1, message: msg })
                }
                Err(TransportError::Malformed(msg)) => return Err(LlmError::Malformed(msg)),
            }
        }
        Err(LlmError::Transport { attempts, message: last })
    }
}

/// Pulls a program out of a completion: the first fenced block, else a
/// `def answer` function, else the text up to the first blank line or
/// `Query:` line.
pub fn extract_program(completion: &str) -> String {
    let lines: Vec<&str> = completion.lines().collect();
    if let Some(open) = lines.iter().position(|l| l.trim_start().starts_with("```")) {
        let body: Vec<&str> =
            lines[open + 1..].iter().take_while(|l| !l.trim_start().starts_with("```")).copied().collect();
        return body.join("\n").trim_matches('\n').trim_end().to_string();
    }
    if let Some(start) = lines.iter().position(|l| l.starts_with("def answer")) {
        let mut end = start + 1;
        while end < lines.len() && (lines[end].trim().is_empty() || lines[end].starts_with([' ', '\t'])) {
            end += 1;
        }
        return lines[start..end].join("\n").trim_end().to_string();
    }
    let body: Vec<&str> = lines
        .iter()
        .skip_while(|l| l.trim().is_empty())
        .take_while(|l| !l.trim().is_empty() && !l.starts_with("Query:"))
        .copied()
        .collect();
    body.join("\n").trim().to_string()
}

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("seed pool is empty")]
    EmptySeedPool,
    #[error("example {id:?} has no {dialect} program")]
    MissingProgram { id: String, dialect: Dialect },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    /// Dialect being annotated.
    pub target: Dialect,
    /// Dialect of the existing gold programs.
    pub gold: Dialect,
    /// Full domain description text.
    pub dd_text: String,
    pub k: usize,
    pub seed: u64,
    pub passes: usize,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub policy: ComparisonPolicy,
}

pub const DEFAULT_BOOTSTRAP_PASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassLog {
    pub pass: usize,
    pub attempted: usize,
    pub added: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub pool: Vec<Example>,
    pub added: Vec<String>,
    pub passes: Vec<PassLog>,
}

/// Grows `seed_pool` with model-written `target` programs whose execution
/// matches the gold program. Each attempt samples `k` demonstrations from
/// the current pool with seed `seed + 1_000_003 * pass + position`. A
/// client error ends the current pass; a pass that adds nothing ends the
/// loop early.
pub fn bootstrap_annotations(
    seed_pool: &[Example],
    unlabeled: &[Example],
    env: &Environment,
    cfg: &BootstrapConfig,
    client: &Client,
) -> Result<BootstrapResult, BootstrapError> {
    if seed_pool.is_empty() {
        return Err(BootstrapError::EmptySeedPool);
    }
    for ex in seed_pool {
        if ex.program(cfg.target).is_none() {
            return Err(BootstrapError::MissingProgram { id: ex.id.clone(), dialect: cfg.target });
        }
    }
    for ex in unlabeled {
        if ex.program(cfg.gold).is_none() {
            return Err(BootstrapError::MissingProgram { id: ex.id.clone(), dialect: cfg.gold });
        }
    }
    let mut pool: Vec<Example> = seed_pool.to_vec();
    let mut added_all = Vec::new();
    let mut logs = Vec::new();
    for pass in 0..cfg.passes {
        let mut log = PassLog { pass, attempted: 0, added: Vec::new(), error: None };
        let pending: Vec<&Example> = unlabeled.iter().filter(|u| !pool.iter().any(|p| p.id == u.id)).collect();
        if pending.is_empty() {
            break;
        }
        for (pos, ex) in pending.into_iter().enumerate() {
            let refs: Vec<&Example> = pool.iter().collect();
            let seed = cfg.seed.wrapping_add(1_000_003 * pass as u64).wrapping_add(pos as u64);
            let demos = sample_from_pool(&refs, cfg.k.min(refs.len()), seed, None)?;
            let spec = PromptSpec {
                dd_variant: if cfg.dd_text.is_empty() { DdVariant::None } else { DdVariant::Full },
                dd_text: cfg.dd_text.clone(),
                demonstrations: demos
                    .iter()
                    .map(|d| Demonstration {
                        utterance: d.utterance.clone(),
                        program: d.program(cfg.target).expect("pool programs checked").to_string(),
                    })
                    .collect(),
                test_utterance: ex.utterance.clone(),
                dialect: cfg.target,
            };
            let mut req = CompletionRequest::new(&cfg.model, build_prompt(&spec)?);
            req.temperature = cfg.temperature;
            req.max_tokens = cfg.max_tokens;
            log.attempted += 1;
            let completion = match client.complete(&req) {
                Ok(c) => c,
                Err(e) => {
                    log::warn!("bootstrap pass {pass} stopped at {}: {e}", ex.id);
                    log.error = Some(format!("{}: {e}", ex.id));
                    break;
                }
            };
            let candidate = extract_program(&completion);
            let gold = ex.program(cfg.gold).expect("checked above");
            match evaluate_program((cfg.target, &candidate), (cfg.gold, gold), env, &cfg.policy) {
                Ok(j) if j.verdict == Verdict::Correct => {
                    let mut new = ex.clone();
                    new.programs.insert(cfg.target, candidate);
                    log.added.push(new.id.clone());
                    pool.push(new);
                }
                Ok(_) => {}
                Err(e) => log::warn!("gold program of {} does not execute: {e}", ex.id),
            }
        }
        let stalled = log.added.is_empty();
        added_all.extend(log.added.iter().cloned());
        logs.push(log);
        if stalled {
            break;
        }
    }
    Ok(BootstrapResult { pool, added: added_all, passes: logs })
}
