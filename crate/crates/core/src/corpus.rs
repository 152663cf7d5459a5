//! Datasets of (utterance, program) examples, train/test splits and seeded
//! demonstration sampling.
//!
//! Datasets are JSONL files, one example per line:
//! `{"id": .., "utterance": .., "programs": {dialect: text}, "tags": [..]}`.
//! Splits are JSON objects `{"name": .., "train": [ids], "test": [ids]}`.
//!
//! Sampling uses ChaCha8 (the `rand_chacha` crate) seeded through
//! `SeedableRng::seed_from_u64`, followed by a partial Fisher-Yates shuffle
//! (`SliceRandom::partial_shuffle`) over the train pool in split order. The
//! first `k` shuffled elements, in shuffle order, form the demonstration set.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::Dialect;

/// Tag prefix marking an example's domain for stratified sampling.
pub const DOMAIN_TAG_PREFIX: &str = "domain:";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate example id {0:?}")]
    DuplicateId(String),
    #[error("example {id:?} uses unknown dialect {dialect:?}")]
    UnknownDialect { id: String, dialect: String },
    #[error("example {id:?}: {dialect} program does not parse: {message}")]
    ProgramParse { id: String, dialect: Dialect, message: String },
    #[error("split refers to unknown id {0:?}")]
    UnknownId(String),
    #[error("id {0:?} is in both train and test")]
    Overlap(String),
    #[error("requested {requested} demonstrations but the pool has {available}")]
    PoolExhausted { requested: usize, available: usize },
    #[error("demonstration pool is empty")]
    EmptyPool,
    #[error("invalid split file: {0}")]
    SplitFormat(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub utterance: String,
    pub programs: IndexMap<Dialect, String>,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl Example {
    pub fn program(&self, dialect: Dialect) -> Option<&str> {
        self.programs.get(&dialect).map(String::as_str)
    }

    pub fn domain(&self) -> Option<&str> {
        self.tags.iter().find_map(|t| t.strip_prefix(DOMAIN_TAG_PREFIX))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    /// Dialects present, in first-appearance order.
    pub dialects: Vec<Dialect>,
    pub examples: Vec<Example>,
}

impl Dataset {
    /// Validates ids and program syntax.
    pub fn new(name: impl Into<String>, examples: Vec<Example>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        let mut dialects = Vec::new();
        for ex in &examples {
            if !seen.insert(ex.id.as_str()) {
                return Err(CorpusError::DuplicateId(ex.id.clone()));
            }
            for (d, text) in &ex.programs {
                d.check_syntax(text).map_err(|message| CorpusError::ProgramParse {
                    id: ex.id.clone(),
                    dialect: *d,
                    message,
                })?;
                if !dialects.contains(d) {
                    dialects.push(*d);
                }
            }
        }
        Ok(Dataset { name: name.into(), dialects, examples })
    }

    pub fn get(&self, id: &str) -> Option<&Example> {
        self.examples.iter().find(|e| e.id == id)
    }

    fn index(&self) -> HashMap<&str, &Example> {
        self.examples.iter().map(|e| (e.id.as_str(), e)).collect()
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, CorpusError> {
    let path = path.as_ref();
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_dataset(&name, &std::fs::read_to_string(path)?)
}

pub fn parse_dataset(name: &str, text: &str) -> Result<Dataset, CorpusError> {
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawExample =
            serde_json::from_str(line).map_err(|e| CorpusError::Parse { line: i + 1, message: e.to_string() })?;
        let mut programs = IndexMap::new();
        for (d, text) in raw.programs {
            let dialect = d
                .parse::<Dialect>()
                .map_err(|_| CorpusError::UnknownDialect { id: raw.id.clone(), dialect: d.clone() })?;
            programs.insert(dialect, text);
        }
        examples.push(Example { id: raw.id, utterance: raw.utterance, programs, tags: raw.tags });
    }
    Dataset::new(name, examples)
}

#[derive(Deserialize)]
struct RawExample {
    id: String,
    utterance: String,
    programs: IndexMap<String, String>,
    #[serde(default)]
    tags: Vec<String>,
}

/// One compact JSON object per line, fields in declaration order.
pub fn render_dataset(dataset: &Dataset) -> String {
    let mut out = String::new();
    for ex in &dataset.examples {
        out.push_str(&serde_json::to_string(ex).expect("examples serialize"));
        out.push('\n');
    }
    out
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    std::fs::write(path, render_dataset(dataset))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub name: String,
    #[serde(rename = "train")]
    pub train_ids: Vec<String>,
    #[serde(rename = "test")]
    pub test_ids: Vec<String>,
}

impl Split {
    pub fn validate(&self, dataset: &Dataset) -> Result<(), CorpusError> {
        let index = dataset.index();
        for id in self.train_ids.iter().chain(&self.test_ids) {
            if !index.contains_key(id.as_str()) {
                return Err(CorpusError::UnknownId(id.clone()));
            }
        }
        let train: HashSet<&str> = self.train_ids.iter().map(String::as_str).collect();
        if let Some(id) = self.test_ids.iter().find(|id| train.contains(id.as_str())) {
            return Err(CorpusError::Overlap(id.clone()));
        }
        Ok(())
    }

    /// Train examples in split order, optionally restricted to those
    /// annotated in `dialect`.
    pub fn train_pool<'d>(&self, dataset: &'d Dataset, dialect: Option<Dialect>) -> Vec<&'d Example> {
        select(dataset, &self.train_ids, dialect)
    }

    pub fn test_examples<'d>(&self, dataset: &'d Dataset) -> Vec<&'d Example> {
        select(dataset, &self.test_ids, None)
    }
}

fn select<'d>(dataset: &'d Dataset, ids: &[String], dialect: Option<Dialect>) -> Vec<&'d Example> {
    let index = dataset.index();
    ids.iter()
        .filter_map(|id| index.get(id.as_str()).copied())
        .filter(|e| dialect.is_none_or(|d| e.programs.contains_key(&d)))
        .collect()
}

pub fn load_split(path: impl AsRef<Path>, dataset: &Dataset) -> Result<Split, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    let split: Split = serde_json::from_str(&text).map_err(|e| CorpusError::SplitFormat(e.to_string()))?;
    split.validate(dataset)?;
    Ok(split)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Random,
    Coverage,
    Bm25,
}

impl SelectionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMethod::Random => "random",
            SelectionMethod::Coverage => "coverage",
            SelectionMethod::Bm25 => "bm25",
        }
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(SelectionMethod::Random),
            "coverage" => Ok(SelectionMethod::Coverage),
            "bm25" => Ok(SelectionMethod::Bm25),
            other => Err(format!("unknown selection method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoSet {
    pub examples: Vec<Example>,
    pub seed: u64,
    pub method: SelectionMethod,
}

impl DemoSet {
    pub fn ids(&self) -> Vec<&str> {
        self.examples.iter().map(|e| e.id.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    pub k: usize,
    pub seed: u64,
    /// Only examples annotated in this dialect enter the pool.
    pub dialect: Option<Dialect>,
    /// Guarantee this many demonstrations from every `domain:` tag.
    pub min_per_domain: Option<usize>,
}

impl SampleOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        SampleOptions { k, seed, dialect: None, min_per_domain: None }
    }
}

/// Uniform sample of `k` train examples without replacement.
pub fn sample_demos(dataset: &Dataset, split: &Split, k: usize, seed: u64) -> Result<DemoSet, CorpusError> {
    sample_demos_with(dataset, split, SampleOptions::new(k, seed))
}

pub fn sample_demos_with(dataset: &Dataset, split: &Split, opts: SampleOptions) -> Result<DemoSet, CorpusError> {
    let pool = split.train_pool(dataset, opts.dialect);
    let chosen = sample_from_pool(&pool, opts.k, opts.seed, opts.min_per_domain)?;
    Ok(DemoSet { examples: chosen.into_iter().cloned().collect(), seed: opts.seed, method: SelectionMethod::Random })
}

/// Seeded sample over an explicit pool.
pub fn sample_from_pool<'a>(
    pool: &[&'a Example],
    k: usize,
    seed: u64,
    min_per_domain: Option<usize>,
) -> Result<Vec<&'a Example>, CorpusError> {
    if pool.is_empty() {
        return Err(CorpusError::EmptyPool);
    }
    if k > pool.len() {
        return Err(CorpusError::PoolExhausted { requested: k, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(min) = min_per_domain.filter(|m| *m > 0) else {
        let mut items = pool.to_vec();
        let (chosen, _) = items.partial_shuffle(&mut rng, k);
        return Ok(chosen.to_vec());
    };

    let mut domains: IndexMap<&str, Vec<&'a Example>> = IndexMap::new();
    for ex in pool {
        domains.entry(ex.domain().unwrap_or("")).or_default().push(ex);
    }
    let required = min * domains.len();
    if required > k {
        return Err(CorpusError::PoolExhausted { requested: required, available: k });
    }
    let mut chosen = Vec::with_capacity(k);
    let mut taken = BTreeSet::new();
    for members in domains.values_mut() {
        if members.len() < min {
            return Err(CorpusError::PoolExhausted { requested: min, available: members.len() });
        }
        let (picked, _) = members.partial_shuffle(&mut rng, min);
        for ex in picked.iter() {
            taken.insert(ex.id.as_str());
            chosen.push(*ex);
        }
    }
    let mut rest: Vec<&'a Example> = pool.iter().copied().filter(|e| !taken.contains(e.id.as_str())).collect();
    let (fill, _) = rest.partial_shuffle(&mut rng, k - chosen.len());
    chosen.extend_from_slice(fill);
    Ok(chosen)
}
