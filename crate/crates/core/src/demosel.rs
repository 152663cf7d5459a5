//! Demonstration selection: greedy operator coverage and Okapi BM25.
//!
//! Coverage follows the greedy set-cover procedure literally:
//!
//! ```text
//! Z = {}, Z_curr = {}, curr = -inf
//! while |Z| < k:
//!     z* = argmax over pool - Z of setcov(S, Z_curr + {z})   (lowest index wins ties)
//!     if setcov(S, Z_curr + {z*}) > curr: add z* to Z and Z_curr, update curr
//!     else: Z_curr = {}, curr = -inf                          (start a new cover)
//! ```
//!
//! A reset makes every remaining candidate strictly improving, so the step
//! after a reset always adds the candidate covering most of `S` on its own,
//! even when that candidate adds nothing to `Z` as a whole.
//!
//! BM25 scores use
//! `idf(t) = max(0, ln((N - n_t + 0.5) / (n_t + 0.5)))` and
//! `score(q, d) = sum over query tokens t of idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))`,
//! summed in query-token order (repeated query tokens count repeatedly).
//! Ranking is by score descending, then id ascending.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type OperatorSet = BTreeSet<String>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DemoselError {
    #[error("requested {requested} demonstrations but the pool has {available}")]
    PoolExhausted { requested: usize, available: usize },
}

/// Number of structures in `s` covered by at least one chosen candidate.
pub fn setcov<'a>(s: &OperatorSet, chosen: impl IntoIterator<Item = &'a OperatorSet>) -> usize {
    let chosen: Vec<&OperatorSet> = chosen.into_iter().collect();
    s.iter().filter(|op| chosen.iter().any(|z| z.contains(*op))).count()
}

/// `setcov / |S|`; zero when `S` is empty.
pub fn coverage_fraction<'a>(s: &OperatorSet, chosen: impl IntoIterator<Item = &'a OperatorSet>) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    setcov(s, chosen) as f64 / s.len() as f64
}

/// Union of all candidate operator sets.
pub fn structure_set<'a>(candidates: impl IntoIterator<Item = &'a OperatorSet>) -> OperatorSet {
    candidates.into_iter().flatten().cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum GreedyStep {
    /// Candidate `index` joined both covers; `cov` is the new current cover.
    Add { index: usize, cov: usize },
    /// The best candidate did not improve the current cover.
    Reset { best: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedySelection {
    /// Pool indices in selection order.
    pub selected: Vec<usize>,
    pub trace: Vec<GreedyStep>,
}

pub fn greedy_select(candidates: &[OperatorSet], s: &OperatorSet, k: usize) -> Result<GreedySelection, DemoselError> {
    if k > candidates.len() {
        return Err(DemoselError::PoolExhausted { requested: k, available: candidates.len() });
    }
    let mut in_z = vec![false; candidates.len()];
    let mut selected = Vec::with_capacity(k);
    let mut trace = Vec::new();
    // Operators of S covered by Z_curr.
    let mut covered: BTreeSet<&String> = BTreeSet::new();
    let mut curr: Option<usize> = None;

    while selected.len() < k {
        let mut best: Option<(usize, usize)> = None;
        for (i, z) in candidates.iter().enumerate() {
            if in_z[i] {
                continue;
            }
            let gain = z.iter().filter(|op| s.contains(*op) && !covered.contains(op)).count();
            let cov = covered.len() + gain;
            if best.is_none_or(|(_, b)| cov > b) {
                best = Some((i, cov));
            }
        }
        let (i, next) = best.expect("pool larger than k");
        if curr.is_none_or(|c| next > c) {
            in_z[i] = true;
            selected.push(i);
            covered.extend(candidates[i].iter().filter(|op| s.contains(*op)));
            curr = Some(next);
            trace.push(GreedyStep::Add { index: i, cov: next });
        } else {
            covered.clear();
            curr = None;
            trace.push(GreedyStep::Reset { best: i });
        }
    }
    Ok(GreedySelection { selected, trace })
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.5, b: 0.75 }
    }
}

/// Precomputed statistics for a document pool.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    term_freqs: Vec<HashMap<String, usize>>,
    doc_lens: Vec<usize>,
    doc_freq: HashMap<String, usize>,
    avgdl: f64,
}

impl Bm25Index {
    pub fn new<'a>(docs: impl IntoIterator<Item = &'a str>, params: Bm25Params) -> Self {
        let mut term_freqs = Vec::new();
        let mut doc_lens = Vec::new();
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            let toks = tokenize(doc);
            let mut tf: HashMap<String, usize> = HashMap::new();
            for t in &toks {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *doc_freq.entry(t.clone()).or_default() += 1;
            }
            doc_lens.push(toks.len());
            term_freqs.push(tf);
        }
        let n = doc_lens.len();
        let avgdl = if n == 0 { 0.0 } else { doc_lens.iter().sum::<usize>() as f64 / n as f64 };
        Bm25Index { params, term_freqs, doc_lens, doc_freq, avgdl }
    }

    pub fn len(&self) -> usize {
        self.doc_lens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_lens.is_empty()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let nt = *self.doc_freq.get(term).unwrap_or(&0) as f64;
        ((n - nt + 0.5) / (nt + 0.5)).ln().max(0.0)
    }

    pub fn score(&self, query_tokens: &[String], doc: usize) -> f64 {
        if self.avgdl == 0.0 {
            return 0.0;
        }
        let Bm25Params { k1, b } = self.params;
        let norm = k1 * (1.0 - b + b * self.doc_lens[doc] as f64 / self.avgdl);
        let mut total = 0.0;
        for t in query_tokens {
            let tf = *self.term_freqs[doc].get(t).unwrap_or(&0) as f64;
            total += self.idf(t) * tf * (k1 + 1.0) / (tf + norm);
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub index: usize,
    pub id: String,
    pub score: f64,
}

/// Top-`k` pool entries for `query`. Pool entries are `(id, text)`.
pub fn bm25_rank(query: &str, pool: &[(&str, &str)], k: usize, params: Bm25Params) -> Vec<Ranked> {
    let index = Bm25Index::new(pool.iter().map(|(_, text)| *text), params);
    bm25_rank_with(&index, query, pool.iter().map(|(id, _)| *id), k)
}

/// Ranking against a prebuilt index; `ids` must follow index order.
pub fn bm25_rank_with<'a>(
    index: &Bm25Index,
    query: &str,
    ids: impl IntoIterator<Item = &'a str>,
    k: usize,
) -> Vec<Ranked> {
    let q = tokenize(query);
    let mut ranked: Vec<Ranked> = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| Ranked { index: i, id: id.to_string(), score: index.score(&q, i) })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    ranked.truncate(k);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(xs: &[&str]) -> OperatorSet {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn setcov_counts_union() {
        let s = ops(&["a", "b", "c"]);
        let z = [ops(&["a"]), ops(&["b", "x"])];
        assert_eq!(setcov(&s, &z), 2);
        assert_eq!(setcov(&s, std::iter::empty()), 0);
    }

    #[test]
    fn greedy_resets_after_stall() {
        let pool = [ops(&["a", "b"]), ops(&["a"]), ops(&["c"])];
        let s = structure_set(&pool);
        let sel = greedy_select(&pool, &s, 3).unwrap();
        assert_eq!(sel.selected, [0, 2, 1]);
        assert_eq!(
            sel.trace,
            [
                GreedyStep::Add { index: 0, cov: 2 },
                GreedyStep::Add { index: 2, cov: 3 },
                GreedyStep::Reset { best: 1 },
                GreedyStep::Add { index: 1, cov: 1 },
            ]
        );
    }

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("What's the  Texas-capital?"), ["what", "s", "the", "texas", "capital"]);
    }

    #[test]
    fn empty_pool_text() {
        let r = bm25_rank("texas", &[("b", ""), ("a", "")], 2, Bm25Params::default());
        assert_eq!(r.iter().map(|x| x.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert!(r.iter().all(|x| x.score == 0.0));
    }
}
