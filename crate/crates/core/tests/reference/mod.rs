#![allow(dead_code)]

use mrkit::demosel::{GreedyStep, OperatorSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;

/// Plain transcription of the greedy cover loop: argmax over the unused pool
/// of setcov(S, Z_curr + z), lowest index on ties, reset when not improving.
pub fn reference_greedy(pool: &[OperatorSet], s: &OperatorSet, k: usize) -> (Vec<usize>, Vec<GreedyStep>) {
    let cov =
        |ids: &[usize]| -> i64 { s.iter().filter(|op| ids.iter().any(|&i| pool[i].contains(*op))).count() as i64 };
    let mut z: Vec<usize> = Vec::new();
    let mut z_curr: Vec<usize> = Vec::new();
    let mut curr_cov = i64::MIN;
    let mut trace = Vec::new();
    while z.len() < k {
        let mut best_i = usize::MAX;
        let mut best_cov = i64::MIN;
        for i in 0..pool.len() {
            if z.contains(&i) {
                continue;
            }
            let mut trial = z_curr.clone();
            trial.push(i);
            let c = cov(&trial);
            if best_i == usize::MAX || c > best_cov {
                best_i = i;
                best_cov = c;
            }
        }
        if best_cov > curr_cov {
            z.push(best_i);
            z_curr.push(best_i);
            curr_cov = best_cov;
            trace.push(GreedyStep::Add { index: best_i, cov: best_cov as usize });
        } else {
            z_curr.clear();
            curr_cov = i64::MIN;
            trace.push(GreedyStep::Reset { best: best_i });
        }
    }
    (z, trace)
}

pub fn random_pool(rng: &mut ChaCha8Rng) -> Vec<OperatorSet> {
    let n_ops = rng.gen_range(1..=10);
    let n = rng.gen_range(1..=12);
    (0..n).map(|_| (0..n_ops).filter(|_| rng.gen_bool(0.3)).map(|o| format!("op{o}")).collect()).collect()
}

/// FunQL operator names read straight off the text: every `name(` except the
/// `answer` wrapper, plus the bare `all` constant.
pub fn funql_ops_by_regex(text: &str) -> OperatorSet {
    let call = Regex::new(r"([a-z_0-9]+)\s*\(").unwrap();
    let bare_all = Regex::new(r"[(,]\s*all\s*[),]").unwrap();
    let mut out: OperatorSet = call.captures_iter(text).map(|c| c[1].to_string()).filter(|o| o != "answer").collect();
    if bare_all.is_match(text) {
        out.insert("all".into());
    }
    out
}

pub fn naive_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Okapi BM25 recomputed from scratch per (query term, document).
pub fn naive_bm25(query: &str, pool: &[(String, String)], k: usize, k1: f64, b: f64) -> Vec<String> {
    let docs: Vec<Vec<String>> = pool.iter().map(|(_, t)| naive_tokens(t)).collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let q = naive_tokens(query);
    let mut scored: Vec<(f64, &str)> = docs
        .iter()
        .zip(pool)
        .map(|(d, (id, _))| {
            let mut score = 0.0;
            if avgdl > 0.0 {
                for term in &q {
                    let df = docs.iter().filter(|o| o.contains(term)).count() as f64;
                    let idf = ((n - df + 0.5) / (df + 0.5)).ln().max(0.0);
                    let tf = d.iter().filter(|t| *t == term).count() as f64;
                    score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avgdl));
                }
            }
            (score, id.as_str())
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
    scored.into_iter().take(k).map(|(_, id)| id.to_string()).collect()
}

pub fn random_bm25_instance(rng: &mut ChaCha8Rng) -> (String, Vec<(String, String)>, usize) {
    const VOCAB: [&str; 9] = ["river", "state", "Texas", "city", "the", "of", "largest", "how", "many"];
    fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
        let n = rng.gen_range(lo..=hi);
        (0..n).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect::<Vec<_>>().join(" ")
    }
    let query = words(rng, 1, 5);
    let n = rng.gen_range(1..=12);
    let pool: Vec<(String, String)> = (0..n).map(|i| (format!("d{i:02}"), words(rng, 0, 10))).collect();
    let k = rng.gen_range(1..=n);
    (query, pool, k)
}
