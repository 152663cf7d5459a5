//! Executable meaning representations for semantic parsing.
//!
//! Three environments (geography, a social network, a calendar) each come
//! with a domain-specific language and a binding for PyMR, a small
//! Python-like language. On top of them sit execution-based evaluation,
//! demonstration selection, prompt construction and a record/replay
//! completion client.

pub mod calenv;
pub mod corpus;
pub mod demosel;
pub mod denotation;
pub mod dispatch;
pub mod evalx;
pub mod experiment;
pub mod funql;
pub mod geoenv;
pub mod llmio;
pub mod promptkit;
pub mod pymr;
pub mod socialenv;

/// Maximum parenthesis nesting of a program text, ignoring quoted spans.
pub fn paren_depth(text: &str) -> usize {
    let (mut depth, mut max) = (0usize, 0usize);
    let mut quote: Option<char> = None;
    for c in text.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '\'' | '"') => quote = Some(c),
            (None, '(') => {
                depth += 1;
                max = max.max(depth);
            }
            (None, ')') => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    max
}
