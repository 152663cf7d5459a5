use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::exec::{property_kind, PropertyKind, HEIGHT_UNIT, OPERATORS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LdcsDialect {
    Full,
    Simple,
}

impl fmt::Display for LdcsDialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LdcsDialect::Full => "full",
            LdcsDialect::Simple => "simple",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LdcsNode {
    Atom(String),
    List(Vec<LdcsNode>),
}

impl LdcsNode {
    fn atom(s: impl Into<String>) -> Self {
        LdcsNode::Atom(s.into())
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            LdcsNode::Atom(a) => Some(a),
            LdcsNode::List(_) => None,
        }
    }

    /// Nesting depth counted in parentheses.
    pub fn depth(&self) -> usize {
        match self {
            LdcsNode::Atom(_) => 0,
            LdcsNode::List(items) => 1 + items.iter().map(LdcsNode::depth).max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LdcsAst {
    pub root: LdcsNode,
    pub dialect: LdcsDialect,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdcsError {
    #[error("s-expression syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("not valid {dialect} λ-DCS: {message}")]
    DialectMismatch { dialect: LdcsDialect, message: String },
    #[error("unsupported form: {0}")]
    UnsupportedForm(String),
    #[error("unknown operator '{0}'")]
    UnknownOperator(String),
    #[error("program contains no application")]
    EmptyProgram,
}

const TYPING_HEADS: &[&str] = &["string", "date", "number"];

fn tokenize(text: &str) -> Result<Vec<(String, usize)>, LdcsError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' || c == ')' {
            out.push((c.to_string(), i));
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::from('"');
            let mut closed = false;
            for (_, c) in chars.by_ref() {
                s.push(c);
                if c == '"' {
                    closed = true;
                    break;
                }
            }
            if !closed {
                return Err(LdcsError::Syntax { pos: i, message: "unterminated string".into() });
            }
            out.push((s, i));
        } else {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                s.push(c);
                chars.next();
            }
            out.push((s, i));
        }
    }
    Ok(out)
}

fn parse_node(toks: &[(String, usize)], pos: &mut usize, end: usize) -> Result<LdcsNode, LdcsError> {
    let Some((tok, at)) = toks.get(*pos) else {
        return Err(LdcsError::Syntax { pos: end, message: "unexpected end of input".into() });
    };
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match toks.get(*pos) {
                    None => return Err(LdcsError::Syntax { pos: end, message: "unclosed '('".into() }),
                    Some((t, _)) if t == ")" => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => items.push(parse_node(toks, pos, end)?),
                }
            }
            if items.is_empty() {
                return Err(LdcsError::Syntax { pos: *at, message: "empty list".into() });
            }
            Ok(LdcsNode::List(items))
        }
        ")" => Err(LdcsError::Syntax { pos: *at, message: "unexpected ')'".into() }),
        _ => Ok(LdcsNode::Atom(tok.clone())),
    }
}

pub fn parse_ldcs(text: &str, dialect: LdcsDialect) -> Result<LdcsAst, LdcsError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(LdcsError::Syntax { pos: 0, message: "empty program".into() });
    }
    let mut pos = 0;
    let root = parse_node(&toks, &mut pos, text.len())?;
    if let Some((_, at)) = toks.get(pos) {
        return Err(LdcsError::Syntax { pos: *at, message: "trailing input".into() });
    }
    check_dialect(&root, dialect)?;
    Ok(LdcsAst { root, dialect })
}

fn mismatch(dialect: LdcsDialect, message: impl Into<String>) -> LdcsError {
    LdcsError::DialectMismatch { dialect, message: message.into() }
}

fn check_dialect(node: &LdcsNode, dialect: LdcsDialect) -> Result<(), LdcsError> {
    let LdcsNode::List(items) = node else {
        return match node.as_atom() {
            Some(a) if dialect == LdcsDialect::Simple && a.starts_with("SW.") => {
                Err(mismatch(dialect, format!("namespaced name '{a}'")))
            }
            _ => Ok(()),
        };
    };
    let head = items[0].as_atom().ok_or_else(|| mismatch(dialect, "application head must be a symbol"))?;
    match dialect {
        LdcsDialect::Full => match head {
            "call" => {
                match items.get(1).and_then(LdcsNode::as_atom) {
                    Some(c) if c.starts_with("SW.") => {}
                    _ => return Err(mismatch(dialect, "call needs a namespaced callee such as SW.filter")),
                }
                items[2..].iter().try_for_each(|n| check_dialect(n, dialect))
            }
            "string" | "number" | "date" => {
                if items[1..].iter().all(|n| n.as_atom().is_some()) && items.len() >= 2 {
                    Ok(())
                } else {
                    Err(mismatch(dialect, format!("malformed ({head} ...) literal")))
                }
            }
            other => Err(mismatch(dialect, format!("application head '{other}' is not call"))),
        },
        LdcsDialect::Simple => {
            if head == "call" || TYPING_HEADS.contains(&head) || head.starts_with("SW.") {
                return Err(mismatch(dialect, format!("'{head}' form is not allowed in the simple dialect")));
            }
            items[1..].iter().try_for_each(|n| check_dialect(n, dialect))
        }
    }
}

/// Canonical rendering: single spaces, parentheses only around lists.
pub fn render_ldcs(ast: &LdcsAst) -> String {
    let mut out = String::new();
    render_node(&ast.root, &mut out);
    out
}

fn render_node(node: &LdcsNode, out: &mut String) {
    match node {
        LdcsNode::Atom(a) => out.push_str(a),
        LdcsNode::List(items) => {
            out.push('(');
            for (i, n) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                render_node(n, out);
            }
            out.push(')');
        }
    }
}

fn is_number(atom: &str) -> bool {
    atom.parse::<f64>().is_ok()
}

/// `en.person` style names: a type rather than an entity.
fn is_type_name(atom: &str) -> bool {
    atom.strip_prefix("en.").is_some_and(|rest| !rest.is_empty() && !rest.contains('.'))
}

fn simplify_node(node: &LdcsNode) -> Result<LdcsNode, LdcsError> {
    let LdcsNode::List(items) = node else { return Ok(node.clone()) };
    let head = items[0].as_atom().unwrap_or_default();
    match head {
        "call" => {
            let callee = items[1].as_atom().unwrap_or_default();
            let op = callee.strip_prefix("SW.").unwrap_or(callee);
            if !OPERATORS.contains(&op) {
                return Err(LdcsError::UnsupportedForm(format!("operator SW.{op} is outside the social fragment")));
            }
            let args = &items[2..];
            if op == "singleton" {
                if let [LdcsNode::Atom(t)] = args {
                    if is_type_name(t) {
                        return Ok(LdcsNode::atom(t.clone()));
                    }
                }
            }
            let mut out = vec![LdcsNode::atom(op)];
            for a in args {
                out.push(simplify_node(a)?);
            }
            Ok(LdcsNode::List(out))
        }
        "string" | "number" | "date" => Ok(items[1].clone()),
        other => Err(LdcsError::UnsupportedForm(format!("({other} ...)"))),
    }
}

/// Drops `call`, the `SW.` namespace, typing wrappers and redundant
/// `singleton` parentheses.
pub fn simplify_ldcs(ast: &LdcsAst) -> Result<LdcsAst, LdcsError> {
    if ast.dialect != LdcsDialect::Full {
        return Err(mismatch(LdcsDialect::Full, "simplify expects a full-dialect program"));
    }
    let root = simplify_node(&ast.root)?;
    let simple = LdcsAst { root, dialect: LdcsDialect::Simple };
    // The transform must be invertible on everything it accepts.
    let back = desimplify_ldcs(&simple)?;
    if back.root != ast.root {
        return Err(LdcsError::UnsupportedForm(format!(
            "literal typing cannot be recovered: {} would come back as {}",
            render_ldcs(ast),
            render_ldcs(&back)
        )));
    }
    Ok(simple)
}

#[derive(Clone, Copy)]
enum LiteralSlot<'a> {
    Plain,
    FilterValue(&'a str),
    Count,
}

fn desimplify_atom(atom: &str, slot: LiteralSlot<'_>) -> LdcsNode {
    let list = |parts: &[&str]| LdcsNode::List(parts.iter().map(|p| LdcsNode::atom(*p)).collect());
    if is_number(atom) {
        return match slot {
            LiteralSlot::FilterValue(prop) => match property_kind(prop.trim_start_matches('!')) {
                Some(PropertyKind::Year) => list(&["date", atom, "-1", "-1"]),
                Some(PropertyKind::Height) => list(&["number", atom, HEIGHT_UNIT]),
                _ => list(&["number", atom]),
            },
            LiteralSlot::Count | LiteralSlot::Plain => list(&["number", atom]),
        };
    }
    if is_type_name(atom) {
        return list(&["call", "SW.singleton", atom]);
    }
    if atom.starts_with("en.") || atom.starts_with('"') {
        return LdcsNode::atom(atom);
    }
    list(&["string", atom])
}

fn desimplify_node(node: &LdcsNode, slot: LiteralSlot<'_>) -> Result<LdcsNode, LdcsError> {
    match node {
        LdcsNode::Atom(a) => Ok(desimplify_atom(a, slot)),
        LdcsNode::List(items) => {
            let op = items[0].as_atom().unwrap_or_default();
            if !OPERATORS.contains(&op) {
                return Err(LdcsError::UnknownOperator(op.to_string()));
            }
            let mut out = vec![LdcsNode::atom("call"), LdcsNode::atom(format!("SW.{op}"))];
            for (i, a) in items[1..].iter().enumerate() {
                let slot = match (op, i) {
                    ("filter", 3) => LiteralSlot::FilterValue(items[2].as_atom().unwrap_or_default()),
                    ("countComparative", 3) => LiteralSlot::Count,
                    _ => LiteralSlot::Plain,
                };
                out.push(desimplify_node(a, slot)?);
            }
            Ok(LdcsNode::List(out))
        }
    }
}

/// Inverse of [`simplify_ldcs`]. Typing wrappers are restored from the
/// literal's position: years compared against date properties become
/// `(date y -1 -1)`, heights carry their unit.
pub fn desimplify_ldcs(ast: &LdcsAst) -> Result<LdcsAst, LdcsError> {
    if ast.dialect != LdcsDialect::Simple {
        return Err(mismatch(LdcsDialect::Simple, "desimplify expects a simple-dialect program"));
    }
    Ok(LdcsAst { root: desimplify_node(&ast.root, LiteralSlot::Plain)?, dialect: LdcsDialect::Full })
}

/// Unigram operators: application heads, property and comparison symbols,
/// and the kind of every enumerated value (`en.gender.male` gives `gender`).
pub fn extract_operators(ast: &LdcsAst) -> Result<BTreeSet<String>, LdcsError> {
    let simple = match ast.dialect {
        LdcsDialect::Full => simplify_ldcs(ast)?,
        LdcsDialect::Simple => ast.clone(),
    };
    if !matches!(simple.root, LdcsNode::List(_)) {
        return Err(LdcsError::EmptyProgram);
    }
    let mut out = BTreeSet::new();
    collect(&simple.root, &mut out);
    Ok(out)
}

fn collect(node: &LdcsNode, out: &mut BTreeSet<String>) {
    match node {
        LdcsNode::List(items) => items.iter().for_each(|n| collect(n, out)),
        LdcsNode::Atom(a) => {
            if let Some(rest) = a.strip_prefix("en.") {
                if let Some((kind, _)) = rest.split_once('.') {
                    out.insert(kind.to_string());
                }
            } else if !is_number(a) && !a.starts_with('"') {
                out.insert(a.clone());
            }
        }
    }
}
