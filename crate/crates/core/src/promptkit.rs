//! Domain descriptions and prompt assembly.
//!
//! A domain description (DD) source is an ordered list of declarations for
//! one environment and dialect. It renders in four variants: nothing, a bare
//! operator list, declarations without types, and full declarations.
//! Bodies are always elided as `...`.
//!
//! Prompts instantiate a versioned plain-text template with the slots
//! `[DD]`, `[query-i]`, `[solution-i]` and `[query-test]`. The lines before
//! the first `[query-i]` line form the DD header, which is dropped when the
//! variant is `none`. The lines from `[query-i]` up to the `[query-test]`
//! line repeat once per demonstration.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::Dialect;
use crate::pymr::EnvTag;

pub const TEMPLATE_V1: &str = include_str!("../resources/prompt_template_v1.txt");
pub const DEFAULT_TEMPLATE: &str = "v1";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid domain description source: {0}")]
    Source(String),
    #[error("duplicate declaration {name:?} in namespace {namespace:?}")]
    DuplicateName { namespace: String, name: String },
    #[error("invalid template: {0}")]
    Template(String),
    #[error("unknown template id {0:?}")]
    UnknownTemplate(String),
    #[error("a prompt needs a domain description or at least one demonstration")]
    EmptySpec,
    #[error("inconsistent prompt spec: {0}")]
    InconsistentSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DdVariant {
    None,
    OperatorList,
    NoTyping,
    Full,
}

impl DdVariant {
    pub const ALL: [DdVariant; 4] = [DdVariant::None, DdVariant::OperatorList, DdVariant::NoTyping, DdVariant::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            DdVariant::None => "none",
            DdVariant::OperatorList => "operator-list",
            DdVariant::NoTyping => "no-typing",
            DdVariant::Full => "full",
        }
    }
}

impl std::str::FromStr for DdVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DdVariant::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown DD variant {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeclKind {
    Class,
    Method,
    Attribute,
    Constant,
    EnumMember,
    Operator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub ty: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declaration {
    pub kind: DeclKind,
    pub name: String,
    /// Enclosing class, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returns: Option<String>,
    /// Type of an attribute or constant.
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub ty: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DdStyle {
    /// Python class and function stubs.
    Python,
    /// One signature per line.
    Dsl,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainDescriptionSource {
    pub environment: EnvTag,
    pub dialect: Dialect,
    pub style: DdStyle,
    pub declarations: Vec<Declaration>,
}

impl DomainDescriptionSource {
    pub fn empty(environment: EnvTag, dialect: Dialect, style: DdStyle) -> Self {
        DomainDescriptionSource { environment, dialect, style, declarations: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        let mut seen = HashSet::new();
        for d in &self.declarations {
            let namespace = d.owner.clone().unwrap_or_default();
            if !seen.insert((namespace.clone(), d.name.clone())) {
                return Err(PromptError::DuplicateName { namespace, name: d.name.clone() });
            }
            let missing = match d.kind {
                DeclKind::Method | DeclKind::Operator => d.returns.is_none(),
                DeclKind::Attribute => d.ty.is_none(),
                DeclKind::Class | DeclKind::Constant | DeclKind::EnumMember => false,
            };
            if missing {
                return Err(PromptError::Source(format!("declaration {:?} lacks a signature", d.name)));
            }
            if d.kind == DeclKind::Method && d.owner.is_none() {
                return Err(PromptError::Source(format!("method {:?} has no owner", d.name)));
            }
        }
        Ok(())
    }

    /// Declared names, deduplicated in first-occurrence order.
    pub fn names(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.declarations.iter().map(|d| d.name.as_str()).filter(|n| seen.insert(*n)).collect()
    }
}

pub fn parse_dd_source(text: &str) -> Result<DomainDescriptionSource, PromptError> {
    let src: DomainDescriptionSource = serde_json::from_str(text).map_err(|e| PromptError::Source(e.to_string()))?;
    src.validate()?;
    Ok(src)
}

pub fn load_dd_source(path: impl AsRef<Path>) -> Result<DomainDescriptionSource, PromptError> {
    parse_dd_source(&std::fs::read_to_string(path)?)
}

pub fn render_dd(source: &DomainDescriptionSource, variant: DdVariant) -> String {
    match variant {
        DdVariant::None => String::new(),
        DdVariant::OperatorList => source.names().join("\n"),
        DdVariant::NoTyping | DdVariant::Full => {
            let typed = variant == DdVariant::Full;
            match source.style {
                DdStyle::Python => render_python(&source.declarations, typed),
                DdStyle::Dsl => render_dsl(&source.declarations, typed),
            }
        }
    }
}

fn params_text(params: &[Param], with_self: bool, typed: bool) -> String {
    let mut parts: Vec<String> = Vec::new();
    if with_self {
        parts.push("self".into());
    }
    for p in params {
        match (&p.ty, typed) {
            (Some(t), true) => parts.push(format!("{}: {t}", p.name)),
            _ => parts.push(p.name.clone()),
        }
    }
    parts.join(", ")
}

fn annotated(name: &str, ty: &Option<String>, typed: bool) -> String {
    match (ty, typed) {
        (Some(t), true) => format!("{name}: {t}"),
        _ => name.to_string(),
    }
}

fn returns(r: &Option<String>, typed: bool) -> String {
    match (r, typed) {
        (Some(r), true) => format!(" -> {r}"),
        _ => String::new(),
    }
}

fn render_python(decls: &[Declaration], typed: bool) -> String {
    let owners: HashSet<&str> = decls.iter().filter_map(|d| d.owner.as_deref()).collect();
    let mut lines: Vec<String> = Vec::new();
    let mut prev_top_is_class = false;
    for d in decls {
        let indent = if d.owner.is_some() { "    " } else { "" };
        if d.owner.is_none() && !lines.is_empty() && (d.kind == DeclKind::Class || prev_top_is_class) {
            lines.push(String::new());
        }
        if d.owner.is_none() {
            prev_top_is_class = d.kind == DeclKind::Class;
        }
        if let Some(doc) = &d.doc {
            lines.push(format!("{indent}# {doc}"));
        }
        let body = match d.kind {
            DeclKind::Class if owners.contains(d.name.as_str()) => format!("class {}:", d.name),
            DeclKind::Class => format!("class {}: ...", d.name),
            DeclKind::Method | DeclKind::Operator => format!(
                "def {}({}){}: ...",
                d.name,
                params_text(&d.params, d.kind == DeclKind::Method, typed),
                returns(&d.returns, typed)
            ),
            DeclKind::Attribute | DeclKind::Constant => annotated(&d.name, &d.ty, typed),
            DeclKind::EnumMember => format!("{} = ...", d.name),
        };
        lines.push(format!("{indent}{body}"));
    }
    lines.join("\n")
}

fn render_dsl(decls: &[Declaration], typed: bool) -> String {
    decls
        .iter()
        .map(|d| {
            let qualified = match &d.owner {
                Some(o) => format!("{o}.{}", d.name),
                None => d.name.clone(),
            };
            let sig = match d.kind {
                DeclKind::Class => format!("type {}", d.name),
                DeclKind::Method | DeclKind::Operator => {
                    format!("{qualified}({}){}", params_text(&d.params, false, typed), returns(&d.returns, typed))
                }
                DeclKind::Attribute | DeclKind::Constant => annotated(&qualified, &d.ty, typed),
                DeclKind::EnumMember => qualified,
            };
            match &d.doc {
                Some(doc) => format!("{sig}  # {doc}"),
                None => sig,
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// A parsed prompt template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    header: String,
    demo: String,
    tail: String,
}

impl Template {
    pub fn builtin(id: &str) -> Result<Self, PromptError> {
        match id {
            "v1" => Template::parse(TEMPLATE_V1),
            other => Err(PromptError::UnknownTemplate(other.to_string())),
        }
    }

    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let find = |slot: &str| lines.iter().position(|l| l.contains(slot));
        let demo_start = find("[query-i]").ok_or_else(|| PromptError::Template("missing [query-i]".into()))?;
        let test_start = find("[query-test]").ok_or_else(|| PromptError::Template("missing [query-test]".into()))?;
        if test_start <= demo_start {
            return Err(PromptError::Template("[query-test] must follow the demonstration block".into()));
        }
        let header = lines[..demo_start].concat();
        let demo = lines[demo_start..test_start].concat();
        if !header.contains("[DD]") {
            return Err(PromptError::Template("header lacks [DD]".into()));
        }
        if !demo.contains("[solution-i]") {
            return Err(PromptError::Template("demonstration block lacks [solution-i]".into()));
        }
        Ok(Template { header, demo, tail: lines[test_start..].concat() })
    }
}

/// Replaces slots in one left-to-right pass so inserted values are never
/// rescanned.
fn fill(block: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(block.len());
    let mut rest = block;
    'outer: while !rest.is_empty() {
        for (slot, value) in slots {
            if let Some(after) = rest.strip_prefix(slot) {
                out.push_str(value);
                rest = after;
                continue 'outer;
            }
        }
        let ch = rest.chars().next().expect("nonempty");
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub utterance: String,
    pub program: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub dd_variant: DdVariant,
    pub dd_text: String,
    pub demonstrations: Vec<Demonstration>,
    pub test_utterance: String,
    pub dialect: Dialect,
}

pub fn build_prompt(spec: &PromptSpec) -> Result<String, PromptError> {
    build_prompt_with(&Template::builtin(DEFAULT_TEMPLATE)?, spec)
}

pub fn build_prompt_with(template: &Template, spec: &PromptSpec) -> Result<String, PromptError> {
    let has_dd = spec.dd_variant != DdVariant::None;
    if has_dd != !spec.dd_text.is_empty() {
        return Err(PromptError::InconsistentSpec(format!(
            "variant {} with {} DD text",
            spec.dd_variant.as_str(),
            if spec.dd_text.is_empty() { "empty" } else { "nonempty" }
        )));
    }
    if !has_dd && spec.demonstrations.is_empty() {
        return Err(PromptError::EmptySpec);
    }
    let mut out = String::new();
    if has_dd {
        out.push_str(&fill(&template.header, &[("[DD]", spec.dd_text.trim_end())]));
    }
    for d in &spec.demonstrations {
        out.push_str(&fill(
            &template.demo,
            &[("[query-i]", d.utterance.trim()), ("[solution-i]", d.program.trim_end())],
        ));
    }
    out.push_str(&fill(&template.tail, &[("[query-test]", spec.test_utterance.trim())]));
    Ok(out)
}

/// Counts tokens of a prompt.
pub trait Tokenizer {
    fn count(&self, text: &str) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TokenizerSpec {
    #[default]
    Whitespace,
    /// Ceiling of character count over `chars` per token.
    CharsPerToken { chars: usize },
}

impl Tokenizer for TokenizerSpec {
    fn count(&self, text: &str) -> usize {
        match self {
            TokenizerSpec::Whitespace => text.split_whitespace().count(),
            TokenizerSpec::CharsPerToken { chars } => text.chars().count().div_ceil((*chars).max(1)),
        }
    }
}

pub fn count_prompt_tokens(text: &str, tokenizer: &dyn Tokenizer) -> usize {
    tokenizer.count(text)
}
