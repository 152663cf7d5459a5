//! PyMR: a restricted Python dialect used as a meaning representation.
//!
//! Programs define a single `def answer():` whose body uses a small
//! statement and expression subset. Anything outside the subset is
//! rejected at parse time with [`PymrError::Unsupported`], and runtime
//! failures come back as ordinary errors so a harness can count them.
//!
//! Grammar (EBNF, indentation handled by INDENT/DEDENT tokens):
//!
//! ```text
//! program    = "def" "answer" "(" ")" [ "->" expr ] ":" block
//! block      = simple NEWLINE | NEWLINE INDENT stmt+ DEDENT
//! stmt       = "for" NAME "in" expr ":" block
//!            | "if" expr ":" block { "elif" expr ":" block } [ "else" ":" block ]
//!            | simple NEWLINE
//! simple     = "return" [ expr ] | "pass" | NAME "=" expr | expr
//! expr       = or_test
//! or_test    = and_test { "or" and_test }
//! and_test   = not_test { "and" not_test }
//! not_test   = "not" not_test | comparison
//! comparison = arith [ cmp_op arith ]
//! cmp_op     = "==" | "!=" | "<" | ">" | "<=" | ">=" | "in" | "not" "in" | "is" [ "not" ]
//! arith      = term { ("+" | "-") term }
//! term       = factor { ("*" | "/") factor }
//! factor     = "-" factor | postfix
//! postfix    = atom { "." NAME | "(" args ")" | "[" expr "]" }
//! args       = [ arg { "," arg } ]     (a generator may be the only argument
//!                                       of any/all/max/min/sum/list/set/sorted)
//! arg        = [ NAME "=" ] ( "lambda" NAME ":" expr | expr )
//! atom       = NAME | NUMBER | STRING | "True" | "False" | "None"
//!            | "(" expr ")" | "[" [ expr { "," expr } ] "]"
//!            | "[" expr comp_for "]"
//! comp_for   = { "for" NAME "in" or_test { "if" or_test } }
//! ```

mod ast;
mod binding;
mod interp;
mod lexer;
mod parser;
mod value;

use std::collections::BTreeSet;

use thiserror::Error;

pub use ast::{ArithOp, BoolOp, CmpOp, CompClause, CompKind, Expr, Literal, PymrAst, Stmt};
pub use binding::{
    ClassDecl, EnvBinding, EnvTag, CALENDAR_CLASSES, CALENDAR_ROOTS, EVENT_PARAMS, GEO_CLASSES, GEO_ROOTS,
    SOCIAL_CLASSES, SOCIAL_ENUMS, SOCIAL_ROOTS,
};
pub use interp::BUILTINS;
pub use parser::parse_pymr;

use crate::calenv::CalendarError;
use crate::denotation::Outcome;

#[derive(Debug, Error)]
pub enum PymrError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsupported construct '{construct}' at line {line}, column {col}")]
    Unsupported { construct: String, line: usize, col: usize },
    #[error("name '{0}' is not defined")]
    NameNotFound(String),
    #[error("'{type_name}' object has no attribute '{attr}'")]
    AttributeNotFound { type_name: String, attr: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("value error: {0}")]
    Value(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("{0}() arg is an empty sequence")]
    EmptySequence(String),
    #[error("evaluation step budget exhausted")]
    Budget,
    #[error("answer() returned None")]
    NoAnswer,
    #[error(transparent)]
    Calendar(#[from] CalendarError),
}

impl PymrError {
    /// True for errors raised before execution starts.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, PymrError::Syntax { .. } | PymrError::Unsupported { .. })
    }
}

/// Runs `answer()` against `binding`. Information-seeking environments
/// yield a denotation built from the return value; the calendar yields the
/// events passed to `api.add_event`.
pub fn exec_pymr(ast: &PymrAst, binding: &EnvBinding) -> Result<Outcome, PymrError> {
    let mut it = interp::Interp::new(binding);
    let ret = it.run(&ast.body)?;
    let events = std::mem::take(&mut it.events);
    binding.outcome(ret, events)
}

/// Attribute and method names used by the program plus constructor calls.
/// Builtins, local names and collection methods are left out.
pub fn extract_operators(ast: &PymrAst) -> BTreeSet<String> {
    fn expr(e: &Expr, out: &mut BTreeSet<String>) {
        match e {
            Expr::Lit(_) | Expr::Name(_) => {}
            Expr::List(items) => items.iter().for_each(|x| expr(x, out)),
            Expr::Attr(obj, name) => {
                expr(obj, out);
                out.insert(name.clone());
            }
            Expr::Index(a, b) | Expr::Bool(_, a, b) | Expr::Compare(a, _, b) | Expr::Arith(a, _, b) => {
                expr(a, out);
                expr(b, out);
            }
            Expr::Call { func, args, kwargs } => {
                match &**func {
                    Expr::Attr(obj, m) if matches!(m.as_str(), "append" | "extend" | "remove" | "add" | "update") => {
                        expr(obj, out)
                    }
                    Expr::Name(n) if n == "Event" => {
                        out.insert(n.clone());
                    }
                    f => expr(f, out),
                }
                args.iter().for_each(|x| expr(x, out));
                kwargs.iter().for_each(|(_, x)| expr(x, out));
            }
            Expr::Lambda { body, .. } | Expr::Not(body) | Expr::Neg(body) => expr(body, out),
            Expr::Comp { elt, clauses, .. } => {
                expr(elt, out);
                for c in clauses {
                    match c {
                        CompClause::For { iter, .. } => expr(iter, out),
                        CompClause::If(cond) => expr(cond, out),
                    }
                }
            }
        }
    }
    fn stmts(body: &[Stmt], out: &mut BTreeSet<String>) {
        for s in body {
            match s {
                Stmt::Assign { value, .. } | Stmt::Expr(value) | Stmt::Return(Some(value)) => expr(value, out),
                Stmt::Return(None) | Stmt::Pass => {}
                Stmt::For { iter, body, .. } => {
                    expr(iter, out);
                    stmts(body, out);
                }
                Stmt::If { cond, body, orelse } => {
                    expr(cond, out);
                    stmts(body, out);
                    stmts(orelse, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    stmts(&ast.body, &mut out);
    out
}
