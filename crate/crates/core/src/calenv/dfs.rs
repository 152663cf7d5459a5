//! Dataflow-Simple: `Head( arg , arg )` call trees whose leaves are
//! numbers or bare-word spans such as `Central Park`.
//!
//! A bare-word span runs until the next comma or closing parenthesis at
//! its own nesting level and is trimmed. Calls always carry parentheses,
//! so `TODAY()` is a call while `TODAY` would be a bare word.

use std::collections::BTreeSet;

use thiserror::Error;

use super::datetime::{parse_weekday, DateTimeClause, TimeOfDay};
use super::world::{CalendarError, CalendarWorld, EventConstraints, PersonId, WorldDelta};

/// Head registry with (min, max) arity; `None` means unbounded.
pub const HEADS: &[(&str, usize, Option<usize>)] = &[
    ("CreateEvent", 0, Some(1)),
    ("AND", 1, None),
    ("at_location", 1, Some(1)),
    ("starts_at", 1, Some(1)),
    ("ends_at", 1, Some(1)),
    ("with_attendee", 1, Some(1)),
    ("avoid_attendee", 1, Some(1)),
    ("has_subject", 1, Some(1)),
    ("has_duration", 1, Some(1)),
    ("FindManager", 1, Some(1)),
    ("FindTeamOf", 1, Some(1)),
    ("CurrentUser", 0, Some(0)),
    ("NextDOW", 1, Some(1)),
    ("TODAY", 0, Some(0)),
    ("TOMORROW", 0, Some(0)),
    ("date_by_mdy", 2, Some(3)),
    ("time_by_hm", 2, Some(3)),
];

#[derive(Debug, Error)]
pub enum DfsError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown head {head:?}")]
    UnknownHead { head: String },
    #[error("{head} takes {expected} arguments, found {found}")]
    Arity { head: String, expected: String, found: usize },
    #[error("{head}: {message}")]
    Type { head: String, message: String },
    #[error(transparent)]
    Calendar(#[from] CalendarError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DfsNode {
    Call { head: String, args: Vec<DfsNode> },
    Number(i64),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfsAst {
    pub root: DfsNode,
}

impl DfsNode {
    pub fn depth(&self) -> usize {
        match self {
            DfsNode::Call { args, .. } => 1 + args.iter().map(DfsNode::depth).max().unwrap_or(0),
            _ => 0,
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, DfsError> {
        Err(DfsError::Syntax { pos: self.pos, message: message.into() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn ident_len(s: &str) -> usize {
        let mut n = 0;
        for (i, c) in s.char_indices() {
            let ok = if i == 0 { c.is_ascii_alphabetic() || c == '_' } else { c.is_ascii_alphanumeric() || c == '_' };
            if !ok {
                break;
            }
            n = i + c.len_utf8();
        }
        n
    }

    /// True when the input at the cursor is an identifier followed by `(`.
    fn at_call(&self) -> bool {
        let rest = self.rest();
        let n = Self::ident_len(rest);
        n > 0 && rest[n..].trim_start().starts_with('(')
    }

    fn call(&mut self) -> Result<DfsNode, DfsError> {
        self.skip_ws();
        let n = Self::ident_len(self.rest());
        if n == 0 {
            return self.err("expected a call");
        }
        let head = self.rest()[..n].to_string();
        self.pos += n;
        self.skip_ws();
        if self.peek() != Some('(') {
            return self.err(format!("expected '(' after {head}"));
        }
        self.pos += 1;
        self.skip_ws();
        let mut args = Vec::new();
        if self.peek() == Some(')') {
            self.pos += 1;
            return Ok(DfsNode::Call { head, args });
        }
        loop {
            args.push(self.arg()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    return Ok(DfsNode::Call { head, args });
                }
                None => return self.err("unexpected end of input"),
                Some(c) => return self.err(format!("unexpected {c:?}")),
            }
        }
    }

    fn arg(&mut self) -> Result<DfsNode, DfsError> {
        self.skip_ws();
        if self.at_call() {
            return self.call();
        }
        let rest = self.rest();
        let end = rest.find([',', ')', '(']).unwrap_or(rest.len());
        if end == rest.len() {
            self.pos = self.src.len();
            return self.err("unexpected end of input");
        }
        if rest[end..].starts_with('(') {
            self.pos += end;
            return self.err("unexpected '(' inside a bare word");
        }
        let span = rest[..end].trim();
        if span.is_empty() {
            return self.err("empty argument");
        }
        self.pos += end;
        Ok(match span.parse::<i64>() {
            Ok(n) => DfsNode::Number(n),
            Err(_) => DfsNode::Word(span.to_string()),
        })
    }
}

fn check(node: &DfsNode) -> Result<(), DfsError> {
    if let DfsNode::Call { head, args } = node {
        let (_, min, max) =
            HEADS.iter().find(|(h, ..)| h == head).ok_or_else(|| DfsError::UnknownHead { head: head.clone() })?;
        if args.len() < *min || max.is_some_and(|m| args.len() > m) {
            let expected = match max {
                Some(m) if m == min => m.to_string(),
                Some(m) => format!("{min}..={m}"),
                None => format!("at least {min}"),
            };
            return Err(DfsError::Arity { head: head.clone(), expected, found: args.len() });
        }
        args.iter().try_for_each(check)?;
    }
    Ok(())
}

pub fn parse_dfs(text: &str) -> Result<DfsAst, DfsError> {
    let mut p = Parser { src: text, pos: 0 };
    let root = p.call()?;
    p.skip_ws();
    if p.pos != text.len() {
        return p.err("trailing input");
    }
    check(&root)?;
    Ok(DfsAst { root })
}

fn render_node(node: &DfsNode, out: &mut String) {
    match node {
        DfsNode::Number(n) => out.push_str(&n.to_string()),
        DfsNode::Word(w) => out.push_str(w),
        DfsNode::Call { head, args } => {
            out.push_str(head);
            if args.is_empty() {
                out.push_str("()");
                return;
            }
            out.push_str("( ");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(" , ");
                }
                render_node(a, out);
            }
            out.push_str(" )");
        }
    }
}

/// Renders with a space inside parentheses and around commas.
pub fn render_dfs(ast: &DfsAst) -> String {
    let mut out = String::new();
    render_node(&ast.root, &mut out);
    out
}

pub fn extract_operators(ast: &DfsAst) -> BTreeSet<String> {
    fn walk(n: &DfsNode, out: &mut BTreeSet<String>) {
        if let DfsNode::Call { head, args } = n {
            out.insert(head.clone());
            args.iter().for_each(|a| walk(a, out));
        }
    }
    let mut out = BTreeSet::new();
    walk(&ast.root, &mut out);
    out
}

fn type_err<T>(head: &str, message: impl Into<String>) -> Result<T, DfsError> {
    Err(DfsError::Type { head: head.to_string(), message: message.into() })
}

fn word(node: &DfsNode) -> Option<String> {
    match node {
        DfsNode::Word(w) => Some(w.clone()),
        DfsNode::Number(n) => Some(n.to_string()),
        DfsNode::Call { .. } => None,
    }
}

fn number(node: &DfsNode) -> Option<i64> {
    match node {
        DfsNode::Number(n) => Some(*n),
        _ => None,
    }
}

fn persons(node: &DfsNode, world: &CalendarWorld) -> Result<Vec<PersonId>, DfsError> {
    match node {
        DfsNode::Word(name) => Ok(vec![world.find_person(name)?.id.clone()]),
        DfsNode::Number(_) => type_err("person", "expected a person"),
        DfsNode::Call { head, args } => match head.as_str() {
            "CurrentUser" => Ok(vec![world.current_user.clone()]),
            "FindManager" => {
                let mut out = Vec::new();
                for p in persons(&args[0], world)? {
                    out.push(world.manager_of(&p)?.id.clone());
                }
                Ok(out)
            }
            "FindTeamOf" => {
                let mut out = Vec::new();
                for p in persons(&args[0], world)? {
                    out.extend(world.team_of(&p)?.into_iter().map(|q| q.id.clone()));
                }
                Ok(out)
            }
            other => type_err(other, "expected a person"),
        },
    }
}

fn am_pm(head: &str, node: &DfsNode) -> Result<bool, DfsError> {
    match word(node).map(|w| w.to_lowercase()).as_deref() {
        Some("am") => Ok(false),
        Some("pm") => Ok(true),
        _ => type_err(head, "expected am or pm"),
    }
}

fn clauses(node: &DfsNode, out: &mut Vec<DateTimeClause>) -> Result<(), DfsError> {
    let DfsNode::Call { head, args } = node else {
        return type_err("starts_at", "expected a date or time clause");
    };
    let num = |i: usize| {
        number(&args[i]).ok_or_else(|| DfsError::Type { head: head.clone(), message: "expected a number".into() })
    };
    let clause = match head.as_str() {
        "AND" => return args.iter().try_for_each(|a| clauses(a, out)),
        "TODAY" => DateTimeClause::Today,
        "TOMORROW" => DateTimeClause::Tomorrow,
        "NextDOW" => {
            let w = word(&args[0]).unwrap_or_default();
            DateTimeClause::NextDow(
                parse_weekday(&w)
                    .ok_or_else(|| DfsError::Type { head: head.clone(), message: format!("not a weekday: {w:?}") })?,
            )
        }
        "date_by_mdy" => DateTimeClause::DateMdy {
            month: num(0)? as u32,
            day: num(1)? as u32,
            year: if args.len() == 3 { Some(num(2)? as i32) } else { None },
        },
        "time_by_hm" => {
            let (minute, pm) =
                if args.len() == 3 { (num(1)?, am_pm(head, &args[2])?) } else { (0, am_pm(head, &args[1])?) };
            DateTimeClause::Time(TimeOfDay { hour: num(0)? as u32, minute: minute as u32, pm })
        }
        other => return type_err(other, "expected a date or time clause"),
    };
    out.push(clause);
    Ok(())
}

fn constraint(node: &DfsNode, world: &CalendarWorld, c: &mut EventConstraints) -> Result<(), DfsError> {
    let DfsNode::Call { head, args } = node else {
        return type_err("CreateEvent", "expected a constraint");
    };
    match head.as_str() {
        "AND" => args.iter().try_for_each(|a| constraint(a, world, c))?,
        "at_location" | "has_subject" => {
            let w =
                word(&args[0]).ok_or_else(|| DfsError::Type { head: head.clone(), message: "expected text".into() })?;
            let slot = if head == "at_location" { &mut c.location } else { &mut c.subject };
            if slot.replace(w).is_some() {
                return type_err(head, "given twice");
            }
        }
        "starts_at" => clauses(&args[0], &mut c.start)?,
        "ends_at" => clauses(&args[0], &mut c.end)?,
        "has_duration" => {
            let n = number(&args[0])
                .ok_or_else(|| DfsError::Type { head: head.clone(), message: "expected minutes".into() })?;
            if n <= 0 {
                return type_err(head, "duration must be positive");
            }
            c.duration_minutes = Some(n);
        }
        "with_attendee" => c.attendees.extend(persons(&args[0], world)?),
        "avoid_attendee" => c.avoided.extend(persons(&args[0], world)?),
        other => return type_err(other, "not an event constraint"),
    }
    Ok(())
}

/// Executes a `CreateEvent(...)` program, returning the successor world
/// and the created events.
pub fn exec_dfs(ast: &DfsAst, world: &CalendarWorld) -> Result<(CalendarWorld, WorldDelta), DfsError> {
    let DfsNode::Call { head, args } = &ast.root else {
        return type_err("CreateEvent", "program must be a call");
    };
    if head != "CreateEvent" {
        return type_err(head, "program root must be CreateEvent");
    }
    let mut c = EventConstraints::default();
    if let Some(a) = args.first() {
        constraint(a, world, &mut c)?;
    }
    Ok(world.create_event(&c)?)
}
