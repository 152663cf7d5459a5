use thiserror::Error;

use super::db::{Person, SocialDb};
use super::ldcs::{simplify_ldcs, LdcsAst, LdcsDialect, LdcsError, LdcsNode};
use crate::denotation::{Denotation, EntityKey, EntityKind, Item};

/// Simple-dialect operator registry.
pub const OPERATORS: &[&str] = &[
    "listValue",
    "filter",
    "getProperty",
    "singleton",
    "size",
    "concat",
    "superlative",
    "countSuperlative",
    "countComparative",
    "aggregate",
];

pub(crate) const HEIGHT_UNIT: &str = "en.cm";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    /// Value of an enumeration (`en.gender.male`).
    Enum,
    /// A date stored at year granularity.
    Year,
    /// Centimeters.
    Height,
    /// Reference to another person.
    Person,
}

/// Properties of a person. Every property may be multi-valued.
pub const PROPERTIES: &[(&str, PropertyKind)] = &[
    ("gender", PropertyKind::Enum),
    ("birthdate", PropertyKind::Year),
    ("birthplace", PropertyKind::Enum),
    ("height", PropertyKind::Height),
    ("relationship_status", PropertyKind::Enum),
    ("friend", PropertyKind::Person),
    ("institution", PropertyKind::Enum),
    ("education_start_date", PropertyKind::Year),
    ("education_end_date", PropertyKind::Year),
    ("employer", PropertyKind::Enum),
    ("job_title", PropertyKind::Enum),
    ("employment_start_date", PropertyKind::Year),
    ("employment_end_date", PropertyKind::Year),
];

pub fn property_kind(name: &str) -> Option<PropertyKind> {
    PROPERTIES.iter().find(|(n, _)| *n == name).map(|(_, k)| *k)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("unknown property '{0}'")]
    UnknownProperty(String),
    #[error("unknown entity '{0}'")]
    UnknownEntity(String),
    #[error("unknown operator '{0}'")]
    UnknownOperator(String),
    #[error("type mismatch in {op}: {message}")]
    TypeMismatch { op: String, message: String },
    #[error("'{op}' expects {expected} argument(s), found {found}")]
    Arity { op: String, expected: usize, found: usize },
    #[error(transparent)]
    Ldcs(#[from] LdcsError),
}

#[derive(Debug, Clone, PartialEq)]
enum SVal {
    Person(usize),
    Enum(String),
    Num(f64),
    /// A type name such as `en.person`.
    Type(String),
}

impl SVal {
    fn num(&self) -> Option<f64> {
        match self {
            SVal::Num(n) => Some(*n),
            _ => None,
        }
    }
}

fn mismatch(op: &str, message: impl Into<String>) -> ExecError {
    ExecError::TypeMismatch { op: op.to_string(), message: message.into() }
}

fn atom_arg<'a>(op: &str, node: &'a LdcsNode) -> Result<&'a str, ExecError> {
    node.as_atom().ok_or_else(|| mismatch(op, "expected a symbol argument"))
}

fn compare(op: &str, a: &SVal, b: &SVal) -> Result<bool, ExecError> {
    match op {
        "=" => Ok(a == b),
        "!=" => Ok(a != b),
        "<" | ">" | "<=" | ">=" => {
            let (x, y) = match (a.num(), b.num()) {
                (Some(x), Some(y)) => (x, y),
                _ => return Err(mismatch("filter", format!("'{op}' needs numeric operands"))),
            };
            Ok(match op {
                "<" => x < y,
                ">" => x > y,
                "<=" => x <= y,
                _ => x >= y,
            })
        }
        other => Err(mismatch("filter", format!("unknown comparison '{other}'"))),
    }
}

struct Exec<'d> {
    db: &'d SocialDb,
}

impl<'d> Exec<'d> {
    fn person(&self, op: &str, v: &SVal) -> Result<&'d Person, ExecError> {
        match v {
            SVal::Person(i) => Ok(&self.db.people[*i]),
            other => Err(mismatch(op, format!("expected a person, found {other:?}"))),
        }
    }

    fn forward(&self, op: &str, subject: &SVal, prop: &str) -> Result<Vec<SVal>, ExecError> {
        if property_kind(prop).is_none() {
            return Err(ExecError::UnknownProperty(prop.to_string()));
        }
        let p = self.person(op, subject)?;
        Ok(match prop {
            "gender" => vec![SVal::Enum(p.gender.clone())],
            "birthdate" => vec![SVal::Num(p.birthdate as f64)],
            "birthplace" => vec![SVal::Enum(p.birthplace.clone())],
            "height" => vec![SVal::Num(p.height)],
            "relationship_status" => vec![SVal::Enum(p.relationship_status.clone())],
            "friend" => p.friends.iter().map(|f| SVal::Person(*f)).collect(),
            "institution" => p.education.iter().map(|e| SVal::Enum(e.institution.clone())).collect(),
            "education_start_date" => p.education.iter().map(|e| SVal::Num(e.start_date as f64)).collect(),
            "education_end_date" => p.education.iter().map(|e| SVal::Num(e.end_date as f64)).collect(),
            "employer" => p.employment.iter().map(|e| SVal::Enum(e.employer.clone())).collect(),
            "job_title" => p.employment.iter().map(|e| SVal::Enum(e.job_title.clone())).collect(),
            "employment_start_date" => p.employment.iter().map(|e| SVal::Num(e.start_date as f64)).collect(),
            "employment_end_date" => p.employment.iter().map(|e| SVal::Num(e.end_date as f64)).collect(),
            _ => unreachable!("registry checked above"),
        })
    }

    fn instances(&self, type_name: &str) -> Result<Vec<SVal>, ExecError> {
        let kind = type_name.strip_prefix("en.").unwrap_or(type_name);
        match kind {
            "person" => Ok((0..self.db.people.len()).map(SVal::Person).collect()),
            "student" => {
                Ok((0..self.db.people.len()).filter(|i| self.db.people[*i].is_student).map(SVal::Person).collect())
            }
            other => match self.db.enums.get(other) {
                Some(members) => Ok(members.iter().map(|m| SVal::Enum(format!("en.{other}.{m}"))).collect()),
                None => Err(ExecError::UnknownEntity(type_name.to_string())),
            },
        }
    }

    /// Values of `prop` for one subject; a leading `!` reverses the property.
    fn values(&self, op: &str, subject: &SVal, prop: &str) -> Result<Vec<SVal>, ExecError> {
        if prop == "!type" {
            return match subject {
                SVal::Type(t) => self.instances(t),
                other => Err(mismatch(op, format!("!type applies to a type, found {other:?}"))),
            };
        }
        if let Some(base) = prop.strip_prefix('!') {
            if property_kind(base).is_none() {
                return Err(ExecError::UnknownProperty(base.to_string()));
            }
            let mut out = Vec::new();
            for i in 0..self.db.people.len() {
                if self.forward(op, &SVal::Person(i), base)?.contains(subject) {
                    out.push(SVal::Person(i));
                }
            }
            return Ok(out);
        }
        self.forward(op, subject, prop)
    }

    fn expect_args(op: &str, args: &[LdcsNode], n: usize) -> Result<(), ExecError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(ExecError::Arity { op: op.to_string(), expected: n, found: args.len() })
        }
    }

    fn eval(&self, node: &LdcsNode) -> Result<Vec<SVal>, ExecError> {
        let items = match node {
            LdcsNode::Atom(a) => return self.atom(a),
            LdcsNode::List(items) => items,
        };
        let op = items[0].as_atom().ok_or_else(|| mismatch("apply", "head must be a symbol"))?;
        let args = &items[1..];
        match op {
            "listValue" | "singleton" => {
                Self::expect_args(op, args, 1)?;
                self.eval(&args[0])
            }
            "getProperty" => {
                Self::expect_args(op, args, 2)?;
                let prop = atom_arg(op, &args[1])?;
                let mut out = Vec::new();
                for s in self.eval(&args[0])? {
                    out.extend(self.values(op, &s, prop)?);
                }
                Ok(out)
            }
            "filter" => {
                Self::expect_args(op, args, 4)?;
                let set = self.eval(&args[0])?;
                let prop = atom_arg(op, &args[1])?;
                let cmp = atom_arg(op, &args[2])?;
                let targets = self.eval(&args[3])?;
                let mut out = Vec::new();
                for x in set {
                    let vals = self.values(op, &x, prop)?;
                    let keep = if cmp == "!=" {
                        let mut any_eq = false;
                        for a in &vals {
                            for t in &targets {
                                any_eq |= compare("=", a, t)?;
                            }
                        }
                        !any_eq
                    } else {
                        let mut any = false;
                        for a in &vals {
                            for t in &targets {
                                any |= compare(cmp, a, t)?;
                            }
                        }
                        any
                    };
                    if keep {
                        out.push(x);
                    }
                }
                Ok(out)
            }
            "size" => {
                Self::expect_args(op, args, 1)?;
                Ok(vec![SVal::Num(self.eval(&args[0])?.len() as f64)])
            }
            "concat" => {
                Self::expect_args(op, args, 2)?;
                let mut a = self.eval(&args[0])?;
                a.extend(self.eval(&args[1])?);
                Ok(a)
            }
            "superlative" | "countSuperlative" => {
                Self::expect_args(op, args, 3)?;
                let set = self.eval(&args[0])?;
                let max = match atom_arg(op, &args[1])? {
                    "argmax" => true,
                    "argmin" => false,
                    other => return Err(mismatch(op, format!("expected argmax or argmin, found '{other}'"))),
                };
                let prop = atom_arg(op, &args[2])?;
                let mut scored = Vec::new();
                for x in set {
                    let vals = self.values(op, &x, prop)?;
                    let key = if op == "countSuperlative" {
                        let mut distinct: Vec<&SVal> = Vec::new();
                        for v in &vals {
                            if !distinct.contains(&v) {
                                distinct.push(v);
                            }
                        }
                        Some(distinct.len() as f64)
                    } else {
                        let nums = vals
                            .iter()
                            .map(|v| v.num().ok_or_else(|| mismatch(op, format!("'{prop}' is not numeric"))))
                            .collect::<Result<Vec<_>, _>>()?;
                        let pick = if max { f64::max } else { f64::min };
                        nums.into_iter().reduce(pick)
                    };
                    if let Some(k) = key {
                        scored.push((x, k));
                    }
                }
                let best = scored.iter().map(|(_, k)| *k).reduce(if max { f64::max } else { f64::min });
                Ok(match best {
                    None => Vec::new(),
                    Some(b) => scored.into_iter().filter(|(_, k)| *k == b).map(|(x, _)| x).collect(),
                })
            }
            "countComparative" => {
                Self::expect_args(op, args, 4)?;
                let set = self.eval(&args[0])?;
                let prop = atom_arg(op, &args[1])?;
                let cmp = atom_arg(op, &args[2])?;
                let n = self.eval(&args[3])?;
                let [bound] = n.as_slice() else {
                    return Err(mismatch(op, "count bound must be a single number"));
                };
                let mut out = Vec::new();
                for x in set {
                    let count = SVal::Num(self.values(op, &x, prop)?.len() as f64);
                    if compare(cmp, &count, bound)? {
                        out.push(x);
                    }
                }
                Ok(out)
            }
            "aggregate" => {
                Self::expect_args(op, args, 2)?;
                let mode = atom_arg(op, &args[0])?;
                let nums = self
                    .eval(&args[1])?
                    .iter()
                    .map(|v| v.num().ok_or_else(|| mismatch(op, "aggregate needs numbers")))
                    .collect::<Result<Vec<_>, _>>()?;
                let result = match mode {
                    "sum" => Some(nums.iter().sum()),
                    "avg" if nums.is_empty() => None,
                    "avg" => Some(nums.iter().sum::<f64>() / nums.len() as f64),
                    "min" => nums.iter().copied().reduce(f64::min),
                    "max" => nums.iter().copied().reduce(f64::max),
                    other => return Err(mismatch(op, format!("unknown aggregate '{other}'"))),
                };
                Ok(result.map(SVal::Num).into_iter().collect())
            }
            other => Err(ExecError::UnknownOperator(other.to_string())),
        }
    }

    fn atom(&self, a: &str) -> Result<Vec<SVal>, ExecError> {
        if let Ok(n) = a.parse::<f64>() {
            return Ok(vec![SVal::Num(n)]);
        }
        if let Some(rest) = a.strip_prefix("en.") {
            if !rest.contains('.') {
                return Ok(vec![SVal::Type(a.to_string())]);
            }
            if let Some(i) = self.db.person_index(a) {
                return Ok(vec![SVal::Person(i)]);
            }
            if self.db.is_enum_value(a) {
                return Ok(vec![SVal::Enum(a.to_string())]);
            }
        }
        Err(ExecError::UnknownEntity(a.to_string()))
    }
}

/// Executes a simple-dialect program.
pub fn exec_ldcs_simple(ast: &LdcsAst, db: &SocialDb) -> Result<Denotation, ExecError> {
    if ast.dialect != LdcsDialect::Simple {
        return Err(ExecError::Ldcs(LdcsError::DialectMismatch {
            dialect: LdcsDialect::Simple,
            message: "native execution needs the simple dialect".into(),
        }));
    }
    let vals = Exec { db }.eval(&ast.root)?;
    let items = vals
        .into_iter()
        .map(|v| match v {
            SVal::Person(i) => Ok(Item::Entity(EntityKey::new(EntityKind::Person, db.people[i].id.clone()))),
            SVal::Enum(e) => Ok(Item::Entity(EntityKey::new(EntityKind::Value, e))),
            SVal::Num(n) => Ok(Item::Number(n, None)),
            SVal::Type(t) => Err(mismatch("listValue", format!("cannot return the type {t}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Denotation::from_items(items))
}

/// Executes either dialect; full programs are simplified first.
pub fn exec_ldcs(ast: &LdcsAst, db: &SocialDb) -> Result<Denotation, ExecError> {
    match ast.dialect {
        LdcsDialect::Simple => exec_ldcs_simple(ast, db),
        LdcsDialect::Full => exec_ldcs_simple(&simplify_ldcs(ast)?, db),
    }
}
