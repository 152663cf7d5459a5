use std::cell::RefCell;
use std::cmp::Ordering;
use std::rc::Rc;

use super::ast::Expr;
use super::PymrError;
use crate::calenv::{DateTimeClause, EventConstraints};

/// Domain objects. Equality is identity of the underlying entity.
#[derive(Debug, Clone, PartialEq)]
pub enum Obj {
    GeoModel,
    State(usize),
    City(usize),
    River(usize),
    Place(usize),
    Country,
    SocialApi,
    Person(usize),
    Education(usize, usize),
    Employment(usize, usize),
    EnumNamespace(&'static str),
    EnumValue(String),
    CalendarApi,
    CalPerson(String),
    EventClass,
    Event(Rc<EventConstraints>),
    ClauseNamespace,
    ValuesNamespace,
    Clause(DateTimeClause),
}

#[derive(Debug, Clone)]
pub enum Func {
    Builtin(&'static str),
    Method(Box<Value>, String),
    Lambda(Rc<(String, Expr)>),
}

#[derive(Debug, Clone)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(Rc<str>),
    List(Rc<RefCell<Vec<Value>>>),
    /// Insertion-ordered set with equality-based membership.
    Set(Rc<RefCell<Vec<Value>>>),
    Obj(Obj),
    Func(Func),
}

impl Value {
    pub fn list(items: Vec<Value>) -> Value {
        Value::List(Rc::new(RefCell::new(items)))
    }

    pub fn set(items: Vec<Value>) -> Value {
        let mut out: Vec<Value> = Vec::with_capacity(items.len());
        for v in items {
            if !out.iter().any(|x| py_eq(x, &v)) {
                out.push(v);
            }
        }
        Value::Set(Rc::new(RefCell::new(out)))
    }

    pub fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Set(_) => "set",
            Value::Func(_) => "function",
            Value::Obj(o) => match o {
                Obj::GeoModel => "GeoModel",
                Obj::State(_) => "State",
                Obj::City(_) => "City",
                Obj::River(_) => "River",
                Obj::Place(_) => "Place",
                Obj::Country => "Country",
                Obj::SocialApi | Obj::CalendarApi => "API",
                Obj::Person(_) | Obj::CalPerson(_) => "Person",
                Obj::Education(..) => "Education",
                Obj::Employment(..) => "Employment",
                Obj::EnumNamespace(n) => n,
                Obj::EnumValue(_) => "Enum",
                Obj::EventClass => "type",
                Obj::Event(_) => "Event",
                Obj::ClauseNamespace => "DateTimeClause",
                Obj::ValuesNamespace => "DateTimeValues",
                Obj::Clause(_) => "DateTimeClause",
            },
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(n) => *n != 0,
            Value::Float(f) => *f != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::List(v) | Value::Set(v) => !v.borrow().is_empty(),
            Value::Obj(_) | Value::Func(_) => true,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Bool(b) => Some(*b as i64 as f64),
            Value::Int(n) => Some(*n as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Bool(b) => Some(*b as i64),
            Value::Int(n) => Some(*n),
            Value::Float(f) if f.fract() == 0.0 => Some(*f as i64),
            _ => None,
        }
    }
}

pub fn py_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::List(x), Value::List(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| py_eq(p, q))
        }
        (Value::Set(x), Value::Set(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().all(|p| y.iter().any(|q| py_eq(p, q)))
        }
        (Value::Obj(x), Value::Obj(y)) => x == y,
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

pub fn py_cmp(a: &Value, b: &Value) -> Result<Ordering, PymrError> {
    match (a, b) {
        (Value::Str(x), Value::Str(y)) => Ok(x.cmp(y)),
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x.partial_cmp(&y).ok_or_else(|| PymrError::Type("cannot order NaN".into())),
            _ => Err(PymrError::Type(format!("'<' not supported between {} and {}", a.type_name(), b.type_name()))),
        },
    }
}

pub fn contains(container: &Value, item: &Value) -> Result<bool, PymrError> {
    match container {
        Value::List(v) | Value::Set(v) => Ok(v.borrow().iter().any(|x| py_eq(x, item))),
        Value::Str(s) => match item {
            Value::Str(t) => Ok(s.contains(&**t)),
            other => Err(PymrError::Type(format!("'in <str>' requires str, not {}", other.type_name()))),
        },
        other => Err(PymrError::Type(format!("argument of type {} is not iterable", other.type_name()))),
    }
}

pub fn iterate(v: &Value) -> Result<Vec<Value>, PymrError> {
    match v {
        Value::List(items) | Value::Set(items) => Ok(items.borrow().clone()),
        Value::Str(s) => Ok(s.chars().map(|c| Value::str(&c.to_string())).collect()),
        other => Err(PymrError::Type(format!("{} is not iterable", other.type_name()))),
    }
}
