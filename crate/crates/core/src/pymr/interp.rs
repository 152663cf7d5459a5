use std::collections::HashMap;
use std::rc::Rc;

use super::ast::*;
use super::binding::EnvBinding;
use super::value::{contains, iterate, py_cmp, py_eq, Func, Value};
use super::PymrError;
use crate::calenv::EventConstraints;

/// Upper bound on evaluation steps; guards against loops over a list
/// that grows while it is iterated.
const STEP_BUDGET: usize = 2_000_000;

pub const BUILTINS: &[&str] = &["max", "min", "len", "sum", "sorted", "list", "set", "any", "all", "abs"];

pub(crate) enum Flow {
    Normal,
    Return(Value),
}

pub(crate) struct Interp<'w> {
    pub binding: &'w EnvBinding<'w>,
    scopes: Vec<HashMap<String, Value>>,
    steps: usize,
    pub events: Vec<EventConstraints>,
}

pub(crate) struct Args {
    pub pos: Vec<Value>,
    pub kw: Vec<(String, Value)>,
}

impl Args {
    /// Binds to `params` (name, required) Python-style.
    pub fn bind(self, fname: &str, params: &[(&str, bool)]) -> Result<Vec<Option<Value>>, PymrError> {
        if self.pos.len() > params.len() {
            return Err(PymrError::Type(format!(
                "{fname}() takes {} positional arguments but {} were given",
                params.len(),
                self.pos.len()
            )));
        }
        let mut out: Vec<Option<Value>> = vec![None; params.len()];
        for (i, v) in self.pos.into_iter().enumerate() {
            out[i] = Some(v);
        }
        for (k, v) in self.kw {
            let i = params
                .iter()
                .position(|(p, _)| *p == k)
                .ok_or_else(|| PymrError::Type(format!("{fname}() got an unexpected keyword argument '{k}'")))?;
            if out[i].is_some() {
                return Err(PymrError::Type(format!("{fname}() got multiple values for argument '{k}'")));
            }
            out[i] = Some(v);
        }
        for (i, (p, required)) in params.iter().enumerate() {
            if *required && out[i].is_none() {
                return Err(PymrError::Type(format!("{fname}() missing required argument '{p}'")));
            }
        }
        Ok(out)
    }

    pub fn none(self, fname: &str) -> Result<(), PymrError> {
        self.bind(fname, &[]).map(|_| ())
    }
}

impl<'w> Interp<'w> {
    pub fn new(binding: &'w EnvBinding<'w>) -> Self {
        Interp { binding, scopes: vec![HashMap::new()], steps: 0, events: Vec::new() }
    }

    fn tick(&mut self) -> Result<(), PymrError> {
        self.steps += 1;
        if self.steps > STEP_BUDGET {
            return Err(PymrError::Budget);
        }
        Ok(())
    }

    fn lookup(&self, name: &str) -> Result<Value, PymrError> {
        for scope in self.scopes.iter().rev() {
            if let Some(v) = scope.get(name) {
                return Ok(v.clone());
            }
        }
        if let Some(v) = self.binding.root(name) {
            return Ok(v);
        }
        if let Some(b) = BUILTINS.iter().find(|b| **b == name) {
            return Ok(Value::Func(Func::Builtin(b)));
        }
        Err(PymrError::NameNotFound(name.to_string()))
    }

    fn bind_local(&mut self, name: &str, v: Value) {
        self.scopes.last_mut().expect("a scope").insert(name.to_string(), v);
    }

    pub fn run(&mut self, body: &[Stmt]) -> Result<Value, PymrError> {
        match self.block(body)? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::None),
        }
    }

    fn block(&mut self, body: &[Stmt]) -> Result<Flow, PymrError> {
        for s in body {
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow, PymrError> {
        self.tick()?;
        match s {
            Stmt::Pass => {}
            Stmt::Assign { target, value } => {
                let v = self.eval(value)?;
                self.bind_local(target, v);
            }
            Stmt::Expr(e) => {
                self.eval(e)?;
            }
            Stmt::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e)?,
                    None => Value::None,
                };
                return Ok(Flow::Return(v));
            }
            Stmt::If { cond, body, orelse } => {
                let branch = if self.eval(cond)?.truthy() { body } else { orelse };
                return self.block(branch);
            }
            Stmt::For { target, iter, body } => {
                let it = self.eval(iter)?;
                // Lists are iterated live, like the host language does.
                if let Value::List(items) = &it {
                    let mut i = 0;
                    loop {
                        let next = items.borrow().get(i).cloned();
                        let Some(v) = next else { break };
                        self.bind_local(target, v);
                        if let Flow::Return(r) = self.block(body)? {
                            return Ok(Flow::Return(r));
                        }
                        i += 1;
                    }
                } else {
                    for v in iterate(&it)? {
                        self.bind_local(target, v);
                        if let Flow::Return(r) = self.block(body)? {
                            return Ok(Flow::Return(r));
                        }
                    }
                }
            }
        }
        Ok(Flow::Normal)
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Value, PymrError> {
        self.tick()?;
        match e {
            Expr::Lit(l) => Ok(match l {
                Literal::None => Value::None,
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(n) => Value::Int(*n),
                Literal::Float(f) => Value::Float(*f),
                Literal::Str(s) => Value::str(s),
            }),
            Expr::Name(n) => self.lookup(n),
            Expr::List(items) => {
                let vs = items.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>, _>>()?;
                Ok(Value::list(vs))
            }
            Expr::Attr(obj, name) => {
                let o = self.eval(obj)?;
                self.get_attr(o, name)
            }
            Expr::Index(obj, idx) => {
                let o = self.eval(obj)?;
                let i = self.eval(idx)?;
                index(&o, &i)
            }
            Expr::Call { func, args, kwargs } => {
                let f = self.eval(func)?;
                let pos = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                let mut kw = Vec::with_capacity(kwargs.len());
                for (k, v) in kwargs {
                    kw.push((k.clone(), self.eval(v)?));
                }
                self.call(f, Args { pos, kw })
            }
            Expr::Lambda { param, body } => Ok(Value::Func(Func::Lambda(Rc::new((param.clone(), (**body).clone()))))),
            Expr::Comp { elt, clauses, .. } => {
                let mut out = Vec::new();
                self.scopes.push(HashMap::new());
                let r = self.comp(elt, clauses, &mut out);
                self.scopes.pop();
                r?;
                Ok(Value::list(out))
            }
            Expr::Bool(op, a, b) => {
                let x = self.eval(a)?;
                match (op, x.truthy()) {
                    (BoolOp::And, false) | (BoolOp::Or, true) => Ok(x),
                    _ => self.eval(b),
                }
            }
            Expr::Not(a) => Ok(Value::Bool(!self.eval(a)?.truthy())),
            Expr::Compare(a, op, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                compare(&x, *op, &y).map(Value::Bool)
            }
            Expr::Arith(a, op, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                arith(&x, *op, &y)
            }
            Expr::Neg(a) => match self.eval(a)? {
                Value::Int(n) => {
                    n.checked_neg().map(Value::Int).ok_or_else(|| PymrError::Type("integer overflow".into()))
                }
                Value::Float(f) => Ok(Value::Float(-f)),
                Value::Bool(b) => Ok(Value::Int(-(b as i64))),
                other => Err(PymrError::Type(format!("bad operand type for unary -: {}", other.type_name()))),
            },
        }
    }

    fn comp(&mut self, elt: &Expr, clauses: &[CompClause], out: &mut Vec<Value>) -> Result<(), PymrError> {
        let Some((first, rest)) = clauses.split_first() else {
            out.push(self.eval(elt)?);
            return Ok(());
        };
        match first {
            CompClause::If(cond) => {
                if self.eval(cond)?.truthy() {
                    self.comp(elt, rest, out)?;
                }
            }
            CompClause::For { target, iter } => {
                let it = self.eval(iter)?;
                for v in iterate(&it)? {
                    self.bind_local(target, v);
                    self.comp(elt, rest, out)?;
                }
            }
        }
        Ok(())
    }

    fn get_attr(&mut self, o: Value, name: &str) -> Result<Value, PymrError> {
        match &o {
            Value::List(_) if matches!(name, "append" | "extend" | "remove") => {
                Ok(Value::Func(Func::Method(Box::new(o), name.to_string())))
            }
            Value::Set(_) if matches!(name, "add" | "update" | "remove") => {
                Ok(Value::Func(Func::Method(Box::new(o), name.to_string())))
            }
            Value::Obj(obj) => self.binding.get_attr(obj, name).map(|r| match r {
                super::binding::Attr::Value(v) => v,
                super::binding::Attr::Method => Value::Func(Func::Method(Box::new(o.clone()), name.to_string())),
            }),
            _ => Err(PymrError::AttributeNotFound { type_name: o.type_name().to_string(), attr: name.to_string() }),
        }
    }

    pub fn call_lambda(&mut self, f: &Value, arg: Value) -> Result<Value, PymrError> {
        match f {
            Value::Func(Func::Lambda(l)) => {
                let mut frame = HashMap::new();
                frame.insert(l.0.clone(), arg);
                self.scopes.push(frame);
                let r = self.eval(&l.1);
                self.scopes.pop();
                r
            }
            Value::Func(_) => self.call(f.clone(), Args { pos: vec![arg], kw: Vec::new() }),
            other => Err(PymrError::Type(format!("{} is not callable", other.type_name()))),
        }
    }

    fn call(&mut self, f: Value, args: Args) -> Result<Value, PymrError> {
        match f {
            Value::Func(Func::Builtin(name)) => self.builtin(name, args),
            Value::Func(Func::Lambda(_)) => {
                if args.pos.len() != 1 || !args.kw.is_empty() {
                    return Err(PymrError::Type("lambda takes exactly one argument".into()));
                }
                let a = args.pos.into_iter().next().expect("one");
                self.call_lambda(&f, a)
            }
            Value::Func(Func::Method(recv, name)) => match *recv {
                Value::List(items) => {
                    let [x] = one_arg(&name, args)?;
                    match name.as_str() {
                        "append" => items.borrow_mut().push(x),
                        "extend" => {
                            let more = iterate(&x)?;
                            items.borrow_mut().extend(more);
                        }
                        _ => {
                            let pos = items.borrow().iter().position(|v| py_eq(v, &x));
                            match pos {
                                Some(i) => {
                                    items.borrow_mut().remove(i);
                                }
                                None => return Err(PymrError::Value("list.remove(x): x not in list".into())),
                            }
                        }
                    }
                    Ok(Value::None)
                }
                Value::Set(items) => {
                    let [x] = one_arg(&name, args)?;
                    let add = |items: &std::cell::RefCell<Vec<Value>>, v: Value| {
                        let present = items.borrow().iter().any(|y| py_eq(y, &v));
                        if !present {
                            items.borrow_mut().push(v);
                        }
                    };
                    match name.as_str() {
                        "add" => add(&items, x),
                        "update" => {
                            for v in iterate(&x)? {
                                add(&items, v);
                            }
                        }
                        _ => {
                            let pos = items.borrow().iter().position(|v| py_eq(v, &x));
                            match pos {
                                Some(i) => {
                                    items.borrow_mut().remove(i);
                                }
                                None => return Err(PymrError::Value("set.remove(x): x not in set".into())),
                            }
                        }
                    }
                    Ok(Value::None)
                }
                Value::Obj(obj) => {
                    let binding = self.binding;
                    binding.call_method(self, &obj, &name, args)
                }
                other => Err(PymrError::Type(format!("{} has no methods", other.type_name()))),
            },
            Value::Obj(obj) => {
                let binding = self.binding;
                binding.call_object(self, &obj, args)
            }
            other => Err(PymrError::Type(format!("'{}' object is not callable", other.type_name()))),
        }
    }

    fn keyed_extreme(&mut self, name: &str, args: Args, want: std::cmp::Ordering) -> Result<Value, PymrError> {
        let mut key = None;
        let mut default = None;
        for (k, v) in args.kw {
            match k.as_str() {
                "key" => key = Some(v),
                "default" => default = Some(v),
                _ => return Err(PymrError::Type(format!("{name}() got an unexpected keyword argument '{k}'"))),
            }
        }
        let items = match args.pos.len() {
            0 => return Err(PymrError::Type(format!("{name} expected at least 1 argument, got 0"))),
            1 => iterate(&args.pos[0])?,
            _ => args.pos,
        };
        let mut best: Option<(Value, Value)> = None;
        for item in items {
            let k = match &key {
                Some(f) if !matches!(f, Value::None) => self.call_lambda(f, item.clone())?,
                _ => item.clone(),
            };
            let better = match &best {
                None => true,
                Some((bk, _)) => py_cmp(&k, bk)? == want,
            };
            if better {
                best = Some((k, item));
            }
        }
        match (best, default) {
            (Some((_, v)), _) => Ok(v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(PymrError::EmptySequence(name.to_string())),
        }
    }

    fn builtin(&mut self, name: &'static str, args: Args) -> Result<Value, PymrError> {
        match name {
            "max" => self.keyed_extreme(name, args, std::cmp::Ordering::Greater),
            "min" => self.keyed_extreme(name, args, std::cmp::Ordering::Less),
            "len" => {
                let [x] = one_arg(name, args)?;
                match &x {
                    Value::List(v) | Value::Set(v) => Ok(Value::Int(v.borrow().len() as i64)),
                    Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
                    other => Err(PymrError::Type(format!("object of type {} has no len()", other.type_name()))),
                }
            }
            "sum" => {
                let [x] = one_arg(name, args)?;
                let mut acc = Value::Int(0);
                for v in iterate(&x)? {
                    acc = arith(&acc, ArithOp::Add, &v)?;
                }
                Ok(acc)
            }
            "abs" => match one_arg(name, args)? {
                [Value::Int(n)] => {
                    n.checked_abs().map(Value::Int).ok_or_else(|| PymrError::Type("integer overflow".into()))
                }
                [Value::Float(f)] => Ok(Value::Float(f.abs())),
                [other] => Err(PymrError::Type(format!("bad operand type for abs(): {}", other.type_name()))),
            },
            "list" | "set" => {
                let b = args.bind(name, &[("iterable", false)])?;
                let items = match &b[0] {
                    Some(v) => iterate(v)?,
                    None => Vec::new(),
                };
                Ok(if name == "list" { Value::list(items) } else { Value::set(items) })
            }
            "any" => {
                let [x] = one_arg(name, args)?;
                Ok(Value::Bool(iterate(&x)?.iter().any(Value::truthy)))
            }
            "all" => {
                let [x] = one_arg(name, args)?;
                Ok(Value::Bool(iterate(&x)?.iter().all(Value::truthy)))
            }
            "sorted" => {
                let b = args.bind(name, &[("iterable", true), ("key", false), ("reverse", false)])?;
                let items = iterate(b[0].as_ref().expect("required"))?;
                let mut keyed = Vec::with_capacity(items.len());
                for item in items {
                    let k = match &b[1] {
                        Some(f) if !matches!(f, Value::None) => self.call_lambda(f, item.clone())?,
                        _ => item.clone(),
                    };
                    keyed.push((k, item));
                }
                let reverse = b[2].as_ref().is_some_and(Value::truthy);
                let mut failure = None;
                // Equal keys keep their input order in both directions.
                keyed.sort_by(|(a, _), (b, _)| {
                    let r = if reverse { py_cmp(b, a) } else { py_cmp(a, b) };
                    r.unwrap_or_else(|e| {
                        failure.get_or_insert(e);
                        std::cmp::Ordering::Equal
                    })
                });
                if let Some(e) = failure {
                    return Err(e);
                }
                let out: Vec<Value> = keyed.into_iter().map(|(_, v)| v).collect();
                Ok(Value::list(out))
            }
            other => Err(PymrError::NameNotFound(other.to_string())),
        }
    }
}

fn one_arg(fname: &str, args: Args) -> Result<[Value; 1], PymrError> {
    if !args.kw.is_empty() {
        return Err(PymrError::Type(format!("{fname}() takes no keyword arguments")));
    }
    let n = args.pos.len();
    let arr: [Value; 1] = args
        .pos
        .try_into()
        .map_err(|_| PymrError::Type(format!("{fname}() takes exactly one argument ({n} given)")))?;
    Ok(arr)
}

fn index(o: &Value, i: &Value) -> Result<Value, PymrError> {
    let Value::List(items) = o else {
        return Err(PymrError::Type(format!("'{}' object is not subscriptable", o.type_name())));
    };
    let Some(n) = (match i {
        Value::Int(n) => Some(*n),
        Value::Bool(b) => Some(*b as i64),
        _ => None,
    }) else {
        return Err(PymrError::Type(format!("list indices must be integers, not {}", i.type_name())));
    };
    let items = items.borrow();
    let len = items.len() as i64;
    let k = if n < 0 { n + len } else { n };
    if k < 0 || k >= len {
        return Err(PymrError::IndexOutOfRange { index: n, len: items.len() });
    }
    Ok(items[k as usize].clone())
}

fn compare(x: &Value, op: CmpOp, y: &Value) -> Result<bool, PymrError> {
    use std::cmp::Ordering::*;
    Ok(match op {
        CmpOp::Eq => py_eq(x, y),
        CmpOp::NotEq => !py_eq(x, y),
        CmpOp::Is => {
            matches!((x, y), (Value::None, Value::None))
                || (!matches!(x, Value::None) && !matches!(y, Value::None) && py_eq(x, y))
        }
        CmpOp::IsNot => !compare(x, CmpOp::Is, y)?,
        CmpOp::In => contains(y, x)?,
        CmpOp::NotIn => !contains(y, x)?,
        CmpOp::Lt => py_cmp(x, y)? == Less,
        CmpOp::Gt => py_cmp(x, y)? == Greater,
        CmpOp::LtE => py_cmp(x, y)? != Greater,
        CmpOp::GtE => py_cmp(x, y)? != Less,
    })
}

fn arith(x: &Value, op: ArithOp, y: &Value) -> Result<Value, PymrError> {
    let overflow = || PymrError::Type("integer overflow".into());
    match (x, op, y) {
        (Value::Str(a), ArithOp::Add, Value::Str(b)) => return Ok(Value::str(&format!("{a}{b}"))),
        (Value::List(a), ArithOp::Add, Value::List(b)) => {
            let mut v = a.borrow().clone();
            v.extend(b.borrow().iter().cloned());
            return Ok(Value::list(v));
        }
        _ => {}
    }
    let bad =
        || PymrError::Type(format!("unsupported operand types for {op:?}: {} and {}", x.type_name(), y.type_name()));
    let both_int = matches!(x, Value::Int(_) | Value::Bool(_)) && matches!(y, Value::Int(_) | Value::Bool(_));
    if both_int && op != ArithOp::Div {
        let (a, b) = (x.as_int().ok_or_else(bad)?, y.as_int().ok_or_else(bad)?);
        let r = match op {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
            _ => a.checked_mul(b),
        };
        return r.map(Value::Int).ok_or_else(overflow);
    }
    let (a, b) = (x.as_f64().ok_or_else(bad)?, y.as_f64().ok_or_else(bad)?);
    Ok(Value::Float(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => {
            if b == 0.0 {
                return Err(PymrError::Value("division by zero".into()));
            }
            a / b
        }
    }))
}
