//! FunQL: the functional query language over the geography database.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! program  := "answer" "(" term ")"
//! term     := "all"
//!           | literal
//!           | op "(" term ("," term)* ")"
//! literal  := ("stateid" | "riverid" | "placeid" | "countryid") "(" name ")"
//!           | "cityid" "(" name "," (name | "_") ")"
//! name     := "'" [^']* "'"
//! op       := [a-z_][a-z0-9_]*
//! ```
//!
//! Relations follow the positional suffix convention: for a relation
//! `rel(a, b)`, `rel_1(S)` fills position 1 with `S` and yields the matching
//! `b`s, `rel_2(S)` fills position 2 and yields the `a`s. So
//! `loc_2(stateid('texas'))` is everything located in Texas and
//! `loc_1(cityid('austin', _))` is everything Austin is located in.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::denotation::{Denotation, Item, Unit};
use crate::geoenv::{CityId, EntityRef, GeoModel, PlaceKind, RiverId, StateId};

/// Rivers longer than this many km count as "major".
pub const MAJOR_RIVER_LENGTH_KM: f64 = 750.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiteralKind {
    State,
    City,
    River,
    Place,
    Country,
}

impl LiteralKind {
    pub fn tag(self) -> &'static str {
        match self {
            LiteralKind::State => "stateid",
            LiteralKind::City => "cityid",
            LiteralKind::River => "riverid",
            LiteralKind::Place => "placeid",
            LiteralKind::Country => "countryid",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "stateid" => LiteralKind::State,
            "cityid" => LiteralKind::City,
            "riverid" => LiteralKind::River,
            "placeid" => LiteralKind::Place,
            "countryid" => LiteralKind::Country,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FunqlAst {
    Apply {
        op: String,
        args: Vec<FunqlAst>,
    },
    /// `qualifier` is the state abbreviation of a `cityid`; `None` renders as `_`.
    Entity {
        kind: LiteralKind,
        name: String,
        qualifier: Option<String>,
    },
    All,
}

impl FunqlAst {
    pub fn apply(op: &str, args: Vec<FunqlAst>) -> Self {
        FunqlAst::Apply { op: op.to_string(), args }
    }

    /// Nesting depth counted in parentheses.
    pub fn depth(&self) -> usize {
        match self {
            FunqlAst::Apply { args, .. } => 1 + args.iter().map(FunqlAst::depth).max().unwrap_or(0),
            FunqlAst::Entity { .. } => 1,
            FunqlAst::All => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunqlError {
    #[error("lex error at {pos}: {message}")]
    Lex { pos: usize, message: String },
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unbalanced parentheses at {pos}")]
    UnbalancedParen { pos: usize },
    #[error("unknown operator '{op}' at {pos}")]
    UnknownOperator { op: String, pos: usize },
    #[error("operator '{op}' expects {expected} argument(s), found {found}")]
    Arity { op: String, expected: usize, found: usize },
    #[error("type error in '{op}': {message}")]
    Type { op: String, message: String },
}

/// Arity of every operator the interpreter understands.
pub fn operator_arity(op: &str) -> Option<usize> {
    Some(match op {
        "exclude" | "intersection" => 2,
        "answer" | "state" | "city" | "river" | "place" | "mountain" | "lake" | "capital" | "major" | "loc_1"
        | "loc_2" | "next_to_1" | "next_to_2" | "traverse_1" | "traverse_2" | "high_point_1" | "high_point_2"
        | "low_point_1" | "low_point_2" | "capital_1" | "capital_2" | "area_1" | "population_1" | "density_1"
        | "elevation_1" | "len" | "size" | "sum" | "count" | "largest" | "smallest" | "highest" | "lowest"
        | "longest" | "shortest" | "largest_one" | "smallest_one" | "most" | "fewest" => 1,
        _ => return None,
    })
}

/// Every operator name, in a stable order.
pub const OPERATORS: &[&str] = &[
    "answer",
    "state",
    "city",
    "river",
    "place",
    "mountain",
    "lake",
    "capital",
    "major",
    "loc_1",
    "loc_2",
    "next_to_1",
    "next_to_2",
    "traverse_1",
    "traverse_2",
    "high_point_1",
    "high_point_2",
    "low_point_1",
    "low_point_2",
    "capital_1",
    "capital_2",
    "area_1",
    "population_1",
    "density_1",
    "elevation_1",
    "len",
    "size",
    "sum",
    "count",
    "largest",
    "smallest",
    "highest",
    "lowest",
    "longest",
    "shortest",
    "largest_one",
    "smallest_one",
    "most",
    "fewest",
    "exclude",
    "intersection",
];

// ---------------------------------------------------------------------------
// Lexing and parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FunqlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            b'\'' => {
                let start = i;
                let close = text[i + 1..]
                    .find('\'')
                    .ok_or(FunqlError::Lex { pos: start, message: "unterminated quoted name".into() })?;
                out.push((Tok::Quoted(text[i + 1..i + 1 + close].to_string()), start));
                i += close + 2;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(FunqlError::Lex { pos: i, message: format!("unexpected character '{ch}'") });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), FunqlError> {
        let pos = self.offset();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            None if want == Tok::RParen => Err(FunqlError::UnbalancedParen { pos }),
            None => Err(FunqlError::Syntax { pos, message: format!("expected {want:?}, found end of input") }),
            Some(t) => Err(FunqlError::Syntax { pos, message: format!("expected {want:?}, found {t:?}") }),
        }
    }

    fn name(&mut self) -> Result<String, FunqlError> {
        let pos = self.offset();
        match self.bump() {
            Some(Tok::Quoted(s)) => Ok(s.to_lowercase()),
            Some(t) => Err(FunqlError::Syntax { pos, message: format!("expected quoted name, found {t:?}") }),
            None => Err(FunqlError::UnbalancedParen { pos }),
        }
    }

    fn term(&mut self) -> Result<FunqlAst, FunqlError> {
        let pos = self.offset();
        let ident = match self.bump() {
            Some(Tok::Ident(s)) => s,
            Some(t) => return Err(FunqlError::Syntax { pos, message: format!("expected operator, found {t:?}") }),
            None => return Err(FunqlError::UnbalancedParen { pos }),
        };
        if ident == "all" && self.peek() != Some(&Tok::LParen) {
            return Ok(FunqlAst::All);
        }
        if let Some(kind) = LiteralKind::from_tag(&ident) {
            self.expect(Tok::LParen)?;
            let name = self.name()?;
            let qualifier = if kind == LiteralKind::City {
                self.expect(Tok::Comma)?;
                let qpos = self.offset();
                match self.bump() {
                    Some(Tok::Quoted(q)) => Some(q.to_lowercase()),
                    Some(Tok::Ident(u)) if u == "_" => None,
                    Some(t) => {
                        return Err(FunqlError::Syntax {
                            pos: qpos,
                            message: format!("expected state or '_', found {t:?}"),
                        })
                    }
                    None => return Err(FunqlError::UnbalancedParen { pos: qpos }),
                }
            } else {
                None
            };
            self.expect(Tok::RParen)?;
            return Ok(FunqlAst::Entity { kind, name, qualifier });
        }
        let arity = operator_arity(&ident).ok_or_else(|| FunqlError::UnknownOperator { op: ident.clone(), pos })?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        if args.len() != arity {
            return Err(FunqlError::Arity { op: ident, expected: arity, found: args.len() });
        }
        Ok(FunqlAst::Apply { op: ident, args })
    }
}

/// Parses a complete program, which must be rooted at `answer(...)`.
pub fn parse_funql(text: &str) -> Result<FunqlAst, FunqlError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let ast = p.term()?;
    if let Some((t, pos)) = p.toks.get(p.pos) {
        return Err(match t {
            Tok::RParen => FunqlError::UnbalancedParen { pos: *pos },
            _ => FunqlError::Syntax { pos: *pos, message: "trailing input".into() },
        });
    }
    match &ast {
        FunqlAst::Apply { op, .. } if op == "answer" => Ok(ast),
        _ => Err(FunqlError::Syntax { pos: 0, message: "program must be rooted at answer(...)".into() }),
    }
}

pub fn render_funql(ast: &FunqlAst) -> String {
    let mut out = String::new();
    render_into(ast, &mut out);
    out
}

fn render_into(ast: &FunqlAst, out: &mut String) {
    match ast {
        FunqlAst::All => out.push_str("all"),
        FunqlAst::Entity { kind, name, qualifier } => {
            let _ = write!(out, "{}('{}'", kind.tag(), name);
            if *kind == LiteralKind::City {
                match qualifier {
                    Some(q) => {
                        let _ = write!(out, ", '{q}'");
                    }
                    None => out.push_str(", _"),
                }
            }
            out.push(')');
        }
        FunqlAst::Apply { op, args } => {
            out.push_str(op);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_into(a, out);
            }
            out.push(')');
        }
    }
}

/// Unigram operators: every applied operator name plus literal kind tags,
/// with the `answer` wrapper left out.
pub fn extract_operators(ast: &FunqlAst) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_ops(ast, &mut out);
    out
}

fn collect_ops(ast: &FunqlAst, out: &mut BTreeSet<String>) {
    match ast {
        FunqlAst::All => {
            out.insert("all".into());
        }
        FunqlAst::Entity { kind, .. } => {
            out.insert(kind.tag().into());
        }
        FunqlAst::Apply { op, args } => {
            if op != "answer" {
                out.insert(op.clone());
            }
            for a in args {
                collect_ops(a, out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Interpretation

#[derive(Debug, Clone, PartialEq)]
enum Val {
    /// Insertion-ordered, duplicate-free.
    Set(Vec<EntityRef>),
    Nums(Vec<f64>, Option<Unit>),
}

fn dedup(items: impl IntoIterator<Item = EntityRef>) -> Vec<EntityRef> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|e| seen.insert(*e)).collect()
}

fn type_err(op: &str, message: impl Into<String>) -> FunqlError {
    FunqlError::Type { op: op.to_string(), message: message.into() }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rel {
    Loc,
    NextTo,
    Traverse,
    HighPoint,
    LowPoint,
    Capital,
}

fn relation_of(op: &str) -> Option<(Rel, u8)> {
    let (base, pos) = op.rsplit_once('_')?;
    let pos = match pos {
        "1" => 1,
        "2" => 2,
        _ => return None,
    };
    let rel = match base {
        "loc" => Rel::Loc,
        "next_to" => Rel::NextTo,
        "traverse" => Rel::Traverse,
        "high_point" => Rel::HighPoint,
        "low_point" => Rel::LowPoint,
        "capital" => Rel::Capital,
        _ => return None,
    };
    Some((rel, pos))
}

const TYPE_PREDICATES: &[&str] = &["state", "city", "river", "place", "mountain", "lake", "capital", "major"];

struct Interp<'m> {
    m: &'m GeoModel,
}

impl<'m> Interp<'m> {
    fn all(&self) -> Vec<EntityRef> {
        self.m.all_entities().into_iter().collect()
    }

    fn literal(&self, kind: LiteralKind, name: &str, qualifier: Option<&str>) -> Vec<EntityRef> {
        match kind {
            LiteralKind::State => self.m.state_by_name(name).map(EntityRef::State).into_iter().collect(),
            LiteralKind::City => self
                .m
                .cities_by_name(name)
                .into_iter()
                .filter(|c| match qualifier {
                    Some(q) => self.m.state(self.m.city(*c).state).abbreviation == q,
                    None => true,
                })
                .map(EntityRef::City)
                .collect(),
            LiteralKind::River => self
                .m
                .rivers
                .iter()
                .position(|r| r.name == name)
                .map(|i| EntityRef::River(RiverId(i)))
                .into_iter()
                .collect(),
            LiteralKind::Place => self
                .m
                .places
                .iter()
                .position(|p| p.name == name)
                .map(|i| EntityRef::Place(crate::geoenv::PlaceId(i)))
                .into_iter()
                .collect(),
            LiteralKind::Country => {
                if name == self.m.country.name {
                    vec![EntityRef::Country]
                } else {
                    Vec::new()
                }
            }
        }
    }

    fn keep_type(&self, pred: &str, e: EntityRef) -> bool {
        let m = self.m;
        match (pred, e) {
            ("state", EntityRef::State(_)) => true,
            ("city", EntityRef::City(_)) => true,
            ("river", EntityRef::River(_)) => true,
            ("place", EntityRef::Place(_)) => true,
            ("mountain", EntityRef::Place(p)) => m.place(p).kind == PlaceKind::Mountain,
            ("lake", EntityRef::Place(p)) => m.place(p).kind == PlaceKind::Lake,
            ("capital", EntityRef::City(c)) => m.city(c).is_capital,
            ("major", EntityRef::City(c)) => m.city(c).is_major,
            ("major", EntityRef::River(r)) => m.river(r).length > MAJOR_RIVER_LENGTH_KM,
            _ => false,
        }
    }

    /// All `b` with `rel(a, b)` for a single `a` (position 1 filled).
    fn forward(&self, rel: Rel, a: EntityRef) -> Vec<EntityRef> {
        let m = self.m;
        match (rel, a) {
            (Rel::Loc, EntityRef::City(c)) => vec![EntityRef::State(m.city(c).state), EntityRef::Country],
            (Rel::Loc, EntityRef::Place(p)) => vec![EntityRef::State(m.place(p).state), EntityRef::Country],
            (Rel::Loc, EntityRef::River(r)) => {
                let mut v: Vec<_> = m.river(r).traverses.iter().map(|s| EntityRef::State(*s)).collect();
                v.push(EntityRef::Country);
                v
            }
            (Rel::Loc, EntityRef::State(_)) => vec![EntityRef::Country],
            (Rel::NextTo, EntityRef::State(s)) => m.state(s).next_to.iter().map(|n| EntityRef::State(*n)).collect(),
            (Rel::Traverse, EntityRef::River(r)) => m.river(r).traverses.iter().map(|s| EntityRef::State(*s)).collect(),
            (Rel::HighPoint, EntityRef::State(s)) => vec![EntityRef::Place(m.state(s).high_point)],
            (Rel::LowPoint, EntityRef::State(s)) => vec![EntityRef::Place(m.state(s).low_point)],
            (Rel::HighPoint, EntityRef::Country) => self.extreme_places(true),
            (Rel::LowPoint, EntityRef::Country) => self.extreme_places(false),
            (Rel::Capital, EntityRef::State(s)) => vec![EntityRef::City(m.state(s).capital)],
            _ => Vec::new(),
        }
    }

    /// All `a` with `rel(a, b)` for a single `b` (position 2 filled).
    fn backward(&self, rel: Rel, b: EntityRef) -> Vec<EntityRef> {
        let m = self.m;
        match (rel, b) {
            (Rel::Loc, EntityRef::State(s)) => {
                let st = m.state(s);
                let mut v: Vec<_> = st.cities.iter().map(|c| EntityRef::City(*c)).collect();
                v.extend(st.places.iter().map(|p| EntityRef::Place(*p)));
                v.extend(st.rivers.iter().map(|r| EntityRef::River(*r)));
                v
            }
            (Rel::Loc, EntityRef::Country) => {
                let mut v: Vec<_> = (0..m.states.len()).map(|i| EntityRef::State(StateId(i))).collect();
                v.extend((0..m.cities.len()).map(|i| EntityRef::City(CityId(i))));
                v.extend((0..m.places.len()).map(|i| EntityRef::Place(crate::geoenv::PlaceId(i))));
                v.extend((0..m.rivers.len()).map(|i| EntityRef::River(RiverId(i))));
                v
            }
            (Rel::NextTo, EntityRef::State(s)) => m.state(s).next_to.iter().map(|n| EntityRef::State(*n)).collect(),
            (Rel::Traverse, EntityRef::State(s)) => m.state(s).rivers.iter().map(|r| EntityRef::River(*r)).collect(),
            (Rel::HighPoint, EntityRef::Place(p)) => (0..m.states.len())
                .filter(|i| m.states[*i].high_point == p)
                .map(|i| EntityRef::State(StateId(i)))
                .collect(),
            (Rel::LowPoint, EntityRef::Place(p)) => (0..m.states.len())
                .filter(|i| m.states[*i].low_point == p)
                .map(|i| EntityRef::State(StateId(i)))
                .collect(),
            (Rel::Capital, EntityRef::City(c)) if m.city(c).is_capital => vec![EntityRef::State(m.city(c).state)],
            _ => Vec::new(),
        }
    }

    fn relate(&self, rel: Rel, position: u8, e: EntityRef) -> Vec<EntityRef> {
        if position == 1 {
            self.forward(rel, e)
        } else {
            self.backward(rel, e)
        }
    }

    fn extreme_places(&self, highest: bool) -> Vec<EntityRef> {
        let all: Vec<_> = (0..self.m.places.len()).map(|i| EntityRef::Place(crate::geoenv::PlaceId(i))).collect();
        self.extremes(all, highest, |e| self.elevation(e))
    }

    fn elevation(&self, e: EntityRef) -> Option<f64> {
        match e {
            EntityRef::Place(p) => Some(self.m.place(p).elevation),
            _ => None,
        }
    }

    fn size(&self, e: EntityRef) -> Option<f64> {
        let m = self.m;
        match e {
            EntityRef::State(s) => Some(m.state(s).size()),
            EntityRef::City(c) => Some(m.city(c).population as f64),
            EntityRef::River(r) => Some(m.river(r).length),
            EntityRef::Country => Some(m.country.area),
            EntityRef::Place(_) => None,
        }
    }

    fn attribute(&self, op: &str, e: EntityRef) -> Option<f64> {
        let m = self.m;
        match (op, e) {
            ("area_1", EntityRef::State(s)) => Some(m.state(s).area),
            ("area_1", EntityRef::Country) => Some(m.country.area),
            ("population_1", EntityRef::State(s)) => Some(m.state(s).population as f64),
            ("population_1", EntityRef::City(c)) => Some(m.city(c).population as f64),
            ("population_1", EntityRef::Country) => Some(m.country.population as f64),
            ("density_1", EntityRef::State(s)) => Some(m.state(s).density),
            ("density_1", EntityRef::Country) if m.country.area > 0.0 => {
                Some(m.country.population as f64 / m.country.area)
            }
            ("elevation_1", _) => self.elevation(e),
            ("len", EntityRef::River(r)) => Some(m.river(r).length),
            ("size", _) => self.size(e),
            _ => None,
        }
    }

    fn attribute_unit(op: &str, entities: &[EntityRef]) -> Option<Unit> {
        match op {
            "area_1" => Some(Unit::SquareKilometers),
            "population_1" => Some(Unit::People),
            "density_1" => Some(Unit::PeoplePerSquareKilometer),
            "elevation_1" => Some(Unit::Meters),
            "len" => Some(Unit::Kilometers),
            "size" => match entities.first() {
                Some(EntityRef::City(_)) => Some(Unit::People),
                Some(EntityRef::River(_)) => Some(Unit::Kilometers),
                Some(_) => Some(Unit::SquareKilometers),
                None => None,
            },
            _ => None,
        }
    }

    /// Every entity attaining the extreme value. Ties are all returned.
    fn extremes(&self, set: Vec<EntityRef>, max: bool, key: impl Fn(EntityRef) -> Option<f64>) -> Vec<EntityRef> {
        let scored: Vec<(EntityRef, f64)> = set.into_iter().filter_map(|e| key(e).map(|k| (e, k))).collect();
        let best = scored.iter().map(|(_, k)| *k).fold(None, |acc: Option<f64>, k| match acc {
            None => Some(k),
            Some(a) => Some(if (max && k > a) || (!max && k < a) { k } else { a }),
        });
        match best {
            None => Vec::new(),
            Some(b) => scored.into_iter().filter(|(_, k)| *k == b).map(|(e, _)| e).collect(),
        }
    }

    fn set(&self, op: &str, v: Val) -> Result<Vec<EntityRef>, FunqlError> {
        match v {
            Val::Set(s) => Ok(s),
            Val::Nums(..) => Err(type_err(op, "expected a set of entities, found numbers")),
        }
    }

    fn eval(&self, ast: &FunqlAst) -> Result<Val, FunqlError> {
        match ast {
            FunqlAst::All => Ok(Val::Set(self.all())),
            FunqlAst::Entity { kind, name, qualifier } => Ok(Val::Set(self.literal(*kind, name, qualifier.as_deref()))),
            FunqlAst::Apply { op, args } => self.apply(op, args),
        }
    }

    fn apply(&self, op: &str, args: &[FunqlAst]) -> Result<Val, FunqlError> {
        let expected = operator_arity(op).ok_or_else(|| FunqlError::UnknownOperator { op: op.to_string(), pos: 0 })?;
        if args.len() != expected {
            return Err(FunqlError::Arity { op: op.to_string(), expected, found: args.len() });
        }
        if op == "answer" {
            return self.eval(&args[0]);
        }
        if TYPE_PREDICATES.contains(&op) {
            let s = self.set(op, self.eval(&args[0])?)?;
            return Ok(Val::Set(s.into_iter().filter(|e| self.keep_type(op, *e)).collect()));
        }
        if let Some((rel, position)) = relation_of(op) {
            let s = self.set(op, self.eval(&args[0])?)?;
            return Ok(Val::Set(dedup(s.into_iter().flat_map(|e| self.relate(rel, position, e)))));
        }
        match op {
            "area_1" | "population_1" | "density_1" | "elevation_1" | "len" | "size" => {
                let s = self.set(op, self.eval(&args[0])?)?;
                let nums = s
                    .iter()
                    .map(|e| {
                        self.attribute(op, *e)
                            .ok_or_else(|| type_err(op, format!("not defined for {}", self.m.key(*e))))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Val::Nums(nums, Self::attribute_unit(op, &s)))
            }
            "count" => {
                let n = match self.eval(&args[0])? {
                    Val::Set(s) => s.len(),
                    Val::Nums(v, _) => v.len(),
                };
                Ok(Val::Nums(vec![n as f64], Some(Unit::Count)))
            }
            "sum" => match self.eval(&args[0])? {
                Val::Nums(v, unit) => Ok(Val::Nums(vec![v.iter().sum()], unit)),
                Val::Set(_) => Err(type_err(op, "expected numbers, found entities")),
            },
            "largest" | "smallest" => {
                let s = self.set(op, self.eval(&args[0])?)?;
                if let Some(e) = s.iter().find(|e| self.size(**e).is_none()) {
                    return Err(type_err(op, format!("size undefined for {}", self.m.key(*e))));
                }
                Ok(Val::Set(self.extremes(s, op == "largest", |e| self.size(e))))
            }
            "highest" | "lowest" => {
                let s = self.set(op, self.eval(&args[0])?)?;
                if let Some(e) = s.iter().find(|e| self.elevation(**e).is_none()) {
                    return Err(type_err(op, format!("elevation undefined for {}", self.m.key(*e))));
                }
                Ok(Val::Set(self.extremes(s, op == "highest", |e| self.elevation(e))))
            }
            "longest" | "shortest" => {
                let s = self.set(op, self.eval(&args[0])?)?;
                let len = |e: EntityRef| match e {
                    EntityRef::River(r) => Some(self.m.river(r).length),
                    _ => None,
                };
                if let Some(e) = s.iter().find(|e| len(**e).is_none()) {
                    return Err(type_err(op, format!("length undefined for {}", self.m.key(*e))));
                }
                Ok(Val::Set(self.extremes(s, op == "longest", len)))
            }
            "largest_one" | "smallest_one" => {
                let (attr, inner) = match &args[0] {
                    FunqlAst::Apply { op: a, args: inner }
                        if matches!(a.as_str(), "area_1" | "population_1" | "density_1") =>
                    {
                        (a.as_str(), &inner[0])
                    }
                    _ => return Err(type_err(op, "argument must be area_1, population_1 or density_1")),
                };
                let s = self.set(op, self.eval(inner)?)?;
                if let Some(e) = s.iter().find(|e| self.attribute(attr, **e).is_none()) {
                    return Err(type_err(op, format!("{attr} undefined for {}", self.m.key(*e))));
                }
                Ok(Val::Set(self.extremes(s, op == "largest_one", |e| self.attribute(attr, e))))
            }
            "most" | "fewest" => self.most(op, &args[0]),
            "exclude" | "intersection" => {
                let a = self.set(op, self.eval(&args[0])?)?;
                let b: HashSet<_> = self.set(op, self.eval(&args[1])?)?.into_iter().collect();
                let keep = op == "intersection";
                Ok(Val::Set(a.into_iter().filter(|e| b.contains(e) == keep).collect()))
            }
            _ => Err(FunqlError::UnknownOperator { op: op.to_string(), pos: 0 }),
        }
    }

    /// `most(P(...(rel_i(S))))`: the candidates of the whole argument that
    /// relate to the largest number of members of `S`.
    fn most(&self, op: &str, arg: &FunqlAst) -> Result<Val, FunqlError> {
        let mut cursor = arg;
        let (rel, position, pivot_src) = loop {
            match cursor {
                FunqlAst::Apply { op: inner, args } if TYPE_PREDICATES.contains(&inner.as_str()) => cursor = &args[0],
                FunqlAst::Apply { op: inner, args } => match relation_of(inner) {
                    Some((rel, pos)) => break (rel, pos, &args[0]),
                    None => return Err(type_err(op, "argument must have the form P(rel_i(S))")),
                },
                _ => return Err(type_err(op, "argument must have the form P(rel_i(S))")),
            }
        };
        let candidates = self.set(op, self.eval(arg)?)?;
        let pivots = self.set(op, self.eval(pivot_src)?)?;
        let related: Vec<Vec<EntityRef>> = pivots.iter().map(|s| self.relate(rel, position, *s)).collect();
        let counts = |p: EntityRef| related.iter().filter(|r| r.contains(&p)).count() as f64;
        Ok(Val::Set(self.extremes(candidates, op == "most", |p| Some(counts(p)))))
    }
}

pub fn exec_funql(ast: &FunqlAst, model: &GeoModel) -> Result<Denotation, FunqlError> {
    match ast {
        FunqlAst::Apply { op, args } if op == "answer" && args.len() == 1 => {}
        _ => return Err(FunqlError::Syntax { pos: 0, message: "program must be rooted at answer(...)".into() }),
    }
    let interp = Interp { m: model };
    Ok(match interp.eval(ast)? {
        Val::Set(s) => Denotation::from_items(s.into_iter().map(|e| Item::Entity(model.key(e))).collect()),
        Val::Nums(v, unit) => Denotation::from_items(v.into_iter().map(|n| Item::Number(n, unit)).collect()),
    })
}
