//! Domain APIs exposed to PyMR programs. The set of reachable names is
//! closed: roots, the classes below, and (for the social domain) the enum
//! members of the loaded database.

use std::collections::BTreeSet;
use std::rc::Rc;

use super::interp::{Args, Interp};
use super::value::{iterate, Obj, Value};
use super::PymrError;
use crate::calenv::{CalendarWorld, DateTimeClause, EventConstraints, TimeOfDay};
use crate::denotation::{Denotation, EntityKey, EntityKind, Item, Outcome};
use crate::geoenv::{CityId, EntityRef, GeoKind, GeoModel, PlaceId, RiverId, StateId};
use crate::socialenv::SocialDb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvTag {
    Geo,
    Social,
    Calendar,
}

impl EnvTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvTag::Geo => "geo",
            EnvTag::Social => "social",
            EnvTag::Calendar => "calendar",
        }
    }
}

/// A class visible to programs: data attributes and callable methods.
#[derive(Debug, Clone, Copy)]
pub struct ClassDecl {
    pub name: &'static str,
    pub attributes: &'static [&'static str],
    pub methods: &'static [&'static str],
}

pub const GEO_ROOTS: &[&str] = &["geo_model"];
pub const GEO_CLASSES: &[ClassDecl] = &[
    ClassDecl {
        name: "GeoModel",
        attributes: &["states", "cities", "rivers", "places", "country"],
        methods: &["find_state", "find_city", "find_river", "find_place"],
    },
    ClassDecl {
        name: "State",
        attributes: &[
            "name",
            "abbreviation",
            "capital",
            "area",
            "size",
            "population",
            "density",
            "high_point",
            "low_point",
            "next_to",
            "rivers",
            "cities",
            "places",
        ],
        methods: &[],
    },
    ClassDecl { name: "City", attributes: &["name", "state", "population", "is_major", "is_capital"], methods: &[] },
    ClassDecl { name: "River", attributes: &["name", "length", "traverses"], methods: &[] },
    ClassDecl { name: "Place", attributes: &["name", "elevation", "state", "kind"], methods: &[] },
    ClassDecl { name: "Country", attributes: &["name", "area", "population", "states"], methods: &[] },
];

/// Enum namespaces and the database enum kind behind each.
pub const SOCIAL_ENUMS: &[(&str, &str)] = &[
    ("Gender", "gender"),
    ("RelationshipStatus", "relationship_status"),
    ("City", "city"),
    ("Company", "company"),
    ("JobTitle", "job_title"),
    ("University", "university"),
];
pub const SOCIAL_ROOTS: &[&str] = &["api"];
pub const SOCIAL_CLASSES: &[ClassDecl] = &[
    ClassDecl { name: "API", attributes: &["people"], methods: &["find_person_by_id"] },
    ClassDecl {
        name: "Person",
        attributes: &[
            "id",
            "name",
            "gender",
            "birthdate",
            "birthplace",
            "height",
            "relationship_status",
            "friends",
            "education",
            "employment",
            "is_student",
        ],
        methods: &[],
    },
    ClassDecl { name: "Education", attributes: &["institution", "start_date", "end_date"], methods: &[] },
    ClassDecl { name: "Employment", attributes: &["employer", "job_title", "start_date", "end_date"], methods: &[] },
];

pub const CALENDAR_ROOTS: &[&str] = &["api", "Event", "DateTimeClause", "DateTimeValues"];
pub const EVENT_PARAMS: &[&str] =
    &["subject", "starts_at", "ends_at", "location", "attendees", "attendees_to_avoid", "duration_minutes"];
pub const CALENDAR_CLASSES: &[ClassDecl] = &[
    ClassDecl { name: "API", attributes: &[], methods: &["find_person", "get_current_user", "add_event"] },
    ClassDecl { name: "Person", attributes: &["name"], methods: &["find_manager_of", "find_team_of"] },
    ClassDecl { name: "Event", attributes: EVENT_PARAMS, methods: &[] },
    ClassDecl { name: "DateTimeClause", attributes: &[], methods: &["get_next_dow", "date_by_mdy", "time_by_hm"] },
    ClassDecl { name: "DateTimeValues", attributes: &["Today", "Tomorrow"], methods: &[] },
];

/// The environment a program runs against.
#[derive(Debug, Clone, Copy)]
pub enum EnvBinding<'w> {
    Geo(&'w GeoModel),
    Social(&'w SocialDb),
    Calendar(&'w CalendarWorld),
}

pub(crate) enum Attr {
    Value(Value),
    Method,
}

fn missing(obj: &Obj, attr: &str) -> PymrError {
    PymrError::AttributeNotFound { type_name: Value::Obj(obj.clone()).type_name().to_string(), attr: attr.to_string() }
}

fn list_of<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> Obj) -> Value {
    Value::list(items.into_iter().map(|x| Value::Obj(f(x))).collect())
}

fn int(n: impl TryInto<i64>) -> Value {
    Value::Int(n.try_into().unwrap_or(i64::MAX))
}

fn text_arg(fname: &str, v: &Option<Value>) -> Result<String, PymrError> {
    match v {
        Some(Value::Str(s)) => Ok(s.to_string()),
        Some(other) => Err(PymrError::Type(format!("{fname}() expects a str, got {}", other.type_name()))),
        None => Err(PymrError::Type(format!("{fname}() missing a name"))),
    }
}

fn int_arg(fname: &str, v: &Option<Value>) -> Result<i64, PymrError> {
    v.as_ref().and_then(Value::as_int).ok_or_else(|| PymrError::Type(format!("{fname}() expects an int argument")))
}

impl<'w> EnvBinding<'w> {
    pub fn tag(&self) -> EnvTag {
        match self {
            EnvBinding::Geo(_) => EnvTag::Geo,
            EnvBinding::Social(_) => EnvTag::Social,
            EnvBinding::Calendar(_) => EnvTag::Calendar,
        }
    }

    pub fn classes(&self) -> &'static [ClassDecl] {
        match self {
            EnvBinding::Geo(_) => GEO_CLASSES,
            EnvBinding::Social(_) => SOCIAL_CLASSES,
            EnvBinding::Calendar(_) => CALENDAR_CLASSES,
        }
    }

    /// Every name a program can reach, plus class names.
    pub fn api_names(&self) -> BTreeSet<String> {
        let roots: &[&str] = match self {
            EnvBinding::Geo(_) => GEO_ROOTS,
            EnvBinding::Social(_) => SOCIAL_ROOTS,
            EnvBinding::Calendar(_) => CALENDAR_ROOTS,
        };
        let mut out: BTreeSet<String> = roots.iter().map(|s| s.to_string()).collect();
        for c in self.classes() {
            out.insert(c.name.to_string());
            out.extend(c.attributes.iter().chain(c.methods).map(|s| s.to_string()));
        }
        if let EnvBinding::Social(db) = self {
            for (ns, kind) in SOCIAL_ENUMS {
                out.insert(ns.to_string());
                out.extend(db.enums.get(*kind).into_iter().flatten().cloned());
            }
        }
        out
    }

    pub(crate) fn root(&self, name: &str) -> Option<Value> {
        let obj = match (self, name) {
            (EnvBinding::Geo(_), "geo_model") => Obj::GeoModel,
            (EnvBinding::Social(_), "api") => Obj::SocialApi,
            (EnvBinding::Social(_), _) => Obj::EnumNamespace(SOCIAL_ENUMS.iter().find(|(ns, _)| *ns == name)?.0),
            (EnvBinding::Calendar(_), "api") => Obj::CalendarApi,
            (EnvBinding::Calendar(_), "Event") => Obj::EventClass,
            (EnvBinding::Calendar(_), "DateTimeClause") => Obj::ClauseNamespace,
            (EnvBinding::Calendar(_), "DateTimeValues") => Obj::ValuesNamespace,
            _ => return None,
        };
        Some(Value::Obj(obj))
    }

    pub(crate) fn get_attr(&self, obj: &Obj, name: &str) -> Result<Attr, PymrError> {
        let v = match self {
            EnvBinding::Geo(m) => geo_attr(m, obj, name)?,
            EnvBinding::Social(db) => social_attr(db, obj, name)?,
            EnvBinding::Calendar(w) => calendar_attr(w, obj, name)?,
        };
        Ok(v)
    }

    pub(crate) fn call_method(&self, it: &mut Interp, obj: &Obj, name: &str, args: Args) -> Result<Value, PymrError> {
        match self {
            EnvBinding::Geo(m) => geo_call(m, obj, name, args),
            EnvBinding::Social(db) => {
                let b = args.bind(name, &[("id", true)])?;
                let id = text_arg(name, &b[0])?;
                Ok(db.person_index(&id).map(|i| Value::Obj(Obj::Person(i))).unwrap_or(Value::None))
            }
            EnvBinding::Calendar(w) => calendar_call(it, w, obj, name, args),
        }
    }

    pub(crate) fn call_object(&self, _it: &mut Interp, obj: &Obj, args: Args) -> Result<Value, PymrError> {
        match obj {
            Obj::EventClass => build_event(args),
            other => {
                Err(PymrError::Type(format!("'{}' object is not callable", Value::Obj(other.clone()).type_name())))
            }
        }
    }

    fn item(&self, v: &Value) -> Result<Item, PymrError> {
        let denotable = |v: &Value| PymrError::Type(format!("cannot use a {} as an answer", v.type_name()));
        Ok(match v {
            Value::Int(n) => Item::Number(*n as f64, None),
            Value::Float(f) => Item::Number(*f, None),
            Value::Bool(b) => Item::Entity(EntityKey::new(EntityKind::Literal, b.to_string())),
            Value::Str(s) => Item::Entity(EntityKey::new(EntityKind::Literal, s.to_string())),
            Value::Obj(o) => match (self, o) {
                (EnvBinding::Geo(m), Obj::State(i)) => Item::Entity(m.key(EntityRef::State(StateId(*i)))),
                (EnvBinding::Geo(m), Obj::City(i)) => Item::Entity(m.key(EntityRef::City(CityId(*i)))),
                (EnvBinding::Geo(m), Obj::River(i)) => Item::Entity(m.key(EntityRef::River(RiverId(*i)))),
                (EnvBinding::Geo(m), Obj::Place(i)) => Item::Entity(m.key(EntityRef::Place(PlaceId(*i)))),
                (EnvBinding::Geo(m), Obj::Country) => Item::Entity(m.key(EntityRef::Country)),
                (EnvBinding::Social(db), Obj::Person(i)) => {
                    Item::Entity(EntityKey::new(EntityKind::Person, db.people[*i].id.clone()))
                }
                (_, Obj::EnumValue(e)) => Item::Entity(EntityKey::new(EntityKind::Value, e.clone())),
                _ => return Err(denotable(v)),
            },
            _ => return Err(denotable(v)),
        })
    }

    pub(crate) fn outcome(&self, ret: Value, events: Vec<EventConstraints>) -> Result<Outcome, PymrError> {
        if let EnvBinding::Calendar(w) = self {
            let (_, delta) = w.create_events(&events)?;
            return Ok(Outcome::Delta(delta));
        }
        let items = match &ret {
            Value::None => return Err(PymrError::NoAnswer),
            Value::List(v) | Value::Set(v) => v.borrow().iter().map(|x| self.item(x)).collect::<Result<Vec<_>, _>>()?,
            other => vec![self.item(other)?],
        };
        Ok(Outcome::Denotation(Denotation::from_items(items)))
    }
}

fn geo_attr(m: &GeoModel, obj: &Obj, name: &str) -> Result<Attr, PymrError> {
    use Attr::Value as V;
    let f = |x: f64| V(Value::Float(x));
    Ok(match obj {
        Obj::GeoModel => match name {
            "states" => V(list_of(0..m.states.len(), Obj::State)),
            "cities" => V(list_of(0..m.cities.len(), Obj::City)),
            "rivers" => V(list_of(0..m.rivers.len(), Obj::River)),
            "places" => V(list_of(0..m.places.len(), Obj::Place)),
            "country" => V(Value::Obj(Obj::Country)),
            "find_state" | "find_city" | "find_river" | "find_place" => Attr::Method,
            _ => return Err(missing(obj, name)),
        },
        Obj::State(i) => {
            let s = &m.states[*i];
            match name {
                "name" => V(Value::str(&s.name)),
                "abbreviation" => V(Value::str(&s.abbreviation)),
                "capital" => V(Value::Obj(Obj::City(s.capital.0))),
                "area" => f(s.area),
                "size" => f(s.size()),
                "population" => V(int(s.population)),
                "density" => f(s.density),
                "high_point" => V(Value::Obj(Obj::Place(s.high_point.0))),
                "low_point" => V(Value::Obj(Obj::Place(s.low_point.0))),
                "next_to" => V(list_of(s.next_to.iter().map(|x| x.0), Obj::State)),
                "rivers" => V(list_of(s.rivers.iter().map(|x| x.0), Obj::River)),
                "cities" => V(list_of(s.cities.iter().map(|x| x.0), Obj::City)),
                "places" => V(list_of(s.places.iter().map(|x| x.0), Obj::Place)),
                _ => return Err(missing(obj, name)),
            }
        }
        Obj::City(i) => {
            let c = &m.cities[*i];
            match name {
                "name" => V(Value::str(&c.name)),
                "state" => V(Value::Obj(Obj::State(c.state.0))),
                "population" => V(int(c.population)),
                "is_major" => V(Value::Bool(c.is_major)),
                "is_capital" => V(Value::Bool(c.is_capital)),
                _ => return Err(missing(obj, name)),
            }
        }
        Obj::River(i) => {
            let r = &m.rivers[*i];
            match name {
                "name" => V(Value::str(&r.name)),
                "length" => f(r.length),
                "traverses" => V(list_of(r.traverses.iter().map(|x| x.0), Obj::State)),
                _ => return Err(missing(obj, name)),
            }
        }
        Obj::Place(i) => {
            let p = &m.places[*i];
            match name {
                "name" => V(Value::str(&p.name)),
                "elevation" => f(p.elevation),
                "state" => V(Value::Obj(Obj::State(p.state.0))),
                "kind" => V(Value::str(p.kind.as_str())),
                _ => return Err(missing(obj, name)),
            }
        }
        Obj::Country => match name {
            "name" => V(Value::str(&m.country.name)),
            "area" => f(m.country.area),
            "population" => V(int(m.country.population)),
            "states" => V(list_of(0..m.states.len(), Obj::State)),
            _ => return Err(missing(obj, name)),
        },
        _ => return Err(missing(obj, name)),
    })
}

fn geo_call(m: &GeoModel, obj: &Obj, name: &str, args: Args) -> Result<Value, PymrError> {
    if *obj != Obj::GeoModel {
        return Err(missing(obj, name));
    }
    let first = |refs: Vec<EntityRef>| match refs.first() {
        Some(EntityRef::State(s)) => Value::Obj(Obj::State(s.0)),
        Some(EntityRef::City(c)) => Value::Obj(Obj::City(c.0)),
        Some(EntityRef::River(r)) => Value::Obj(Obj::River(r.0)),
        Some(EntityRef::Place(p)) => Value::Obj(Obj::Place(p.0)),
        Some(EntityRef::Country) | None => Value::None,
    };
    match name {
        "find_city" => {
            let b = args.bind(name, &[("name", true), ("state", false)])?;
            let city = text_arg(name, &b[0])?;
            let mut ids = m.cities_by_name(&city);
            if let Some(Some(state)) = b.get(1).map(|v| v.as_ref().filter(|v| !matches!(v, Value::None))) {
                let sid = match state {
                    Value::Obj(Obj::State(s)) => Some(StateId(*s)),
                    Value::Str(s) => m.state_by_name(s).or_else(|| m.state_by_abbreviation(s)),
                    other => {
                        return Err(PymrError::Type(format!(
                            "find_city() state must be a State or str, not {}",
                            other.type_name()
                        )))
                    }
                };
                ids.retain(|c| Some(m.city(*c).state) == sid);
            }
            Ok(ids.first().map(|c| Value::Obj(Obj::City(c.0))).unwrap_or(Value::None))
        }
        "find_state" | "find_river" | "find_place" => {
            let b = args.bind(name, &[("name", true)])?;
            let n = text_arg(name, &b[0])?;
            let kind = match name {
                "find_state" => GeoKind::State,
                "find_river" => GeoKind::River,
                _ => GeoKind::Place,
            };
            Ok(first(m.find_entity(kind, &n)))
        }
        _ => Err(missing(obj, name)),
    }
}

fn social_attr(db: &SocialDb, obj: &Obj, name: &str) -> Result<Attr, PymrError> {
    use Attr::Value as V;
    let e = |s: &str| V(Value::Obj(Obj::EnumValue(s.to_string())));
    Ok(match obj {
        Obj::SocialApi => match name {
            "people" => V(list_of(0..db.people.len(), Obj::Person)),
            "find_person_by_id" => Attr::Method,
            _ => return Err(missing(obj, name)),
        },
        Obj::Person(i) => {
            let p = &db.people[*i];
            match name {
                "id" => V(Value::str(&p.id)),
                "name" => V(Value::str(&p.name)),
                "gender" => e(&p.gender),
                "birthdate" => V(int(p.birthdate)),
                "birthplace" => e(&p.birthplace),
                "height" => V(Value::Float(p.height)),
                "relationship_status" => e(&p.relationship_status),
                "friends" => V(list_of(p.friends.iter().copied(), Obj::Person)),
                "education" => V(list_of(0..p.education.len(), |k| Obj::Education(*i, k))),
                "employment" => V(list_of(0..p.employment.len(), |k| Obj::Employment(*i, k))),
                "is_student" => V(Value::Bool(p.is_student)),
                _ => return Err(missing(obj, name)),
            }
        }
        Obj::Education(i, k) => {
            let ed = &db.people[*i].education[*k];
            match name {
                "institution" => e(&ed.institution),
                "start_date" => V(int(ed.start_date)),
                "end_date" => V(int(ed.end_date)),
                _ => return Err(missing(obj, name)),
            }
        }
        Obj::Employment(i, k) => {
            let em = &db.people[*i].employment[*k];
            match name {
                "employer" => e(&em.employer),
                "job_title" => e(&em.job_title),
                "start_date" => V(int(em.start_date)),
                "end_date" => V(int(em.end_date)),
                _ => return Err(missing(obj, name)),
            }
        }
        Obj::EnumNamespace(ns) => {
            let kind = SOCIAL_ENUMS.iter().find(|(n, _)| n == ns).map(|(_, k)| *k).expect("registered namespace");
            match db.enums.get(kind) {
                Some(members) if members.iter().any(|m| m == name) => e(&format!("en.{kind}.{name}")),
                _ => return Err(missing(obj, name)),
            }
        }
        _ => return Err(missing(obj, name)),
    })
}

fn calendar_attr(w: &CalendarWorld, obj: &Obj, name: &str) -> Result<Attr, PymrError> {
    Ok(match (obj, name) {
        (Obj::CalendarApi, "find_person" | "get_current_user" | "add_event") => Attr::Method,
        (Obj::CalPerson(id), "name") => Attr::Value(Value::str(&w.person(id).ok_or_else(|| missing(obj, name))?.name)),
        (Obj::CalPerson(_), "find_manager_of" | "find_team_of") => Attr::Method,
        (Obj::ClauseNamespace, "get_next_dow" | "date_by_mdy" | "time_by_hm") => Attr::Method,
        (Obj::ValuesNamespace, "Today") => Attr::Value(Value::Obj(Obj::Clause(DateTimeClause::Today))),
        (Obj::ValuesNamespace, "Tomorrow") => Attr::Value(Value::Obj(Obj::Clause(DateTimeClause::Tomorrow))),
        _ => return Err(missing(obj, name)),
    })
}

fn calendar_call(it: &mut Interp, w: &CalendarWorld, obj: &Obj, name: &str, args: Args) -> Result<Value, PymrError> {
    let person = |id: &str| Value::Obj(Obj::CalPerson(id.to_string()));
    match (obj, name) {
        (Obj::CalendarApi, "find_person") => {
            let b = args.bind(name, &[("name", true)])?;
            Ok(person(&w.find_person(&text_arg(name, &b[0])?)?.id))
        }
        (Obj::CalendarApi, "get_current_user") => {
            args.none(name)?;
            Ok(person(&w.current_user))
        }
        (Obj::CalendarApi, "add_event") => {
            let b = args.bind(name, &[("event", true)])?;
            match &b[0] {
                Some(Value::Obj(Obj::Event(e))) => {
                    it.events.push((**e).clone());
                    Ok(Value::None)
                }
                Some(other) => Err(PymrError::Type(format!("add_event() expects an Event, got {}", other.type_name()))),
                None => unreachable!("required"),
            }
        }
        (Obj::CalPerson(id), "find_manager_of") => {
            args.none(name)?;
            Ok(person(&w.manager_of(id)?.id))
        }
        (Obj::CalPerson(id), "find_team_of") => {
            args.none(name)?;
            Ok(Value::list(w.team_of(id)?.into_iter().map(|p| person(&p.id)).collect()))
        }
        (Obj::ClauseNamespace, "get_next_dow") => {
            let b = args.bind(name, &[("day_of_week", true)])?;
            let day = text_arg(name, &b[0])?;
            let wd = crate::calenv::parse_weekday(&day)
                .ok_or_else(|| PymrError::Value(format!("not a day of the week: {day:?}")))?;
            Ok(Value::Obj(Obj::Clause(DateTimeClause::NextDow(wd))))
        }
        (Obj::ClauseNamespace, "date_by_mdy") => {
            let b = args.bind(name, &[("month", true), ("day", true), ("year", false)])?;
            let year = match &b[2] {
                None | Some(Value::None) => None,
                y => Some(int_arg(name, y)? as i32),
            };
            Ok(Value::Obj(Obj::Clause(DateTimeClause::DateMdy {
                month: u32::try_from(int_arg(name, &b[0])?).unwrap_or(0),
                day: u32::try_from(int_arg(name, &b[1])?).unwrap_or(0),
                year,
            })))
        }
        (Obj::ClauseNamespace, "time_by_hm") => {
            let b = args.bind(name, &[("hour", true), ("minute", false), ("am_or_pm", true)])?;
            let minute = match &b[1] {
                None => 0,
                m => int_arg(name, m)?,
            };
            let pm = match text_arg(name, &b[2])?.to_lowercase().as_str() {
                "am" => false,
                "pm" => true,
                other => return Err(PymrError::Value(format!("am_or_pm must be \"am\" or \"pm\", not {other:?}"))),
            };
            Ok(Value::Obj(Obj::Clause(DateTimeClause::Time(TimeOfDay {
                hour: u32::try_from(int_arg(name, &b[0])?).unwrap_or(0),
                minute: u32::try_from(minute).unwrap_or(60),
                pm,
            }))))
        }
        _ => Err(missing(obj, name)),
    }
}

fn clauses_of(param: &str, v: &Value) -> Result<Vec<DateTimeClause>, PymrError> {
    let items = match v {
        Value::List(_) | Value::Set(_) => iterate(v)?,
        other => vec![other.clone()],
    };
    items
        .iter()
        .map(|x| match x {
            Value::Obj(Obj::Clause(c)) => Ok(*c),
            other => Err(PymrError::Type(format!("{param} expects date/time clauses, got {}", other.type_name()))),
        })
        .collect()
}

fn persons_of(param: &str, v: &Value) -> Result<Vec<String>, PymrError> {
    let items = match v {
        Value::List(_) | Value::Set(_) => iterate(v)?,
        other => vec![other.clone()],
    };
    items
        .iter()
        .map(|x| match x {
            Value::Obj(Obj::CalPerson(id)) => Ok(id.clone()),
            other => Err(PymrError::Type(format!("{param} expects people, got {}", other.type_name()))),
        })
        .collect()
}

fn build_event(args: Args) -> Result<Value, PymrError> {
    if !args.pos.is_empty() {
        return Err(PymrError::Type("Event() takes keyword arguments only".into()));
    }
    let mut c = EventConstraints::default();
    for (k, v) in args.kw {
        if matches!(v, Value::None) {
            continue;
        }
        let text = |v: &Value| match v {
            Value::Str(s) => Ok(s.to_string()),
            other => Err(PymrError::Type(format!("Event {k} must be a str, got {}", other.type_name()))),
        };
        match k.as_str() {
            "subject" => c.subject = Some(text(&v)?),
            "location" => c.location = Some(text(&v)?),
            "starts_at" => c.start = clauses_of(&k, &v)?,
            "ends_at" => c.end = clauses_of(&k, &v)?,
            "attendees" => c.attendees = persons_of(&k, &v)?,
            "attendees_to_avoid" => c.avoided = persons_of(&k, &v)?,
            "duration_minutes" => {
                let n = v.as_int().ok_or_else(|| PymrError::Type("Event duration_minutes must be an int".into()))?;
                if n <= 0 {
                    return Err(PymrError::Value("Event duration_minutes must be positive".into()));
                }
                c.duration_minutes = Some(n);
            }
            other => return Err(PymrError::Type(format!("Event() got an unexpected keyword argument '{other}'"))),
        }
    }
    Ok(Value::Obj(Obj::Event(Rc::new(c))))
}
