use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Duration, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::datetime::{resolve_point, DateTimeClause};

pub type PersonId = String;

#[derive(Debug, Error)]
pub enum CalendarError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("world schema error: {0}")]
    Schema(String),
    #[error("invalid world: {0}")]
    Invariant(String),
    #[error("unknown person {0:?}")]
    UnknownPerson(String),
    #[error("unresolvable constraint: {0}")]
    Unresolvable(String),
    #[error("conflicting clauses: {0}")]
    ConflictingClauses(String),
    #[error("invalid clause: {0}")]
    InvalidClause(String),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldPerson {
    pub id: PersonId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manager: Option<PersonId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarDefaults {
    pub duration_minutes: i64,
    pub start_time: NaiveTime,
}

impl Default for CalendarDefaults {
    fn default() -> Self {
        Self { duration_minutes: 30, start_time: NaiveTime::from_hms_opt(9, 0, 0).expect("valid") }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default)]
    pub attendees: BTreeSet<PersonId>,
    #[serde(default)]
    pub avoided: BTreeSet<PersonId>,
}

/// Events created by one program run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldDelta {
    pub created: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarWorld {
    pub people: Vec<WorldPerson>,
    pub current_user: PersonId,
    pub now: NaiveDateTime,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub defaults: CalendarDefaults,
}

pub fn load_world(path: impl AsRef<Path>) -> Result<CalendarWorld, CalendarError> {
    parse_world(&std::fs::read_to_string(path)?)
}

pub fn parse_world(text: &str) -> Result<CalendarWorld, CalendarError> {
    let world: CalendarWorld = serde_json::from_str(text).map_err(|e| CalendarError::Schema(e.to_string()))?;
    world.check_invariants()?;
    Ok(world)
}

impl CalendarWorld {
    pub fn check_invariants(&self) -> Result<(), CalendarError> {
        let mut ids = BTreeSet::new();
        for p in &self.people {
            if !ids.insert(p.id.as_str()) {
                return Err(CalendarError::Invariant(format!("duplicate person id {:?}", p.id)));
            }
        }
        for p in &self.people {
            if let Some(m) = &p.manager {
                if !ids.contains(m.as_str()) {
                    return Err(CalendarError::Invariant(format!("{:?} has unknown manager {:?}", p.id, m)));
                }
            }
        }
        if !ids.contains(self.current_user.as_str()) {
            return Err(CalendarError::Invariant(format!("unknown current user {:?}", self.current_user)));
        }
        for p in &self.people {
            let mut seen = BTreeSet::new();
            let mut cur = Some(p.id.as_str());
            while let Some(id) = cur {
                if !seen.insert(id) {
                    return Err(CalendarError::Invariant(format!("manager cycle through {:?}", p.id)));
                }
                cur = self.person(id).and_then(|q| q.manager.as_deref());
            }
        }
        for e in &self.events {
            e.check()?;
        }
        Ok(())
    }

    pub fn person(&self, id: &str) -> Option<&WorldPerson> {
        self.people.iter().find(|p| p.id == id)
    }

    /// Case-insensitive lookup by full name.
    pub fn find_person(&self, name: &str) -> Result<&WorldPerson, CalendarError> {
        let wanted = name.trim().to_lowercase();
        self.people
            .iter()
            .find(|p| p.name.to_lowercase() == wanted)
            .ok_or_else(|| CalendarError::UnknownPerson(name.to_string()))
    }

    pub fn current_user(&self) -> &WorldPerson {
        self.person(&self.current_user).expect("checked on load")
    }

    pub fn manager_of(&self, id: &str) -> Result<&WorldPerson, CalendarError> {
        let p = self.person(id).ok_or_else(|| CalendarError::UnknownPerson(id.to_string()))?;
        let m =
            p.manager.as_deref().ok_or_else(|| CalendarError::Unresolvable(format!("{} has no manager", p.name)))?;
        self.person(m).ok_or_else(|| CalendarError::UnknownPerson(m.to_string()))
    }

    /// Everyone sharing `id`'s manager, `id` included, in load order.
    pub fn team_of(&self, id: &str) -> Result<Vec<&WorldPerson>, CalendarError> {
        let manager = self.manager_of(id)?.id.clone();
        Ok(self.people.iter().filter(|p| p.manager.as_deref() == Some(manager.as_str())).collect())
    }

    /// Builds the event for `constraints` and returns the successor world
    /// with the delta. `self` is left untouched.
    pub fn create_event(&self, constraints: &EventConstraints) -> Result<(CalendarWorld, WorldDelta), CalendarError> {
        let event = constraints.materialize(self)?;
        let mut next = self.clone();
        next.events.push(event.clone());
        Ok((next, WorldDelta { created: vec![event] }))
    }

    /// Applies a sequence of events, as produced by a program that calls
    /// the event constructor more than once.
    pub fn create_events(&self, all: &[EventConstraints]) -> Result<(CalendarWorld, WorldDelta), CalendarError> {
        let mut next = self.clone();
        let mut delta = WorldDelta::default();
        for c in all {
            let e = c.materialize(self)?;
            next.events.push(e.clone());
            delta.created.push(e);
        }
        Ok((next, delta))
    }

    /// `post.events` minus `self.events`, assuming `post` extends `self`.
    pub fn diff(&self, post: &CalendarWorld) -> WorldDelta {
        let mut remaining: BTreeMap<&Event, usize> = BTreeMap::new();
        for e in &self.events {
            *remaining.entry(e).or_default() += 1;
        }
        let mut created = Vec::new();
        for e in &post.events {
            match remaining.get_mut(e) {
                Some(n) if *n > 0 => *n -= 1,
                _ => created.push(e.clone()),
            }
        }
        WorldDelta { created }
    }
}

impl Event {
    fn check(&self) -> Result<(), CalendarError> {
        if self.start >= self.end {
            return Err(CalendarError::InvalidEvent(format!("start {} is not before end {}", self.start, self.end)));
        }
        if let Some(p) = self.attendees.intersection(&self.avoided).next() {
            return Err(CalendarError::InvalidEvent(format!("{p:?} is both attending and avoided")));
        }
        Ok(())
    }
}

/// Dialect-independent description of an event to create. Both the
/// Dataflow-Simple executor and the PyMR calendar binding build one of
/// these, so they share every defaulting rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventConstraints {
    pub subject: Option<String>,
    pub location: Option<String>,
    pub start: Vec<DateTimeClause>,
    pub end: Vec<DateTimeClause>,
    pub duration_minutes: Option<i64>,
    pub attendees: Vec<PersonId>,
    pub avoided: Vec<PersonId>,
}

impl EventConstraints {
    pub fn materialize(&self, world: &CalendarWorld) -> Result<Event, CalendarError> {
        let defaults = &world.defaults;
        let start = resolve_point(&self.start, world.now, None, defaults.start_time)?;
        let end = if !self.end.is_empty() {
            if self.duration_minutes.is_some() {
                return Err(CalendarError::ConflictingClauses("both an end and a duration".into()));
            }
            let end_default = (start + Duration::minutes(defaults.duration_minutes)).time();
            resolve_point(&self.end, world.now, Some(start.date()), end_default)?
        } else {
            start + Duration::minutes(self.duration_minutes.unwrap_or(defaults.duration_minutes))
        };
        let avoided: BTreeSet<PersonId> = self.avoided.iter().cloned().collect();
        let attendees = self.attendees.iter().filter(|a| !avoided.contains(*a)).cloned().collect();
        for id in self.attendees.iter().chain(&self.avoided) {
            if world.person(id).is_none() {
                return Err(CalendarError::UnknownPerson(id.clone()));
            }
        }
        let event = Event {
            subject: self.subject.clone(),
            start,
            end,
            location: self.location.as_ref().map(|l| l.trim().to_string()),
            attendees,
            avoided,
        };
        event.check()?;
        Ok(event)
    }
}
