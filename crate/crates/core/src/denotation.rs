//! Execution outcomes shared by every environment.
//!
//! Information-seeking programs produce a [`Denotation`]: either a single
//! number or a collection of entity keys. Action requests produce a
//! [`crate::calenv::WorldDelta`]. [`Outcome`] wraps both.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::calenv::WorldDelta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    State,
    City,
    River,
    Place,
    Country,
    Person,
    /// Enumerated constant such as `en.gender.male`.
    Value,
    /// Scalar that appeared inside a collection (number, string, boolean).
    Literal,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::State => "state",
            EntityKind::City => "city",
            EntityKind::River => "river",
            EntityKind::Place => "place",
            EntityKind::Country => "country",
            EntityKind::Person => "person",
            EntityKind::Value => "value",
            EntityKind::Literal => "literal",
        }
    }
}

/// Canonical, lowercase identity of an entity in a denotation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityKey {
    pub kind: EntityKind,
    pub name: String,
}

impl EntityKey {
    pub fn new(kind: EntityKind, name: impl Into<String>) -> Self {
        EntityKey { kind, name: name.into() }
    }

    pub fn literal_number(value: f64) -> Self {
        EntityKey::new(EntityKind::Literal, format_number(value))
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    SquareKilometers,
    Kilometers,
    Meters,
    People,
    PeoplePerSquareKilometer,
    Centimeters,
    Year,
    Count,
}

/// A numeric answer. The unit tag is informational and never compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Denotation {
    Entities { entities: Vec<EntityKey> },
    Number { number: Quantity },
}

/// One element produced by an interpreter before normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Entity(EntityKey),
    Number(f64, Option<Unit>),
}

impl Denotation {
    pub fn entities(entities: Vec<EntityKey>) -> Self {
        Denotation::Entities { entities }
    }

    pub fn number(value: f64, unit: Option<Unit>) -> Self {
        Denotation::Number { number: Quantity { value, unit } }
    }

    /// Normalizes interpreter output. A lone number becomes a number
    /// denotation; anything else becomes an entity collection in which
    /// numbers are carried as literal keys.
    pub fn from_items(items: Vec<Item>) -> Self {
        if let [Item::Number(v, unit)] = items.as_slice() {
            return Denotation::number(*v, *unit);
        }
        let entities = items
            .into_iter()
            .map(|item| match item {
                Item::Entity(key) => key,
                Item::Number(v, _) => EntityKey::literal_number(v),
            })
            .collect();
        Denotation::Entities { entities }
    }

    pub fn as_entities(&self) -> Option<&[EntityKey]> {
        match self {
            Denotation::Entities { entities } => Some(entities),
            Denotation::Number { .. } => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Denotation::Number { number } => Some(number.value),
            Denotation::Entities { .. } => None,
        }
    }
}

/// Result of executing any program against any environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Outcome {
    Denotation(Denotation),
    Delta(WorldDelta),
}

/// Renders integral values without a fractional part so that `2667` and
/// `2667.0` share one canonical spelling.
pub fn format_number(value: f64) -> String {
    if value.is_finite() && value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}
