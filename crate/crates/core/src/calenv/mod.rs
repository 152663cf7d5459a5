//! Calendar environment: an org chart, an event store and the
//! Dataflow-Simple language for creating events.
//!
//! Worlds are values. Executing a program never mutates the world it was
//! given; it returns the successor world together with a [`WorldDelta`]
//! holding the events that were created.

mod datetime;
mod dfs;
mod world;

pub use datetime::{parse_weekday, resolve_datetime, DateTimeClause, TimeOfDay};
pub use dfs::{exec_dfs, extract_operators, parse_dfs, render_dfs, DfsAst, DfsError, DfsNode, HEADS};
pub use world::{
    load_world, parse_world, CalendarDefaults, CalendarError, CalendarWorld, Event, EventConstraints, PersonId,
    WorldDelta, WorldPerson,
};
