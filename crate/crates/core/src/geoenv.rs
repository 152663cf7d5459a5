//! Geography database: states, cities, rivers and places.
//!
//! The on-disk format is JSONL with one entity per line, discriminated by a
//! `"kind"` field. References are by lowercase name; cities are referenced
//! by state abbreviation. See `docs/geobase.md` for the full schema.
//!
//! All quantities are stored in metric units (km², km, m). Records may
//! declare imperial units through `area_unit`, `length_unit` and
//! `elevation_unit`; the loader converts them.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::denotation::{EntityKey, EntityKind};

/// Cities with a population above this count are "major".
pub const DEFAULT_MAJOR_CITY_THRESHOLD: u64 = 150_000;

const KM2_PER_SQ_MI: f64 = 2.589_988_110_336;
const KM_PER_MI: f64 = 1.609_344;
const M_PER_FT: f64 = 0.3048;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("cannot read geobase {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error on line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("dangling reference: {from} refers to unknown {kind} '{name}'")]
    DanglingReference { from: String, kind: &'static str, name: String },
    #[error("invariant violation: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub usize);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CityId(pub usize);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RiverId(pub usize);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityRef {
    State(StateId),
    City(CityId),
    River(RiverId),
    Place(PlaceId),
    Country,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeoKind {
    State,
    City,
    River,
    Place,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceKind {
    Mountain,
    Lake,
    Point,
    Other,
}

impl PlaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlaceKind::Mountain => "mountain",
            PlaceKind::Lake => "lake",
            PlaceKind::Point => "point",
            PlaceKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone)]
pub struct State {
    pub name: String,
    pub abbreviation: String,
    pub capital: CityId,
    /// km²
    pub area: f64,
    pub population: u64,
    /// people per km²
    pub density: f64,
    pub high_point: PlaceId,
    pub low_point: PlaceId,
    pub next_to: Vec<StateId>,
    pub rivers: Vec<RiverId>,
    pub cities: Vec<CityId>,
    pub places: Vec<PlaceId>,
}

impl State {
    /// Alias of `area`.
    pub fn size(&self) -> f64 {
        self.area
    }
}

#[derive(Debug, Clone)]
pub struct City {
    pub name: String,
    pub state: StateId,
    pub population: u64,
    pub is_major: bool,
    pub is_capital: bool,
}

#[derive(Debug, Clone)]
pub struct River {
    pub name: String,
    /// km
    pub length: f64,
    pub traverses: Vec<StateId>,
}

#[derive(Debug, Clone)]
pub struct Place {
    pub name: String,
    /// m, may be negative
    pub elevation: f64,
    pub state: StateId,
    pub kind: PlaceKind,
}

/// Country-level aggregate. Every state belongs to it.
#[derive(Debug, Clone)]
pub struct Country {
    pub name: String,
    pub area: f64,
    pub population: u64,
}

#[derive(Debug, Clone)]
pub struct GeoModel {
    pub states: Vec<State>,
    pub cities: Vec<City>,
    pub rivers: Vec<River>,
    pub places: Vec<Place>,
    pub country: Country,
    pub major_city_threshold: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct GeoConfig {
    pub major_city_threshold: u64,
}

impl Default for GeoConfig {
    fn default() -> Self {
        GeoConfig { major_city_threshold: DEFAULT_MAJOR_CITY_THRESHOLD }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Country {
        name: String,
    },
    State {
        name: String,
        abbreviation: String,
        capital: String,
        area: f64,
        #[serde(default)]
        area_unit: Option<String>,
        population: u64,
        #[serde(default)]
        density: Option<f64>,
        high_point: String,
        low_point: String,
        #[serde(default)]
        next_to: Vec<String>,
    },
    City {
        name: String,
        state: String,
        population: u64,
    },
    River {
        name: String,
        length: f64,
        #[serde(default)]
        length_unit: Option<String>,
        traverses: Vec<String>,
    },
    Place {
        name: String,
        elevation: f64,
        #[serde(default)]
        elevation_unit: Option<String>,
        state: String,
        place_kind: PlaceKind,
    },
}

fn unit_factor(unit: Option<&str>, metric: &str, imperial: &str, factor: f64, line: usize) -> Result<f64, GeoError> {
    match unit {
        None => Ok(1.0),
        Some(u) if u == metric => Ok(1.0),
        Some(u) if u == imperial => Ok(factor),
        Some(u) => Err(GeoError::Schema { line, message: format!("unknown unit '{u}'") }),
    }
}

pub fn load_geobase(path: impl AsRef<Path>) -> Result<GeoModel, GeoError> {
    load_geobase_with(path, GeoConfig::default())
}

pub fn load_geobase_with(path: impl AsRef<Path>, config: GeoConfig) -> Result<GeoModel, GeoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GeoError::Io { path: path.display().to_string(), source })?;
    parse_geobase(&text, config)
}

struct RawState {
    name: String,
    abbreviation: String,
    capital: String,
    area: f64,
    population: u64,
    density: Option<f64>,
    high_point: String,
    low_point: String,
    next_to: Vec<String>,
}

pub fn parse_geobase(text: &str, config: GeoConfig) -> Result<GeoModel, GeoError> {
    let mut country_name = "usa".to_string();
    let mut raw_states = Vec::new();
    let mut raw_cities = Vec::new();
    let mut raw_rivers = Vec::new();
    let mut raw_places = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(line).map_err(|e| GeoError::Schema { line: line_no, message: e.to_string() })?;
        match record {
            Record::Country { name } => country_name = name.to_lowercase(),
            Record::State {
                name,
                abbreviation,
                capital,
                area,
                area_unit,
                population,
                density,
                high_point,
                low_point,
                next_to,
            } => {
                let f = unit_factor(area_unit.as_deref(), "km2", "sq_mi", KM2_PER_SQ_MI, line_no)?;
                raw_states.push(RawState {
                    name: name.to_lowercase(),
                    abbreviation: abbreviation.to_lowercase(),
                    capital: capital.to_lowercase(),
                    area: area * f,
                    population,
                    // density is per declared area unit
                    density: density.map(|d| d / f),
                    high_point: high_point.to_lowercase(),
                    low_point: low_point.to_lowercase(),
                    next_to: next_to.into_iter().map(|s| s.to_lowercase()).collect(),
                });
            }
            Record::City { name, state, population } => {
                raw_cities.push((name.to_lowercase(), state.to_lowercase(), population));
            }
            Record::River { name, length, length_unit, traverses } => {
                let f = unit_factor(length_unit.as_deref(), "km", "mi", KM_PER_MI, line_no)?;
                raw_rivers.push((
                    name.to_lowercase(),
                    length * f,
                    traverses.into_iter().map(|s| s.to_lowercase()).collect::<Vec<_>>(),
                    line_no,
                ));
            }
            Record::Place { name, elevation, elevation_unit, state, place_kind } => {
                let f = unit_factor(elevation_unit.as_deref(), "m", "ft", M_PER_FT, line_no)?;
                raw_places.push((name.to_lowercase(), elevation * f, state.to_lowercase(), place_kind));
            }
        }
    }

    let mut state_by_name = HashMap::new();
    let mut state_by_abbr = HashMap::new();
    for (i, s) in raw_states.iter().enumerate() {
        if state_by_name.insert(s.name.clone(), StateId(i)).is_some() {
            return Err(GeoError::Invariant(format!("duplicate state '{}'", s.name)));
        }
        if state_by_abbr.insert(s.abbreviation.clone(), StateId(i)).is_some() {
            return Err(GeoError::Invariant(format!("duplicate state abbreviation '{}'", s.abbreviation)));
        }
    }
    let lookup_state = |from: &str, name: &str| -> Result<StateId, GeoError> {
        state_by_name.get(name).copied().ok_or_else(|| GeoError::DanglingReference {
            from: from.to_string(),
            kind: "state",
            name: name.to_string(),
        })
    };

    let mut cities = Vec::with_capacity(raw_cities.len());
    for (name, abbr, population) in raw_cities {
        let state = state_by_abbr.get(&abbr).copied().ok_or_else(|| GeoError::DanglingReference {
            from: format!("city {name}"),
            kind: "state abbreviation",
            name: abbr.clone(),
        })?;
        if cities.iter().any(|c: &City| c.name == name && c.state == state) {
            return Err(GeoError::Invariant(format!("duplicate city '{name}, {abbr}'")));
        }
        cities.push(City {
            name,
            state,
            population,
            is_major: population > config.major_city_threshold,
            is_capital: false,
        });
    }

    let mut rivers = Vec::with_capacity(raw_rivers.len());
    for (name, length, traverses, line) in raw_rivers {
        if traverses.is_empty() {
            return Err(GeoError::Invariant(format!("river '{name}' traverses no state (line {line})")));
        }
        if length <= 0.0 {
            return Err(GeoError::Invariant(format!("river '{name}' has non-positive length")));
        }
        let traverses =
            traverses.iter().map(|s| lookup_state(&format!("river {name}"), s)).collect::<Result<Vec<_>, _>>()?;
        rivers.push(River { name, length, traverses });
    }

    let mut places = Vec::with_capacity(raw_places.len());
    for (name, elevation, state, kind) in raw_places {
        let state = lookup_state(&format!("place {name}"), &state)?;
        places.push(Place { name, elevation, state, kind });
    }

    let mut states = Vec::with_capacity(raw_states.len());
    for (si, raw) in raw_states.iter().enumerate() {
        let sid = StateId(si);
        let from = format!("state {}", raw.name);
        let capital =
            cities.iter().position(|c| c.name == raw.capital && c.state == sid).map(CityId).ok_or_else(|| {
                GeoError::DanglingReference { from: from.clone(), kind: "capital city", name: raw.capital.clone() }
            })?;
        let find_place = |name: &str| {
            places.iter().position(|p| p.name == name && p.state == sid).map(PlaceId).ok_or_else(|| {
                GeoError::DanglingReference { from: from.clone(), kind: "place", name: name.to_string() }
            })
        };
        let high_point = find_place(&raw.high_point)?;
        let low_point = find_place(&raw.low_point)?;
        let next_to = raw.next_to.iter().map(|n| lookup_state(&from, n)).collect::<Result<Vec<_>, _>>()?;
        if raw.area <= 0.0 {
            return Err(GeoError::Invariant(format!("state '{}' has non-positive area", raw.name)));
        }
        let computed = raw.population as f64 / raw.area;
        let density = match raw.density {
            Some(d) => {
                if (d - computed).abs() > 0.01 * computed.abs().max(f64::MIN_POSITIVE) {
                    return Err(GeoError::Invariant(format!(
                        "state '{}' density {d} disagrees with population/area {computed}",
                        raw.name
                    )));
                }
                d
            }
            None => computed,
        };
        states.push(State {
            name: raw.name.clone(),
            abbreviation: raw.abbreviation.clone(),
            capital,
            area: raw.area,
            population: raw.population,
            density,
            high_point,
            low_point,
            next_to,
            rivers: Vec::new(),
            cities: Vec::new(),
            places: Vec::new(),
        });
    }

    for (ci, city) in cities.iter_mut().enumerate() {
        states[city.state.0].cities.push(CityId(ci));
        city.is_capital = states[city.state.0].capital == CityId(ci);
    }
    for (ri, river) in rivers.iter().enumerate() {
        for s in &river.traverses {
            if !states[s.0].rivers.contains(&RiverId(ri)) {
                states[s.0].rivers.push(RiverId(ri));
            }
        }
    }
    for (pi, place) in places.iter().enumerate() {
        states[place.state.0].places.push(PlaceId(pi));
    }

    let country = Country {
        name: country_name,
        area: states.iter().map(|s| s.area).sum(),
        population: states.iter().map(|s| s.population).sum(),
    };
    let model = GeoModel { states, cities, rivers, places, country, major_city_threshold: config.major_city_threshold };
    model.check_invariants()?;
    Ok(model)
}

impl GeoModel {
    pub fn empty() -> Self {
        GeoModel {
            states: Vec::new(),
            cities: Vec::new(),
            rivers: Vec::new(),
            places: Vec::new(),
            country: Country { name: "usa".into(), area: 0.0, population: 0 },
            major_city_threshold: DEFAULT_MAJOR_CITY_THRESHOLD,
        }
    }

    pub fn check_invariants(&self) -> Result<(), GeoError> {
        for (i, s) in self.states.iter().enumerate() {
            for n in &s.next_to {
                if !self.states[n.0].next_to.contains(&StateId(i)) {
                    return Err(GeoError::Invariant(format!(
                        "asymmetric border: {} lists {} but not vice versa",
                        s.name, self.states[n.0].name
                    )));
                }
            }
            let high = self.places[s.high_point.0].elevation;
            if let Some(p) = s.places.iter().map(|p| &self.places[p.0]).find(|p| p.elevation > high) {
                return Err(GeoError::Invariant(format!(
                    "high point of {} is not its highest place ({} is higher)",
                    s.name, p.name
                )));
            }
        }
        Ok(())
    }

    /// Case-insensitive exact-name lookup. Several cities may share a name,
    /// so every match is returned in load order.
    pub fn find_entity(&self, kind: GeoKind, name: &str) -> Vec<EntityRef> {
        let name = name.to_lowercase();
        match kind {
            GeoKind::State => self.state_by_name(&name).map(EntityRef::State).into_iter().collect(),
            GeoKind::City => self.cities_by_name(&name).into_iter().map(EntityRef::City).collect(),
            GeoKind::River => self
                .rivers
                .iter()
                .position(|r| r.name == name)
                .map(|i| EntityRef::River(RiverId(i)))
                .into_iter()
                .collect(),
            GeoKind::Place => self
                .places
                .iter()
                .position(|p| p.name == name)
                .map(|i| EntityRef::Place(PlaceId(i)))
                .into_iter()
                .collect(),
        }
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        let name = name.to_lowercase();
        self.states.iter().position(|s| s.name == name).map(StateId)
    }

    pub fn state_by_abbreviation(&self, abbr: &str) -> Option<StateId> {
        let abbr = abbr.to_lowercase();
        self.states.iter().position(|s| s.abbreviation == abbr).map(StateId)
    }

    pub fn cities_by_name(&self, name: &str) -> Vec<CityId> {
        let name = name.to_lowercase();
        self.cities.iter().enumerate().filter(|(_, c)| c.name == name).map(|(i, _)| CityId(i)).collect()
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id.0]
    }

    pub fn city(&self, id: CityId) -> &City {
        &self.cities[id.0]
    }

    pub fn river(&self, id: RiverId) -> &River {
        &self.rivers[id.0]
    }

    pub fn place(&self, id: PlaceId) -> &Place {
        &self.places[id.0]
    }

    /// Canonical denotation key. Cities carry their state abbreviation to
    /// keep same-named cities apart.
    pub fn key(&self, entity: EntityRef) -> EntityKey {
        match entity {
            EntityRef::State(id) => EntityKey::new(EntityKind::State, self.state(id).name.clone()),
            EntityRef::City(id) => {
                let c = self.city(id);
                EntityKey::new(EntityKind::City, city_key_name(&c.name, &self.state(c.state).abbreviation))
            }
            EntityRef::River(id) => EntityKey::new(EntityKind::River, self.river(id).name.clone()),
            EntityRef::Place(id) => EntityKey::new(EntityKind::Place, self.place(id).name.clone()),
            EntityRef::Country => EntityKey::new(EntityKind::Country, self.country.name.clone()),
        }
    }

    pub fn all_entities(&self) -> BTreeSet<EntityRef> {
        let mut out = BTreeSet::new();
        out.extend((0..self.states.len()).map(|i| EntityRef::State(StateId(i))));
        out.extend((0..self.cities.len()).map(|i| EntityRef::City(CityId(i))));
        out.extend((0..self.rivers.len()).map(|i| EntityRef::River(RiverId(i))));
        out.extend((0..self.places.len()).map(|i| EntityRef::Place(PlaceId(i))));
        out.insert(EntityRef::Country);
        out
    }
}

pub fn city_key_name(name: &str, state_abbreviation: &str) -> String {
    format!("{name}, {state_abbreviation}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{"kind":"state","name":"Texas","abbreviation":"tx","capital":"austin","area":100.0,"population":1000,"high_point":"peak","low_point":"coast","next_to":["oklahoma"]}
{"kind":"state","name":"oklahoma","abbreviation":"ok","capital":"oklahoma city","area":50.0,"population":100,"high_point":"mesa","low_point":"mesa","next_to":["texas"]}
{"kind":"city","name":"austin","state":"tx","population":200000}
{"kind":"city","name":"springfield","state":"tx","population":10}
{"kind":"city","name":"springfield","state":"ok","population":10}
{"kind":"city","name":"oklahoma city","state":"ok","population":100000}
{"kind":"river","name":"red","length":10.0,"traverses":["texas","oklahoma"]}
{"kind":"place","name":"peak","elevation":100.0,"state":"texas","place_kind":"mountain"}
{"kind":"place","name":"coast","elevation":0.0,"state":"texas","place_kind":"other"}
{"kind":"place","name":"mesa","elevation":50.0,"state":"oklahoma","place_kind":"mountain"}
"#;

    fn tiny() -> GeoModel {
        parse_geobase(TINY, GeoConfig::default()).unwrap()
    }

    #[test]
    fn loads_and_links() {
        let m = tiny();
        assert_eq!(m.states.len(), 2);
        let tx = m.state_by_name("texas").unwrap();
        assert_eq!(m.city(m.state(tx).capital).name, "austin");
        assert_eq!(m.state(tx).rivers.len(), 1);
        assert_eq!(m.state(tx).cities.len(), 2);
        assert!((m.state(tx).density - 10.0).abs() < 1e-12);
        assert!(m.city(CityId(0)).is_major);
        assert!(!m.city(CityId(3)).is_major);
        assert_eq!(m.country.population, 1100);
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let m = tiny();
        assert_eq!(m.find_entity(GeoKind::State, "TEXAS"), vec![EntityRef::State(StateId(0))]);
        assert!(m.find_entity(GeoKind::River, "nile").is_empty());
        assert_eq!(m.find_entity(GeoKind::City, "Springfield").len(), 2);
    }

    #[test]
    fn rejects_unknown_state_reference() {
        let text = r#"{"kind":"city","name":"x","state":"zz","population":1}"#;
        assert!(matches!(parse_geobase(text, GeoConfig::default()), Err(GeoError::DanglingReference { .. })));
    }

    #[test]
    fn rejects_asymmetric_borders() {
        let text = TINY.replace(r#""next_to":["texas"]"#, r#""next_to":[]"#);
        assert!(matches!(parse_geobase(&text, GeoConfig::default()), Err(GeoError::Invariant(_))));
    }

    #[test]
    fn rejects_wrong_high_point() {
        let text = TINY.replace(r#""high_point":"peak""#, r#""high_point":"coast""#);
        assert!(matches!(parse_geobase(&text, GeoConfig::default()), Err(GeoError::Invariant(_))));
    }

    #[test]
    fn rejects_bad_density() {
        let text = TINY.replace(r#""population":1000,"#, r#""population":1000,"density":20.0,"#);
        assert!(matches!(parse_geobase(&text, GeoConfig::default()), Err(GeoError::Invariant(_))));
    }

    #[test]
    fn empty_model_is_valid() {
        let m = parse_geobase("", GeoConfig::default()).unwrap();
        assert!(m.states.is_empty() && m.cities.is_empty() && m.rivers.is_empty() && m.places.is_empty());
    }

    #[test]
    fn imperial_units_are_normalized() {
        let text = r#"{"kind":"river","name":"r","length":1.0,"length_unit":"mi","traverses":["a"]}
{"kind":"state","name":"a","abbreviation":"a","capital":"c","area":1.0,"area_unit":"sq_mi","population":0,"high_point":"p","low_point":"p"}
{"kind":"city","name":"c","state":"a","population":1}
{"kind":"place","name":"p","elevation":1000.0,"elevation_unit":"ft","state":"a","place_kind":"point"}"#;
        let m = parse_geobase(text, GeoConfig::default()).unwrap();
        assert!((m.rivers[0].length - 1.609344).abs() < 1e-12);
        assert!((m.states[0].area - 2.589988110336).abs() < 1e-12);
        assert!((m.places[0].elevation - 304.8).abs() < 1e-9);
    }

    #[test]
    fn threshold_is_configurable() {
        let m = parse_geobase(TINY, GeoConfig { major_city_threshold: 50_000 }).unwrap();
        assert!(m.city(CityId(3)).is_major);
    }
}
