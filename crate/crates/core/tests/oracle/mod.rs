//! Straight-line answers for every bundled GeoQuery and Overnight example,
//! computed from the raw data files with `serde_json::Value` only. Nothing
//! here touches the interpreters or the typed loaders.
#![allow(dead_code)]

use std::path::Path;

use mrkit::denotation::{Denotation, EntityKind};
use serde_json::Value;

/// Answer shape shared by oracle and interpreter output.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    /// Sorted `kind:name` keys, duplicates kept.
    Bag(Vec<String>),
    Num(f64),
}

impl Answer {
    fn bag<I: IntoIterator<Item = String>>(items: I) -> Self {
        let mut v: Vec<String> = items.into_iter().collect();
        v.sort();
        Answer::Bag(v)
    }

    /// Duplicates dropped, for set-valued comparisons.
    pub fn dedup(self) -> Self {
        match self {
            Answer::Bag(mut v) => {
                v.dedup();
                Answer::Bag(v)
            }
            n => n,
        }
    }

    pub fn matches(&self, other: &Answer) -> bool {
        match (self, other) {
            (Answer::Num(a), Answer::Num(b)) => (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0),
            (a, b) => a == b,
        }
    }
}

pub fn from_denotation(d: &Denotation) -> Answer {
    match d {
        Denotation::Number { number } => Answer::Num(number.value),
        Denotation::Entities { entities } => {
            Answer::bag(entities.iter().map(|e| format!("{}:{}", kind_name(e.kind), e.name)))
        }
    }
}

fn kind_name(k: EntityKind) -> &'static str {
    k.as_str()
}

fn read_json_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .expect("readable")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

fn s(v: &Value, field: &str) -> String {
    v[field].as_str().unwrap_or_else(|| panic!("missing {field} in {v}")).to_string()
}

fn f(v: &Value, field: &str) -> f64 {
    v[field].as_f64().unwrap_or_else(|| panic!("missing {field} in {v}"))
}

fn strs(v: &Value, field: &str) -> Vec<String> {
    v[field].as_array().map(|a| a.iter().map(|x| x.as_str().expect("str").to_string()).collect()).unwrap_or_default()
}

// ------------------------------------------------------------------ geo

pub struct Geo {
    states: Vec<Value>,
    cities: Vec<Value>,
    rivers: Vec<Value>,
    places: Vec<Value>,
    country: String,
}

impl Geo {
    pub fn load(path: &Path) -> Self {
        let rows = read_json_lines(path);
        let of = |k: &str| rows.iter().filter(|r| r["kind"] == k).cloned().collect::<Vec<_>>();
        let country = s(&of("country")[0], "name");
        Geo { states: of("state"), cities: of("city"), rivers: of("river"), places: of("place"), country }
    }

    fn state(&self, name: &str) -> &Value {
        self.states.iter().find(|x| s(x, "name") == name).expect("state")
    }

    fn abbr_of(&self, state: &str) -> String {
        s(self.state(state), "abbreviation")
    }

    fn state_of_abbr(&self, abbr: &str) -> String {
        s(self.states.iter().find(|x| s(x, "abbreviation") == abbr).expect("abbr"), "name")
    }

    fn city_key(&self, c: &Value) -> String {
        format!("city:{}, {}", s(c, "name"), s(c, "state"))
    }

    fn capital(&self, state: &str) -> &Value {
        let abbr = self.abbr_of(state);
        let cap = s(self.state(state), "capital");
        self.cities.iter().find(|c| s(c, "name") == cap && s(c, "state") == abbr).expect("capital")
    }

    fn cities_in(&self, state: &str) -> Vec<&Value> {
        let abbr = self.abbr_of(state);
        self.cities.iter().filter(|c| s(c, "state") == abbr).collect()
    }

    fn rivers_in(&self, state: &str) -> Vec<&Value> {
        self.rivers.iter().filter(|r| strs(r, "traverses").iter().any(|t| t == state)).collect()
    }

    fn places_in(&self, state: &str) -> Vec<&Value> {
        self.places.iter().filter(|p| s(p, "state") == state).collect()
    }

    fn neighbors(&self, state: &str) -> Vec<String> {
        strs(self.state(state), "next_to")
    }

    fn density(&self, st: &Value) -> f64 {
        f(st, "population") / f(st, "area")
    }

    fn place(&self, name: &str) -> &Value {
        self.places.iter().find(|p| s(p, "name") == name).expect("place")
    }

    fn river(&self, name: &str) -> &Value {
        self.rivers.iter().find(|r| s(r, "name") == name).expect("river")
    }
}

fn argmax<'a, T>(items: impl IntoIterator<Item = &'a T>, key: impl Fn(&T) -> f64) -> &'a T
where
    T: 'a,
{
    let mut best: Option<(&T, f64)> = None;
    for x in items {
        let k = key(x);
        if best.is_none_or(|(_, b)| k > b) {
            best = Some((x, k));
        }
    }
    best.expect("nonempty").0
}

fn argmin<'a, T>(items: impl IntoIterator<Item = &'a T>, key: impl Fn(&T) -> f64) -> &'a T
where
    T: 'a,
{
    argmax(items, |x| -key(x))
}

fn states_key<I: IntoIterator<Item = String>>(names: I) -> Answer {
    Answer::bag(names.into_iter().map(|n| format!("state:{n}"))).dedup()
}

fn rivers_key<'a, I: IntoIterator<Item = &'a Value>>(rivers: I) -> Answer {
    Answer::bag(rivers.into_iter().map(|r| format!("river:{}", s(r, "name")))).dedup()
}

fn one(key: String) -> Answer {
    Answer::Bag(vec![key])
}

/// Expected denotation of GeoQuery example `id`, as a set.
pub fn geo_answer(g: &Geo, id: &str) -> Answer {
    let largest_state = || s(argmax(&g.states, |x| f(x, "area")), "name");
    match id {
        "geo-001" => one(g.city_key(g.capital("texas"))),
        "geo-002" => Answer::Num(f(argmax(g.places_in(&largest_state()), |p| f(p, "elevation")), "elevation")),
        "geo-003" => states_key(g.neighbors("texas")),
        "geo-004" => Answer::Num(g.rivers_in("colorado").len() as f64),
        "geo-005" => rivers_key(g.rivers_in(&largest_state())),
        "geo-006" => Answer::Num(f(g.state("illinois"), "population")),
        "geo-007" => one(g.city_key(argmax(g.cities_in("missouri"), |c| f(c, "population")))),
        "geo-008" => states_key([s(argmax(&g.places, |p| f(p, "elevation")), "state")]),
        "geo-009" => rivers_key([argmax(&g.rivers, |r| f(r, "length"))]),
        "geo-010" => rivers_key(g.neighbors("new mexico").iter().flat_map(|n| g.rivers_in(n))),
        "geo-011" => Answer::Num(g.neighbors("oklahoma").len() as f64),
        "geo-012" => Answer::Num(f(g.state("kansas"), "area")),
        "geo-013" => states_key([s(argmax(&g.states, |x| f(x, "population")), "name")]),
        "geo-014" => states_key([s(argmin(&g.states, |x| f(x, "area")), "name")]),
        "geo-015" => states_key(strs(g.river("mississippi"), "traverses")),
        "geo-016" => states_key(strs(g.river("mississippi"), "traverses").iter().flat_map(|t| g.neighbors(t))),
        "geo-017" => one(g.city_key(g.capital(&s(argmax(&g.states, |x| f(x, "population")), "name")))),
        "geo-018" => Answer::Num(g.cities_in("texas").len() as f64),
        "geo-019" => Answer::bag(
            g.cities_in("kansas").into_iter().filter(|c| f(c, "population") > 150_000.0).map(|c| g.city_key(c)),
        ),
        "geo-020" => states_key(
            g.cities.iter().filter(|c| s(c, "name") == "springfield").map(|c| g.state_of_abbr(&s(c, "state"))),
        ),
        "geo-021" => Answer::Num(f(
            g.cities.iter().find(|c| s(c, "name") == "springfield" && s(c, "state") == "il").expect("city"),
            "population",
        )),
        "geo-022" => {
            let m: Vec<&Value> =
                g.places_in("colorado").into_iter().filter(|p| s(p, "place_kind") == "mountain").collect();
            one(format!("place:{}", s(argmax(m, |p| f(p, "elevation")), "name")))
        }
        "geo-023" => one(format!("place:{}", s(g.state("arkansas"), "low_point"))),
        "geo-024" => Answer::Num(g.density(g.state("texas"))),
        "geo-025" => states_key([s(argmin(&g.states, |x| g.density(x)), "name")]),
        "geo-026" => Answer::Num(f(g.river("rio grande"), "length")),
        "geo-027" => Answer::Num(strs(g.river("red"), "traverses").len() as f64),
        "geo-028" => rivers_key([argmax(&g.rivers, |r| strs(r, "traverses").len() as f64)]),
        "geo-029" => states_key([s(argmax(&g.states, |x| strs(x, "next_to").len() as f64), "name")]),
        "geo-030" => Answer::Num(g.neighbors("kansas").iter().map(|n| f(g.state(n), "population")).sum()),
        "geo-031" => {
            let ok = g.neighbors("oklahoma");
            states_key(g.neighbors("texas").into_iter().filter(|n| !ok.contains(n)))
        }
        "geo-032" => rivers_key(g.neighbors("colorado").iter().flat_map(|n| g.rivers_in(n))),
        "geo-033" => one(g.city_key(g.capital(&s(argmin(&g.states, |x| f(x, "area")), "name")))),
        "geo-034" => one(g.city_key(argmax(&g.cities, |c| f(c, "population")))),
        "geo-035" => Answer::Num(f(g.capital("texas"), "population")),
        "geo-036" => states_key(strs(argmax(&g.rivers, |r| f(r, "length")), "traverses")),
        "geo-037" => rivers_key([argmin(g.rivers_in("texas"), |r| f(r, "length"))]),
        "geo-038" => Answer::bag(g.neighbors("missouri").iter().map(|n| g.city_key(g.capital(n)))).dedup(),
        "geo-039" => Answer::Num(f(g.place("mount elbert"), "elevation")),
        "geo-040" => states_key([s(g.place("mount sunflower"), "state")]),
        "geo-041" => Answer::Num(g.cities.iter().filter(|c| f(c, "population") > 150_000.0).count() as f64),
        "geo-042" => rivers_key(g.rivers_in("arkansas")),
        "geo-043" => Answer::Num(f(argmax(g.cities_in("illinois"), |c| f(c, "population")), "population")),
        "geo-044" => {
            let denver = g.cities.iter().find(|c| s(c, "name") == "denver" && s(c, "state") == "co").expect("city");
            states_key(g.neighbors(&g.state_of_abbr(&s(denver, "state"))))
        }
        "geo-045" => {
            let topeka = g.cities.iter().find(|c| s(c, "name") == "topeka").expect("city");
            one(format!("place:{}", s(g.state(&g.state_of_abbr(&s(topeka, "state"))), "high_point")))
        }
        "geo-046" => Answer::bag(
            g.places_in("oklahoma")
                .into_iter()
                .filter(|p| s(p, "place_kind") == "lake")
                .map(|p| format!("place:{}", s(p, "name"))),
        ),
        "geo-047" => {
            assert_eq!(g.country, "usa");
            Answer::Num(g.states.iter().map(|x| f(x, "area")).sum())
        }
        "geo-048" => states_key([s(argmin(&g.places, |p| f(p, "elevation")), "state")]),
        "geo-049" => {
            let tx = g.neighbors("texas");
            states_key(g.states.iter().map(|x| s(x, "name")).filter(|n| !tx.contains(n)))
        }
        "geo-050" => Answer::Num(g.density(argmax(&g.states, |x| f(x, "area")))),
        "geo-051" => {
            let st = s(argmax(&g.places, |p| f(p, "elevation")), "state");
            one(g.city_key(g.capital(&st)))
        }
        "geo-052" => Answer::bag(g.cities_in("texas").into_iter().map(|c| g.city_key(c))),
        other => panic!("no oracle for {other}"),
    }
}

// ------------------------------------------------------------------ social

pub struct Social {
    people: Vec<Value>,
}

impl Social {
    pub fn load(path: &Path) -> Self {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(path).expect("readable")).expect("json");
        Social { people: v["people"].as_array().expect("people").clone() }
    }

    fn by_id(&self, id: &str) -> &Value {
        self.people.iter().find(|p| s(p, "id") == id).expect("person")
    }

    fn where_(&self, pred: impl Fn(&Value) -> bool) -> Vec<&Value> {
        self.people.iter().filter(|p| pred(p)).collect()
    }

    fn jobs(p: &Value) -> Vec<Value> {
        p["employment"].as_array().cloned().unwrap_or_default()
    }

    fn schools(p: &Value) -> Vec<Value> {
        p["education"].as_array().cloned().unwrap_or_default()
    }
}

fn people<'a, I: IntoIterator<Item = &'a Value>>(ps: I) -> Answer {
    Answer::bag(ps.into_iter().map(|p| format!("person:{}", s(p, "id"))))
}

fn person_ids<I: IntoIterator<Item = String>>(ids: I) -> Answer {
    Answer::bag(ids.into_iter().map(|id| format!("person:{id}")))
}

fn values<I: IntoIterator<Item = String>>(vals: I) -> Answer {
    Answer::bag(vals.into_iter().map(|v| format!("value:{v}")))
}

/// Expected denotation of Overnight example `id`, as a multiset.
pub fn social_answer(db: &Social, id: &str) -> Answer {
    let count = |n: usize| Answer::Num(n as f64);
    match id {
        "soc-001" => people(db.where_(|p| s(p, "gender") == "en.gender.male" && f(p, "birthdate") == 2004.0)),
        "soc-002" => people(db.where_(|p| f(p, "height") >= 180.0)),
        "soc-003" => person_ids(strs(db.by_id("en.person.alice"), "friends")),
        "soc-004" => count(db.where_(|p| s(p, "gender") == "en.gender.female").len()),
        "soc-005" => people([argmax(&db.people, |p| f(p, "height"))]),
        "soc-006" => people(db.where_(|p| s(p, "birthplace") == "en.city.boston")),
        "soc-007" => people(db.where_(|p| Social::jobs(p).iter().any(|j| s(j, "employer") == "en.company.acme"))),
        "soc-008" => people(db.where_(|p| strs(p, "friends").iter().any(|x| x == "en.person.dana"))),
        "soc-009" => people(db.where_(|p| s(p, "relationship_status") != "en.relationship_status.married")),
        "soc-010" => {
            let most = db.people.iter().map(|p| strs(p, "friends").len()).max().expect("people");
            people(db.where_(|p| strs(p, "friends").len() == most))
        }
        "soc-011" => people(db.where_(|p| strs(p, "friends").len() >= 2)),
        "soc-012" => values([s(db.by_id("en.person.frank"), "birthplace")]),
        "soc-013" => {
            let h: Vec<f64> =
                db.where_(|p| s(p, "birthplace") == "en.city.seattle").iter().map(|p| f(p, "height")).collect();
            Answer::Num(h.iter().sum::<f64>() / h.len() as f64)
        }
        "soc-014" => values(Social::jobs(db.by_id("en.person.hank")).iter().map(|j| s(j, "employer"))),
        "soc-015" => {
            people(db.where_(|p| Social::schools(p).iter().any(|e| s(e, "institution") == "en.university.mit")))
        }
        "soc-016" => people(db.where_(|p| Social::schools(p).iter().any(|e| f(e, "end_date") == 2022.0))),
        "soc-017" => people(db.where_(|p| f(p, "birthdate") < 1990.0)),
        "soc-018" => {
            let latest = db.people.iter().map(|p| f(p, "birthdate")).fold(f64::MIN, f64::max);
            people(db.where_(|p| f(p, "birthdate") == latest))
        }
        "soc-019" => values(Social::jobs(db.by_id("en.person.alice")).iter().map(|j| s(j, "job_title"))),
        "soc-020" => {
            count(db.where_(|p| Social::jobs(p).iter().any(|j| s(j, "job_title") == "en.job_title.manager")).len())
        }
        "soc-021" => person_ids(
            db.where_(|p| s(p, "birthplace") == "en.city.chicago").into_iter().flat_map(|p| strs(p, "friends")),
        ),
        "soc-022" => people(db.where_(|p| p["is_student"] == true)),
        "soc-023" => people(db.where_(|p| Social::jobs(p).iter().any(|j| f(j, "start_date") == 2018.0))),
        "soc-024" => person_ids(["en.person.alice".to_string(), "en.person.bob".to_string()]),
        "soc-025" => people(db.where_(|p| f(p, "height") < 170.0 && s(p, "gender") == "en.gender.female")),
        "soc-026" => values([s(argmax(&db.people, |p| f(p, "height")), "gender")]),
        other => panic!("no oracle for {other}"),
    }
}
