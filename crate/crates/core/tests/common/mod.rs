#![allow(dead_code)]

use std::path::PathBuf;

use mrkit::corpus::{load_dataset, load_split, Dataset, Split};
use mrkit::dispatch::Environment;
use mrkit::pymr::EnvTag;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn env(tag: EnvTag) -> Environment {
    let file = match tag {
        EnvTag::Geo => "geobase.jsonl",
        EnvTag::Social => "social_db.json",
        EnvTag::Calendar => "calendar_world.json",
    };
    Environment::load(tag, data(file)).expect("bundled environment loads")
}

pub fn corpus(name: &str) -> Dataset {
    load_dataset(data(&format!("{name}.jsonl"))).expect("bundled corpus loads")
}

pub fn split(name: &str, ds: &Dataset) -> Split {
    load_split(data(&format!("{name}_split.json")), ds).expect("bundled split loads")
}
