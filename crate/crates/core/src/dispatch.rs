//! Uniform access to every dialect and environment: parse checks, operator
//! extraction and execution keyed by dialect name.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calenv::{self, CalendarWorld};
use crate::denotation::Outcome;
use crate::funql;
use crate::geoenv::{self, GeoConfig, GeoModel};
use crate::pymr::{self, EnvBinding, EnvTag};
use crate::socialenv::{self, LdcsDialect, SocialDb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dialect {
    #[serde(rename = "funql")]
    Funql,
    #[serde(rename = "ldcs")]
    Ldcs,
    #[serde(rename = "ldcs-simple")]
    LdcsSimple,
    #[serde(rename = "dataflow-simple")]
    DataflowSimple,
    #[serde(rename = "pymr")]
    Pymr,
}

pub const DIALECTS: &[Dialect] =
    &[Dialect::Funql, Dialect::Ldcs, Dialect::LdcsSimple, Dialect::DataflowSimple, Dialect::Pymr];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown dialect {0:?}")]
pub struct UnknownDialect(pub String);

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Dialect::Funql => "funql",
            Dialect::Ldcs => "ldcs",
            Dialect::LdcsSimple => "ldcs-simple",
            Dialect::DataflowSimple => "dataflow-simple",
            Dialect::Pymr => "pymr",
        }
    }

    pub fn supports(self, env: EnvTag) -> bool {
        match self {
            Dialect::Funql => env == EnvTag::Geo,
            Dialect::Ldcs | Dialect::LdcsSimple => env == EnvTag::Social,
            Dialect::DataflowSimple => env == EnvTag::Calendar,
            Dialect::Pymr => true,
        }
    }

    /// Parses `text` and discards the tree.
    pub fn check_syntax(self, text: &str) -> Result<(), String> {
        self.operators(text).map(|_| ())
    }

    pub fn operators(self, text: &str) -> Result<BTreeSet<String>, String> {
        let e = |x: &dyn fmt::Display| x.to_string();
        match self {
            Dialect::Funql => funql::parse_funql(text).map(|a| funql::extract_operators(&a)).map_err(|x| e(&x)),
            Dialect::Ldcs => socialenv::parse_ldcs(text, LdcsDialect::Full)
                .and_then(|a| socialenv::extract_operators(&a))
                .map_err(|x| e(&x)),
            Dialect::LdcsSimple => socialenv::parse_ldcs(text, LdcsDialect::Simple)
                .and_then(|a| socialenv::extract_operators(&a))
                .map_err(|x| e(&x)),
            Dialect::DataflowSimple => {
                calenv::parse_dfs(text).map(|a| calenv::extract_operators(&a)).map_err(|x| e(&x))
            }
            Dialect::Pymr => pymr::parse_pymr(text).map(|a| pymr::extract_operators(&a)).map_err(|x| e(&x)),
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dialect {
    type Err = UnknownDialect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DIALECTS.iter().copied().find(|d| d.name() == s).ok_or_else(|| UnknownDialect(s.to_string()))
    }
}

impl FromStr for EnvTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geo" => Ok(EnvTag::Geo),
            "social" => Ok(EnvTag::Social),
            "calendar" => Ok(EnvTag::Calendar),
            other => Err(format!("unknown environment {other:?} (expected geo, social or calendar)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvLoadError {
    #[error(transparent)]
    Geo(#[from] geoenv::GeoError),
    #[error(transparent)]
    Social(#[from] socialenv::SocialError),
    #[error(transparent)]
    Calendar(#[from] calenv::CalendarError),
}

/// A loaded environment.
#[derive(Debug, Clone)]
pub enum Environment {
    Geo(GeoModel),
    Social(SocialDb),
    Calendar(CalendarWorld),
}

impl Environment {
    pub fn load(tag: EnvTag, path: impl AsRef<Path>) -> Result<Self, EnvLoadError> {
        Ok(match tag {
            EnvTag::Geo => Environment::Geo(geoenv::load_geobase_with(path, GeoConfig::default())?),
            EnvTag::Social => Environment::Social(socialenv::load_social_db(path)?),
            EnvTag::Calendar => Environment::Calendar(calenv::load_world(path)?),
        })
    }

    pub fn tag(&self) -> EnvTag {
        self.binding().tag()
    }

    pub fn binding(&self) -> EnvBinding<'_> {
        match self {
            Environment::Geo(m) => EnvBinding::Geo(m),
            Environment::Social(db) => EnvBinding::Social(db),
            Environment::Calendar(w) => EnvBinding::Calendar(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureStage {
    Parse,
    Runtime,
}

/// Why a program produced no outcome.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{stage:?} failure: {message}")]
pub struct ExecFailure {
    pub stage: FailureStage,
    pub message: String,
}

impl ExecFailure {
    fn parse(e: impl fmt::Display) -> Self {
        ExecFailure { stage: FailureStage::Parse, message: e.to_string() }
    }

    fn runtime(e: impl fmt::Display) -> Self {
        ExecFailure { stage: FailureStage::Runtime, message: e.to_string() }
    }
}

/// Parses and runs `text` against `env`.
pub fn execute(dialect: Dialect, text: &str, env: &Environment) -> Result<Outcome, ExecFailure> {
    if !dialect.supports(env.tag()) {
        return Err(ExecFailure::parse(format!(
            "dialect {dialect} does not run on the {} environment",
            env.tag().as_str()
        )));
    }
    match (dialect, env) {
        (Dialect::Funql, Environment::Geo(m)) => {
            let ast = funql::parse_funql(text).map_err(ExecFailure::parse)?;
            funql::exec_funql(&ast, m).map(Outcome::Denotation).map_err(ExecFailure::runtime)
        }
        (Dialect::Ldcs | Dialect::LdcsSimple, Environment::Social(db)) => {
            let d = if dialect == Dialect::Ldcs { LdcsDialect::Full } else { LdcsDialect::Simple };
            let ast = socialenv::parse_ldcs(text, d).map_err(ExecFailure::parse)?;
            socialenv::exec_ldcs(&ast, db).map(Outcome::Denotation).map_err(ExecFailure::runtime)
        }
        (Dialect::DataflowSimple, Environment::Calendar(w)) => {
            let ast = calenv::parse_dfs(text).map_err(ExecFailure::parse)?;
            calenv::exec_dfs(&ast, w).map(|(_, d)| Outcome::Delta(d)).map_err(ExecFailure::runtime)
        }
        (Dialect::Pymr, env) => {
            let ast = pymr::parse_pymr(text).map_err(ExecFailure::parse)?;
            pymr::exec_pymr(&ast, &env.binding()).map_err(|e| {
                if e.is_parse_error() {
                    ExecFailure::parse(e)
                } else {
                    ExecFailure::runtime(e)
                }
            })
        }
        _ => unreachable!("checked by supports()"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for d in DIALECTS {
            assert_eq!(d.name().parse::<Dialect>().unwrap(), *d);
        }
        assert!("sql".parse::<Dialect>().is_err());
    }

    #[test]
    fn dialect_environment_pairs() {
        assert!(Dialect::Funql.supports(EnvTag::Geo));
        assert!(!Dialect::Funql.supports(EnvTag::Social));
        assert!(Dialect::Pymr.supports(EnvTag::Calendar));
    }

    #[test]
    fn wrong_environment_is_a_failure() {
        let env = Environment::Geo(GeoModel::empty());
        let err = execute(Dialect::LdcsSimple, "(listValue en.person)", &env).unwrap_err();
        assert_eq!(err.stage, FailureStage::Parse);
    }
}
