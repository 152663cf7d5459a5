//! Social-network environment: people with their friends, education and
//! employment, queried through λ-DCS.
//!
//! λ-DCS comes in two dialects. The full dialect wraps every application in
//! `(call SW.op ...)` and every literal in a typing form (`string`, `date`,
//! `number`). The simple dialect drops all of that. [`simplify_ldcs`] and
//! [`desimplify_ldcs`] convert between the two without loss on the
//! supported fragment; only the simple dialect is executed natively.

mod db;
mod exec;
mod ldcs;

pub use db::{load_social_db, parse_social_db, Education, Employment, Person, SocialDb, SocialError};
pub use exec::{
    exec_ldcs, exec_ldcs_simple, property_kind, ExecError as LdcsExecError, PropertyKind, OPERATORS, PROPERTIES,
};
pub use ldcs::{
    desimplify_ldcs, extract_operators, parse_ldcs, render_ldcs, simplify_ldcs, LdcsAst, LdcsDialect, LdcsError,
    LdcsNode,
};
