use std::collections::HashMap;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SocialError {
    #[error("cannot read social db {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Education {
    pub institution: String,
    pub start_date: i32,
    pub end_date: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Employment {
    pub employer: String,
    pub job_title: String,
    pub start_date: i32,
    pub end_date: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Person {
    /// e.g. `en.person.alice`
    pub id: String,
    pub name: String,
    pub gender: String,
    /// Year granularity.
    pub birthdate: i32,
    pub birthplace: String,
    /// cm
    pub height: f64,
    pub relationship_status: String,
    /// Indices into [`SocialDb::people`].
    pub friends: Vec<usize>,
    pub education: Vec<Education>,
    pub employment: Vec<Employment>,
    pub is_student: bool,
}

#[derive(Debug, Clone)]
pub struct SocialDb {
    pub people: Vec<Person>,
    /// Enum kind (e.g. `gender`) to its members (e.g. `male`), file order.
    pub enums: IndexMap<String, Vec<String>>,
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDb {
    enums: IndexMap<String, Vec<String>>,
    people: Vec<RawPerson>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerson {
    id: String,
    name: String,
    gender: String,
    birthdate: i32,
    birthplace: String,
    height: f64,
    relationship_status: String,
    #[serde(default)]
    friends: Vec<String>,
    #[serde(default)]
    education: Vec<RawEducation>,
    #[serde(default)]
    employment: Vec<RawEmployment>,
    is_student: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEducation {
    institution: String,
    start_date: i32,
    end_date: i32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmployment {
    employer: String,
    job_title: String,
    start_date: i32,
    end_date: i32,
}

pub fn load_social_db(path: impl AsRef<Path>) -> Result<SocialDb, SocialError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| SocialError::Io { path: path.display().to_string(), source })?;
    parse_social_db(&text)
}

pub fn parse_social_db(text: &str) -> Result<SocialDb, SocialError> {
    let raw: RawDb = serde_json::from_str(text).map_err(|e| SocialError::Schema(e.to_string()))?;
    let mut index = HashMap::new();
    for (i, p) in raw.people.iter().enumerate() {
        if !p.id.starts_with("en.person.") {
            return Err(SocialError::Schema(format!("person id '{}' must start with en.person.", p.id)));
        }
        if index.insert(p.id.clone(), i).is_some() {
            return Err(SocialError::Invariant(format!("duplicate person id '{}'", p.id)));
        }
    }
    let check_enum = |who: &str, kind: &str, value: &str| -> Result<(), SocialError> {
        let prefix = format!("en.{kind}.");
        let member = value
            .strip_prefix(&prefix)
            .ok_or_else(|| SocialError::Schema(format!("{who}: '{value}' is not an en.{kind}.* value")))?;
        match raw.enums.get(kind) {
            Some(members) if members.iter().any(|m| m == member) => Ok(()),
            _ => Err(SocialError::Invariant(format!("{who}: unknown enum value '{value}'"))),
        }
    };

    let mut people = Vec::with_capacity(raw.people.len());
    for p in &raw.people {
        check_enum(&p.id, "gender", &p.gender)?;
        check_enum(&p.id, "city", &p.birthplace)?;
        check_enum(&p.id, "relationship_status", &p.relationship_status)?;
        let friends = p
            .friends
            .iter()
            .map(|f| {
                index
                    .get(f)
                    .copied()
                    .ok_or_else(|| SocialError::Invariant(format!("{}: friend '{f}' does not resolve", p.id)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut education = Vec::new();
        for e in &p.education {
            check_enum(&p.id, "university", &e.institution)?;
            if e.start_date > e.end_date {
                return Err(SocialError::Invariant(format!("{}: education starts after it ends", p.id)));
            }
            education.push(Education {
                institution: e.institution.clone(),
                start_date: e.start_date,
                end_date: e.end_date,
            });
        }
        let mut employment = Vec::new();
        for e in &p.employment {
            check_enum(&p.id, "company", &e.employer)?;
            check_enum(&p.id, "job_title", &e.job_title)?;
            if e.start_date > e.end_date {
                return Err(SocialError::Invariant(format!("{}: employment starts after it ends", p.id)));
            }
            employment.push(Employment {
                employer: e.employer.clone(),
                job_title: e.job_title.clone(),
                start_date: e.start_date,
                end_date: e.end_date,
            });
        }
        people.push(Person {
            id: p.id.clone(),
            name: p.name.clone(),
            gender: p.gender.clone(),
            birthdate: p.birthdate,
            birthplace: p.birthplace.clone(),
            height: p.height,
            relationship_status: p.relationship_status.clone(),
            friends,
            education,
            employment,
            is_student: p.is_student,
        });
    }
    for (i, p) in people.iter().enumerate() {
        for f in &p.friends {
            if !people[*f].friends.contains(&i) {
                return Err(SocialError::Invariant(format!(
                    "friendship is not symmetric: {} lists {} but not vice versa",
                    p.id, people[*f].id
                )));
            }
        }
    }
    Ok(SocialDb { people, enums: raw.enums, index })
}

impl SocialDb {
    pub fn person_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// True for `en.<kind>.<member>` with a declared kind and member.
    pub fn is_enum_value(&self, value: &str) -> bool {
        let Some(rest) = value.strip_prefix("en.") else { return false };
        let Some((kind, member)) = rest.split_once('.') else { return false };
        self.enums.get(kind).is_some_and(|m| m.iter().any(|x| x == member))
    }

    /// Returns a copy with the people list reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> SocialDb {
        assert_eq!(order.len(), self.people.len());
        let mut new_pos = vec![0; order.len()];
        for (new, old) in order.iter().enumerate() {
            new_pos[*old] = new;
        }
        let people: Vec<Person> = order
            .iter()
            .map(|old| {
                let mut p = self.people[*old].clone();
                p.friends = p.friends.iter().map(|f| new_pos[*f]).collect();
                p
            })
            .collect();
        let index = people.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();
        SocialDb { people, enums: self.enums.clone(), index }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DB: &str = r#"{"enums":{"gender":["male","female"],"city":["boston"],"relationship_status":["single"],"university":["mit"],"company":["acme"],"job_title":["engineer"]},
"people":[
 {"id":"en.person.a","name":"a","gender":"en.gender.male","birthdate":2000,"birthplace":"en.city.boston","height":180,"relationship_status":"en.relationship_status.single","friends":["en.person.b"],"is_student":true,
  "education":[{"institution":"en.university.mit","start_date":2018,"end_date":2022}]},
 {"id":"en.person.b","name":"b","gender":"en.gender.female","birthdate":1990,"birthplace":"en.city.boston","height":165,"relationship_status":"en.relationship_status.single","friends":["en.person.a"],"is_student":false,
  "employment":[{"employer":"en.company.acme","job_title":"en.job_title.engineer","start_date":2012,"end_date":2020}]}
]}"#;

    #[test]
    fn loads() {
        let db = parse_social_db(DB).unwrap();
        assert_eq!(db.people.len(), 2);
        assert_eq!(db.person_index("en.person.b"), Some(1));
        assert!(db.is_enum_value("en.gender.male"));
        assert!(!db.is_enum_value("en.gender.other"));
    }

    #[test]
    fn rejects_asymmetric_friendship() {
        let text = DB.replacen(r#""friends":["en.person.a"]"#, r#""friends":[]"#, 1);
        assert!(matches!(parse_social_db(&text), Err(SocialError::Invariant(_))));
    }

    #[test]
    fn rejects_inverted_dates() {
        let text = DB.replace(r#""start_date":2018,"end_date":2022"#, r#""start_date":2023,"end_date":2022"#);
        assert!(matches!(parse_social_db(&text), Err(SocialError::Invariant(_))));
    }

    #[test]
    fn rejects_duplicate_ids_and_unknown_enums() {
        let dup = DB.replace("en.person.b\",\"name", "en.person.a\",\"name");
        assert!(parse_social_db(&dup).is_err());
        let bad = DB.replace("en.city.boston\",\"height\":180", "en.city.paris\",\"height\":180");
        assert!(matches!(parse_social_db(&bad), Err(SocialError::Invariant(_))));
    }

    #[test]
    fn permutation_remaps_friends() {
        let db = parse_social_db(DB).unwrap();
        let p = db.permuted(&[1, 0]);
        assert_eq!(p.people[0].id, "en.person.b");
        assert_eq!(p.people[0].friends, vec![1]);
        assert_eq!(p.person_index("en.person.a"), Some(1));
    }
}
