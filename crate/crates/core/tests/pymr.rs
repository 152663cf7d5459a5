mod common;

use mrkit::denotation::{Denotation, Outcome};
use mrkit::dispatch::{execute, Dialect, Environment, ExecFailure, FailureStage};
use mrkit::pymr::{extract_operators, parse_pymr, EnvTag, PymrError};

fn run(tag: EnvTag, body: &str) -> Result<Outcome, ExecFailure> {
    let env: Environment = common::env(tag);
    let src = format!("def answer():\n{}", body.lines().map(|l| format!("    {l}\n")).collect::<String>());
    execute(Dialect::Pymr, &src, &env)
}

fn num(body: &str) -> f64 {
    match run(EnvTag::Geo, body).unwrap() {
        Outcome::Denotation(Denotation::Number { number }) => number.value,
        other => panic!("expected a number, got {other:?}"),
    }
}

fn names(tag: EnvTag, body: &str) -> Vec<String> {
    match run(tag, body).unwrap() {
        Outcome::Denotation(Denotation::Entities { entities }) => entities.into_iter().map(|e| e.name).collect(),
        other => panic!("expected entities, got {other:?}"),
    }
}

fn stage(body: &str) -> FailureStage {
    run(EnvTag::Geo, body).unwrap_err().stage
}

#[test]
fn arithmetic_and_builtins() {
    assert_eq!(num("return 1 + 2 * 3"), 7.0);
    assert_eq!(num("return -(4 - 10) / 2"), 3.0);
    assert_eq!(num("return max([3, 9, 2])"), 9.0);
    assert_eq!(num("return min(x * 2 for x in [5, 4])"), 8.0);
    assert_eq!(num("return len(set([1, 1, 2]))"), 2.0);
    assert_eq!(
        num("return sum([s.size for s in geo_model.states if s.name == 'kansas'])"),
        num("return geo_model.find_state('kansas').size")
    );
    assert_eq!(num("return abs(-2.5)"), 2.5);
    assert_eq!(num("return sorted([3, 1, 2])[0]"), 1.0);
}

#[test]
fn statements_and_collections() {
    let body = "total = 0\nfor r in geo_model.find_state('texas').rivers:\n    total = total + 1\nreturn total";
    assert_eq!(num(body), num("return len(geo_model.find_state('texas').rivers)"));
    let body = "xs = [1, 2]\nxs.append(3)\nxs.extend([4, 5])\nxs.remove(1)\nreturn len(xs)";
    assert_eq!(num(body), 4.0);
    let body = "s = set()\ns.add(1)\ns.update([1, 2, 3])\ns.remove(3)\nreturn len(s)";
    assert_eq!(num(body), 2.0);
    let body = "if any(s.size > 600000 for s in geo_model.states):\n    return 1\nelif True:\n    return 2\nelse:\n    return 3";
    assert_eq!(num(body), 1.0);
    assert_eq!(num("if all([True, 1 == 1]):\n    return 1\nreturn 0"), 1.0);
}

#[test]
fn superlatives_with_key_functions() {
    let got = names(EnvTag::Geo, "return max(geo_model.states, key=lambda s: s.size)");
    assert_eq!(got, ["texas"]);
    let got = names(EnvTag::Geo, "return [c for c in geo_model.find_state('texas').cities if c.population > 1000000]");
    assert!(!got.is_empty());
    assert!(got.iter().all(|n| n.ends_with(", tx")));
}

#[test]
fn social_enums_and_people() {
    let mut got =
        names(EnvTag::Social, "return [p for p in api.people if p.gender == Gender.male and p.birthdate == 2004]");
    let simple = "(listValue (filter (filter (getProperty en.person !type) gender = en.gender.male) birthdate = 2004))";
    let mut want = match execute(Dialect::LdcsSimple, simple, &common::env(EnvTag::Social)).unwrap() {
        Outcome::Denotation(Denotation::Entities { entities }) => {
            entities.into_iter().map(|e| e.name).collect::<Vec<_>>()
        }
        other => panic!("{other:?}"),
    };
    got.sort();
    want.sort();
    assert!(!got.is_empty());
    assert_eq!(got, want);
    assert_eq!(names(EnvTag::Social, "return [api.find_person_by_id('en.person.alice')]"), ["en.person.alice"]);
}

#[test]
fn calendar_programs_produce_deltas() {
    let out = run(
        EnvTag::Calendar,
        "me = api.get_current_user()\napi.add_event(Event(subject='sync', attendees=me.find_team_of(), starts_at=[DateTimeValues.Tomorrow]))",
    )
    .unwrap();
    match out {
        Outcome::Delta(d) => {
            assert_eq!(d.created.len(), 1);
            assert!(d.created[0].attendees.len() >= 2);
        }
        Outcome::Denotation(_) => panic!("expected a delta"),
    }
}

#[test]
fn unsupported_constructs_fail_at_parse_time() {
    for body in [
        "import os\nreturn 1",
        "while True:\n    pass",
        "return {1: 2}",
        "class A:\n    pass",
        "return 1 if True else 2",
    ] {
        assert_eq!(stage(body), FailureStage::Parse, "{body}");
    }
    assert!(matches!(parse_pymr("def main():\n    return 1"), Err(e) if e.is_parse_error()));
}

#[test]
fn runtime_errors_are_reported() {
    for body in [
        "return undefined_name",
        "return geo_model.find_state('texas').no_such_attr",
        "return [1][5]",
        "return max([])",
        "return 1 + 'a'",
        "x = 1",
        "return geo_model.find_state('atlantis')",
    ] {
        assert_eq!(stage(body), FailureStage::Runtime, "{body}");
    }
}

#[test]
fn runaway_loops_hit_the_budget() {
    let body = "xs = [0]\nfor x in xs:\n    xs.append(x + 1)\nreturn 1";
    let err = run(EnvTag::Geo, body).unwrap_err();
    assert_eq!(err.stage, FailureStage::Runtime);
    assert!(err.message.contains(&PymrError::Budget.to_string()), "{}", err.message);
}

#[test]
fn operator_extraction_skips_builtins_and_locals() {
    let ast = parse_pymr(
        "def answer():\n    xs = []\n    xs.append(geo_model.find_state('texas').capital)\n    return len(xs)",
    )
    .unwrap();
    let ops: Vec<String> = extract_operators(&ast).into_iter().collect();
    assert_eq!(ops, ["capital", "find_state"]);
}
