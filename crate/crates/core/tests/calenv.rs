mod common;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Weekday};
use mrkit::calenv::{resolve_datetime, CalendarWorld, DateTimeClause, TimeOfDay, WorldDelta};
use mrkit::denotation::Outcome;
use mrkit::dispatch::{execute, Dialect, Environment};
use mrkit::pymr::EnvTag;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DAYS: [(Weekday, &str); 7] = [
    (Weekday::Mon, "MONDAY"),
    (Weekday::Tue, "TUESDAY"),
    (Weekday::Wed, "WEDNESDAY"),
    (Weekday::Thu, "THURSDAY"),
    (Weekday::Fri, "FRIDAY"),
    (Weekday::Sat, "SATURDAY"),
    (Weekday::Sun, "SUNDAY"),
];

fn world() -> CalendarWorld {
    match common::env(EnvTag::Calendar) {
        Environment::Calendar(w) => w,
        _ => unreachable!(),
    }
}

fn random_anchor(rng: &mut ChaCha8Rng) -> NaiveDateTime {
    let day = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + Duration::days(rng.gen_range(0..2000));
    day.and_hms_opt(rng.gen_range(0..24), rng.gen_range(0..60), 0).unwrap()
}

fn created_start(dialect: Dialect, text: &str, world: &CalendarWorld) -> NaiveDateTime {
    match execute(dialect, text, &Environment::Calendar(world.clone())).unwrap() {
        Outcome::Delta(WorldDelta { created }) => {
            assert_eq!(created.len(), 1);
            created[0].start
        }
        Outcome::Denotation(_) => panic!("expected a delta"),
    }
}

/// Walks forward one day at a time until the weekday matches.
fn walk_to(today: NaiveDate, weekday: Weekday) -> NaiveDate {
    let mut d = today + Duration::days(1);
    while d.weekday() != weekday {
        d += Duration::days(1);
    }
    d
}

#[test]
fn next_dow_lands_in_following_week() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base = world();
    let mut hits = 0;
    for (weekday, word) in DAYS {
        for _ in 0..10 {
            let now = random_anchor(&mut rng);
            let w = CalendarWorld { now, ..base.clone() };
            let dfs =
                created_start(Dialect::DataflowSimple, &format!("CreateEvent( starts_at( NextDOW( {word} ) ) )"), &w);
            let py = created_start(
                Dialect::Pymr,
                &format!(
                    "def answer():\n    api.add_event(Event(starts_at=[DateTimeClause.get_next_dow(day_of_week=\"{word}\")]))"
                ),
                &w,
            );
            let (direct, _) = resolve_datetime(&[DateTimeClause::NextDow(weekday)], now, &w.defaults).unwrap();
            assert_eq!(dfs, direct);
            assert_eq!(py, direct);
            let date = direct.date();
            let today = now.date();
            assert_eq!(date.weekday(), weekday);
            assert!(date > today && date <= today + Duration::days(7), "{word} from {now}: {date}");
            assert_eq!(date, walk_to(today, weekday));
            hits += 1;
        }
    }
    assert_eq!(hits, 70);
}

#[test]
fn explicit_time_and_default_duration() {
    let w = world();
    let noon = DateTimeClause::Time(TimeOfDay { hour: 12, minute: 0, pm: true });
    let (start, end) = resolve_datetime(&[DateTimeClause::Tomorrow, noon], w.now, &w.defaults).unwrap();
    assert_eq!(start, (w.now.date() + Duration::days(1)).and_hms_opt(12, 0, 0).unwrap());
    assert_eq!(end - start, Duration::minutes(w.defaults.duration_minutes));
    let midnight = DateTimeClause::Time(TimeOfDay { hour: 12, minute: 0, pm: false });
    let (start, _) = resolve_datetime(&[DateTimeClause::Today, midnight], w.now, &w.defaults).unwrap();
    assert_eq!(start, w.now.date().and_hms_opt(0, 0, 0).unwrap());
}

#[test]
fn conflicting_clauses_are_rejected() {
    let w = world();
    let two_dates = [DateTimeClause::Today, DateTimeClause::Tomorrow];
    assert!(resolve_datetime(&two_dates, w.now, &w.defaults).is_err());
    let bad = DateTimeClause::Time(TimeOfDay { hour: 13, minute: 0, pm: false });
    assert!(resolve_datetime(&[bad], w.now, &w.defaults).is_err());
}

#[test]
fn team_and_manager_lookups() {
    let w = world();
    let me = w.current_user();
    let manager = w.manager_of(&me.id).unwrap();
    assert_eq!(manager.name, "Jordan Park");
    let team: Vec<&str> = w.team_of(&me.id).unwrap().iter().map(|p| p.name.as_str()).collect();
    for member in &team {
        let p = w.find_person(member).unwrap();
        assert!(p.id == me.id || p.manager == me.manager);
    }
    assert!(team.contains(&"Morgan Lee"));
    assert!(w.find_person("Nobody Here").is_err());
}

#[test]
fn execution_leaves_input_world_untouched() {
    let w = world();
    let before = w.events.len();
    let (next, delta) =
        mrkit::calenv::exec_dfs(&mrkit::calenv::parse_dfs("CreateEvent( at_location( Central Park ) )").unwrap(), &w)
            .unwrap();
    assert_eq!(w.events.len(), before);
    assert_eq!(next.events.len(), before + 1);
    assert_eq!(w.diff(&next), delta);
}
