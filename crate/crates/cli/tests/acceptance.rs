//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Built with `harness = false` so the lines are always printed. Exits
//! non-zero when any criterion fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;
#[path = "../../core/tests/reference/mod.rs"]
mod reference;

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{Datelike, NaiveDate, NaiveDateTime, Weekday};
use mrkit::calenv::{CalendarWorld, WorldDelta};
use mrkit::corpus::{load_dataset, load_split, Dataset, SelectionMethod};
use mrkit::demosel::{bm25_rank, greedy_select, structure_set, Bm25Params, GreedyStep, OperatorSet};
use mrkit::denotation::{Denotation, EntityKey, EntityKind, Outcome};
use mrkit::dispatch::{execute, Dialect, Environment};
use mrkit::evalx::{compare_denotations, evaluate_program, exact_match, ComparisonMode, ComparisonPolicy, Verdict};
use mrkit::experiment::select_demos;
use mrkit::pymr::EnvTag;
use mrkit::socialenv::{desimplify_ldcs, parse_ldcs, render_ldcs, simplify_ldcs, LdcsDialect};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

const MALE_2004_FULL: &str = "(call SW.listValue (call SW.filter (call SW.filter (call SW.getProperty (call SW.singleton en.person) (string !type)) (string gender) (string =) en.gender.male) (string birthdate) (string =) (date 2004 -1 -1)))";
const MALE_2004_SIMPLE: &str =
    "(listValue (filter (filter (getProperty en.person !type) gender = en.gender.male) birthdate = 2004))";

const MIN_REDUCTION: f64 = 0.35;
const GEO_FUNQL_COVERAGE_K10: f64 = 0.75;
const COVERAGE_TOL: f64 = 1e-12;
const AGGREGATE_TOL: f64 = 1e-12;
const REPLAY_BUDGET: Duration = Duration::from_secs(30);
const SUITE_BUDGET: Duration = Duration::from_secs(60);

type Check = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn data(name: &str) -> PathBuf {
    root().join("crates/core/data").join(name)
}

fn env(tag: EnvTag) -> Environment {
    let file = match tag {
        EnvTag::Geo => "geobase.jsonl",
        EnvTag::Social => "social_db.json",
        EnvTag::Calendar => "calendar_world.json",
    };
    Environment::load(tag, data(file)).unwrap()
}

fn corpus(name: &str) -> Dataset {
    load_dataset(data(&format!("{name}.jsonl"))).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn simplify(text: &str) -> Result<String, String> {
    let ast = parse_ldcs(text, LdcsDialect::Full).map_err(|e| e.to_string())?;
    Ok(render_ldcs(&simplify_ldcs(&ast).map_err(|e| e.to_string())?))
}

fn desimplify(text: &str) -> Result<String, String> {
    let ast = parse_ldcs(text, LdcsDialect::Simple).map_err(|e| e.to_string())?;
    Ok(render_ldcs(&desimplify_ldcs(&ast).map_err(|e| e.to_string())?))
}

fn c1_simplify_pair() -> Check {
    let s = simplify(MALE_2004_FULL)?;
    ensure(s == MALE_2004_SIMPLE, format!("simplify gave {s}"))?;
    let d = desimplify(MALE_2004_SIMPLE)?;
    ensure(d == MALE_2004_FULL, format!("desimplify gave {d}"))?;
    Ok("simplify and desimplify reproduce the pair exactly".into())
}

fn c2_cross_dialect() -> Check {
    let mut summary = Vec::new();
    for (name, tag, dsl, min) in [
        ("geoquery", EnvTag::Geo, &[Dialect::Funql][..], 50),
        ("overnight", EnvTag::Social, &[Dialect::Ldcs, Dialect::LdcsSimple][..], 20),
        ("smcalflow", EnvTag::Calendar, &[Dialect::DataflowSimple][..], 20),
    ] {
        let ds = corpus(name);
        let env = env(tag);
        let policy = ComparisonPolicy::for_env(tag);
        ensure(ds.examples.len() >= min, format!("{name}: {} < {min} examples", ds.examples.len()))?;
        let mut pairs = 0;
        for ex in &ds.examples {
            let py = ex.program(Dialect::Pymr).ok_or(format!("{} lacks pymr", ex.id))?;
            for &d in dsl {
                let gold = ex.program(d).ok_or(format!("{} lacks {d}", ex.id))?;
                let j = evaluate_program((Dialect::Pymr, py), (d, gold), &env, &policy)
                    .map_err(|e| format!("{} [{d}]: {e}", ex.id))?;
                ensure(j.verdict == Verdict::Correct, format!("{} [{d}]: {:?}", ex.id, j.verdict))?;
                pairs += 1;
            }
        }
        summary.push(format!("{name} {pairs} pairs equal"));
    }
    Ok(summary.join(", "))
}

fn answer_of(d: Dialect, text: &str, env: &Environment) -> Result<oracle::Answer, String> {
    match execute(d, text, env).map_err(|e| e.to_string())? {
        Outcome::Denotation(den) => Ok(oracle::from_denotation(&den)),
        Outcome::Delta(_) => Err("unexpected delta".into()),
    }
}

fn c3_brute_force() -> Check {
    let g = oracle::Geo::load(&data("geobase.jsonl"));
    let geo = env(EnvTag::Geo);
    let mut n = 0;
    for ex in &corpus("geoquery").examples {
        let want = oracle::geo_answer(&g, &ex.id);
        for (&d, text) in &ex.programs {
            let got = answer_of(d, text, &geo)?.dedup();
            ensure(got.matches(&want), format!("{} [{d}]: {got:?} vs {want:?}", ex.id))?;
            n += 1;
        }
    }
    let s = oracle::Social::load(&data("social_db.json"));
    let social = env(EnvTag::Social);
    for ex in &corpus("overnight").examples {
        let want = oracle::social_answer(&s, &ex.id);
        for (&d, text) in &ex.programs {
            let got = answer_of(d, text, &social)?;
            ensure(got.matches(&want), format!("{} [{d}]: {got:?} vs {want:?}", ex.id))?;
            n += 1;
        }
    }
    Ok(format!("{n} programs agree with the raw-data oracle"))
}

fn c4_reduction() -> Check {
    let text = std::fs::read_to_string(data("overnight.jsonl")).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let full = v["programs"]["ldcs"].as_str().ok_or("missing ldcs")?;
        let simple = simplify(full)?;
        ratios.push(1.0 - simple.chars().count() as f64 / full.chars().count() as f64);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    ensure(mean >= MIN_REDUCTION, format!("mean reduction {mean:.4} < {MIN_REDUCTION}"))?;
    Ok(format!("mean reduction {:.1}% over {} programs", mean * 100.0, ratios.len()))
}

fn c5_greedy() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut resets = 0;
    for _ in 0..100 {
        let pool = reference::random_pool(&mut rng);
        let s = structure_set(&pool);
        let k = rng.gen_range(1..=pool.len());
        let got = greedy_select(&pool, &s, k).map_err(|e| e.to_string())?;
        let (sel, trace) = reference::reference_greedy(&pool, &s, k);
        ensure(got.selected == sel && got.trace == trace, format!("pool {pool:?} k={k}"))?;
        resets += trace.iter().filter(|t| matches!(t, GreedyStep::Reset { .. })).count();
    }
    ensure(resets > 0, "no pool exercised a reset")?;

    let ds = corpus("geoquery");
    let split = load_split(data("geoquery_split.json"), &ds).map_err(|e| e.to_string())?;
    let report =
        select_demos(&ds, &split, Dialect::Funql, SelectionMethod::Coverage, 10, 0, None).map_err(|e| e.to_string())?;
    ensure(
        (report.coverage_fraction - GEO_FUNQL_COVERAGE_K10).abs() <= COVERAGE_TOL,
        format!("coverage {} != {GEO_FUNQL_COVERAGE_K10}", report.coverage_fraction),
    )?;
    let pool = split.train_pool(&ds, Some(Dialect::Funql));
    let sets: Vec<OperatorSet> =
        pool.iter().map(|e| reference::funql_ops_by_regex(e.program(Dialect::Funql).unwrap())).collect();
    let s: OperatorSet = sets.iter().flatten().cloned().collect();
    let (sel, _) = reference::reference_greedy(&sets, &s, 10);
    let ids: Vec<&str> = sel.iter().map(|&i| pool[i].id.as_str()).collect();
    ensure(report.ids == ids, format!("selected {:?}, reference {ids:?}", report.ids))?;
    Ok(format!("100 pools match ({resets} resets), geo coverage@10 = {}", report.coverage_fraction))
}

fn c6_bm25() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = Bm25Params::default();
    for _ in 0..1000 {
        let (query, pool, k) = reference::random_bm25_instance(&mut rng);
        let view: Vec<(&str, &str)> = pool.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let got: Vec<String> = bm25_rank(&query, &view, k, params).into_iter().map(|r| r.id).collect();
        let want = reference::naive_bm25(&query, &pool, k, params.k1, params.b);
        ensure(got == want, format!("query {query:?}: {got:?} vs {want:?}"))?;
    }
    Ok("1000 instances equal naive scoring".into())
}

fn denotations(name: &str, tag: EnvTag, d: Dialect) -> Result<Vec<Denotation>, String> {
    let env = env(tag);
    corpus(name)
        .examples
        .iter()
        .map(|ex| match execute(d, ex.program(d).unwrap(), &env).map_err(|e| e.to_string())? {
            Outcome::Denotation(den) => Ok(den),
            Outcome::Delta(_) => Err("unexpected delta".into()),
        })
        .collect()
}

fn shuffled(d: &Denotation, rng: &mut ChaCha8Rng) -> Denotation {
    match d {
        Denotation::Entities { entities } => {
            let mut e = entities.clone();
            e.shuffle(rng);
            Denotation::entities(e)
        }
        n => n.clone(),
    }
}

fn fresh_name(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>) -> String {
    loop {
        let tail: String = (0..6).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
        let name = format!("Q{tail}");
        if used.insert(name.clone()) {
            return name;
        }
    }
}

fn c7_evaluation() -> Check {
    let mut pool = denotations("geoquery", EnvTag::Geo, Dialect::Funql)?;
    pool.extend(denotations("overnight", EnvTag::Social, Dialect::LdcsSimple)?);
    let k = |n: &str| EntityKey::new(EntityKind::Person, n);
    pool.push(Denotation::entities(vec![k("a"), k("b"), k("a"), k("c")]));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let a = &pool[rng.gen_range(0..pool.len())];
        let b = if rng.gen_bool(0.5) { a } else { &pool[rng.gen_range(0..pool.len())] };
        for mode in [ComparisonMode::DenotationSet, ComparisonMode::DenotationMultiset] {
            let policy = ComparisonPolicy::denotation(mode);
            let before = compare_denotations(a, b, &policy);
            let after = compare_denotations(&shuffled(a, &mut rng), &shuffled(b, &mut rng), &policy);
            ensure(before == after, format!("{a:?} vs {b:?} changed under shuffle"))?;
        }
    }

    let ds = corpus("smcalflow");
    let base = match env(EnvTag::Calendar) {
        Environment::Calendar(w) => w,
        _ => unreachable!(),
    };
    let name_re = Regex::new(r#"find_person\("([A-Za-z]+)"\)"#).unwrap();
    let names: BTreeSet<String> = ds
        .examples
        .iter()
        .flat_map(|e| {
            name_re.captures_iter(e.program(Dialect::Pymr).unwrap()).map(|c| c[1].to_string()).collect::<Vec<_>>()
        })
        .collect();
    let policy = ComparisonPolicy::for_env(EnvTag::Calendar);
    ensure(policy.ignore_subject, "calendar policy compares subjects")?;
    let cal = Environment::Calendar(base.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let i = rng.gen_range(0..ds.examples.len());
        let j = if rng.gen_bool(0.5) { i } else { rng.gen_range(0..ds.examples.len()) };
        let pred = ds.examples[i].program(Dialect::Pymr).unwrap();
        let gold = ds.examples[j].program(Dialect::DataflowSimple).unwrap();
        let before = evaluate_program((Dialect::Pymr, pred), (Dialect::DataflowSimple, gold), &cal, &policy)
            .map_err(|e| e.to_string())?;
        let mut used = BTreeSet::new();
        let map: HashMap<&str, String> = names.iter().map(|n| (n.as_str(), fresh_name(&mut rng, &mut used))).collect();
        let rename = |text: &str| {
            let mut out = text.to_string();
            for (old, new) in &map {
                out = Regex::new(&format!(r"\b{old}\b")).unwrap().replace_all(&out, new.as_str()).into_owned();
            }
            out
        };
        let mut world = base.clone();
        for p in &mut world.people {
            p.name = format!("{} {}", fresh_name(&mut rng, &mut used), fresh_name(&mut rng, &mut used));
        }
        let after = evaluate_program(
            (Dialect::Pymr, &rename(pred)),
            (Dialect::DataflowSimple, &rename(gold)),
            &Environment::Calendar(world),
            &policy,
        )
        .map_err(|e| e.to_string())?;
        ensure(
            before.verdict == after.verdict,
            format!("{} vs {} changed under renaming", ds.examples[i].id, ds.examples[j].id),
        )?;
    }

    let pred = "answer(count(traverse_2(stateid('colorado'))))";
    let gold = "answer(count(river(loc_2(stateid('colorado')))))";
    ensure(!exact_match(pred, gold), "traverse_2 pair matched exactly")?;
    let j = evaluate_program(
        (Dialect::Funql, pred),
        (Dialect::Funql, gold),
        &env(EnvTag::Geo),
        &ComparisonPolicy::for_env(EnvTag::Geo),
    )
    .map_err(|e| e.to_string())?;
    ensure(j.verdict == Verdict::Correct, format!("traverse_2 pair verdict {:?}", j.verdict))?;
    Ok("500 shuffles, 100 renamings, traverse_2 pair equal by execution only".into())
}

const DAYS: [(Weekday, &str); 7] = [
    (Weekday::Mon, "MONDAY"),
    (Weekday::Tue, "TUESDAY"),
    (Weekday::Wed, "WEDNESDAY"),
    (Weekday::Thu, "THURSDAY"),
    (Weekday::Fri, "FRIDAY"),
    (Weekday::Sat, "SATURDAY"),
    (Weekday::Sun, "SUNDAY"),
];

fn created_start(d: Dialect, text: &str, world: &CalendarWorld) -> Result<NaiveDateTime, String> {
    match execute(d, text, &Environment::Calendar(world.clone())).map_err(|e| e.to_string())? {
        Outcome::Delta(WorldDelta { created }) if created.len() == 1 => Ok(created[0].start),
        other => Err(format!("expected one created event, got {other:?}")),
    }
}

fn c8_next_dow() -> Check {
    let base = match env(EnvTag::Calendar) {
        Environment::Calendar(w) => w,
        _ => unreachable!(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut hits = 0;
    for (weekday, word) in DAYS {
        for _ in 0..10 {
            let day = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(rng.gen_range(0..2000));
            let now = day.and_hms_opt(rng.gen_range(0..24), rng.gen_range(0..60), 0).unwrap();
            let w = CalendarWorld { now, ..base.clone() };
            let dfs =
                created_start(Dialect::DataflowSimple, &format!("CreateEvent( starts_at( NextDOW( {word} ) ) )"), &w)?;
            let py = created_start(
                Dialect::Pymr,
                &format!("def answer():\n    api.add_event(Event(starts_at=[DateTimeClause.get_next_dow(day_of_week=\"{word}\")]))"),
                &w,
            )?;
            let mut want = now.date().succ_opt().unwrap();
            while want.weekday() != weekday {
                want = want.succ_opt().unwrap();
            }
            if dfs == py && dfs.date() == want {
                hits += 1;
            }
        }
    }
    ensure(hits == 70, format!("{hits}/70"))?;
    Ok("70/70".into())
}

fn run_replay(out_dir: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mrkit"))
        .args(["run", "--config", "experiments/geo_replay/config.toml", "--output-dir"])
        .arg(out_dir)
        .current_dir(root())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    std::fs::read_to_string(out_dir.join("results.csv")).map_err(|e| e.to_string())
}

fn c9_replay() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = run_replay(&tmp.path().join("a"))?;
    let b = run_replay(&tmp.path().join("b"))?;
    let elapsed = start.elapsed();
    ensure(a == b, "results.csv differs between runs")?;
    let expected = std::fs::read_to_string(root().join("experiments/geo_replay/expected_results.csv"))
        .map_err(|e| e.to_string())?;
    ensure(a == expected, "results.csv differs from the fixture")?;

    let read = |p: PathBuf| -> Result<serde_json::Value, String> {
        serde_json::from_str(&std::fs::read_to_string(p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
    };
    let got = read(tmp.path().join("a/aggregate.json"))?;
    let want = read(root().join("experiments/geo_replay/expected_aggregate.json"))?;
    for key in ["mean_accuracy", "stddev_accuracy", "mean_exec_failure_rate"] {
        let (g, w) = (got["aggregate"][key].as_f64(), want["aggregate"][key].as_f64());
        match (g, w) {
            (Some(g), Some(w)) if (g - w).abs() <= AGGREGATE_TOL => {}
            _ => return Err(format!("{key}: {g:?} vs {w:?}")),
        }
    }
    ensure(got["aggregate"]["n_seeds"] == want["aggregate"]["n_seeds"], "seed count differs")?;
    ensure(elapsed < REPLAY_BUDGET, format!("took {elapsed:?}"))?;
    Ok(format!("two offline runs byte-identical, aggregate matches, {:.2}s", elapsed.as_secs_f64()))
}

fn main() {
    let start = Instant::now();
    let criteria: [(u32, fn() -> Check); 9] = [
        (1, c1_simplify_pair),
        (2, c2_cross_dialect),
        (3, c3_brute_force),
        (4, c4_reduction),
        (5, c5_greedy),
        (6, c6_bm25),
        (7, c7_evaluation),
        (8, c8_next_dow),
        (9, c9_replay),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("criterion {n}: PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL {detail}");
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed < SUITE_BUDGET {
        println!("criterion 10: PASS acceptance run took {:.2}s", elapsed.as_secs_f64());
    } else {
        failed += 1;
        println!("criterion 10: FAIL acceptance run took {:.2}s", elapsed.as_secs_f64());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
