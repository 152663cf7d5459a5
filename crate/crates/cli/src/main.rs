//! `mrkit` command-line frontend.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! program or transform fails on otherwise valid input. Results go to
//! stdout as JSON, diagnostics to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mrkit::corpus::{load_dataset, load_split, save_dataset, SelectionMethod};
use mrkit::dispatch::{execute, Dialect, Environment};
use mrkit::evalx::{evaluate_program, ComparisonPolicy};
use mrkit::experiment::{build_client, select_demos, write_outputs, ClientConfig, Experiment, ExperimentConfig};
use mrkit::llmio::{bootstrap_annotations, BootstrapConfig, ClientMode, ScriptedTransport, Transport};
use mrkit::promptkit::{load_dd_source, render_dd, DdVariant};
use mrkit::pymr::EnvTag;
use mrkit::socialenv::{desimplify_ldcs, parse_ldcs, render_ldcs, simplify_ldcs, LdcsDialect};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mrkit", version, about = "Meaning-representation experiments: execute, select, prompt, score")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one program and print its denotation or world delta.
    Execute {
        #[arg(long)]
        env: EnvTag,
        /// Geobase, social database or calendar world.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        dialect: Dialect,
        /// File holding the program.
        #[arg(long, conflicts_with = "program")]
        file: Option<PathBuf>,
        /// Program text.
        #[arg(long)]
        program: Option<String>,
    },
    /// Compare a predicted program against a gold program by execution.
    Evaluate {
        #[arg(long)]
        env: EnvTag,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        pred_dialect: Dialect,
        #[arg(long)]
        pred: String,
        #[arg(long)]
        gold_dialect: Dialect,
        #[arg(long)]
        gold: String,
    },
    /// Convert between full and simple lambda-DCS.
    Simplify {
        #[arg(long, value_enum, default_value_t = Direction::Simplify)]
        direction: Direction,
        /// One program per line.
        #[arg(long, conflicts_with_all = ["program", "dataset"])]
        input: Option<PathBuf>,
        #[arg(long, conflicts_with = "dataset")]
        program: Option<String>,
        /// Corpus file: fill in the missing dialect of every example.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Choose demonstrations from a split's train pool.
    Select {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        dialect: Dialect,
        #[arg(long)]
        method: SelectionMethod,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Test utterance, required by bm25.
        #[arg(long)]
        query: Option<String>,
    },
    /// Print the prompts an experiment would send.
    Prompt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only the prompt for this test id, printed as plain text.
        #[arg(long)]
        id: Option<String>,
    },
    /// Run an experiment and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        /// Replaces the configured seeds, e.g. `--seeds 0,1`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// JSON map from utterance to completion, used instead of HTTP in
        /// live and record modes.
        #[arg(long)]
        scripted: Option<PathBuf>,
    },
    /// Annotate examples in a new dialect from model completions checked
    /// against gold programs.
    Bootstrap {
        /// Corpus; examples with a `target` program form the seed pool,
        /// the rest are annotated.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        env: EnvTag,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target: Dialect,
        #[arg(long)]
        gold: Dialect,
        #[arg(long)]
        dd_source: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = mrkit::llmio::DEFAULT_BOOTSTRAP_PASSES)]
        passes: usize,
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "replay")]
        mode: ClientMode,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        scripted: Option<PathBuf>,
        /// Where to write the grown pool.
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Simplify,
    Desimplify,
}

/// Failure of a program or transform, as opposed to bad arguments.
#[derive(Debug)]
struct DomainFailure(serde_json::Value);

impl std::fmt::Display for DomainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for DomainFailure {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<DomainFailure>() {
            Some(DomainFailure(v)) => {
                let _ = emit(&serde_json::to_string_pretty(v).expect("json"));
                ExitCode::from(2)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    emit(&serde_json::to_string_pretty(v)?)
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Execute { env, data, dialect, file, program } => cmd_execute(env, &data, dialect, file, program),
        Command::Evaluate { env, data, pred_dialect, pred, gold_dialect, gold } => {
            let env = Environment::load(env, &data).with_context(|| format!("loading {}", data.display()))?;
            let policy = ComparisonPolicy::for_env(env.tag());
            let j = evaluate_program((pred_dialect, &pred), (gold_dialect, &gold), &env, &policy)
                .map_err(|e| DomainFailure(json!({"error": e.to_string()})))?;
            print_json(&j)
        }
        Command::Simplify { direction, input, program, dataset, output } => {
            cmd_simplify(direction, input, program, dataset, output)
        }
        Command::Select { dataset, split, dialect, method, k, seed, query } => {
            let ds = load_dataset(&dataset).with_context(|| format!("loading {}", dataset.display()))?;
            let sp = load_split(&split, &ds).with_context(|| format!("loading {}", split.display()))?;
            print_json(&select_demos(&ds, &sp, dialect, method, k, seed, query.as_deref())?)
        }
        Command::Prompt { config, seed, id } => {
            let exp = Experiment::load(&config)?;
            let prompts = exp.prompts(seed)?;
            match id {
                Some(id) => {
                    let (_, p) =
                        prompts.into_iter().find(|(i, _)| *i == id).with_context(|| format!("no test example {id}"))?;
                    emit(p.trim_end_matches('\n'))
                }
                None => print_json(
                    &prompts.into_iter().map(|(id, prompt)| json!({"id": id, "prompt": prompt})).collect::<Vec<_>>(),
                ),
            }
        }
        Command::Run { config, jobs, seeds, output_dir, scripted } => {
            cmd_run(&config, jobs, seeds, output_dir, scripted)
        }
        Command::Bootstrap {
            dataset,
            env,
            data,
            target,
            gold,
            dd_source,
            k,
            seed,
            passes,
            model,
            mode,
            cache,
            scripted,
            output,
        } => {
            let ds = load_dataset(&dataset)?;
            let environment = Environment::load(env, &data)?;
            let dd_text = match dd_source {
                Some(p) => render_dd(&load_dd_source(&p)?, DdVariant::Full),
                None => String::new(),
            };
            let client_cfg = ClientConfig {
                mode,
                model: model.clone(),
                cache,
                endpoint: "https://api.openai.com/v1/chat/completions".into(),
                api_key_env: "OPENAI_API_KEY".into(),
                temperature: 0.0,
                max_tokens: 512,
                max_attempts: 4,
                timeout_secs: 60,
            };
            let client = build_client(&client_cfg, scripted_transport(scripted.as_deref())?)?;
            let (seed_pool, unlabeled): (Vec<_>, Vec<_>) =
                ds.examples.iter().cloned().partition(|e| e.program(target).is_some());
            let cfg = BootstrapConfig {
                target,
                gold,
                dd_text,
                k,
                seed,
                passes,
                model,
                temperature: 0.0,
                max_tokens: 512,
                policy: ComparisonPolicy::for_env(env),
            };
            let result = bootstrap_annotations(&seed_pool, &unlabeled, &environment, &cfg, &client)?;
            let grown = mrkit::corpus::Dataset::new(&ds.name, result.pool.clone())?;
            save_dataset(&grown, &output)?;
            print_json(&json!({
                "seed_pool": seed_pool.len(),
                "pool": result.pool.len(),
                "added": result.added,
                "passes": result.passes,
            }))
        }
    }
}

fn scripted_transport(path: Option<&Path>) -> Result<Option<Box<dyn Transport>>> {
    Ok(match path {
        Some(p) => Some(Box::new(ScriptedTransport::from_file(p).with_context(|| format!("loading {}", p.display()))?)),
        None => None,
    })
}

fn cmd_execute(
    env: EnvTag,
    data: &Path,
    dialect: Dialect,
    file: Option<PathBuf>,
    program: Option<String>,
) -> Result<()> {
    let text = match (file, program) {
        (Some(f), _) => std::fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?,
        (None, Some(p)) => p,
        (None, None) => bail!("give a program with --file or --program"),
    };
    if text.trim().is_empty() {
        bail!("the program is empty");
    }
    let env = Environment::load(env, data).with_context(|| format!("loading {}", data.display()))?;
    match execute(dialect, &text, &env) {
        Ok(outcome) => print_json(&outcome),
        Err(e) => Err(DomainFailure(json!({"failure": e})).into()),
    }
}

fn convert(direction: Direction, text: &str) -> Result<String> {
    let fail = |e: &dyn std::fmt::Display| DomainFailure(json!({"program": text, "error": e.to_string()}));
    let (from, f): (_, fn(&_) -> _) = match direction {
        Direction::Simplify => (LdcsDialect::Full, simplify_ldcs),
        Direction::Desimplify => (LdcsDialect::Simple, desimplify_ldcs),
    };
    let ast = parse_ldcs(text, from).map_err(|e| fail(&e))?;
    Ok(render_ldcs(&f(&ast).map_err(|e| fail(&e))?))
}

fn cmd_simplify(
    direction: Direction,
    input: Option<PathBuf>,
    program: Option<String>,
    dataset: Option<PathBuf>,
    output: Option<PathBuf>,
) -> Result<()> {
    if let Some(path) = dataset {
        let mut ds = load_dataset(&path).with_context(|| format!("loading {}", path.display()))?;
        let (src, dst) = match direction {
            Direction::Simplify => (Dialect::Ldcs, Dialect::LdcsSimple),
            Direction::Desimplify => (Dialect::LdcsSimple, Dialect::Ldcs),
        };
        let mut filled = 0;
        for ex in &mut ds.examples {
            if let (Some(p), None) = (ex.program(src), ex.program(dst)) {
                let converted = convert(direction, p)?;
                ex.programs.insert(dst, converted);
                filled += 1;
            }
        }
        let ds = mrkit::corpus::Dataset::new(&ds.name, ds.examples)?;
        save_dataset(&ds, output.as_ref().unwrap_or(&path))?;
        return print_json(&json!({"filled": filled, "examples": ds.examples.len()}));
    }
    let lines: Vec<String> = match (input, program) {
        (Some(f), _) => std::fs::read_to_string(&f)
            .with_context(|| format!("reading {}", f.display()))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
        (None, Some(p)) => vec![p],
        (None, None) => bail!("give --program, --input or --dataset"),
    };
    let out: Vec<String> = lines.iter().map(|l| convert(direction, l)).collect::<Result<_>>()?;
    match output {
        Some(path) => {
            std::fs::write(&path, out.join("\n") + "\n").with_context(|| format!("writing {}", path.display()))?;
            print_json(&json!({"converted": out.len(), "output": path}))
        }
        None => emit(&out.join("\n")),
    }
}

fn cmd_run(
    config: &Path,
    jobs: Option<usize>,
    seeds: Option<Vec<u64>>,
    output_dir: Option<PathBuf>,
    scripted: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let exp = Experiment::from_config(cfg)?;
    let client = exp.client(scripted_transport(scripted.as_deref())?)?;
    let out = exp.run(&client)?;
    let missing = out
        .runs
        .iter()
        .flat_map(|r| &r.report.verdicts)
        .filter(|v| v.detail.as_deref().is_some_and(|d| d.starts_with("completion failed")))
        .count();
    if missing > 0 {
        log::warn!("{missing} completions failed and were scored as execution failures");
    }
    let written = write_outputs(&exp, &out, &exp.config.output_dir)?;
    print_json(&json!({
        "name": exp.config.name,
        "aggregate": out.aggregate,
        "files": written,
    }))
}
