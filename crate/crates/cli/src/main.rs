//! Command-line front end: explore, map-openapi, bench, replay and serve.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use apixplore::amos::{parse_amos, render_amos, validate_amos, Amos};
use apixplore::bench::{run_experiment_with, BenchConfig, Execution};
use apixplore::executor::{Adapter, HttpAdapter, InProcessAdapter, TransportError, DEFAULT_TIMEOUT_MS};
use apixplore::explorer::{explore, ExplorationConfig, ExploreError};
use apixplore::genseq::ModePolicy;
use apixplore::metaprops::{MetaPropertyId, QueryContext};
use apixplore::openapi::map_openapi;
use apixplore::refsut::{AnySut, GroupsConfig, SutId, SutServer};
use apixplore::report::{emit_test_case, parse_test_case, render_data, render_human, replay};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_UNREACHABLE: u8 = 3;

const BASE_URL_ENV: &str = "APIXPLORE_BASE_URL";

#[derive(Debug, Parser)]
#[command(name = "apixplore", version, about = "Explore the behaviour of an API through general meta-properties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate, select and shrink examples for the given meta-properties.
    Explore(ExploreArgs),
    /// Translate an OpenAPI 3 JSON document into an AMOS catalogue.
    MapOpenapi(MapArgs),
    /// Run the symbolic-reference benchmark on the persons systems.
    Bench(BenchArgs),
    /// Re-execute an emitted test case; succeeds iff its property holds.
    Replay(ReplayArgs),
    /// Serve a reference system over HTTP until interrupted.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
struct SystemArgs {
    /// `in-process:<sut-id>` or `http`; defaults to the catalogue's invocation.
    #[arg(long)]
    adapter: Option<String>,
    /// Base URL for the http adapter; falls back to APIXPLORE_BASE_URL.
    #[arg(long)]
    base_url: Option<String>,
    /// Request timeout for the http adapter.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    timeout_ms: u64,
    /// Simulated asynchronous delete latency of the in-process groups system.
    #[arg(long, default_value_t = 0)]
    delete_latency_ms: u64,
}

#[derive(Debug, Args)]
struct ExploreArgs {
    #[arg(long)]
    amos: PathBuf,
    /// Comma-separated meta-property ids, e.g. MP-R-1,MP-R-2.
    #[arg(long, value_delimiter = ',', value_parser = parse_prop, default_value = "MP-R-1,MP-R-2")]
    props: Vec<MetaPropertyId>,
    #[arg(long, default_value_t = 100)]
    tests: usize,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Query operation observing state; required for MP-S-*.
    #[arg(long)]
    query_op: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Refs)]
    mode: Mode,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    system: SystemArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Refs,
    Random,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every trial on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    case: PathBuf,
    #[arg(long)]
    amos: PathBuf,
    #[command(flatten)]
    system: SystemArgs,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// persons-v1, persons-v2, persons-v3 or groups.
    #[arg(long)]
    sut: String,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    #[arg(long, default_value_t = 0)]
    delete_latency_ms: u64,
}

fn parse_prop(s: &str) -> Result<MetaPropertyId, String> {
    s.trim().parse().map_err(|e: apixplore::metaprops::UnknownMetaProperty| e.to_string())
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Failure::new(EXIT_CONFIG, message)
    }
}

impl From<TransportError> for Failure {
    fn from(e: TransportError) -> Self {
        let code = if e.is_retriable() { EXIT_UNREACHABLE } else { EXIT_CONFIG };
        Failure::new(code, e.to_string())
    }
}

impl From<ExploreError> for Failure {
    fn from(e: ExploreError) -> Self {
        match e {
            ExploreError::Transport(t) => t.into(),
            other => Failure::config(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))
}

fn load_amos(path: &Path) -> Result<Amos, Failure> {
    let amos = parse_amos(&read(path)?).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    if let Some(v) = validate_amos(&amos).first() {
        return Err(Failure::config(format!("{}: {v}", path.display())));
    }
    Ok(amos)
}

fn make_adapter(amos: &Amos, args: &SystemArgs) -> Result<Box<dyn Adapter>, Failure> {
    let spec = match &args.adapter {
        Some(s) => s.clone(),
        None if amos.invocation.method == "http" => "http".into(),
        None => match amos.invocation.config.get("sut").and_then(|v| v.as_str()) {
            Some(sut) => format!("in-process:{sut}"),
            None => return Err(Failure::config("no --adapter given and the catalogue names no system")),
        },
    };
    if spec == "http" {
        let base = args
            .base_url
            .clone()
            .or_else(|| std::env::var(BASE_URL_ENV).ok().filter(|s| !s.is_empty()))
            .or_else(|| amos.invocation.config.get("base-url").and_then(|v| v.as_str()).map(String::from))
            .ok_or_else(|| Failure::config(format!("the http adapter needs --base-url or {BASE_URL_ENV}")))?;
        return Ok(Box::new(HttpAdapter::new(base.trim_end_matches('/'), args.timeout_ms)));
    }
    let Some(id) = spec.strip_prefix("in-process:") else {
        return Err(Failure::config(format!("unknown adapter `{spec}`; expected in-process:<sut-id> or http")));
    };
    let id: SutId = id.parse().map_err(|e: apixplore::refsut::UnknownSut| Failure::config(e.to_string()))?;
    Ok(Box::new(InProcessAdapter::new(AnySut::new(id, groups_config(args.delete_latency_ms)))))
}

fn groups_config(delete_latency_ms: u64) -> GroupsConfig {
    GroupsConfig {
        async_delete_latency_ms: delete_latency_ms,
        ..GroupsConfig::default()
    }
}

/// `persons.amos.json` -> `persons`.
fn stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("exploration");
    let name = name.strip_suffix(".json").unwrap_or(name);
    let name = name.strip_suffix(".amos").unwrap_or(name);
    if name.is_empty() {
        "exploration".into()
    } else {
        name.into()
    }
}

fn cmd_explore(args: ExploreArgs) -> Result<(), Failure> {
    let amos = load_amos(&args.amos)?;
    let config = ExplorationConfig {
        props: args.props.clone(),
        tests_per_iteration: args.tests,
        iterations: args.iterations,
        seed: args.seed,
        mode_policy: match args.mode {
            Mode::Refs => ModePolicy::ReferencesAllowed,
            Mode::Random => ModePolicy::RandomOnly,
        },
        ctx: args.query_op.as_deref().map(QueryContext::new),
        ..Default::default()
    };
    apixplore::explorer::check_config(&amos, &config)?;
    let mut adapter = make_adapter(&amos, &args.system)?;
    let result = explore(&amos, &mut adapter, &config)?;

    let mut text = render_human(&result).join("\n");
    text.push('\n');
    let mut files = vec![
        (format!("{}.report.json", stem(&args.amos)), render_data(&result)),
        (format!("{}.txt", stem(&args.amos)), text.clone()),
    ];
    for p in &result.props {
        for (i, ex) in p.examples.iter().enumerate() {
            files.push((format!("{}.{}-{}.case.json", stem(&args.amos), p.prop, i + 1), emit_test_case(ex)));
        }
    }
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot create {}: {e}", args.out.display())))?;
    for (name, content) in &files {
        write(&args.out.join(name), content)?;
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    print!("{text}");
    Ok(())
}

fn cmd_map(args: MapArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot read {}: {e}", args.input.display())))?;
    let report = map_openapi(&text).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", args.input.display())))?;
    write(&args.out, &render_amos(&report.amos))?;
    for w in &report.warnings {
        eprintln!("warning: {}: {}", w.location, w.reason);
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let configs = BenchConfig::all(args.runs as usize, args.budget as usize);
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = run_experiment_with(&configs, args.seed, execution);
    if let Some(out) = &args.out {
        write(out, &result.to_csv())?;
    }
    print!("{}", result.render_tables());
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<(), Failure> {
    let amos = load_amos(&args.amos)?;
    let case = parse_test_case(&read(&args.case)?).map_err(|e| Failure::config(format!("{}: {e}", args.case.display())))?;
    for step in &case.steps {
        if amos.operation(&step.op).is_none() {
            return Err(Failure::config(format!("case calls `{}`, which the catalogue lacks", step.op)));
        }
    }
    let mut adapter = make_adapter(&amos, &args.system)?;
    let outcome = replay(&case, &mut adapter, &amos)?;
    if outcome.holds {
        println!("{} holds", case.prop);
        Ok(())
    } else {
        Err(Failure::new(EXIT_FAILURE, format!("{} does not hold", case.prop)))
    }
}

fn cmd_serve(args: ServeArgs) -> Result<(), Failure> {
    let id: SutId = args
        .sut
        .parse()
        .map_err(|e: apixplore::refsut::UnknownSut| Failure::config(e.to_string()))?;
    let server = SutServer::start(AnySut::new(id, groups_config(args.delete_latency_ms)), &args.addr)
        .map_err(|e| Failure::new(EXIT_UNREACHABLE, format!("cannot listen on {}: {e}", args.addr)))?;
    println!("serving {} at {}", id.as_str(), server.base_url());
    server.join();
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Explore(a) => cmd_explore(a),
        Command::MapOpenapi(a) => cmd_map(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
