//! `navmem` command-line interface.

mod config;
mod error;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use navmem::bench::{
    self, check_neutrality, generate_benchmark, read_suite, run_navigation_bench, run_retrieval_bench, write_suite,
    BenchError, BenchmarkCase, ExportFormat, MetricsRecord, NavConfig, RunSettings, Variant,
};
use navmem::env_sim::{explore_detailed, generate_scene, read_stream, write_stream, SceneDescription, SimError, Termination};
use navmem::instruction::{execute, parse_instruction, schedule, InstructionError, RemoteParser, TaskId};
use navmem::memory::{
    build_memory, load_memory, save_memory, MajoritySummarizer, Memory, MemoryError, RemoteSummarizer, Summarizer,
    TokenDescriber,
};
use navmem::planner::{plan_route, render_guide, CostMetric, GuideEntry, PlannerError, RouteOptions};
use navmem::retrieval::{retrieve, Embedder, HashEmbedder, Query, RemoteEmbedder, SearchMode};
use navmem::service::{url_from_env, EMBED_URL_ENV, LLM_URL_ENV};
use navmem::{NodeId, Point2};
use serde::Serialize;

use config::RunConfig;
use error::{CliError, Kind, Stage};

#[derive(Parser, Debug)]
#[command(name = "navmem", version, about = "Spatial-semantic memory, retrieval and route planning")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random scene.
    GenScene(GenSceneArgs),
    /// Explore a scene and record the observation stream.
    Explore(ExploreArgs),
    /// Build a memory from an observation stream.
    BuildMemory(BuildMemoryArgs),
    /// Retrieve nodes for a target or a whole instruction.
    Query(QueryArgs),
    /// Plan a route through target nodes.
    Plan(PlanArgs),
    /// Run the retrieval and navigation benchmarks.
    Bench(BenchArgs),
    /// Run the module ablations.
    Ablate(BenchArgs),
    /// Convert exported results between CSV and JSON.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct GenSceneArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    obstacles: Option<usize>,
    #[arg(long)]
    objects: Option<usize>,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Output JSON Lines path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Start position "x,y"; defaults to the free cell nearest the center.
    #[arg(long, value_parser = parse_point)]
    start: Option<Point2>,
    #[arg(long)]
    sensor_range: Option<f64>,
    #[arg(long)]
    step_budget: Option<usize>,
    #[arg(long)]
    resolution: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct MemoryFlags {
    #[arg(long)]
    delta_spatial: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    max_children: Option<usize>,
}

#[derive(Args, Debug)]
struct BuildMemoryArgs {
    #[arg(long)]
    stream: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    memory: MemoryFlags,
}

#[derive(Args, Debug, Clone, Default)]
struct QueryFlags {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    hops: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beam_width: Option<usize>,
    /// flat, forest, anchor or boosted.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SearchMode>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    memory: PathBuf,
    /// Multi-goal instruction, e.g. "sofa near chair then lamp".
    #[arg(long, conflicts_with_all = ["target", "query"])]
    instruction: Option<String>,
    /// Single target text.
    #[arg(long, conflicts_with = "query")]
    target: Option<String>,
    #[arg(long, requires = "target")]
    anchor: Option<String>,
    #[arg(long = "context", requires = "target")]
    contexts: Vec<String>,
    /// Query JSON file.
    #[arg(long)]
    query: Option<PathBuf>,
    #[command(flatten)]
    flags: QueryFlags,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[arg(long)]
    memory: PathBuf,
    /// Comma-separated target node ids in instruction order.
    #[arg(long, value_delimiter = ',', conflicts_with = "instruction", required_unless_present = "instruction")]
    targets: Vec<NodeId>,
    /// Retrieve the targets of this instruction first.
    #[arg(long)]
    instruction: Option<String>,
    /// Node the agent starts from.
    #[arg(long)]
    start: Option<NodeId>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Cost legs by straight lines instead of map paths.
    #[arg(long)]
    straight_line: bool,
    /// Also write the human-readable guide to this path.
    #[arg(long)]
    guide: Option<PathBuf>,
    #[command(flatten)]
    flags: QueryFlags,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Read cases from this JSON Lines suite instead of generating them.
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Save the generated suite here.
    #[arg(long)]
    save_suite: Option<PathBuf>,
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long)]
    decoys: Option<usize>,
    #[arg(long)]
    mean_nodes: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Results path; CSV on stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; taken from the output extension by default.
    #[arg(long, value_parser = parse_format)]
    format: Option<ExportFormat>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Results file (.csv or .json).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: Option<ExportFormat>,
}

fn parse_point(s: &str) -> Result<Point2, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let f = |v: &str| v.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok(Point2::new(f(x)?, f(y)?))
}

fn parse_mode(s: &str) -> Result<SearchMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown mode '{s}'"))
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase())).map_err(|_| format!("unknown format '{s}'"))
}

fn format_for(path: &Path, explicit: Option<ExportFormat>) -> ExportFormat {
    explicit.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ExportFormat::Json,
        _ => ExportFormat::Csv,
    })
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn embedder(dim: usize) -> Box<dyn Embedder> {
    match url_from_env(EMBED_URL_ENV) {
        Some(url) => Box::new(RemoteEmbedder::new(url, dim)),
        None => Box::new(HashEmbedder::new(dim)),
    }
}

fn summarizer() -> Box<dyn Summarizer> {
    match url_from_env(LLM_URL_ENV) {
        Some(url) => Box::new(RemoteSummarizer::new(url)),
        None => Box::new(MajoritySummarizer),
    }
}

fn instruction_parser() -> Option<RemoteParser> {
    url_from_env(LLM_URL_ENV).map(RemoteParser::new)
}

fn sim_error(stage: Stage, input: &Path, e: SimError) -> CliError {
    match e {
        SimError::Io(e) => CliError::io(stage, input, e),
        e @ (SimError::Json(_) | SimError::InvalidStream(_) | SimError::InvalidScene(_)) => {
            CliError::parse(stage, input.display(), e)
        }
        e => CliError::domain(stage, input.display(), e),
    }
}

fn memory_load_error(stage: Stage, input: &Path, e: MemoryError) -> CliError {
    match e {
        MemoryError::Io(e) => CliError::io(stage, input, e),
        e => CliError::parse(stage, input.display(), e),
    }
}

fn bench_error(stage: Stage, input: &str, e: BenchError) -> CliError {
    match e {
        BenchError::Io(e) => CliError::new(Kind::Io, stage, input, e),
        BenchError::Neutrality(m) => CliError::new(Kind::Neutrality, stage, input, m),
        e @ (BenchError::Json(_) | BenchError::Csv(_)) => CliError::parse(stage, input, e),
        e => CliError::domain(stage, input, e),
    }
}

fn instruction_error(stage: Stage, text: &str, e: InstructionError) -> CliError {
    match e {
        e @ InstructionError::Syntax { .. } => CliError::parse(stage, format!("instruction {text:?}"), e),
        e => CliError::domain(stage, format!("instruction {text:?}"), e),
    }
}

/// Writes `text` to `path`, or stdout when `path` is `None`.
fn emit(stage: Stage, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(stage, p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::new(Kind::Io, stage, "stdout", e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn load_mem(stage: Stage, path: &Path) -> Result<Memory, CliError> {
    load_memory(path).map_err(|e| memory_load_error(stage, path, e))
}

fn query_template(cfg: &RunConfig, flags: &QueryFlags) -> Query {
    let mut q = cfg.query.clone();
    set(&mut q.k, flags.k);
    set(&mut q.hops, flags.hops);
    set(&mut q.sigma, flags.sigma);
    set(&mut q.eta, flags.eta);
    set(&mut q.beam_width, flags.beam_width);
    set(&mut q.mode, flags.mode);
    q.template()
}

fn gen_scene(cfg: &RunConfig, args: &GenSceneArgs) -> Result<(), CliError> {
    let mut sc = cfg.scene.clone();
    set(&mut sc.width, args.width);
    set(&mut sc.height, args.height);
    set(&mut sc.obstacles, args.obstacles);
    set(&mut sc.objects, args.objects);
    let scene = generate_scene(&sc, cfg.seed).map_err(|e| CliError::domain(Stage::GenScene, "scene config", e))?;
    emit(Stage::GenScene, args.out.as_deref(), &to_json(&scene))
}

fn explore_cmd(cfg: &RunConfig, args: &ExploreArgs) -> Result<(), CliError> {
    let scene = SceneDescription::load(&args.scene).map_err(|e| sim_error(Stage::Explore, &args.scene, e))?;
    let mut p = cfg.explore.clone();
    set(&mut p.sensor_range, args.sensor_range);
    set(&mut p.step_budget, args.step_budget);
    set(&mut p.resolution, args.resolution);
    let start = match args.start {
        Some(s) => s,
        None => scene
            .default_start(p.resolution)
            .ok_or_else(|| CliError::domain(Stage::Explore, args.scene.display(), "scene has no free cell"))?,
    };
    let run = explore_detailed(&scene, start, &p).map_err(|e| sim_error(Stage::Explore, &args.scene, e))?;
    if run.termination == Termination::BudgetExhausted {
        log::warn!("exploration stopped at the step budget with frontiers left");
    }
    log::info!("explored {} steps", run.records.len());
    match &args.out {
        Some(path) => write_stream(path, &run.records).map_err(|e| sim_error(Stage::Explore, path, e)),
        None => {
            let mut text = String::new();
            for r in &run.records {
                text.push_str(&serde_json::to_string(r).expect("records serialize"));
                text.push('\n');
            }
            emit(Stage::Explore, None, &text)
        }
    }
}

fn memory_params(cfg: &RunConfig, flags: &MemoryFlags) -> navmem::memory::MemoryParams {
    let mut m = cfg.memory.clone();
    set(&mut m.delta_spatial, flags.delta_spatial);
    set(&mut m.omega, flags.omega);
    set(&mut m.alpha, flags.alpha);
    set(&mut m.tau, flags.tau);
    set(&mut m.max_children, flags.max_children);
    m
}

fn build_memory_cmd(cfg: &RunConfig, args: &BuildMemoryArgs) -> Result<(), CliError> {
    let stream = read_stream(&args.stream).map_err(|e| sim_error(Stage::BuildMemory, &args.stream, e))?;
    let params = memory_params(cfg, &args.memory);
    params
        .validate()
        .map_err(|e| CliError::parse(Stage::BuildMemory, "memory parameters", e))?;
    let memory = build_memory(&stream, &params, &TokenDescriber, &*embedder(params.embedding_dim), &*summarizer())
        .map_err(|e| CliError::domain(Stage::BuildMemory, args.stream.display(), e))?;
    log::info!("memory has {} nodes and {} forest roots", memory.len(), memory.forest.roots.len());
    match &args.out {
        Some(path) => save_memory(&memory, path).map_err(|e| memory_load_error(Stage::BuildMemory, path, e)),
        None => {
            let text = memory.to_json().map_err(|e| CliError::domain(Stage::BuildMemory, "memory", e))?;
            emit(Stage::BuildMemory, None, &(text + "\n"))
        }
    }
}

#[derive(Serialize)]
struct InstructionOutput {
    instruction: String,
    graph: navmem::instruction::TaskGraph,
    plan: navmem::instruction::RetrievalPlan,
    results: Vec<navmem::instruction::StepOutcome>,
}

fn query_cmd(cfg: &RunConfig, args: &QueryArgs) -> Result<(), CliError> {
    let memory = load_mem(Stage::Query, &args.memory)?;
    let emb = embedder(memory.params.embedding_dim);
    let template = query_template(cfg, &args.flags);
    let domain = |e: navmem::retrieval::RetrievalError| CliError::domain(Stage::Query, args.memory.display(), e);
    if let Some(text) = &args.instruction {
        let graph = parse_instruction(text, instruction_parser().as_ref())
            .map_err(|e| instruction_error(Stage::Query, text, e))?;
        let plan = schedule(&graph, &template).map_err(|e| instruction_error(Stage::Query, text, e))?;
        let results = execute(&plan, &memory, &*emb).map_err(domain)?;
        let out = InstructionOutput {
            instruction: text.clone(),
            graph,
            plan,
            results,
        };
        return emit(Stage::Query, None, &to_json(&out));
    }
    let query = match (&args.query, &args.target) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(Stage::Query, path, e))?;
            // Fields missing from the file come from config and flags.
            let mut base = serde_json::to_value(&template).expect("queries serialize");
            let given: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::parse(Stage::Query, path.display(), e))?;
            let Some(given) = given.as_object() else {
                return Err(CliError::parse(Stage::Query, path.display(), "expected a JSON object"));
            };
            for (k, v) in given {
                base[k] = v.clone();
            }
            serde_json::from_value(base).map_err(|e| CliError::parse(Stage::Query, path.display(), e))?
        }
        (None, Some(target)) => Query {
            target_text: target.clone(),
            anchor_text: args.anchor.clone(),
            context_texts: args.contexts.clone(),
            ..template
        },
        (None, None) => {
            return Err(CliError::parse(
                Stage::Query,
                "arguments",
                "one of --instruction, --target or --query is required",
            ))
        }
    };
    let result = retrieve(&memory, &*emb, &query).map_err(domain)?;
    emit(Stage::Query, None, &to_json(&result))
}

fn plan_cmd(cfg: &RunConfig, args: &PlanArgs) -> Result<(), CliError> {
    let memory = load_mem(Stage::Plan, &args.memory)?;
    let mut options = RouteOptions {
        lambda: args.lambda.unwrap_or(cfg.planner.lambda),
        start: args.start,
        precedence: Vec::new(),
        metric: if args.straight_line { CostMetric::StraightLine } else { CostMetric::Graph },
    };
    let entries: Vec<GuideEntry>;
    let targets: Vec<NodeId> = match &args.instruction {
        None => {
            entries = args
                .targets
                .iter()
                .map(|id| GuideEntry {
                    label: memory.map.node(*id).map(|n| n.description.clone()).unwrap_or_default(),
                    note: None,
                })
                .collect();
            args.targets.clone()
        }
        Some(text) => {
            let graph = parse_instruction(text, instruction_parser().as_ref())
                .map_err(|e| instruction_error(Stage::Plan, text, e))?;
            let emb = embedder(memory.params.embedding_dim);
            let template = query_template(cfg, &args.flags);
            let mut found: BTreeMap<TaskId, NodeId> = BTreeMap::new();
            for task in &graph.tasks {
                let q = Query {
                    target_text: task.target_text.clone(),
                    anchor_text: task.anchor_text.clone(),
                    context_texts: task.context_texts.clone(),
                    ..template.clone()
                };
                let r = retrieve(&memory, &*emb, &q).map_err(|e| CliError::domain(Stage::Plan, args.memory.display(), e))?;
                let top = r.top().ok_or_else(|| {
                    CliError::domain(
                        Stage::Plan,
                        format!("task {} '{}'", task.id, task.target_text),
                        r.diagnostic.clone().unwrap_or_else(|| "no candidate found".into()),
                    )
                })?;
                found.insert(task.id, top);
            }
            let order = &graph.semantic_sequence;
            let index = |id: TaskId| order.iter().position(|&t| t == id).expect("sequence covers every task");
            options.precedence = graph.precedence_pairs().into_iter().map(|(a, b)| (index(a), index(b))).collect();
            entries = order
                .iter()
                .map(|id| {
                    let t = graph.task(*id).expect("sequence ids exist");
                    let mut why = Vec::new();
                    if let Some(a) = &t.anchor_text {
                        why.push(format!("near {a}"));
                    }
                    if !t.context_texts.is_empty() {
                        why.push(format!("with {}", t.context_texts.join(", ")));
                    }
                    GuideEntry {
                        label: format!("task {}: {}", t.id, t.target_text),
                        note: (!why.is_empty()).then(|| why.join(", ")),
                    }
                })
                .collect();
            order.iter().map(|id| found[id]).collect()
        }
    };
    let map = match options.metric {
        CostMetric::Graph => memory.map.clone(),
        CostMetric::StraightLine => memory.map.without_edges(),
    };
    let semantic: Vec<usize> = (0..targets.len()).collect();
    let plan = plan_route(&map, &targets, &semantic, &options).map_err(|e| {
        let input = match &e {
            PlannerError::Unreachable { from, to } => format!("targets {from} and {to}"),
            _ => args.memory.display().to_string(),
        };
        CliError::domain(Stage::Plan, input, e)
    })?;
    if let Some(path) = &args.guide {
        emit(Stage::Plan, Some(path), &render_guide(&plan, &map, &entries))?;
    }
    emit(Stage::Plan, None, &to_json(&plan))
}

fn load_or_generate(cfg: &RunConfig, args: &BenchArgs, stage: Stage) -> Result<(Vec<BenchmarkCase>, String), CliError> {
    match &args.suite {
        Some(path) => {
            let cases = read_suite(path).map_err(|e| bench_error(stage, &path.display().to_string(), e))?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("suite").to_string();
            Ok((cases, name))
        }
        None => {
            let mut p = cfg.bench.suite.clone();
            set(&mut p.cases, args.cases);
            set(&mut p.decoys_per_task, args.decoys);
            set(&mut p.mean_nodes, args.mean_nodes);
            let cases = generate_benchmark(&p, cfg.seed).map_err(|e| bench_error(stage, "bench parameters", e))?;
            if let Some(path) = &args.save_suite {
                write_suite(path, &cases).map_err(|e| bench_error(stage, &path.display().to_string(), e))?;
            }
            Ok((cases, format!("seed-{}", cfg.seed)))
        }
    }
}

fn settings(cfg: &RunConfig, args: &BenchArgs, suite: String) -> RunSettings {
    let mut s = RunSettings::for_params(&cfg.bench.suite);
    if let Some(m) = &cfg.bench.memory {
        s.memory = m.clone();
    }
    s.query = cfg.query.template();
    s.repeats = args.repeats.unwrap_or(cfg.bench.repeats);
    s.suite = suite;
    s
}

fn write_records(stage: Stage, args: &BenchArgs, records: &[MetricsRecord]) -> Result<(), CliError> {
    match &args.out {
        Some(path) => bench::export_results(records, path, format_for(path, args.format))
            .map_err(|e| bench_error(stage, &path.display().to_string(), e)),
        None => {
            let text = match args.format.unwrap_or(ExportFormat::Csv) {
                ExportFormat::Json => to_json(&records),
                ExportFormat::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for r in records {
                        w.serialize(r).map_err(|e| CliError::new(Kind::Io, stage, "stdout", e))?;
                    }
                    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
                }
            };
            emit(stage, None, &text)
        }
    }
}

fn summarize(records: &[MetricsRecord]) {
    for r in records {
        log::info!(
            "{:<22} {:<22} top1 {:.3} success {} visited {:.1} time {:.3} ms",
            r.suite,
            r.config,
            r.top1_accuracy,
            r.success_rate.map_or("-".into(), |s| format!("{s:.3}")),
            r.nodes_visited,
            r.retrieval_time_ms
        );
    }
}

fn bench_cmd(cfg: &RunConfig, args: &BenchArgs) -> Result<(), CliError> {
    let stage = Stage::Bench;
    let (cases, name) = load_or_generate(cfg, args, stage)?;
    let mut s = settings(cfg, args, format!("{name}/retrieval"));
    let emb = embedder(s.memory.embedding_dim);
    let mut records =
        run_retrieval_bench(&cases, &Variant::RETRIEVAL, &s, &*emb).map_err(|e| bench_error(stage, &name, e))?;
    s.suite = format!("{name}/navigation");
    let lambda = args.lambda.unwrap_or(cfg.planner.lambda);
    let configs: Vec<NavConfig> = Variant::RETRIEVAL
        .into_iter()
        .map(|v| NavConfig { lambda, ..NavConfig::new(v) })
        .collect();
    records.extend(run_navigation_bench(&cases, &configs, &s, &*emb).map_err(|e| bench_error(stage, &name, e))?);
    summarize(&records);
    write_records(stage, args, &records)?;
    check_neutrality(&records).map_err(|e| bench_error(stage, &name, e))
}

fn ablate_cmd(cfg: &RunConfig, args: &BenchArgs) -> Result<(), CliError> {
    let stage = Stage::Ablate;
    let (cases, name) = load_or_generate(cfg, args, stage)?;
    let s = settings(cfg, args, format!("{name}/ablation"));
    let emb = embedder(s.memory.embedding_dim);
    let lambda = args.lambda.unwrap_or(cfg.planner.lambda);
    let mut variants = vec![Variant::Oracle];
    variants.extend(Variant::ABLATIONS);
    variants.push(Variant::Flat);
    let configs: Vec<NavConfig> = variants.into_iter().map(|v| NavConfig { lambda, ..NavConfig::new(v) }).collect();
    let records = run_navigation_bench(&cases, &configs, &s, &*emb).map_err(|e| bench_error(stage, &name, e))?;
    summarize(&records);
    write_records(stage, args, &records)?;
    check_neutrality(&records).map_err(|e| bench_error(stage, &name, e))
}

fn export_cmd(args: &ExportArgs) -> Result<(), CliError> {
    let input = args.input.display().to_string();
    let records = match format_for(&args.input, None) {
        ExportFormat::Json => bench::read_json(&args.input),
        ExportFormat::Csv => bench::read_csv(&args.input),
    }
    .map_err(|e| bench_error(Stage::Export, &input, e))?;
    bench::export_results(&records, &args.out, format_for(&args.out, args.format))
        .map_err(|e| bench_error(Stage::Export, &args.out.display().to_string(), e))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose.max(cfg.verbosity) {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            2 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match &cli.command {
        Command::GenScene(a) => gen_scene(&cfg, a),
        Command::Explore(a) => explore_cmd(&cfg, a),
        Command::BuildMemory(a) => build_memory_cmd(&cfg, a),
        Command::Query(a) => query_cmd(&cfg, a),
        Command::Plan(a) => plan_cmd(&cfg, a),
        Command::Bench(a) => bench_cmd(&cfg, a),
        Command::Ablate(a) => ablate_cmd(&cfg, a),
        Command::Export(a) => export_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code())
        }
    }
}
