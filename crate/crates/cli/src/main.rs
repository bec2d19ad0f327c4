use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ltlgen_core::checker::{self, check_bruteforce, BruteForceBounds, BruteForceError, CheckError, CheckResult};
use ltlgen_core::dataset::{self, DatasetError, DatasetSpec, Problem};
use ltlgen_core::eval::{
    compute_metrics, evaluate, metrics_table, oracle_model, run_sweep_with, sweep_csv, ChatModel, EndpointConfig,
    EvalRecord, HttpChatModel, MetricsError, QueryError, ScriptedModel, SweepAxis, SweepConfig, API_KEY_ENV,
};
use ltlgen_core::graph::{EventGraph, DEFAULT_EDGE_PROB};
use ltlgen_core::ltl::{parse_formula, Formula, ParseError};
use ltlgen_core::par::{self, Execution};
use ltlgen_core::render;
use ltlgen_core::smv::{self, SmvError, SmvStyle};

#[derive(Parser)]
#[command(
    name = "ltlgen",
    version,
    about = "Generate, check and evaluate LTL temporal-reasoning problems"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress informational output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for data-parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Run data-parallel stages on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset of problems and write it as JSONL.
    Generate(GenerateArgs),
    /// Model-check a formula on a graph.
    Check(CheckArgs),
    /// Print the NuSMV model for a graph and formula.
    EmitNusmv(EmitArgs),
    /// Re-check every stored label, and optionally compare against NuSMV.
    Crosscheck(CrosscheckArgs),
    /// Print the natural-language prompt for a graph and formula.
    Render(RenderArgs),
    /// Query a chat-completion endpoint on a dataset.
    Evaluate(EvaluateArgs),
    /// Summarize results as Accuracy / F1 / AUC.
    Report(ReportArgs),
    /// Score a model across operator or event counts.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of events n.
    #[arg(long)]
    events: u32,
    /// Number of operators m per formula.
    #[arg(long)]
    operators: usize,
    /// Number of problems.
    #[arg(long)]
    count: usize,
    /// Probability of each ordered edge.
    #[arg(long, default_value_t = DEFAULT_EDGE_PROB)]
    edge_prob: f64,
    /// Keep exactly count/2 true and count/2 false labels.
    #[arg(long)]
    balanced: bool,
    #[arg(long, value_enum, default_value_t = Style::Sets)]
    nusmv_style: Style,
    /// Output JSONL file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProblemInput {
    /// Formula, e.g. "(event1 -> (G (F event2)))".
    #[arg(long)]
    formula: String,
    /// Graph as JSON: {"n":..,"initial":..,"edges":[[i,j],..]}.
    #[arg(long, conflicts_with = "graph_file", required_unless_present = "graph_file")]
    graph: Option<String>,
    /// File holding the graph JSON.
    #[arg(long)]
    graph_file: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: ProblemInput,
    /// Also run the brute-force lasso oracle and require agreement.
    #[arg(long)]
    bruteforce: bool,
}

#[derive(Args)]
struct EmitArgs {
    #[command(flatten)]
    input: ProblemInput,
    #[arg(long, value_enum, default_value_t = Style::Sets)]
    nusmv_style: Style,
    /// Write the model here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrosscheckArgs {
    /// Dataset JSONL file.
    #[arg(long)]
    dataset: PathBuf,
    /// NuSMV executable; enables the NuSMV comparison.
    #[arg(long)]
    nusmv_path: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Style::Sets)]
    nusmv_style: Style,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    input: ProblemInput,
    #[arg(long, value_enum, default_value_t = Part::Prompt)]
    part: Part,
}

#[derive(Args)]
struct EndpointArgs {
    /// Endpoint base URL; requests go to {base-url}/chat/completions.
    #[arg(long)]
    base_url: Option<String>,
    /// Model name sent in the request body.
    #[arg(long)]
    model: Option<String>,
    /// Sampling temperature.
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Maximum requests in flight.
    #[arg(long, default_value_t = 4)]
    max_concurrency: usize,
    /// Environment variable holding the API key.
    #[arg(long, default_value = API_KEY_ENV)]
    api_key_env: String,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset JSONL file.
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    endpoint: EndpointArgs,
    /// Results JSONL file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Results JSONL files; one table row each.
    #[arg(long, required = true, num_args = 1..)]
    results: Vec<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    axis: Axis,
    /// The value held fixed (n for operators, m for events).
    #[arg(long)]
    fixed: u32,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u32>,
    /// Problems per cell.
    #[arg(long, default_value_t = 300)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_EDGE_PROB)]
    edge_prob: f64,
    /// Use a built-in scripted model instead of an endpoint.
    #[arg(long, value_enum, conflicts_with_all = ["base_url", "model"])]
    mock: Option<Mock>,
    #[command(flatten)]
    endpoint: EndpointArgs,
    /// Write the per-cell CSV here (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    Sets,
    PaperLiteral,
}

impl From<Style> for SmvStyle {
    fn from(s: Style) -> Self {
        match s {
            Style::Sets => SmvStyle::Sets,
            Style::PaperLiteral => SmvStyle::PaperLiteral,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Part {
    Context,
    Hypothesis,
    Prompt,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Operators,
    Events,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mock {
    Oracle,
    AlwaysTrue,
    AlwaysFalse,
}

/// Exit status 1: the input or result is wrong. Exit status 2: the
/// environment is (missing binary, I/O, network).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Severity {
    Domain,
    Environment,
}

#[derive(Debug)]
struct CliError {
    severity: Severity,
    tag: &'static str,
    message: String,
}

impl CliError {
    fn domain(tag: &'static str, message: impl fmt::Display) -> Self {
        Self {
            severity: Severity::Domain,
            tag,
            message: message.to_string(),
        }
    }

    fn env(tag: &'static str, message: impl fmt::Display) -> Self {
        Self {
            severity: Severity::Environment,
            tag,
            message: message.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.severity {
            Severity::Domain => 1,
            Severity::Environment => 2,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(e) => CliError::env("io", e),
            DatasetError::Smv(e) => e.into(),
            DatasetError::Schema { .. } => CliError::domain("schema", e),
            DatasetError::Parse(_) => CliError::domain("parse", e),
            DatasetError::BalanceUnreachable { .. } => CliError::domain("balance", e),
            DatasetError::Check(_) => CliError::domain("check", e),
            DatasetError::Graph(_) | DatasetError::Formula(_) | DatasetError::InvalidSpec(_) => {
                CliError::domain("invalid-config", e)
            }
        }
    }
}

impl From<SmvError> for CliError {
    fn from(e: SmvError) -> Self {
        match e {
            SmvError::UnknownAtom(..) => CliError::domain("parse", e),
            SmvError::ExecutableNotFound(_) => CliError::env("nusmv-missing", e),
            SmvError::NonZeroExit { .. } | SmvError::UnparseableOutput(_) | SmvError::Io(_) => {
                CliError::env("nusmv", e)
            }
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::domain("parse", e)
    }
}

impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        CliError::domain("check", e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::domain("invalid-config", e)
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::InvalidConfig(_) => CliError::domain("invalid-config", e),
            _ => CliError::env("network", e),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::env("io", format!("{}: {e}", path.display()))
}

struct Ctx {
    quiet: bool,
    json: bool,
    exec: Execution,
    seed: u64,
}

impl Ctx {
    fn info(&self, msg: impl fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        quiet: cli.quiet,
        json: cli.json,
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        seed: cli.seed,
    };
    let result = par::with_jobs(cli.jobs, || run(&ctx, cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.tag, e.message);
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(ctx: &Ctx, command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(a) => generate(ctx, a),
        Command::Check(a) => check(ctx, a),
        Command::EmitNusmv(a) => emit(ctx, a),
        Command::Crosscheck(a) => crosscheck(ctx, a),
        Command::Render(a) => render_cmd(ctx, a),
        Command::Evaluate(a) => evaluate_cmd(ctx, a),
        Command::Report(a) => report(ctx, a),
        Command::Sweep(a) => sweep(ctx, a),
    }
}

fn print_json(v: &Value) {
    println!("{v}");
}

fn generate(ctx: &Ctx, a: GenerateArgs) -> Result<(), CliError> {
    let spec = DatasetSpec {
        edge_prob: a.edge_prob,
        balanced: a.balanced,
        style: a.nusmv_style.into(),
        ..DatasetSpec::new(a.count, a.events, a.operators, ctx.seed)
    };
    spec.validate()?;
    let problems = dataset::build_dataset_with(&spec, ctx.exec)?;
    dataset::write_dataset(&problems, &a.out)?;
    let trues = problems.iter().filter(|p| p.label).count();
    if ctx.json {
        print_json(&json!({
            "out": a.out.display().to_string(),
            "count": problems.len(),
            "true": trues,
            "false": problems.len() - trues,
        }));
    } else {
        ctx.info(format!(
            "wrote {} problems ({} true, {} false) to {}",
            problems.len(),
            trues,
            problems.len() - trues,
            a.out.display()
        ));
    }
    Ok(())
}

fn load_problem(input: &ProblemInput) -> Result<(EventGraph, Formula), CliError> {
    let text = match (&input.graph, &input.graph_file) {
        (Some(g), _) => g.clone(),
        (None, Some(path)) => fs::read_to_string(path).map_err(|e| io_error(path, e))?,
        (None, None) => {
            return Err(CliError::domain(
                "invalid-config",
                "one of --graph or --graph-file is required",
            ))
        }
    };
    let graph: EventGraph =
        serde_json::from_str(&text).map_err(|e| CliError::domain("invalid-config", format!("bad graph JSON: {e}")))?;
    let formula = parse_formula(&input.formula, &graph.events())?;
    Ok((graph, formula))
}

fn lasso_text(r: &CheckResult) -> Option<String> {
    let cex = r.counterexample.as_ref()?;
    let names = |v: &[ltlgen_core::Event]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
    Some(format!(
        "counterexample: stem [{}] loop [{}]",
        names(&cex.stem),
        names(&cex.cycle)
    ))
}

fn check(ctx: &Ctx, a: CheckArgs) -> Result<(), CliError> {
    let (graph, formula) = load_problem(&a.input)?;
    let k = checker::totalize(&graph);
    let result = checker::check(&k, &formula)?;
    if a.bruteforce {
        let brute =
            check_bruteforce(&k, &formula, BruteForceBounds::complete_for(&k, &formula)).map_err(|e| match e {
                BruteForceError::Check(e) => CliError::from(e),
                other => CliError::domain("invalid-config", other),
            })?;
        if brute.holds != result.holds {
            return Err(CliError::domain(
                "mismatch",
                format!("checker says {}, brute force says {}", result.holds, brute.holds),
            ));
        }
        if let Some(w) = &brute.warning {
            ctx.info(format!("warning: {w}"));
        }
    }
    if ctx.json {
        print_json(&serde_json::to_value(&result).expect("serializable"));
    } else {
        println!("{}", result.holds);
        if let Some(line) = lasso_text(&result) {
            println!("{line}");
        }
    }
    Ok(())
}

fn emit(ctx: &Ctx, a: EmitArgs) -> Result<(), CliError> {
    let (graph, formula) = load_problem(&a.input)?;
    let doc = smv::emit_smv(&graph, &formula, a.nusmv_style.into())?;
    if let Some(path) = &a.out {
        fs::write(path, &doc.text).map_err(|e| io_error(path, e))?;
    }
    if ctx.json {
        print_json(&json!({"style": doc.style.as_str(), "smv": doc.text}));
    } else if a.out.is_none() {
        print!("{}", doc.text);
    }
    Ok(())
}

fn crosscheck(ctx: &Ctx, a: CrosscheckArgs) -> Result<(), CliError> {
    if let Some(path) = &a.nusmv_path {
        if !path.is_file() {
            return Err(SmvError::ExecutableNotFound(path.display().to_string()).into());
        }
    }
    let problems = dataset::read_dataset(&a.dataset)?;
    let replay = dataset::replay_labels(&problems, ctx.exec);
    for m in &replay {
        ctx.info(format!(
            "replay mismatch {}: stored {}, recomputed {:?}",
            m.id, m.stored, m.recomputed
        ));
    }

    let mut nusmv_mismatches: Vec<String> = Vec::new();
    if let Some(path) = &a.nusmv_path {
        let style: SmvStyle = a.nusmv_style.into();
        let verdicts = par::map(ctx.exec, &problems, |p| -> Result<bool, CliError> {
            let formula = p.parsed_formula()?;
            let doc = smv::emit_smv(&p.graph, &formula, style)?;
            Ok(smv::run_nusmv(&doc, path)?)
        });
        for (p, v) in problems.iter().zip(verdicts) {
            if v? != p.label {
                ctx.info(format!("NuSMV disagrees on {}: stored {}", p.id, p.label));
                nusmv_mismatches.push(p.id.clone());
            }
        }
    }

    if ctx.json {
        print_json(&json!({
            "records": problems.len(),
            "replay_mismatches": replay.iter().map(|m| m.id.clone()).collect::<Vec<_>>(),
            "nusmv_checked": a.nusmv_path.is_some(),
            "nusmv_mismatches": nusmv_mismatches,
        }));
    } else {
        let nusmv = if a.nusmv_path.is_some() {
            format!(", {} NuSMV disagreements", nusmv_mismatches.len())
        } else {
            String::new()
        };
        println!("{} records, {} replay mismatches{nusmv}", problems.len(), replay.len());
    }
    if !replay.is_empty() || !nusmv_mismatches.is_empty() {
        return Err(CliError::domain(
            "mismatch",
            format!(
                "{} replay and {} NuSMV mismatches",
                replay.len(),
                nusmv_mismatches.len()
            ),
        ));
    }
    Ok(())
}

fn render_cmd(ctx: &Ctx, a: RenderArgs) -> Result<(), CliError> {
    let (graph, formula) = load_problem(&a.input)?;
    let r = render::render(&graph, &formula);
    if ctx.json {
        print_json(&json!({"context": r.context, "hypothesis": r.hypothesis, "prompt": r.prompt}));
    } else {
        let text = match a.part {
            Part::Context => r.context,
            Part::Hypothesis => r.hypothesis,
            Part::Prompt => r.prompt,
        };
        println!("{text}");
    }
    Ok(())
}

fn endpoint_model(a: &EndpointArgs) -> Result<HttpChatModel, CliError> {
    let (Some(base_url), Some(model)) = (&a.base_url, &a.model) else {
        return Err(CliError::domain(
            "invalid-config",
            "--base-url and --model are required",
        ));
    };
    let mut cfg = EndpointConfig::new(base_url.clone(), model.clone());
    cfg.api_key = std::env::var(&a.api_key_env).ok().filter(|k| !k.is_empty());
    cfg.temperature = a.temperature;
    cfg.timeout = Duration::from_secs(a.timeout);
    cfg.max_concurrency = a.max_concurrency;
    Ok(HttpChatModel::new(cfg)?)
}

fn summary_json(name: &str, records: &[EvalRecord]) -> Result<Value, CliError> {
    let report = compute_metrics(records)?;
    let mut v = serde_json::to_value(report).expect("serializable");
    v["name"] = json!(name);
    Ok(v)
}

fn evaluate_cmd(ctx: &Ctx, a: EvaluateArgs) -> Result<(), CliError> {
    let model = endpoint_model(&a.endpoint)?;
    let problems = dataset::read_dataset(&a.dataset)?;
    if problems.is_empty() {
        return Err(CliError::domain("schema", "dataset has no records"));
    }
    let records = evaluate(&problems, &model, a.endpoint.max_concurrency);
    let file = fs::File::create(&a.out).map_err(|e| io_error(&a.out, e))?;
    let mut out = io::BufWriter::new(file);
    dataset::write_jsonl(&records, &mut out)?;
    out.flush().map_err(|e| io_error(&a.out, e))?;

    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let name = a.endpoint.model.as_deref().unwrap_or_default();
    if ctx.json {
        let mut v = summary_json(name, &records)?;
        v["failed_requests"] = json!(failed);
        print_json(&v);
    } else {
        let report = compute_metrics(&records)?;
        print!("{}", metrics_table(&[(name.to_string(), report)]));
    }
    if failed > 0 {
        ctx.info(format!("warning: {failed} of {} requests failed", records.len()));
    }
    if failed == records.len() {
        return Err(CliError::env("network", "every request failed"));
    }
    Ok(())
}

fn report(ctx: &Ctx, a: ReportArgs) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for path in &a.results {
        let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
        let records: Vec<EvalRecord> = dataset::read_jsonl(io::BufReader::new(file))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        rows.push((name, compute_metrics(&records)?));
    }
    if ctx.json {
        let v: Vec<Value> = rows
            .iter()
            .map(|(name, r)| {
                let mut v = serde_json::to_value(r).expect("serializable");
                v["name"] = json!(name);
                v
            })
            .collect();
        print_json(&Value::Array(v));
    } else {
        print!("{}", metrics_table(&rows));
    }
    Ok(())
}

fn sweep(ctx: &Ctx, a: SweepArgs) -> Result<(), CliError> {
    let axis = match a.axis {
        Axis::Operators => SweepAxis::Operators,
        Axis::Events => SweepAxis::Events,
    };
    let cfg = SweepConfig {
        edge_prob: a.edge_prob,
        ..SweepConfig::new(axis, a.fixed, a.values.clone(), a.count, ctx.seed)
    };
    for &v in &cfg.values {
        cfg.cell_spec(v).validate()?;
    }
    let endpoint = match a.mock {
        Some(_) => None,
        None => Some(endpoint_model(&a.endpoint)?),
    };
    let concurrency = a.endpoint.max_concurrency;
    let cells = run_sweep_with(
        &cfg,
        concurrency,
        ctx.exec,
        |problems: &[Problem]| -> Box<dyn ChatModel + '_> {
            match (a.mock, &endpoint) {
                (Some(Mock::Oracle), _) => Box::new(oracle_model(problems)),
                (Some(Mock::AlwaysTrue), _) => Box::new(ScriptedModel::always("True")),
                (Some(Mock::AlwaysFalse), _) => Box::new(ScriptedModel::always("False")),
                (None, Some(m)) => Box::new(m),
                (None, None) => unreachable!("endpoint built above"),
            }
        },
    )?;

    let csv = sweep_csv(&cells);
    if let Some(path) = &a.out {
        fs::write(path, &csv).map_err(|e| io_error(path, e))?;
    }
    if ctx.json {
        print_json(&serde_json::to_value(&cells).expect("serializable"));
    } else {
        if a.out.is_none() {
            print!("{csv}");
        }
        if !ctx.quiet {
            let rows: Vec<(String, _)> = cells
                .iter()
                .map(|c| (format!("n={} m={}", c.n, c.m), c.report))
                .collect();
            eprint!("{}", metrics_table(&rows));
        }
    }
    Ok(())
}
