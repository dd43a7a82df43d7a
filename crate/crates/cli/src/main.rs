//! recypher command line: validate queries against a schema, run experiment
//! matrices, emit reports, and pick budgets from trajectory curves.
//!
//! Exit codes are stable for scripting: 0 success, 1 domain failure (a query
//! that fails validation, an empty report, an underdetermined curve), 2 usage
//! or I/O errors (unreadable files, invalid configs, bad flags).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use recypher::harness::aggregate::{aggregate, knee_distances, knee_point, trajectory, Grouping, TrajectoryCurve};
use recypher::harness::corpus::QuestionCorpus;
use recypher::harness::log::{read_entries, LogEntry};
use recypher::harness::report::{emit_report, ReportFormat};
use recypher::harness::{summarize, ExperimentConfig, HarnessError};
use recypher::{execute, Complexity, ExecutorTarget, GraphSchema, GroupStrategy, Strategy};

#[derive(Parser)]
#[command(name = "recypher", version, about = "Inference-scaling harness for text-to-Cypher generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a single query against a schema.
    Validate(ValidateArgs),
    /// Run an experiment matrix from a config file.
    Run(RunArgs),
    /// Aggregate a run log into a report file.
    Report(ReportArgs),
    /// Select a budget at the knee of a cost/error curve.
    Knee(KneeArgs),
    /// Check a question corpus against its schemas.
    CorpusCheck(CorpusCheckArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Schema JSON file.
    #[arg(long)]
    schema: PathBuf,
    /// Query text given inline.
    #[arg(long, conflicts_with = "file")]
    query: Option<String>,
    /// File containing the query text.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for run_log.ndjson, aborts.json and summary.md.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run log (newline-delimited JSON).
    #[arg(long)]
    log: PathBuf,
    /// Output format.
    #[arg(long)]
    format: String,
    /// Grouping keys; dataset and model are always applied, add `complexity`
    /// for per-tier rows.
    #[arg(long, default_value = "dataset,model,complexity")]
    group_by: String,
    /// Target budget for the @n columns (default: highest in the log).
    #[arg(long)]
    budget: Option<u32>,
    /// Output file (default: report.csv, report.md or plotdata.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KneeArgs {
    /// Derive the curve from a run log.
    #[arg(long, conflicts_with = "curve")]
    log: Option<PathBuf>,
    /// Inline curve as budget:qer pairs, e.g. `1:0.50,2:0.20,3:0.12`.
    #[arg(long)]
    curve: Option<String>,
    /// Cost per attempt.
    #[arg(long, default_value_t = 1.0)]
    cost: f64,
    /// Strategy to extract from the log (IS or RAS).
    #[arg(long)]
    strategy: Option<String>,
    /// Dataset filter for --log.
    #[arg(long)]
    dataset: Option<String>,
    /// Model filter for --log.
    #[arg(long)]
    model: Option<String>,
    /// Complexity filter for --log (Easy, Medium, Hard).
    #[arg(long)]
    complexity: Option<String>,
}

#[derive(Args)]
struct CorpusCheckArgs {
    /// Question corpus JSON file.
    #[arg(long)]
    questions: PathBuf,
    /// Schema files; repeat the flag for each dataset.
    #[arg(long = "schema", required = true)]
    schemas: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
        Command::Knee(args) => cmd_knee(args),
        Command::CorpusCheck(args) => cmd_corpus_check(args),
    }
}

const EXIT_DOMAIN: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let schema = match GraphSchema::from_path(&args.schema) {
        Ok(schema) => Arc::new(schema),
        Err(err) => return fail(EXIT_USAGE, err),
    };
    let query = match (args.query, args.file) {
        (Some(query), None) => query,
        (None, Some(path)) => match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(err) => return fail(EXIT_USAGE, format!("cannot read {}: {err}", path.display())),
        },
        (None, None) => return fail(EXIT_USAGE, "one of --query or --file is required"),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let outcome = execute(query.trim(), &ExecutorTarget::Embedded(schema));
    let message = outcome.message();
    if message.is_error() {
        println!("{}: {}", message.class, message.detail);
        ExitCode::from(EXIT_DOMAIN)
    } else {
        println!("Success: query is consistent with the schema");
        ExitCode::SUCCESS
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let mut config = match ExperimentConfig::from_path(&args.config) {
        Ok(config) => config,
        Err(err) => return fail(EXIT_USAGE, err),
    };
    if let Some(workers) = args.workers {
        config.parallelism = workers;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let loaded = match config.prepare() {
        Ok(loaded) => loaded,
        Err(err) => return fail(EXIT_USAGE, err),
    };

    if let Err(err) = std::fs::create_dir_all(&args.out) {
        return fail(EXIT_USAGE, format!("cannot create {}: {err}", args.out.display()));
    }
    let log_path = args.out.join("run_log.ndjson");
    let mut sink = match std::fs::File::create(&log_path) {
        Ok(file) => std::io::BufWriter::new(file),
        Err(err) => return fail(EXIT_USAGE, format!("cannot create {}: {err}", log_path.display())),
    };

    let run = match recypher::harness::run_experiment(&loaded, Some(&mut sink)) {
        Ok(run) => run,
        Err(err) => return fail(EXIT_USAGE, err),
    };
    drop(sink);

    let aborts_path = args.out.join("aborts.json");
    let aborts_json = serde_json::to_string_pretty(&run.aborts).expect("tally serializes");
    if let Err(err) = std::fs::write(&aborts_path, aborts_json) {
        return fail(EXIT_USAGE, format!("cannot write {}: {err}", aborts_path.display()));
    }

    let summary = summarize(&run, config.replications);
    let summary_path = args.out.join("summary.md");
    if let Err(err) = std::fs::write(&summary_path, &summary) {
        return fail(EXIT_USAGE, format!("cannot write {}: {err}", summary_path.display()));
    }

    println!("{} records -> {}", run.entries.len(), log_path.display());
    println!("{} aborts -> {}", run.aborts.total, aborts_path.display());
    print!("{summary}");
    ExitCode::SUCCESS
}

fn parse_grouping(keys: &str) -> Result<Grouping, String> {
    let mut grouping = Grouping::AcrossComplexities;
    for key in keys.split(',').map(str::trim).filter(|k| !k.is_empty()) {
        match key {
            "dataset" | "model" => {}
            "complexity" => grouping = Grouping::PerComplexity,
            other => return Err(format!("unknown group-by key `{other}` (known: dataset, model, complexity)")),
        }
    }
    Ok(grouping)
}

fn cmd_report(args: ReportArgs) -> ExitCode {
    let format: ReportFormat = match args.format.parse() {
        Ok(format) => format,
        Err(err) => return fail(EXIT_USAGE, err),
    };
    let grouping = match parse_grouping(&args.group_by) {
        Ok(grouping) => grouping,
        Err(err) => return fail(EXIT_USAGE, err),
    };
    let entries = match read_entries(&args.log) {
        Ok(entries) => entries,
        Err(err) => return fail(EXIT_USAGE, err),
    };
    let stats = aggregate(&entries, grouping);
    let out = args.out.unwrap_or_else(|| {
        PathBuf::from(match format {
            ReportFormat::Csv => "report.csv",
            ReportFormat::Markdown => "report.md",
            ReportFormat::Plotdata => "plotdata.csv",
        })
    });
    match emit_report(&stats, format, args.budget, &out) {
        Ok(()) => {
            println!("report written to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(recypher::harness::report::ReportError::EmptyStats) => {
            fail(EXIT_DOMAIN, "run log produced no statistics")
        }
        Err(err) => fail(EXIT_USAGE, err),
    }
}

fn parse_inline_curve(text: &str) -> Result<TrajectoryCurve, String> {
    let mut points = Vec::new();
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((budget, qer)) = pair.split_once(':') else {
            return Err(format!("curve point `{pair}` is not budget:qer"));
        };
        let budget: u32 = budget.trim().parse().map_err(|_| format!("bad budget in `{pair}`"))?;
        let qer: f64 = qer.trim().parse().map_err(|_| format!("bad qer in `{pair}`"))?;
        points.push((budget, qer));
    }
    TrajectoryCurve::from_points(GroupStrategy::Is, points).map_err(|err| err.to_string())
}

fn cmd_knee(args: KneeArgs) -> ExitCode {
    let curve = if let Some(inline) = &args.curve {
        match parse_inline_curve(inline) {
            Ok(curve) => curve,
            Err(err) => return fail(EXIT_USAGE, err),
        }
    } else if let Some(log_path) = &args.log {
        let entries = match read_entries(log_path) {
            Ok(entries) => entries,
            Err(err) => return fail(EXIT_USAGE, err),
        };
        let strategy: Strategy = match args.strategy.as_deref().map(str::parse) {
            Some(Ok(strategy)) => strategy,
            Some(Err(err)) => return fail(EXIT_USAGE, err),
            None => return fail(EXIT_USAGE, "--strategy is required with --log"),
        };
        let complexity: Option<Complexity> = match args.complexity.as_deref().map(str::parse) {
            Some(Ok(complexity)) => Some(complexity),
            Some(Err(err)) => return fail(EXIT_USAGE, err),
            None => None,
        };
        let (dataset, model) = match pick_group(&entries, args.dataset.as_deref(), args.model.as_deref()) {
            Ok(pair) => pair,
            Err(code) => return code,
        };
        match trajectory(&entries, &dataset, &model, complexity, strategy) {
            Ok(curve) => curve,
            Err(err) => return fail(EXIT_DOMAIN, err),
        }
    } else {
        return fail(EXIT_USAGE, "one of --curve or --log is required");
    };

    let distances = match knee_distances(&curve, args.cost) {
        Ok(distances) => distances,
        Err(err @ HarnessError::CurveTooShort { .. }) => return fail(EXIT_DOMAIN, err),
        Err(err) => return fail(EXIT_USAGE, err),
    };
    let selected = knee_point(&curve, args.cost).expect("distances already computed");

    println!("budget  cost      qer       chord-distance");
    for ((budget, qer), (_, distance)) in curve.points.iter().zip(&distances) {
        println!("{budget:<7} {:<9.3} {qer:<9.5} {distance:.6}", *budget as f64 * args.cost);
    }
    let interior = &distances[1..distances.len() - 1];
    let tie = interior.windows(2).all(|w| (w[0].1 - w[1].1).abs() < 1e-12);
    if tie && interior.len() > 1 {
        println!("selected budget: {selected} (all interior points equidistant; tie broken toward the lowest budget)");
    } else {
        println!("selected budget: {selected}");
    }
    ExitCode::SUCCESS
}

/// Resolve the (dataset, model) group for knee extraction: explicit flags
/// win; otherwise the log must contain exactly one group.
fn pick_group(
    entries: &[LogEntry],
    dataset: Option<&str>,
    model: Option<&str>,
) -> Result<(String, String), ExitCode> {
    let mut groups: Vec<(String, String)> = entries
        .iter()
        .map(|e| (e.dataset.clone(), e.model.clone()))
        .collect();
    groups.sort();
    groups.dedup();
    let matching: Vec<&(String, String)> = groups
        .iter()
        .filter(|(d, m)| dataset.is_none_or(|want| want == d) && model.is_none_or(|want| want == m))
        .collect();
    match matching.as_slice() {
        [] => Err(fail(EXIT_DOMAIN, "no log entries match the requested group")),
        [one] => Ok((*one).clone()),
        many => Err(fail(
            EXIT_USAGE,
            format!(
                "ambiguous group; pass --dataset/--model to pick one of: {}",
                many.iter().map(|(d, m)| format!("{d}/{m}")).collect::<Vec<_>>().join(", "),
            ),
        )),
    }
}

fn cmd_corpus_check(args: CorpusCheckArgs) -> ExitCode {
    let mut schemas = BTreeMap::new();
    for path in &args.schemas {
        match GraphSchema::from_path(path) {
            Ok(schema) => {
                schemas.insert(schema.dataset_id.clone(), Arc::new(schema));
            }
            Err(err) => return fail(EXIT_USAGE, err),
        }
    }
    let corpus = match QuestionCorpus::from_path(&args.questions) {
        Ok(corpus) => corpus,
        Err(err) => return fail(EXIT_USAGE, err),
    };
    let problems = corpus.check(&schemas);
    if problems.is_empty() {
        println!(
            "corpus OK: {} questions across {} datasets",
            corpus.entries.len(),
            schemas.len(),
        );
        ExitCode::SUCCESS
    } else {
        for problem in &problems {
            eprintln!("corpus: {problem}");
        }
        ExitCode::from(EXIT_DOMAIN)
    }
}
