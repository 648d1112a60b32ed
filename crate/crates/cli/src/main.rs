mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use shapeforge::ingest::IngestError;
use shapeforge::linearize::ExportError;
use shapeforge::rdf::PrefixMap;

use commands::Ctx;
use config::Config;

/// Build, balance, export and evaluate shape-guided relation-extraction
/// datasets.
#[derive(Parser)]
#[command(name = "shapeforge", version, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Flat TOML file with default values for flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Cache directory holding fetched records.
    #[arg(long, global = true, value_name = "DIR")]
    fixtures: Option<PathBuf>,
    /// Fetch records missing from the cache over the network.
    #[arg(long, global = true)]
    live: bool,
    /// Requests per second when fetching live.
    #[arg(long, global = true, value_name = "R")]
    rate_limit: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Pair knowledge-graph descriptions with their abstracts.
    Ingest(IngestArgs),
    /// Apply rules, restrict to the shape and keep text-evidenced triples.
    Distill(DistillArgs),
    /// Per-property triple counts and frequencies.
    Stats(StatsArgs),
    /// Classify properties as frequent or rare.
    Split(SplitArgs),
    /// Draw a training or evaluation sample.
    Sample(SampleArgs),
    /// Assign examples to rare-property strata.
    Stratify(StratifyArgs),
    /// Add template-based synthetic examples for rare properties.
    Augment(AugmentArgs),
    /// Per-stratum loss weights.
    Weights(WeightsArgs),
    /// Write linearized, weighted k-fold training files.
    Export(ExportArgs),
    /// Score predicted graphs against gold graphs.
    Evaluate(EvaluateArgs),
    /// Apply adjudicated corrections to a gold set.
    Correct(CorrectArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    /// Knowledge graph in Turtle or N-Triples.
    #[arg(long)]
    kg: PathBuf,
    #[arg(long, default_value = "dbo:Person")]
    class: String,
    /// Entity IRIs, one per line, instead of all instances of the class.
    #[arg(long)]
    entities: Option<PathBuf>,
    /// Keep a seeded random subset of this many entities.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// JSON Lines of excluded entities and why.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
pub struct DistillArgs {
    #[arg(long)]
    shape: PathBuf,
    #[arg(long)]
    rules: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Background graph for rule joins; defaults to cached resource records.
    #[arg(long)]
    aux: Option<PathBuf>,
    /// JSON Lines of per-triple evidence verdicts.
    #[arg(long)]
    verdicts: Option<PathBuf>,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    shape: PathBuf,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SplitArgs {
    #[arg(long)]
    shape: PathBuf,
    /// Dataset (.jsonl) or stats table (.tsv) whose frequencies are classified.
    #[arg(long)]
    classify: PathBuf,
    /// Dataset or stats table whose mean frequency is the threshold;
    /// defaults to the classified one.
    #[arg(long)]
    threshold_from: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct SampleArgs {
    /// JSON sample spec; config keys and flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    shape: PathBuf,
    #[arg(long)]
    split: PathBuf,
    /// biased-dt-op, rare-biased, random-scaled, sufficient-exposure or cross-eval.
    #[arg(long)]
    kind: Option<String>,
    /// Cross-evaluation set: new, frequent, rare or random.
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    size: Option<usize>,
    /// YYYY-MM-DD.
    #[arg(long)]
    date_cutoff: Option<String>,
    #[arg(long)]
    exposure_threshold: Option<usize>,
    /// Datasets whose examples must not be drawn.
    #[arg(long)]
    exclude: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct StratifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    split: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct AugmentArgs {
    /// Pool of value donors.
    #[arg(long)]
    base: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    shape: PathBuf,
    #[arg(long)]
    split: PathBuf,
    #[arg(long)]
    threshold: Option<usize>,
    /// KR0 or KR1.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct WeightsArgs {
    #[arg(long)]
    strata: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct ExportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    strata: PathBuf,
    /// Number of folds.
    #[arg(long)]
    k: Option<usize>,
    /// plain or markdown.
    #[arg(long)]
    format: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    /// Predictions as JSON Lines of {"entity", "output"}, or extractor
    /// triples when --baseline-map is given.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    shape: PathBuf,
    #[arg(long)]
    corrections: Option<PathBuf>,
    /// CSV of extractor relation labels to properties.
    #[arg(long)]
    baseline_map: Option<PathBuf>,
    /// TSV of surface text to resource IRI used to link extractor triples.
    #[arg(long)]
    linker: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    aux: Option<PathBuf>,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Per-property F1 table; plot data goes next to it.
    #[arg(long)]
    tsv: Option<PathBuf>,
}

#[derive(Args)]
pub struct CorrectArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    shape: PathBuf,
    #[arg(long)]
    corrections: PathBuf,
    /// Corrected gold set.
    #[arg(long)]
    out: PathBuf,
    /// Report JSON after correction.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let cfg = Config::load(g.config.as_deref())?;
    let jobs = g.jobs.or(cfg.usize("jobs")?);
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    let ctx = Ctx {
        seed: g.seed.or(cfg.u64("seed")?),
        fixtures: g.fixtures.or(cfg.path("fixtures")?),
        live: g.live || cfg.bool("live")?.unwrap_or(false),
        rate_limit: match g.rate_limit {
            Some(r) => r,
            None => commands::default_rate_limit(&cfg)?,
        },
        prefixes: PrefixMap::standard(),
        cfg,
    };
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&ctx, a),
        Command::Distill(a) => commands::distill_cmd(&ctx, a),
        Command::Stats(a) => commands::stats(&ctx, a),
        Command::Split(a) => commands::split(&ctx, a),
        Command::Sample(a) => commands::sample_cmd(&ctx, a),
        Command::Stratify(a) => commands::stratify_cmd(&ctx, a),
        Command::Augment(a) => commands::augment(&ctx, a),
        Command::Weights(a) => commands::weights(&ctx, a),
        Command::Export(a) => commands::export(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Correct(a) => commands::correct(&ctx, a),
    }
}

/// 2 for failures to read, write or fetch; 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause.is::<std::io::Error>()
            || matches!(
                cause.downcast_ref::<IngestError>(),
                Some(IngestError::Io(_) | IngestError::Http { .. } | IngestError::Transport(_))
            )
            || matches!(cause.downcast_ref::<ExportError>(), Some(ExportError::Io { .. }))
    });
    if io {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
