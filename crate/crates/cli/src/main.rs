use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use progspace_cli::analyze::{analyze, AnalyzeOptions, Group};
use progspace_cli::output::write_json;
use progspace_cli::pipeline::{
    default_checkpoint, distmat, fixture_rename_cycle, fixture_synthetic, ingest,
};
use progspace_cli::report::write_report;
use progspace_core::distmat::{ComputeOptions, DEFAULT_BLOCK_SIZE};
use progspace_core::mds::DEFAULT_RESTARTS;
use progspace_core::tda::{DEFAULT_HISTOGRAM_BINS, DEFAULT_MAX_POINTS};
use progspace_core::ted::{TreeEditDistance, DEFAULT_MAX_NODES};
use progspace_harness::{
    run_session_blocking, SessionConfig, DEFAULT_CONCURRENCY, DEFAULT_MAX_RETRIES,
    DEFAULT_REPETITIONS,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "progspace",
    version,
    about = "Geometry and topology of LLM-generated program corpora"
)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Query a chat-completions endpoint with the question set.
    Collect {
        /// Full URL of the chat-completions route.
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        model: String,
        /// Environment variable holding the API key.
        #[arg(long)]
        api_key_env: Option<String>,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        repetitions: u32,
        /// Omit to use the endpoint default.
        #[arg(long)]
        temperature: Option<f64>,
        /// Per-request timeout in seconds.
        #[arg(long, default_value_t = 120.0)]
        timeout: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
        max_retries: u32,
        #[arg(long, default_value_t = DEFAULT_CONCURRENCY)]
        concurrency: usize,
        #[arg(long)]
        session_id: Option<String>,
        #[arg(long, default_value = "responses.jsonl")]
        out: PathBuf,
        /// Defaults to session_summary.json next to the output.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Parse responses or a directory of q<N>_r<M>.py files into a corpus.
    Ingest {
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Compute the tree-edit distance matrix of a corpus manifest.
    Distmat {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Defaults to <out stem>.ckpt.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        no_checkpoint: bool,
        #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
        block_size: usize,
        /// Stop after this many new blocks; rerun to continue.
        #[arg(long)]
        max_blocks: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
        max_nodes: usize,
    },
    /// Statistics, persistence and embedding of one group.
    Analyze {
        dmat: PathBuf,
        /// `all` or a question id 0..6.
        #[arg(long, default_value = "all")]
        group: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Model label for the report; defaults to the matrix file stem.
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Largest filtration value; defaults to the largest distance.
        #[arg(long)]
        r_max: Option<f64>,
        /// Comma-separated radii for K and Betti curves; defaults to 0..max.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
        max_points: usize,
    },
    /// Summary table over analysis directories.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write a built-in program corpus.
    Fixture {
        kind: FixtureKind,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Programs per question (synthetic only).
        #[arg(long, default_value_t = 10)]
        per_question: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    /// The 18 variable-renaming programs that form a loop at distance 1.
    RenameCycle,
    /// Random programs for all seven questions.
    Synthetic,
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(usize::from)
        .unwrap_or(1)
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Collect {
            endpoint,
            model,
            api_key_env,
            repetitions,
            temperature,
            timeout,
            max_retries,
            concurrency,
            session_id,
            out,
            summary,
        } => {
            let mut config = SessionConfig::new(endpoint, model);
            config.api_key_env = api_key_env;
            config.repetitions = repetitions;
            config.temperature = temperature;
            config.request_timeout =
                Duration::try_from_secs_f64(timeout).context("invalid --timeout")?;
            config.max_retries = max_retries;
            config.concurrency = concurrency;
            config.session_id = session_id;
            let result = run_session_blocking(&config, &out)?;
            let summary_path =
                summary.unwrap_or_else(|| out.with_file_name("session_summary.json"));
            write_json(&summary_path, &result)?;
            print_json(&result)
        }
        Command::Ingest { input, out_dir } => print_json(&ingest(&input, &out_dir)?),
        Command::Distmat {
            manifest,
            out,
            workers,
            checkpoint,
            no_checkpoint,
            block_size,
            max_blocks,
            max_nodes,
        } => {
            let checkpoint = match (no_checkpoint, checkpoint) {
                (true, _) => None,
                (false, Some(path)) => Some(path),
                (false, None) => Some(default_checkpoint(&out)),
            };
            let options = ComputeOptions {
                workers,
                block_size,
                checkpoint,
                max_new_blocks: max_blocks,
                distance: TreeEditDistance::default().with_max_nodes(max_nodes),
            };
            print_json(&distmat(&manifest, &out, &options)?)
        }
        Command::Analyze {
            dmat,
            group,
            out_dir,
            label,
            seed,
            restarts,
            r_max,
            radii,
            lambda,
            bins,
            max_points,
        } => {
            let group: Group = group.parse()?;
            eprintln!("mds seed {seed}, {restarts} restarts");
            let options = AnalyzeOptions {
                group,
                out_dir,
                label,
                seed,
                restarts,
                r_max,
                radii,
                lambda,
                bins,
                max_points,
            };
            print_json(&analyze(&dmat, &options)?)
        }
        Command::Report { dirs, out_dir } => {
            let report = write_report(&dirs, &out_dir)?;
            print_json(&serde_json::json!({
                "models": report.models.len(),
                "columns": report.columns.len(),
                "out_dir": out_dir,
            }))
        }
        Command::Fixture {
            kind,
            out_dir,
            per_question,
            seed,
        } => {
            let written = match kind {
                FixtureKind::RenameCycle => fixture_rename_cycle(&out_dir)?,
                FixtureKind::Synthetic => fixture_synthetic(&out_dir, per_question, seed)?,
            };
            print_json(&serde_json::json!({ "programs": written, "out_dir": out_dir }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(if cli.verbose {
            tracing::Level::INFO
        } else {
            tracing::Level::WARN
        })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One line: the reason chain joined by ": ".
            let reason = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {reason}");
            ExitCode::FAILURE
        }
    }
}
