use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cec::commands::{self, EvalInput, GenerateArgs, ScoreArgs};
use cec::config::{AppConfig, LogLevel, Overrides};
use cec::wire::{parse_ops, DEFAULT_EDIT_RATE, DEFAULT_OUTPUTS_PER_SENTENCE};
use cec_core::{Backend, PerturbSpec};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cec",
    version,
    about = "Perturbation data, embedding rewards and metrics for Chinese spelling correction"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML config file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Embedding backend
    #[arg(long, global = true, value_name = "local|remote")]
    embedder: Option<Backend>,

    /// Remote embedding endpoint (overrides CEC_EMBED_URL)
    #[arg(long, global = true, value_name = "URL")]
    embed_url: Option<String>,

    /// Reference-similarity threshold
    #[arg(long, global = true)]
    theta: Option<f64>,

    /// Consensus-similarity threshold
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Weight of the reference score
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Weight of the consensus score
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Directory of confusion tables (homophone.tsv, split.tsv, ...)
    #[arg(long, global = true, value_name = "DIR")]
    tables: Option<PathBuf>,

    #[arg(long, global = true, value_name = "LEVEL")]
    log_level: Option<LogLevel>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate perturbed training pairs from clean sentences
    Gen {
        /// Clean corpus: plain text, one sentence per line, or .jsonl with {"text": ...}
        #[arg(short, long)]
        input: PathBuf,
        /// Output JSONL (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Comma-separated operators, applied round-robin
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "homophone,visual,merge,split,symbol_insert,symbol_substitute"
        )]
        ops: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_OUTPUTS_PER_SENTENCE)]
        outputs_per_sentence: usize,
        /// Fraction of eligible positions to edit, in (0, 1]
        #[arg(long, default_value_t = DEFAULT_EDIT_RATE)]
        edit_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score candidate corrections, one {"reference", "candidates"} object per line
    Score {
        #[arg(short, long)]
        input: PathBuf,
        /// Output JSONL (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Record failing lines in the output instead of stopping
        #[arg(long)]
        keep_going: bool,
    },
    /// Compute detection and correction metrics
    Eval {
        /// JSONL of {"source", "reference", "prediction"}, or with --predictions, source<TAB>reference lines
        #[arg(short, long)]
        input: PathBuf,
        /// Predictions, one per line, aligned with a TSV input
        #[arg(short, long)]
        predictions: Option<PathBuf>,
        /// Write the report as JSON
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP reward service
    Serve {
        /// host:port (overrides CEC_LISTEN_ADDR)
        #[arg(long)]
        listen: Option<String>,
    },
}

fn resolve_config(g: &GlobalArgs, listen: Option<String>) -> Result<AppConfig> {
    let flags = Overrides {
        embedder: g.embedder,
        embed_url: g.embed_url.clone(),
        theta: g.theta,
        beta: g.beta,
        alpha: g.alpha,
        gamma: g.gamma,
        tables_dir: g.tables.clone(),
        listen_addr: listen,
        log_level: g.log_level,
    };
    AppConfig::resolve(g.config.as_deref(), |k| std::env::var(k).ok(), &flags)
}

fn init_logging(level: LogLevel) {
    tracing_subscriber::fmt()
        .with_max_level(level.as_filter())
        .with_ansi(std::io::stderr().is_terminal())
        .with_writer(std::io::stderr)
        .init();
}

fn run(cli: Cli) -> Result<()> {
    let listen = match &cli.command {
        Command::Serve { listen } => listen.clone(),
        _ => None,
    };
    let cfg = resolve_config(&cli.global, listen)?;
    init_logging(cfg.log_level);

    match cli.command {
        Command::Gen { input, output, ops, outputs_per_sentence, edit_rate, seed } => {
            let spec = PerturbSpec {
                ops: parse_ops(&ops).map_err(anyhow::Error::msg)?,
                per_sentence_outputs: outputs_per_sentence,
                edit_rate,
                seed,
            };
            spec.validate()?;
            let tables = cfg.tables.load()?;
            let report = commands::generate(&GenerateArgs { input, output, spec }, &tables)?;
            eprintln!(
                "sentences read: {}\npairs written: {}\nskipped: {} (no eligible site: {}, unchanged: {})",
                report.sentences,
                report.pairs,
                report.skipped(),
                report.skipped_no_site,
                report.skipped_unchanged
            );
        }
        Command::Score { input, output, keep_going } => {
            let embedder = cfg.embedder.build()?;
            let summary = commands::score(&ScoreArgs { input, output, keep_going }, &cfg.reward, embedder.as_ref())?;
            eprintln!("lines scored: {}, failed: {}", summary.lines - summary.failed, summary.failed);
        }
        Command::Eval { input, predictions, output } => {
            let source = match predictions {
                Some(predictions) => EvalInput::Tsv { pairs: input, predictions },
                None => EvalInput::Jsonl(input),
            };
            let report = commands::evaluate(&source, output.as_deref())?;
            if report.skipped > 0 {
                eprintln!("skipped {} triples whose source and reference lengths differ", report.skipped);
            }
            print!("{report}");
        }
        Command::Serve { .. } => {
            let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
            runtime.block_on(cec::service::serve(cfg))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
