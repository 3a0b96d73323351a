//! Batch commands behind `cec gen`, `cec score` and `cec eval`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cec_core::{
    evaluate_corpus, generate_pairs, ConfusionTables, Embedder, GenerateReport, MetricsReport, PerturbSpec, RawTriple,
    RewardParams, Sentence,
};
use serde::{Deserialize, Serialize};

use crate::wire::{RewardRequest, RewardResponse};

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Numbered lines of a file, 1-based, with blank lines dropped.
fn non_blank_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("{}: reading line {}", path.display(), i + 1))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn all_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("jsonl"))
}

#[derive(Deserialize)]
struct TextLine {
    text: String,
}

/// Read clean sentences. `.jsonl` files hold one `{"text": ...}` object per
/// line; anything else is plain text with one sentence per line. Blank lines
/// are ignored.
pub fn read_corpus(path: &Path) -> Result<Vec<Sentence>> {
    let jsonl = is_jsonl(path);
    non_blank_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            if jsonl {
                let parsed: TextLine = serde_json::from_str(&line)
                    .with_context(|| format!("{}: line {n}: expected {{\"text\": ...}}", path.display()))?;
                Ok(Sentence::new(parsed.text))
            } else {
                Ok(Sentence::new(line.trim_end_matches('\r')))
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub spec: PerturbSpec,
}

/// Write one JSON training pair per line.
pub fn generate(args: &GenerateArgs, tables: &ConfusionTables) -> Result<GenerateReport> {
    let corpus = read_corpus(&args.input)?;
    let (pairs, report) = generate_pairs(&corpus, &args.spec, tables)?;
    let mut out = open_output(args.output.as_deref())?;
    for pair in &pairs {
        serde_json::to_writer(&mut out, pair)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ScoreArgs {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub keep_going: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreSummary {
    pub lines: usize,
    pub failed: usize,
}

/// A line that could not be scored, written in place of its result when
/// `keep_going` is set.
#[derive(Debug, Serialize, Deserialize)]
pub struct LineError {
    pub line: usize,
    pub error: String,
}

fn score_line(line: &str, params: &RewardParams, embedder: &dyn Embedder) -> Result<RewardResponse> {
    let request: RewardRequest = serde_json::from_str(line).context("malformed request")?;
    Ok(request.score(params, embedder)?)
}

/// Score one `{"reference", "candidates", "params"?}` object per line.
pub fn score(args: &ScoreArgs, params: &RewardParams, embedder: &dyn Embedder) -> Result<ScoreSummary> {
    let lines = non_blank_lines(&args.input)?;
    let mut out = open_output(args.output.as_deref())?;
    let mut summary = ScoreSummary::default();
    for (n, line) in lines {
        summary.lines += 1;
        match score_line(&line, params, embedder) {
            Ok(response) => serde_json::to_writer(&mut out, &response)?,
            Err(e) if args.keep_going => {
                summary.failed += 1;
                tracing::warn!(line = n, "{e:#}");
                serde_json::to_writer(&mut out, &LineError { line: n, error: format!("{e:#}") })?;
            }
            Err(e) => {
                out.flush()?;
                return Err(e.context(format!("{}: line {n}", args.input.display())));
            }
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub enum EvalInput {
    /// One `{"source", "reference", "prediction"}` object per line.
    Jsonl(PathBuf),
    /// `source<TAB>reference` lines plus a line-aligned predictions file.
    Tsv { pairs: PathBuf, predictions: PathBuf },
}

pub fn read_triples(input: &EvalInput) -> Result<Vec<RawTriple>> {
    match input {
        EvalInput::Jsonl(path) => non_blank_lines(path)?
            .into_iter()
            .map(|(n, line)| serde_json::from_str(&line).with_context(|| format!("{}: line {n}", path.display())))
            .collect(),
        EvalInput::Tsv { pairs, predictions } => {
            let left = all_lines(pairs)?;
            let right = all_lines(predictions)?;
            if left.len() != right.len() {
                bail!(
                    "line count mismatch: {} has {} lines but {} has {}",
                    pairs.display(),
                    left.len(),
                    predictions.display(),
                    right.len()
                );
            }
            left.iter()
                .zip(right)
                .enumerate()
                .map(|(i, (pair, prediction))| {
                    let (source, reference) = pair.trim_end_matches('\r').split_once('\t').with_context(|| {
                        format!("{}: line {}: expected source<TAB>reference", pairs.display(), i + 1)
                    })?;
                    Ok(RawTriple {
                        source: source.to_string(),
                        reference: reference.to_string(),
                        prediction: prediction.trim_end_matches('\r').to_string(),
                    })
                })
                .collect()
        }
    }
}

/// Compute corpus metrics and optionally write them as JSON.
pub fn evaluate(input: &EvalInput, output: Option<&Path>) -> Result<MetricsReport> {
    let report = evaluate_corpus(&read_triples(input)?);
    if let Some(path) = output {
        let mut out = open_output(Some(path))?;
        serde_json::to_writer_pretty(&mut out, &report)?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    Ok(report)
}
