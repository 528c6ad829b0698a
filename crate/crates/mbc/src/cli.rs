//! Command-line interface.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbc_core::lexmetrics::{meteor, rouge_l};
use mbc_core::prompts::{asset_checksums, sha256_hex, verify_assets};
use mbc_core::Split;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{process_env, JudgeKind, Overrides, RunConfig};
use crate::corpus::{corpus_stats, load_dataset, load_gold, read_jsonl, write_jsonl};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate, evaluate_source, match_predictions, EvaluationReport};
use crate::qa::{answer_with_evidence, build_comparison, EvidenceCase};
use crate::synthesis::{run_pipeline, BatchMode, MbcDraft};

#[derive(Debug, Parser)]
#[command(name = "mbc", version, about = "Generate and evaluate media background checks")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory that receives one subdirectory per run.
    #[arg(long, global = true, default_value = "runs")]
    pub runs_dir: PathBuf,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, validate and export a dataset.
    Ingest { root: PathBuf },
    /// Generate background checks.
    Generate(GenerateArgs),
    /// Score predictions against gold checks.
    Evaluate(EvaluateArgs),
    /// Compute a lexical metric.
    Score(ScoreArgs),
    /// Answer evidence questions with and without background checks.
    Qa {
        #[arg(long)]
        cases: PathBuf,
    },
    /// Summarize evaluation runs as a table.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Source name to check.
    #[arg(required_unless_present = "split", conflicts_with = "split")]
    pub source: Option<String>,
    /// Generate for every source of a dataset split.
    #[arg(long, requires = "dataset")]
    pub split: Option<String>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Process at most this many sources of the split.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub no_retrieval: bool,
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub per_pair: bool,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum JudgeArg {
    Oracle,
    Chat,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset directory or JSON-lines export of gold checks.
    #[arg(long)]
    pub gold: PathBuf,
    /// JSON-lines records with `source_name` and `body`.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub recall_gold_true_only: bool,
    #[arg(long, value_enum)]
    pub judge: Option<JudgeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    #[value(name = "rouge_l")]
    RougeL,
    Meteor,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    #[arg(long, requires = "reference", conflicts_with_all = ["pred", "gold"])]
    pub candidate: Option<String>,
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long, requires = "gold")]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    prompt_checksums: &'a BTreeMap<String, String>,
    #[serde(flatten)]
    record: &'a T,
}

#[derive(Debug, Deserialize)]
struct Prediction {
    source_name: String,
    body: String,
}

struct Run {
    config: RunConfig,
    hash: String,
    checksums: BTreeMap<String, String>,
    dir: PathBuf,
}

impl Run {
    fn open(cli: &Cli, command: &str, args: &impl Serialize, overrides: Overrides) -> Result<Self> {
        let overrides = Overrides {
            cache_dir: cli.cache_dir.clone(),
            workers: cli.workers,
            seed: cli.seed,
            ..overrides
        };
        let config = RunConfig::resolve(cli.config.as_deref(), process_env, &overrides)?;
        verify_assets()?;
        let hash = config.hash();
        let checksums = asset_checksums().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let id = sha256_hex(crate::cache::canonical_json(&(command, &hash, args)).as_bytes());
        let dir = cli.runs_dir.join(format!("{command}-{}", &id[..12]));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let _ = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build_global();
        fs::write(dir.join("config.json"), config.canonical()).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { config, hash, checksums, dir })
    }

    fn stamp<'a, T: Serialize>(&'a self, record: &'a T) -> Stamped<'a, T> {
        Stamped { config_hash: &self.hash, prompt_checksums: &self.checksums, record }
    }

    fn write_jsonl<T: Serialize>(&self, name: &str, records: &[T]) -> Result<PathBuf> {
        let stamped: Vec<_> = records.iter().map(|r| self.stamp(r)).collect();
        let path = self.dir.join(name);
        write_jsonl(&path, &stamped)?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, record: &T) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(&self.stamp(record)).map_err(|e| Error::Validation(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Runs the CLI and returns the process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, returning what it prints on success.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Ingest { root } => ingest(cli, root),
        Command::Generate(args) => generate(cli, args),
        Command::Evaluate(args) => evaluate(cli, args),
        Command::Score(args) => score(args),
        Command::Qa { cases } => qa(cli, cases),
        Command::Report { runs } => report(cli, runs),
    }
}

fn ingest(cli: &Cli, root: &Path) -> Result<String> {
    let run = Run::open(cli, "ingest", &root, Overrides::default())?;
    let records = load_dataset(root)?;
    let stats = corpus_stats(&records);
    run.write_jsonl("corpus.jsonl", &records)?;
    run.write_json("stats.json", &BTreeMap::from([("splits", &stats)]))?;
    let count = |s: Split| stats.iter().find(|x| x.split == s).map_or(0, |x| x.count);
    let mut out = format!(
        "{} checks; splits {}/{}/{}\n",
        records.len(),
        count(Split::Train),
        count(Split::Dev),
        count(Split::Test)
    );
    for s in &stats {
        let _ = writeln!(out, "{:<10} {:>6} checks  {:>6.1} lines  {:>7.1} tokens", s.split, s.count, s.avg_lines, s.avg_tokens);
    }
    let _ = writeln!(out, "run directory: {}", run.dir.display());
    Ok(out)
}

fn generate(cli: &Cli, args: &GenerateArgs) -> Result<String> {
    let overrides = Overrides {
        retrieval: args.no_retrieval.then_some(false),
        strict: args.strict.then_some(true),
        batch_mode: args.per_pair.then_some(BatchMode::PerPair),
        k: args.k,
        threshold: args.threshold,
        cap: args.cap,
        ..Overrides::default()
    };
    let key = (&args.source, &args.split, &args.dataset, args.limit);
    let run = Run::open(cli, "generate", &key, overrides)?;
    let sources: Vec<String> = match (&args.source, &args.split, &args.dataset) {
        (Some(source), _, _) => vec![source.clone()],
        (None, Some(split), Some(root)) => {
            let split = Split::parse(split).ok_or_else(|| Error::Config(format!("unknown split `{split}`")))?;
            let mut names: Vec<String> =
                load_dataset(root)?.into_iter().filter(|r| r.split == split).map(|r| r.source_name).collect();
            names.sort();
            names.truncate(args.limit.unwrap_or(usize::MAX));
            names
        }
        _ => return Err(Error::Config("give a source name or --split with --dataset".into())),
    };
    let tk = run.config.toolkit(process_env)?;
    let pipeline = run.config.pipeline();
    let outcomes: Vec<Result<MbcDraft>> = sources.par_iter().map(|s| run_pipeline(s, &tk, &pipeline)).collect();
    let mut drafts = Vec::new();
    let mut partials = Vec::new();
    let mut errors = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(d) => drafts.push(d),
            Err(Error::Pipeline(mut f)) => {
                if let Some(p) = f.partial.take() {
                    partials.push(p);
                }
                errors.push(Error::Pipeline(f).to_string());
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    let path = run.write_jsonl("drafts.jsonl", &drafts)?;
    if !partials.is_empty() {
        run.write_jsonl("partial.jsonl", &partials)?;
    }
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("error: {e}");
        }
        return Err(Error::Validation(format!(
            "{} of {} pipelines failed; partial drafts in {}",
            errors.len(),
            sources.len(),
            run.dir.display()
        )));
    }
    let mut out = String::new();
    for d in &drafts {
        let line = serde_json::to_string(&run.stamp(d)).map_err(|e| Error::Validation(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    eprintln!("wrote {}", path.display());
    Ok(out)
}

fn evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<String> {
    let overrides = Overrides {
        recall_gold_true_only: args.recall_gold_true_only.then_some(true),
        judge: args.judge.map(|j| match j {
            JudgeArg::Oracle => JudgeKind::Oracle,
            JudgeArg::Chat => JudgeKind::Chat,
        }),
        retrieval: Some(false),
        ..Overrides::default()
    };
    let run = Run::open(cli, "evaluate", &(&args.gold, &args.pred), overrides)?;
    let gold = load_gold(&args.gold)?;
    let preds: Vec<Prediction> = read_jsonl(&args.pred)?;
    let preds: Vec<(String, String)> = preds.into_iter().map(|p| (p.source_name, p.body)).collect();
    let pairs = match_predictions(&gold, &preds)?;
    let tk = run.config.toolkit(process_env)?;
    let assessor = run.config.assessor(&tk);
    let mode = run.config.recall_mode();
    let sources = pairs
        .par_iter()
        .map(|(g, body)| evaluate_source(g, body, assessor.as_ref(), assessor.as_ref(), mode))
        .collect();
    let report = aggregate(sources);
    run.write_json("report.json", &report)?;
    let s = &report.summary;
    let mut out = format!(
        "fact recall {}  error rate {}  meteor {}  rouge_l {}\n",
        fmt3(s.fact_recall),
        fmt3(s.error_rate),
        fmt3(report.meteor),
        fmt3(report.rouge_l)
    );
    let _ = writeln!(out, "{} sources, {} scored, {} degenerate", s.sources, s.scored, s.degenerate);
    let _ = writeln!(out, "run directory: {}", run.dir.display());
    Ok(out)
}

fn fmt3(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.3}"))
}

fn score(args: &ScoreArgs) -> Result<String> {
    let metric = |c: &str, r: &str| match args.metric {
        Metric::RougeL => rouge_l(c, r),
        Metric::Meteor => meteor(c, r),
    };
    match (&args.candidate, &args.reference, &args.pred, &args.gold) {
        (Some(c), Some(r), _, _) => Ok(format!("{:.6}\n", metric(c, r))),
        (_, _, Some(pred), Some(gold)) => {
            let gold = load_gold(gold)?;
            let preds: Vec<Prediction> = read_jsonl(pred)?;
            let preds: Vec<(String, String)> = preds.into_iter().map(|p| (p.source_name, p.body)).collect();
            let pairs = match_predictions(&gold, &preds)?;
            if pairs.is_empty() {
                return Ok("n/a\n".into());
            }
            let total: f64 = pairs.iter().map(|(g, body)| metric(body, g.full_text())).sum();
            Ok(format!("{:.6}\n", total / pairs.len() as f64))
        }
        _ => Err(Error::Config("give --candidate and --reference, or --pred and --gold".into())),
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum QaRecord {
    Single { question: String, domain: String, answer: crate::qa::Answer, order_seed: u64 },
    Pair(crate::qa::Comparison),
}

fn qa(cli: &Cli, cases_path: &Path) -> Result<String> {
    let run = Run::open(cli, "qa", &cases_path, Overrides { retrieval: Some(false), ..Overrides::default() })?;
    let cases: Vec<EvidenceCase> = read_jsonl(cases_path)?;
    let tk = run.config.toolkit(process_env)?;
    let params = run.config.pipeline().generation;
    let seed = run.config.seed;
    let records: Vec<Result<QaRecord>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, case)| {
            let order_seed = seed.wrapping_add(i as u64);
            match &case.mbc {
                Some(mbc) => {
                    let base = EvidenceCase { mbc: None, ..case.clone() };
                    build_comparison(&base, mbc, &tk, params, order_seed).map(QaRecord::Pair)
                }
                None => answer_with_evidence(case, &tk, params).map(|answer| QaRecord::Single {
                    question: case.question.clone(),
                    domain: case.domain.to_lowercase(),
                    answer,
                    order_seed,
                }),
            }
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let path = run.write_jsonl("answers.jsonl", &records)?;
    Ok(format!("{} cases answered; wrote {}\n", records.len(), path.display()))
}

#[derive(Debug, Clone, Serialize)]
struct ReportRow {
    run: String,
    sources: usize,
    degenerate: usize,
    fact_recall: Option<f64>,
    error_rate: Option<f64>,
    meteor: Option<f64>,
    rouge_l: Option<f64>,
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{:.1}", 100.0 * v))
}

/// Aligned plain-text table with one row per evaluation run.
fn table(rows: &[ReportRow]) -> String {
    let header = ["Run", "Sources", "Fact Recall", "Error Rate", "METEOR", "ROUGE-L"];
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.run.clone(),
                r.sources.to_string(),
                pct(r.fact_recall),
                pct(r.error_rate),
                pct(r.meteor),
                pct(r.rouge_l),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: [&str; 6]| {
        let mut s = format!("{:<w$}", row[0], w = widths[0]);
        for (c, w) in row[1..].iter().zip(&widths[1..]) {
            let _ = write!(s, "  {c:>w$}");
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    out.push_str(&line(widths.map(|w| "-".repeat(w)).each_ref().map(String::as_str)));
    for row in &cells {
        out.push_str(&line(row.each_ref().map(String::as_str)));
    }
    out
}

fn report(cli: &Cli, runs: &[PathBuf]) -> Result<String> {
    let run = Run::open(cli, "report", &runs, Overrides { retrieval: Some(false), ..Overrides::default() })?;
    let mut rows = Vec::new();
    for path in runs {
        let file = if path.is_dir() { path.join("report.json") } else { path.clone() };
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let report: EvaluationReport = serde_json::from_str(&text)
            .map_err(|e| Error::Format { path: file.clone(), line: e.line(), message: e.to_string() })?;
        let name = if path.is_dir() { path } else { path.parent().unwrap_or(path) };
        rows.push(ReportRow {
            run: name.file_name().map_or_else(|| name.display().to_string(), |n| n.to_string_lossy().into_owned()),
            sources: report.summary.sources,
            degenerate: report.summary.degenerate,
            fact_recall: report.summary.fact_recall,
            error_rate: report.summary.error_rate,
            meteor: report.meteor,
            rouge_l: report.rouge_l,
        });
    }
    let out = table(&rows);
    run.write_jsonl("report.jsonl", &rows)?;
    let path = run.dir.join("report.txt");
    fs::write(&path, &out).map_err(|e| Error::io(&path, e))?;
    Ok(out)
}
