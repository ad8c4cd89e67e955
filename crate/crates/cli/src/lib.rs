//! Command-line driver for MBR decoding with optimal-transport document
//! utilities. The binary is a thin wrapper around [`run`].

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod decode;
pub mod evaluate;
pub mod failure;
pub mod format;
pub mod pair;
pub mod settings;

pub use failure::{Failure, FailureKind};
pub use settings::{Engine, EngineOptions, Settings, UtilityKind};

use failure::ResultExt;
use settings::open_input;

#[derive(Debug, Parser)]
#[command(name = "mbr-ot", version, about = "MBR decoding with optimal-transport document utilities")]
pub struct Cli {
    /// TOML file with engine options; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select one candidate per instance from a JSONL file.
    Decode(DecodeArgs),
    /// Document utility of one hypothesis against one reference.
    ScorePair(PairArgs),
    /// System-level metric scores and correlation with human judgments.
    EvalMetric(EvalArgs),
    /// Transport plan (coupling, objective, duals) for one document pair.
    DumpPlan(PairArgs),
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// JSONL instances: {"id", "candidates": [...]} or {"id", "candidates_segmented": [[...]]}.
    #[arg(long)]
    pub input: PathBuf,

    /// Selection JSONL; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Run manifest JSON with fingerprint, timing and pair counts.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    /// Write every utility matrix as JSON.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,

    /// Score whole documents with the sentence utility, without transport.
    #[arg(long)]
    pub baseline: bool,

    #[command(flatten)]
    pub engine: EngineOptions,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Hypothesis document text.
    #[arg(long, required_unless_present = "hyp_file", conflicts_with = "hyp_file")]
    pub hyp: Option<String>,

    #[arg(long)]
    pub hyp_file: Option<PathBuf>,

    /// Reference document text.
    #[arg(long = "ref", required_unless_present = "ref_file", conflicts_with = "ref_file")]
    pub reference: Option<String>,

    #[arg(long)]
    pub ref_file: Option<PathBuf>,

    /// Output JSON; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Score whole documents with the sentence utility (score-pair only).
    #[arg(long)]
    pub baseline: bool,

    #[command(flatten)]
    pub engine: EngineOptions,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL lines {"system", "id", "text"}.
    #[arg(long)]
    pub hypotheses: PathBuf,

    /// JSONL lines {"id", "text"}.
    #[arg(long)]
    pub references: PathBuf,

    /// CSV with header "system,score".
    #[arg(long)]
    pub human: PathBuf,

    /// CSV "system,metric_score"; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Summary JSON with the correlation.
    #[arg(long)]
    pub summary: Option<PathBuf>,

    #[command(flatten)]
    pub engine: EngineOptions,
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .or_config(format!("creating {}", path.display()))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    let mut w = create(path)?;
    writeln!(w, "{text}")
        .and_then(|_| w.flush())
        .or_config(format!("writing {}", path.display()))
}

fn read_text(inline: Option<&String>, path: Option<&PathBuf>) -> Result<String, Failure> {
    match (inline, path) {
        (Some(text), _) => Ok(text.clone()),
        (None, Some(p)) => {
            let mut s = String::new();
            open_input(p)?
                .read_to_string(&mut s)
                .or_data(format!("reading {}", p.display()))?;
            Ok(s)
        }
        (None, None) => Err(Failure::config("missing document text")),
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Decode(args) => run_decode(args, config),
        Command::ScorePair(args) => run_pair(args, config, false),
        Command::DumpPlan(args) => run_pair(args, config, true),
        Command::EvalMetric(args) => run_eval(args, config),
    }
}

fn run_decode(args: DecodeArgs, config: Option<&Path>) -> Result<(), Failure> {
    let clock = decode::RunClock::start();
    let engine = Engine::from_options(&args.engine, config, args.baseline)?;
    let input_name = args.input.display().to_string();
    let instances = decode::read_instances(open_input(&args.input)?, &input_name)?;
    let pool = engine.thread_pool()?;
    let decoded = pool.install(|| decode::decode_all(&instances, &engine))?;

    let mut out = sink(args.output.as_deref())?;
    for d in &decoded {
        writeln!(out, "{}", d.line).or_config("writing selections")?;
    }
    out.flush().or_config("writing selections")?;
    if let Some(path) = &args.dump_matrix {
        write_file(path, &decode::matrix_json(&decoded, &engine))?;
    }
    if let Some(path) = &args.manifest {
        let manifest = decode::manifest_json(&decoded, &engine, pool.current_num_threads(), &input_name, &clock);
        write_file(path, &manifest)?;
    }
    Ok(())
}

fn run_pair(args: PairArgs, config: Option<&Path>, plan: bool) -> Result<(), Failure> {
    let engine = Engine::from_options(&args.engine, config, args.baseline)?;
    let hyp = read_text(args.hyp.as_ref(), args.hyp_file.as_ref())?;
    let reference = read_text(args.reference.as_ref(), args.ref_file.as_ref())?;
    let (h, r) = pair::documents(&hyp, &reference, &engine)?;
    let json = engine.thread_pool()?.install(|| {
        if plan {
            pair::dump_plan_json(&h, &r, &engine)
        } else {
            pair::score_pair_json(&h, &r, &engine)
        }
    })?;
    let mut out = sink(args.output.as_deref())?;
    writeln!(out, "{json}")
        .and_then(|_| out.flush())
        .or_config("writing output")
}

fn run_eval(args: EvalArgs, config: Option<&Path>) -> Result<(), Failure> {
    let engine = Engine::from_options(&args.engine, config, false)?;
    let human = evaluate::read_human_scores(open_input(&args.human)?, &args.human.display().to_string())?;
    let (systems, skipped) = evaluate::read_systems(open_input(&args.hypotheses)?, open_input(&args.references)?, &engine)?;
    let result = engine
        .thread_pool()?
        .install(|| evaluate::evaluate(&systems, &human, &engine))?;
    evaluate::write_scores_csv(sink(args.output.as_deref())?, &result.scores)?;
    let summary = evaluate::summary_json(&result, &skipped, &engine);
    match &args.summary {
        Some(path) => write_file(path, &summary)?,
        None => eprintln!("{summary}"),
    }
    Ok(())
}
