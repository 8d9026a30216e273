//! protoforge command line: run the pipeline end-to-end or stage by stage,
//! render run reports, and score answer/output artifact pairs.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use protoforge::gateway::BackendMode;
use protoforge::metrics::{
    build_report, estimate_fix_time, speedup, LineKind, LineSequence, NormalizationRules,
};
use protoforge::pipeline::{report, run, RunConfig, Stage};

#[derive(Parser)]
#[command(
    name = "protoforge",
    about = "Turn protocol specification documents into verified test cases and executable testing artifacts",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (JSON).
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Run directory for stage artifacts and the manifest.
    #[arg(long, short = 'r')]
    run_dir: PathBuf,
    /// Override the backend mode (live, replay, record).
    #[arg(long)]
    backend_mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the specification into a section tree.
    Ingest(RunArgs),
    /// Summarize sections and form protocol modules.
    Analyze(RunArgs),
    /// Build structured models and enumerate testing points.
    Model(RunArgs),
    /// Generate test cases from the testing points.
    GenCases(RunArgs),
    /// Verify coverage breadth and depth, refining the cases.
    Verify(RunArgs),
    /// Forge executable artifacts against the simulated testbed.
    Forge(RunArgs),
    /// Drive the large feedback loop over escalated cases.
    Loop(RunArgs),
    /// Score the run: validation rate, recall, similarity.
    Metrics(RunArgs),
    /// Run every stage in order.
    RunAll(RunArgs),
    /// Render a human-readable report for a finished run.
    Report {
        #[arg(long, short = 'r')]
        run_dir: PathBuf,
    },
    /// Score one answer/output artifact pair without a run directory.
    Score {
        /// Reference ("standard answer") artifact.
        #[arg(long)]
        answer: PathBuf,
        /// Generated artifact to score.
        #[arg(long)]
        output: PathBuf,
        /// Artifact kind: script or config.
        #[arg(long, value_parser = ["script", "config"])]
        kind: String,
        /// Where to write the JSON report (the stdout table is always
        /// printed).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Generation minutes for the fix-time estimate.
        #[arg(long)]
        gen_minutes: Option<f64>,
        /// Manual-effort minutes for the fix-time estimate.
        #[arg(long)]
        manual_minutes: Option<f64>,
    },
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(mode) = &args.backend_mode {
        config.backend.mode = match mode.as_str() {
            "live" => BackendMode::Live,
            "replay" => BackendMode::Replay,
            "record" => BackendMode::Record,
            other => bail!("unknown backend mode `{other}` (expected live, replay, or record)"),
        };
        config
            .backend
            .validate()
            .context("backend override leaves the descriptor invalid")?;
    }
    Ok(config)
}

fn run_stages(args: &RunArgs, selection: Option<&[Stage]>) -> Result<()> {
    let config = load_config(args)?;
    let manifest = run(&config, &args.run_dir, selection)?;
    let executed: Vec<&str> = manifest
        .stages
        .iter()
        .filter(|(_, s)| s.status == protoforge::pipeline::StageState::Done)
        .map(|(name, _)| name.as_str())
        .collect();
    eprintln!(
        "run {} ok; stages done: {}",
        manifest.run_id,
        executed.join(", ")
    );
    Ok(())
}

fn score(
    answer: &PathBuf,
    output: &PathBuf,
    kind: &str,
    out: Option<&PathBuf>,
    gen_minutes: Option<f64>,
    manual_minutes: Option<f64>,
) -> Result<()> {
    let kind = match kind {
        "script" => LineKind::Script,
        _ => LineKind::Config,
    };
    let rules = NormalizationRules::default();
    let answer_text =
        std::fs::read_to_string(answer).with_context(|| format!("reading {}", answer.display()))?;
    let output_text =
        std::fs::read_to_string(output).with_context(|| format!("reading {}", output.display()))?;
    let answer_seq = LineSequence::from_text(&answer_text, kind, &rules);
    let output_seq = LineSequence::from_text(&output_text, kind, &rules);
    let report = build_report(&[true], &[(answer_seq, output_seq)])?;
    println!("metric      value");
    println!("recall      {:.4}", report.recall);
    println!("similarity  {:.4}", report.similarity);
    println!(
        "lines       answer {} / output {} / edit distance {}",
        report.counts.len_ans, report.counts.len_out, report.counts.edit_distance
    );
    if let (Some(gen), Some(manual)) = (gen_minutes, manual_minutes) {
        // single-pair scoring has no review verdicts; VR=1 leaves only the
        // similarity term
        let fix = estimate_fix_time(gen, 1.0, report.similarity, manual)?;
        println!(
            "fix time    {fix:.2} min (speedup {:.2}x)",
            speedup(manual, fix)?
        );
    }
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Ingest(args) => run_stages(args, Some(&[Stage::Ingest])),
        Command::Analyze(args) => run_stages(args, Some(&[Stage::Analyze])),
        Command::Model(args) => run_stages(args, Some(&[Stage::Model])),
        Command::GenCases(args) => run_stages(args, Some(&[Stage::GenCases])),
        Command::Verify(args) => run_stages(args, Some(&[Stage::Verify])),
        Command::Forge(args) => run_stages(args, Some(&[Stage::Forge])),
        Command::Loop(args) => run_stages(args, Some(&[Stage::Loop])),
        Command::Metrics(args) => run_stages(args, Some(&[Stage::Metrics])),
        Command::RunAll(args) => run_stages(args, None),
        Command::Report { run_dir } => {
            print!("{}", report(run_dir)?);
            Ok(())
        }
        Command::Score {
            answer,
            output,
            kind,
            out,
            gen_minutes,
            manual_minutes,
        } => score(
            answer,
            output,
            kind,
            out.as_ref(),
            *gen_minutes,
            *manual_minutes,
        ),
    }
}
