//! `trialsent` command line: fetch, preprocess, label aggregation,
//! balancing and splitting, training, classification, evaluation, trend
//! tables and the annotation service, all over one run directory.

pub mod args;
pub mod config;
pub mod error;
pub mod meta;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use tracing::level_filters::LevelFilter;
use trialsent_annotate::Project;
use trialsent_core::ingest::AbstractRecord;
use trialsent_core::jsonl::read_jsonl;

use crate::args::{Cli, Command, CorpusCommand, LabelsCommand, ServeArgs};
pub use crate::config::RunConfig;
pub use crate::error::{CliError, Result};
pub use crate::stages::{run_pipeline, Context};

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.verbose { LevelFilter::DEBUG } else { LevelFilter::WARN };
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Context::new(config, cli.run_dir, cli.seed)?;
    match &cli.command {
        Command::Fetch(a) => stages::fetch(&ctx, a),
        Command::Preprocess(a) => stages::preprocess(&ctx, a),
        Command::Labels(LabelsCommand::Aggregate(a)) => stages::labels_aggregate(&ctx, a),
        Command::Corpus(CorpusCommand::Balance(a)) => stages::corpus_balance(&ctx, a),
        Command::Corpus(CorpusCommand::Split(a)) => stages::corpus_split(&ctx, a),
        Command::Train(a) => stages::train(&ctx, a),
        Command::Classify(a) => stages::classify(&ctx, a),
        Command::Evaluate(a) => stages::evaluate(&ctx, a),
        Command::Trend(a) => stages::trend_stage(&ctx, a),
        Command::Serve(a) => serve(&ctx, a),
        Command::Pipeline(a) => run_pipeline(&ctx, &a.stages),
    }
}

fn serve(ctx: &Context, args: &ServeArgs) -> Result<()> {
    let project_cfg = ctx
        .config
        .annotate
        .clone()
        .ok_or_else(|| CliError::Config("annotate: the config file must define raters and admin_token".into()))?;
    let records_path = match &args.records {
        Some(p) => p.clone(),
        None => ctx.artifact(stages::RECORDS),
    };
    if !records_path.exists() {
        return Err(CliError::Missing {
            path: records_path,
            stage: "fetch",
        });
    }
    let records: Vec<AbstractRecord> = read_jsonl(&records_path)?;
    let log = args
        .log
        .clone()
        .or_else(|| ctx.config.resolve_opt(&ctx.config.serve.log))
        .unwrap_or_else(|| ctx.run_dir.join("annotation").join("events.jsonl"));
    let static_dir: Option<PathBuf> = args
        .static_dir
        .clone()
        .or_else(|| ctx.config.resolve_opt(&ctx.config.serve.static_dir));
    let addr = args.addr.clone().unwrap_or_else(|| ctx.config.serve.addr.clone());
    let project = Arc::new(Project::open(project_cfg, &records, &log)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Data(format!("runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Config(format!("serve.addr {addr}: {e}")))?;
        println!("annotation service on http://{addr} ({} abstracts, log {})", records.len(), log.display());
        trialsent_annotate::serve(listener, project, static_dir)
            .await
            .map_err(|e| CliError::Data(format!("server: {e}")))
    })
}
