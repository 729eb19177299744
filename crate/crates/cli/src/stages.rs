//! One function per pipeline stage. Every stage reads and writes plain files
//! in the run directory and leaves a metadata record under `meta/`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde_json::json;
use tracing::info;
use trialsent_core::corpus::{
    aggregate, assemble_training_corpus, balance_classes, gold_panel, join_gold, split, GoldLabel,
    RaterAnnotation, TrainingCorpus,
};
use trialsent_core::encoder::{Encoder, EncoderConfig, EncoderKind};
use trialsent_core::eval::{compare_rater, evaluate_labels, render_matrix, render_table, EvalReport, LabeledRef, PredictionRow};
use trialsent_core::ingest::{
    harvest, AbstractRecord, EntrezClient, FieldQuery, FixtureTransport, HeadingLexicon, HttpTransport,
    RecordingTransport, Transport,
};
use trialsent_core::jsonl::{read_jsonl, write_json, write_jsonl};
use trialsent_core::preprocess::{preprocess_records, TokenizedExample, Vocab, WordPieceTokenizer};
use trialsent_core::ssgan::{TrainedModel, Trainer};
use trialsent_core::trend::{trend, GroupBy};
use trialsent_core::SentimentLabel;

use crate::args::*;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::meta::MetaBuilder;

pub const RECORDS: &str = "records.jsonl";
pub const TOKENS: &str = "tokens.jsonl";
pub const GOLD: &str = "gold.jsonl";
pub const HELD_OUT: &str = "held_out.jsonl";
pub const BALANCED: &str = "balanced.jsonl";
pub const UNLABELED: &str = "unlabeled.jsonl";
pub const TRAIN: &str = "train.jsonl";
pub const VALIDATION: &str = "validation.jsonl";
pub const MODEL: &str = "model";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const VALIDATION_PREDICTIONS: &str = "validation_predictions.jsonl";
pub const REPORT: &str = "report.json";
pub const RATER_REPORT: &str = "report.rater.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const TREND: &str = "trend.json";
pub const TREND_CSV: &str = "trend.csv";

const PREDICT_CHUNK: usize = 64;

/// Stage producing a run-directory artifact, and that stage's own
/// run-directory inputs.
fn producer(artifact: &str) -> (Stage, &'static [&'static str]) {
    match artifact {
        RECORDS => (Stage::Fetch, &[]),
        TOKENS => (Stage::Preprocess, &[RECORDS]),
        GOLD | HELD_OUT => (Stage::Aggregate, &[]),
        BALANCED | UNLABELED => (Stage::Balance, &[TOKENS, GOLD]),
        TRAIN | VALIDATION => (Stage::Split, &[BALANCED, UNLABELED]),
        MODEL => (Stage::Train, &[TRAIN]),
        PREDICTIONS => (Stage::Classify, &[MODEL, TOKENS]),
        other => unreachable!("{other} is not a stage artifact"),
    }
}

pub struct Context {
    pub config: RunConfig,
    pub run_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn new(config: RunConfig, run_dir: Option<PathBuf>, seed: Option<u64>) -> Result<Self> {
        config.validate()?;
        let run_dir = run_dir
            .or_else(|| config.resolve_opt(&config.run_dir))
            .unwrap_or_else(|| PathBuf::from("run"));
        let seed = seed.unwrap_or(config.seed);
        Ok(Self { config, run_dir, seed })
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.run_dir.join(name)
    }

    /// The earliest stage in `artifact`'s chain whose output is absent.
    fn first_missing_stage(&self, artifact: &str) -> Stage {
        let (stage, inputs) = producer(artifact);
        for input in inputs {
            if !self.artifact(input).exists() {
                return self.first_missing_stage(input);
            }
        }
        stage
    }

    /// An explicit input must exist; a defaulted one names the stage to run.
    fn input(&self, explicit: &Option<PathBuf>, artifact: &str) -> Result<PathBuf> {
        match explicit {
            Some(p) if p.exists() => Ok(p.clone()),
            Some(p) => Err(CliError::Config(format!("input {} does not exist", p.display()))),
            None => {
                let p = self.artifact(artifact);
                if p.exists() {
                    Ok(p)
                } else {
                    Err(CliError::Missing {
                        path: p,
                        stage: self.first_missing_stage(artifact).command(),
                    })
                }
            }
        }
    }

    /// An input with no stage behind it, from the flag or the config file.
    fn external(&self, flag: &Option<PathBuf>, configured: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        let p = flag
            .clone()
            .or_else(|| self.config.resolve_opt(configured))
            .ok_or_else(|| CliError::Config(format!("{key}: no path given")))?;
        if p.exists() {
            Ok(p)
        } else {
            Err(CliError::Config(format!("{key}: {} does not exist", p.display())))
        }
    }

    fn output(&self, explicit: &Option<PathBuf>, artifact: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.artifact(artifact))
    }
}

/// A file called `name` next to `path`.
fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map(|d| d.join(name)).unwrap_or_else(|| PathBuf::from(name))
}

fn say(line: String) {
    println!("{line}");
}

fn fetch_with<T: Transport>(transport: T, query: &FieldQuery, lexicon: &HeadingLexicon) -> Result<Vec<AbstractRecord>> {
    Ok(harvest(&EntrezClient::new(transport), query, lexicon)?)
}

pub fn fetch(ctx: &Context, args: &FetchArgs) -> Result<()> {
    let cfg = &ctx.config.fetch;
    let field = args
        .field
        .clone()
        .or_else(|| cfg.field.clone())
        .ok_or_else(|| CliError::Config("fetch.field: no field given".into()))?;
    let mut query = FieldQuery::new(&field, args.max.unwrap_or(cfg.max_records));
    match (args.from_year.or(cfg.from_year), args.to_year.or(cfg.to_year)) {
        (Some(a), Some(b)) => query = query.with_years(a, b),
        (None, None) => {}
        _ => return Err(CliError::Config("fetch: give both --from-year and --to-year".into())),
    }
    query.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let lexicon = ctx.config.preprocess.lexicon();
    let fixtures = args.fixtures.clone().or_else(|| ctx.config.resolve_opt(&cfg.fixtures));
    let mut meta = MetaBuilder::start("fetch", ctx.seed).settings(json!({
        "field": field,
        "max_records": query.max_records,
        "date_range": query.date_range,
        "source": if fixtures.is_some() { "fixtures" } else { "network" },
    }));
    let records = match &fixtures {
        Some(dir) => {
            meta.input(dir);
            fetch_with(FixtureTransport::open(dir)?, &query, &lexicon)?
        }
        None => {
            let key = match args.api_key_env.clone().or_else(|| cfg.api_key_env.clone()) {
                Some(var) => Some(
                    std::env::var(&var).map_err(|_| CliError::Config(format!("fetch.api_key_env: ${var} is not set")))?,
                ),
                None => None,
            };
            let http = HttpTransport::new(key)?;
            match &args.record {
                Some(dir) => fetch_with(RecordingTransport::new(http, dir)?, &query, &lexicon)?,
                None => fetch_with(http, &query, &lexicon)?,
            }
        }
    };
    let out = ctx.output(&args.out, RECORDS);
    write_jsonl(&out, &records)?;
    meta.finish(&ctx.run_dir, Stage::Fetch.slug(), &[&out])?;
    say(format!("fetch: {} abstracts for {field} -> {}", records.len(), out.display()));
    Ok(())
}

pub fn preprocess(ctx: &Context, args: &PreprocessArgs) -> Result<()> {
    let cfg = &ctx.config.preprocess;
    let input = ctx.input(&args.input, RECORDS)?;
    // a pretrained checkpoint carries its own vocabulary
    let configured = cfg
        .vocab
        .clone()
        .or_else(|| ctx.config.encoder.checkpoint.as_ref().map(|c| c.join(trialsent_core::encoder::VOCAB_FILE)));
    let vocab_path = ctx.external(&args.vocab, &configured, "preprocess.vocab")?;
    let max_length = args.max_len.unwrap_or(cfg.max_length);
    if max_length < 3 {
        return Err(CliError::Config("--max-len must be at least 3".into()));
    }
    let mut meta = MetaBuilder::start("preprocess", ctx.seed).settings(json!({
        "max_length": max_length,
        "lowercase": cfg.lowercase,
        "lexicon": cfg.lexicon(),
    }));
    meta.input(&input);
    meta.input(&vocab_path);
    let records: Vec<AbstractRecord> = read_jsonl(&input)?;
    let tokenizer = WordPieceTokenizer::new(Vocab::load(&vocab_path)?, cfg.lowercase);
    let (rows, stats) = preprocess_records(&records, &tokenizer, &cfg.lexicon(), max_length)?;
    let out = ctx.output(&args.out, TOKENS);
    write_jsonl(&out, &rows)?;
    meta.finish(&ctx.run_dir, Stage::Preprocess.slug(), &[&out])?;
    say(format!(
        "preprocess: {} conclusions ({} by heading, {} by trailing fraction, {} truncated) -> {}",
        stats.records,
        stats.structured_heading,
        stats.trailing_fraction,
        stats.truncated,
        out.display()
    ));
    Ok(())
}

pub fn labels_aggregate(ctx: &Context, args: &AggregateArgs) -> Result<()> {
    let cfg = &ctx.config.labels;
    let input = ctx.external(&args.annotations, &cfg.annotations, "labels.annotations")?;
    let annotations: Vec<RaterAnnotation> = read_jsonl(&input)?;
    let configured = if args.gold_raters.is_empty() {
        cfg.gold_raters.clone()
    } else {
        args.gold_raters.clone()
    };
    let panel = gold_panel(&annotations, &configured)?;
    let mut meta = MetaBuilder::start("labels aggregate", ctx.seed).settings(json!({ "gold_raters": panel }));
    meta.input(&input);
    let agg = aggregate(&annotations, &panel)?;
    let out = ctx.output(&args.out, GOLD);
    let held_out = sibling(&out, HELD_OUT);
    write_jsonl(&out, &agg.gold)?;
    write_jsonl(&held_out, &agg.held_out)?;
    meta.finish(&ctx.run_dir, Stage::Aggregate.slug(), &[&out, &held_out])?;
    let unresolved = agg.unresolved().count();
    say(format!(
        "labels aggregate: {} abstracts, {} resolved, {} three-way ties, {} held-out annotations -> {}",
        agg.gold.len(),
        agg.gold.len() - unresolved,
        unresolved,
        agg.held_out.len(),
        out.display()
    ));
    Ok(())
}

fn counts(rows: &[TokenizedExample]) -> [usize; 3] {
    let mut c = [0; 3];
    for r in rows {
        if let Some(i) = r.label.class_index() {
            c[i] += 1;
        }
    }
    c
}

pub fn corpus_balance(ctx: &Context, args: &BalanceArgs) -> Result<()> {
    let tokens_path = ctx.input(&args.tokens, TOKENS)?;
    let gold_path = ctx.input(&args.gold, GOLD)?;
    let mut meta = MetaBuilder::start("corpus balance", ctx.seed);
    meta.input(&tokens_path);
    meta.input(&gold_path);
    let rows: Vec<TokenizedExample> = read_jsonl(&tokens_path)?;
    let gold: Vec<GoldLabel> = read_jsonl(&gold_path)?;
    let joined = join_gold(&rows, &gold);
    let before = counts(&joined.labeled);
    let pairs: Vec<(TokenizedExample, SentimentLabel)> =
        joined.labeled.iter().map(|r| (r.clone(), r.label)).collect();
    let balanced: Vec<TokenizedExample> = balance_classes(&pairs, ctx.seed)?.into_iter().map(|(r, _)| r).collect();
    let after = counts(&balanced);
    let out = ctx.output(&args.out, BALANCED);
    let unlabeled = sibling(&out, UNLABELED);
    write_jsonl(&out, &balanced)?;
    write_jsonl(&unlabeled, &joined.unlabeled)?;
    meta = meta.settings(json!({
        "counts_before": before,
        "counts_after": after,
        "unresolved_excluded": joined.unresolved,
    }));
    meta.finish(&ctx.run_dir, Stage::Balance.slug(), &[&out, &unlabeled])?;
    say(format!(
        "corpus balance: {before:?} -> {after:?} labeled, {} unlabeled, {} ties excluded -> {}",
        joined.unlabeled.len(),
        joined.unresolved.len(),
        out.display()
    ));
    Ok(())
}

pub fn corpus_split(ctx: &Context, args: &SplitArgs) -> Result<()> {
    let input = ctx.input(&args.input, BALANCED)?;
    let unlabeled_path = match &args.unlabeled {
        Some(_) => ctx.input(&args.unlabeled, UNLABELED)?,
        None => ctx.input(&Some(sibling(&input, UNLABELED)).filter(|p| p.exists()), UNLABELED)?,
    };
    let holdout = args.holdout.unwrap_or(ctx.config.corpus.holdout);
    let mut meta = MetaBuilder::start("corpus split", ctx.seed).settings(json!({ "holdout": holdout }));
    meta.input(&input);
    meta.input(&unlabeled_path);
    let balanced: Vec<TokenizedExample> = read_jsonl(&input)?;
    let unlabeled: Vec<TokenizedExample> = read_jsonl(&unlabeled_path)?;
    // oversampling copies of one abstract stay on the same side of the split
    let mut seen = BTreeSet::new();
    let distinct: Vec<(TokenizedExample, SentimentLabel)> = balanced
        .iter()
        .filter(|r| seen.insert(r.pmid.clone()))
        .map(|r| (r.clone(), r.label))
        .collect();
    let parts = split(&distinct, holdout, ctx.seed)?;
    let held: BTreeSet<&str> = parts.validation.iter().map(|(r, _)| r.pmid.as_str()).collect();
    let train: Vec<TokenizedExample> = balanced.iter().filter(|r| !held.contains(r.pmid.as_str())).cloned().collect();
    let validation: Vec<TokenizedExample> = parts.validation.into_iter().map(|(r, _)| r).collect();
    let corpus = assemble_training_corpus(train, unlabeled)?;
    let train_out = ctx.artifact(TRAIN);
    let val_out = ctx.artifact(VALIDATION);
    corpus.save(&train_out)?;
    write_jsonl(&val_out, &validation)?;
    meta.finish(&ctx.run_dir, Stage::Split.slug(), &[&train_out, &val_out])?;
    say(format!(
        "corpus split: {} labeled + {} unlabeled training rows, {} validation -> {}",
        corpus.labeled().count(),
        corpus.unlabeled().count(),
        validation.len(),
        train_out.display()
    ));
    Ok(())
}

fn encoder_for(ctx: &Context, corpus: &TrainingCorpus) -> Result<(EncoderConfig, Option<PathBuf>)> {
    let cfg = &ctx.config;
    let d = cfg.gan.d;
    let mut enc = match cfg.encoder.kind {
        EncoderKind::TinyTest => {
            let vocab = cfg.resolve_opt(&cfg.preprocess.vocab);
            let size = match &vocab {
                Some(p) => Vocab::load(p)?.len(),
                None => corpus
                    .examples
                    .iter()
                    .flat_map(|e| e.example.ids.iter())
                    .max()
                    .map_or(1, |&m| m as usize + 1),
            };
            return Ok((
                EncoderConfig {
                    trainable: cfg.encoder.trainable,
                    ..EncoderConfig::tiny(size, d, ctx.seed)
                },
                vocab,
            ));
        }
        EncoderKind::PretrainedCheckpoint => {
            let path = cfg
                .resolve_opt(&cfg.encoder.checkpoint)
                .ok_or_else(|| CliError::Config("encoder.checkpoint: required".into()))?;
            EncoderConfig::pretrained(path, d)
        }
    };
    enc.trainable = cfg.encoder.trainable;
    let path = enc.checkpoint_path.clone();
    Ok((enc, path))
}

pub fn train(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let corpus_path = ctx.input(&args.corpus, TRAIN)?;
    let validation_path = match &args.validation {
        Some(_) => Some(ctx.input(&args.validation, VALIDATION)?),
        None => Some(ctx.artifact(VALIDATION)).filter(|p| args.corpus.is_none() && p.exists()),
    };
    let corpus = TrainingCorpus::load(&corpus_path)?;
    let validation: Vec<TokenizedExample> = match &validation_path {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let mut gan = ctx.config.gan.clone();
    gan.seed = ctx.seed;
    let (enc_cfg, enc_input) = encoder_for(ctx, &corpus)?;
    let mut meta = MetaBuilder::start("train", ctx.seed).settings(json!({ "gan": gan, "encoder": enc_cfg }));
    meta.input(&corpus_path);
    for p in validation_path.iter().chain(enc_input.iter()) {
        meta.input(p);
    }
    let encoder = Encoder::load(&enc_cfg)?;
    let model = Trainer::new(gan)
        .encoder_trainable(enc_cfg.trainable)
        .validation(&validation)
        .train(&corpus, encoder)?;
    let out = ctx.output(&args.out, MODEL);
    model.save(&out)?;
    meta.finish(&ctx.run_dir, Stage::Train.slug(), &[&out])?;
    if let Some(last) = model.history.last() {
        let val = last
            .validation
            .as_ref()
            .map(|v| format!(", validation accuracy {:.3}", v.accuracy))
            .unwrap_or_default();
        say(format!(
            "train: {} epochs, training accuracy {:.3}{val} -> {}",
            model.history.epochs.len(),
            last.train_accuracy,
            out.display()
        ));
    }
    Ok(())
}

fn predict(model: &TrainedModel, rows: &[TokenizedExample]) -> Result<Vec<PredictionRow>> {
    let mut out = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(PREDICT_CHUNK) {
        let tokens: Vec<_> = chunk.iter().map(TokenizedExample::tokens).collect();
        let refs: Vec<_> = tokens.iter().collect();
        for (row, p) in chunk.iter().zip(model.predict_batch(&refs)?) {
            out.push(PredictionRow {
                pmid: row.pmid.clone(),
                label: p.label,
                probs: p.probs,
            });
        }
    }
    Ok(out)
}

pub fn classify(ctx: &Context, args: &ClassifyArgs) -> Result<()> {
    let model_dir = ctx.input(&args.model, MODEL)?;
    let input = ctx.input(&args.input, TOKENS)?;
    let mut meta = MetaBuilder::start("classify", ctx.seed);
    meta.input(&model_dir);
    meta.input(&input);
    let model = TrainedModel::load(&model_dir)?;
    let rows: Vec<TokenizedExample> = read_jsonl(&input)?;
    let predictions = predict(&model, &rows)?;
    let out = ctx.output(&args.out, PREDICTIONS);
    write_jsonl(&out, &predictions)?;
    meta.finish(&ctx.run_dir, Stage::Classify.slug(), &[&out])?;
    say(format!("classify: {} predictions -> {}", predictions.len(), out.display()));
    Ok(())
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<()> {
    let rater_only = args.rater.is_some() && args.pred.is_none() && args.model.is_none();
    let gold_path = ctx.input(&args.gold, if rater_only { GOLD } else { VALIDATION })?;
    let mut meta = MetaBuilder::start("evaluate", ctx.seed);
    meta.input(&gold_path);
    let gold: Vec<LabeledRef> = read_jsonl(&gold_path)?;
    let out = ctx.output(&args.out, if rater_only { RATER_REPORT } else { REPORT });
    let mut outputs = vec![out.clone()];
    let mut rows: Vec<(String, EvalReport)> = Vec::new();

    if !rater_only {
        let predictions: Vec<PredictionRow> = match &args.pred {
            Some(_) => {
                let p = ctx.input(&args.pred, PREDICTIONS)?;
                meta.input(&p);
                read_jsonl(&p)?
            }
            None => {
                let model_dir = ctx.input(&args.model, MODEL)?;
                meta.input(&model_dir);
                let model = TrainedModel::load(&model_dir)?;
                let rows: Vec<TokenizedExample> = read_jsonl(&gold_path)?;
                let preds = predict(&model, &rows)?;
                let p = sibling(&out, VALIDATION_PREDICTIONS);
                write_jsonl(&p, &preds)?;
                outputs.push(p);
                preds
            }
        };
        let refs: Vec<LabeledRef> = predictions.iter().map(LabeledRef::from).collect();
        rows.push(("Model".into(), evaluate_labels(&refs, &gold)?));
    }
    if args.rater.is_some() {
        let p = ctx.input(&args.rater, HELD_OUT)?;
        meta.input(&p);
        let annotations: Vec<RaterAnnotation> = read_jsonl(&p)?;
        rows.push(("Expert rater".into(), compare_rater(&annotations, &gold)?));
    }

    write_json(&out, &rows[0].1)?;
    if rows.len() > 1 {
        let p = sibling(&out, RATER_REPORT);
        write_json(&p, &rows[1].1)?;
        outputs.push(p);
    }
    let mut text = render_table(&rows);
    for (name, report) in &rows {
        text.push_str(&format!("\n{name}\n{}", render_matrix(&report.matrix)));
    }
    let text_path = sibling(&out, REPORT_TEXT);
    std::fs::write(&text_path, &text).map_err(|e| CliError::Data(format!("{}: {e}", text_path.display())))?;
    outputs.push(text_path);
    let output_refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    meta.finish(&ctx.run_dir, Stage::Evaluate.slug(), &output_refs)?;
    print!("{text}");
    info!(report = %out.display(), "evaluation written");
    Ok(())
}

pub fn trend_stage(ctx: &Context, args: &TrendArgs) -> Result<()> {
    let pred_path = ctx.input(&args.pred, PREDICTIONS)?;
    let records_path = ctx.input(&args.records, RECORDS)?;
    let group_by = match args.by {
        Some(GroupByArg::Year) => GroupBy::Year,
        Some(GroupByArg::Field) => GroupBy::Field,
        None => ctx.config.trend.group_by,
    };
    let mut meta = MetaBuilder::start("trend", ctx.seed).settings(json!({ "group_by": group_by }));
    meta.input(&pred_path);
    meta.input(&records_path);
    let predictions: Vec<PredictionRow> = read_jsonl(&pred_path)?;
    let records: Vec<AbstractRecord> = read_jsonl(&records_path)?;
    let table = trend(&predictions, &records, group_by)?;
    let out = ctx.output(&args.out, TREND);
    let csv = out.with_extension("csv");
    write_json(&out, &table)?;
    std::fs::write(&csv, table.to_csv()).map_err(|e| CliError::Data(format!("{}: {e}", csv.display())))?;
    meta.finish(&ctx.run_dir, Stage::Trend.slug(), &[&out, &csv])?;
    print!("{}", table.to_csv());
    Ok(())
}

pub fn run_stage(ctx: &Context, stage: Stage) -> Result<()> {
    match stage {
        Stage::Fetch => fetch(ctx, &FetchArgs::default()),
        Stage::Preprocess => preprocess(ctx, &PreprocessArgs::default()),
        Stage::Aggregate => labels_aggregate(ctx, &AggregateArgs::default()),
        Stage::Balance => corpus_balance(ctx, &BalanceArgs::default()),
        Stage::Split => corpus_split(ctx, &SplitArgs::default()),
        Stage::Train => train(ctx, &TrainArgs::default()),
        Stage::Classify => classify(ctx, &ClassifyArgs::default()),
        Stage::Evaluate => {
            let model = ctx.input(&None, MODEL)?;
            let held_out = ctx.artifact(HELD_OUT);
            let has_rater = std::fs::metadata(&held_out).map(|m| m.len() > 0).unwrap_or(false);
            evaluate(
                ctx,
                &EvaluateArgs {
                    model: Some(model),
                    rater: has_rater.then_some(held_out),
                    ..EvaluateArgs::default()
                },
            )
        }
        Stage::Trend => trend_stage(ctx, &TrendArgs::default()),
    }
}

/// Runs `stages` in order, stopping at the first failure.
pub fn run_pipeline(ctx: &Context, stages: &[Stage]) -> Result<()> {
    let stages: Vec<Stage> = if stages.is_empty() { Stage::ALL.to_vec() } else { stages.to_vec() };
    for stage in stages {
        info!(stage = stage.command(), "starting");
        run_stage(ctx, stage)?;
    }
    Ok(())
}
