//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use eurovoc_core::corpus::{descriptor_stats, frequency_histogram};
use eurovoc_core::encoder::MeanEmbeddingEncoder;
use eurovoc_core::jex::{build_signatures, IdfMode, JexConfig, SignatureModel};
use eurovoc_core::metrics::{aggregate_reports, evaluate_corpus, evaluate_splits, HeadRanker};
use eurovoc_core::stratify::make_multi_splits;
use eurovoc_core::tokenize::{vocabulary_stats, StatsOptions};
use eurovoc_core::train::{fit, EncoderClassifier};
use eurovoc_core::{
    Checkpoint, Corpus, EvalOptions, Head, Level, LoadMode, MetricReport, PredictionRule,
    SplitPlan, SplitRatios, SubwordVocabulary, Thesaurus, TrainConfig, VocabConfig,
};
use serde_json::json;

use crate::bench::{latency_benchmark, DEFAULT_LENGTHS};
use crate::bundle::ClassifyRequest;
use crate::config::Config;
use crate::error::ServiceError;
use crate::http::{serve, AppState};
use crate::registry::ModelRegistry;

#[derive(Debug, Parser)]
#[command(
    name = "eurovoc",
    version,
    about = "EuroVoc multi-label classification toolkit"
)]
pub struct Cli {
    /// TOML file supplying defaults for any option below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub language: Option<String>,
    /// JSONL corpus.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Thesaurus hierarchy (TSV or JSON).
    #[arg(long, global = true)]
    pub thesaurus: Option<PathBuf>,
    /// Subword vocabulary, one token per line.
    #[arg(long, global = true)]
    pub vocab: Option<PathBuf>,
    /// Split plans written by `split`.
    #[arg(long, global = true)]
    pub plans: Option<PathBuf>,
    /// Model registry directory.
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL corpus and write it back normalised.
    Ingest(IngestArgs),
    /// Label-count statistics, frequency histograms and tokenizer rates.
    Stats(StatsArgs),
    /// Stratified train/validation/test plans, one per seed.
    Split(SplitArgs),
    /// Build topic signatures on one subset of a plan.
    TrainJex(TrainJexArgs),
    /// Train token embeddings and a classification head.
    TrainHead(TrainHeadArgs),
    /// Evaluate a model on the test subsets of the plans.
    Eval(EvalArgs),
    /// Classify one text with a registered model.
    Classify(ClassifyArgs),
    /// Serve registered models over HTTP.
    Serve(ServeArgs),
    /// Measure classification latency against input length.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Accept documents without labels.
    #[arg(long)]
    pub inference: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Restrict to one level; all three by default.
    #[arg(long)]
    pub level: Option<Level>,
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Directory receiving one `histogram_<level>.csv` per level.
    #[arg(long)]
    pub histogram_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub ratios: Option<SplitRatios>,
    /// Defaults to the `--plans` path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JexArgs {
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long)]
    pub idf: Option<IdfArg>,
    /// Strip common English suffixes.
    #[arg(long)]
    pub stem: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IdfArg {
    Raw,
    Smoothed,
}

#[derive(Debug, Args)]
pub struct TrainJexArgs {
    #[arg(long, default_value_t = 0)]
    pub plan_index: usize,
    #[arg(long, default_value_t = 0)]
    pub subset: usize,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub jex: JexArgs,
}

#[derive(Debug, Args)]
pub struct TrainHeadArgs {
    #[arg(long, default_value_t = 0)]
    pub plan_index: usize,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub warmup_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lowercase: bool,
    /// Per-epoch losses as JSONL.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Also add the model to the registry.
    #[arg(long)]
    pub register: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Jex,
    Head,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    /// Trained model; for `jex` it may be omitted to rebuild signatures on
    /// each plan's training subset.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Evaluate one plan only.
    #[arg(long)]
    pub plan_index: Option<usize>,
    /// Subset scored; the last one by default.
    #[arg(long)]
    pub test_index: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long)]
    pub lowercase: bool,
    /// Full JSON report.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// One-row CSV table of the headline scores.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub jex: JexArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, conflicts_with = "input")]
    pub text: Option<String>,
    /// File holding the text.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "ID")]
    pub level: Level,
    #[arg(long, default_value_t = crate::bundle::DEFAULT_NUM_LABELS)]
    pub num_labels: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub addr: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    /// CSV destination; stdout by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] ServiceError),
}

impl From<eurovoc_core::Error> for CliError {
    fn from(e: eurovoc_core::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(ServiceError::Io {
        path: path.to_owned(),
        source: e,
    })
}

/// Flag values merged with the config file.
struct Ctx {
    cli_language: Option<String>,
    corpus: Option<PathBuf>,
    thesaurus: Option<PathBuf>,
    vocab: Option<PathBuf>,
    plans: Option<PathBuf>,
    registry: Option<PathBuf>,
    config: Config,
}

impl Ctx {
    fn require<'a>(value: &'a Option<PathBuf>, name: &str) -> CliResult<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| usage(format!("missing --{name} (or `{name}` in the config file)")))
    }

    fn language(&self) -> CliResult<&str> {
        self.cli_language
            .as_deref()
            .ok_or_else(|| usage("missing --language (or `language` in the config file)"))
    }

    fn corpus(&self, mode: LoadMode) -> CliResult<Corpus> {
        let path = Self::require(&self.corpus, "corpus")?;
        Ok(Corpus::load(path, self.language()?, mode)?)
    }

    fn thesaurus(&self) -> CliResult<Thesaurus> {
        Ok(Thesaurus::load(Self::require(
            &self.thesaurus,
            "thesaurus",
        )?)?)
    }

    fn vocab(&self, lowercase: bool) -> CliResult<SubwordVocabulary> {
        let config = VocabConfig {
            lowercase,
            ..VocabConfig::default()
        };
        Ok(SubwordVocabulary::load(
            Self::require(&self.vocab, "vocab")?,
            config,
        )?)
    }

    fn plans(&self) -> CliResult<Vec<SplitPlan>> {
        let path = Self::require(&self.plans, "plans")?;
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(eurovoc_core::Error::Json(e).into()))
    }

    fn registry(&self) -> CliResult<ModelRegistry> {
        Ok(ModelRegistry::open(Self::require(
            &self.registry,
            "registry",
        )?)?)
    }

    fn jex_config(&self, args: &JexArgs) -> JexConfig {
        let section = &self.config.jex;
        let mut cfg = JexConfig::default();
        if let Some(min_df) = args.min_df.or(section.min_df) {
            cfg.min_df = min_df;
        }
        cfg.idf = match args.idf {
            Some(IdfArg::Raw) => IdfMode::Raw,
            Some(IdfArg::Smoothed) => IdfMode::Smoothed,
            None => section.idf.unwrap_or_default(),
        };
        if let Some(words) = &section.stopwords {
            cfg.stopwords = words.iter().cloned().collect();
        }
        if args.stem || section.english_suffixes == Some(true) {
            cfg.suffixes = JexConfig::english_suffixes();
        }
        cfg
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn emit(out: &mut dyn Write, value: &serde_json::Value) -> CliResult {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(eurovoc_core::Error::Json(e).into()))?;
    writeln!(out, "{text}").map_err(|e| io_err(Path::new("<stdout>"), e))
}

/// Runs a parsed command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    let config = match &cli.config {
        Some(path) => Config::load(path).map_err(usage)?,
        None => Config::default(),
    };
    let ctx = Ctx {
        cli_language: cli.language.or_else(|| config.language.clone()),
        corpus: cli.corpus.or_else(|| config.corpus.clone()),
        thesaurus: cli.thesaurus.or_else(|| config.thesaurus.clone()),
        vocab: cli.vocab.or_else(|| config.vocab.clone()),
        plans: cli.plans.or_else(|| config.plans.clone()),
        registry: cli.registry.or_else(|| config.registry.clone()),
        config,
    };
    match cli.command {
        Command::Ingest(args) => ingest(&ctx, args, out),
        Command::Stats(args) => stats(&ctx, args, out),
        Command::Split(args) => split(&ctx, args, out),
        Command::TrainJex(args) => train_jex(&ctx, args, out),
        Command::TrainHead(args) => train_head(&ctx, args, out),
        Command::Eval(args) => eval(&ctx, args, out),
        Command::Classify(args) => classify(&ctx, args, out),
        Command::Serve(args) => serve_cmd(&ctx, args),
        Command::Bench(args) => bench(&ctx, args, out),
    }
}

fn ingest(ctx: &Ctx, args: IngestArgs, out: &mut dyn Write) -> CliResult {
    let mode = if args.inference {
        LoadMode::Inference
    } else {
        LoadMode::Train
    };
    let corpus = Corpus::load(&args.input, ctx.language()?, mode)?;
    if ctx.thesaurus.is_some() {
        let thesaurus = ctx.thesaurus()?;
        if let Some(id) = corpus
            .label_set()
            .into_iter()
            .find(|id| !thesaurus.contains(id))
        {
            return Err(eurovoc_core::Error::UnknownDescriptor(id.to_string()).into());
        }
    }
    write_file(&args.output, &corpus.to_jsonl_string())?;
    emit(
        out,
        &json!({ "documents": corpus.len(), "labels": corpus.label_set().len(), "output": args.output }),
    )
}

fn stats(ctx: &Ctx, args: StatsArgs, out: &mut dyn Write) -> CliResult {
    let corpus = ctx.corpus(LoadMode::Train)?;
    let thesaurus = ctx.thesaurus()?;
    let levels: Vec<Level> = match args.level {
        Some(level) => vec![level],
        None => Level::ALL.to_vec(),
    };
    let mut per_level = serde_json::Map::new();
    for level in levels {
        let stats = descriptor_stats(&corpus, &thesaurus, level)?;
        let hist = frequency_histogram(&corpus, &thesaurus, level, args.group_size)?;
        if let Some(dir) = &args.histogram_dir {
            write_file(
                &dir.join(format!("histogram_{}.csv", level.as_str().to_lowercase())),
                &hist.to_csv(),
            )?;
        }
        per_level.insert(
            level.to_string(),
            json!({ "labels_per_document": stats, "histogram": hist }),
        );
    }
    let mut report =
        json!({ "language": corpus.language, "documents": corpus.len(), "levels": per_level });
    if ctx.vocab.is_some() {
        let lowercase = ctx.config.train.lowercase.unwrap_or(false);
        let tok = vocabulary_stats(&ctx.vocab(lowercase)?, &corpus, StatsOptions::default())?;
        report["tokenizer"] = json!(tok);
    }
    emit(out, &report)
}

fn split(ctx: &Ctx, args: SplitArgs, out: &mut dyn Write) -> CliResult {
    let corpus = ctx.corpus(LoadMode::Train)?;
    let seeds = args
        .seeds
        .or_else(|| ctx.config.split.seeds.clone())
        .unwrap_or_else(|| vec![1, 2, 3, 4, 5]);
    let ratios = match (args.ratios, &ctx.config.split.ratios) {
        (Some(r), _) => r,
        (None, Some(v)) => SplitRatios::new(v.clone()).map_err(|e| usage(e.to_string()))?,
        (None, None) => SplitRatios::train_val_test(),
    };
    let plans = make_multi_splits(&corpus, &ratios, &seeds)?;
    let output = args
        .output
        .or_else(|| ctx.plans.clone())
        .ok_or_else(|| usage("missing --output or --plans"))?;
    let text = serde_json::to_string_pretty(&plans)
        .map_err(|e| CliError::Data(eurovoc_core::Error::Json(e).into()))?;
    write_file(&output, &text)?;
    let sizes: Vec<Vec<usize>> = plans
        .iter()
        .map(|p| p.subsets.iter().map(Vec::len).collect())
        .collect();
    emit(
        out,
        &json!({ "plans": plans.len(), "subset_sizes": sizes, "output": output }),
    )
}

fn plan_at(plans: &[SplitPlan], index: usize) -> CliResult<&SplitPlan> {
    plans.get(index).ok_or_else(|| {
        usage(format!(
            "plan index {index} out of range ({} plans)",
            plans.len()
        ))
    })
}

fn train_jex(ctx: &Ctx, args: TrainJexArgs, out: &mut dyn Write) -> CliResult {
    let corpus = ctx.corpus(LoadMode::Train)?;
    let train = match &ctx.plans {
        Some(_) => plan_at(&ctx.plans()?, args.plan_index)?.subset(&corpus, args.subset)?,
        None => corpus,
    };
    let model = build_signatures::<f64>(&train, &ctx.jex_config(&args.jex))?;
    model.save_json(&args.output)?;
    emit(
        out,
        &json!({ "descriptors": model.signatures.len(), "terms": model.doc_frequency.len(), "output": args.output }),
    )
}

fn train_head(ctx: &Ctx, args: TrainHeadArgs, out: &mut dyn Write) -> CliResult {
    let section = &ctx.config.train;
    let corpus = ctx.corpus(LoadMode::Train)?;
    let lowercase = args.lowercase || section.lowercase.unwrap_or(false);
    let vocab = ctx.vocab(lowercase)?;
    let plans = ctx.plans()?;
    let plan = plan_at(&plans, args.plan_index)?;
    if plan.subsets.len() < 2 {
        return Err(usage(
            "train-head needs a plan with training and validation subsets",
        ));
    }
    let train_docs = plan.subset(&corpus, 0)?;
    let val_docs = plan.subset(&corpus, 1)?;

    let labels = corpus.label_set();
    if ctx.thesaurus.is_some() || args.register {
        let thesaurus = ctx.thesaurus()?;
        if let Some(id) = labels.iter().find(|id| !thesaurus.contains(id)) {
            return Err(eurovoc_core::Error::UnknownDescriptor(id.to_string()).into());
        }
    }

    let defaults = TrainConfig::default();
    let config = TrainConfig {
        epochs: args.epochs.or(section.epochs).unwrap_or(defaults.epochs),
        batch_size: args
            .batch_size
            .or(section.batch_size)
            .unwrap_or(defaults.batch_size),
        peak_lr: args.lr.or(section.peak_lr).unwrap_or(defaults.peak_lr),
        warmup_steps: args.warmup_steps.or(section.warmup_steps),
        seed: args.seed.or(section.seed).unwrap_or(defaults.seed),
        ..defaults
    };
    let dim = args.dim.or(section.dim).unwrap_or(64);
    let encoder = MeanEmbeddingEncoder::new(vocab, dim, config.seed)?;
    let head = Head::new(dim, labels, config.seed.wrapping_add(1))?;
    let model = EncoderClassifier::new(encoder, head)?;
    let train: Vec<_> = train_docs
        .documents
        .iter()
        .map(|d| model.example(d))
        .collect();
    let val: Vec<_> = val_docs
        .documents
        .iter()
        .map(|d| model.example(d))
        .collect();
    let outcome = fit(model, &train, &val, &config)?;

    Checkpoint::new(outcome.model.head.clone(), Some(&outcome.model.encoder)).save(&args.output)?;
    if let Some(log) = &args.log {
        let file = File::create(log).map_err(|e| io_err(log, e))?;
        outcome.write_log_jsonl(BufWriter::new(file))?;
    }
    let mut summary = json!({
        "best_epoch": outcome.best_epoch(),
        "best_val_loss": outcome.best_val_loss(),
        "labels": outcome.model.head.num_labels(),
        "output": args.output,
    });
    if args.register {
        let mut registry = ctx.registry()?;
        let vocab_path = Ctx::require(&ctx.vocab, "vocab")?;
        let thesaurus_path = Ctx::require(&ctx.thesaurus, "thesaurus")?;
        let entry = registry.register(
            ctx.language()?,
            &args.output,
            vocab_path,
            thesaurus_path,
            lowercase,
        )?;
        summary["registered"] = json!(entry.sha256);
        registry.load(ctx.language()?)?;
    }
    emit(out, &summary)
}

fn eval_options(ctx: &Ctx, args: &EvalArgs) -> CliResult<EvalOptions> {
    let section = &ctx.config.eval;
    let mut opts = EvalOptions::default();
    if let Some(k) = &args.k {
        opts.k = k
            .as_slice()
            .try_into()
            .map_err(|_| usage("--k takes three cut-offs: ID,MT,DO"))?;
    } else if let Some(k) = section.k {
        opts.k = k;
    }
    if let Some(avg) = section.f1_averaging {
        opts.f1_averaging = avg;
    }
    if let Some(k) = section.micro_top_k {
        opts.micro_rule = PredictionRule::TopK(k);
    }
    Ok(opts)
}

fn eval(ctx: &Ctx, args: EvalArgs, out: &mut dyn Write) -> CliResult {
    let corpus = ctx.corpus(LoadMode::Train)?;
    let thesaurus = ctx.thesaurus()?;
    let opts = eval_options(ctx, &args)?;
    let all_plans = ctx.plans()?;
    let plans: Vec<SplitPlan> = match args.plan_index {
        Some(i) => vec![plan_at(&all_plans, i)?.clone()],
        None => all_plans,
    };
    let test_index = match args.test_index {
        Some(i) => i,
        None => plans
            .first()
            .map(|p| p.subsets.len().saturating_sub(1))
            .unwrap_or(0),
    };
    let report = match (args.kind, &args.model) {
        (ModelKind::Jex, None) => {
            let cfg = ctx.jex_config(&args.jex);
            evaluate_splits(&corpus, &thesaurus, &plans, test_index, &opts, |plan| {
                build_signatures::<f64>(&plan.subset(&corpus, 0)?, &cfg)
            })?
        }
        (ModelKind::Jex, Some(path)) => {
            let model = SignatureModel::<f64>::load_json(path)?;
            mean_over_plans(&plans, |plan| {
                evaluate_corpus(&model, &corpus, &thesaurus, plan, test_index, &opts)
            })?
        }
        (ModelKind::Head, None) => return Err(usage("--kind head requires --model")),
        (ModelKind::Head, Some(path)) => {
            let ckpt = Checkpoint::<f64>::load(path)?;
            let lowercase = args.lowercase || ctx.config.train.lowercase.unwrap_or(false);
            let table = ckpt.embeddings.ok_or_else(|| {
                CliError::Data(ServiceError::Bundle(
                    "checkpoint carries no token embeddings".into(),
                ))
            })?;
            let encoder = table.into_encoder(ctx.vocab(lowercase)?)?;
            let ranker = HeadRanker {
                head: &ckpt.head,
                encoder: &encoder,
            };
            mean_over_plans(&plans, |plan| {
                evaluate_corpus(&ranker, &corpus, &thesaurus, plan, test_index, &opts)
            })?
        }
    };
    if let Some(path) = &args.output {
        write_file(path, &report.to_json()?)?;
    }
    if let Some(path) = &args.csv {
        write_file(
            path,
            &MetricReport::table_csv(std::slice::from_ref(&report)),
        )?;
    }
    let levels: serde_json::Map<String, serde_json::Value> = report
        .levels
        .iter()
        .map(|l| {
            (
                l.level.to_string(),
                json!({ "k": l.k, "f1": report.f1(l.level), "precision": l.precision, "recall": l.recall,
                        "r_precision": l.r_precision, "ndcg": l.ndcg }),
            )
        })
        .collect();
    emit(
        out,
        &json!({ "splits": report.splits, "micro_f1": report.micro_f1, "levels": levels }),
    )
}

fn mean_over_plans(
    plans: &[SplitPlan],
    mut evaluate: impl FnMut(&SplitPlan) -> eurovoc_core::Result<MetricReport>,
) -> CliResult<MetricReport> {
    let reports = plans
        .iter()
        .map(&mut evaluate)
        .collect::<eurovoc_core::Result<Vec<_>>>()?;
    Ok(aggregate_reports(&reports)?)
}

fn classify(ctx: &Ctx, args: ClassifyArgs, out: &mut dyn Write) -> CliResult {
    let text = match (&args.text, &args.input) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => std::fs::read_to_string(path).map_err(|e| io_err(path, e))?,
        (None, None) => return Err(usage("give the text with --text or --input")),
    };
    let bundle = ctx.registry()?.load(ctx.language()?)?;
    let response = bundle.classify(&ClassifyRequest {
        text,
        level: args.level,
        num_labels: args.num_labels,
    })?;
    emit(out, &json!(response))
}

fn serve_cmd(ctx: &Ctx, args: ServeArgs) -> CliResult {
    let registry = ctx.registry()?;
    let bundles = registry.load_all()?;
    let addr = args
        .addr
        .or_else(|| ctx.config.serve.addr.clone())
        .unwrap_or_else(|| "127.0.0.1:8080".into());
    let runtime = tokio::runtime::Runtime::new().map_err(|e| io_err(Path::new("<runtime>"), e))?;
    runtime
        .block_on(serve(AppState::new(bundles), &addr))
        .map_err(|e| io_err(Path::new(&addr), e))
}

fn bench(ctx: &Ctx, args: BenchArgs, out: &mut dyn Write) -> CliResult {
    let section = &ctx.config.bench;
    let bundle = ctx.registry()?.load(ctx.language()?)?;
    let lengths = args
        .lengths
        .or_else(|| section.lengths.clone())
        .unwrap_or_else(|| DEFAULT_LENGTHS.to_vec());
    let trials = args.trials.or(section.trials).unwrap_or(100);
    let warmup = args.warmup.or(section.warmup).unwrap_or(5);
    let report = latency_benchmark(&bundle, &lengths, trials, warmup)?;
    let csv = report.to_csv();
    match &args.output {
        Some(path) => write_file(path, &csv),
        None => out
            .write_all(csv.as_bytes())
            .map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}
