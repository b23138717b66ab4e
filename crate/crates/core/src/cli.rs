//! Command-line front end.
//!
//! Each subcommand prints a `key: value` report on standard output and
//! writes artefacts only to the paths it is given. `--report` adds the same
//! information, plus the effective configuration, as JSON.
//!
//! Exit codes: 0 on success, 1 for usage, validation and I/O errors, 2 when
//! training fails numerically.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::embedding::{
    count_tokens, load_counts, load_embeddings, nearest_neighbors, save_embeddings, EmbeddingTable,
    LoadOptions, Normalization, VocabCounts,
};
use crate::knn::{neighbor_pool, refine_table, RefinementConfig};
use crate::lbfgs::LbfgsConfig;
use crate::mapper::MapperModel;
use crate::pipeline::{
    apply_mapping, filter_parser_vocab, select_training_pairs, train_mapper, train_mapper_with_observer,
    InitMode, LossWeightsConfig, MapperHyperParams, MappingOptions, MappingReport, Threshold,
    ThresholdSettings, DEFAULT_UNKNOWN_TOKEN,
};
use crate::synth::{generate, write_files, SynthSpec, TransformFamily};
use crate::treebank::{
    attachment_scores, attachment_scores_subset, bootstrap_test, ootv_stats, parse_conll,
    DepSentence, Metric,
};
use crate::tuner::{grid_search, split_pairs, write_table, CommandMetric, DevMetric, GridSpec, HeldOutLoss};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "embmap", version, about = "Map initial word embeddings into a task-trained space")]
pub struct Cli {
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: one per core). Outputs do not depend on it
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Lowercase all word forms on input
    #[arg(long, global = true)]
    pub lowercase: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Train a mapper on words present in both tables
    Train(TrainArgs),
    /// Replace rare and unseen words' vectors with mapped ones
    Map(MapArgs),
    /// Nearest-neighbour refinement baseline
    Knn(KnnArgs),
    /// Grid search over alpha, l1 and l2
    Tune(TuneArgs),
    /// Attachment scores, unseen-word statistics and significance
    Eval(EvalArgs),
    /// Unseen-word rates of an evaluation corpus
    Stats(StatsArgs),
    /// Drop task-trained words below the parser threshold
    Filter(FilterArgs),
    /// Generate synthetic embedding pairs and a toy treebank
    Synth(SynthArgs),
    /// Nearest neighbours of a word by cosine similarity
    Neighbors(NeighborsArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ThresholdArgs {
    /// Threshold preset: t1, t3, t5 or tinf
    #[arg(long, default_value = "t1")]
    pub thresholds: ThresholdSettings,
    /// Override the training threshold (integer or "inf")
    #[arg(long)]
    pub tau_t: Option<Threshold>,
    /// Override the mapping threshold
    #[arg(long)]
    pub tau_m: Option<Threshold>,
    /// Override the parser threshold
    #[arg(long)]
    pub tau_p: Option<Threshold>,
}

impl ThresholdArgs {
    pub fn resolve(&self) -> ThresholdSettings {
        ThresholdSettings {
            train: self.tau_t.unwrap_or(self.thresholds.train),
            map: self.tau_m.unwrap_or(self.thresholds.map),
            parser: self.tau_p.unwrap_or(self.thresholds.parser),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OptimizerArgs {
    /// Number of L-BFGS correction pairs
    #[arg(long, default_value_t = 10)]
    pub memory: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// Stop when the largest gradient component falls below this
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
    /// Stop when the relative objective decrease falls below this
    #[arg(long, default_value_t = 1e-9)]
    pub obj_rel_tol: f64,
}

impl OptimizerArgs {
    fn config(&self) -> LbfgsConfig {
        LbfgsConfig {
            memory: self.memory,
            max_iterations: self.max_iterations,
            grad_tol: self.grad_tol,
            obj_rel_tol: self.obj_rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Uniform,
    Zero,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// Hidden layer width
    #[arg(long, default_value_t = 400)]
    pub hidden: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Uniform)]
    pub init: InitArg,
    /// Half-width of the uniform initialisation
    #[arg(long, default_value_t = 0.01)]
    pub init_scale: f64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

impl ModelArgs {
    fn hyper(&self, weights: LossWeightsConfig, thresholds: ThresholdSettings, seed: u64) -> MapperHyperParams {
        MapperHyperParams {
            weights,
            hidden: self.hidden,
            thresholds,
            lbfgs: self.optimizer.config(),
            init: match self.init {
                InitArg::Uniform => InitMode::Uniform { scale: self.init_scale },
                InitArg::Zero => InitMode::Zero,
            },
            seed,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PairSources {
    /// Initial embeddings
    #[arg(long)]
    pub pairs_initial: PathBuf,
    /// Task-trained embeddings
    #[arg(long)]
    pub pairs_trained: PathBuf,
    /// Training-corpus word counts ("word count" per line)
    #[arg(long)]
    pub counts: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub sources: PairSources,
    /// Weight of the absolute-error term
    #[arg(long, default_value_t = 0.5, value_parser = parse_alpha)]
    pub alpha: f64,
    /// L1 penalty
    #[arg(long, default_value_t = 0.0, value_parser = parse_lambda)]
    pub l1: f64,
    /// L2 penalty
    #[arg(long, default_value_t = 0.0, value_parser = parse_lambda)]
    pub l2: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Print one line per optimiser iteration to standard error
    #[arg(long)]
    pub trace: bool,
    /// Checkpoint output
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report output
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvalVocabArgs {
    /// Evaluation treebank whose word types are tracked
    #[arg(long)]
    pub eval_conll: Option<PathBuf>,
    /// File of evaluation words, one per line
    #[arg(long)]
    pub eval_vocab: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct MapArgs {
    /// Mapper checkpoint
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub initial: PathBuf,
    #[arg(long)]
    pub trained: PathBuf,
    #[arg(long)]
    pub counts: PathBuf,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub eval: EvalVocabArgs,
    /// Reserved word form of the unknown-word row
    #[arg(long, default_value = DEFAULT_UNKNOWN_TOKEN)]
    pub unk_token: String,
    /// Merged table output
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct KnnArgs {
    /// Original (initial) embeddings
    #[arg(long)]
    pub initial: PathBuf,
    /// Refined (task-trained) embeddings
    #[arg(long)]
    pub trained: PathBuf,
    #[arg(long)]
    pub counts: PathBuf,
    /// Neighbours per word
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Divide by the summed similarity instead of using raw cosines
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub eval: EvalVocabArgs,
    #[arg(long, default_value = DEFAULT_UNKNOWN_TOKEN)]
    pub unk_token: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct TuneArgs {
    #[command(flatten)]
    pub sources: PairSources,
    /// Comma-separated alpha values (default 0, 0.1, ..., 1)
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Comma-separated l1 values (default 1e-1, ..., 1e-9, 0)
    #[arg(long, value_delimiter = ',')]
    pub l1s: Option<Vec<f64>>,
    /// Comma-separated l2 values (default 1e-1, ..., 1e-9, 0)
    #[arg(long, value_delimiter = ',')]
    pub l2s: Option<Vec<f64>>,
    /// Evaluate only this many grid points, drawn with the seed
    #[arg(long)]
    pub sample: Option<usize>,
    /// Share of pairs held out for the default metric
    #[arg(long, default_value_t = 0.1)]
    pub heldout_fraction: f64,
    /// Loss mixture used to score held-out pairs
    #[arg(long, default_value_t = 0.0, value_parser = parse_alpha)]
    pub eval_alpha: f64,
    /// Score with an external command instead; "{model}" becomes the
    /// checkpoint path and the UAS is read from its output
    #[arg(long, requires = "metric_workdir")]
    pub metric_command: Option<String>,
    /// Directory for the checkpoints handed to the metric command
    #[arg(long)]
    pub metric_workdir: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Tab-separated table of every grid point
    #[arg(long)]
    pub out: PathBuf,
    /// Retrain the best point on all pairs and save it here
    #[arg(long)]
    pub best_out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetArg {
    /// Sentences with at least one unseen word
    All,
    /// Sentences with at least one unseen word that has an initial vector
    Mappable,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Uas,
    Las,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainVocabArgs {
    /// Training treebank defining the seen vocabulary
    #[arg(long, conflicts_with = "train_counts")]
    pub train_conll: Option<PathBuf>,
    /// Training-corpus counts defining the seen vocabulary
    #[arg(long)]
    pub train_counts: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Skip tokens labelled "punct"
    #[arg(long)]
    pub exclude_punct: bool,
    #[command(flatten)]
    pub train: TrainVocabArgs,
    /// Initial embeddings, for the after-mapping unseen rate
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Sentences scored for the unseen-word UAS
    #[arg(long, value_enum, default_value_t = SubsetArg::All)]
    pub ootv_subset: SubsetArg,
    /// Baseline prediction; tests whether --pred is significantly better
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Uas)]
    pub metric: MetricArg,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    pub train: TrainVocabArgs,
    #[arg(long)]
    pub eval_conll: PathBuf,
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct FilterArgs {
    #[arg(long)]
    pub trained: PathBuf,
    #[arg(long)]
    pub counts: PathBuf,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long, default_value = DEFAULT_UNKNOWN_TOKEN)]
    pub unk_token: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    /// identity, linear, affine or saturating
    #[arg(long, default_value = "saturating")]
    pub transform: TransformFamily,
    /// Standard deviation of the target noise
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    /// Output files are named <prefix>.initial.vec, <prefix>.trained.vec, ...
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct NeighborsArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if (0.0..=1.0).contains(&a) => Ok(a),
        _ => Err("alpha must be in [0,1]".into()),
    }
}

fn parse_lambda(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(l) if l >= 0.0 && l.is_finite() => Ok(l),
        _ => Err("must be a non-negative number".into()),
    }
}

/// Parse `argv` (including the program name) and run it. Returns the exit
/// code.
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
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return 1;
        }
        // Fails only if the pool already exists, e.g. when run twice in
        // one process; the existing pool is then reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

/// Accumulates the human-readable report.
#[derive(Default)]
struct Report {
    lines: Vec<String>,
}

impl Report {
    fn kv(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("{}: {}", key, value));
    }

    fn print(&self) {
        let mut out = std::io::stdout().lock();
        for line in &self.lines {
            let _ = writeln!(out, "{}", line);
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a, T: Serialize> {
    command: &'a Command,
    seed: u64,
    lowercase: bool,
    result: T,
}

struct Context<'a> {
    cli: &'a Cli,
    norm: Normalization,
}

impl Context<'_> {
    fn table(&self, path: &Path) -> Result<EmbeddingTable> {
        let loaded = load_embeddings(
            path,
            LoadOptions {
                expected_dim: None,
                normalization: self.norm,
            },
        )?;
        Ok(loaded.table)
    }

    fn counts(&self, path: &Path) -> Result<VocabCounts> {
        load_counts(path, self.norm)
    }

    fn corpus(&self, path: &Path) -> Result<Vec<DepSentence>> {
        let mut corpus = parse_conll(path)?;
        if self.norm == Normalization::Lowercase {
            for token in corpus.iter_mut().flat_map(|s| s.tokens.iter_mut()) {
                token.form = token.form.to_lowercase();
            }
        }
        Ok(corpus)
    }

    fn eval_vocab(&self, args: &EvalVocabArgs) -> Result<Option<HashSet<String>>> {
        if args.eval_conll.is_none() && args.eval_vocab.is_none() {
            return Ok(None);
        }
        let mut vocab = HashSet::new();
        if let Some(path) = &args.eval_conll {
            for sentence in self.corpus(path)? {
                vocab.extend(sentence.tokens.into_iter().map(|t| t.form));
            }
        }
        if let Some(path) = &args.eval_vocab {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            vocab.extend(
                text.lines()
                    .filter_map(|l| l.split_whitespace().next())
                    .map(|w| self.norm.apply(w).into_owned()),
            );
        }
        Ok(Some(vocab))
    }

    fn train_vocab(&self, args: &TrainVocabArgs) -> Result<Option<HashSet<String>>> {
        Ok(match (&args.train_conll, &args.train_counts) {
            (Some(path), _) => Some(count_tokens(&self.corpus(path)?, self.norm).vocabulary()),
            (None, Some(path)) => Some(self.counts(path)?.vocabulary()),
            (None, None) => None,
        })
    }

    fn write_json<T: Serialize>(&self, path: Option<&PathBuf>, result: T) -> Result<()> {
        let Some(path) = path else { return Ok(()) };
        let report = JsonReport {
            command: &self.cli.command,
            seed: self.cli.seed,
            lowercase: self.cli.lowercase,
            result,
        };
        let mut text = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::invalid(format!("cannot serialise report: {}", e)))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let ctx = Context {
        cli,
        norm: if cli.lowercase {
            Normalization::Lowercase
        } else {
            Normalization::Identity
        },
    };
    match &cli.command {
        Command::Train(args) => cmd_train(&ctx, args),
        Command::Map(args) => cmd_map(&ctx, args),
        Command::Knn(args) => cmd_knn(&ctx, args),
        Command::Tune(args) => cmd_tune(&ctx, args),
        Command::Eval(args) => cmd_eval(&ctx, args),
        Command::Stats(args) => cmd_stats(&ctx, args),
        Command::Filter(args) => cmd_filter(&ctx, args),
        Command::Synth(args) => cmd_synth(&ctx, args),
        Command::Neighbors(args) => cmd_neighbors(&ctx, args),
    }
}

fn opt_threshold_kv(report: &mut Report, t: &ThresholdSettings) {
    report.kv("tau_t", t.train);
    report.kv("tau_m", t.map);
    report.kv("tau_p", t.parser);
}

fn cmd_train(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let thresholds = args.thresholds.resolve();
    let initial = ctx.table(&args.sources.pairs_initial)?;
    let trained = ctx.table(&args.sources.pairs_trained)?;
    let counts = ctx.counts(&args.sources.counts)?;
    let pairs = select_training_pairs(&initial, &trained, &counts, thresholds.train)?;

    let weights = LossWeightsConfig {
        alpha: args.alpha,
        l1: args.l1,
        l2: args.l2,
    };
    let hyper = args.model.hyper(weights, thresholds, ctx.cli.seed);
    let result = if args.trace {
        train_mapper_with_observer(&pairs, &hyper, |t| eprintln!("{}", t))?
    } else {
        train_mapper(&pairs, &hyper)?
    };
    result.model.save(&args.out)?;

    let s = &result.summary;
    let mut report = Report::default();
    report.kv("seed", ctx.cli.seed);
    report.kv("pairs", pairs.len());
    report.kv(
        "dims",
        format!("{} {} {}", pairs.input_dim(), hyper.hidden, pairs.output_dim()),
    );
    report.kv("alpha", args.alpha);
    report.kv("l1", args.l1);
    report.kv("l2", args.l2);
    opt_threshold_kv(&mut report, &thresholds);
    report.kv("termination", s.termination);
    report.kv("iterations", s.iterations);
    report.kv("evaluations", s.evaluations);
    report.kv("initial_objective", s.initial_objective);
    report.kv("final_objective", s.final_objective);
    report.kv("grad_inf_norm", s.grad_inf_norm);
    report.kv("model", args.out.display());
    report.print();

    #[derive(Serialize)]
    struct Out<'a> {
        hyper: &'a MapperHyperParams,
        pairs: usize,
        summary: &'a crate::pipeline::TrainingSummary,
    }
    ctx.write_json(
        args.report.as_ref(),
        Out {
            hyper: &hyper,
            pairs: pairs.len(),
            summary: s,
        },
    )
}

fn print_mapping(report: &MappingReport, seed: u64, thresholds: &ThresholdSettings, out: &Path) {
    let mut r = Report::default();
    r.kv("seed", seed);
    opt_threshold_kv(&mut r, thresholds);
    r.lines.extend(report.to_text().lines().map(str::to_string));
    r.kv("out", out.display());
    r.print();
    if !report.residual_words.is_empty() {
        eprintln!(
            "note: {} evaluation word(s) have no vector, e.g. '{}'",
            report.residual,
            report.residual_words[0]
        );
    }
}

fn cmd_map(ctx: &Context, args: &MapArgs) -> Result<()> {
    let thresholds = args.thresholds.resolve();
    let model = MapperModel::load(&args.model)?;
    let initial = ctx.table(&args.initial)?;
    let trained = ctx.table(&args.trained)?;
    let counts = ctx.counts(&args.counts)?;
    let eval_vocab = ctx.eval_vocab(&args.eval)?;
    let options = MappingOptions {
        tau_m: thresholds.map,
        eval_vocab: eval_vocab.as_ref(),
        unknown_token: Some(&args.unk_token),
    };
    let (merged, report) = apply_mapping(&model, &initial, &trained, &counts, &options)?;
    save_embeddings(&merged, &args.out)?;
    print_mapping(&report, ctx.cli.seed, &thresholds, &args.out);
    ctx.write_json(args.report.as_ref(), &report)
}

fn cmd_knn(ctx: &Context, args: &KnnArgs) -> Result<()> {
    let thresholds = args.thresholds.resolve();
    let initial = ctx.table(&args.initial)?;
    let trained = ctx.table(&args.trained)?;
    let counts = ctx.counts(&args.counts)?;
    let eval_vocab = ctx.eval_vocab(&args.eval)?;
    let mut pool = neighbor_pool(&initial, &trained, &counts, thresholds.train);
    pool.retain(|w| w != &args.unk_token);
    let config = RefinementConfig {
        k: args.k,
        pool,
        normalize_weights: args.normalize,
    };
    let options = MappingOptions {
        tau_m: thresholds.map,
        eval_vocab: eval_vocab.as_ref(),
        unknown_token: Some(&args.unk_token),
    };
    let (merged, report) = refine_table(&initial, &trained, &counts, &config, &options)?;
    save_embeddings(&merged, &args.out)?;
    print_mapping(&report, ctx.cli.seed, &thresholds, &args.out);
    ctx.write_json(args.report.as_ref(), &report)
}

fn cmd_tune(ctx: &Context, args: &TuneArgs) -> Result<()> {
    let thresholds = args.thresholds.resolve();
    let defaults = GridSpec::default();
    let grid = GridSpec {
        alphas: args.alphas.clone().unwrap_or(defaults.alphas),
        l1s: args.l1s.clone().unwrap_or(defaults.l1s),
        l2s: args.l2s.clone().unwrap_or(defaults.l2s),
    };
    grid.validate()?;
    let points = match args.sample {
        Some(n) => grid.subsample(n, ctx.cli.seed),
        None => grid.points(),
    };

    let initial = ctx.table(&args.sources.pairs_initial)?;
    let trained = ctx.table(&args.sources.pairs_trained)?;
    let counts = ctx.counts(&args.sources.counts)?;
    let pairs = select_training_pairs(&initial, &trained, &counts, thresholds.train)?;
    let base = args.model.hyper(
        LossWeightsConfig {
            alpha: 0.0,
            l1: 0.0,
            l2: 0.0,
        },
        thresholds,
        ctx.cli.seed,
    );

    let result = match (&args.metric_command, &args.metric_workdir) {
        (Some(command), Some(workdir)) => {
            let metric = CommandMetric {
                command: command.clone(),
                workdir: workdir.clone(),
            };
            grid_search(&pairs, &metric, &points, &base)?
        }
        _ => {
            let (train, heldout) = split_pairs(&pairs, args.heldout_fraction, ctx.cli.seed)?;
            let metric = HeldOutLoss {
                pairs: heldout,
                alpha: args.eval_alpha,
            };
            grid_search(&train, &metric as &dyn DevMetric, &points, &base)?
        }
    };

    let mut buf = Vec::new();
    write_table(&result, &mut buf).map_err(|e| Error::io(&args.out, e))?;
    fs::write(&args.out, buf).map_err(|e| Error::io(&args.out, e))?;

    if let Some(path) = &args.best_out {
        let mut hyper = base.clone();
        hyper.weights = LossWeightsConfig {
            alpha: result.best.alpha,
            l1: result.best.l1,
            l2: result.best.l2,
        };
        train_mapper(&pairs, &hyper)?.model.save(path)?;
    }

    let failed = result.table.iter().filter(|r| r.error.is_some()).count();
    let mut report = Report::default();
    report.kv("seed", ctx.cli.seed);
    report.kv("metric", &result.metric);
    report.kv("points", result.table.len());
    report.kv("failed", failed);
    report.kv("best_alpha", result.best.alpha);
    report.kv("best_l1", result.best.l1);
    report.kv("best_l2", result.best.l2);
    report.kv("best_score", result.best_score);
    report.kv("table", args.out.display());
    report.print();
    ctx.write_json(args.report.as_ref(), &result)
}

#[derive(Serialize)]
struct EvalOutput {
    sentences: usize,
    scores: crate::treebank::AttachmentScores,
    ootv: Option<crate::treebank::OotvStats>,
    ootv_scores: Option<crate::treebank::AttachmentScores>,
    bootstrap: Option<crate::treebank::BootstrapResult>,
}

fn cmd_eval(ctx: &Context, args: &EvalArgs) -> Result<()> {
    let gold = ctx.corpus(&args.gold)?;
    let pred = ctx.corpus(&args.pred)?;
    let scores = attachment_scores(&gold, &pred, args.exclude_punct)?;

    let train_vocab = ctx.train_vocab(&args.train)?;
    let initial = match &args.initial {
        Some(path) => Some(ctx.table(path)?),
        None => None,
    };
    let mut ootv = None;
    let mut ootv_scores = None;
    if let Some(vocab) = &train_vocab {
        let empty = EmbeddingTable::new(1)?;
        let stats = ootv_stats(vocab, &gold, initial.as_ref().unwrap_or(&empty));
        let subset = match args.ootv_subset {
            SubsetArg::All => &stats.ootv_sentences,
            SubsetArg::Mappable => &stats.mappable_ootv_sentences,
        };
        // An empty subset or one made only of punctuation has no score.
        ootv_scores = attachment_scores_subset(&gold, &pred, subset, args.exclude_punct).ok();
        ootv = Some(stats);
    }

    let metric = match args.metric {
        MetricArg::Uas => Metric::Uas,
        MetricArg::Las => Metric::Las,
    };
    let bootstrap = match &args.baseline {
        Some(path) => {
            let baseline = ctx.corpus(path)?;
            Some(bootstrap_test(
                &gold,
                &baseline,
                &pred,
                args.samples,
                ctx.cli.seed,
                metric,
                args.exclude_punct,
            )?)
        }
        None => None,
    };

    let mut report = Report::default();
    report.kv("seed", ctx.cli.seed);
    report.kv("sentences", gold.len());
    report.kv("tokens", scores.scored_tokens);
    report.kv("UAS", format!("{:.2}", scores.uas));
    report.kv("LAS", format!("{:.2}", scores.las));
    if let Some(stats) = &ootv {
        if initial.is_some() {
            report.kv("OOTV %", format!("{:.2} -> {:.2}", stats.rate_before, stats.rate_after));
        } else {
            report.kv("OOTV %", format!("{:.2}", stats.rate_before));
        }
        match &ootv_scores {
            Some(s) => report.kv("OOTV UAS", format!("{:.2}", s.uas)),
            None => report.kv("OOTV UAS", "n/a"),
        }
        let n = match args.ootv_subset {
            SubsetArg::All => stats.ootv_sentences.len(),
            SubsetArg::Mappable => stats.mappable_ootv_sentences.len(),
        };
        report.kv("#Sents", n);
    }
    if let Some(b) = &bootstrap {
        report.kv("baseline", format!("{:.2}", b.score_a));
        report.kv("p_value", b.p_value);
        report.kv("samples", b.samples);
        report.kv("rng", b.rng);
    }
    report.print();

    ctx.write_json(
        args.report.as_ref(),
        EvalOutput {
            sentences: gold.len(),
            scores,
            ootv,
            ootv_scores,
            bootstrap,
        },
    )
}

fn cmd_stats(ctx: &Context, args: &StatsArgs) -> Result<()> {
    let vocab = ctx
        .train_vocab(&args.train)?
        .ok_or_else(|| Error::invalid("one of --train-conll or --train-counts is required"))?;
    let corpus = ctx.corpus(&args.eval_conll)?;
    let initial = match &args.initial {
        Some(path) => ctx.table(path)?,
        None => EmbeddingTable::new(1)?,
    };
    let stats = ootv_stats(&vocab, &corpus, &initial);

    let mut report = Report::default();
    report.kv("sentences", corpus.len());
    report.kv("types", stats.types);
    report.kv("unseen_types", stats.unseen_types);
    report.kv("unmappable_types", stats.unmappable_types);
    report.kv("ootv_before", format!("{:.2}", stats.rate_before));
    report.kv("ootv_after", format!("{:.2}", stats.rate_after));
    report.kv("ootv_sentences", stats.ootv_sentences.len());
    report.kv("mappable_ootv_sentences", stats.mappable_ootv_sentences.len());
    report.print();
    ctx.write_json(args.report.as_ref(), &stats)
}

fn cmd_filter(ctx: &Context, args: &FilterArgs) -> Result<()> {
    let thresholds = args.thresholds.resolve();
    let trained = ctx.table(&args.trained)?;
    let counts = ctx.counts(&args.counts)?;
    let filtered = filter_parser_vocab(&trained, &counts, thresholds.parser, Some(&args.unk_token));
    save_embeddings(&filtered, &args.out)?;

    let mut report = Report::default();
    report.kv("tau_p", thresholds.parser);
    report.kv("kept", filtered.len());
    report.kv("dropped", trained.len() - filtered.len());
    report.kv("out", args.out.display());
    report.print();
    Ok(())
}

fn cmd_synth(ctx: &Context, args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        seed: ctx.cli.seed,
        pairs: args.pairs,
        dim: args.dim,
        family: args.transform,
        noise: args.noise,
        train_fraction: args.train_fraction,
    };
    let data = generate(&spec)?;
    let files = write_files(&data, &args.out_prefix, spec.seed)?;

    let mut report = Report::default();
    report.kv("seed", spec.seed);
    report.kv("transform", spec.family);
    report.kv("train_pairs", data.train.len());
    report.kv("heldout_pairs", data.heldout.len());
    for (key, path) in [
        ("initial", &files.initial),
        ("trained", &files.trained),
        ("heldout", &files.heldout),
        ("counts", &files.counts),
        ("gold", &files.gold),
        ("pred", &files.pred),
    ] {
        report.kv(key, path.display());
    }
    report.print();
    Ok(())
}

fn cmd_neighbors(ctx: &Context, args: &NeighborsArgs) -> Result<()> {
    let table = ctx.table(&args.table)?;
    let word = ctx.norm.apply(&args.word).into_owned();
    let query = table
        .get(&word)
        .ok_or_else(|| Error::invalid(format!("'{}' is not in {}", word, args.table.display())))?;
    let exclude = HashSet::from([word.clone()]);
    let neighbors = nearest_neighbors(&table, query, args.k, Some(&exclude))?;
    let mut out = std::io::stdout().lock();
    for n in neighbors {
        let _ = writeln!(out, "{}\t{:.6}", n.word, n.similarity);
    }
    Ok(())
}
