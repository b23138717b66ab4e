//! Train-and-apply workflow around the mapper.
//!
//! Three frequency thresholds over the annotated training corpus control
//! the workflow:
//!
//! * `τ_t`: the mapper trains on words seen at least `τ_t` times;
//! * `τ_m`: at test time, words seen fewer than `τ_m` times get mapped
//!   vectors instead of their task-trained ones;
//! * `τ_p`: the parser keeps task-trained vectors only for words seen at
//!   least `τ_p` times.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::{EmbeddingTable, VocabCounts};
use crate::lbfgs::{self, IterationTrace, LbfgsConfig, Termination};
use crate::mapper::{LossWeights, MapperDims, MapperModel, Objective, TrainingPairs};
use crate::{Error, Result};

/// Word form of the parser's unknown-word row.
pub const DEFAULT_UNKNOWN_TOKEN: &str = "<UNK>";

/// A minimum corpus count, or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Threshold {
    Count(u64),
    Infinite,
}

impl Threshold {
    /// Whether a word seen `count` times reaches the threshold.
    pub fn admits(self, count: u64) -> bool {
        match self {
            Threshold::Count(t) => count >= t,
            Threshold::Infinite => false,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Count(t) => write!(f, "{}", t),
            Threshold::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "∞" => Ok(Threshold::Infinite),
            _ => s
                .parse()
                .map(Threshold::Count)
                .map_err(|_| Error::invalid(format!("invalid threshold '{}'", s))),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdSettings {
    pub train: Threshold,
    pub map: Threshold,
    pub parser: Threshold,
}

impl ThresholdSettings {
    pub fn uniform(t: u64) -> Self {
        ThresholdSettings {
            train: Threshold::Count(t),
            map: Threshold::Count(t),
            parser: Threshold::Count(t),
        }
    }

    /// Settings `t1`, `t3`, `t5` (all thresholds equal) and `tinf` (map
    /// every word, train and parser thresholds 5).
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "t1" => Some(Self::uniform(1)),
            "t3" => Some(Self::uniform(3)),
            "t5" => Some(Self::uniform(5)),
            "tinf" | "t∞" => Some(ThresholdSettings {
                train: Threshold::Count(5),
                map: Threshold::Infinite,
                parser: Threshold::Count(5),
            }),
            _ => None,
        }
    }
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        Self::uniform(1)
    }
}

impl FromStr for ThresholdSettings {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::preset(s).ok_or_else(|| {
            Error::invalid(format!("unknown threshold preset '{}' (expected t1, t3, t5 or tinf)", s))
        })
    }
}

/// Pairs `(initial, task-trained)` for every word in both tables seen at
/// least `tau_t` times, in trained-table order.
pub fn select_training_pairs(
    initial: &EmbeddingTable,
    trained: &EmbeddingTable,
    counts: &VocabCounts,
    tau_t: Threshold,
) -> Result<TrainingPairs> {
    let mut pairs = TrainingPairs::new(initial.dim(), trained.dim())?;
    for (word, target) in trained.iter() {
        if !tau_t.admits(counts.get(word)) {
            continue;
        }
        if let Some(input) = initial.get(word) {
            pairs.push(word, input, target)?;
        }
    }
    if pairs.is_empty() {
        return Err(Error::invalid(format!("no mapper training data at τ_t = {}", tau_t)));
    }
    Ok(pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum InitMode {
    /// Independent draws from `(-scale, scale)`.
    Uniform { scale: f64 },
    /// All parameters zero. With hardtanh, only `b2` ever moves away from
    /// zero: hidden activations vanish, and with them every gradient except
    /// the output bias's.
    Zero,
}

impl Default for InitMode {
    fn default() -> Self {
        InitMode::Uniform { scale: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapperHyperParams {
    #[serde(flatten)]
    pub weights: LossWeightsConfig,
    pub hidden: usize,
    pub thresholds: ThresholdSettings,
    pub lbfgs: LbfgsConfig,
    pub init: InitMode,
    pub seed: u64,
}

/// Serialisable mirror of [`LossWeights`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossWeightsConfig {
    pub alpha: f64,
    pub l1: f64,
    pub l2: f64,
}

impl From<LossWeightsConfig> for LossWeights {
    fn from(w: LossWeightsConfig) -> Self {
        LossWeights {
            alpha: w.alpha,
            l1: w.l1,
            l2: w.l2,
        }
    }
}

impl Default for MapperHyperParams {
    fn default() -> Self {
        MapperHyperParams {
            weights: LossWeightsConfig {
                alpha: 0.5,
                l1: 0.0,
                l2: 0.0,
            },
            hidden: 400,
            thresholds: ThresholdSettings::default(),
            lbfgs: LbfgsConfig::default(),
            init: InitMode::default(),
            seed: 0,
        }
    }
}

impl MapperHyperParams {
    pub fn loss_weights(&self) -> LossWeights {
        self.weights.into()
    }
}

/// How an optimisation run ended.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingSummary {
    pub initial_objective: f64,
    pub final_objective: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

#[derive(Clone, Debug)]
pub struct TrainedMapper {
    pub model: MapperModel,
    pub summary: TrainingSummary,
}

pub fn train_mapper(pairs: &TrainingPairs, hyper: &MapperHyperParams) -> Result<TrainedMapper> {
    train_mapper_with_observer(pairs, hyper, |_| {})
}

/// Train a mapper, reporting each L-BFGS iteration to `observe`.
pub fn train_mapper_with_observer<O>(
    pairs: &TrainingPairs,
    hyper: &MapperHyperParams,
    observe: O,
) -> Result<TrainedMapper>
where
    O: FnMut(&IterationTrace),
{
    if pairs.is_empty() {
        return Err(Error::invalid("no training pairs"));
    }
    let dims = MapperDims::new(pairs.input_dim(), hyper.hidden, pairs.output_dim())?;
    let objective = Objective::new(dims, pairs, hyper.loss_weights())?;

    let init = match hyper.init {
        InitMode::Uniform { scale } if scale > 0.0 && scale.is_finite() => {
            MapperModel::random_uniform(dims, scale, hyper.seed)
        }
        InitMode::Uniform { .. } => {
            return Err(Error::invalid("initialisation scale must be positive"))
        }
        InitMode::Zero => MapperModel::zeros(dims),
    };

    let result = lbfgs::minimize_with_observer(
        |theta| objective.evaluate(theta),
        init.into_flat(),
        &hyper.lbfgs,
        observe,
    )?;
    if !result.value.is_finite() {
        return Err(Error::Numerical("mapper training diverged".into()));
    }

    Ok(TrainedMapper {
        model: MapperModel::from_flat(dims, result.params)?,
        summary: TrainingSummary {
            initial_objective: result.initial_value,
            final_objective: result.value,
            grad_inf_norm: result.grad_inf_norm,
            iterations: result.iterations,
            evaluations: result.evaluations,
            termination: result.termination,
        },
    })
}

/// Inputs to [`apply_mapping`] besides the tables.
#[derive(Clone, Debug)]
pub struct MappingOptions<'a> {
    pub tau_m: Threshold,
    /// Evaluation word types; those with no vector anywhere are reported.
    pub eval_vocab: Option<&'a HashSet<String>>,
    /// Row of the trained table that is always kept as is.
    pub unknown_token: Option<&'a str>,
}

impl Default for MappingOptions<'_> {
    fn default() -> Self {
        MappingOptions {
            tau_m: Threshold::Count(1),
            eval_vocab: None,
            unknown_token: Some(DEFAULT_UNKNOWN_TOKEN),
        }
    }
}

/// How the considered vocabulary (trained ∪ initial ∪ evaluation words) was
/// resolved. `mapped + kept + residual == considered`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MappingReport {
    pub considered: usize,
    pub mapped: usize,
    pub kept: usize,
    /// Kept task-trained words that fell below `τ_m` but had no initial
    /// vector to map. Included in `kept`.
    pub kept_unmappable: usize,
    pub residual: usize,
    /// Residual words, sorted.
    pub residual_words: Vec<String>,
    /// Percentage of evaluation types without a vector in the trained
    /// table, and in the merged table.
    pub ootv_before: Option<f64>,
    pub ootv_after: Option<f64>,
}

impl MappingReport {
    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}", v));
        format!(
            "considered: {}\nmapped: {}\nkept: {}\nkept_unmappable: {}\nresidual: {}\nootv_before: {}\nootv_after: {}\n",
            self.considered,
            self.mapped,
            self.kept,
            self.kept_unmappable,
            self.residual,
            opt(self.ootv_before),
            opt(self.ootv_after),
        )
    }
}

/// Merge task-trained vectors with mapped initial vectors.
///
/// A word keeps its task-trained vector when it is seen at least `τ_m`
/// times. Otherwise a word with an initial vector gets
/// `model.forward(initial)`. A task-trained word below `τ_m` without an
/// initial vector keeps its task-trained vector. Words with neither vector
/// are reported as residual and left out.
pub fn apply_mapping(
    model: &MapperModel,
    initial: &EmbeddingTable,
    trained: &EmbeddingTable,
    counts: &VocabCounts,
    options: &MappingOptions<'_>,
) -> Result<(EmbeddingTable, MappingReport)> {
    let dims = model.dims();
    if dims.input != initial.dim() {
        return Err(Error::dim(dims.input, initial.dim(), "mapper input vs initial table"));
    }
    if dims.output != trained.dim() {
        return Err(Error::dim(dims.output, trained.dim(), "mapper output vs trained table"));
    }
    merge_tables(initial, trained, counts, options, |x| model.forward(x))
}

/// The merge behind [`apply_mapping`], with the replacement vector for a
/// word computed by `transform` from its initial vector.
pub fn merge_tables<F>(
    initial: &EmbeddingTable,
    trained: &EmbeddingTable,
    counts: &VocabCounts,
    options: &MappingOptions<'_>,
    transform: F,
) -> Result<(EmbeddingTable, MappingReport)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let is_unknown = |w: &str| options.unknown_token == Some(w);
    let keeps = |w: &str| is_unknown(w) || options.tau_m.admits(counts.get(w));

    enum Source<'a> {
        Trained(&'a [f64]),
        Mapped(&'a [f64]),
    }

    let mut plan: Vec<(&str, Source)> = Vec::with_capacity(trained.len() + initial.len());
    let mut kept_unmappable = 0;
    for (word, vector) in trained.iter() {
        if keeps(word) {
            plan.push((word, Source::Trained(vector)));
        } else if let Some(x) = initial.get(word) {
            plan.push((word, Source::Mapped(x)));
        } else {
            kept_unmappable += 1;
            plan.push((word, Source::Trained(vector)));
        }
    }
    for (word, x) in initial.iter() {
        if !trained.contains(word) {
            plan.push((word, Source::Mapped(x)));
        }
    }

    let outputs: Vec<Option<Vec<f64>>> = plan
        .par_iter()
        .map(|(_, source)| match source {
            Source::Mapped(x) => transform(x).map(Some),
            Source::Trained(_) => Ok(None),
        })
        .collect::<Result<_>>()?;

    let mut merged = EmbeddingTable::new(trained.dim())?;
    let mut mapped = 0;
    for ((word, source), output) in plan.iter().zip(outputs) {
        match (source, output) {
            (Source::Trained(v), _) => {
                merged.insert(*word, v)?;
            }
            (Source::Mapped(_), Some(v)) => {
                mapped += 1;
                merged.insert(*word, &v)?;
            }
            (Source::Mapped(_), None) => unreachable!("mapped words always have output"),
        }
    }

    let mut residual_words: Vec<String> = options
        .eval_vocab
        .map(|vocab| {
            vocab
                .iter()
                .filter(|w| !merged.contains(w))
                .cloned()
                .collect()
        })
        .unwrap_or_default();
    residual_words.sort();

    let rate = |has_vector: &dyn Fn(&str) -> bool| {
        options.eval_vocab.and_then(|vocab| {
            (!vocab.is_empty()).then(|| {
                let missing = vocab.iter().filter(|w| !has_vector(w)).count();
                100.0 * missing as f64 / vocab.len() as f64
            })
        })
    };
    let ootv_before = rate(&|w| trained.contains(w) && !is_unknown(w));
    let ootv_after = rate(&|w| merged.contains(w) && !is_unknown(w));

    let report = MappingReport {
        considered: merged.len() + residual_words.len(),
        mapped,
        kept: merged.len() - mapped,
        kept_unmappable,
        residual: residual_words.len(),
        residual_words,
        ootv_before,
        ootv_after,
    };
    Ok((merged, report))
}

/// Drop task-trained words seen fewer than `tau_p` times, keeping the
/// unknown-word row.
pub fn filter_parser_vocab(
    trained: &EmbeddingTable,
    counts: &VocabCounts,
    tau_p: Threshold,
    unknown_token: Option<&str>,
) -> EmbeddingTable {
    let mut out = EmbeddingTable::new(trained.dim()).expect("positive dim");
    for (word, vector) in trained.iter() {
        if unknown_token == Some(word) || tau_p.admits(counts.get(word)) {
            out.insert(word, vector).expect("vector from a valid table");
        }
    }
    out
}
