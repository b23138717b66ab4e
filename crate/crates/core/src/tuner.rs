//! Grid search over the loss mixture and regularisation strengths.
//!
//! Losses are sums over training pairs, so the useful range of `λ1` and
//! `λ2` shifts with the number of pairs. Tune on data of the size used for
//! the final model.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::lbfgs::Termination;
use crate::mapper::{data_loss, MapperModel, TrainingPairs};
use crate::pipeline::{train_mapper, LossWeightsConfig, MapperHyperParams};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub l1s: Vec<f64>,
    pub l2s: Vec<f64>,
}

/// `{1e-1, 1e-2, ..., 1e-9, 0}`.
fn default_lambdas() -> Vec<f64> {
    let mut v: Vec<f64> = (1..=9).map(|e| 10f64.powi(-e)).collect();
    v.push(0.0);
    v
}

impl Default for GridSpec {
    /// 11 values of α in steps of 0.1 and 10 values for each λ.
    fn default() -> Self {
        GridSpec {
            alphas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            l1s: default_lambdas(),
            l2s: default_lambdas(),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.l1s.is_empty() || self.l2s.is_empty() {
            return Err(Error::invalid("grid value lists must be non-empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::invalid(format!("alpha must be in [0,1], got {}", a)));
        }
        if let Some(l) = self.l1s.iter().chain(&self.l2s).find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(Error::invalid(format!("lambda must be non-negative, got {}", l)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.alphas.len() * self.l1s.len() * self.l2s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every point, α varying slowest and λ2 fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &alpha in &self.alphas {
            for &l1 in &self.l1s {
                for &l2 in &self.l2s {
                    out.push(GridPoint { alpha, l1, l2 });
                }
            }
        }
        out
    }

    /// `n` points drawn without replacement, kept in grid order.
    pub fn subsample(&self, n: usize, seed: u64) -> Vec<GridPoint> {
        let all = self.points();
        if n >= all.len() {
            return all;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, all.len(), n).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| all[i]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub l1: f64,
    pub l2: f64,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha={} l1={:e} l2={:e}", self.alpha, self.l1, self.l2)
    }
}

/// Scores a trained mapper; higher is better.
pub trait DevMetric: Sync {
    fn name(&self) -> String;
    fn score(&self, model: &MapperModel, point: &GridPoint) -> Result<f64>;
}

/// Negative mean loss on held-out pairs.
///
/// The loss mixture is fixed by `alpha` rather than taken from the grid
/// point, so scores for different α stay comparable.
#[derive(Clone, Debug)]
pub struct HeldOutLoss {
    pub pairs: TrainingPairs,
    pub alpha: f64,
}

impl DevMetric for HeldOutLoss {
    fn name(&self) -> String {
        format!("heldout-loss(alpha={})", self.alpha)
    }

    fn score(&self, model: &MapperModel, _point: &GridPoint) -> Result<f64> {
        if self.pairs.is_empty() {
            return Err(Error::invalid("held-out set is empty"));
        }
        Ok(-data_loss(model, &self.pairs, self.alpha)? / self.pairs.len() as f64)
    }
}

/// Runs an external command on a saved checkpoint and reads a UAS from its
/// output.
///
/// `{model}` in the command is replaced by the checkpoint path, which lives
/// in `workdir`. The score is the last number on the last output line that
/// mentions `UAS`, or else the whole output parsed as one number.
#[derive(Clone, Debug)]
pub struct CommandMetric {
    pub command: String,
    pub workdir: PathBuf,
}

impl CommandMetric {
    fn checkpoint_path(&self, point: &GridPoint) -> PathBuf {
        self.workdir
            .join(format!("mapper-a{}-l1{:e}-l2{:e}.ckpt", point.alpha, point.l1, point.l2))
    }
}

/// Pull a score out of a parser's evaluation output.
pub fn parse_uas(output: &str) -> Option<f64> {
    let number = |tok: &str| {
        tok.trim_matches(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
            .parse::<f64>()
            .ok()
    };
    if let Some(line) = output.lines().rev().find(|l| l.contains("UAS")) {
        return line.split_whitespace().rev().find_map(number);
    }
    output.trim().parse().ok()
}

impl DevMetric for CommandMetric {
    fn name(&self) -> String {
        format!("command({})", self.command)
    }

    fn score(&self, model: &MapperModel, point: &GridPoint) -> Result<f64> {
        let path = self.checkpoint_path(point);
        model.save(&path)?;
        let cmd = self.command.replace("{model}", &path.to_string_lossy());
        let output = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .current_dir(&self.workdir)
            .output()
            .map_err(|e| Error::io(&self.workdir, e))?;
        if !output.status.success() {
            return Err(Error::invalid(format!("metric command failed ({}): {}", output.status, cmd)));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        parse_uas(&stdout)
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::invalid(format!("no UAS in output of: {}", cmd)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub point: GridPoint,
    /// `-inf` when training or scoring failed.
    pub score: f64,
    pub termination: Option<Termination>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneResult {
    pub best: GridPoint,
    pub best_score: f64,
    pub metric: String,
    pub table: Vec<GridRow>,
}

/// Train one mapper per point and keep the best by `metric`; ties go to
/// the earlier point.
///
/// Every point shares `base`'s seed and initialisation. Points run in
/// parallel, but the table is in the order given.
pub fn grid_search(
    train: &TrainingPairs,
    metric: &dyn DevMetric,
    points: &[GridPoint],
    base: &MapperHyperParams,
) -> Result<TuneResult> {
    if points.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    let table: Vec<GridRow> = points
        .par_iter()
        .map(|&point| {
            let mut hyper = base.clone();
            hyper.weights = LossWeightsConfig {
                alpha: point.alpha,
                l1: point.l1,
                l2: point.l2,
            };
            let outcome = train_mapper(train, &hyper).and_then(|trained| {
                let score = metric.score(&trained.model, &point)?;
                Ok((score, trained.summary.termination))
            });
            match outcome {
                Ok((score, termination)) if !score.is_nan() => GridRow {
                    point,
                    score,
                    termination: Some(termination),
                    error: None,
                },
                Ok((_, termination)) => GridRow {
                    point,
                    score: f64::NEG_INFINITY,
                    termination: Some(termination),
                    error: Some("metric returned NaN".into()),
                },
                Err(e) => GridRow {
                    point,
                    score: f64::NEG_INFINITY,
                    termination: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, row) in table.iter().enumerate().filter(|(_, r)| r.error.is_none()) {
        if best.is_none_or(|b| row.score > table[b].score) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        let first = table[0].error.as_deref().unwrap_or_default();
        return Err(Error::invalid(format!("every grid point failed (first: {})", first)));
    };

    Ok(TuneResult {
        best: table[best].point,
        best_score: table[best].score,
        metric: metric.name(),
        table,
    })
}

/// Seeded shuffle of the pairs into `(train, held-out)`, with
/// `heldout_fraction` of them (at least one of each) held out.
pub fn split_pairs(
    pairs: &TrainingPairs,
    heldout_fraction: f64,
    seed: u64,
) -> Result<(TrainingPairs, TrainingPairs)> {
    if !(heldout_fraction > 0.0 && heldout_fraction < 1.0) {
        return Err(Error::invalid("held-out fraction must be in (0,1)"));
    }
    if pairs.len() < 2 {
        return Err(Error::invalid("need at least 2 pairs to split"));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held = ((pairs.len() as f64 * heldout_fraction).round() as usize).clamp(1, pairs.len() - 1);
    let (dev, train) = order.split_at(held);
    let mut train = train.to_vec();
    let mut dev = dev.to_vec();
    train.sort_unstable();
    dev.sort_unstable();
    Ok((pairs.select(&train), pairs.select(&dev)))
}

/// The audit table as tab-separated text with a header line.
pub fn write_table<W: Write>(result: &TuneResult, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "alpha\tl1\tl2\tscore\ttermination\terror")?;
    for row in &result.table {
        writeln!(
            out,
            "{}\t{:e}\t{:e}\t{}\t{}\t{}",
            row.point.alpha,
            row.point.l1,
            row.point.l2,
            row.score,
            row.termination.map_or_else(|| "-".to_string(), |t| t.to_string()),
            row.error.as_deref().unwrap_or("-"),
        )?;
    }
    Ok(())
}
