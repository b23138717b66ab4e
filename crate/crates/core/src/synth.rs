//! Synthetic `(initial, task-trained)` pairs from known transforms.
//!
//! Inputs are drawn from `U(-1, 1)` per component and targets are
//! `transform(x) + N(0, σ²)`. Everything is a function of the seed.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::embedding::{save_counts, save_embeddings, EmbeddingTable, VocabCounts};
use crate::mapper::TrainingPairs;
use crate::treebank::{write_conll, DepSentence, DepToken};
use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(rows * cols, data.len(), "matrix entries"));
        }
        Ok(Matrix { rows, cols, data })
    }

    fn random<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matrix-vector dimension mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformFamily {
    Identity,
    Linear,
    Affine,
    Saturating,
}

impl fmt::Display for TransformFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformFamily::Identity => "identity",
            TransformFamily::Linear => "linear",
            TransformFamily::Affine => "affine",
            TransformFamily::Saturating => "saturating",
        })
    }
}

impl FromStr for TransformFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(TransformFamily::Identity),
            "linear" => Ok(TransformFamily::Linear),
            "affine" => Ok(TransformFamily::Affine),
            "saturating" => Ok(TransformFamily::Saturating),
            _ => Err(Error::invalid(format!(
                "unknown transform '{}' (expected identity, linear, affine or saturating)",
                s
            ))),
        }
    }
}

/// Ground-truth map from input to target space.
#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    Identity,
    Linear(Matrix),
    Affine(Matrix, Vec<f64>),
    /// `A·tanh(B·x) + c`.
    Saturating { a: Matrix, b: Matrix, c: Vec<f64> },
}

impl Transform {
    /// Draw a random transform of the given family on `dim`-dimensional
    /// vectors.
    ///
    /// Linear maps have entries `U(-1, 1)/√d`. The saturating family uses
    /// `dim / 2` (at least one) hidden units with `B` scaled so that `B·x`
    /// has unit variance, which keeps the tanh well inside its nonlinear
    /// range.
    pub fn sample<R: Rng>(family: TransformFamily, dim: usize, rng: &mut R) -> Self {
        let d = dim as f64;
        let offset = |rng: &mut R| (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        match family {
            TransformFamily::Identity => Transform::Identity,
            TransformFamily::Linear => Transform::Linear(Matrix::random(dim, dim, 1.0 / d.sqrt(), rng)),
            TransformFamily::Affine => {
                let a = Matrix::random(dim, dim, 1.0 / d.sqrt(), rng);
                Transform::Affine(a, offset(rng))
            }
            TransformFamily::Saturating => {
                let k = (dim / 2).max(1);
                let b = Matrix::random(k, dim, 3.0 / d.sqrt(), rng);
                let a = Matrix::random(dim, k, 1.0 / (k as f64).sqrt(), rng);
                Transform::Saturating { a, b, c: offset(rng) }
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Transform::Identity => x.to_vec(),
            Transform::Linear(a) => a.mul_vec(x),
            Transform::Affine(a, c) => {
                let mut y = a.mul_vec(x);
                y.iter_mut().zip(c).for_each(|(y, c)| *y += c);
                y
            }
            Transform::Saturating { a, b, c } => {
                let h: Vec<f64> = b.mul_vec(x).into_iter().map(f64::tanh).collect();
                let mut y = a.mul_vec(&h);
                y.iter_mut().zip(c).for_each(|(y, c)| *y += c);
                y
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub pairs: usize,
    pub dim: usize,
    pub family: TransformFamily,
    pub noise: f64,
    /// Share of pairs in the training split.
    pub train_fraction: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            pairs: 2000,
            dim: 10,
            family: TransformFamily::Saturating,
            noise: 0.01,
            train_fraction: 0.9,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.pairs < 2 {
            return Err(Error::invalid("need at least 2 pairs"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid("noise must be a non-negative number"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train fraction must be in (0,1)"));
        }
        Ok(())
    }

    fn train_len(&self) -> usize {
        let n = (self.pairs as f64 * self.train_fraction).round() as usize;
        n.clamp(1, self.pairs - 1)
    }
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub train: TrainingPairs,
    pub heldout: TrainingPairs,
    pub truth: Transform,
}

/// Word form of the `i`-th generated pair, counting from zero.
pub fn synth_word(i: usize) -> String {
    format!("w{:06}", i + 1)
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = Transform::sample(spec.family, spec.dim, &mut rng);
    sample_pairs(spec, truth, &mut rng)
}

/// Like [`generate`] with a caller-supplied transform.
pub fn generate_with(spec: &SynthSpec, truth: Transform) -> Result<SynthData> {
    spec.validate()?;
    let probe = truth.apply(&vec![0.0; spec.dim]);
    if probe.len() != spec.dim {
        return Err(Error::dim(spec.dim, probe.len(), "transform output"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    sample_pairs(spec, truth, &mut rng)
}

fn sample_pairs(spec: &SynthSpec, truth: Transform, rng: &mut ChaCha8Rng) -> Result<SynthData> {
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::invalid(e.to_string()))?;
    let train_len = spec.train_len();
    let mut train = TrainingPairs::new(spec.dim, spec.dim)?;
    let mut heldout = TrainingPairs::new(spec.dim, spec.dim)?;
    for i in 0..spec.pairs {
        let x: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y = truth.apply(&x);
        if spec.noise > 0.0 {
            y.iter_mut().for_each(|v| *v += noise.sample(rng));
        }
        let split = if i < train_len { &mut train } else { &mut heldout };
        split.push(synth_word(i), &x, &y)?;
    }
    Ok(SynthData {
        train,
        heldout,
        truth,
    })
}

/// Paths written by [`write_files`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthFiles {
    /// Inputs of every pair.
    pub initial: PathBuf,
    /// Targets of the training pairs.
    pub trained: PathBuf,
    /// Targets of the held-out pairs.
    pub heldout: PathBuf,
    /// Corpus counts: training words get 1 to 10, held-out words are absent.
    pub counts: PathBuf,
    /// A toy treebank over the generated words and a perturbed parse of it.
    pub gold: PathBuf,
    pub pred: PathBuf,
}

impl SynthFiles {
    pub fn with_prefix(prefix: &Path) -> Self {
        let with = |suffix: &str| {
            let mut name = prefix.as_os_str().to_owned();
            name.push(suffix);
            PathBuf::from(name)
        };
        SynthFiles {
            initial: with(".initial.vec"),
            trained: with(".trained.vec"),
            heldout: with(".heldout.vec"),
            counts: with(".counts"),
            gold: with(".gold.conll"),
            pred: with(".pred.conll"),
        }
    }
}

const LABELS: [&str; 4] = ["nsubj", "dobj", "amod", "prep"];

/// Write `data` as embedding, count and treebank files next to `prefix`.
///
/// Sentences cover every word once, in order, with 5 to 15 tokens each.
/// Gold heads form a random tree and about 10% of tokens get a different
/// head or label in the prediction.
pub fn write_files(data: &SynthData, prefix: &Path, seed: u64) -> Result<SynthFiles> {
    let files = SynthFiles::with_prefix(prefix);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);

    let mut initial = EmbeddingTable::new(data.train.input_dim())?;
    let mut trained = EmbeddingTable::new(data.train.output_dim())?;
    let mut heldout = EmbeddingTable::new(data.heldout.output_dim())?;
    let mut counts = VocabCounts::new();
    for i in 0..data.train.len() {
        initial.insert(data.train.word(i), data.train.input(i))?;
        trained.insert(data.train.word(i), data.train.target(i))?;
        counts.add(data.train.word(i), rng.random_range(1..=10));
    }
    for i in 0..data.heldout.len() {
        initial.insert(data.heldout.word(i), data.heldout.input(i))?;
        heldout.insert(data.heldout.word(i), data.heldout.target(i))?;
    }
    save_embeddings(&initial, &files.initial)?;
    save_embeddings(&trained, &files.trained)?;
    save_embeddings(&heldout, &files.heldout)?;
    save_counts(&counts, &files.counts)?;

    let mut gold = Vec::new();
    let mut pred = Vec::new();
    let words = initial.words();
    let mut start = 0;
    while start < words.len() {
        let len = rng.random_range(5..=15).min(words.len() - start);
        let mut g = DepSentence::default();
        let mut p = DepSentence::default();
        for (j, word) in words[start..start + len].iter().enumerate() {
            let head = if j == 0 { 0 } else { rng.random_range(1..=j) };
            let label = if head == 0 { "root" } else { LABELS[rng.random_range(0..LABELS.len())] };
            let token = DepToken {
                form: word.clone(),
                pos: "NN".into(),
                head,
                label: label.into(),
            };
            let mut guess = token.clone();
            if rng.random_bool(0.1) {
                if len > 1 && rng.random_bool(0.5) {
                    let mut h = rng.random_range(0..len);
                    if h == j + 1 {
                        h = 0;
                    }
                    guess.head = h;
                } else {
                    guess.label = LABELS[rng.random_range(0..LABELS.len())].into();
                }
            }
            g.tokens.push(token);
            p.tokens.push(guess);
        }
        gold.push(g);
        pred.push(p);
        start += len;
    }
    write_treebank(&gold, &files.gold)?;
    write_treebank(&pred, &files.pred)?;
    Ok(files)
}

fn write_treebank(sentences: &[DepSentence], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_conll(sentences, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
