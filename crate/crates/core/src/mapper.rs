//! The embedding mapper: a single hidden layer with a hardtanh
//! non-linearity,
//!
//! ```text
//! G(x) = W2 · hardtanh(W1 · x + b1) + b2
//! ```
//!
//! trained on pairs of (initial, task-trained) vectors by minimising
//!
//! ```text
//! F(θ) = Σ_i loss(y_i, G(x_i)) + λ1 ‖θ‖₁ + (λ2 / 2) ‖θ‖₂²
//! loss(y, ŷ) = α Σ_j |y_j − ŷ_j| + (1 − α) Σ_j (y_j − ŷ_j)²
//! ```
//!
//! Sums run over pairs and dimensions without averaging. Gradients use
//! `sign(0) = 0` for absolute values and a hardtanh derivative of 1 on the
//! closed interval `[-1, 1]`.
//!
//! Parameters are stored flat in the canonical order `W1` (row-major,
//! `hidden × input`), `b1`, `W2` (row-major, `output × hidden`), `b2`.

use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

const CHECKPOINT_MAGIC: &str = "embmap-mapper 1";
const FLATTENING_TAG: &str = "W1:row-major b1 W2:row-major b2";

/// Pairs handled sequentially by one worker. The reduction over blocks is
/// performed in block order, so results do not depend on the thread count.
const BLOCK_PAIRS: usize = 64;
/// Blocks evaluated concurrently before their partial sums are folded.
const BLOCKS_PER_WAVE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapperDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl MapperDims {
    pub fn new(input: usize, hidden: usize, output: usize) -> Result<Self> {
        if input == 0 || hidden == 0 || output == 0 {
            return Err(Error::invalid("mapper dimensions must be positive"));
        }
        Ok(MapperDims {
            input,
            hidden,
            output,
        })
    }

    pub fn num_params(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }

    pub fn w1_range(&self) -> Range<usize> {
        0..self.hidden * self.input
    }

    pub fn b1_range(&self) -> Range<usize> {
        let start = self.hidden * self.input;
        start..start + self.hidden
    }

    pub fn w2_range(&self) -> Range<usize> {
        let start = self.b1_range().end;
        start..start + self.output * self.hidden
    }

    pub fn b2_range(&self) -> Range<usize> {
        let start = self.w2_range().end;
        start..start + self.output
    }

    fn blocks(&self) -> [(&'static str, Range<usize>); 4] {
        [
            ("W1", self.w1_range()),
            ("b1", self.b1_range()),
            ("W2", self.w2_range()),
            ("b2", self.b2_range()),
        ]
    }
}

/// Mapper parameters together with their shape.
#[derive(Clone, Debug, PartialEq)]
pub struct MapperModel {
    dims: MapperDims,
    params: Vec<f64>,
}

impl MapperModel {
    pub fn zeros(dims: MapperDims) -> Self {
        MapperModel {
            dims,
            params: vec![0.0; dims.num_params()],
        }
    }

    /// Parameters drawn uniformly from `(-scale, scale)`.
    pub fn random_uniform(dims: MapperDims, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..dims.num_params())
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        MapperModel { dims, params }
    }

    /// Rebuild a model from its canonical flat parameter vector.
    pub fn from_flat(dims: MapperDims, params: Vec<f64>) -> Result<Self> {
        if params.len() != dims.num_params() {
            return Err(Error::dim(dims.num_params(), params.len(), "flat mapper parameters"));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("mapper parameters are not finite".into()));
        }
        Ok(MapperModel { dims, params })
    }

    pub fn dims(&self) -> MapperDims {
        self.dims
    }

    pub fn flat(&self) -> &[f64] {
        &self.params
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.params
    }

    pub fn w1(&self) -> &[f64] {
        &self.params[self.dims.w1_range()]
    }

    pub fn b1(&self) -> &[f64] {
        &self.params[self.dims.b1_range()]
    }

    pub fn w2(&self) -> &[f64] {
        &self.params[self.dims.w2_range()]
    }

    pub fn b2(&self) -> &[f64] {
        &self.params[self.dims.b2_range()]
    }

    /// Map one vector. This is the mapped embedding when `x` is an initial
    /// embedding.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dims.input {
            return Err(Error::dim(self.dims.input, x.len(), "mapper input"));
        }
        let mut hidden = vec![0.0; self.dims.hidden];
        let mut out = vec![0.0; self.dims.output];
        forward_into(self.dims, &self.params, x, &mut hidden, &mut out);
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::invalid(format!("{}: {}", path.display(), msg)),
            other => other,
        })
    }

    /// Serialise as a text checkpoint. Values use the shortest decimal form
    /// that parses back to the identical `f64`.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::with_capacity(self.params.len() * 24 + 128);
        out.push_str(CHECKPOINT_MAGIC);
        out.push('\n');
        out.push_str(&format!(
            "dims {} {} {}\n",
            self.dims.input, self.dims.hidden, self.dims.output
        ));
        out.push_str(&format!("order {}\n", FLATTENING_TAG));
        for v in &self.params {
            out.push_str(&format!("{:e}\n", v));
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(CHECKPOINT_MAGIC) {
            return Err(Error::invalid("not a mapper checkpoint"));
        }
        let dims_line = lines.next().unwrap_or_default();
        let dims: Vec<usize> = dims_line
            .strip_prefix("dims ")
            .map(|rest| rest.split(' ').filter_map(|f| f.parse().ok()).collect())
            .unwrap_or_default();
        if dims.len() != 3 {
            return Err(Error::invalid(format!("malformed dims line '{}'", dims_line)));
        }
        let dims = MapperDims::new(dims[0], dims[1], dims[2])?;
        match lines.next().and_then(|l| l.strip_prefix("order ")) {
            Some(FLATTENING_TAG) => {}
            other => {
                return Err(Error::invalid(format!(
                    "unsupported parameter order {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let params = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("invalid parameter value '{}'", l)))
            })
            .collect::<Result<Vec<_>>>()?;
        MapperModel::from_flat(dims, params)
    }
}

/// Componentwise hard hyperbolic tangent: clip to `[-1, 1]`.
pub fn hardtanh(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| hardtanh_scalar(v)).collect()
}

#[inline]
fn hardtanh_scalar(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Forward pass writing the hidden pre-activations into `pre` and the
/// output into `out`.
fn forward_into(dims: MapperDims, theta: &[f64], x: &[f64], pre: &mut [f64], out: &mut [f64]) {
    let w1 = &theta[dims.w1_range()];
    let b1 = &theta[dims.b1_range()];
    let w2 = &theta[dims.w2_range()];
    let b2 = &theta[dims.b2_range()];

    for (k, z) in pre.iter_mut().enumerate() {
        let row = &w1[k * dims.input..(k + 1) * dims.input];
        *z = b1[k] + dot(row, x);
    }
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w2[i * dims.hidden..(i + 1) * dims.hidden];
        *o = b2[i]
            + row
                .iter()
                .zip(pre.iter())
                .map(|(w, &z)| w * hardtanh_scalar(z))
                .sum::<f64>();
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must be in [0,1], got {}", alpha)));
    }
    Ok(())
}

/// Weighted sum of absolute and squared error between two vectors.
pub fn pair_loss(y: &[f64], y_hat: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if y.len() != y_hat.len() {
        return Err(Error::dim(y.len(), y_hat.len(), "loss operands"));
    }
    Ok(weighted_loss(y, y_hat, alpha))
}

fn weighted_loss(y: &[f64], y_hat: &[f64], alpha: f64) -> f64 {
    let (abs, sq) = y
        .iter()
        .zip(y_hat)
        .fold((0.0, 0.0), |(abs, sq), (a, b)| {
            let r = a - b;
            (abs + r.abs(), sq + r * r)
        });
    alpha * abs + (1.0 - alpha) * sq
}

/// Mapper training data: word identities with parallel input and target
/// vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPairs {
    input_dim: usize,
    output_dim: usize,
    words: Vec<String>,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl TrainingPairs {
    pub fn new(input_dim: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::invalid("pair dimensions must be positive"));
        }
        Ok(TrainingPairs {
            input_dim,
            output_dim,
            words: Vec::new(),
            inputs: Vec::new(),
            targets: Vec::new(),
        })
    }

    pub fn push(&mut self, word: impl Into<String>, input: &[f64], target: &[f64]) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::dim(self.input_dim, input.len(), "pair input"));
        }
        if target.len() != self.output_dim {
            return Err(Error::dim(self.output_dim, target.len(), "pair target"));
        }
        if input.iter().chain(target).any(|v| !v.is_finite()) {
            return Err(Error::invalid("training pair has non-finite components"));
        }
        self.words.push(word.into());
        self.inputs.extend_from_slice(input);
        self.targets.extend_from_slice(target);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }

    /// The pairs at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> TrainingPairs {
        let mut out = TrainingPairs::new(self.input_dim, self.output_dim).expect("valid dims");
        for &i in indices {
            out.words.push(self.words[i].clone());
            out.inputs.extend_from_slice(self.input(i));
            out.targets.extend_from_slice(self.target(i));
        }
        out
    }
}

/// Loss weight and elastic-net strengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub l1: f64,
    pub l2: f64,
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.l1 >= 0.0 && self.l1.is_finite()) || !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("regularisation strengths must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Elastic-net regularised multi-loss objective over a fixed dataset.
#[derive(Clone, Copy, Debug)]
pub struct Objective<'a> {
    dims: MapperDims,
    data: &'a TrainingPairs,
    weights: LossWeights,
}

impl<'a> Objective<'a> {
    pub fn new(dims: MapperDims, data: &'a TrainingPairs, weights: LossWeights) -> Result<Self> {
        weights.validate()?;
        if data.is_empty() {
            return Err(Error::invalid("objective needs at least one training pair"));
        }
        if data.input_dim() != dims.input {
            return Err(Error::dim(dims.input, data.input_dim(), "pair inputs vs mapper"));
        }
        if data.output_dim() != dims.output {
            return Err(Error::dim(dims.output, data.output_dim(), "pair targets vs mapper"));
        }
        Ok(Objective {
            dims,
            data,
            weights,
        })
    }

    pub fn dims(&self) -> MapperDims {
        self.dims
    }

    /// Objective value and its (sub)gradient at `theta`.
    pub fn evaluate(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n_params = self.dims.num_params();
        if theta.len() != n_params {
            return Err(Error::dim(n_params, theta.len(), "objective parameters"));
        }

        let mut value = 0.0;
        let mut grad = vec![0.0; n_params];

        let n_blocks = self.data.len().div_ceil(BLOCK_PAIRS);
        let blocks: Vec<Range<usize>> = (0..n_blocks)
            .map(|b| b * BLOCK_PAIRS..((b + 1) * BLOCK_PAIRS).min(self.data.len()))
            .collect();
        for wave in blocks.chunks(BLOCKS_PER_WAVE) {
            let partials: Vec<(f64, Vec<f64>)> = wave
                .par_iter()
                .map(|range| self.block_loss(theta, range.clone()))
                .collect();
            for (v, g) in partials {
                value += v;
                for (acc, x) in grad.iter_mut().zip(&g) {
                    *acc += x;
                }
            }
        }

        let LossWeights { l1, l2, .. } = self.weights;
        if l1 > 0.0 || l2 > 0.0 {
            let mut abs_sum = 0.0;
            let mut sq_sum = 0.0;
            for (g, &t) in grad.iter_mut().zip(theta) {
                abs_sum += t.abs();
                sq_sum += t * t;
                *g += l1 * sign(t) + l2 * t;
            }
            value += l1 * abs_sum + 0.5 * l2 * sq_sum;
        }

        if !value.is_finite() {
            return Err(Error::Numerical("objective value is not finite".into()));
        }
        for (name, range) in self.dims.blocks() {
            if grad[range].iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!("gradient of {} is not finite", name)));
            }
        }
        Ok((value, grad))
    }

    /// Objective value only.
    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.evaluate(theta).map(|(v, _)| v)
    }

    fn block_loss(&self, theta: &[f64], pairs: Range<usize>) -> (f64, Vec<f64>) {
        let dims = self.dims;
        let alpha = self.weights.alpha;
        let w2 = &theta[dims.w2_range()];

        let mut grad = vec![0.0; dims.num_params()];
        let mut pre = vec![0.0; dims.hidden];
        let mut act = vec![0.0; dims.hidden];
        let mut out = vec![0.0; dims.output];
        let mut delta_out = vec![0.0; dims.output];
        let mut delta_hidden = vec![0.0; dims.hidden];
        let mut value = 0.0;

        let (w1_range, b1_range, w2_range, b2_range) =
            (dims.w1_range(), dims.b1_range(), dims.w2_range(), dims.b2_range());

        for p in pairs {
            let x = self.data.input(p);
            let y = self.data.target(p);
            forward_into(dims, theta, x, &mut pre, &mut out);
            for (a, &z) in act.iter_mut().zip(&pre) {
                *a = hardtanh_scalar(z);
            }

            for ((d, &o), &t) in delta_out.iter_mut().zip(&out).zip(y) {
                let r = o - t;
                value += alpha * r.abs() + (1.0 - alpha) * r * r;
                *d = alpha * sign(r) + 2.0 * (1.0 - alpha) * r;
            }

            delta_hidden.iter_mut().for_each(|d| *d = 0.0);
            {
                let g_w2 = &mut grad[w2_range.clone()];
                for (i, &d) in delta_out.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &w2[i * dims.hidden..(i + 1) * dims.hidden];
                    let g_row = &mut g_w2[i * dims.hidden..(i + 1) * dims.hidden];
                    for k in 0..dims.hidden {
                        g_row[k] += d * act[k];
                        delta_hidden[k] += d * row[k];
                    }
                }
            }
            for (g, &d) in grad[b2_range.clone()].iter_mut().zip(&delta_out) {
                *g += d;
            }

            for (d, &z) in delta_hidden.iter_mut().zip(&pre) {
                if !(-1.0..=1.0).contains(&z) {
                    *d = 0.0;
                }
            }
            {
                let g_w1 = &mut grad[w1_range.clone()];
                for (k, &d) in delta_hidden.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let g_row = &mut g_w1[k * dims.input..(k + 1) * dims.input];
                    for (g, &xj) in g_row.iter_mut().zip(x) {
                        *g += d * xj;
                    }
                }
            }
            for (g, &d) in grad[b1_range.clone()].iter_mut().zip(&delta_hidden) {
                *g += d;
            }
        }

        (value, grad)
    }
}

/// Evaluate the regularised objective and its gradient.
pub fn objective(
    model: &MapperModel,
    data: &TrainingPairs,
    weights: LossWeights,
) -> Result<(f64, Vec<f64>)> {
    Objective::new(model.dims(), data, weights)?.evaluate(model.flat())
}

/// Sum of [`pair_loss`] over `data` under `model`, without regularisation.
pub fn data_loss(model: &MapperModel, data: &TrainingPairs, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let dims = model.dims();
    if data.input_dim() != dims.input || data.output_dim() != dims.output {
        return Err(Error::dim(dims.input, data.input_dim(), "pairs vs mapper"));
    }
    let mut pre = vec![0.0; dims.hidden];
    let mut out = vec![0.0; dims.output];
    let mut total = 0.0;
    for i in 0..data.len() {
        forward_into(dims, model.flat(), data.input(i), &mut pre, &mut out);
        total += weighted_loss(data.target(i), &out, alpha);
    }
    Ok(total)
}

/// Minimum distance of a gradient-check point from the loss kinks.
const KINK_MARGIN: f64 = 1e-3;
const FD_STEP: f64 = 1e-5;

/// Compare the analytic gradient with central finite differences at a
/// seeded random parameter vector that keeps clear of the points where the
/// objective is not differentiable: hardtanh corners, zero residuals and
/// zero parameters.
///
/// Returns the largest per-coordinate error `|a − b| / max(1, |a|, |b|)`.
pub fn gradient_check(
    dims: MapperDims,
    data: &TrainingPairs,
    weights: LossWeights,
    seed: u64,
) -> Result<f64> {
    let objective = Objective::new(dims, data, weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let theta = (0..1000)
        .map(|_| {
            (0..dims.num_params())
                .map(|_| loop {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    if v.abs() >= 10.0 * KINK_MARGIN {
                        break v;
                    }
                })
                .collect::<Vec<f64>>()
        })
        .find(|theta| clear_of_kinks(dims, theta, data, weights.alpha))
        .ok_or_else(|| Error::invalid("could not find a differentiable check point"))?;

    let (_, analytic) = objective.evaluate(&theta)?;
    let mut probe = theta.clone();
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        probe[i] = theta[i] + FD_STEP;
        let up = objective.value(&probe)?;
        probe[i] = theta[i] - FD_STEP;
        let down = objective.value(&probe)?;
        probe[i] = theta[i];

        let numeric = (up - down) / (2.0 * FD_STEP);
        let scale = analytic[i].abs().max(numeric.abs()).max(1.0);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

fn clear_of_kinks(dims: MapperDims, theta: &[f64], data: &TrainingPairs, alpha: f64) -> bool {
    let mut pre = vec![0.0; dims.hidden];
    let mut out = vec![0.0; dims.output];
    (0..data.len()).all(|p| {
        forward_into(dims, theta, data.input(p), &mut pre, &mut out);
        let hidden_ok = pre
            .iter()
            .all(|z| (z - 1.0).abs() >= KINK_MARGIN && (z + 1.0).abs() >= KINK_MARGIN);
        let residual_ok = alpha == 0.0
            || out
                .iter()
                .zip(data.target(p))
                .all(|(o, t)| (o - t).abs() >= KINK_MARGIN);
        hidden_ok && residual_ok
    })
}
