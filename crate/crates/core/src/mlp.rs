//! Feed-forward network used as the Q-function approximator.
//!
//! Fixed architecture: two ReLU hidden layers of 128 and 64 units and a
//! single linear output. Trained with minibatch gradient descent on the
//! Huber loss; step size, epochs, batch size, and seed are configurable.
//! Fitting always re-initializes from the seed, so a fit is a pure function
//! of (seed, data, data order).

use std::io::{Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::regressor::{FeatureMatrix, Regressor};
use crate::seeds::mix_seed;

/// Hidden layer widths, first to last.
pub const HIDDEN_SIZES: [usize; 2] = [128, 64];

const MAGIC: &[u8; 8] = b"EVQMLP01";

/// Gradient accumulation is split into this many fixed chunks; chunk sums are
/// combined in chunk order, so results do not depend on thread count.
const GRAD_CHUNKS: usize = 8;

/// Training hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub learning_rate: f64,
    pub epochs: u32,
    pub batch_size: usize,
    pub huber_delta: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 64,
            huber_delta: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `(out_dim, in_dim)`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn zeroed(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// `out = W x + b`, then ReLU when requested.
    fn forward_into(&self, x: &[f64], out: &mut [f64], relu: bool) {
        debug_assert_eq!(out.len(), self.out_dim);
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.biases[o];
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *slot = if relu { acc.max(0.0) } else { acc };
        }
    }
}

/// Reusable forward/backward buffers; create once per worker, not per row.
#[derive(Clone, Debug)]
pub struct MlpScratch {
    /// Post-activation outputs per layer.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    prev: Vec<f64>,
    /// Flat offset of each layer's weight block in the parameter vector.
    offsets: Vec<usize>,
}

/// The network itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub config: MlpConfig,
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Mlp {
    /// A freshly initialized network for `input_dim` features.
    pub fn new(input_dim: usize, config: MlpConfig) -> Self {
        let mut mlp = Self {
            config,
            input_dim,
            layers: Vec::new(),
        };
        let mut dims = vec![input_dim];
        dims.extend(HIDDEN_SIZES);
        dims.push(1);
        for pair in dims.windows(2) {
            mlp.layers.push(Layer::zeroed(pair[0], pair[1]));
        }
        mlp.reinitialize();
        mlp
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// He-normal weights, zero biases, drawn from the configured seed.
    fn reinitialize(&mut self) {
        let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(self.config.seed, &[0x4d4c50]));
        for layer in &mut self.layers {
            let scale = (2.0 / layer.in_dim as f64).sqrt();
            for w in &mut layer.weights {
                let z: f64 = rng.sample(StandardNormal);
                *w = z * scale;
            }
            for b in &mut layer.biases {
                *b = 0.0;
            }
        }
    }

    /// Flat parameter vector (per layer: weights then biases).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params());
        let mut offset = 0;
        for layer in &mut self.layers {
            let w_len = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + w_len]);
            offset += w_len;
            let b_len = layer.biases.len();
            layer.biases.copy_from_slice(&params[offset..offset + b_len]);
            offset += b_len;
        }
    }

    pub fn scratch(&self) -> MlpScratch {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.param_count();
        }
        MlpScratch {
            acts: self.layers.iter().map(|l| vec![0.0; l.out_dim]).collect(),
            delta: Vec::new(),
            prev: Vec::new(),
            offsets,
        }
    }

    fn forward_with(&self, x: &[f64], scratch: &mut MlpScratch) -> f64 {
        let n_layers = self.layers.len();
        for (l, layer) in self.layers.iter().enumerate() {
            // Split so the previous layer's output can be borrowed as input.
            let (done, rest) = scratch.acts.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &done[l - 1] };
            layer.forward_into(input, &mut rest[0], l + 1 < n_layers);
        }
        scratch.acts[n_layers - 1][0]
    }

    fn huber(&self, residual: f64) -> f64 {
        let d = self.config.huber_delta;
        let a = residual.abs();
        if a <= d {
            0.5 * residual * residual
        } else {
            d * (a - 0.5 * d)
        }
    }

    fn huber_grad(&self, residual: f64) -> f64 {
        residual.clamp(-self.config.huber_delta, self.config.huber_delta)
    }

    /// Mean Huber loss over a labeled batch.
    pub fn loss(&self, features: &FeatureMatrix, targets: &[f64]) -> f64 {
        assert_eq!(features.rows(), targets.len());
        let mut scratch = self.scratch();
        let mut total = 0.0;
        for i in 0..features.rows() {
            let pred = self.forward_with(features.row(i), &mut scratch);
            total += self.huber(pred - targets[i]);
        }
        total / features.rows() as f64
    }

    /// Accumulates one sample's parameter gradients (flat layout) scaled by
    /// the Huber derivative; returns the sample's loss.
    fn backprop_sample(
        &self,
        x: &[f64],
        target: f64,
        scratch: &mut MlpScratch,
        grad: &mut [f64],
    ) -> f64 {
        let pred = self.forward_with(x, scratch);
        let residual = pred - target;
        scratch.delta.clear();
        scratch.delta.push(self.huber_grad(residual));

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input: &[f64] = if l == 0 { x } else { &scratch.acts[l - 1] };
            let w_off = scratch.offsets[l];
            let b_off = w_off + layer.weights.len();
            for o in 0..layer.out_dim {
                let d = scratch.delta[o];
                if d != 0.0 {
                    let row = &mut grad[w_off + o * layer.in_dim..w_off + (o + 1) * layer.in_dim];
                    for (g, v) in row.iter_mut().zip(input) {
                        *g += d * v;
                    }
                    grad[b_off + o] += d;
                }
            }
            if l > 0 {
                scratch.prev.clear();
                scratch.prev.resize(layer.in_dim, 0.0);
                for o in 0..layer.out_dim {
                    let d = scratch.delta[o];
                    if d != 0.0 {
                        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (p, w) in scratch.prev.iter_mut().zip(row) {
                            *p += d * w;
                        }
                    }
                }
                // ReLU mask of the producing layer's output.
                for (p, &a) in scratch.prev.iter_mut().zip(scratch.acts[l - 1].iter()) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                std::mem::swap(&mut scratch.delta, &mut scratch.prev);
            }
        }
        self.huber(residual)
    }

    /// Mean loss and mean parameter gradients over a labeled batch.
    ///
    /// Samples are processed in fixed chunks whose partial sums are combined
    /// in chunk order, so the result is identical with and without rayon.
    pub fn loss_and_gradients(&self, features: &FeatureMatrix, targets: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(features.rows(), targets.len());
        let n = features.rows();
        let n_params = self.num_params();
        let chunk_size = n.div_ceil(GRAD_CHUNKS).max(1);
        let n_chunks = n.div_ceil(chunk_size);

        let partials = exec::map_range(n_chunks, |c| {
            let lo = c * chunk_size;
            let hi = ((c + 1) * chunk_size).min(n);
            let mut grad = vec![0.0; n_params];
            let mut scratch = self.scratch();
            let mut loss = 0.0;
            for i in lo..hi {
                loss += self.backprop_sample(features.row(i), targets[i], &mut scratch, &mut grad);
            }
            (loss, grad)
        });

        let mut grad = vec![0.0; n_params];
        let mut loss = 0.0;
        for (l, g) in partials {
            loss += l;
            for (acc, v) in grad.iter_mut().zip(&g) {
                *acc += v;
            }
        }
        let scale = 1.0 / n as f64;
        loss *= scale;
        for g in &mut grad {
            *g *= scale;
        }
        (loss, grad)
    }

    /// Persists architecture and parameters as a flat binary with a shape
    /// header; reloading reproduces predictions bit-exactly.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.input_dim as u32).to_le_bytes())?;
        w.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        for layer in &self.layers {
            w.write_all(&(layer.in_dim as u32).to_le_bytes())?;
            w.write_all(&(layer.out_dim as u32).to_le_bytes())?;
        }
        for layer in &self.layers {
            for v in layer.weights.iter().chain(&layer.biases) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load<R: Read>(mut r: R, config: MlpConfig) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::CorruptRecord {
                line: 0,
                msg: "bad network file magic".into(),
            });
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let input_dim = read_u32(&mut r)? as usize;
        let n_layers = read_u32(&mut r)? as usize;
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let in_dim = read_u32(&mut r)? as usize;
            let out_dim = read_u32(&mut r)? as usize;
            layers.push(Layer::zeroed(in_dim, out_dim));
        }
        let mut f64buf = [0u8; 8];
        for layer in &mut layers {
            for v in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                r.read_exact(&mut f64buf)?;
                *v = f64::from_le_bytes(f64buf);
            }
        }
        Ok(Self {
            config,
            input_dim,
            layers,
        })
    }

    pub fn load_path(path: &Path, config: MlpConfig) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file), config)
    }
}

impl Regressor for Mlp {
    /// Re-initializes from the seed and runs minibatch SGD on the Huber loss.
    fn fit(&mut self, features: &FeatureMatrix, targets: &[f64]) -> Result<()> {
        assert_eq!(features.rows(), targets.len());
        assert_eq!(features.dim(), self.input_dim);
        if features.is_empty() {
            return Err(Error::EmptyInput("no training rows".into()));
        }
        self.reinitialize();

        let n = features.rows();
        let batch = self.config.batch_size.max(1).min(n);
        let lr = self.config.learning_rate;
        let mut indices: Vec<usize> = (0..n).collect();
        let mut batch_y: Vec<f64> = Vec::with_capacity(batch);

        for epoch in 0..self.config.epochs {
            let mut rng =
                ChaCha12Rng::seed_from_u64(mix_seed(self.config.seed, &[0x45504f43, u64::from(epoch)]));
            indices.shuffle(&mut rng);

            let mut epoch_loss = 0.0;
            let mut seen = 0usize;
            for chunk in indices.chunks(batch) {
                let mut batch_x = FeatureMatrix::with_capacity(self.input_dim, chunk.len());
                batch_y.clear();
                for &i in chunk {
                    batch_x.push_row(features.row(i));
                    batch_y.push(targets[i]);
                }
                let (loss, grad) = self.loss_and_gradients(&batch_x, &batch_y);
                epoch_loss += loss * chunk.len() as f64;
                seen += chunk.len();

                let mut offset = 0;
                for layer in &mut self.layers {
                    for w in &mut layer.weights {
                        *w -= lr * grad[offset];
                        offset += 1;
                    }
                    for b in &mut layer.biases {
                        *b -= lr * grad[offset];
                        offset += 1;
                    }
                }
            }
            let epoch_loss = epoch_loss / seen as f64;
            if !epoch_loss.is_finite() {
                return Err(Error::RegressorDiverged {
                    iteration: epoch,
                    loss: epoch_loss,
                });
            }
        }
        Ok(())
    }

    fn predict_one(&self, row: &[f64]) -> f64 {
        let mut scratch = self.scratch();
        self.forward_with(row, &mut scratch)
    }

    /// Sequential with one reused scratch; callers parallelize across
    /// batches, not rows.
    fn predict(&self, features: &FeatureMatrix) -> Vec<f64> {
        let mut scratch = self.scratch();
        (0..features.rows())
            .map(|i| self.forward_with(features.row(i), &mut scratch))
            .collect()
    }
}
