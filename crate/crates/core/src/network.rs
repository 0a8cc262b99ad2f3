//! The learned synchronizer: a single-hidden-layer perceptron mapping the
//! normalized timing metric onto the timing label.
//!
//! Layout is `ns -> n -> ns` with a logistic hidden layer and a linear
//! output. Training minimizes the batch-mean squared error with plain SGD;
//! deployment takes the argmax of the output magnitude.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::correlator::FeatureVector;
use crate::error::{Error, Result};
use crate::label::TimingLabel;
use crate::rng::derived_rng;
use crate::signal::OfdmConfig;

const MODEL_MAGIC: &[u8; 4] = b"TSLM";
const MODEL_VERSION: u32 = 1;

/// Dot product with four accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += s * x`
fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weights and biases of the synchronizer network. `w1` is `hidden x input`
/// row-major, `w2` is `output x hidden` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Network output vector, length `ns`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOutput {
    values: Vec<f64>,
}

impl NetworkOutput {
    pub fn new(values: Vec<f64>) -> Self {
        NetworkOutput { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Parameter gradients, same shapes as [`Mlp`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// One training pair: a unit-norm feature vector and its target label.
pub type Sample<'a> = (&'a FeatureVector, &'a TimingLabel);

impl Mlp {
    /// Initializes for the frame dimensions of `config`: input `ns`, hidden
    /// `n`, output `ns`.
    pub fn init(config: &OfdmConfig, seed: u64) -> Mlp {
        Mlp::with_dims(config.ns(), config.n(), config.ns(), seed)
    }

    /// Uniform `[-1/sqrt(fan_in), +1/sqrt(fan_in)]` weights, zero biases,
    /// deterministic per seed.
    pub fn with_dims(input_dim: usize, hidden_dim: usize, output_dim: usize, seed: u64) -> Mlp {
        let mut rng = derived_rng(seed, &[0x4d4c50]);
        let lim1 = 1.0 / (input_dim as f64).sqrt();
        let lim2 = 1.0 / (hidden_dim as f64).sqrt();
        let w1 = (0..hidden_dim * input_dim)
            .map(|_| rng.random_range(-lim1..=lim1))
            .collect();
        let w2 = (0..output_dim * hidden_dim)
            .map(|_| rng.random_range(-lim2..=lim2))
            .collect();
        Mlp {
            input_dim,
            hidden_dim,
            output_dim,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; output_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Checks that the model matches the frame dimensions of `config`.
    pub fn check_config(&self, config: &OfdmConfig) -> Result<()> {
        if self.input_dim != config.ns()
            || self.hidden_dim != config.n()
            || self.output_dim != config.ns()
        {
            return Err(Error::DimensionMismatch {
                what: "model dimensions vs config",
                expected: config.ns(),
                got: self.input_dim,
            });
        }
        Ok(())
    }

    fn forward_parts(&self, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hidden: Vec<f64> = (0..self.hidden_dim)
            .map(|h| {
                sigmoid(self.b1[h] + dot(&self.w1[h * self.input_dim..(h + 1) * self.input_dim], q))
            })
            .collect();
        let out: Vec<f64> = (0..self.output_dim)
            .map(|o| {
                self.b2[o] + dot(&self.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim], &hidden)
            })
            .collect();
        (hidden, out)
    }

    /// Forward pass on a unit-norm feature vector.
    pub fn forward(&self, q: &FeatureVector) -> Result<NetworkOutput> {
        if q.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "forward: feature vector",
                expected: self.input_dim,
                got: q.len(),
            });
        }
        let (_, out) = self.forward_parts(q.values());
        Ok(NetworkOutput { values: out })
    }

    fn check_sample(&self, q: &FeatureVector, t: &TimingLabel) -> Result<()> {
        if q.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "batch: feature vector",
                expected: self.input_dim,
                got: q.len(),
            });
        }
        if t.values().len() != self.output_dim {
            return Err(Error::DimensionMismatch {
                what: "batch: label",
                expected: self.output_dim,
                got: t.values().len(),
            });
        }
        Ok(())
    }

    /// Batch-mean squared error `mean_i ||G(q_i) - t_i||^2`.
    pub fn loss(&self, batch: &[Sample<'_>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut total = 0.0;
        for (q, t) in batch {
            self.check_sample(q, t)?;
            let (_, out) = self.forward_parts(q.values());
            total += out
                .iter()
                .zip(t.values())
                .map(|(o, t)| (o - t) * (o - t))
                .sum::<f64>();
        }
        Ok(total / batch.len() as f64)
    }

    /// Exact analytic gradients of the batch-mean squared error.
    pub fn backward(&self, batch: &[Sample<'_>]) -> Result<Gradients> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut g = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        };
        let inv_batch = 1.0 / batch.len() as f64;
        let mut residual = vec![0.0; self.output_dim];
        let mut delta_hidden = vec![0.0; self.hidden_dim];
        for (q, t) in batch {
            self.check_sample(q, t)?;
            let (hidden, out) = self.forward_parts(q.values());
            for (r, (o, tv)) in residual.iter_mut().zip(out.iter().zip(t.values())) {
                *r = 2.0 * (o - tv) * inv_batch;
            }
            axpy(&mut g.b2, 1.0, &residual);
            for (o, &r) in residual.iter().enumerate() {
                axpy(&mut g.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim], r, &hidden);
            }
            delta_hidden.iter_mut().for_each(|d| *d = 0.0);
            for (o, &r) in residual.iter().enumerate() {
                axpy(
                    &mut delta_hidden,
                    r,
                    &self.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim],
                );
            }
            for (d, &h) in delta_hidden.iter_mut().zip(&hidden) {
                *d *= h * (1.0 - h);
            }
            axpy(&mut g.b1, 1.0, &delta_hidden);
            for (h, &d) in delta_hidden.iter().enumerate() {
                axpy(&mut g.w1[h * self.input_dim..(h + 1) * self.input_dim], d, q.values());
            }
        }
        Ok(g)
    }

    fn apply(&mut self, g: &Gradients, rate: f64) {
        axpy(&mut self.w1, -rate, &g.w1);
        axpy(&mut self.b1, -rate, &g.b1);
        axpy(&mut self.w2, -rate, &g.w2);
        axpy(&mut self.b2, -rate, &g.b2);
    }

    /// Per-sample update applied in place as two rank-1 corrections; avoids
    /// materializing dense gradients on the batch-1 hot path. Returns the
    /// sample loss before the update.
    fn sgd_step_single(&mut self, q: &FeatureVector, t: &TimingLabel, rate: f64) -> Result<f64> {
        self.check_sample(q, t)?;
        let (hidden, out) = self.forward_parts(q.values());
        let mut loss = 0.0;
        let mut residual = vec![0.0; self.output_dim];
        for (r, (o, tv)) in residual.iter_mut().zip(out.iter().zip(t.values())) {
            let diff = o - tv;
            loss += diff * diff;
            *r = 2.0 * diff;
        }
        let mut delta_hidden = vec![0.0; self.hidden_dim];
        for (o, &r) in residual.iter().enumerate() {
            axpy(&mut delta_hidden, r, &self.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim]);
        }
        for (d, &h) in delta_hidden.iter_mut().zip(&hidden) {
            *d *= h * (1.0 - h);
        }
        for (o, &r) in residual.iter().enumerate() {
            axpy(&mut self.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim], -rate * r, &hidden);
        }
        axpy(&mut self.b2, -rate, &residual);
        for (h, &d) in delta_hidden.iter().enumerate() {
            axpy(&mut self.w1[h * self.input_dim..(h + 1) * self.input_dim], -rate * d, q.values());
        }
        axpy(&mut self.b1, -rate, &delta_hidden);
        Ok(loss)
    }

    /// Total parameter count.
    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    #[cfg(test)]
    fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let mut idx = idx;
        for block in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            if idx < block.len() {
                return &mut block[idx];
            }
            idx -= block.len();
        }
        panic!("parameter index out of range");
    }

    /// Serializes the model (magic, version, dims, raw little-endian f64).
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        for dim in [self.input_dim, self.hidden_dim, self.output_dim] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for block in [&self.w1, &self.b1, &self.w2, &self.b2] {
            for v in block.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Mlp> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("model file truncated before header".into()))?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format("not a model file (bad magic)".into()));
        }
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|_| Error::Format("model file truncated in header".into()))?;
        let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap());
        let version = word(0);
        if version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {version} (expected {MODEL_VERSION})"
            )));
        }
        let input_dim = word(1) as usize;
        let hidden_dim = word(2) as usize;
        let output_dim = word(3) as usize;
        if input_dim == 0 || hidden_dim == 0 || output_dim == 0 {
            return Err(Error::Format("model header has zero dimension".into()));
        }
        let read_block = |r: &mut R, len: usize| -> Result<Vec<f64>> {
            let mut bytes = vec![0u8; len * 8];
            r.read_exact(&mut bytes)
                .map_err(|_| Error::Format("model file truncated in payload".into()))?;
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let w1 = read_block(r, hidden_dim * input_dim)?;
        let b1 = read_block(r, hidden_dim)?;
        let w2 = read_block(r, output_dim * hidden_dim)?;
        let b2 = read_block(r, output_dim)?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("model file has trailing bytes".into()));
        }
        Ok(Mlp { input_dim, hidden_dim, output_dim, w1, b1, w2, b2 })
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Mlp> {
        let bytes = fs::read(path)?;
        Mlp::read_from(&mut bytes.as_slice())
    }
}

/// Mutable training state: the model plus the SGD step size and counter.
#[derive(Debug, Clone)]
pub struct TrainState {
    model: Mlp,
    learning_rate: f64,
    step: u64,
}

impl TrainState {
    /// A zero rate is the degenerate no-op optimizer; negative or non-finite
    /// rates are rejected.
    pub fn new(model: Mlp, learning_rate: f64) -> Result<TrainState> {
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "learning rate must be finite and >= 0 (got {learning_rate})"
            )));
        }
        Ok(TrainState { model, learning_rate, step: 0 })
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }

    pub fn into_model(self) -> Mlp {
        self.model
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn set_learning_rate(&mut self, rate: f64) -> Result<()> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "learning rate must be finite and >= 0 (got {rate})"
            )));
        }
        self.learning_rate = rate;
        Ok(())
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One SGD update on a minibatch: every parameter moves against its
    /// gradient by the learning rate. Returns the batch loss evaluated
    /// before the update.
    pub fn sgd_step(&mut self, batch: &[Sample<'_>]) -> Result<f64> {
        let loss = match batch {
            [] => return Err(Error::EmptyBatch),
            [(q, t)] => self.model.sgd_step_single(q, t, self.learning_rate)?,
            _ => {
                let loss = self.model.loss(batch)?;
                let grads = self.model.backward(batch)?;
                self.model.apply(&grads, self.learning_rate);
                loss
            }
        };
        self.step += 1;
        Ok(loss)
    }
}

/// Deployment rule: index of the largest output magnitude, ties broken
/// towards the smallest index.
pub fn estimate(output: &NetworkOutput) -> usize {
    let mut best = 0;
    let mut best_val = f64::MIN;
    for (i, &v) in output.values.iter().enumerate() {
        if v.abs() > best_val {
            best_val = v.abs();
            best = i;
        }
    }
    best
}
