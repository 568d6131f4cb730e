//! Loss-switching fusion network: a 5-layer tied-weight autoencoder whose
//! encoder feeds a linear classifier head. Training alternates one
//! reconstruction step and one classification step per batch; inference
//! runs the encoder only.
//!
//! Decoder weights are never stored: the decoder applies the transposes of
//! the encoder matrices, so the tying invariant holds by construction and
//! both losses' gradients accumulate into the same two matrices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util;

pub const MODEL_MAGIC: &[u8; 4] = b"LSFM";
pub const MODEL_VERSION: u16 = 1;

/// Fused per-trajectory code width.
pub const DEFAULT_CODE_DIM: usize = 128;
pub const DEFAULT_HIDDEN_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply(&self, pre: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => pre.clone(),
            Activation::Relu => pre.mapv(|v| v.max(0.0)),
        }
    }

    /// Derivative as a function of the pre-activation.
    fn derivative(&self, pre: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => Array2::ones(pre.raw_dim()),
            Activation::Relu => pre.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    fn from_code(code: u8, path: &Path) -> Result<Self> {
        match code {
            0 => Ok(Activation::Identity),
            1 => Ok(Activation::Relu),
            other => Err(Error::format(path, format!("unknown activation code {other}"))),
        }
    }
}

/// Free layer widths; the decoder mirrors (code, hidden, input) by tying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDims {
    pub input: usize,
    pub hidden: usize,
    pub code: usize,
}

impl LayerDims {
    pub fn new(input: usize, hidden: usize, code: usize) -> Self {
        LayerDims {
            input,
            hidden,
            code,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsfNetModel {
    pub dims: LayerDims,
    pub classes: usize,
    /// Encoder: hidden x input.
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// Encoder: code x hidden.
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    /// Decoder biases; decoder weights are w2^T and w1^T.
    pub b3: Array1<f64>,
    pub b4: Array1<f64>,
    /// Classifier head: classes x code.
    pub w_head: Array2<f64>,
    pub b_head: Array1<f64>,
    pub hidden_act: Activation,
    pub code_act: Activation,
    pub output_act: Activation,
}

pub const TENSOR_NAMES: [&str; 8] = ["w1", "b1", "w2", "b2", "b3", "b4", "w_head", "b_head"];

/// Per-tensor gradients in the same shapes as the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub b3: Array1<f64>,
    pub b4: Array1<f64>,
    pub w_head: Array2<f64>,
    pub b_head: Array1<f64>,
}

impl Gradients {
    fn zeros(model: &LsfNetModel) -> Self {
        Gradients {
            w1: Array2::zeros(model.w1.raw_dim()),
            b1: Array1::zeros(model.b1.raw_dim()),
            w2: Array2::zeros(model.w2.raw_dim()),
            b2: Array1::zeros(model.b2.raw_dim()),
            b3: Array1::zeros(model.b3.raw_dim()),
            b4: Array1::zeros(model.b4.raw_dim()),
            w_head: Array2::zeros(model.w_head.raw_dim()),
            b_head: Array1::zeros(model.b_head.raw_dim()),
        }
    }

    pub fn tensor(&self, name: &str) -> &[f64] {
        match name {
            "w1" => self.w1.as_slice().unwrap(),
            "b1" => self.b1.as_slice().unwrap(),
            "w2" => self.w2.as_slice().unwrap(),
            "b2" => self.b2.as_slice().unwrap(),
            "b3" => self.b3.as_slice().unwrap(),
            "b4" => self.b4.as_slice().unwrap(),
            "w_head" => self.w_head.as_slice().unwrap(),
            "b_head" => self.b_head.as_slice().unwrap(),
            other => panic!("unknown tensor {other}"),
        }
    }
}

struct EncodeCache {
    pre1: Array2<f64>,
    h1: Array2<f64>,
    pre2: Array2<f64>,
    z: Array2<f64>,
}

fn glorot_uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit))
}

/// Initialize with fan-scaled uniform weights and zero biases;
/// deterministic per seed.
pub fn init_model(dims: LayerDims, classes: usize, seed: u64) -> Result<LsfNetModel> {
    if dims.input == 0 || dims.hidden == 0 || dims.code == 0 {
        return Err(Error::InvalidArgument("layer dims must be positive".into()));
    }
    if classes < 2 {
        return Err(Error::InvalidArgument("need at least 2 classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(LsfNetModel {
        dims,
        classes,
        w1: glorot_uniform(&mut rng, dims.hidden, dims.input),
        b1: Array1::zeros(dims.hidden),
        w2: glorot_uniform(&mut rng, dims.code, dims.hidden),
        b2: Array1::zeros(dims.code),
        b3: Array1::zeros(dims.hidden),
        b4: Array1::zeros(dims.input),
        w_head: glorot_uniform(&mut rng, classes, dims.code),
        b_head: Array1::zeros(classes),
        hidden_act: Activation::Relu,
        code_act: Activation::Identity,
        output_act: Activation::Identity,
    })
}

impl LsfNetModel {
    pub fn param_count(&self) -> usize {
        self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.b3.len()
            + self.b4.len()
            + self.w_head.len()
            + self.b_head.len()
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut [f64] {
        match name {
            "w1" => self.w1.as_slice_mut().unwrap(),
            "b1" => self.b1.as_slice_mut().unwrap(),
            "w2" => self.w2.as_slice_mut().unwrap(),
            "b2" => self.b2.as_slice_mut().unwrap(),
            "b3" => self.b3.as_slice_mut().unwrap(),
            "b4" => self.b4.as_slice_mut().unwrap(),
            "w_head" => self.w_head.as_slice_mut().unwrap(),
            "b_head" => self.b_head.as_slice_mut().unwrap(),
            other => panic!("unknown tensor {other}"),
        }
    }

    fn check_input(&self, rows: &ArrayView2<f64>) -> Result<()> {
        if rows.ncols() != self.dims.input {
            return Err(Error::Shape(format!(
                "input width {} does not match model D_in {}",
                rows.ncols(),
                self.dims.input
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    fn encode_cached(&self, rows: &ArrayView2<f64>) -> EncodeCache {
        let pre1 = rows.dot(&self.w1.t()) + &self.b1;
        let h1 = self.hidden_act.apply(&pre1);
        let pre2 = h1.dot(&self.w2.t()) + &self.b2;
        let z = self.code_act.apply(&pre2);
        EncodeCache { pre1, h1, pre2, z }
    }

    /// Fused code per row: S x D_code.
    pub fn encode(&self, rows: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(rows)?;
        Ok(self.encode_cached(rows).z)
    }

    /// Full autoencoder pass through the tied decoder: S x D_in.
    pub fn reconstruct(&self, rows: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(rows)?;
        let cache = self.encode_cached(rows);
        let pre3 = cache.z.dot(&self.w2) + &self.b3;
        let h3 = self.hidden_act.apply(&pre3);
        let pre4 = h3.dot(&self.w1) + &self.b4;
        Ok(self.output_act.apply(&pre4))
    }

    /// Raw classifier scores: S x C. Softmax happens inside the loss only.
    pub fn classify_logits(&self, rows: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let z = self.encode(rows)?;
        Ok(z.dot(&self.w_head.t()) + &self.b_head)
    }

    /// Mean squared reconstruction error over all entries.
    pub fn reconstruction_loss(&self, rows: &ArrayView2<f64>) -> Result<f64> {
        let xhat = self.reconstruct(rows)?;
        let diff = &xhat - rows;
        Ok(diff.iter().map(|v| v * v).sum::<f64>() / diff.len() as f64)
    }

    /// Mean cross-entropy of the softmaxed logits against integer labels.
    pub fn classification_loss(&self, rows: &ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
        let logits = self.classify_logits(rows)?;
        self.check_labels(labels, logits.nrows())?;
        let mut total = 0.0;
        for (row, &label) in logits.rows().into_iter().zip(labels) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
            total += log_sum - row[label];
        }
        Ok(total / labels.len() as f64)
    }

    fn check_labels(&self, labels: &[usize], n_rows: usize) -> Result<()> {
        if labels.len() != n_rows {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                n_rows
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range (C={})",
                self.classes
            )));
        }
        Ok(())
    }

    /// Reconstruction loss and gradients. Tied weights pick up both the
    /// encoder-side and decoder-side contributions in w1 and w2.
    pub fn reconstruction_grads(&self, rows: &ArrayView2<f64>) -> Result<(f64, Gradients)> {
        self.check_input(rows)?;
        let cache = self.encode_cached(rows);
        let pre3 = cache.z.dot(&self.w2) + &self.b3;
        let h3 = self.hidden_act.apply(&pre3);
        let pre4 = h3.dot(&self.w1) + &self.b4;
        let xhat = self.output_act.apply(&pre4);

        let diff = &xhat - rows;
        let loss = diff.iter().map(|v| v * v).sum::<f64>() / diff.len() as f64;

        let mut grads = Gradients::zeros(self);
        let dxhat = diff.mapv(|v| 2.0 * v / (rows.nrows() * rows.ncols()) as f64);
        let dpre4 = &dxhat * &self.output_act.derivative(&pre4);
        grads.b4 = dpre4.sum_axis(Axis(0));
        grads.w1 = grads.w1 + h3.t().dot(&dpre4); // decoder role of w1
        let dh3 = dpre4.dot(&self.w1.t());
        let dpre3 = &dh3 * &self.hidden_act.derivative(&pre3);
        grads.b3 = dpre3.sum_axis(Axis(0));
        grads.w2 = grads.w2 + cache.z.t().dot(&dpre3); // decoder role of w2
        let dz = dpre3.dot(&self.w2.t());
        self.backprop_encoder(rows, &cache, &dz, &mut grads);
        Ok((loss, grads))
    }

    /// Cross-entropy loss and gradients on the shared encoder plus head.
    pub fn classification_grads(
        &self,
        rows: &ArrayView2<f64>,
        labels: &[usize],
    ) -> Result<(f64, Gradients)> {
        self.check_input(rows)?;
        self.check_labels(labels, rows.nrows())?;
        let cache = self.encode_cached(rows);
        let logits = cache.z.dot(&self.w_head.t()) + &self.b_head;

        let n = rows.nrows() as f64;
        let mut loss = 0.0;
        let mut dlogits = Array2::<f64>::zeros(logits.raw_dim());
        for (i, (row, &label)) in logits.rows().into_iter().zip(labels).enumerate() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            loss += sum.ln() + max - row[label];
            for (c, &e) in exps.iter().enumerate() {
                let p = e / sum;
                dlogits[[i, c]] = (p - if c == label { 1.0 } else { 0.0 }) / n;
            }
        }
        loss /= n;

        let mut grads = Gradients::zeros(self);
        grads.w_head = dlogits.t().dot(&cache.z);
        grads.b_head = dlogits.sum_axis(Axis(0));
        let dz = dlogits.dot(&self.w_head);
        self.backprop_encoder(rows, &cache, &dz, &mut grads);
        Ok((loss, grads))
    }

    fn backprop_encoder(
        &self,
        rows: &ArrayView2<f64>,
        cache: &EncodeCache,
        dz: &Array2<f64>,
        grads: &mut Gradients,
    ) {
        let dpre2 = dz * &self.code_act.derivative(&cache.pre2);
        grads.b2 = &grads.b2 + &dpre2.sum_axis(Axis(0));
        grads.w2 = &grads.w2 + &dpre2.t().dot(&cache.h1);
        let dh1 = dpre2.dot(&self.w2);
        let dpre1 = &dh1 * &self.hidden_act.derivative(&cache.pre1);
        grads.b1 = &grads.b1 + &dpre1.sum_axis(Axis(0));
        grads.w1 = &grads.w1 + &dpre1.t().dot(rows);
    }

    /// One SGD step on the autoencoder parameters; returns the pre-step loss.
    pub fn train_step_ae(&mut self, rows: &ArrayView2<f64>, lr: f64) -> Result<f64> {
        let (loss, grads) = self.reconstruction_grads(rows)?;
        if !loss.is_finite() {
            return Err(Error::Divergence("reconstruction loss is non-finite".into()));
        }
        self.w1.scaled_add(-lr, &grads.w1);
        self.b1.scaled_add(-lr, &grads.b1);
        self.w2.scaled_add(-lr, &grads.w2);
        self.b2.scaled_add(-lr, &grads.b2);
        self.b3.scaled_add(-lr, &grads.b3);
        self.b4.scaled_add(-lr, &grads.b4);
        Ok(loss)
    }

    /// One SGD step on the shared encoder plus head; decoder biases untouched.
    pub fn train_step_cls(
        &mut self,
        rows: &ArrayView2<f64>,
        labels: &[usize],
        lr: f64,
    ) -> Result<f64> {
        let (loss, grads) = self.classification_grads(rows, labels)?;
        if !loss.is_finite() {
            return Err(Error::Divergence("classification loss is non-finite".into()));
        }
        self.w1.scaled_add(-lr, &grads.w1);
        self.b1.scaled_add(-lr, &grads.b1);
        self.w2.scaled_add(-lr, &grads.w2);
        self.b2.scaled_add(-lr, &grads.b2);
        self.w_head.scaled_add(-lr, &grads.w_head);
        self.b_head.scaled_add(-lr, &grads.b_head);
        Ok(loss)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr_autoencoder: f64,
    pub lr_classifier: f64,
    /// Epoch cap: one iteration is a full pass over the batch set.
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop early once both losses improve by less than this relative
    /// amount over `early_stop_patience` consecutive epochs. Disabled when
    /// `None`.
    pub early_stop_tol: Option<f64>,
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_autoencoder: 1e-3,
            lr_classifier: 1e-2,
            iterations: 200,
            batch_size: 256,
            seed: 0,
            early_stop_tol: None,
            early_stop_patience: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Reconstruction,
    Classification,
}

#[derive(Debug, Clone, Copy)]
pub struct LossRecord {
    pub epoch: usize,
    pub batch: usize,
    pub kind: LossKind,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LossHistory {
    pub records: Vec<LossRecord>,
}

impl LossHistory {
    pub fn curve(&self, kind: LossKind) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.value)
            .collect()
    }

    fn epoch_means(&self, kind: LossKind, epoch: usize) -> f64 {
        let values: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.kind == kind && r.epoch == epoch)
            .map(|r| r.value)
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Alternating training: one reconstruction step then one classification
/// step per batch, repeated for up to `config.iterations` epochs.
pub fn train(
    model: &mut LsfNetModel,
    batches: &[(Array2<f64>, Vec<usize>)],
    config: &TrainConfig,
) -> Result<LossHistory> {
    if batches.is_empty() {
        return Err(Error::InvalidArgument("no training batches".into()));
    }
    if config.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be >= 1".into()));
    }
    let mut history = LossHistory::default();
    let mut stale_epochs = 0usize;
    let mut prev: Option<(f64, f64)> = None;
    for epoch in 0..config.iterations {
        for (batch_idx, (rows, labels)) in batches.iter().enumerate() {
            let l1 = model
                .train_step_ae(&rows.view(), config.lr_autoencoder)
                .map_err(|e| stamp(e, epoch, batch_idx))?;
            history.records.push(LossRecord {
                epoch,
                batch: batch_idx,
                kind: LossKind::Reconstruction,
                value: l1,
            });
            let l2 = model
                .train_step_cls(&rows.view(), labels, config.lr_classifier)
                .map_err(|e| stamp(e, epoch, batch_idx))?;
            history.records.push(LossRecord {
                epoch,
                batch: batch_idx,
                kind: LossKind::Classification,
                value: l2,
            });
        }
        if let Some(tol) = config.early_stop_tol {
            let l1 = history.epoch_means(LossKind::Reconstruction, epoch);
            let l2 = history.epoch_means(LossKind::Classification, epoch);
            if let Some((p1, p2)) = prev {
                let r1 = (p1 - l1) / p1.abs().max(f64::MIN_POSITIVE);
                let r2 = (p2 - l2) / p2.abs().max(f64::MIN_POSITIVE);
                if r1 < tol && r2 < tol {
                    stale_epochs += 1;
                } else {
                    stale_epochs = 0;
                }
                if stale_epochs >= config.early_stop_patience {
                    break;
                }
            }
            prev = Some((l1, l2));
        }
    }
    Ok(history)
}

fn stamp(err: Error, epoch: usize, batch: usize) -> Error {
    match err {
        Error::Divergence(msg) => {
            Error::Divergence(format!("{msg} (epoch {epoch}, batch {batch})"))
        }
        other => other,
    }
}

/// Central-difference check of both losses' gradients over every
/// parameter entry; returns the worst relative error seen.
pub fn gradient_check_max_rel_error(
    model: &LsfNetModel,
    rows: &ArrayView2<f64>,
    labels: &[usize],
    h: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let checks: [Box<dyn Fn(&LsfNetModel) -> Result<(f64, Gradients)>>; 2] = [
        Box::new(|m: &LsfNetModel| m.reconstruction_grads(rows)),
        Box::new(|m: &LsfNetModel| m.classification_grads(rows, labels)),
    ];
    for check in &checks {
        let (_, grads) = check(model)?;
        for name in TENSOR_NAMES {
            for idx in 0..grads.tensor(name).len() {
                let mut plus = model.clone();
                plus.tensor_mut(name)[idx] += h;
                let mut minus = model.clone();
                minus.tensor_mut(name)[idx] -= h;
                let numeric = (check(&plus)?.0 - check(&minus)?.0) / (2.0 * h);
                let analytic = grads.tensor(name)[idx];
                let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max((analytic - numeric).abs() / denom);
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    magic: String,
    version: u16,
    input: usize,
    hidden: usize,
    code: usize,
    classes: usize,
    activations: [Activation; 3],
}

/// Write the model file plus a JSON sidecar (`<path>.json`) with the header.
pub fn save_model(path: &Path, model: &LsfNetModel) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(MODEL_MAGIC).map_err(|e| Error::io(path, e))?;
    w.write_u16::<LittleEndian>(MODEL_VERSION)
        .map_err(|e| Error::io(path, e))?;
    for dim in [model.dims.input, model.dims.hidden, model.dims.code, model.classes] {
        w.write_u32::<LittleEndian>(dim as u32)
            .map_err(|e| Error::io(path, e))?;
    }
    for act in [model.hidden_act, model.code_act, model.output_act] {
        w.write_u8(act.code()).map_err(|e| Error::io(path, e))?;
    }
    for name in TENSOR_NAMES {
        let slice = match name {
            "w1" => model.w1.as_slice().unwrap(),
            "b1" => model.b1.as_slice().unwrap(),
            "w2" => model.w2.as_slice().unwrap(),
            "b2" => model.b2.as_slice().unwrap(),
            "b3" => model.b3.as_slice().unwrap(),
            "b4" => model.b4.as_slice().unwrap(),
            "w_head" => model.w_head.as_slice().unwrap(),
            "b_head" => model.b_head.as_slice().unwrap(),
            _ => unreachable!(),
        };
        io_util::write_f64_slice(&mut w, slice, path)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let header = ModelHeader {
        magic: "LSFM".into(),
        version: MODEL_VERSION,
        input: model.dims.input,
        hidden: model.dims.hidden,
        code: model.dims.code,
        classes: model.classes,
        activations: [model.hidden_act, model.code_act, model.output_act],
    };
    let sidecar = path.with_extension(format!(
        "{}json",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let json = serde_json::to_string_pretty(&header)
        .map_err(|e| Error::format(&sidecar, e.to_string()))?;
    std::fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))
}

pub fn load_model(path: &Path) -> Result<LsfNetModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    io_util::check_magic(&mut r, MODEL_MAGIC, path)?;
    let version = io_util::read_u16(&mut r, path)?;
    if version != MODEL_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let input = io_util::read_u32(&mut r, path)? as usize;
    let hidden = io_util::read_u32(&mut r, path)? as usize;
    let code = io_util::read_u32(&mut r, path)? as usize;
    let classes = io_util::read_u32(&mut r, path)? as usize;
    let mut acts = [Activation::Identity; 3];
    for act in &mut acts {
        let mut byte = [0u8; 1];
        std::io::Read::read_exact(&mut r, &mut byte).map_err(|e| Error::io(path, e))?;
        *act = Activation::from_code(byte[0], path)?;
    }
    let read2 = |r: &mut BufReader<File>, rows: usize, cols: usize| -> Result<Array2<f64>> {
        let data = io_util::read_f64_vec(r, rows * cols, path)?;
        Ok(Array2::from_shape_vec((rows, cols), data).expect("length matches"))
    };
    let read1 = |r: &mut BufReader<File>, len: usize| -> Result<Array1<f64>> {
        Ok(Array1::from_vec(io_util::read_f64_vec(r, len, path)?))
    };
    let w1 = read2(&mut r, hidden, input)?;
    let b1 = read1(&mut r, hidden)?;
    let w2 = read2(&mut r, code, hidden)?;
    let b2 = read1(&mut r, code)?;
    let b3 = read1(&mut r, hidden)?;
    let b4 = read1(&mut r, input)?;
    let w_head = read2(&mut r, classes, code)?;
    let b_head = read1(&mut r, classes)?;
    let model = LsfNetModel {
        dims: LayerDims::new(input, hidden, code),
        classes,
        w1,
        b1,
        w2,
        b2,
        b3,
        b4,
        w_head,
        b_head,
        hidden_act: acts[0],
        code_act: acts[1],
        output_act: acts[2],
    };
    if model.param_count() == 0 || model.w1.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(path, "model parameters not finite"));
    }
    Ok(model)
}
