//! Desk-scale rate-constrained training: a feed-forward rectifier classifier
//! with analytic gradients, a synthetic blob dataset, and the training loop
//! that re-estimates the distribution shape every batch and descends the
//! combined rate-distortion cost by plain gradient descent.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codec::encode_tensor;
use crate::error::{Error, Result};
use crate::gg::{estimate_rho, solve_shape, SHAPE_MAX, SHAPE_MIN};
use crate::numeric::CompensatedSum;
use crate::rate::{rd_cost, soft_rate, soft_rate_grad, ShapeMode};
use crate::tensor::ParameterTensor;

/// Quantization exponent used for the per-epoch coded-bits metric.
pub const METRICS_QUANT_EXP: i8 = 8;
/// Weighting of the run minimum in the log-transformed cost axis.
pub const LOG_COST_BETA: f64 = 0.995;

/// A feed-forward classifier: affine layers with rectifier activations on
/// hidden layers and identity output. Weight matrices are stored row-major
/// as `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    layer_dims: Vec<usize>,
    weights: Vec<ParameterTensor>,
    biases: Vec<ParameterTensor>,
}

impl Model {
    /// Seeded initialization: weights drawn from a zero-mean normal with
    /// standard deviation `1/sqrt(fan_in)`, biases zero.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(layer_dims, &mut rng)
    }

    /// Same as [`Model::init`], drawing from a caller-owned stream.
    pub fn init_with_rng(layer_dims: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::Shape(
                "a model needs at least input and output dims".into(),
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::Shape("zero-width layer".into()));
        }
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for (l, pair) in layer_dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let std = 1.0 / (fan_in as f64).sqrt();
            let values: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * std)
                .collect();
            weights.push(ParameterTensor::new(
                format!("layer{l}.weight"),
                vec![fan_out as u64, fan_in as u64],
                values,
            )?);
            biases.push(ParameterTensor::new(
                format!("layer{l}.bias"),
                vec![fan_out as u64],
                vec![0.0; fan_out],
            )?);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Rebuilds a model from alternating weight/bias records, as written by
    /// [`Model::to_tensors`]. Layer dims are recovered from the weight
    /// shapes; adjacent layers must chain.
    pub fn from_tensors(tensors: Vec<ParameterTensor>) -> Result<Self> {
        if tensors.is_empty() || tensors.len() % 2 != 0 {
            return Err(Error::Shape(format!(
                "expected weight/bias record pairs, got {} records",
                tensors.len()
            )));
        }
        let mut layer_dims = Vec::new();
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in tensors.chunks(2) {
            let (w, b) = (&pair[0], &pair[1]);
            let [fan_out, fan_in] = w.dims() else {
                return Err(Error::Shape(format!(
                    "weight record {:?} is not a matrix",
                    w.name()
                )));
            };
            if b.dims() != [*fan_out] {
                return Err(Error::Shape(format!(
                    "bias record {:?} does not match its weight matrix",
                    b.name()
                )));
            }
            if layer_dims.is_empty() {
                layer_dims.push(*fan_in as usize);
            } else if *layer_dims.last().unwrap() != *fan_in as usize {
                return Err(Error::Shape("layer dims do not chain".into()));
            }
            layer_dims.push(*fan_out as usize);
            weights.push(w.clone());
            biases.push(b.clone());
        }
        Ok(Self {
            layer_dims,
            weights,
            biases,
        })
    }

    /// Weight and bias records in layer order, suitable for a GGRT archive.
    pub fn to_tensors(&self) -> Vec<ParameterTensor> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.clone());
            out.push(b.clone());
        }
        out
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn weight_values(&self, layer: usize) -> &[f64] {
        self.weights[layer].values()
    }

    pub fn bias_values(&self, layer: usize) -> &[f64] {
        self.biases[layer].values()
    }

    pub fn weight_values_mut(&mut self, layer: usize) -> &mut [f64] {
        self.weights[layer].values_mut()
    }

    pub fn bias_values_mut(&mut self, layer: usize) -> &mut [f64] {
        self.biases[layer].values_mut()
    }

    /// Concatenates parameters in canonical order: per layer, weights then
    /// (optionally) bias.
    pub fn collect_params(&self, include_biases: bool) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count(include_biases));
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.values());
            if include_biases {
                out.extend_from_slice(b.values());
            }
        }
        out
    }

    pub fn param_count(&self, include_biases: bool) -> usize {
        self.weights
            .iter()
            .map(|w| w.param_count())
            .sum::<usize>()
            + if include_biases {
                self.biases.iter().map(|b| b.param_count()).sum::<usize>()
            } else {
                0
            }
    }

    pub fn params_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|t| t.values().iter().all(|v| v.is_finite()))
    }

    /// Logits for one input row.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, model expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut activation = input.to_vec();
        let last = self.layer_count() - 1;
        for l in 0..self.layer_count() {
            let mut z = affine(&self.weights[l], &self.biases[l], &activation);
            if l != last {
                for v in &mut z {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activation = z;
        }
        Ok(activation)
    }
}

fn affine(w: &ParameterTensor, b: &ParameterTensor, x: &[f64]) -> Vec<f64> {
    let fan_in = x.len();
    let wv = w.values();
    b.values()
        .iter()
        .enumerate()
        .map(|(o, &bias)| {
            let row = &wv[o * fan_in..(o + 1) * fan_in];
            bias + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

/// Per-parameter gradients, mirroring the model layout.
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Mean softmax cross-entropy over the batch and its gradients with respect
/// to every weight and bias, by backpropagation.
pub fn loss_and_grad(
    model: &Model,
    features: &[f64],
    labels: &[usize],
) -> Result<(f64, ModelGrads)> {
    let dim = model.input_dim();
    let classes = model.output_dim();
    let batch = labels.len();
    if batch == 0 || features.len() != batch * dim {
        return Err(Error::Shape(format!(
            "batch of {batch} labels with {} feature values (dim {dim})",
            features.len()
        )));
    }
    for &y in labels {
        if y >= classes {
            return Err(Error::Domain(format!(
                "label {y} out of range for {classes} classes"
            )));
        }
    }

    let layers = model.layer_count();
    let mut grads = ModelGrads {
        weights: (0..layers)
            .map(|l| vec![0.0; model.weight_values(l).len()])
            .collect(),
        biases: (0..layers)
            .map(|l| vec![0.0; model.bias_values(l).len()])
            .collect(),
    };

    let mut loss_acc = CompensatedSum::new();
    let inv_batch = 1.0 / batch as f64;
    for (row, &label) in labels.iter().enumerate() {
        let input = &features[row * dim..(row + 1) * dim];

        // Forward pass keeping pre-rectifier activations of every layer.
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
        activations.push(input.to_vec());
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(layers);
        for l in 0..layers {
            let z = affine(&model.weights[l], &model.biases[l], &activations[l]);
            pre.push(z.clone());
            let mut a = z;
            if l != layers - 1 {
                for v in &mut a {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(a);
        }

        // Stable softmax cross-entropy; delta = (p - onehot) / batch.
        let logits = &activations[layers];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|&z| (z - max).exp()).sum();
        let log_sum = max + sum_exp.ln();
        loss_acc.add(log_sum - logits[label]);
        let mut delta: Vec<f64> = logits
            .iter()
            .map(|&z| (z - log_sum).exp() * inv_batch)
            .collect();
        delta[label] -= inv_batch;

        // Backward pass.
        for l in (0..layers).rev() {
            let a_prev = &activations[l];
            let fan_in = a_prev.len();
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            for (o, &d) in delta.iter().enumerate() {
                gb[o] += d;
                let row = &mut gw[o * fan_in..(o + 1) * fan_in];
                for (g, &a) in row.iter_mut().zip(a_prev) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let wv = model.weight_values(l);
                let mut next = vec![0.0; fan_in];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &wv[o * fan_in..(o + 1) * fan_in];
                    for (n, &w) in next.iter_mut().zip(row) {
                        *n += d * w;
                    }
                }
                // Rectifier gate on the pre-activation.
                for (n, &z) in next.iter_mut().zip(&pre[l - 1]) {
                    if z <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = next;
            }
        }
    }

    Ok((loss_acc.value() * inv_batch, grads))
}

/// Fraction of argmax-correct predictions; argmax ties resolve to the lowest
/// class index.
pub fn evaluate(model: &Model, split: &Split) -> Result<f64> {
    if split.len() == 0 {
        return Err(Error::Domain("cannot evaluate on an empty split".into()));
    }
    let dim = model.input_dim();
    if split.features.len() != split.len() * dim {
        return Err(Error::Shape("split feature width mismatch".into()));
    }
    let mut correct = 0usize;
    for (row, &label) in split.labels.iter().enumerate() {
        let logits = model.forward(&split.features[row * dim..(row + 1) * dim])?;
        let mut best = 0usize;
        for (c, &z) in logits.iter().enumerate().skip(1) {
            if z > logits[best] {
                best = c;
            }
        }
        if best == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / split.len() as f64)
}

/// One labeled subset: features row-major, one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Synthetic classification data with a held-out test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub classes: usize,
    pub train: Split,
    pub test: Split,
}

/// Deterministic Gaussian-blob dataset: class centers are `3 * N(0, 1)` per
/// coordinate, points add `spread * N(0, 1)` noise, and a seeded shuffle
/// fixes an 80/20 train/test split.
pub fn gen_blobs(
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes == 0 || per_class == 0 || dim == 0 {
        return Err(Error::Domain(
            "classes, per_class, and dim must be positive".into(),
        ));
    }
    if !spread.is_finite() || spread < 0.0 {
        return Err(Error::Domain(format!(
            "spread must be finite and >= 0, got {spread}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<f64> = (0..classes * dim)
        .map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let total = classes * per_class;
    let mut features = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);
    for c in 0..classes {
        for _ in 0..per_class {
            for d in 0..dim {
                features.push(centers[c * dim + d] + spread * rng.sample::<f64, _>(StandardNormal));
            }
            labels.push(c);
        }
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let n_train = total * 4 / 5;
    let take = |idx: &[usize]| {
        let mut f = Vec::with_capacity(idx.len() * dim);
        let mut l = Vec::with_capacity(idx.len());
        for &i in idx {
            f.extend_from_slice(&features[i * dim..(i + 1) * dim]);
            l.push(labels[i]);
        }
        Split {
            features: f,
            labels: l,
        }
    };
    let train = take(&order[..n_train]);
    let test = take(&order[n_train..]);
    Ok(Dataset {
        dim,
        classes,
        train,
        test,
    })
}

/// Training hyperparameters. `hidden_dims` fixes the classifier width; the
/// input and output widths come from the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_dims: Vec<usize>,
    pub lambda: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shape_mode: ShapeMode,
    /// Whether the rate term covers biases as well as weights.
    pub include_biases: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Domain(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::Domain(format!(
                "epsilon must be finite and > 0, got {}",
                self.epsilon
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Domain(format!(
                "learning rate must be finite and > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Domain(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(Error::Domain("zero-width hidden layer".into()));
        }
        if let ShapeMode::Fixed(nu) = self.shape_mode {
            if !(SHAPE_MIN..=SHAPE_MAX).contains(&nu) {
                return Err(Error::Domain(format!(
                    "fixed shape must lie in [{SHAPE_MIN}, {SHAPE_MAX}], got {nu}"
                )));
            }
        }
        Ok(())
    }
}

/// What one descent step saw: distortion, soft rate, their combination, and
/// the shape the rate term used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub distortion: f64,
    pub rate: f64,
    pub cost: f64,
    pub shape: f64,
}

/// Shape used by the rate term this batch: re-estimated from the in-scope
/// parameters in adaptive mode, constant otherwise. A degenerate parameter
/// set (all zeros) clamps to `SHAPE_MAX`, where the rate gradient of tiny
/// values vanishes.
fn batch_shape(params: &[f64], mode: ShapeMode) -> Result<f64> {
    match mode {
        ShapeMode::Fixed(nu) => Ok(nu),
        ShapeMode::Adaptive => match estimate_rho(params) {
            // Overflowing moments mean an extremely heavy tail; take the
            // interval end and let the divergence check decide the run's fate.
            Ok(rho_hat) if !rho_hat.is_finite() => Ok(SHAPE_MIN),
            Ok(rho_hat) => solve_shape(rho_hat),
            Err(Error::DegenerateSample(_)) => Ok(SHAPE_MAX),
            Err(e) => Err(e),
        },
    }
}

/// One batch of rate-constrained gradient descent: estimate the shape from
/// all in-scope parameters, combine distortion and soft rate into the cost,
/// and update every parameter by plain SGD on the total gradient.
pub fn backslash_step(
    model: &mut Model,
    features: &[f64],
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<StepStats> {
    let params = model.collect_params(cfg.include_biases);
    let shape = batch_shape(&params, cfg.shape_mode)?;
    let rate = soft_rate(&params, shape, cfg.epsilon)?;
    let rate_grad = soft_rate_grad(&params, shape, cfg.epsilon)?;
    let (distortion, grads) = loss_and_grad(model, features, labels)?;
    let cost = rd_cost(distortion, rate, cfg.lambda)?;

    let eta = cfg.learning_rate;
    let lambda = cfg.lambda;
    let mut cursor = 0usize;
    for l in 0..model.layer_count() {
        {
            let gw = &grads.weights[l];
            let rg = &rate_grad[cursor..cursor + gw.len()];
            let wv = model.weight_values_mut(l);
            for ((w, &g), &r) in wv.iter_mut().zip(gw).zip(rg) {
                *w -= eta * (g + lambda * r);
            }
            cursor += gw.len();
        }
        let gb = &grads.biases[l];
        if cfg.include_biases {
            let rg = &rate_grad[cursor..cursor + gb.len()];
            let bv = model.bias_values_mut(l);
            for ((b, &g), &r) in bv.iter_mut().zip(gb).zip(rg) {
                *b -= eta * (g + lambda * r);
            }
            cursor += gb.len();
        } else {
            let bv = model.bias_values_mut(l);
            for (b, &g) in bv.iter_mut().zip(gb) {
                *b -= eta * g;
            }
        }
    }

    Ok(StepStats {
        distortion,
        rate,
        cost,
        shape,
    })
}

/// One epoch's log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean batch distortion.
    pub distortion: f64,
    /// Mean batch soft rate.
    pub rate: f64,
    /// `distortion + lambda * rate`.
    pub cost: f64,
    /// `log10(cost - beta * min cost)` with the run minimum filled in after
    /// the run.
    pub log_cost: f64,
    /// Shape fitted to the in-scope parameters at epoch end.
    pub shape: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Order-0 exp-Golomb bits per parameter at quantization step 2^-8.
    pub eg0_avg_bits: f64,
}

/// Per-epoch records of a complete run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub records: Vec<EpochRecord>,
}

impl TrainMetrics {
    pub fn final_record(&self) -> &EpochRecord {
        self.records.last().expect("a run has at least one epoch")
    }

    /// Line-delimited JSON, one record per epoch.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec).expect("metrics serialize"));
            out.push('\n');
        }
        out
    }
}

/// Runs the full training loop: per-epoch seeded shuffling, one
/// [`backslash_step`] per batch, divergence detection, and metrics logging.
/// Fully deterministic for a given config and dataset.
pub fn train(cfg: &TrainConfig, dataset: &Dataset) -> Result<(Model, TrainMetrics)> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::Domain("training split is empty".into()));
    }
    let mut layer_dims = Vec::with_capacity(cfg.hidden_dims.len() + 2);
    layer_dims.push(dataset.dim);
    layer_dims.extend_from_slice(&cfg.hidden_dims);
    layer_dims.push(dataset.classes);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::init_with_rng(&layer_dims, &mut rng)?;

    let dim = dataset.dim;
    let n_train = dataset.train.len();
    let mut records = Vec::with_capacity(cfg.epochs);
    // Reference cost for the explosion check: the first batch of epoch 1.
    let mut initial_cost: Option<f64> = None;
    let mut batch_features = Vec::with_capacity(cfg.batch_size * dim);
    let mut batch_labels = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..n_train).collect();
        order.shuffle(&mut rng);

        let mut d_sum = CompensatedSum::new();
        let mut r_sum = CompensatedSum::new();
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            batch_features.clear();
            batch_labels.clear();
            for &i in chunk {
                batch_features.extend_from_slice(&dataset.train.features[i * dim..(i + 1) * dim]);
                batch_labels.push(dataset.train.labels[i]);
            }
            let stats = backslash_step(&mut model, &batch_features, &batch_labels, cfg)?;
            let exploded = initial_cost
                .map(|j0| stats.cost > 1e6 * j0)
                .unwrap_or(false);
            if !stats.cost.is_finite() || !model.params_finite() || exploded {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                    cost: stats.cost,
                });
            }
            if initial_cost.is_none() {
                initial_cost = Some(stats.cost);
            }
            d_sum.add(stats.distortion);
            r_sum.add(stats.rate);
            batches += 1;
        }

        let distortion = d_sum.value() / batches as f64;
        let rate = r_sum.value() / batches as f64;
        let cost = distortion + cfg.lambda * rate;

        let params = model.collect_params(cfg.include_biases);
        let shape = match estimate_rho(&params) {
            Ok(rho_hat) => solve_shape(rho_hat)?,
            Err(Error::DegenerateSample(_)) => SHAPE_MAX,
            Err(e) => return Err(e),
        };
        let blob = encode_tensor(&params, METRICS_QUANT_EXP, 0)?;
        let eg0_avg_bits = blob.payload_bit_count as f64 / params.len() as f64;

        records.push(EpochRecord {
            epoch,
            distortion,
            rate,
            cost,
            log_cost: f64::NAN, // filled in below once the run minimum is known
            shape,
            train_accuracy: evaluate(&model, &dataset.train)?,
            test_accuracy: evaluate(&model, &dataset.test)?,
            eg0_avg_bits,
        });
    }

    let min_cost = records
        .iter()
        .map(|r| r.cost)
        .fold(f64::INFINITY, f64::min);
    for rec in &mut records {
        rec.log_cost = (rec.cost - LOG_COST_BETA * min_cost).log10();
    }

    Ok((model, TrainMetrics { records }))
}
