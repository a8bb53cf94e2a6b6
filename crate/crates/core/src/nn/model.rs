use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::{MlpConfig, NnError, BN_EPSILON, BN_MOMENTUM};
use crate::rng::{derive_seed, seeded};

/// Scale applied to the He bound of the output layer, so a fresh model
/// starts close to the uniform distribution.
const OUTPUT_INIT_GAIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics for batch norm; dropout masks drawn from the seed.
    Train { dropout_seed: u64 },
    /// Running statistics; no dropout.
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }
}

/// `w` is stored input-major (`in × out`), so a batch maps as `x · w + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub bn: Option<BatchNorm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub num_classes: usize,
    /// Hidden layers followed by the output layer (which never has batch norm).
    pub layers: Vec<Layer>,
    pub config: MlpConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub gamma: Option<Array1<f64>>,
    pub beta: Option<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.push(g.w.as_slice().expect("standard layout"));
            out.push(g.b.as_slice().expect("standard layout"));
            if let (Some(gamma), Some(beta)) = (&g.gamma, &g.beta) {
                out.push(gamma.as_slice().expect("standard layout"));
                out.push(beta.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn global_norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.layers {
            g.w *= factor;
            g.b *= factor;
            if let Some(x) = &mut g.gamma {
                *x *= factor;
            }
            if let Some(x) = &mut g.beta {
                *x *= factor;
            }
        }
    }
}

/// Everything the backward pass needs from one hidden layer.
struct HiddenCache {
    input: Array2<f64>,
    xhat: Option<Array2<f64>>,
    inv_std: Option<Array1<f64>>,
    batch_mean: Option<Array1<f64>>,
    batch_var: Option<Array1<f64>>,
    pre_relu: Array2<f64>,
    mask: Option<Array2<f64>>,
}

pub(crate) struct ForwardCache {
    hidden: Vec<HiddenCache>,
    last_input: Array2<f64>,
}

/// Build a model with He-uniform weights, zero biases and identity batch norm.
pub fn build_mlp(
    config: &MlpConfig,
    input_dim: usize,
    num_classes: usize,
    seed: u64,
) -> Result<MlpModel, NnError> {
    config.validate()?;
    if input_dim == 0 {
        return Err(NnError::InvalidConfig("input dimension must be positive".into()));
    }
    if num_classes < 2 {
        return Err(NnError::InvalidConfig("at least two classes are required".into()));
    }
    let mut rng = seeded(derive_seed(seed, 0x1417));
    let mut layers = Vec::new();
    let mut fan_in = input_dim;
    let widths = config.layer_sizes();
    for &width in &widths {
        let bound = (6.0 / fan_in as f64).sqrt();
        layers.push(Layer {
            w: Array2::from_shape_fn((fan_in, width), |_| rng.random_range(-bound..bound)),
            b: Array1::zeros(width),
            bn: config.with_batch_norm.then(|| BatchNorm::new(width)),
        });
        fan_in = width;
    }
    let bound = OUTPUT_INIT_GAIN * (6.0 / fan_in as f64).sqrt();
    layers.push(Layer {
        w: Array2::from_shape_fn((fan_in, num_classes), |_| rng.random_range(-bound..bound)),
        b: Array1::zeros(num_classes),
        bn: None,
    });
    Ok(MlpModel {
        input_dim,
        num_classes,
        layers,
        config: config.clone(),
        seed,
    })
}

/// Row-wise softmax, max-shifted.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn add_row(mut m: Array2<f64>, row: &Array1<f64>) -> Array2<f64> {
    m += &row.view().insert_axis(Axis(0));
    m
}

impl MlpModel {
    pub fn hidden_count(&self) -> usize {
        self.layers.len() - 1
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), NnError> {
        if x.ncols() != self.input_dim {
            return Err(NnError::InputDim {
                expected: self.input_dim,
                got: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<f64>, mode: Mode) -> Result<Array2<f64>, NnError> {
        self.forward_cached(x, mode).map(|(logits, _)| logits)
    }

    /// Eval-mode class probabilities.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        Ok(softmax_rows(&self.forward(x, Mode::Eval)?))
    }

    /// Eval-mode argmax, ties to the lowest class index.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, NnError> {
        let logits = self.forward(x, Mode::Eval)?;
        Ok(logits.rows().into_iter().map(|r| argmax(r.as_slice().unwrap())).collect())
    }

    /// Pre-ReLU activations of every hidden layer.
    pub fn pre_activations(&self, x: ArrayView2<f64>, mode: Mode) -> Result<Vec<Array2<f64>>, NnError> {
        let (_, cache) = self.forward_cached(x, mode)?;
        Ok(cache.hidden.into_iter().map(|h| h.pre_relu).collect())
    }

    pub(crate) fn forward_cached(
        &self,
        x: ArrayView2<f64>,
        mode: Mode,
    ) -> Result<(Array2<f64>, ForwardCache), NnError> {
        self.check_input(&x)?;
        let n = x.nrows();
        let train = matches!(mode, Mode::Train { .. });
        if train && self.config.with_batch_norm && n < 2 {
            return Err(NnError::BatchTooSmall(n));
        }
        let mut rng = match mode {
            Mode::Train { dropout_seed } => Some(seeded(dropout_seed)),
            Mode::Eval => None,
        };
        let p = self.config.dropout_rate;
        let mut a = x.to_owned();
        let mut hidden = Vec::with_capacity(self.hidden_count());
        for layer in &self.layers[..self.hidden_count()] {
            let z = add_row(a.dot(&layer.w), &layer.b);
            let (y, xhat, inv_std, batch_mean, batch_var) = match &layer.bn {
                None => (z, None, None, None, None),
                Some(bn) if train => {
                    let mean = z.mean_axis(Axis(0)).unwrap();
                    let centered = &z - &mean.view().insert_axis(Axis(0));
                    let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).unwrap();
                    let inv_std = var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
                    let xhat = centered * inv_std.view().insert_axis(Axis(0));
                    let y = add_row(&xhat * &bn.gamma.view().insert_axis(Axis(0)), &bn.beta);
                    (y, Some(xhat), Some(inv_std), Some(mean), Some(var))
                }
                Some(bn) => {
                    let inv_std = bn.running_var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
                    let scale = &bn.gamma * &inv_std;
                    let shift = &bn.beta - &(&bn.running_mean * &scale);
                    let y = add_row(z * scale.view().insert_axis(Axis(0)), &shift);
                    (y, None, None, None, None)
                }
            };
            let mut out = y.mapv(|v| v.max(0.0));
            let mask = match rng.as_mut() {
                Some(rng) if p > 0.0 => {
                    let keep = 1.0 / (1.0 - p);
                    let mask = Array2::from_shape_fn(out.raw_dim(), |_| {
                        if rng.random::<f64>() < p {
                            0.0
                        } else {
                            keep
                        }
                    });
                    out *= &mask;
                    Some(mask)
                }
                _ => None,
            };
            hidden.push(HiddenCache {
                input: std::mem::replace(&mut a, out),
                xhat,
                inv_std,
                batch_mean,
                batch_var,
                pre_relu: y,
                mask,
            });
        }
        let last = self.layers.last().unwrap();
        let logits = add_row(a.dot(&last.w), &last.b);
        Ok((logits, ForwardCache { hidden, last_input: a }))
    }

    fn check_labels(&self, labels: &[usize], n: usize) -> Result<(), NnError> {
        if labels.len() != n {
            return Err(NnError::InvalidConfig(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(NnError::BadLabel {
                label,
                classes: self.num_classes,
            });
        }
        Ok(())
    }

    /// Mean cross-entropy of `logits` against `labels`.
    pub fn loss(&self, x: ArrayView2<f64>, labels: &[usize], mode: Mode) -> Result<f64, NnError> {
        self.check_labels(labels, x.nrows())?;
        let logits = self.forward(x, mode)?;
        Ok(cross_entropy(&logits, labels))
    }

    /// Training-mode loss and the gradient of every parameter.
    pub fn loss_and_gradients(
        &self,
        x: ArrayView2<f64>,
        labels: &[usize],
        dropout_seed: u64,
    ) -> Result<(f64, Gradients), NnError> {
        let (loss, grads, _) = self.step_gradients(x, labels, dropout_seed)?;
        Ok((loss, grads))
    }

    pub(crate) fn step_gradients(
        &self,
        x: ArrayView2<f64>,
        labels: &[usize],
        dropout_seed: u64,
    ) -> Result<(f64, Gradients, ForwardCache), NnError> {
        self.check_labels(labels, x.nrows())?;
        let (logits, cache) = self.forward_cached(x, Mode::Train { dropout_seed })?;
        let loss = cross_entropy(&logits, labels);
        let n = labels.len() as f64;
        let mut d = softmax_rows(&logits);
        for (i, &l) in labels.iter().enumerate() {
            d[[i, l]] -= 1.0;
        }
        d /= n;

        let mut grads = Vec::with_capacity(self.layers.len());
        let last = self.layers.last().unwrap();
        grads.push(LayerGrad {
            w: cache.last_input.t().dot(&d),
            b: d.sum_axis(Axis(0)),
            gamma: None,
            beta: None,
        });
        let mut da = d.dot(&last.w.t());
        for (layer, hc) in self.layers[..self.hidden_count()].iter().zip(&cache.hidden).rev() {
            if let Some(mask) = &hc.mask {
                da *= mask;
            }
            Zip::from(&mut da).and(&hc.pre_relu).for_each(|g, &y| {
                if y <= 0.0 {
                    *g = 0.0;
                }
            });
            let (dz, gamma, beta) = match (&layer.bn, &hc.xhat, &hc.inv_std) {
                (Some(bn), Some(xhat), Some(inv_std)) => {
                    let dgamma = (&da * xhat).sum_axis(Axis(0));
                    let dbeta = da.sum_axis(Axis(0));
                    let dxhat = &da * &bn.gamma.view().insert_axis(Axis(0));
                    let sum_dxhat = dxhat.sum_axis(Axis(0));
                    let sum_dxhat_xhat = (&dxhat * xhat).sum_axis(Axis(0));
                    let mut dz = dxhat * n;
                    dz -= &sum_dxhat.view().insert_axis(Axis(0));
                    dz -= &(xhat * &sum_dxhat_xhat.view().insert_axis(Axis(0)));
                    dz *= &(inv_std / n).view().insert_axis(Axis(0));
                    (dz, Some(dgamma), Some(dbeta))
                }
                _ => (da, None, None),
            };
            grads.push(LayerGrad {
                w: hc.input.t().dot(&dz),
                b: dz.sum_axis(Axis(0)),
                gamma,
                beta,
            });
            da = dz.dot(&layer.w.t());
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }, cache))
    }

    /// Fold the batch statistics of a training step into the running stats.
    /// The running variance uses the unbiased batch variance.
    pub(crate) fn update_running_stats(&mut self, cache: &ForwardCache, batch: usize) {
        let unbias = if batch > 1 {
            batch as f64 / (batch as f64 - 1.0)
        } else {
            1.0
        };
        for (layer, hc) in self.layers.iter_mut().zip(&cache.hidden) {
            if let (Some(bn), Some(mean), Some(var)) = (&mut layer.bn, &hc.batch_mean, &hc.batch_var) {
                bn.running_mean = &bn.running_mean * (1.0 - BN_MOMENTUM) + mean * BN_MOMENTUM;
                bn.running_var = &bn.running_var * (1.0 - BN_MOMENTUM) + &(var * (unbias * BN_MOMENTUM));
            }
        }
    }

    /// Trainable parameters in a fixed order matching [`Gradients::slices`].
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.w.as_slice_mut().expect("standard layout"));
            out.push(layer.b.as_slice_mut().expect("standard layout"));
            if let Some(bn) = &mut layer.bn {
                out.push(bn.gamma.as_slice_mut().expect("standard layout"));
                out.push(bn.beta.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.len() + l.b.len() + l.bn.as_ref().map_or(0, |bn| 2 * bn.gamma.len()))
            .sum()
    }
}

pub(crate) fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &l) in logits.rows().into_iter().zip(labels) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        total += lse - row[l];
    }
    total / labels.len() as f64
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
