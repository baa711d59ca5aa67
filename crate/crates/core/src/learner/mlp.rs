//! One-hidden-layer perceptron with hand-written backpropagation.
//!
//! Parameters are flattened as `W1 (hidden x input)`, `b1`, `W2 (output x
//! hidden)`, `b2`, each row-major.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GlobalModel, Objective};
use crate::data::{Dataset, Targets};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - x.tanh().powi(2),
        }
    }
}

/// Output layer and the loss it is trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    /// Softmax with mean cross-entropy; targets are class labels.
    SoftmaxCrossEntropy,
    /// Identity output with half the mean squared error; targets are reals.
    LinearMse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    #[serde(default)]
    pub activation: Activation,
    pub head: Head,
}

impl MlpSpec {
    pub fn classifier(input: usize, hidden: usize, classes: usize) -> Self {
        Self {
            input,
            hidden,
            output: classes,
            activation: Activation::Relu,
            head: Head::SoftmaxCrossEntropy,
        }
    }

    pub fn regressor(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            output: 1,
            activation: Activation::Relu,
            head: Head::LinearMse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 || self.output == 0 {
            return Err(Error::Config(format!(
                "layer sizes must be >= 1, got {}-{}-{}",
                self.input, self.hidden, self.output
            )));
        }
        if self.head == Head::LinearMse && self.output != 1 {
            return Err(Error::Config(
                "regression head needs exactly one output".into(),
            ));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }

    /// Layer boundaries within the flat parameter vector.
    pub fn layer_ranges(&self) -> [std::ops::Range<usize>; 4] {
        let w1 = self.hidden * self.input;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.output * self.hidden;
        let b2 = w2 + self.output;
        [0..w1, w1..b1, b1..w2, w2..b2]
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> GlobalModel {
        let mut weights = vec![0.0; self.num_params()];
        let [w1, _, w2, _] = self.layer_ranges();
        let fan = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let l1 = fan(self.input, self.hidden);
        weights[w1]
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-l1..l1));
        let l2 = fan(self.hidden, self.output);
        weights[w2]
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-l2..l2));
        GlobalModel { weights, round: 0 }
    }

    fn views<'a>(
        &self,
        weights: &'a [f64],
    ) -> (
        ArrayView2<'a, f64>,
        ArrayView1<'a, f64>,
        ArrayView2<'a, f64>,
        ArrayView1<'a, f64>,
    ) {
        let [w1, b1, w2, b2] = self.layer_ranges();
        (
            ArrayView2::from_shape((self.hidden, self.input), &weights[w1]).expect("W1 shape"),
            ArrayView1::from(&weights[b1]),
            ArrayView2::from_shape((self.output, self.hidden), &weights[w2]).expect("W2 shape"),
            ArrayView1::from(&weights[b2]),
        )
    }

    /// Returns `(pre_activation, hidden, logits)`.
    fn forward(
        &self,
        weights: &[f64],
        x: ArrayView2<f64>,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let (w1, b1, w2, b2) = self.views(weights);
        let pre = x.dot(&w1.t()) + b1;
        let act = self.activation;
        let hidden = pre.mapv(|v| act.apply(v));
        let logits = hidden.dot(&w2.t()) + b2;
        (pre, hidden, logits)
    }

    /// Raw network outputs, one row per sample.
    pub fn predict(&self, weights: &[f64], x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(weights, x).2
    }
}

fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// An MLP loss over one device's data.
#[derive(Debug, Clone, Copy)]
pub struct MlpObjective<'a> {
    pub spec: MlpSpec,
    pub data: &'a Dataset,
}

impl<'a> MlpObjective<'a> {
    pub fn new(spec: MlpSpec, data: &'a Dataset) -> Result<Self> {
        spec.validate()?;
        if data.is_empty() {
            return Err(Error::Domain("device holds no samples".into()));
        }
        if data.input_dim() != spec.input {
            return Err(Error::Dimension(format!(
                "data has {} features, network expects {}",
                data.input_dim(),
                spec.input
            )));
        }
        match (&data.targets, spec.head) {
            (Targets::Labels(l), Head::SoftmaxCrossEntropy) => {
                if let Some(bad) = l.iter().find(|&&c| c >= spec.output) {
                    return Err(Error::Domain(format!(
                        "label {bad} out of range for {} classes",
                        spec.output
                    )));
                }
            }
            (Targets::Values(_), Head::LinearMse) => {}
            _ => {
                return Err(Error::Config(
                    "target kind does not match the network head".into(),
                ))
            }
        }
        Ok(Self { spec, data })
    }

    /// Output-layer error `dL/dlogits` and the loss.
    fn output_error(&self, logits: &Array2<f64>) -> (f64, Array2<f64>) {
        let n = logits.nrows() as f64;
        match &self.data.targets {
            Targets::Labels(labels) => {
                let logp = log_softmax_rows(logits);
                let loss = -labels
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| logp[[i, c]])
                    .sum::<f64>()
                    / n;
                let mut delta = logp.mapv(f64::exp);
                for (i, &c) in labels.iter().enumerate() {
                    delta[[i, c]] -= 1.0;
                }
                delta /= n;
                (loss, delta)
            }
            Targets::Values(y) => {
                let resid = &logits.column(0) - &ArrayView1::from(y.as_slice());
                let loss = 0.5 * resid.mapv(|r| r * r).sum() / n;
                let delta = (resid / n).insert_axis(Axis(1));
                (loss, delta)
            }
        }
    }

    pub fn loss_and_gradient(&self, weights: &[f64]) -> (f64, Vec<f64>) {
        let spec = &self.spec;
        let x = self.data.features.view();
        let (pre, hidden, logits) = spec.forward(weights, x);
        let (loss, delta_out) = self.output_error(&logits);
        let (_, _, w2, _) = spec.views(weights);

        let g_w2 = delta_out.t().dot(&hidden);
        let g_b2 = delta_out.sum_axis(Axis(0));
        let act = spec.activation;
        let mut delta_hidden = delta_out.dot(&w2);
        delta_hidden.zip_mut_with(&pre, |d, &z| *d *= act.derivative(z));
        let g_w1 = delta_hidden.t().dot(&x);
        let g_b1 = delta_hidden.sum_axis(Axis(0));

        let mut grad = Vec::with_capacity(spec.num_params());
        extend_flat(&mut grad, g_w1);
        grad.extend(g_b1.iter());
        extend_flat(&mut grad, g_w2);
        grad.extend(g_b2.iter());
        (loss, grad)
    }
}

fn extend_flat(out: &mut Vec<f64>, m: Array2<f64>) {
    if m.is_standard_layout() {
        out.extend_from_slice(m.as_slice().expect("contiguous"));
    } else {
        out.extend(m.iter());
    }
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.spec.num_params()
    }

    fn loss(&self, weights: &[f64]) -> f64 {
        let logits = self.spec.predict(weights, self.data.features.view());
        self.output_error(&logits).0
    }

    fn gradient(&self, weights: &[f64]) -> Vec<f64> {
        self.loss_and_gradient(weights).1
    }
}

pub fn accuracy(predicted: &[usize], labels: &[usize]) -> Result<f64> {
    if labels.is_empty() || predicted.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            predicted.len(),
            labels.len()
        )));
    }
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean squared error divided by the (population) variance of the targets.
pub fn normalized_mse(predicted: &[f64], targets: &[f64]) -> Result<f64> {
    if targets.is_empty() || predicted.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            predicted.len(),
            targets.len()
        )));
    }
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::Domain("targets have zero variance".into()));
    }
    let mse = predicted
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / n;
    Ok(mse / var)
}

/// Accuracy for classification heads, normalised MSE for regression.
pub fn eval_model(spec: &MlpSpec, model: &GlobalModel, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Domain("empty test set".into()));
    }
    let out = spec.predict(&model.weights, test.features.view());
    match &test.targets {
        Targets::Labels(labels) => {
            let predicted: Vec<usize> = out
                .rows()
                .into_iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                            if v > best.1 {
                                (i, v)
                            } else {
                                best
                            }
                        })
                        .0
                })
                .collect();
            accuracy(&predicted, labels)
        }
        Targets::Values(y) => {
            let predicted: Array1<f64> = out.column(0).to_owned();
            normalized_mse(predicted.as_slice().expect("contiguous"), y)
        }
    }
}
