//! Neural indicator of the Pareto manifold.
//!
//! A fully connected network with `tanh` hidden layers and a two-way
//! softmax head. Output 1 is the Pareto class. Training is full batch:
//! binary cross-entropy against labels that come from the Fritz-John
//! residual alone, optimised with AdaMax.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fjc;
use crate::problem::MooProblem;

/// Checkpoint format tag.
pub const CHECKPOINT_FORMAT: &str = "suhnpf-mlp-v1";
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// AdaMax hyperparameters and moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaMax {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<f64>,
    max_norm: Vec<f64>,
    step: u64,
}

impl AdaMax {
    fn new(params: usize) -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            first_moment: vec![0.0; params],
            max_norm: vec![0.0; params],
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Clears the moment estimates and the bias-correction clock.
    pub fn reset(&mut self) {
        self.first_moment.fill(0.0);
        self.max_norm.fill(0.0);
        self.step = 0;
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let lr = self.learning_rate / (1.0 - self.beta1.powi(self.step as i32));
        for (((p, g), m), u) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.first_moment)
            .zip(&mut self.max_norm)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *u = (self.beta2 * *u).max(g.abs());
            *p -= lr * *m / (*u + self.epsilon);
        }
    }
}

/// Points with hard labels (1 = Pareto).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    inputs: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl LabeledBatch {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::rejected(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::rejected("labels must be 0 or 1"));
        }
        if let Some(dim) = inputs.first().map(Vec::len) {
            if inputs.iter().any(|x| x.len() != dim) {
                return Err(Error::rejected("inputs have mixed dimensions"));
            }
        }
        Ok(Self { inputs, labels })
    }

    /// Label 1 wherever `|residual| <= eps_inner`.
    pub fn from_residuals(
        inputs: Vec<Vec<f64>>,
        residuals: &[f64],
        eps_inner: f64,
    ) -> Result<Self> {
        let labels = residuals
            .iter()
            .map(|r| u8::from(r.abs() <= eps_inner))
            .collect();
        Self::new(inputs, labels)
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Labels points by the Fritz-John residual threshold.
pub fn label_batch(
    p: &MooProblem,
    points: &[Vec<f64>],
    eps_inner: f64,
    constrained: bool,
) -> Result<LabeledBatch> {
    if !(eps_inner > 0.0) {
        return Err(Error::rejected("eps_inner must be positive"));
    }
    let residuals = points
        .iter()
        .map(|x| fjc::residual(p, x, constrained))
        .collect::<Result<Vec<_>>>()?;
    LabeledBatch::from_residuals(points.to_vec(), &residuals, eps_inner)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldClassifier {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
    optimizer: AdaMax,
    scaling: InputScaling,
}

/// Fixed affine map `(x - offset) * scale` applied before the first layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputScaling {
    pub fn identity(n: usize) -> Self {
        Self {
            offset: vec![0.0; n],
            scale: vec![1.0; n],
        }
    }

    /// Maps each box `[lo, hi]` onto `[-1, 1]`.
    pub fn from_bounds(bounds: &[crate::problem::Bounds]) -> Self {
        Self {
            offset: bounds.iter().map(|b| 0.5 * (b.lo + b.hi)).collect(),
            scale: bounds.iter().map(|b| 2.0 / (b.hi - b.lo)).collect(),
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.offset)
            .zip(&self.scale)
            .map(|((v, o), s)| (v - o) * s)
            .collect()
    }
}

/// Offsets of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layer {
    inputs: usize,
    outputs: usize,
    weights: usize,
    biases: usize,
}

impl ManifoldClassifier {
    /// Glorot-uniform weights, zero biases.
    pub fn new(input_dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::rejected("input dimension must be positive"));
        }
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::rejected("need at least one non-empty hidden layer"));
        }
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input_dim);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(2);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        let optimizer = AdaMax::new(params.len());
        Ok(Self {
            layer_sizes,
            params,
            optimizer,
            scaling: InputScaling::identity(input_dim),
        })
    }

    /// Replaces the input map, e.g. with [`InputScaling::from_bounds`].
    pub fn with_scaling(mut self, scaling: InputScaling) -> Result<Self> {
        let n = self.input_dim();
        if scaling.offset.len() != n || scaling.scale.len() != n {
            return Err(Error::rejected(
                "input scaling does not match the input dimension",
            ));
        }
        if scaling
            .scale
            .iter()
            .chain(&scaling.offset)
            .any(|v| !v.is_finite())
        {
            return Err(Error::rejected("input scaling must be finite"));
        }
        self.scaling = scaling;
        Ok(self)
    }

    pub fn scaling(&self) -> &InputScaling {
        &self.scaling
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn set_parameters(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::rejected(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params = params;
        Ok(())
    }

    pub fn optimizer(&self) -> &AdaMax {
        &self.optimizer
    }

    fn layers(&self) -> Vec<Layer> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let layer = Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: offset,
                    biases: offset + w[0] * w[1],
                };
                offset = layer.biases + w[1];
                layer
            })
            .collect()
    }

    /// Activations of every layer; the last entry holds the raw logits.
    fn forward(&self, layers: &[Layer], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(layers.len() + 1);
        acts.push(self.scaling.apply(x));
        for (li, layer) in layers.iter().enumerate() {
            let input = &acts[li];
            let w = &self.params[layer.weights..layer.biases];
            let b = &self.params[layer.biases..layer.biases + layer.outputs];
            let last = li + 1 == layers.len();
            let out: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
                    let z = b[o] + row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
                    if last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// `[P(non-Pareto), P(Pareto)]`.
    pub fn probabilities(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.input_dim() {
            return Err(Error::rejected(format!(
                "classifier expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let acts = self.forward(&self.layers(), x);
        Ok(softmax(acts.last().expect("output layer")))
    }

    /// Probability that `x` lies on the Pareto manifold.
    pub fn indicate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.probabilities(x)?[1])
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, batch: &LabeledBatch) -> Result<f64> {
        self.check_batch(batch)?;
        let layers = self.layers();
        let total: f64 = batch
            .inputs
            .iter()
            .zip(&batch.labels)
            .map(|(x, &y)| {
                let acts = self.forward(&layers, x);
                -log_softmax(acts.last().expect("output layer"))[y as usize]
            })
            .sum();
        Ok(total / batch.len() as f64)
    }

    /// Mean cross-entropy and its gradient by backpropagation.
    pub fn loss_and_gradient(&self, batch: &LabeledBatch) -> Result<(f64, Vec<f64>)> {
        self.check_batch(batch)?;
        let layers = self.layers();
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;

        for (x, &y) in batch.inputs.iter().zip(&batch.labels) {
            let acts = self.forward(&layers, x);
            let logits = acts.last().expect("output layer");
            loss -= log_softmax(logits)[y as usize];

            let probs = softmax(logits);
            let mut delta: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(c, p)| scale * (p - f64::from(u8::from(c == y as usize))))
                .collect();

            for (li, layer) in layers.iter().enumerate().rev() {
                let input = &acts[li];
                for (o, d) in delta.iter().enumerate() {
                    let row = layer.weights + o * layer.inputs;
                    for (i, v) in input.iter().enumerate() {
                        grad[row + i] += d * v;
                    }
                    grad[layer.biases + o] += d;
                }
                if li == 0 {
                    break;
                }
                // Back through the weights, then through tanh of the layer below.
                let w = &self.params[layer.weights..layer.biases];
                delta = (0..layer.inputs)
                    .map(|i| {
                        let back: f64 = delta
                            .iter()
                            .enumerate()
                            .map(|(o, d)| d * w[o * layer.inputs + i])
                            .sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
        Ok((loss * scale, grad))
    }

    /// Full-batch AdaMax for `epochs * steps_per_epoch` updates, stopping
    /// early once the loss reaches `bce_target`. Optimiser moments restart
    /// on every call. Returns the loss measured before each update.
    pub fn train(
        &mut self,
        batch: &LabeledBatch,
        epochs: usize,
        steps_per_epoch: usize,
        bce_target: f64,
    ) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::rejected("training batch is empty"));
        }
        // Each call fits a freshly labelled batch; stale moments from the
        // previous labels stall the first few hundred steps.
        self.optimizer.reset();
        let total = epochs * steps_per_epoch;
        let mut trace = Vec::with_capacity(total);
        for step in 0..total {
            let (loss, grad) = self.loss_and_gradient(batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::numerical(
                    format!("non-finite training loss at step {step}"),
                    None,
                ));
            }
            trace.push(loss);
            if loss <= bce_target {
                break;
            }
            self.optimizer.update(&mut self.params, &grad);
            if self.params.iter().any(|p| !p.is_finite()) {
                return Err(Error::numerical(
                    format!("non-finite parameter after step {step}"),
                    None,
                ));
            }
        }
        Ok(trace)
    }

    fn check_batch(&self, batch: &LabeledBatch) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::rejected("batch is empty"));
        }
        if batch.inputs[0].len() != self.input_dim() {
            return Err(Error::rejected(format!(
                "classifier expects {} inputs, batch has {}",
                self.input_dim(),
                batch.inputs[0].len()
            )));
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let layers = self
            .layers()
            .iter()
            .map(|l| LayerWeights {
                weights: self.params[l.weights..l.biases].to_vec(),
                biases: self.params[l.biases..l.biases + l.outputs].to_vec(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            layer_sizes: self.layer_sizes.clone(),
            input_scaling: Some(self.scaling.clone()),
            layers,
        }
    }

    /// Restores weights; optimizer moments start fresh.
    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::rejected(format!(
                "unsupported checkpoint format '{}'",
                c.format
            )));
        }
        if c.layer_sizes.len() < 3 || c.layer_sizes.last() != Some(&2) {
            return Err(Error::rejected(
                "checkpoint must describe input, hidden and 2-way output layers",
            ));
        }
        if c.layers.len() + 1 != c.layer_sizes.len() {
            return Err(Error::rejected("layer count does not match layer_sizes"));
        }
        let mut params = Vec::new();
        for (w, l) in c.layer_sizes.windows(2).zip(&c.layers) {
            if l.weights.len() != w[0] * w[1] || l.biases.len() != w[1] {
                return Err(Error::rejected("layer weights do not match layer_sizes"));
            }
            params.extend_from_slice(&l.weights);
            params.extend_from_slice(&l.biases);
        }
        let optimizer = AdaMax::new(params.len());
        let n = c.layer_sizes[0];
        Self {
            layer_sizes: c.layer_sizes.clone(),
            params,
            optimizer,
            scaling: InputScaling::identity(n),
        }
        .with_scaling(
            c.input_scaling
                .clone()
                .unwrap_or_else(|| InputScaling::identity(n)),
        )
    }
}

/// Serialised network: layer sizes, the input map and row-major
/// `(out x in)` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub layer_sizes: Vec<usize>,
    /// Identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_scaling: Option<InputScaling>,
    pub layers: Vec<LayerWeights>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

fn softmax(logits: &[f64]) -> [f64; 2] {
    let max = logits[0].max(logits[1]);
    let e0 = (logits[0] - max).exp();
    let e1 = (logits[1] - max).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

fn log_softmax(logits: &[f64]) -> [f64; 2] {
    let max = logits[0].max(logits[1]);
    let lse = max + ((logits[0] - max).exp() + (logits[1] - max).exp()).ln();
    [logits[0] - lse, logits[1] - lse]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BenchmarkId;

    #[test]
    fn parameter_count_and_determinism() {
        let a = ManifoldClassifier::new(2, &[64, 64], 1).unwrap();
        assert_eq!(a.parameter_count(), 2 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
        assert_eq!(a.parameter_count(), 4482);
        let b = ManifoldClassifier::new(2, &[64, 64], 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, ManifoldClassifier::new(2, &[64, 64], 2).unwrap());
        assert!(ManifoldClassifier::new(2, &[], 1).is_err());
    }

    #[test]
    fn zero_weights_give_even_odds() {
        let mut c = ManifoldClassifier::new(3, &[4], 0).unwrap();
        c.set_parameters(vec![0.0; c.parameter_count()]).unwrap();
        assert_eq!(c.probabilities(&[0.0, 0.0, 0.0]).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn probabilities_are_normalised() {
        let c = ManifoldClassifier::new(2, &[16, 16], 4).unwrap();
        for i in 0..50 {
            let x = [i as f64 * 0.37 - 5.0, 3.0 - i as f64 * 0.21];
            let p = c.probabilities(&x).unwrap();
            assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
            let q = c.indicate(&x).unwrap();
            assert!((0.0..=1.0).contains(&q));
        }
        assert!(c.indicate(&[1.0]).is_err());
    }

    #[test]
    fn labels_from_residual_threshold() {
        let quad = BenchmarkId::Quad.build();
        let case1 = BenchmarkId::CaseI.build();
        let b = label_batch(
            &quad.problem,
            &[vec![0.2, 0.2], vec![1.0, 0.0]],
            1e-4,
            false,
        )
        .unwrap();
        assert_eq!(b.labels(), &[1, 0]);
        let b = label_batch(&case1.problem, &[vec![0.5, 0.0]], 1e-4, false).unwrap();
        assert_eq!(b.labels(), &[1]);
        assert!(label_batch(&quad.problem, &[vec![0.0, 0.0]], 0.0, false).is_err());
    }

    #[test]
    fn fits_a_constant_label() {
        let inputs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0 - 1.0, 0.3]).collect();
        let batch = LabeledBatch::new(inputs, vec![1; 20]).unwrap();
        let mut c = ManifoldClassifier::new(2, &[64, 64], 3).unwrap();
        let trace = c.train(&batch, 4, 50, 0.0).unwrap();
        assert_eq!(trace.len(), 200);
        assert!(c.loss(&batch).unwrap() <= 0.05);
    }

    #[test]
    fn separates_half_planes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inputs: Vec<Vec<f64>> = (0..100)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let labels = inputs.iter().map(|x| u8::from(x[1] > 0.0)).collect();
        let batch = LabeledBatch::new(inputs, labels).unwrap();
        let mut c = ManifoldClassifier::new(2, &[64, 64], 5).unwrap();
        c.train(&batch, 10, 50, 0.0).unwrap();
        let correct = batch
            .inputs()
            .iter()
            .zip(batch.labels())
            .filter(|(x, &y)| u8::from(c.indicate(x).unwrap() >= 0.5) == y)
            .count();
        assert!(correct as f64 / batch.len() as f64 >= 0.99, "{correct}");
    }

    #[test]
    fn zero_steps_is_a_no_op() {
        let batch = LabeledBatch::new(vec![vec![0.0, 1.0]], vec![1]).unwrap();
        let mut c = ManifoldClassifier::new(2, &[8], 1).unwrap();
        let before = c.clone();
        assert!(c.train(&batch, 0, 50, 0.0).unwrap().is_empty());
        assert_eq!(c, before);
    }

    #[test]
    fn early_stop_on_target() {
        let batch = LabeledBatch::new(vec![vec![0.0, 1.0]], vec![1]).unwrap();
        let mut c = ManifoldClassifier::new(2, &[8], 1).unwrap();
        let trace = c.train(&batch, 2, 50, 10.0).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(c.optimizer().steps_taken(), 0);
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let inputs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let batch = LabeledBatch::new(inputs, vec![0, 1, 1, 0, 1]).unwrap();
        let c = ManifoldClassifier::new(3, &[8, 8], 6).unwrap();
        let (_, grad) = c.loss_and_gradient(&batch).unwrap();
        let h = 1e-5;
        for i in 0..c.parameter_count() {
            let mut plus = c.clone();
            let mut minus = c.clone();
            let mut p = c.parameters().to_vec();
            p[i] += h;
            plus.set_parameters(p.clone()).unwrap();
            p[i] -= 2.0 * h;
            minus.set_parameters(p).unwrap();
            let fd = (plus.loss(&batch).unwrap() - minus.loss(&batch).unwrap()) / (2.0 * h);
            let scale = grad[i].abs().max(fd.abs()).max(1e-6);
            assert!(
                (grad[i] - fd).abs() / scale <= 1e-4,
                "param {i}: {} vs {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let scaling = InputScaling {
            offset: vec![0.5, -1.0],
            scale: vec![2.0, 0.25],
        };
        let c = ManifoldClassifier::new(2, &[5, 3], 9)
            .unwrap()
            .with_scaling(scaling)
            .unwrap();
        let ck = c.to_checkpoint();
        assert_eq!(ck.format, "suhnpf-mlp-v1");
        let json = serde_json::to_string(&ck).unwrap();
        let back =
            ManifoldClassifier::from_checkpoint(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.parameters(), c.parameters());
        assert_eq!(back.scaling(), c.scaling());
        assert_eq!(
            back.indicate(&[0.3, 0.9]).unwrap(),
            c.indicate(&[0.3, 0.9]).unwrap()
        );
        let mut bad = ck;
        bad.format = "other".into();
        assert!(ManifoldClassifier::from_checkpoint(&bad).is_err());
    }
}
