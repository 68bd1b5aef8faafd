//! Toy differentiable classifiers: multinomial logistic regression and a
//! one-hidden-layer tanh MLP, with cross-entropy loss, analytic gradients,
//! and a finite-difference gradient check used as an independent oracle.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::seeding;
use crate::vecmath::ParamVector;

/// One labeled sample.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Example {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Example {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Example { features, label }
    }
}

/// Model architecture. The parameter dimension is a deterministic function
/// of these fields; see [`ModelSpec::param_dim`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ModelSpec {
    /// Multinomial logistic regression: `input_dim·K` weights plus `K` biases.
    Logistic { input_dim: usize, num_classes: usize },
    /// One hidden tanh layer: `input_dim·H + H` then `H·K + K` parameters.
    Mlp {
        input_dim: usize,
        hidden_units: usize,
        num_classes: usize,
    },
}

impl ModelSpec {
    pub fn input_dim(&self) -> usize {
        match *self {
            ModelSpec::Logistic { input_dim, .. } | ModelSpec::Mlp { input_dim, .. } => input_dim,
        }
    }

    pub fn num_classes(&self) -> usize {
        match *self {
            ModelSpec::Logistic { num_classes, .. } | ModelSpec::Mlp { num_classes, .. } => {
                num_classes
            }
        }
    }

    /// Total number of trainable parameters.
    pub fn param_dim(&self) -> usize {
        match *self {
            ModelSpec::Logistic {
                input_dim,
                num_classes,
            } => input_dim * num_classes + num_classes,
            ModelSpec::Mlp {
                input_dim,
                hidden_units,
                num_classes,
            } => input_dim * hidden_units + hidden_units + hidden_units * num_classes + num_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim() == 0 {
            return Err(Error::config("model.input_dim", "must be at least 1"));
        }
        if self.num_classes() < 2 {
            return Err(Error::config("model.num_classes", "must be at least 2"));
        }
        if let ModelSpec::Mlp { hidden_units, .. } = *self {
            if hidden_units == 0 {
                return Err(Error::config("model.hidden_units", "must be at least 1"));
            }
        }
        Ok(())
    }

    fn check_theta(&self, theta: &ParamVector) -> Result<()> {
        if theta.dim() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                found: theta.dim(),
            });
        }
        Ok(())
    }

    fn check_example(&self, example: &Example) -> Result<()> {
        if example.features.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: example.features.len(),
            });
        }
        if example.label >= self.num_classes() {
            return Err(Error::config("label", "label out of class range"));
        }
        Ok(())
    }
}

/// Initial parameters: each layer's entries are uniform in
/// `[-1/√fan_in, 1/√fan_in]`. Deterministic for a fixed `(spec, seed)`.
pub fn init_params(spec: &ModelSpec, seed: u64) -> ParamVector {
    let mut rng = seeding::rng(seed, &[seeding::stream::INIT_PARAMS]);
    let mut values = Vec::with_capacity(spec.param_dim());
    let mut fill = |count: usize, fan_in: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let bound = 1.0 / math::sqrt(fan_in as f64);
        for _ in 0..count {
            values.push(rng.random::<f64>() * 2.0 * bound - bound);
        }
    };
    match *spec {
        ModelSpec::Logistic {
            input_dim,
            num_classes,
        } => {
            fill(input_dim * num_classes + num_classes, input_dim, &mut rng);
        }
        ModelSpec::Mlp {
            input_dim,
            hidden_units,
            num_classes,
        } => {
            fill(input_dim * hidden_units + hidden_units, input_dim, &mut rng);
            fill(
                hidden_units * num_classes + num_classes,
                hidden_units,
                &mut rng,
            );
        }
    }
    ParamVector::new(values).expect("init draws are finite")
}

/// Forward pass: logits for one example, plus hidden activations for the MLP.
fn forward(spec: &ModelSpec, theta: &[f64], x: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
    match *spec {
        ModelSpec::Logistic {
            input_dim,
            num_classes,
        } => {
            let bias = input_dim * num_classes;
            let logits = (0..num_classes)
                .map(|k| {
                    let row = &theta[k * input_dim..(k + 1) * input_dim];
                    dot(row, x) + theta[bias + k]
                })
                .collect();
            (logits, None)
        }
        ModelSpec::Mlp {
            input_dim,
            hidden_units,
            num_classes,
        } => {
            let b1 = input_dim * hidden_units;
            let w2 = b1 + hidden_units;
            let b2 = w2 + hidden_units * num_classes;
            let hidden: Vec<f64> = (0..hidden_units)
                .map(|j| {
                    let row = &theta[j * input_dim..(j + 1) * input_dim];
                    math::tanh(dot(row, x) + theta[b1 + j])
                })
                .collect();
            let logits = (0..num_classes)
                .map(|k| {
                    let row = &theta[w2 + k * hidden_units..w2 + (k + 1) * hidden_units];
                    dot(row, &hidden) + theta[b2 + k]
                })
                .collect();
            (logits, Some(hidden))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `log Σ exp(zᵢ)` with max-subtraction so the result stays finite.
fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| math::exp(z - max)).sum();
    max + math::ln(sum)
}

/// Softmax probabilities, numerically stable.
fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| math::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy of softmax predictions over `batch`.
pub fn loss(spec: &ModelSpec, theta: &ParamVector, batch: &[&Example]) -> Result<f64> {
    spec.check_theta(theta)?;
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let mut total = 0.0;
    for example in batch {
        spec.check_example(example)?;
        let (logits, _) = forward(spec, theta.as_slice(), &example.features);
        total += log_sum_exp(&logits) - logits[example.label];
    }
    Ok(total / batch.len() as f64)
}

/// Mean gradient of the cross-entropy over `batch`, dimension `param_dim`.
pub fn grad(spec: &ModelSpec, theta: &ParamVector, batch: &[&Example]) -> Result<ParamVector> {
    spec.check_theta(theta)?;
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let t = theta.as_slice();
    let mut g = vec![0.0; spec.param_dim()];
    for example in batch {
        spec.check_example(example)?;
        let x = &example.features;
        let (logits, hidden) = forward(spec, t, x);
        let mut dz = softmax(&logits);
        dz[example.label] -= 1.0;
        match *spec {
            ModelSpec::Logistic {
                input_dim,
                num_classes,
            } => {
                let bias = input_dim * num_classes;
                for (k, dzk) in dz.iter().enumerate() {
                    let row = &mut g[k * input_dim..(k + 1) * input_dim];
                    for (gi, xi) in row.iter_mut().zip(x.iter()) {
                        *gi += dzk * xi;
                    }
                    g[bias + k] += dzk;
                }
            }
            ModelSpec::Mlp {
                input_dim,
                hidden_units,
                num_classes,
            } => {
                let b1 = input_dim * hidden_units;
                let w2 = b1 + hidden_units;
                let b2 = w2 + hidden_units * num_classes;
                let h = hidden.expect("mlp forward returns activations");
                let mut dh = vec![0.0; hidden_units];
                for (k, dzk) in dz.iter().enumerate() {
                    let row = &mut g[w2 + k * hidden_units..w2 + (k + 1) * hidden_units];
                    for (gi, hj) in row.iter_mut().zip(h.iter()) {
                        *gi += dzk * hj;
                    }
                    g[b2 + k] += dzk;
                    let w2_row = &t[w2 + k * hidden_units..w2 + (k + 1) * hidden_units];
                    for (dhj, w) in dh.iter_mut().zip(w2_row.iter()) {
                        *dhj += dzk * w;
                    }
                }
                for (j, dhj) in dh.iter().enumerate() {
                    let da = dhj * (1.0 - h[j] * h[j]);
                    let row = &mut g[j * input_dim..(j + 1) * input_dim];
                    for (gi, xi) in row.iter_mut().zip(x.iter()) {
                        *gi += da * xi;
                    }
                    g[b1 + j] += da;
                }
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    for gi in g.iter_mut() {
        *gi *= inv;
    }
    ParamVector::new(g)
}

/// Fraction of examples whose argmax class equals the label. Ties go to the
/// lowest class index.
pub fn accuracy(spec: &ModelSpec, theta: &ParamVector, examples: &[Example]) -> Result<f64> {
    spec.check_theta(theta)?;
    if examples.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut correct = 0usize;
    for example in examples {
        spec.check_example(example)?;
        let (logits, _) = forward(spec, theta.as_slice(), &example.features);
        let mut best = 0usize;
        for (k, z) in logits.iter().enumerate().skip(1) {
            if *z > logits[best] {
                best = k;
            }
        }
        if best == example.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Max over coordinates of the relative error between the analytic gradient
/// and central finite differences with step `h`. The denominator is floored
/// at 1 so near-zero coordinates are compared on an absolute scale.
pub fn fd_gradient_check(
    spec: &ModelSpec,
    theta: &ParamVector,
    batch: &[&Example],
    h: f64,
) -> Result<f64> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::config("h", "step must be positive"));
    }
    let analytic = grad(spec, theta, batch)?;
    let mut probe = theta.as_slice().to_vec();
    let mut worst = 0.0f64;
    for i in 0..probe.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = loss(spec, &ParamVector::new(probe.clone())?, batch)?;
        probe[i] = orig - h;
        let minus = loss(spec, &ParamVector::new(probe.clone())?, batch)?;
        probe[i] = orig;
        let fd = (plus - minus) / (2.0 * h);
        let a = analytic.as_slice()[i];
        let denom = math::abs(a).max(math::abs(fd)).max(1.0);
        worst = worst.max(math::abs(a - fd) / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn logistic() -> ModelSpec {
        ModelSpec::Logistic {
            input_dim: 4,
            num_classes: 3,
        }
    }

    fn mlp() -> ModelSpec {
        ModelSpec::Mlp {
            input_dim: 4,
            hidden_units: 8,
            num_classes: 3,
        }
    }

    fn random_batch(spec: &ModelSpec, n: usize, seed: u64) -> Vec<Example> {
        let mut rng = seeding::rng(seed, &[99]);
        (0..n)
            .map(|_| {
                let features = (0..spec.input_dim())
                    .map(|_| rng.random::<f64>() * 4.0 - 2.0)
                    .collect();
                let label = rng.random_range(0..spec.num_classes());
                Example::new(features, label)
            })
            .collect()
    }

    #[test]
    fn param_dims_match_architecture() {
        assert_eq!(logistic().param_dim(), 4 * 3 + 3);
        assert_eq!(mlp().param_dim(), 4 * 8 + 8 + 8 * 3 + 3);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = mlp();
        assert_eq!(init_params(&spec, 5), init_params(&spec, 5));
        assert_ne!(init_params(&spec, 5), init_params(&spec, 6));
        assert_eq!(init_params(&spec, 5).dim(), spec.param_dim());
    }

    #[test]
    fn zero_theta_loss_is_ln_k() {
        for spec in [logistic(), mlp()] {
            let theta = ParamVector::zeros(spec.param_dim());
            let batch = random_batch(&spec, 7, 3);
            let refs: Vec<&Example> = batch.iter().collect();
            let l = loss(&spec, &theta, &refs).unwrap();
            assert_abs_diff_eq!(l, math::ln(3.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        // One example, bias of the true class pushed far above the others.
        let spec = logistic();
        let mut values = vec![0.0; spec.param_dim()];
        values[4 * 3 + 1] = 50.0; // bias of class 1
        let theta = ParamVector::new(values).unwrap();
        let example = Example::new(vec![0.0; 4], 1);
        let l = loss(&spec, &theta, &[&example]).unwrap();
        assert!(l >= 0.0 && l < 1e-12, "loss = {l}");
    }

    #[test]
    fn loss_matches_scalar_reference() {
        // Independent oracle: direct per-example softmax cross-entropy with
        // explicit index loops, no shared helpers.
        let spec = logistic();
        let theta = init_params(&spec, 11);
        let batch = random_batch(&spec, 9, 12);
        let refs: Vec<&Example> = batch.iter().collect();
        let t = theta.as_slice();
        let mut expected = 0.0;
        for ex in &batch {
            let mut logits = [0.0f64; 3];
            for (k, logit) in logits.iter_mut().enumerate() {
                let mut z = t[4 * 3 + k];
                for j in 0..4 {
                    z += t[k * 4 + j] * ex.features[j];
                }
                *logit = z;
            }
            let mut sum = 0.0;
            for z in logits {
                sum += math::exp(z);
            }
            expected += math::ln(sum) - logits[ex.label];
        }
        expected /= batch.len() as f64;
        let l = loss(&spec, &theta, &refs).unwrap();
        assert_abs_diff_eq!(l, expected, epsilon = 1e-10);
    }

    #[test]
    fn bias_gradient_vanishes_for_negation_symmetric_batch() {
        let spec = ModelSpec::Logistic {
            input_dim: 3,
            num_classes: 2,
        };
        let theta = ParamVector::zeros(spec.param_dim());
        let a = Example::new(vec![0.4, -1.0, 2.5], 0);
        let b = Example::new(vec![-0.4, 1.0, -2.5], 1);
        let g = grad(&spec, &theta, &[&a, &b]).unwrap();
        let bias = &g.as_slice()[3 * 2..];
        assert_eq!(bias, &[0.0, 0.0]);
    }

    #[test]
    fn grad_of_union_is_mean_of_batch_grads() {
        let spec = logistic();
        let theta = init_params(&spec, 21);
        let batch = random_batch(&spec, 8, 22);
        let refs: Vec<&Example> = batch.iter().collect();
        let g_all = grad(&spec, &theta, &refs).unwrap();
        let g_a = grad(&spec, &theta, &refs[..4]).unwrap();
        let g_b = grad(&spec, &theta, &refs[4..]).unwrap();
        let mean = ParamVector::mean([&g_a, &g_b]).unwrap();
        for (x, y) in g_all.as_slice().iter().zip(mean.as_slice()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn singleton_batch_grad_is_per_example_grad() {
        let spec = mlp();
        let theta = init_params(&spec, 31);
        let batch = random_batch(&spec, 1, 32);
        let refs: Vec<&Example> = batch.iter().collect();
        let g = grad(&spec, &theta, &refs).unwrap();
        let g_again = grad(&spec, &theta, &refs).unwrap();
        assert_eq!(g, g_again);
        assert_eq!(g.dim(), spec.param_dim());
    }

    #[test]
    fn fd_check_passes_for_both_models() {
        for (spec, tol, seed) in [(logistic(), 1e-5, 41), (mlp(), 1e-4, 42)] {
            for trial in 0..20 {
                let theta = init_params(&spec, seed * 100 + trial);
                let batch = random_batch(&spec, 5, seed * 200 + trial);
                let refs: Vec<&Example> = batch.iter().collect();
                let err = fd_gradient_check(&spec, &theta, &refs, 1e-5).unwrap();
                assert!(err < tol, "trial {trial}: fd error {err} >= {tol}");
            }
        }
    }

    #[test]
    fn fd_check_at_zero_theta_is_tight() {
        let spec = logistic();
        let theta = ParamVector::zeros(spec.param_dim());
        let batch = random_batch(&spec, 6, 51);
        let refs: Vec<&Example> = batch.iter().collect();
        let err = fd_gradient_check(&spec, &theta, &refs, 1e-5).unwrap();
        assert!(err < 1e-6, "fd error {err}");
    }

    #[test]
    fn accuracy_tie_break_predicts_class_zero() {
        let spec = logistic();
        let theta = ParamVector::zeros(spec.param_dim());
        let examples = random_batch(&spec, 30, 61);
        let expected = examples.iter().filter(|e| e.label == 0).count() as f64 / 30.0;
        assert_eq!(accuracy(&spec, &theta, &examples).unwrap(), expected);
    }

    #[test]
    fn accuracy_invariant_to_positive_rescaling_for_logistic() {
        let spec = logistic();
        let theta = init_params(&spec, 71);
        let examples = random_batch(&spec, 40, 72);
        let a1 = accuracy(&spec, &theta, &examples).unwrap();
        let a2 = accuracy(&spec, &theta.scale(3.5), &examples).unwrap();
        assert_eq!(a1, a2);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let spec = logistic();
        let theta = ParamVector::zeros(spec.param_dim());
        assert_eq!(loss(&spec, &theta, &[]), Err(Error::Empty("batch")));
        assert_eq!(grad(&spec, &theta, &[]).unwrap_err(), Error::Empty("batch"));
        assert_eq!(
            accuracy(&spec, &theta, &[]).unwrap_err(),
            Error::Empty("dataset")
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = logistic();
        let theta = ParamVector::zeros(spec.param_dim() + 1);
        let batch = random_batch(&spec, 2, 81);
        let refs: Vec<&Example> = batch.iter().collect();
        assert!(matches!(
            loss(&spec, &theta, &refs),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
