//! Single-hidden-layer perceptron: ReLU hidden units, softmax output,
//! cross-entropy loss, trained with mini-batch Adam.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, check_width, Classifier};
use crate::error::{Result, TedError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_units: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// L2 penalty on the weight matrices; each batch adds `l2 * w` to the summed gradient.
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_units: 200,
            epochs: 300,
            batch_size: 32,
            learning_rate: 3e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2: 0.01,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 {
            return Err(TedError::InvalidConfig(
                "hidden_units must be at least 1".into(),
            ));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(TedError::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return Err(TedError::InvalidConfig("l2 must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(TedError::InvalidConfig(
                "batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Weights stored as `input x hidden` and `hidden x classes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub(crate) w1: Array2<f64>,
    pub(crate) b1: Array1<f64>,
    pub(crate) w2: Array2<f64>,
    pub(crate) b2: Array1<f64>,
}

/// Gradients of the summed (not averaged) batch loss.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

struct Forward {
    pre: Array2<f64>,
    hidden: Array2<f64>,
    probs: Array2<f64>,
}

impl Mlp {
    /// He-style uniform initialisation, zero biases.
    pub fn init(n_features: usize, n_classes: usize, hidden: usize, seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
            let limit = (6.0 / fan_in.max(1) as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
        };
        let w1 = uniform(n_features, hidden, n_features);
        let w2 = uniform(hidden, n_classes, hidden);
        Mlp {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(n_classes),
        }
    }

    pub fn zeros(n_features: usize, n_classes: usize, hidden: usize) -> Mlp {
        Mlp {
            w1: Array2::zeros((n_features, hidden)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((hidden, n_classes)),
            b2: Array1::zeros(n_classes),
        }
    }

    pub fn hidden_units(&self) -> usize {
        self.b1.len()
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Forward {
        let pre = x.dot(&self.w1) + &self.b1;
        let hidden = pre.mapv(relu);
        let mut probs = hidden.dot(&self.w2) + &self.b2;
        for mut row in probs.rows_mut() {
            softmax_in_place(row.as_slice_mut().expect("standard layout"));
        }
        Forward { pre, hidden, probs }
    }

    /// Hidden-layer activations, exposed for probing the ReLU behaviour.
    pub fn hidden_activations(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_width(self.n_features(), x)?;
        Ok(self.forward(x).hidden)
    }

    /// Summed cross-entropy over the batch and its gradients.
    pub fn loss_and_gradients(&self, x: ArrayView2<'_, f64>, y: &[usize]) -> (f64, Gradients) {
        let Forward { pre, hidden, probs } = self.forward(x);
        let mut loss = 0.0;
        let mut delta_out = probs;
        for (mut row, &class) in delta_out.rows_mut().into_iter().zip(y) {
            loss -= row[class].max(f64::MIN_POSITIVE).ln();
            row[class] -= 1.0;
        }
        let w2 = hidden.t().dot(&delta_out);
        let b2 = delta_out.sum_axis(Axis(0));
        let mut delta_hidden = delta_out.dot(&self.w2.t());
        Zip::from(&mut delta_hidden).and(&pre).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        let w1 = x.t().dot(&delta_hidden);
        let b1 = delta_hidden.sum_axis(Axis(0));
        (loss, Gradients { w1, b1, w2, b2 })
    }

    /// Summed cross-entropy loss without gradients.
    pub fn loss(&self, x: ArrayView2<'_, f64>, y: &[usize]) -> f64 {
        let probs = self.forward(x).probs;
        y.iter()
            .enumerate()
            .map(|(i, &c)| -probs[[i, c]].max(f64::MIN_POSITIVE).ln())
            .sum()
    }

    fn params_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }
}

impl Gradients {
    fn slices(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

impl Classifier for Mlp {
    fn n_features(&self) -> usize {
        self.w1.nrows()
    }

    fn n_classes(&self) -> usize {
        self.b2.len()
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_width(self.n_features(), x)?;
        Ok(self.forward(x).probs)
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new(model: &mut Mlp) -> Adam {
        let sizes: Vec<usize> = model.params_mut().iter().map(|p| p.len()).collect();
        Adam {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut Mlp, grads: &Gradients, scale: f64, cfg: &MlpConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        for (k, (param, grad)) in model
            .params_mut()
            .into_iter()
            .zip(grads.slices())
            .enumerate()
        {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            // weights sit at even positions, biases are not penalised
            let l2 = if k % 2 == 0 { cfg.l2 } else { 0.0 };
            for i in 0..param.len() {
                let g = (grad[i] + l2 * param[i]) * scale;
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                param[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

/// A trained network with the mean training loss of each epoch.
#[derive(Clone, Debug)]
pub struct MlpTraining {
    pub model: Mlp,
    pub epoch_losses: Vec<f64>,
}

pub fn mlp_fit(x: ArrayView2<'_, f64>, y: &[usize], config: &MlpConfig) -> Result<Mlp> {
    Ok(mlp_fit_with_history(x, y, config)?.model)
}

pub fn mlp_fit_with_history(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    config: &MlpConfig,
) -> Result<MlpTraining> {
    config.validate()?;
    let k = check_training_data(x, y)?;
    if k < 2 {
        return Err(TedError::InvalidConfig(
            "an MLP needs at least two classes".into(),
        ));
    }
    let n = x.nrows();
    let mut model = Mlp::init(x.ncols(), k, config.hidden_units, config.seed);
    let mut adam = Adam::new(&mut model);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut batch_y = Vec::with_capacity(config.batch_size);
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch_x = x.select(Axis(0), chunk);
            batch_y.clear();
            batch_y.extend(chunk.iter().map(|&i| y[i]));
            let (loss, grads) = model.loss_and_gradients(batch_x.view(), &batch_y);
            total += loss;
            adam.update(&mut model, &grads, 1.0 / chunk.len() as f64, config);
        }
        epoch_losses.push(total / n as f64);
    }
    Ok(MlpTraining {
        model,
        epoch_losses,
    })
}

/// Absolute floor on the relative-error denominator: gradients smaller than
/// this are compared in absolute terms, where finite differences are
/// dominated by round-off.
pub const GRADIENT_CHECK_FLOOR: f64 = 1e-6;
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;

/// Compares backpropagated gradients with central finite differences on a
/// freshly initialised network and returns the largest relative error.
pub fn mlp_gradient_check(
    config: &MlpConfig,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    n_classes: usize,
) -> Result<f64> {
    if x.nrows() == 0 || x.nrows() != y.len() {
        return Err(TedError::DimensionMismatch(
            "gradient check needs a non-empty batch".into(),
        ));
    }
    if y.iter().any(|&c| c >= n_classes) {
        return Err(TedError::InvalidConfig("class id outside n_classes".into()));
    }
    let model = Mlp::init(x.ncols(), n_classes, config.hidden_units, config.seed);
    Ok(gradient_check_on(&model, x, y))
}

pub fn gradient_check_on(model: &Mlp, x: ArrayView2<'_, f64>, y: &[usize]) -> f64 {
    let (_, grads) = model.loss_and_gradients(x, y);
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (k, group) in analytic.iter().enumerate() {
        for (i, &a) in group.iter().enumerate() {
            let original = probe.params_mut()[k][i];
            probe.params_mut()[k][i] = original + GRADIENT_CHECK_STEP;
            let up = probe.loss(x, y);
            probe.params_mut()[k][i] = original - GRADIENT_CHECK_STEP;
            let down = probe.loss(x, y);
            probe.params_mut()[k][i] = original;
            let numeric = (up - down) / (2.0 * GRADIENT_CHECK_STEP);
            let denom = a.abs().max(numeric.abs()).max(GRADIENT_CHECK_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, concatenate};
    use rand::Rng;

    fn random_batch(rows: usize, cols: usize, k: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0));
        let y = (0..rows).map(|_| rng.random_range(0..k)).collect();
        (x, y)
    }

    #[test]
    fn learns_xor() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let cfg = MlpConfig {
            epochs: 500,
            batch_size: 4,
            learning_rate: 1e-2,
            seed: 3,
            ..MlpConfig::default()
        };
        let fit = mlp_fit_with_history(x.view(), &y, &cfg).unwrap();
        assert_eq!(fit.model.predict(x.view()).unwrap(), y);
        assert!(fit.epoch_losses.last().unwrap() < fit.epoch_losses.first().unwrap());
    }

    #[test]
    fn single_class_is_rejected() {
        let x = array![[0.0], [1.0]];
        assert!(mlp_fit(x.view(), &[0, 0], &MlpConfig::default()).is_err());
    }

    #[test]
    fn config_validation() {
        let x = array![[0.0], [1.0]];
        let zero_hidden = MlpConfig {
            hidden_units: 0,
            ..MlpConfig::default()
        };
        assert!(mlp_fit(x.view(), &[0, 1], &zero_hidden).is_err());
        let bad_rate = MlpConfig {
            learning_rate: 0.0,
            ..MlpConfig::default()
        };
        assert!(mlp_fit(x.view(), &[0, 1], &bad_rate).is_err());
        let bad_l2 = MlpConfig {
            l2: -1.0,
            ..MlpConfig::default()
        };
        assert!(mlp_fit(x.view(), &[0, 1], &bad_l2).is_err());
    }

    #[test]
    fn l2_shrinks_weights() {
        let (x, y) = random_batch(60, 4, 3, 8);
        let cfg = MlpConfig {
            hidden_units: 16,
            epochs: 40,
            batch_size: 10,
            l2: 0.0,
            seed: 2,
            ..MlpConfig::default()
        };
        let free = mlp_fit(x.view(), &y, &cfg).unwrap();
        let damped = mlp_fit(x.view(), &y, &MlpConfig { l2: 1.0, ..cfg }).unwrap();
        let norm = |m: &Mlp| m.w1.iter().chain(&m.w2).map(|w| w * w).sum::<f64>();
        assert!(norm(&damped) < 0.5 * norm(&free));
    }

    #[test]
    fn same_seed_same_weights() {
        let (x, y) = random_batch(40, 3, 3, 1);
        let cfg = MlpConfig {
            hidden_units: 8,
            epochs: 5,
            batch_size: 8,
            seed: 11,
            ..MlpConfig::default()
        };
        let a = mlp_fit(x.view(), &y, &cfg).unwrap();
        let b = mlp_fit(x.view(), &y, &cfg).unwrap();
        assert_eq!(a, b);
        let c = mlp_fit(x.view(), &y, &MlpConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (x, y) = random_batch(8, 5, 3, 42);
        let cfg = MlpConfig {
            hidden_units: 10,
            seed: 5,
            ..MlpConfig::default()
        };
        let err = mlp_gradient_check(&cfg, x.view(), &y, 3).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn zero_network_on_zero_input_has_zero_hidden_gradient() {
        let model = Mlp::zeros(4, 3, 6);
        let x = Array2::zeros((5, 4));
        let (_, g) = model.loss_and_gradients(x.view(), &[0, 1, 2, 0, 1]);
        assert!(g.w1.iter().all(|&v| v == 0.0));
        assert!(g.b1.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_rows_double_the_gradient() {
        let model = Mlp::init(5, 3, 7, 9);
        let (x, y) = random_batch(1, 5, 3, 2);
        let (_, single) = model.loss_and_gradients(x.view(), &y);
        let doubled_x = concatenate![Axis(0), x, x];
        let (_, double) = model.loss_and_gradients(doubled_x.view(), &[y[0], y[0]]);
        assert_eq!(double.w1, &single.w1 * 2.0);
        assert_eq!(double.b2, &single.b2 * 2.0);

        let (x, y) = random_batch(6, 5, 3, 3);
        let (_, single) = model.loss_and_gradients(x.view(), &y);
        let doubled_x = concatenate![Axis(0), x, x];
        let doubled_y: Vec<usize> = y.iter().chain(&y).copied().collect();
        let (_, double) = model.loss_and_gradients(doubled_x.view(), &doubled_y);
        for (d, s) in double.w1.iter().zip(single.w1.iter()) {
            assert!((d - 2.0 * s).abs() <= 1e-12 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn softmax_rows_are_distributions() {
        let model = Mlp::init(5, 4, 12, 1);
        let (x, _) = random_batch(30, 5, 4, 8);
        let p = model.predict_proba((&x * 50.0).view()).unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn negative_preactivation_gives_exact_zero() {
        let mut model = Mlp::zeros(2, 2, 3);
        model.b1 = array![-1.0, 0.0, 2.0];
        let h = model
            .hidden_activations(array![[0.5, -0.5]].view())
            .unwrap();
        assert_eq!(h.row(0).to_vec(), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let model = Mlp::init(3, 2, 4, 1);
        assert!(model.predict(Array2::zeros((1, 4)).view()).is_err());
    }
}
