//! Baseline `(X, Y)` versus explanation-augmented `(X, YE)` experiments and
//! their accuracy reports.

pub mod table1;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::CodecTable;
use crate::dataset::Dataset;
use crate::error::{Result, TedError};
use crate::learners::LearnerConfig;
use crate::model::{Prediction, TrainedModel};

pub const MIN_SPLIT_SIZE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train_fraction,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(TedError::InvalidConfig(format!(
                "train fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.9,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Uniform random permutation of `0..n`; the first `floor(fraction * n)`
/// indices train, the rest test.
pub fn split(n: usize, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if n < MIN_SPLIT_SIZE {
        return Err(TedError::TooSmall {
            got: n,
            need: MIN_SPLIT_SIZE,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n_train = (spec.train_fraction * n as f64).floor() as usize;
    let test = order.split_off(n_train);
    Ok(Split { train: order, test })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Ted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    Baseline,
    Ted { derive_y_from_e: bool },
}

impl Protocol {
    pub fn mode(self) -> Mode {
        match self {
            Protocol::Baseline => Mode::Baseline,
            Protocol::Ted { .. } => Mode::Ted,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub learner: String,
    pub y_accuracy: f64,
    pub e_accuracy: Option<f64>,
    pub ye_accuracy: Option<f64>,
    pub derive_y_from_e: bool,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_secs: Option<f64>,
}

impl ExperimentReport {
    /// Copy with the wall-clock measurement removed, for reproducible output.
    pub fn without_timing(&self) -> Self {
        Self {
            runtime_secs: None,
            ..self.clone()
        }
    }
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy<T: PartialEq>(predicted: &[T], truth: &[T]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Everything one run produced, for inspection beyond the report.
#[derive(Clone, Debug)]
pub struct RunDetails {
    pub report: ExperimentReport,
    pub model: TrainedModel,
    pub split: Split,
    /// Decoded predictions for `split.test`, in order.
    pub predictions: Vec<Prediction>,
}

impl RunDetails {
    pub fn codec(&self) -> Option<&CodecTable> {
        self.model.codec()
    }
}

fn run(
    dataset: &Dataset,
    learner: &LearnerConfig,
    spec: &SplitSpec,
    mode: Mode,
    derive_y_from_e: bool,
) -> Result<RunDetails> {
    let started = Instant::now();
    let split = split(dataset.len(), spec)?;
    let model = TrainedModel::fit(
        dataset,
        &split.train,
        &learner.with_seed(spec.seed),
        mode,
        derive_y_from_e,
        Some(*spec),
    )?;
    let (scores, predictions) = model.evaluate(dataset, &split.test)?;
    let report = ExperimentReport {
        mode,
        learner: learner.name().to_string(),
        y_accuracy: scores.y_accuracy,
        e_accuracy: scores.e_accuracy,
        ye_accuracy: scores.ye_accuracy,
        derive_y_from_e,
        seed: spec.seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
        runtime_secs: Some(started.elapsed().as_secs_f64()),
    };
    Ok(RunDetails {
        report,
        model,
        split,
        predictions,
    })
}

/// Trains on `(X, Y)` of the training split and reports test Y accuracy.
pub fn run_baseline(
    dataset: &Dataset,
    learner: &LearnerConfig,
    spec: &SplitSpec,
) -> Result<ExperimentReport> {
    Ok(run_baseline_detailed(dataset, learner, spec)?.report)
}

pub fn run_baseline_detailed(
    dataset: &Dataset,
    learner: &LearnerConfig,
    spec: &SplitSpec,
) -> Result<RunDetails> {
    if let Some(index) = dataset
        .instances()
        .iter()
        .position(|i| i.explanation.is_some())
    {
        return Err(TedError::UnexpectedExplanation { index });
    }
    run(dataset, learner, spec, Mode::Baseline, false)
}

/// Fits the codec on the training split, trains on composite classes and
/// scores the decoded test predictions. With `derive_y_from_e` the label is
/// recomputed from the predicted explanation.
pub fn run_ted(
    dataset: &Dataset,
    learner: &LearnerConfig,
    spec: &SplitSpec,
    derive_y_from_e: bool,
) -> Result<ExperimentReport> {
    Ok(run_ted_detailed(dataset, learner, spec, derive_y_from_e)?.report)
}

pub fn run_ted_detailed(
    dataset: &Dataset,
    learner: &LearnerConfig,
    spec: &SplitSpec,
    derive_y_from_e: bool,
) -> Result<RunDetails> {
    if let Some(index) = dataset
        .instances()
        .iter()
        .position(|i| i.explanation.is_none())
    {
        return Err(TedError::MissingExplanation { index });
    }
    run(dataset, learner, spec, Mode::Ted, derive_y_from_e)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.len() < 2 {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // keep the mean inside the observed range despite rounding
        Some(Self {
            mean: mean.clamp(min, max),
            std: var.sqrt(),
            min,
            max,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub mode: Mode,
    pub runs: Vec<ExperimentReport>,
    pub y: MetricSummary,
    pub e: Option<MetricSummary>,
    pub ye: Option<MetricSummary>,
}

impl AggregateReport {
    pub fn from_runs(mode: Mode, runs: Vec<ExperimentReport>) -> Result<Self> {
        if runs.len() < 2 {
            return Err(TedError::InvalidConfig(
                "aggregation needs at least two runs".into(),
            ));
        }
        let collect = |f: fn(&ExperimentReport) -> Option<f64>| -> Option<MetricSummary> {
            let values: Option<Vec<f64>> = runs.iter().map(f).collect();
            MetricSummary::of(&values?)
        };
        Ok(Self {
            mode,
            y: collect(|r| Some(r.y_accuracy)).expect("at least two runs"),
            e: collect(|r| r.e_accuracy),
            ye: collect(|r| r.ye_accuracy),
            runs,
        })
    }

    pub fn without_timing(&self) -> Self {
        Self {
            runs: self
                .runs
                .iter()
                .map(ExperimentReport::without_timing)
                .collect(),
            ..self.clone()
        }
    }
}

/// One run per seed, each seeding both the split and the learner. Runs are
/// reported in seed-list order.
pub fn run_repeated(
    dataset: &Dataset,
    learner: &LearnerConfig,
    protocol: Protocol,
    train_fraction: f64,
    seeds: &[u64],
) -> Result<AggregateReport> {
    if seeds.len() < 2 {
        return Err(TedError::InvalidConfig(
            "repeated runs need at least two seeds".into(),
        ));
    }
    let runs = seeds
        .iter()
        .map(|&seed| {
            let spec = SplitSpec::new(train_fraction, seed)?;
            match protocol {
                Protocol::Baseline => run_baseline(dataset, learner, &spec),
                Protocol::Ted { derive_y_from_e } => {
                    run_ted(dataset, learner, &spec, derive_y_from_e)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    AggregateReport::from_runs(protocol.mode(), runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{LabelId, LabeledInstance, Task};
    use crate::learners::ForestConfig;

    fn forest() -> LearnerConfig {
        LearnerConfig::Forest(ForestConfig {
            n_trees: 10,
            ..ForestConfig::default()
        })
    }

    #[test]
    fn split_sizes_and_partition() {
        let s = split(4520, &SplitSpec::new(0.9, 3).unwrap()).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (4068, 452));
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..4520).collect::<Vec<_>>());
        assert_eq!(s, split(4520, &SplitSpec::new(0.9, 3).unwrap()).unwrap());
        assert_ne!(s, split(4520, &SplitSpec::new(0.9, 4).unwrap()).unwrap());
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            split(9, &SplitSpec::default()),
            Err(TedError::TooSmall { got: 9, need: 10 })
        ));
        assert!(SplitSpec::new(1.0, 0).is_err());
        assert!(SplitSpec::new(0.0, 0).is_err());
    }

    #[test]
    fn constant_label_baseline_is_perfect() {
        let instances = (0..40)
            .map(|i| LabeledInstance::new(vec![i as f64; 8], LabelId(1), None))
            .collect();
        let ds = Dataset::new(Task::Loan, instances).unwrap();
        let r = run_baseline(&ds, &forest(), &SplitSpec::default()).unwrap();
        assert_eq!(r.y_accuracy, 1.0);
        assert_eq!(r.e_accuracy, None);
    }

    #[test]
    fn mode_mixing_is_rejected() {
        let ds = crate::loan::generate_synthetic(50, 1).unwrap();
        assert!(matches!(
            run_baseline(&ds, &forest(), &SplitSpec::default()),
            Err(TedError::UnexpectedExplanation { index: 0 })
        ));
        assert!(matches!(
            run_ted(
                &ds.without_explanations(),
                &forest(),
                &SplitSpec::default(),
                false
            ),
            Err(TedError::MissingExplanation { index: 0 })
        ));
    }

    #[test]
    fn deriving_labels_needs_functional_codec() {
        let ds = crate::tictactoe::build_dataset(true);
        let err = run_ted(&ds, &forest(), &SplitSpec::default(), true).unwrap_err();
        assert!(matches!(err, TedError::NotFunctional));
    }

    #[test]
    fn summary_statistics() {
        let s = MetricSummary::of(&[0.9, 1.0, 0.95]).unwrap();
        assert!((s.mean - 0.95).abs() < 1e-12);
        assert!((s.std - 0.05).abs() < 1e-12);
        assert_eq!((s.min, s.max), (0.9, 1.0));
        assert_eq!(MetricSummary::of(&[0.5, 0.5]).unwrap().std, 0.0);
        assert!(MetricSummary::of(&[0.5]).is_none());
    }

    #[test]
    fn repeated_needs_two_seeds() {
        let ds = crate::loan::generate_synthetic(50, 1).unwrap();
        assert!(run_repeated(&ds, &forest(), Protocol::Baseline, 0.9, &[1]).is_err());
    }
}
