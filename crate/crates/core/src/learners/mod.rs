//! Classifiers behind a common fit/predict contract.
//!
//! Class ids passed to `fit` must be dense (`0..K`, each id present), so the
//! classes a model can emit are exactly those it was trained on.

pub mod forest;
pub mod mlp;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TedError};

pub use forest::{Forest, ForestConfig, MaxFeatures};
pub use mlp::{Mlp, MlpConfig};

pub trait Classifier {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;

    /// One row of class scores per input row; rows sum to one.
    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>>;

    fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(self
            .predict_proba(x)?
            .rows()
            .into_iter()
            .map(|row| argmax(row.iter().copied()))
            .collect())
    }
}

/// Index of the largest value; the lowest index wins exact ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Validates a training set and returns its class count.
pub(crate) fn check_training_data(x: ArrayView2<'_, f64>, y: &[usize]) -> Result<usize> {
    if x.nrows() != y.len() {
        return Err(TedError::DimensionMismatch(format!(
            "{} feature rows but {} class ids",
            x.nrows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(TedError::NoInstances);
    }
    let k = y.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    for &c in y {
        seen[c] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(TedError::InvalidConfig(format!(
            "class ids must be dense: id {missing} is absent but {} is present",
            k - 1
        )));
    }
    Ok(k)
}

pub(crate) fn check_width(expected: usize, x: ArrayView2<'_, f64>) -> Result<()> {
    if x.ncols() != expected {
        return Err(TedError::DimensionMismatch(format!(
            "model expects {expected} features, input has {}",
            x.ncols()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearnerConfig {
    Mlp(MlpConfig),
    Forest(ForestConfig),
}

impl LearnerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerConfig::Mlp(_) => "mlp",
            LearnerConfig::Forest(_) => "forest",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            LearnerConfig::Mlp(c) => c.seed,
            LearnerConfig::Forest(c) => c.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> LearnerConfig {
        let mut out = self.clone();
        match &mut out {
            LearnerConfig::Mlp(c) => c.seed = seed,
            LearnerConfig::Forest(c) => c.seed = seed,
        }
        out
    }

    pub fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize]) -> Result<Model> {
        Ok(match self {
            LearnerConfig::Mlp(c) => Model::Mlp(mlp::mlp_fit(x, y, c)?),
            LearnerConfig::Forest(c) => Model::Forest(forest::forest_fit(x, y, c)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Mlp(Mlp),
    Forest(Forest),
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        match self {
            Model::Mlp(m) => m.n_features(),
            Model::Forest(m) => m.n_features(),
        }
    }

    fn n_classes(&self) -> usize {
        match self {
            Model::Mlp(m) => m.n_classes(),
            Model::Forest(m) => m.n_classes(),
        }
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            Model::Mlp(m) => m.predict_proba(x),
            Model::Forest(m) => m.predict_proba(x),
        }
    }

    fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        match self {
            Model::Mlp(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
        }
    }
}
