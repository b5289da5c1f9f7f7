//! A trained classifier bundled with its class mapping, and its versioned
//! JSON file format.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::codec::{fit_codec, CodecTable, CompositeId, LabelIndex};
use crate::dataset::{Dataset, ExplanationId, LabelId, LabeledInstance, Task};
use crate::error::{Result, TedError};
use crate::harness::{Mode, SplitSpec};
use crate::learners::{argmax, Classifier, LearnerConfig, Model};

pub const MODEL_FORMAT: &str = "tedkit-model";
pub const MODEL_VERSION: u32 = 1;

/// How learner class ids map back to labels (and explanations).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassMap {
    Labels(LabelIndex),
    Composites { codec: CodecTable },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    /// Label used for scoring: decoded, or derived from the explanation.
    pub label: LabelId,
    pub explanation: Option<ExplanationId>,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub n: usize,
    pub y_accuracy: f64,
    pub e_accuracy: Option<f64>,
    pub ye_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    pub task: Task,
    pub mode: Mode,
    pub derive_y_from_e: bool,
    pub n_features: usize,
    pub learner: LearnerConfig,
    /// The split the model was trained under, if it was trained on one.
    pub split: Option<SplitSpec>,
    pub classes: ClassMap,
    pub model: Model,
}

fn check_mode(instances: &[LabeledInstance], mode: Mode) -> Result<()> {
    let offending = match mode {
        Mode::Baseline => instances.iter().position(|i| i.explanation.is_some()),
        Mode::Ted => instances.iter().position(|i| i.explanation.is_none()),
    };
    match (mode, offending) {
        (_, None) => Ok(()),
        (Mode::Baseline, Some(index)) => Err(TedError::UnexpectedExplanation { index }),
        (Mode::Ted, Some(index)) => Err(TedError::MissingExplanation { index }),
    }
}

impl TrainedModel {
    /// Fits the class mapping and the learner on the instances at `train`.
    pub fn fit(
        dataset: &Dataset,
        train: &[usize],
        learner: &LearnerConfig,
        mode: Mode,
        derive_y_from_e: bool,
        split: Option<SplitSpec>,
    ) -> Result<TrainedModel> {
        let instances: Vec<LabeledInstance> = train
            .iter()
            .map(|&i| dataset.instances()[i].clone())
            .collect();
        if instances.is_empty() {
            return Err(TedError::NoInstances);
        }
        check_mode(&instances, mode)?;
        let (classes, y) = match mode {
            Mode::Baseline => {
                if derive_y_from_e {
                    return Err(TedError::InvalidConfig(
                        "deriving labels needs explanations".into(),
                    ));
                }
                let index = LabelIndex::fit(&instances, dataset.label_names())?;
                let y = instances
                    .iter()
                    .map(|i| index.class_of(i.label).expect("fit on these labels"))
                    .collect::<Vec<_>>();
                (ClassMap::Labels(index), y)
            }
            Mode::Ted => {
                let codec = fit_codec(
                    &instances,
                    dataset.label_names(),
                    dataset.explanation_names(),
                )?;
                if derive_y_from_e && !codec.is_functional() {
                    return Err(TedError::NotFunctional);
                }
                let y = instances
                    .iter()
                    .map(|i| {
                        codec
                            .encode(i.label, i.explanation.expect("mode checked"))
                            .map(CompositeId::index)
                    })
                    .collect::<Result<Vec<_>>>()?;
                (ClassMap::Composites { codec }, y)
            }
        };
        let model = learner.fit(dataset.feature_matrix(train).view(), &y)?;
        Ok(TrainedModel {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            task: dataset.task(),
            mode,
            derive_y_from_e,
            n_features: dataset.n_features(),
            learner: learner.clone(),
            split,
            classes,
            model,
        })
    }

    pub fn codec(&self) -> Option<&CodecTable> {
        match &self.classes {
            ClassMap::Composites { codec } => Some(codec),
            ClassMap::Labels(_) => None,
        }
    }

    pub fn label_names(&self) -> &[String] {
        match &self.classes {
            ClassMap::Composites { codec } => codec.label_names(),
            ClassMap::Labels(index) => index.label_names(),
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Prediction>> {
        let proba = self.model.predict_proba(x)?;
        proba
            .rows()
            .into_iter()
            .map(|row| {
                let class = argmax(row.iter().copied());
                let score = row[class];
                match &self.classes {
                    ClassMap::Labels(index) => Ok(Prediction {
                        class,
                        label: index.label_of(class).ok_or(TedError::CompositeOutOfRange {
                            id: class,
                            len: index.len(),
                        })?,
                        explanation: None,
                        score,
                    }),
                    ClassMap::Composites { codec } => {
                        let (label, explanation) = codec.decode(CompositeId(class as u32))?;
                        let label = if self.derive_y_from_e {
                            codec.derive_label(explanation)?
                        } else {
                            label
                        };
                        Ok(Prediction {
                            class,
                            label,
                            explanation: Some(explanation),
                            score,
                        })
                    }
                }
            })
            .collect()
    }

    /// Predicts the instances at `indices` of `dataset` and scores them.
    /// A TED model evaluated on data without explanations is an error.
    pub fn evaluate(
        &self,
        dataset: &Dataset,
        indices: &[usize],
    ) -> Result<(Scores, Vec<Prediction>)> {
        if indices.is_empty() {
            return Err(TedError::NoInstances);
        }
        if dataset.n_features() != self.n_features {
            return Err(TedError::DimensionMismatch(format!(
                "model expects {} features, dataset has {}",
                self.n_features,
                dataset.n_features()
            )));
        }
        if self.mode == Mode::Ted && !dataset.has_explanations() {
            return Err(TedError::MissingExplanation { index: 0 });
        }
        let predictions = self.predict(dataset.feature_matrix(indices).view())?;
        let scores = score(
            &predictions,
            indices.iter().map(|&i| &dataset.instances()[i]),
            self.mode,
        );
        Ok((scores, predictions))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<TrainedModel> {
        let model: TrainedModel = serde_json::from_str(json)?;
        if model.format != MODEL_FORMAT {
            return Err(TedError::Format(format!(
                "not a model file: format '{}'",
                model.format
            )));
        }
        if model.version != MODEL_VERSION {
            return Err(TedError::Format(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                model.version
            )));
        }
        if model.model.n_features() != model.n_features {
            return Err(TedError::Format(
                "model width disagrees with its header".into(),
            ));
        }
        Ok(model)
    }
}

/// Y accuracy always; E and joint accuracy for TED predictions. A test pair
/// the codec never saw still counts, necessarily as a joint miss.
pub fn score<'a>(
    predictions: &[Prediction],
    truth: impl IntoIterator<Item = &'a LabeledInstance>,
    mode: Mode,
) -> Scores {
    let mut n = 0;
    let (mut y_hits, mut e_hits, mut ye_hits) = (0usize, 0usize, 0usize);
    for (p, t) in predictions.iter().zip(truth) {
        n += 1;
        let y_ok = p.label == t.label;
        let e_ok = p.explanation.is_some() && p.explanation == t.explanation;
        y_hits += usize::from(y_ok);
        e_hits += usize::from(e_ok);
        ye_hits += usize::from(y_ok && e_ok);
    }
    let frac = |hits: usize| if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    let ted = mode == Mode::Ted;
    Scores {
        n,
        y_accuracy: frac(y_hits),
        e_accuracy: ted.then(|| frac(e_hits)),
        ye_accuracy: ted.then(|| frac(ye_hits)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::ForestConfig;

    fn forest() -> LearnerConfig {
        LearnerConfig::Forest(ForestConfig {
            n_trees: 5,
            seed: 3,
            ..ForestConfig::default()
        })
    }

    #[test]
    fn json_round_trip_predicts_identically() {
        let ds = crate::loan::generate_synthetic(300, 2).unwrap();
        let all = ds.all_indices();
        let m = TrainedModel::fit(&ds, &all, &forest(), Mode::Ted, true, None).unwrap();
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let x = ds.feature_matrix(&all);
        assert_eq!(
            back.predict(x.view()).unwrap(),
            m.predict(x.view()).unwrap()
        );
    }

    #[test]
    fn rejects_foreign_files() {
        let ds = crate::loan::generate_synthetic(50, 2).unwrap();
        let m =
            TrainedModel::fit(&ds, &ds.all_indices(), &forest(), Mode::Ted, false, None).unwrap();
        let json = m.to_json().replace("\"version\":1", "\"version\":9");
        assert!(TrainedModel::from_json(&json).is_err());
        let json = m.to_json().replace(MODEL_FORMAT, "other");
        assert!(TrainedModel::from_json(&json).is_err());
    }

    #[test]
    fn mode_is_checked_at_fit() {
        let ds = crate::loan::generate_synthetic(50, 2).unwrap();
        let all = ds.all_indices();
        assert!(TrainedModel::fit(&ds, &all, &forest(), Mode::Baseline, false, None).is_err());
        let plain = ds.without_explanations();
        assert!(TrainedModel::fit(&plain, &all, &forest(), Mode::Ted, false, None).is_err());
        assert!(TrainedModel::fit(&plain, &[], &forest(), Mode::Baseline, false, None).is_err());
    }

    #[test]
    fn evaluate_rejects_empty_selection() {
        let ds = crate::loan::generate_synthetic(50, 2)
            .unwrap()
            .without_explanations();
        let m = TrainedModel::fit(
            &ds,
            &ds.all_indices(),
            &forest(),
            Mode::Baseline,
            false,
            None,
        )
        .unwrap();
        assert!(matches!(m.evaluate(&ds, &[]), Err(TedError::NoInstances)));
        let (s, _) = m.evaluate(&ds, &ds.all_indices()).unwrap();
        assert_eq!(s.e_accuracy, None);
    }
}
