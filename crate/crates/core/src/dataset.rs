//! Labeled instances, explanation-augmented datasets and their CSV form.

use std::fmt;
use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TedError};
use crate::{loan, tictactoe};

/// Dense label identifier (the decision `Y`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelId(pub u32);

/// Dense explanation identifier (`E`). Explanations are opaque to the
/// learners; only their identity matters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExplanationId(pub u32);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ExplanationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledInstance {
    pub features: Vec<f64>,
    pub label: LabelId,
    pub explanation: Option<ExplanationId>,
}

impl LabeledInstance {
    pub fn new(features: Vec<f64>, label: LabelId, explanation: Option<ExplanationId>) -> Self {
        Self {
            features,
            label,
            explanation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    TicTacToe,
    Loan,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::TicTacToe => "tictactoe",
            Task::Loan => "loan",
        }
    }

    pub fn feature_names(self) -> Vec<String> {
        match self {
            Task::TicTacToe => tictactoe::feature_names(),
            Task::Loan => loan::feature_names(),
        }
    }

    pub fn label_names(self) -> Vec<String> {
        match self {
            Task::TicTacToe => tictactoe::label_names(),
            Task::Loan => loan::label_names(),
        }
    }

    pub fn explanation_names(self) -> Vec<String> {
        match self {
            Task::TicTacToe => tictactoe::explanation_names(),
            Task::Loan => loan::explanation_names(),
        }
    }

    /// Human-facing rendering of a label name, e.g. `move 4`.
    pub fn display_label(self, name: &str) -> String {
        match self {
            Task::TicTacToe => format!("move {name}"),
            Task::Loan => name.to_string(),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated collection of instances sharing one feature layout and one
/// label/explanation vocabulary. Either every instance carries an
/// explanation or none does.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    task: Task,
    feature_names: Vec<String>,
    label_names: Vec<String>,
    explanation_names: Vec<String>,
    instances: Vec<LabeledInstance>,
    seed: Option<u64>,
}

impl Dataset {
    pub fn new(task: Task, instances: Vec<LabeledInstance>) -> Result<Self> {
        Self::with_vocab(
            task,
            task.feature_names(),
            task.label_names(),
            task.explanation_names(),
            instances,
        )
    }

    pub fn with_vocab(
        task: Task,
        feature_names: Vec<String>,
        label_names: Vec<String>,
        explanation_names: Vec<String>,
        instances: Vec<LabeledInstance>,
    ) -> Result<Self> {
        let width = feature_names.len();
        let with_e = instances.first().is_some_and(|i| i.explanation.is_some());
        for (index, inst) in instances.iter().enumerate() {
            if inst.features.len() != width {
                return Err(TedError::DimensionMismatch(format!(
                    "instance {index} has {} features, expected {width}",
                    inst.features.len()
                )));
            }
            if inst.label.index() >= label_names.len() {
                return Err(TedError::Format(format!(
                    "instance {index} has label id {} outside the vocabulary",
                    inst.label.0
                )));
            }
            match (with_e, inst.explanation) {
                (true, None) => return Err(TedError::MissingExplanation { index }),
                (false, Some(_)) => return Err(TedError::UnexpectedExplanation { index }),
                (true, Some(e)) if e.index() >= explanation_names.len() => {
                    return Err(TedError::Format(format!(
                        "instance {index} has explanation id {} outside the vocabulary",
                        e.0
                    )))
                }
                _ => {}
            }
        }
        Ok(Self {
            task,
            feature_names,
            label_names,
            explanation_names,
            instances,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn explanation_names(&self) -> &[String] {
        &self.explanation_names
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<LabeledInstance> {
        self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn has_explanations(&self) -> bool {
        self.instances
            .first()
            .is_some_and(|i| i.explanation.is_some())
    }

    /// The same dataset with every explanation removed (the baseline view).
    pub fn without_explanations(&self) -> Dataset {
        let mut out = self.clone();
        for inst in &mut out.instances {
            inst.explanation = None;
        }
        out
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut out = Dataset {
            instances: Vec::with_capacity(indices.len()),
            ..self.clone_empty()
        };
        out.instances
            .extend(indices.iter().map(|&i| self.instances[i].clone()));
        out
    }

    fn clone_empty(&self) -> Dataset {
        Dataset {
            task: self.task,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
            explanation_names: self.explanation_names.clone(),
            instances: Vec::new(),
            seed: self.seed,
        }
    }

    /// Row-major feature matrix over the given instance indices.
    pub fn feature_matrix(&self, indices: &[usize]) -> Array2<f64> {
        let width = self.n_features();
        let mut data = Vec::with_capacity(indices.len() * width);
        for &i in indices {
            data.extend_from_slice(&self.instances[i].features);
        }
        Array2::from_shape_vec((indices.len(), width), data).expect("validated width")
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Count of each label id, indexed by id.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_names.len()];
        for inst in &self.instances {
            counts[inst.label.index()] += 1;
        }
        counts
    }

    pub fn explanation_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.explanation_names.len()];
        for e in self.instances.iter().filter_map(|i| i.explanation) {
            counts[e.index()] += 1;
        }
        counts
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if let Some(seed) = self.seed {
            writeln!(out, "# seed={seed}")?;
        }
        let with_e = self.has_explanations();
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        if with_e {
            header.push("explanation");
        }
        writer.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for inst in &self.instances {
            row.clear();
            row.extend(inst.features.iter().map(|v| format_value(*v)));
            row.push(self.label_names[inst.label.index()].clone());
            if let Some(e) = inst.explanation {
                row.push(self.explanation_names[e.index()].clone());
            }
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a dataset CSV. The task is recognized from the header; label
    /// and explanation names are resolved against that task's vocabulary.
    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Dataset> {
        let mut seed = None;
        let mut first = String::new();
        input.read_line(&mut first)?;
        let mut rest = String::new();
        if let Some(comment) = first.trim().strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("seed=") {
                seed = Some(v.trim().parse::<u64>().map_err(|_| {
                    TedError::Format(format!("bad seed comment: {}", first.trim()))
                })?);
            }
        } else {
            rest.push_str(&first);
        }
        input.read_to_string(&mut rest)?;

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(rest.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let task = [Task::TicTacToe, Task::Loan]
            .into_iter()
            .find(|t| {
                let names = t.feature_names();
                header.len() > names.len()
                    && header[..names.len()] == names[..]
                    && header[names.len()] == "label"
            })
            .ok_or_else(|| {
                TedError::Format(format!("unrecognized header: {}", header.join(",")))
            })?;
        let width = task.feature_names().len();
        let with_e = match &header[width + 1..] {
            [] => false,
            [e] if e == "explanation" => true,
            other => {
                return Err(TedError::Format(format!(
                    "unexpected trailing columns: {}",
                    other.join(",")
                )))
            }
        };
        let label_names = task.label_names();
        let explanation_names = task.explanation_names();
        let lookup = |names: &[String], value: &str, what: &str, row: usize| {
            names
                .iter()
                .position(|n| n == value)
                .map(|p| p as u32)
                .ok_or_else(|| TedError::Format(format!("row {row}: unknown {what} '{value}'")))
        };

        let mut instances = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let features = record
                .iter()
                .take(width)
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        TedError::Format(format!("row {row}: non-numeric feature '{v}'"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let label = LabelId(lookup(&label_names, record[width].trim(), "label", row)?);
            let explanation = if with_e {
                Some(ExplanationId(lookup(
                    &explanation_names,
                    record[width + 1].trim(),
                    "explanation",
                    row,
                )?))
            } else {
                None
            };
            instances.push(LabeledInstance::new(features, label, explanation));
        }
        Ok(Dataset::new(task, instances)?.with_seed(seed))
    }
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_explanations_is_rejected() {
        let instances = vec![
            LabeledInstance::new(vec![0.0; 8], LabelId(0), Some(ExplanationId(0))),
            LabeledInstance::new(vec![0.0; 8], LabelId(1), None),
        ];
        assert!(matches!(
            Dataset::new(Task::Loan, instances),
            Err(TedError::MissingExplanation { index: 1 })
        ));
        let instances = vec![
            LabeledInstance::new(vec![0.0; 8], LabelId(0), None),
            LabeledInstance::new(vec![0.0; 8], LabelId(1), Some(ExplanationId(3))),
        ];
        assert!(matches!(
            Dataset::new(Task::Loan, instances),
            Err(TedError::UnexpectedExplanation { index: 1 })
        ));
    }

    #[test]
    fn width_is_checked() {
        let instances = vec![LabeledInstance::new(vec![0.0; 7], LabelId(0), None)];
        assert!(matches!(
            Dataset::new(Task::Loan, instances),
            Err(TedError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn csv_round_trip_keeps_seed_and_explanations() {
        let ds = loan::generate_synthetic(50, 3).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=3\ntrades,ere,nfrb,n0,n1,n2,n3,n4,label,explanation\n"));
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn unknown_header_is_rejected() {
        let err = Dataset::read_csv("a,b,label\n1,2,x\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unrecognized header"));
    }

    #[test]
    fn unknown_label_name_is_rejected() {
        let csv = "trades,ere,nfrb,n0,n1,n2,n3,n4,label\n1,2,3,4,5,6,7,8,maybe\n";
        let err = Dataset::read_csv(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unknown label 'maybe'"));
    }
}
