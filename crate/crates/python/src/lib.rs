//! Python bindings for tedkit.

use ndarray::Array2;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use tedkit::harness::{run_baseline, run_ted, Mode, SplitSpec};
use tedkit::learners::{ForestConfig, LearnerConfig, MlpConfig};
use tedkit::model::TrainedModel;
use tedkit::tictactoe::{self, Board};
use tedkit::{
    fit_codec, loan, CodecTable, CompositeId, Dataset, ExplanationId, LabelId, LabeledInstance,
    Task, TedError,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, json: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (json,))
}

fn board(x_cells: Vec<usize>, o_cells: Vec<usize>) -> PyResult<Board> {
    Board::from_cells(&x_cells, &o_cells).map_err(err)
}

/// Every legal non-terminal position as `(x_cells, o_cells)`, in enumeration order.
#[pyfunction]
fn enumerate_positions() -> Vec<(Vec<usize>, Vec<usize>)> {
    tictactoe::enumerate_legal_nonterminal()
        .iter()
        .map(|b| {
            let cells = |plane: [bool; 9]| (0..9).filter(|&c| plane[c]).collect();
            (cells(b.x_plane()), cells(b.o_plane()))
        })
        .collect()
}

/// Preferred move for the side to move: `(square, reason)`.
#[pyfunction]
fn label_move(x_cells: Vec<usize>, o_cells: Vec<usize>) -> PyResult<(usize, &'static str)> {
    let b = board(x_cells, o_cells)?;
    b.check_legal_nonterminal().map_err(err)?;
    let m = tictactoe::label_move(&b).map_err(err)?;
    Ok((m.square.index(), m.reason.name()))
}

#[pyfunction]
fn featurize(x_cells: Vec<usize>, o_cells: Vec<usize>) -> PyResult<Vec<f64>> {
    Ok(tictactoe::featurize(&board(x_cells, o_cells)?).to_vec())
}

/// Loan decision and explanation for one applicant.
#[pyfunction]
fn loan_rule_label(trades: u32, ere: u32, nfrb: u32) -> PyResult<(&'static str, &'static str)> {
    let record = loan::LoanRecord::new(trades, ere, nfrb, [0; loan::N_NOISE]).map_err(err)?;
    let (label, explanation) = loan::rule_label(&record);
    Ok((label.name(), explanation.name()))
}

fn dataset_dict<'py>(py: Python<'py>, ds: &Dataset) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let inst = ds.instances();
    d.set_item("task", ds.task().name())?;
    d.set_item("feature_names", ds.feature_names())?;
    d.set_item("label_names", ds.label_names())?;
    d.set_item("explanation_names", ds.explanation_names())?;
    d.set_item(
        "features",
        inst.iter().map(|i| i.features.clone()).collect::<Vec<_>>(),
    )?;
    d.set_item("labels", inst.iter().map(|i| i.label.0).collect::<Vec<_>>())?;
    let explanations: Option<Vec<u32>> = inst.iter().map(|i| i.explanation.map(|e| e.0)).collect();
    d.set_item("explanations", explanations)?;
    Ok(d)
}

/// All positions with features, label ids and (optionally) explanation ids.
#[pyfunction]
#[pyo3(signature = (with_explanations = true))]
fn tictactoe_dataset(py: Python<'_>, with_explanations: bool) -> PyResult<Bound<'_, PyDict>> {
    dataset_dict(py, &tictactoe::build_dataset(with_explanations))
}

#[pyfunction]
#[pyo3(signature = (n = 10_000, seed = 0))]
fn loan_dataset(py: Python<'_>, n: usize, seed: u64) -> PyResult<Bound<'_, PyDict>> {
    dataset_dict(py, &loan::generate_synthetic(n, seed).map_err(err)?)
}

fn task_dataset(task: &str, n: usize, seed: u64) -> PyResult<Dataset> {
    match task {
        "tictactoe" => Ok(tictactoe::build_dataset(true)),
        "loan" => loan::generate_synthetic(n, seed).map_err(err),
        other => Err(err(format!("unknown task '{other}'"))),
    }
}

fn learner_for(name: &str, epochs: Option<usize>, trees: Option<usize>) -> PyResult<LearnerConfig> {
    match name {
        "mlp" => {
            let mut c = MlpConfig::default();
            c.epochs = epochs.unwrap_or(c.epochs);
            Ok(LearnerConfig::Mlp(c))
        }
        "forest" => {
            let mut c = ForestConfig::default();
            c.n_trees = trees.unwrap_or(c.n_trees);
            Ok(LearnerConfig::Forest(c))
        }
        other => Err(err(format!("unknown learner '{other}'"))),
    }
}

/// Runs one baseline or TED experiment on a generated dataset and returns the report.
#[pyfunction]
#[pyo3(signature = (task, mode, learner, seed = 0, train_fraction = 0.9, derive_y_from_e = false, n = 10_000, data_seed = 7, epochs = None, trees = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    task: &str,
    mode: &str,
    learner: &str,
    seed: u64,
    train_fraction: f64,
    derive_y_from_e: bool,
    n: usize,
    data_seed: u64,
    epochs: Option<usize>,
    trees: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let ds = task_dataset(task, n, data_seed)?;
    let learner = learner_for(learner, epochs, trees)?;
    let spec = SplitSpec::new(train_fraction, seed).map_err(err)?;
    let report = py
        .detach(|| match mode {
            "baseline" => run_baseline(&ds.without_explanations(), &learner, &spec),
            "ted" => run_ted(&ds, &learner, &spec, derive_y_from_e),
            other => Err(TedError::InvalidConfig(format!("unknown mode '{other}'"))),
        })
        .map_err(err)?;
    json_to_py(py, &serde_json::to_string(&report).map_err(err)?)
}

/// Bijection between (label, explanation) pairs and composite class ids.
#[pyclass(name = "Codec", module = "tedkit", frozen)]
struct PyCodec(CodecTable);

#[pymethods]
impl PyCodec {
    #[new]
    fn new(
        labels: Vec<u32>,
        explanations: Vec<u32>,
        label_names: Vec<String>,
        explanation_names: Vec<String>,
    ) -> PyResult<Self> {
        if labels.len() != explanations.len() {
            return Err(err("labels and explanations differ in length"));
        }
        let instances: Vec<LabeledInstance> = labels
            .iter()
            .zip(&explanations)
            .map(|(&y, &e)| LabeledInstance::new(Vec::new(), LabelId(y), Some(ExplanationId(e))))
            .collect();
        fit_codec(&instances, &label_names, &explanation_names)
            .map(PyCodec)
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        CodecTable::from_json(json).map(PyCodec).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn encode(&self, label: u32, explanation: u32) -> PyResult<u32> {
        Ok(self
            .0
            .encode(LabelId(label), ExplanationId(explanation))
            .map_err(err)?
            .0)
    }

    fn decode(&self, composite: u32) -> PyResult<(u32, u32)> {
        let (y, e) = self.0.decode(CompositeId(composite)).map_err(err)?;
        Ok((y.0, e.0))
    }

    fn derive_label(&self, explanation: u32) -> PyResult<u32> {
        Ok(self
            .0
            .derive_label(ExplanationId(explanation))
            .map_err(err)?
            .0)
    }

    fn pairs(&self) -> Vec<(u32, u32)> {
        self.0.pairs().iter().map(|(y, e)| (y.0, e.0)).collect()
    }

    #[getter]
    fn is_functional(&self) -> bool {
        self.0.is_functional()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Codec({} composites)", self.0.len())
    }
}

/// A trained model as written by `tedkit train`.
#[pyclass(name = "Model", module = "tedkit", frozen)]
struct PyModel(TrainedModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        TrainedModel::from_json(json).map(PyModel).map_err(err)
    }

    /// Fits on every instance of a generated dataset.
    #[staticmethod]
    #[pyo3(signature = (task, mode, learner, seed = 0, n = 10_000, data_seed = 7, epochs = None, trees = None))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        py: Python<'_>,
        task: &str,
        mode: &str,
        learner: &str,
        seed: u64,
        n: usize,
        data_seed: u64,
        epochs: Option<usize>,
        trees: Option<usize>,
    ) -> PyResult<Self> {
        let mut ds = task_dataset(task, n, data_seed)?;
        let learner = learner_for(learner, epochs, trees)?.with_seed(seed);
        let mode = match mode {
            "baseline" => {
                ds = ds.without_explanations();
                Mode::Baseline
            }
            "ted" => Mode::Ted,
            other => return Err(err(format!("unknown mode '{other}'"))),
        };
        let derive = mode == Mode::Ted && ds.task() == Task::Loan;
        let all = ds.all_indices();
        py.detach(|| TrainedModel::fit(&ds, &all, &learner, mode, derive, None))
            .map(PyModel)
            .map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    /// `(label, explanation or None, score)` for each feature row.
    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<(String, Option<String>, f64)>> {
        let width = self.0.n_features;
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(err(format!(
                "row has {} values but the model expects {width}",
                bad.len()
            )));
        }
        let n = rows.len();
        let x = Array2::from_shape_vec((n, width), rows.concat()).map_err(err)?;
        let names = self.0.label_names();
        let codec = self.0.codec();
        Ok(self
            .0
            .predict(x.view())
            .map_err(err)?
            .into_iter()
            .map(|p| {
                let explanation = p.explanation.zip(codec).map(|(e, c)| c.explanation_name(e));
                (names[p.label.index()].clone(), explanation, p.score)
            })
            .collect())
    }

    #[getter]
    fn task(&self) -> &'static str {
        self.0.task.name()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.0.n_features
    }
}

#[pymodule]
#[pyo3(name = "tedkit")]
fn tedkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(enumerate_positions, m)?)?;
    m.add_function(wrap_pyfunction!(label_move, m)?)?;
    m.add_function(wrap_pyfunction!(featurize, m)?)?;
    m.add_function(wrap_pyfunction!(loan_rule_label, m)?)?;
    m.add_function(wrap_pyfunction!(tictactoe_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(loan_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<PyCodec>()?;
    m.add_class::<PyModel>()?;
    Ok(())
}
