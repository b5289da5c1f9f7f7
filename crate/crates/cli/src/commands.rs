use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use tedkit::harness::table1::{reproduce_table1 as run_table1, Table1Config};
use tedkit::harness::{split, Mode, SplitSpec};
use tedkit::learners::{ForestConfig, LearnerConfig, MlpConfig};
use tedkit::model::TrainedModel;
use tedkit::{fit_codec, loan, tictactoe, Dataset, Task};

use crate::config::FileConfig;
use crate::{
    EvalArgs, Format, GenArgs, LearnerKind, ModeArg, PredictArgs, ReproduceArgs, SplitPart, Target,
    TrainArgs,
};

fn from_file<T: ValueEnum>(value: Option<&String>, what: &str) -> Result<Option<T>> {
    value
        .map(|v| T::from_str(v, true).map_err(|_| anyhow!("config file: invalid {what} '{v}'")))
        .transpose()
}

/// Fails early when `path` cannot be written, before any work starts.
fn check_writable(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        bail!(
            "cannot write {}: directory {} does not exist",
            path.display(),
            parent.display()
        );
    }
    if path.is_dir() {
        bail!("cannot write {}: it is a directory", path.display());
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<TrainedModel> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    TrainedModel::from_json(&text).with_context(|| format!("reading model {}", path.display()))
}

pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".codec.json");
    csv.with_file_name(name)
}

pub fn gen(file: &FileConfig, args: GenArgs) -> Result<bool> {
    check_writable(&args.out)?;
    let dataset = match args.target {
        Target::Tictactoe => tictactoe::build_dataset(args.with_explanations),
        Target::Loan => {
            let n = args.n.or(file.n).unwrap_or(10_000);
            if n == 0 {
                bail!("--n must be at least 1");
            }
            loan::generate_synthetic(n, file.seed(args.seed)?)?
        }
    };
    let mut out = BufWriter::new(
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?,
    );
    dataset.write_csv(&mut out)?;
    out.flush()?;

    println!(
        "wrote {} instances to {}",
        dataset.len(),
        args.out.display()
    );
    let task = dataset.task();
    let labels = dataset.label_names();
    for (name, count) in labels.iter().zip(dataset.label_counts()) {
        println!("  label {:<12} {count}", task.display_label(name));
    }
    if dataset.has_explanations() {
        for (name, count) in dataset
            .explanation_names()
            .iter()
            .zip(dataset.explanation_counts())
        {
            println!("  explanation {name:<22} {count}");
        }
        let codec = fit_codec(dataset.instances(), labels, dataset.explanation_names())?;
        let sidecar = sidecar_path(&args.out);
        write_file(&sidecar, &codec.to_json())?;
        println!(
            "{} composite classes; codec written to {}",
            codec.len(),
            sidecar.display()
        );
    }
    Ok(true)
}

fn learner_config(
    file: &FileConfig,
    kind: LearnerKind,
    seed: u64,
    epochs: Option<usize>,
    hidden_units: Option<usize>,
    trees: Option<usize>,
) -> LearnerConfig {
    match kind {
        LearnerKind::Mlp => {
            let mut c = file.mlp.clone().unwrap_or_default();
            c.seed = seed;
            c.epochs = epochs.unwrap_or(c.epochs);
            c.hidden_units = hidden_units.unwrap_or(c.hidden_units);
            LearnerConfig::Mlp(c)
        }
        LearnerKind::Forest => {
            let mut c = file.forest.clone().unwrap_or_default();
            c.seed = seed;
            c.n_trees = trees.unwrap_or(c.n_trees);
            LearnerConfig::Forest(c)
        }
    }
}

pub fn train(file: &FileConfig, args: TrainArgs) -> Result<bool> {
    check_writable(&args.out)?;
    let seed = file.seed(args.seed)?;
    let mode = args
        .mode
        .or(from_file(file.mode.as_ref(), "mode")?)
        .unwrap_or(ModeArg::Ted);
    let mut dataset = load_dataset(&args.data)?;
    let kind = args
        .learner
        .or(from_file(file.learner.as_ref(), "learner")?)
        .unwrap_or(match dataset.task() {
            Task::TicTacToe => LearnerKind::Mlp,
            Task::Loan => LearnerKind::Forest,
        });
    let mode = match mode {
        ModeArg::Baseline => {
            if dataset.has_explanations() {
                if !args.drop_explanations {
                    bail!(
                        "{} has an explanation column; pass --drop-explanations to train a baseline on it",
                        args.data.display()
                    );
                }
                dataset = dataset.without_explanations();
            }
            Mode::Baseline
        }
        ModeArg::Ted => {
            if !dataset.has_explanations() {
                bail!(
                    "{} has no explanation column; TED mode needs one",
                    args.data.display()
                );
            }
            Mode::Ted
        }
    };
    let derive = mode == Mode::Ted
        && (args.derive_y_from_e || file.derive_y_from_e.unwrap_or(dataset.task() == Task::Loan));

    let learner = learner_config(file, kind, seed, args.epochs, args.hidden_units, args.trees);
    let (indices, spec) = if args.full {
        (dataset.all_indices(), None)
    } else {
        let fraction = args.train_fraction.or(file.train_fraction).unwrap_or(0.9);
        let spec = SplitSpec::new(fraction, seed)?;
        (split(dataset.len(), &spec)?.train, Some(spec))
    };
    let started = Instant::now();
    let model = TrainedModel::fit(&dataset, &indices, &learner, mode, derive, spec)?;
    write_file(&args.out, &model.to_json())?;
    println!(
        "trained {} {} model on {} instances ({} classes) in {:.1}s; written to {}",
        learner.name(),
        mode_name(mode),
        indices.len(),
        tedkit::learners::Classifier::n_classes(&model.model),
        started.elapsed().as_secs_f64(),
        args.out.display()
    );
    Ok(true)
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Baseline => "baseline",
        Mode::Ted => "ted",
    }
}

#[derive(Serialize)]
struct EvalReport {
    task: Task,
    mode: Mode,
    learner: String,
    split: String,
    n: usize,
    y_accuracy: f64,
    e_accuracy: Option<f64>,
    ye_accuracy: Option<f64>,
    derive_y_from_e: bool,
}

impl EvalReport {
    fn text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.4}"));
        format!(
            "task      {}\nmode      {}\nlearner   {}\nsplit     {}\nn         {}\ny         {:.4}\ne         {}\nye        {}\n",
            self.task,
            mode_name(self.mode),
            self.learner,
            self.split,
            self.n,
            self.y_accuracy,
            opt(self.e_accuracy),
            opt(self.ye_accuracy)
        )
    }
}

pub fn eval(file: &FileConfig, args: EvalArgs) -> Result<bool> {
    if let Some(out) = &args.out {
        check_writable(out)?;
    }
    let model = load_model(&args.model)?;
    let dataset = load_dataset(&args.data)?;
    if dataset.is_empty() {
        bail!("{} contains no instances", args.data.display());
    }
    if dataset.task() != model.task {
        bail!(
            "model was trained on {} data but {} is {} data",
            model.task,
            args.data.display(),
            dataset.task()
        );
    }
    let part = args.split.unwrap_or(if model.split.is_some() {
        SplitPart::Test
    } else {
        SplitPart::All
    });
    let indices = match (part, &model.split) {
        (SplitPart::All, _) => dataset.all_indices(),
        (_, None) => bail!("model was trained on all data; only --split all is available"),
        (SplitPart::Train, Some(spec)) => split(dataset.len(), spec)?.train,
        (SplitPart::Test, Some(spec)) => split(dataset.len(), spec)?.test,
    };
    let (scores, _) = model.evaluate(&dataset, &indices)?;
    let report = EvalReport {
        task: model.task,
        mode: model.mode,
        learner: model.learner.name().to_string(),
        split: format!("{part:?}").to_lowercase(),
        n: scores.n,
        y_accuracy: scores.y_accuracy,
        e_accuracy: scores.e_accuracy,
        ye_accuracy: scores.ye_accuracy,
        derive_y_from_e: model.derive_y_from_e,
    };
    let format = args
        .format
        .or(from_file(file.format.as_ref(), "format")?)
        .unwrap_or(Format::Text);
    let rendered = match format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Text => report.text(),
    };
    print!("{rendered}");
    if let Some(out) = &args.out {
        write_file(out, &rendered)?;
    }
    Ok(true)
}

pub fn predict(file: &FileConfig, args: PredictArgs) -> Result<bool> {
    let model = load_model(&args.model)?;
    let Some(codec) = model.codec() else {
        bail!("model has no explanations");
    };
    let row = args
        .row
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("feature value '{v}' is not a number"))
        })
        .collect::<Result<Vec<f64>>>()?;
    if row.len() != model.n_features {
        bail!(
            "row has {} values but the model expects {}",
            row.len(),
            model.n_features
        );
    }
    let x = ndarray_row(row);
    let prediction = model.predict(x.view())?[0];
    let label = codec.label_name(prediction.label);
    let explanation = codec.explanation_name(prediction.explanation.expect("TED model"));
    let display = model.task.display_label(&label);
    match args
        .format
        .or(from_file(file.format.as_ref(), "format")?)
        .unwrap_or(Format::Text)
    {
        Format::Text => println!("{display} — {explanation} (score {:.4})", prediction.score),
        Format::Json => println!(
            "{}",
            serde_json::json!({
                "label": label,
                "explanation": explanation,
                "composite": prediction.class,
                "score": prediction.score,
            })
        ),
    }
    Ok(true)
}

fn ndarray_row(row: Vec<f64>) -> ndarray::Array2<f64> {
    let n = row.len();
    ndarray::Array2::from_shape_vec((1, n), row).expect("one row")
}

pub fn reproduce_table1(file: &FileConfig, args: ReproduceArgs) -> Result<bool> {
    if let Some(out) = &args.out {
        check_writable(out)?;
    }
    let defaults = Table1Config::default();
    let mut mlp: MlpConfig = file.mlp.clone().unwrap_or(defaults.mlp);
    mlp.epochs = args.epochs.unwrap_or(mlp.epochs);
    let mut forest: ForestConfig = file.forest.clone().unwrap_or(defaults.forest);
    forest.n_trees = args.trees.unwrap_or(forest.n_trees);
    let config = Table1Config {
        train_fraction: file.train_fraction.unwrap_or(defaults.train_fraction),
        tictactoe_seed: args.seed.or(file.seed).unwrap_or(defaults.tictactoe_seed),
        mlp,
        loan_n: args.n.or(file.n).unwrap_or(defaults.loan_n),
        loan_data_seed: defaults.loan_data_seed,
        loan_seeds: args
            .seeds
            .or_else(|| file.seeds.clone())
            .unwrap_or(defaults.loan_seeds),
        forest,
    };
    let started = Instant::now();
    let mut report = run_table1(&config)?;
    if !args.timings {
        report = report.without_timing();
    }
    let text = report.render_text();
    print!("{text}");
    if args.timings {
        println!("total runtime {:.1}s", started.elapsed().as_secs_f64());
    }
    if let Some(out) = &args.out {
        let format = args
            .format
            .or(from_file(file.format.as_ref(), "format")?)
            .unwrap_or(Format::Json);
        let rendered = match format {
            Format::Json => serde_json::to_string_pretty(&report)? + "\n",
            Format::Text => text,
        };
        write_file(out, &rendered)?;
    }
    Ok(report.all_passed())
}
