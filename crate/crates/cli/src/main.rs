//! `efsvm`: runs the experiment sets and exposes each pipeline stage as a
//! subcommand.
//!
//! Exit status: 0 success, 2 usage or configuration error, 3 data or model
//! error, 4 a solver hit its iteration cap (outputs are still written).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use efsvm::bagging::{read_ensemble, save_ensemble};
use efsvm::experiment::{Cell, Experiment, ExperimentConfig, ExperimentId};
use efsvm::report::{render, render_table, Predictor};
use efsvm::selection::{run_selector, SelectionDetail, SelectorId};
use efsvm::svm::{read_model, save_model};
use efsvm::{
    bagging_train, evaluate, select_features, train_multiclass, Dataset, EnsembleConfig, EnsembleModel, Error,
    EvaluationReport, OutputFormat, Partition, SvmModel,
};

/// Filter feature selection ensembles and bagged polynomial SVMs.
#[derive(Debug, Parser)]
#[command(name = "efsvm", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Dataset file, CSV or ARFF.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for the split, searches and bagging.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "EFSVM_OUT")]
    out: Option<PathBuf>,
    /// Stratified subsample of the dataset for smoke runs.
    #[arg(long, global = true)]
    quick: bool,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rows {
    Train,
    Test,
    /// Every row in file order.
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment set (exp1 to exp5) or `all`.
    Experiment {
        id: String,
    },
    /// Run one selector on the training partition, e.g. `FS1:best_first`.
    Select {
        selector: String,
    },
    /// Train an SVM, or a bagged ensemble with `--members`, on the training partition.
    Train {
        /// Where to write the model file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        degree: Option<u32>,
        /// Bag this many members instead of training a single model.
        #[arg(long)]
        members: Option<usize>,
        /// Comma-separated feature names; all features when absent.
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
    },
    /// Predict with a saved model and write one row per record.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        partition: Rows,
    },
    /// Confusion matrices and accuracies of a saved model.
    Report {
        #[arg(long)]
        model: PathBuf,
        /// Partition whose confusion matrix is printed.
        #[arg(long, value_enum, default_value = "combined")]
        partition: PartitionArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PartitionArg {
    Train,
    Test,
    Combined,
}

impl From<PartitionArg> for Partition {
    fn from(p: PartitionArg) -> Self {
        match p {
            PartitionArg::Train => Partition::Train,
            PartitionArg::Test => Partition::Test,
            PartitionArg::Combined => Partition::Combined,
        }
    }
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<usize, Failure>;

enum Model {
    Single(SvmModel),
    Ensemble(EnsembleModel),
}

impl Model {
    fn load(path: &Path) -> Result<Model, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if text.starts_with("efsvm-ensemble") {
            Ok(Model::Ensemble(read_ensemble(&text)?))
        } else {
            Ok(Model::Single(read_model(&text)?))
        }
    }

    fn feature_names(&self) -> &[String] {
        match self {
            Model::Single(m) => &m.feature_names,
            Model::Ensemble(e) => e.feature_names(),
        }
    }

    fn classes(&self) -> &[String] {
        match self {
            Model::Single(m) => &m.classes,
            Model::Ensemble(e) => e.classes(),
        }
    }

    fn members(&self) -> Option<usize> {
        match self {
            Model::Single(_) => None,
            Model::Ensemble(e) => Some(e.n_members()),
        }
    }

    fn cell(&self) -> Cell {
        let cfg = match self {
            Model::Single(m) => &m.config,
            Model::Ensemble(e) => &e.members[0].model.config,
        };
        Cell::new(cfg.c, cfg.kernel.degree)
    }

    /// `ds` restricted to the model's features, by name.
    fn project(&self, ds: &Dataset) -> Result<Dataset, Error> {
        let idx = self
            .feature_names()
            .iter()
            .map(|name| {
                ds.feature_index(name)
                    .ok_or_else(|| Error::SchemaMismatch(format!("dataset has no feature `{name}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        select_features(ds, &idx)
    }
}

impl Predictor for Model {
    fn predict_rows(&self, ds: &Dataset) -> efsvm::Result<Vec<usize>> {
        match self {
            Model::Single(m) => m.predict_dataset(ds),
            Model::Ensemble(e) => e.predict_dataset(ds),
        }
    }
}

/// Config file, then environment, then flags.
fn config(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &common.data {
        cfg.data = Some(d.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if common.quick {
        cfg.quick = true;
    }
    match common.format {
        Some(Format::Csv) => cfg.format = OutputFormat::Csv,
        Some(Format::Markdown) => cfg.format = OutputFormat::Markdown,
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(common: &Common) -> Result<Experiment, Failure> {
    let cfg = config(common)?;
    if cfg.data.is_none() {
        return Err(Failure::Usage("no dataset: pass --data or set `data` in the config file".into()));
    }
    Ok(Experiment::load(cfg)?)
}

fn write_output(cfg: &ExperimentConfig, name: &str, text: &str) -> Result<PathBuf, Error> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::Io {
        path: cfg.output_dir.clone(),
        source: e,
    })?;
    let path = cfg.output_dir.join(format!("{name}_seed{}.{}", cfg.seed, cfg.format.extension()));
    fs::write(&path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

fn cmd_experiment(common: &Common, id: &str) -> Outcome {
    let ids: Vec<ExperimentId> = if id == "all" {
        ExperimentId::ALL.to_vec()
    } else {
        vec![id.parse().map_err(|_| Failure::Usage(format!("unknown experiment `{id}`, expected exp1..exp5 or all")))?]
    };
    let exp = experiment(common)?;
    let outcome = exp.run_all(&ids)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.nonconverged)
}

fn cmd_select(common: &Common, selector: &str) -> Outcome {
    let id: SelectorId = selector.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let exp = experiment(common)?;
    let sel = run_selector(id, &exp.train, &exp.config.selectors)?;
    let names = exp.train.feature_names();
    let (header, rows): (Vec<String>, Vec<Vec<String>>) = match &sel.detail {
        SelectionDetail::Ranking(scores) => (
            ["feature", "method", "score", "rank"].map(String::from).to_vec(),
            scores
                .ordering
                .iter()
                .enumerate()
                .map(|(pos, &f)| {
                    vec![
                        names[f].clone(),
                        scores.method.name().to_string(),
                        format!("{:?}", scores.scores[f]),
                        (pos + 1).to_string(),
                    ]
                })
                .collect(),
        ),
        SelectionDetail::Subset(eval) => (
            ["feature", "method", "value", "evaluations"].map(String::from).to_vec(),
            eval.subset
                .iter()
                .map(|&f| vec![names[f].clone(), sel.id.label(), format!("{:?}", eval.value), sel.evaluations.to_string()])
                .collect(),
        ),
    };
    let text = render_table(&header, &rows, exp.config.format)?;
    let path = write_output(&exp.config, &format!("select_{}", sel.id.label()), &text)?;
    println!("{}: {} of {} features -> {}", sel.id.label(), sel.selected.len(), names.len(), path.display());
    Ok(0)
}

fn cmd_train(
    common: &Common,
    model_path: &Path,
    c: Option<f64>,
    degree: Option<u32>,
    members: Option<usize>,
    features: Option<&[String]>,
) -> Outcome {
    let exp = experiment(common)?;
    let cell = Cell::new(c.unwrap_or(exp.config.baseline.c), degree.unwrap_or(exp.config.baseline.degree));
    let idx = match features {
        None => exp.all_features(),
        Some(names) => names
            .iter()
            .map(|n| exp.train.feature_index(n).ok_or_else(|| Failure::Usage(format!("unknown feature `{n}`"))))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let train = select_features(&exp.train, &idx)?;
    let test = select_features(&exp.test, &idx)?;
    let (model, nonconverged) = match members {
        None => {
            let m = train_multiclass(&train, &exp.config.svm_config(cell))?;
            save_model(&m, model_path)?;
            let n = m.non_converged();
            (Model::Single(m), n)
        }
        Some(k) => {
            let e = bagging_train(&train, &EnsembleConfig { members: k, ..exp.ensemble_config(cell, k) })?;
            save_ensemble(&e, model_path)?;
            let n = e.members.iter().map(|m| m.model.non_converged()).sum();
            (Model::Ensemble(e), n)
        }
    };
    let tr = evaluate(&model, &train, Partition::Train)?;
    let te = evaluate(&model, &test, Partition::Test)?;
    let co = tr.combine(&te)?;
    println!(
        "{} (C={}, degree={}, {} features): train {:.2}%, test {:.2}%, combined {:.2}%",
        model_path.display(),
        cell.c,
        cell.degree,
        idx.len(),
        pct(&tr),
        pct(&te),
        pct(&co)
    );
    Ok(nonconverged)
}

fn pct(cm: &efsvm::ConfusionMatrix) -> f64 {
    100.0 * cm.trace() as f64 / cm.total().max(1) as f64
}

fn cmd_predict(common: &Common, model_path: &Path, rows: Rows) -> Outcome {
    let model = Model::load(model_path)?;
    let exp = experiment(common)?;
    let ds = match rows {
        Rows::Train => &exp.train,
        Rows::Test => &exp.test,
        Rows::All => &exp.data,
    };
    let ds = model.project(ds)?;
    let preds = model.predict_rows(&ds)?;
    let classes = model.classes();
    let body: Vec<Vec<String>> = preds
        .iter()
        .enumerate()
        .map(|(i, &p)| vec![i.to_string(), classes[ds.label(i)].clone(), classes[p].clone()])
        .collect();
    let header = ["row", "actual", "predicted"].map(String::from).to_vec();
    let text = render_table(&header, &body, exp.config.format)?;
    let path = write_output(&exp.config, "predict", &text)?;
    let correct = preds.iter().enumerate().filter(|&(i, &p)| ds.label(i) == p).count();
    println!("{} rows, {} correct -> {}", preds.len(), correct, path.display());
    Ok(0)
}

fn cmd_report(common: &Common, model_path: &Path, partition: Partition) -> Outcome {
    let model = Model::load(model_path)?;
    let exp = experiment(common)?;
    let train = model.project(&exp.train)?;
    let test = model.project(&exp.test)?;
    let tr = evaluate(&model, &train, Partition::Train)?;
    let te = evaluate(&model, &test, Partition::Test)?;
    let co = tr.combine(&te)?;
    let cell = model.cell();
    let report = EvaluationReport {
        model: model_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        c: Some(cell.c),
        degree: Some(cell.degree),
        members: model.members(),
        matrices: vec![tr.clone(), te.clone(), co.clone()],
        cpu_seconds: None,
        flags: Vec::new(),
    };
    let text = render(&[report], exp.config.format)?;
    let path = write_output(&exp.config, "report", &text)?;
    let shown = match partition {
        Partition::Train => &tr,
        Partition::Test => &te,
        Partition::Combined => &co,
    };
    println!("{}", shown.to_markdown());
    print!("{text}");
    eprintln!("-> {}", path.display());
    Ok(0)
}

fn run(cli: &Cli) -> Outcome {
    let common = &cli.common;
    match &cli.command {
        Command::Experiment { id } => cmd_experiment(common, id),
        Command::Select { selector } => cmd_select(common, selector),
        Command::Train {
            model,
            c,
            degree,
            members,
            features,
        } => cmd_train(common, model, *c, *degree, *members, features.as_deref()),
        Command::Predict { model, partition } => cmd_predict(common, model, *partition),
        Command::Report { model, partition } => cmd_report(common, model, (*partition).into()),
    }
}

fn exit_status(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidSelector(_) | Error::TooManyFeatures(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("warning: {n} binary machine(s) stopped at the iteration cap");
            ExitCode::from(4)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
