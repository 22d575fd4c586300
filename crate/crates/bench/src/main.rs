use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elastic_core::centroid::{compute_mean, MeanConfig, PrototypeMode};
use elastic_core::learn::{self, LossKind};
use elastic_core::model::{Model, ModelFile};
use elastic_core::warp::dtw_distance;
use elastic_core::TimeSeries;
use elastic_bench::dataset::{load_raw, load_split, Dataset, Delimiter, LabelMap, LoadOptions};
use elastic_bench::error::{BenchError, Result};
use elastic_bench::experiment::{
    elasticity_sweep, fit_classifier, nn_experiment, nn_prototypes, run_experiment, Elasticity,
    ExperimentConfig, NnConfig, NnMode, SweepConfig,
};
use elastic_bench::grid::{Grid, GridPoint};
use elastic_bench::report::{emit, OutputFormat, VERSION};
use serde_json::json;

#[derive(Parser)]
#[command(name = "elastic", version, about = "Elastic linear classifiers and DTW baselines on time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// DTW distances between every series of one file and every series of another.
    Dtw {
        file_a: PathBuf,
        file_b: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Sakoe-Chiba band radius.
        #[arg(long)]
        band: Option<usize>,
    },
    /// Fit a classifier or prototype set and save it as JSON.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        learn: LearnArgs,
        /// Fit nearest-neighbor prototypes (kme or ahc) instead of a classifier.
        #[arg(long, value_parser = parse_prototype_mode)]
        prototypes: Option<PrototypeMode>,
        /// Where to write the model.
        #[arg(long)]
        model: PathBuf,
    },
    /// Error rate of a saved model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Mean of a set of series in DTW space.
    Mean {
        #[arg(long)]
        data: PathBuf,
        /// Only use rows with this raw label.
        #[arg(long)]
        class: Option<f64>,
        /// Matrix columns; defaults to the longest series length.
        #[arg(long)]
        elasticity: Option<usize>,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Elastic perceptron test error across elasticity ratios.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        /// Repeats per ratio.
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        /// Comma-separated ratios; defaults to the standard set.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Nearest-neighbor baseline test error.
    Nn {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "all", value_parser = parse_nn_mode)]
        mode: NnMode,
        #[arg(long)]
        band: Option<usize>,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Model selection by cross-validation, then repeated train/test trials.
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        learn: LearnArgs,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Clone)]
struct LoadArgs {
    /// Field delimiter: auto, comma, tab or whitespace.
    #[arg(long, default_value = "auto", value_parser = parse_delimiter)]
    delimiter: Delimiter,
    /// Z-normalize every series after loading.
    #[arg(long)]
    z_normalize: bool,
}

impl LoadArgs {
    fn options(&self) -> LoadOptions {
        LoadOptions {
            delimiter: self.delimiter,
            z_normalize: self.z_normalize,
        }
    }
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long, required_unless_present = "dataset")]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Archive root holding `<name>/<name>_TRAIN` and `<name>/<name>_TEST`.
    #[arg(long, env = "UCR_DATA_DIR")]
    ucr_dir: Option<PathBuf>,
    /// Dataset name inside the archive root.
    #[arg(long, conflicts_with = "train")]
    dataset: Option<String>,
    #[command(flatten)]
    load: LoadArgs,
}

impl DataArgs {
    fn paths(&self, need_test: bool) -> Result<(PathBuf, Option<PathBuf>)> {
        if let Some(name) = &self.dataset {
            let dir = self
                .ucr_dir
                .as_ref()
                .ok_or_else(|| BenchError::Usage("--dataset needs --ucr-dir or UCR_DATA_DIR".into()))?;
            let (train, test) = elastic_bench::dataset::ucr_paths(dir, name).ok_or_else(|| {
                BenchError::Data(format!("{name}: no train/test files under {}", dir.display()))
            })?;
            return Ok((train, Some(test)));
        }
        let train = self.train.clone().expect("clap enforces --train");
        if need_test && self.test.is_none() {
            return Err(BenchError::Usage("--test is required".into()));
        }
        Ok((train, self.test.clone()))
    }

    fn load_pair(&self) -> Result<(Dataset, Dataset, LabelMap)> {
        let (train, test) = self.paths(true)?;
        let (mut a, b, map) = load_split(&train, &test.expect("checked"), self.load.options())?;
        if let Some(name) = &self.dataset {
            a.name = name.clone();
        }
        Ok((a, b, map))
    }

    fn load_train(&self) -> Result<(Dataset, LabelMap)> {
        let (train, _) = self.paths(false)?;
        let raw = load_raw(&train, self.load.options())?;
        let map = LabelMap::fit(&[&raw])?;
        let mut d = Dataset::from_raw(&raw, &map)?;
        if let Some(name) = &self.dataset {
            d.name = name.clone();
        }
        Ok((d, map))
    }
}

#[derive(Args, Clone)]
struct LearnArgs {
    /// eperc, emarg, elogr or elsvm (or perceptron, margin-perceptron, logistic, svm).
    #[arg(long, default_value = "elsvm")]
    classifier: LossKind,
    /// Elasticity as a fraction of the longest training series, `m = ceil(w n)`.
    #[arg(long, conflicts_with = "elasticity")]
    elasticity_ratio: Option<f64>,
    /// Elasticity as an explicit number of columns.
    #[arg(long)]
    elasticity: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Fixed learning rate; skips model selection.
    #[arg(long)]
    eta: Option<f64>,
    /// Fixed margin for the margin perceptron.
    #[arg(long, requires = "eta")]
    margin: Option<f64>,
    /// Fixed regularization for the linear SVM.
    #[arg(long, requires = "eta")]
    lambda: Option<f64>,
}

impl LearnArgs {
    fn config(&self, trials: usize) -> ExperimentConfig {
        let elasticity = match (self.elasticity, self.elasticity_ratio) {
            (Some(m), _) => Elasticity::Columns(m),
            (None, Some(w)) => Elasticity::Ratio(w),
            (None, None) => Elasticity::default(),
        };
        ExperimentConfig {
            classifier: self.classifier,
            elasticity,
            grid: Grid::default(),
            trials,
            master_seed: self.seed,
            max_epochs: self.epochs,
            fixed: self.eta.map(|eta| GridPoint {
                eta,
                margin: self.margin.filter(|_| self.classifier == LossKind::MarginPerceptron),
                regularization: self.lambda.filter(|_| self.classifier == LossKind::LinearSvm),
            }),
            ..ExperimentConfig::default()
        }
    }
}

#[derive(Args, Clone)]
struct OutArgs {
    /// json or csv.
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_delimiter(s: &str) -> std::result::Result<Delimiter, String> {
    match s {
        "auto" => Ok(Delimiter::Auto),
        "comma" | "," => Ok(Delimiter::Comma),
        "tab" | "\\t" => Ok(Delimiter::Tab),
        "whitespace" | "space" => Ok(Delimiter::Whitespace),
        _ => Err(format!("unknown delimiter `{s}`")),
    }
}

fn parse_nn_mode(s: &str) -> std::result::Result<NnMode, String> {
    s.parse().map_err(|e: BenchError| e.to_string())
}

fn parse_prototype_mode(s: &str) -> std::result::Result<PrototypeMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "kme" => Ok(PrototypeMode::Kme),
        "ahc" => Ok(PrototypeMode::Ahc),
        _ => Err(format!("unknown prototype mode `{s}`, expected kme or ahc")),
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>], tag: &str) -> String {
    let mut w = csv::Writer::from_writer(format!("# {tag} version={VERSION}\n").into_bytes());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

fn run_dtw(a: &Path, b: &Path, load: &LoadArgs, out: &OutArgs, band: Option<usize>) -> Result<()> {
    let xs = load_raw(a, load.options())?;
    let ys = load_raw(b, load.options())?;
    let mut cells = Vec::new();
    for (i, (_, x)) in xs.rows.iter().enumerate() {
        for (j, (_, y)) in ys.rows.iter().enumerate() {
            cells.push((i, j, dtw_distance(x, y, band)?));
        }
    }
    let text = match out.format {
        OutputFormat::Json => {
            let matrix: Vec<Vec<f64>> = cells.chunks(ys.rows.len()).map(|c| c.iter().map(|t| t.2).collect()).collect();
            pretty(&json!({
                "format": "elastic-dtw/1",
                "version": VERSION,
                "band": band,
                "distances": matrix,
            }))
        }
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = cells
                .iter()
                .map(|(i, j, d)| vec![i.to_string(), j.to_string(), d.to_string()])
                .collect();
            csv_text(&["a", "b", "distance"], &rows, "elastic-dtw/1")
        }
    };
    emit(&text, out.out.as_deref())
}

fn run_train(data: &DataArgs, learn: &LearnArgs, prototypes: Option<PrototypeMode>, path: &Path) -> Result<()> {
    let (train, map) = data.load_train()?;
    let (model, summary) = match prototypes {
        Some(mode) => {
            let set = nn_prototypes(&train, mode, MeanConfig::new(1, 1).max_iters)?;
            (Model::Prototypes(set), json!({ "prototypes": mode.name() }))
        }
        None => {
            let fit = fit_classifier(&train, &learn.config(1))?;
            let summary = json!({
                "classifier": fit.classifier.loss.short_name(),
                "rows": fit.classifier.params.rows(),
                "cols": fit.classifier.params.cols(),
                "params": fit.point,
                "cv_error_pct": fit.cv_error_pct,
                "epochs_run": fit.report.epochs_run,
                "train_error_pct": fit.report.final_train_error_rate * 100.0,
            });
            (Model::Classifier(fit.classifier), summary)
        }
    };
    ModelFile {
        model,
        class_labels: Some(map.pair()),
    }
    .save(path)?;
    eprintln!("{}", pretty(&summary).trim_end());
    Ok(())
}

fn run_eval(model_path: &Path, data: &Path, load: &LoadArgs, out: &OutArgs) -> Result<()> {
    let file = ModelFile::load(model_path)?;
    let map = LabelMap::from_pair(file.class_labels.unwrap_or([-1.0, 1.0]));
    let raw = load_raw(data, load.options())?;
    let d = Dataset::from_raw(&raw, &map)?;
    let mut wrong = 0usize;
    for ex in &d.examples {
        let predicted = match &file.model {
            Model::Classifier(c) => learn::predict(&c.params, &ex.series)?,
            Model::Prototypes(set) => elastic_core::centroid::nn_classify(
                &ex.series,
                elastic_core::centroid::References::Prototypes(set),
            )?,
        };
        if predicted != ex.label {
            wrong += 1;
        }
    }
    let error_pct = wrong as f64 / d.len() as f64 * 100.0;
    let text = match out.format {
        OutputFormat::Json => pretty(&json!({
            "format": "elastic-eval/1",
            "version": VERSION,
            "dataset": d.name,
            "examples": d.len(),
            "errors": wrong,
            "error_pct": error_pct,
        })),
        OutputFormat::Csv => csv_text(
            &["dataset", "examples", "errors", "error_pct"],
            &[vec![d.name.clone(), d.len().to_string(), wrong.to_string(), error_pct.to_string()]],
            "elastic-eval/1",
        ),
    };
    emit(&text, out.out.as_deref())
}

fn run_mean(data: &Path, class: Option<f64>, cols: Option<usize>, iters: usize, load: &LoadArgs, out: &OutArgs) -> Result<()> {
    let raw = load_raw(data, load.options())?;
    let series: Vec<TimeSeries> = raw
        .rows
        .iter()
        .filter(|(l, _)| class.is_none_or(|c| *l == c))
        .map(|(_, x)| x.clone())
        .collect();
    if series.is_empty() {
        return Err(BenchError::Data(format!("{}: no series to average", data.display())));
    }
    let n = series.iter().map(|x| x.len()).max().unwrap_or(1);
    let cfg = MeanConfig {
        max_iters: iters,
        ..MeanConfig::new(n, cols.unwrap_or(n))
    };
    let state = compute_mean(&series, &cfg)?;
    let text = match out.format {
        OutputFormat::Json => pretty(&json!({
            "format": "elastic-mean/1",
            "version": VERSION,
            "rows": state.y.rows(),
            "cols": state.y.cols(),
            "variation": state.variation,
            "iterations": state.iterations,
            "trace": state.trace,
            "weights": state.y.to_row_major(),
        })),
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = (0..state.y.rows())
                .map(|i| state.y.row(i).iter().map(f64::to_string).collect())
                .collect();
            let header: Vec<String> = (0..state.y.cols()).map(|j| format!("c{j}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv_text(&header, &rows, "elastic-mean/1")
        }
    };
    emit(&text, out.out.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dtw { file_a, file_b, load, out, band } => run_dtw(&file_a, &file_b, &load, &out, band),
        Command::Train { data, learn, prototypes, model } => run_train(&data, &learn, prototypes, &model),
        Command::Eval { model, data, load, out } => run_eval(&model, &data, &load, &out),
        Command::Mean { data, class, elasticity, iters, load, out } => {
            run_mean(&data, class, elasticity, iters, &load, &out)
        }
        Command::Sweep { data, trials, seed, epochs, ratios, out } => {
            let (train, test, _) = data.load_pair()?;
            let mut cfg = SweepConfig {
                repeats: trials,
                master_seed: seed,
                max_epochs: epochs,
                ..SweepConfig::default()
            };
            if let Some(r) = ratios {
                cfg.ratios = r;
            }
            let o = elasticity_sweep(&train, &test, &cfg)?;
            let text = match out.format {
                OutputFormat::Json => o.report.to_json(&o.timing) + "\n",
                OutputFormat::Csv => o.report.to_csv(),
            };
            emit(&text, out.out.as_deref())
        }
        Command::Nn { data, mode, band, iters, out } => {
            let (train, test, _) = data.load_pair()?;
            let cfg = NnConfig { mode, band, mean_iters: iters };
            let o = nn_experiment(&train, &test, &cfg)?;
            let text = match out.format {
                OutputFormat::Json => o.report.to_json(&o.timing) + "\n",
                OutputFormat::Csv => o.report.to_csv(),
            };
            emit(&text, out.out.as_deref())
        }
        Command::Bench { data, learn, trials, out } => {
            let (train, test, _) = data.load_pair()?;
            let o = run_experiment(&train, &test, &learn.config(trials))?;
            let text = match out.format {
                OutputFormat::Json => o.report.to_json(&o.timing) + "\n",
                OutputFormat::Csv => o.report.to_csv(),
            };
            emit(&text, out.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
