//! Experiment orchestration: model selection, repeated trials, the
//! elasticity sweep and nearest-neighbor baselines.
//!
//! Every unit of work (fold, trial, sweep cell) draws from its own RNG stream
//! `derive_path(master_seed, [stream, ids...])`, so results do not depend on
//! scheduling.

use std::time::Instant;

use elastic_core::centroid::{
    ahc_prototypes, kme_prototypes, nn_classify, AhcConfig, MeanConfig, PrototypeMode,
    References,
};
use elastic_core::elastic::ElasticParams;
use elastic_core::model::Classifier;
use elastic_core::learn::{self, Example, Hyperparams, LossKind, TrainReport};
use elastic_core::seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{BenchError, ResultExt, Result};
use crate::folds::make_folds;
use crate::grid::{grid_search, Grid, GridPoint};
use crate::report::{summarize, ErrorReport, SelectedParams, SweepReport, SweepRow, Timing};

const STREAM_FOLDS: u64 = 1;
const STREAM_CV: u64 = 2;
const STREAM_TRIAL: u64 = 3;
const STREAM_SWEEP_SELECT: u64 = 4;
const STREAM_SWEEP_REPEAT: u64 = 5;

/// Number of matrix columns `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Elasticity {
    /// `m = ceil(w n)`, with `w = 0` meaning `m = 1`.
    Ratio(f64),
    Columns(usize),
}

impl Default for Elasticity {
    fn default() -> Self {
        Elasticity::Ratio(0.1)
    }
}

impl Elasticity {
    pub fn columns(&self, n: usize) -> Result<usize> {
        match *self {
            Elasticity::Columns(0) => Err(BenchError::Usage("elasticity must be at least 1".into())),
            Elasticity::Columns(m) => Ok(m),
            Elasticity::Ratio(w) if !(w.is_finite() && w >= 0.0) => Err(BenchError::Usage(format!(
                "elasticity ratio must be non-negative, got {w}"
            ))),
            Elasticity::Ratio(w) => {
                let v = w * n as f64;
                let m = if (v - v.round()).abs() < 1e-9 { v.round() } else { v.ceil() };
                Ok((m as usize).max(1))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub classifier: LossKind,
    pub elasticity: Elasticity,
    pub grid: Grid,
    pub trials: usize,
    pub master_seed: u64,
    pub max_epochs: usize,
    pub divergence_radius: f64,
    /// Skip model selection and use these hyperparameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed: Option<GridPoint>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            classifier: LossKind::LinearSvm,
            elasticity: Elasticity::default(),
            grid: Grid::default(),
            trials: 10,
            master_seed: 0,
            max_epochs: Hyperparams::default().max_epochs,
            divergence_radius: Hyperparams::default().divergence_radius,
            fixed: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(BenchError::Usage("trials must be at least 1".into()));
        }
        if self.fixed.is_none() && self.grid.is_empty_for(self.classifier) {
            return Err(BenchError::Usage("hyperparameter grid is empty".into()));
        }
        self.hyper(&GridPoint::eta(1.0), 0).validate()?;
        Ok(())
    }

    pub fn hyper(&self, point: &GridPoint, shuffle_seed: u64) -> Hyperparams {
        let base = Hyperparams::default();
        Hyperparams {
            learning_rate: point.eta,
            margin: point.margin.unwrap_or(base.margin),
            regularization: point.regularization.unwrap_or(base.regularization),
            max_epochs: self.max_epochs,
            shuffle_seed,
            divergence_radius: self.divergence_radius,
            ..base
        }
    }
}

/// Train from a seeded random start.
pub fn train_seeded(
    data: &[Example],
    kind: LossKind,
    rows: usize,
    cols: usize,
    hyper: &Hyperparams,
    stream_seed: u64,
) -> Result<(ElasticParams, TrainReport)> {
    let theta0 = learn::init_params(rows, cols, &mut seed::rng(stream_seed))?;
    let hyper = Hyperparams {
        shuffle_seed: seed::derive(stream_seed, 1),
        ..hyper.clone()
    };
    Ok(learn::train(&theta0, data, kind, &hyper)?)
}

fn check_lengths(test: &Dataset, n: usize) -> Result<()> {
    if let Some(ex) = test.examples.iter().find(|e| e.series.len() > n) {
        return Err(BenchError::Data(format!(
            "{}: series of length {} is longer than the longest training series ({n})",
            test.name,
            ex.series.len()
        )));
    }
    Ok(())
}

fn check_train(train: &Dataset) -> Result<()> {
    if train.len() < 2 {
        return Err(BenchError::Data(format!("{}: need at least 2 training examples", train.name)));
    }
    Ok(())
}

/// Mean validation error (a fraction) of `point` over the folds of `train`.
pub fn cv_error(train: &Dataset, point: &GridPoint, cols: usize, cfg: &ExperimentConfig) -> Result<f64> {
    let n = train.max_len();
    let folds = make_folds(&train.labels(), seed::derive(cfg.master_seed, STREAM_FOLDS));
    let hyper = cfg.hyper(point, 0);
    let errors = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let fit: Vec<Example> = fold.train.iter().map(|&i| train.examples[i].clone()).collect();
            let val: Vec<Example> = fold.validation.iter().map(|&i| train.examples[i].clone()).collect();
            let s = seed::derive_path(cfg.master_seed, &[STREAM_CV, f as u64]);
            let (theta, _) = train_seeded(&fit, cfg.classifier, n, cols, &hyper, s)?;
            Ok(learn::error_rate(&theta, &val)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// Hyperparameters from `cfg.fixed`, or by cross-validation on `train`
/// together with the selected point's error in percent.
pub fn select(train: &Dataset, cols: usize, cfg: &ExperimentConfig) -> Result<(GridPoint, Option<f64>)> {
    match cfg.fixed {
        Some(p) => Ok((p, None)),
        None => {
            let sel = grid_search(&cfg.grid.points(cfg.classifier), |p| cv_error(train, p, cols, cfg))
                .context(|| format!("{}: model selection", train.name))?;
            Ok((sel.point, Some(sel.score * 100.0)))
        }
    }
}

/// A classifier fitted on all of `train` with the stream of trial 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub classifier: Classifier,
    pub point: GridPoint,
    pub cv_error_pct: Option<f64>,
    pub report: TrainReport,
}

pub fn fit_classifier(train: &Dataset, cfg: &ExperimentConfig) -> Result<Fit> {
    cfg.validate()?;
    check_train(train)?;
    let n = train.max_len();
    let m = cfg.elasticity.columns(n)?;
    let (point, cv_error_pct) = select(train, m, cfg)?;
    let s = seed::derive_path(cfg.master_seed, &[STREAM_TRIAL, 0]);
    let (params, report) = train_seeded(&train.examples, cfg.classifier, n, m, &cfg.hyper(&point, 0), s)
        .context(|| format!("{}: training", train.name))?;
    Ok(Fit {
        classifier: Classifier {
            loss: cfg.classifier,
            params,
        },
        point,
        cv_error_pct,
        report,
    })
}

/// Report plus wall-clock timings.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<R> {
    pub report: R,
    pub timing: Timing,
}

/// Select hyperparameters once by cross-validation on `train`, then run
/// `cfg.trials` train/test evaluations that differ only in their RNG stream.
pub fn run_experiment(train: &Dataset, test: &Dataset, cfg: &ExperimentConfig) -> Result<Outcome<ErrorReport>> {
    cfg.validate()?;
    check_train(train)?;
    let start = Instant::now();
    let n = train.max_len();
    let m = cfg.elasticity.columns(n)?;
    check_lengths(test, n)?;

    let (point, cv) = select(train, m, cfg)?;
    let selected = start.elapsed().as_secs_f64();

    let hyper = cfg.hyper(&point, 0);
    let errors = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let s = seed::derive_path(cfg.master_seed, &[STREAM_TRIAL, t as u64]);
            let (theta, _) = train_seeded(&train.examples, cfg.classifier, n, m, &hyper, s)
                .context(|| format!("{}: trial {t}", train.name))?;
            Ok(learn::error_rate(&theta, &test.examples)? * 100.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let total = start.elapsed().as_secs_f64();

    let params = SelectedParams {
        rows: n,
        cols: m,
        eta: Some(point.eta),
        margin: point.margin,
        regularization: point.regularization,
        cv_error_pct: cv,
        band: None,
    };
    Ok(Outcome {
        report: ErrorReport::new(
            &train.name,
            cfg.classifier.short_name(),
            cfg.master_seed,
            params,
            serde_json::to_value(cfg).expect("config serializes"),
            errors,
        ),
        timing: Timing {
            selection_secs: selected,
            trials_secs: total - selected,
            total_secs: total,
        },
    })
}

/// Elasticity ratios `S_w`.
pub const SWEEP_RATIOS: [f64; 11] = [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0, 2.0, 3.0];
/// Learning rates `S_eta`.
pub const SWEEP_ETAS: [f64; 8] = [1.0, 0.7, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub ratios: Vec<f64>,
    pub etas: Vec<f64>,
    pub repeats: usize,
    pub master_seed: u64,
    pub max_epochs: usize,
    pub divergence_radius: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ratios: SWEEP_RATIOS.to_vec(),
            etas: SWEEP_ETAS.to_vec(),
            repeats: 30,
            master_seed: 0,
            max_epochs: Hyperparams::default().max_epochs,
            divergence_radius: Hyperparams::default().divergence_radius,
        }
    }
}

/// Elastic perceptron test error as a function of `w = m / n`. For each `w`
/// the learning rate with the lowest training error is kept (ties to the
/// smaller rate), then `repeats` seeded runs are scored on `test`.
pub fn elasticity_sweep(train: &Dataset, test: &Dataset, cfg: &SweepConfig) -> Result<Outcome<SweepReport>> {
    check_train(train)?;
    if cfg.ratios.is_empty() || cfg.etas.is_empty() || cfg.repeats == 0 {
        return Err(BenchError::Usage("sweep needs ratios, learning rates and repeats".into()));
    }
    let start = Instant::now();
    let n = train.max_len();
    check_lengths(test, n)?;
    let mut ratios = cfg.ratios.clone();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let mut etas = cfg.etas.clone();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    let base = ExperimentConfig {
        max_epochs: cfg.max_epochs,
        divergence_radius: cfg.divergence_radius,
        ..ExperimentConfig::default()
    };
    let kind = LossKind::Perceptron;

    let rows = ratios
        .iter()
        .enumerate()
        .map(|(wi, &w)| {
            let m = Elasticity::Ratio(w).columns(n)?;
            let train_errors = etas
                .par_iter()
                .enumerate()
                .map(|(ei, &eta)| {
                    let s = seed::derive_path(cfg.master_seed, &[STREAM_SWEEP_SELECT, wi as u64, ei as u64]);
                    match train_seeded(&train.examples, kind, n, m, &base.hyper(&GridPoint::eta(eta), 0), s) {
                        Ok((_, r)) => Ok(r.final_train_error_rate),
                        Err(BenchError::Core(elastic_core::Error::Diverged { .. })) => Ok(f64::INFINITY),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut best = 0;
            for (i, &e) in train_errors.iter().enumerate() {
                if e < train_errors[best] {
                    best = i;
                }
            }
            let eta = etas[best];
            let hyper = base.hyper(&GridPoint::eta(eta), 0);
            let errors = (0..cfg.repeats)
                .into_par_iter()
                .map(|r| {
                    let s = seed::derive_path(cfg.master_seed, &[STREAM_SWEEP_REPEAT, wi as u64, r as u64]);
                    let (theta, _) = train_seeded(&train.examples, kind, n, m, &hyper, s)
                        .context(|| format!("{}: w = {w}, repeat {r}", train.name))?;
                    Ok(learn::error_rate(&theta, &test.examples)? * 100.0)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = summarize(&errors);
            Ok(SweepRow {
                w,
                m,
                eta,
                mean_error: mean,
                std_error: std,
                errors,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = start.elapsed().as_secs_f64();
    Ok(Outcome {
        report: SweepReport::new(
            &train.name,
            cfg.master_seed,
            serde_json::to_value(cfg).expect("config serializes"),
            rows,
        ),
        timing: Timing {
            selection_secs: 0.0,
            trials_secs: total,
            total_secs: total,
        },
    })
}

/// Reference set of a nearest-neighbor baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NnMode {
    All,
    Kme,
    Ahc,
}

impl NnMode {
    pub fn short_name(self) -> &'static str {
        match self {
            NnMode::All => "NN+ALL",
            NnMode::Kme => "NN+KME",
            NnMode::Ahc => "NN+AHC",
        }
    }
}

impl std::str::FromStr for NnMode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(NnMode::All),
            "kme" => Ok(NnMode::Kme),
            "ahc" => Ok(NnMode::Ahc),
            _ => Err(BenchError::Usage(format!("unknown nearest-neighbor mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnConfig {
    pub mode: NnMode,
    /// Sakoe-Chiba radius for `All`.
    pub band: Option<usize>,
    /// Iteration cap of the mean computation.
    pub mean_iters: usize,
}

impl Default for NnConfig {
    fn default() -> Self {
        Self {
            mode: NnMode::All,
            band: None,
            mean_iters: MeanConfig::new(1, 1).max_iters,
        }
    }
}

/// Prototypes with `m = n` columns for the prototype modes.
pub fn nn_prototypes(train: &Dataset, mode: PrototypeMode, mean_iters: usize) -> Result<elastic_core::centroid::PrototypeSet> {
    let n = train.max_len();
    let mean = MeanConfig {
        max_iters: mean_iters,
        ..MeanConfig::new(n, n)
    };
    Ok(match mode {
        PrototypeMode::Kme => kme_prototypes(&train.examples, &mean)?,
        PrototypeMode::Ahc => ahc_prototypes(&train.examples, &AhcConfig::new(mean))?,
    })
}

/// Test error of a nearest-neighbor classifier. Deterministic, so the report
/// holds a single trial.
pub fn nn_experiment(train: &Dataset, test: &Dataset, cfg: &NnConfig) -> Result<Outcome<ErrorReport>> {
    check_train(train)?;
    let start = Instant::now();
    let n = train.max_len();
    let set = match cfg.mode {
        NnMode::All => None,
        NnMode::Kme => Some(nn_prototypes(train, PrototypeMode::Kme, cfg.mean_iters)?),
        NnMode::Ahc => Some(nn_prototypes(train, PrototypeMode::Ahc, cfg.mean_iters)?),
    };
    if set.is_some() {
        check_lengths(test, n)?;
    }
    let selected = start.elapsed().as_secs_f64();
    let refs = match &set {
        None => References::All {
            examples: &train.examples,
            band: cfg.band,
        },
        Some(s) => References::Prototypes(s),
    };
    let wrong = test
        .examples
        .par_iter()
        .map(|ex| Ok(nn_classify(&ex.series, refs)? != ex.label))
        .collect::<Result<Vec<bool>>>()?;
    if wrong.is_empty() {
        return Err(BenchError::Data(format!("{}: empty test set", test.name)));
    }
    let err = wrong.iter().filter(|&&w| w).count() as f64 / wrong.len() as f64 * 100.0;
    let total = start.elapsed().as_secs_f64();
    let params = SelectedParams {
        rows: n,
        cols: if set.is_some() { n } else { 1 },
        eta: None,
        margin: None,
        regularization: None,
        cv_error_pct: None,
        band: cfg.band,
    };
    Ok(Outcome {
        report: ErrorReport::new(
            &train.name,
            cfg.mode.short_name(),
            0,
            params,
            serde_json::to_value(cfg).expect("config serializes"),
            vec![err],
        ),
        timing: Timing {
            selection_secs: selected,
            trials_secs: total - selected,
            total_secs: total,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use elastic_core::learn::Label;
    use elastic_core::TimeSeries;
    use rand::Rng;

    fn bump(height: f64, at: usize, len: usize) -> TimeSeries {
        TimeSeries::new((0..len).map(|i| if i == at { height } else { 0.0 }).collect()).unwrap()
    }

    /// Positive series sit around +1 and negative ones around -1, with a
    /// spike of height 3 at a random position in either class.
    fn spikes(count: usize, len: usize, seed_value: u64, name: &str) -> Dataset {
        let mut rng = seed::rng(seed_value);
        let examples = (0..count)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
                let at = rng.random_range(0..len);
                let values = bump(3.0, at, len)
                    .iter()
                    .map(|v| v + label.sign() + rng.random_range(-0.3..0.3))
                    .collect();
                Example::new(TimeSeries::new(values).unwrap(), label)
            })
            .collect();
        Dataset {
            name: name.into(),
            examples,
        }
    }

    #[test]
    fn elasticity_rule() {
        assert_eq!(Elasticity::Ratio(0.0).columns(286).unwrap(), 1);
        assert_eq!(Elasticity::Ratio(0.1).columns(286).unwrap(), 29);
        assert_eq!(Elasticity::Ratio(0.1).columns(96).unwrap(), 10);
        // 0.3 * 10 is 3.0000000000000004 in floating point
        assert_eq!(Elasticity::Ratio(0.3).columns(10).unwrap(), 3);
        assert_eq!(Elasticity::Ratio(3.0).columns(24).unwrap(), 72);
        assert_eq!(Elasticity::Columns(7).columns(100).unwrap(), 7);
        assert!(Elasticity::Columns(0).columns(5).is_err());
        assert!(Elasticity::Ratio(-1.0).columns(5).is_err());
    }

    #[test]
    fn planted_dataset_single_trial_has_zero_error() {
        let train = spikes(24, 12, 1, "spikes");
        let test = spikes(20, 12, 2, "spikes-test");
        let cfg = ExperimentConfig {
            classifier: LossKind::Perceptron,
            elasticity: Elasticity::Columns(2),
            trials: 1,
            grid: Grid {
                etas: vec![0.125, 1.0],
                ..Grid::default()
            },
            ..ExperimentConfig::default()
        };
        let out = run_experiment(&train, &test, &cfg).unwrap();
        assert_eq!(out.report.trials, vec![0.0]);
        assert_eq!(out.report.std, 0.0);
        assert_eq!(out.report.params.cv_error_pct, Some(0.0));
        // all points tie at zero, so the smaller rate wins
        assert_eq!(out.report.params.eta, Some(0.125));
    }

    #[test]
    fn reports_are_reproducible() {
        let train = spikes(16, 8, 3, "a");
        let test = spikes(10, 8, 4, "b");
        let cfg = ExperimentConfig {
            classifier: LossKind::LinearSvm,
            trials: 3,
            master_seed: 99,
            max_epochs: 5,
            grid: Grid {
                etas: vec![0.01, 0.1],
                margins: vec![1.0],
                regularizations: vec![0.01, 0.1],
            },
            ..ExperimentConfig::default()
        };
        let a = run_experiment(&train, &test, &cfg).unwrap();
        let b = run_experiment(&train, &test, &cfg).unwrap();
        assert_eq!(a.report.payload_json(), b.report.payload_json());
        let other = run_experiment(&train, &test, &ExperimentConfig { master_seed: 100, ..cfg }).unwrap();
        assert_ne!(a.report.payload_json(), other.report.payload_json());
    }

    #[test]
    fn long_test_series_are_rejected() {
        let train = spikes(6, 5, 1, "a");
        let test = spikes(4, 9, 1, "b");
        let cfg = ExperimentConfig {
            fixed: Some(GridPoint::eta(0.1)),
            ..ExperimentConfig::default()
        };
        let err = run_experiment(&train, &test, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn divergence_in_a_trial_is_numerical() {
        let train = spikes(6, 5, 1, "a");
        let cfg = ExperimentConfig {
            classifier: LossKind::Perceptron,
            fixed: Some(GridPoint::eta(1.0)),
            divergence_radius: 1e-6,
            ..ExperimentConfig::default()
        };
        let err = run_experiment(&train, &train, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("trial"));
    }

    #[test]
    fn sweep_rows_are_sorted_and_w0_is_one_column() {
        let train = spikes(12, 10, 5, "a");
        let test = spikes(8, 10, 6, "b");
        let cfg = SweepConfig {
            ratios: vec![0.5, 0.0, 0.2],
            etas: vec![1.0, 0.1],
            repeats: 2,
            max_epochs: 10,
            ..SweepConfig::default()
        };
        let out = elasticity_sweep(&train, &test, &cfg).unwrap();
        let rows = &out.report.rows;
        assert_eq!(rows.iter().map(|r| r.w).collect::<Vec<_>>(), vec![0.0, 0.2, 0.5]);
        assert_eq!(rows.iter().map(|r| r.m).collect::<Vec<_>>(), vec![1, 2, 5]);
        assert!(rows.iter().all(|r| r.errors.len() == 2));
    }

    #[test]
    fn sweep_sets_have_the_documented_sizes() {
        assert_eq!(SWEEP_RATIOS.len(), 11);
        assert_eq!(SWEEP_ETAS.len(), 8);
    }

    #[test]
    fn nn_all_recovers_verbatim_training_series() {
        let train = spikes(10, 8, 7, "a");
        let test = Dataset {
            name: "b".into(),
            examples: train.examples[..4].to_vec(),
        };
        let out = nn_experiment(&train, &test, &NnConfig::default()).unwrap();
        assert_eq!(out.report.trials, vec![0.0]);
        assert_eq!(out.report.classifier, "NN+ALL");
        for mode in [NnMode::Kme, NnMode::Ahc] {
            let cfg = NnConfig {
                mode,
                ..NnConfig::default()
            };
            let out = nn_experiment(&train, &test, &cfg).unwrap();
            assert_eq!(out.report.trials, vec![0.0], "{mode:?}");
        }
    }

    #[test]
    fn nn_modes_parse() {
        assert_eq!("ALL".parse::<NnMode>().unwrap(), NnMode::All);
        assert_eq!("ahc".parse::<NnMode>().unwrap(), NnMode::Ahc);
        assert!("x".parse::<NnMode>().is_err());
    }
}
