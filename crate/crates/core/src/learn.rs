//! Elastic linear classifiers and their stochastic generalized gradient
//! trainer.
//!
//! All four classifiers share the decision rule `sign(b + sigma_W(x))` and
//! differ only in the loss. A generalized gradient of the loss is the
//! gradient of the active piece: with `phi` an active path of
//! `sigma_W(x)` and `X = x (x)_phi 0`, the weight gradient is
//! `dl/df * X` and the bias gradient is `dl/df`. The SVM adds `2 lambda W`
//! from its regulariser.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::elastic::{
    elastic_inner_product_with_path, elastic_linear, embed, inner_product_scores, ElasticParams,
};
use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;
use crate::seed;
use crate::warp::TimeSeries;

/// Two-class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    /// `+1.0` or `-1.0`.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    /// Parse a `{+1, -1}` label.
    pub fn from_sign(value: f64) -> Result<Self> {
        if value == 1.0 {
            Ok(Label::Positive)
        } else if value == -1.0 {
            Ok(Label::Negative)
        } else {
            Err(Error::InvalidLabel(value))
        }
    }

    /// The `{0, 1}` encoding used by the logistic loss.
    pub fn binary(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => 0.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => write!(f, "1"),
            Label::Negative => write!(f, "-1"),
        }
    }
}

/// A labelled time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub series: TimeSeries,
    pub label: Label,
}

impl Example {
    pub fn new(series: TimeSeries, label: Label) -> Self {
        Self { series, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Perceptron,
    MarginPerceptron,
    Logistic,
    LinearSvm,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Perceptron,
        LossKind::MarginPerceptron,
        LossKind::Logistic,
        LossKind::LinearSvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Perceptron => "perceptron",
            LossKind::MarginPerceptron => "margin-perceptron",
            LossKind::Logistic => "logistic",
            LossKind::LinearSvm => "linear-svm",
        }
    }

    /// Short names used in result tables.
    pub fn short_name(self) -> &'static str {
        match self {
            LossKind::Perceptron => "ePERC",
            LossKind::MarginPerceptron => "eMARG",
            LossKind::Logistic => "eLOGR",
            LossKind::LinearSvm => "eLSVM",
        }
    }

    /// Losses whose updates stop once every example is correctly classified
    /// with the required margin.
    pub fn is_perceptron_family(self) -> bool {
        matches!(self, LossKind::Perceptron | LossKind::MarginPerceptron)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perceptron" | "perc" | "eperc" => Ok(LossKind::Perceptron),
            "margin-perceptron" | "margin" | "marg" | "emarg" => Ok(LossKind::MarginPerceptron),
            "logistic" | "logr" | "elogr" => Ok(LossKind::Logistic),
            "linear-svm" | "svm" | "lsvm" | "elsvm" => Ok(LossKind::LinearSvm),
            other => Err(Error::InvalidParameter(format!("unknown loss `{other}`"))),
        }
    }
}

/// Learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Schedule {
    Constant,
    /// `eta_t = eta / (1 + t / horizon)`; decays to zero with a divergent sum.
    InverseT { horizon: f64 },
}

impl Schedule {
    pub fn rate(&self, base: f64, step: usize) -> f64 {
        match *self {
            Schedule::Constant => base,
            Schedule::InverseT { horizon } => base / (1.0 + step as f64 / horizon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    /// Margin `xi` of the margin perceptron.
    pub margin: f64,
    /// Regularisation `lambda` of the linear SVM.
    pub regularization: f64,
    pub max_epochs: usize,
    pub schedule: Schedule,
    pub shuffle_seed: u64,
    /// Frobenius-norm bound on `W`; exceeding it aborts training.
    pub divergence_radius: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            margin: 1.0,
            regularization: 0.0,
            max_epochs: 100,
            schedule: Schedule::Constant,
            shuffle_seed: 0,
            divergence_radius: 1e6,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return bad("margin must be non-negative");
        }
        if !(self.regularization.is_finite() && self.regularization >= 0.0) {
            return bad("regularization must be non-negative");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if let Schedule::InverseT { horizon } = self.schedule {
            if !(horizon.is_finite() && horizon > 0.0) {
                return bad("inverse-t horizon must be positive");
            }
        }
        if self.divergence_radius.is_nan() || self.divergence_radius <= 0.0 {
            return bad("divergence radius must be positive");
        }
        Ok(())
    }
}

/// Summary of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Steps at which the data term of the loss was active.
    pub updates_applied: usize,
    pub final_train_error_rate: f64,
    /// Mean training loss after each epoch.
    pub loss_trace: Vec<f64>,
}

/// Numerically stable logistic function.
pub fn sigmoid(f: f64) -> f64 {
    if f >= 0.0 {
        1.0 / (1.0 + (-f).exp())
    } else {
        let e = f.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Decision rule: positive iff `f_theta(x) >= 0`.
pub fn predict(theta: &ElasticParams, x: &TimeSeries) -> Result<Label> {
    Ok(label_of(elastic_linear(x, theta)?))
}

fn label_of(f: f64) -> Label {
    if f >= 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

pub fn predict_proba(theta: &ElasticParams, x: &TimeSeries) -> Result<f64> {
    Ok(sigmoid(elastic_linear(x, theta)?))
}

/// Hinge argument whose positivity switches the data term on, for the
/// piecewise-linear losses.
fn hinge_argument(kind: LossKind, y: Label, f: f64, hyper: &Hyperparams) -> Option<f64> {
    let yf = y.sign() * f;
    match kind {
        LossKind::Perceptron => Some(-yf),
        LossKind::MarginPerceptron => Some(hyper.margin - yf),
        LossKind::LinearSvm => Some(1.0 - yf),
        LossKind::Logistic => None,
    }
}

/// Loss of one example given its score `f`. `weights_norm_sq` is `||W||^2`,
/// used only by the SVM regulariser.
pub fn loss(kind: LossKind, y: Label, f: f64, hyper: &Hyperparams, weights_norm_sq: f64) -> f64 {
    match kind {
        LossKind::Logistic => {
            if y == Label::Positive {
                softplus(-f)
            } else {
                softplus(f)
            }
        }
        LossKind::LinearSvm => {
            let hinge = hinge_argument(kind, y, f, hyper).unwrap_or(0.0).max(0.0);
            hyper.regularization * weights_norm_sq + hinge
        }
        _ => hinge_argument(kind, y, f, hyper).unwrap_or(0.0).max(0.0),
    }
}

/// Derivative of the data term of the loss with respect to `f`.
fn score_derivative(kind: LossKind, y: Label, f: f64, hyper: &Hyperparams) -> f64 {
    match kind {
        LossKind::Logistic => -(y.binary() - sigmoid(f)),
        _ => {
            let arg = hinge_argument(kind, y, f, hyper).unwrap_or(0.0);
            if arg > 0.0 {
                -y.sign()
            } else {
                0.0
            }
        }
    }
}

/// A generalized gradient `(dl/dW, dl/db)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: WeightMatrix,
    pub bias: f64,
}

/// Generalized gradient of the loss at `theta` along the active path chosen
/// by the deterministic traceback.
pub fn subgradient(
    kind: LossKind,
    example: &Example,
    theta: &ElasticParams,
    hyper: &Hyperparams,
) -> Result<Gradient> {
    let (sigma, path) = elastic_inner_product_with_path(&example.series, &theta.weights)?;
    let f = theta.bias + sigma;
    let c = score_derivative(kind, example.label, f, hyper);
    let zero = WeightMatrix::zeros(theta.rows(), theta.cols())?;
    let x_embedded = embed(&example.series, &zero, &path)?.matrix;
    let mut weights = x_embedded.scaled(c);
    if kind == LossKind::LinearSvm {
        weights = weights.add_scaled(2.0 * hyper.regularization, &theta.weights)?;
    }
    Ok(Gradient { weights, bias: c })
}

/// Outcome of a single in-place update.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StepInfo {
    active: bool,
}

fn step_in_place(
    theta: &mut ElasticParams,
    example: &Example,
    eta: f64,
    kind: LossKind,
    hyper: &Hyperparams,
) -> Result<StepInfo> {
    let x = &example.series;
    let scores = inner_product_scores(x, &theta.weights)?;
    let f = theta.bias + scores.value();
    let c = score_derivative(kind, example.label, f, hyper);
    if kind == LossKind::LinearSvm && hyper.regularization > 0.0 {
        let shrink = 1.0 - 2.0 * eta * hyper.regularization;
        theta.weights.as_array_mut().mapv_inplace(|w| shrink * w);
    }
    if c != 0.0 {
        for (i, j) in scores.traceback().cells() {
            theta.weights[(i, j)] -= eta * c * x[i];
        }
        theta.bias -= eta * c;
    }
    Ok(StepInfo { active: c != 0.0 })
}

/// One stochastic generalized gradient step, `theta - eta * g`.
pub fn sgd_step(
    theta: &ElasticParams,
    example: &Example,
    eta: f64,
    kind: LossKind,
    hyper: &Hyperparams,
) -> Result<ElasticParams> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter("step size must be positive".into()));
    }
    let mut next = theta.clone();
    step_in_place(&mut next, example, eta, kind, hyper)?;
    Ok(next)
}

/// Presentation order of the examples in `epoch`.
pub fn epoch_order(shuffle_seed: u64, epoch: usize, len: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    let mut rng = seed::rng(seed::derive(shuffle_seed, epoch as u64));
    order.shuffle(&mut rng);
    order
}

/// Bias and weights drawn uniformly from `[-0.01, 0.01]`.
pub fn init_params<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<ElasticParams> {
    let weights = WeightMatrix::random_uniform(rows, cols, 0.01, rng)?;
    let bias = rng.random_range(-0.01..=0.01);
    ElasticParams::new(weights, bias)
}

/// Mean loss and error rate of `theta` on `data`.
pub fn evaluate(
    theta: &ElasticParams,
    data: &[Example],
    kind: LossKind,
    hyper: &Hyperparams,
) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let norm_sq = theta.weights.norm_squared();
    let mut total = 0.0;
    let mut errors = 0usize;
    for ex in data {
        let f = elastic_linear(&ex.series, theta)?;
        total += loss(kind, ex.label, f, hyper, norm_sq);
        if label_of(f) != ex.label {
            errors += 1;
        }
    }
    let n = data.len() as f64;
    Ok((total / n, errors as f64 / n))
}

/// Fraction of misclassified examples.
pub fn error_rate(theta: &ElasticParams, data: &[Example]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut errors = 0usize;
    for ex in data {
        if predict(theta, &ex.series)? != ex.label {
            errors += 1;
        }
    }
    Ok(errors as f64 / data.len() as f64)
}

/// Incremental generalized gradient descent over `data`.
///
/// Each epoch presents the examples in the order of [`epoch_order`]. Perceptron
/// losses stop after an epoch without updates. The projection onto the
/// constraint set is the identity; leaving the ball of radius
/// `divergence_radius` is reported as [`Error::Diverged`].
pub fn train(
    theta0: &ElasticParams,
    data: &[Example],
    kind: LossKind,
    hyper: &Hyperparams,
) -> Result<(ElasticParams, TrainReport)> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(ex) = data.iter().find(|ex| ex.series.len() > theta0.rows()) {
        return Err(Error::SeriesTooLong {
            len: ex.series.len(),
            rows: theta0.rows(),
        });
    }

    let mut theta = theta0.clone();
    let mut step = 0usize;
    let mut report = TrainReport {
        epochs_run: 0,
        updates_applied: 0,
        final_train_error_rate: 0.0,
        loss_trace: Vec::new(),
    };
    let radius = hyper.divergence_radius;

    for epoch in 0..hyper.max_epochs {
        let mut epoch_updates = 0usize;
        for idx in epoch_order(hyper.shuffle_seed, epoch, data.len()) {
            let eta = hyper.schedule.rate(hyper.learning_rate, step);
            step += 1;
            let info = step_in_place(&mut theta, &data[idx], eta, kind, hyper)?;
            if info.active {
                epoch_updates += 1;
                let norm = theta.weights.norm();
                if !norm.is_finite() || norm > radius || !theta.bias.is_finite() {
                    return Err(Error::Diverged { epoch, norm, radius });
                }
            }
        }
        report.updates_applied += epoch_updates;
        let (mean_loss, err) = evaluate(&theta, data, kind, hyper)?;
        report.loss_trace.push(mean_loss);
        report.final_train_error_rate = err;
        report.epochs_run = epoch + 1;
        if kind.is_perceptron_family() && epoch_updates == 0 {
            break;
        }
    }
    Ok((theta, report))
}

/// Deviation between [`subgradient`] and central finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_abs_deviation: f64,
    /// `|fd - g| / max(1, |g|)`, maximised over all entries.
    pub max_rel_deviation: f64,
    pub entries_checked: usize,
}

/// Compare every partial derivative of [`subgradient`] with a central
/// difference of step `eps`. Fails if the active path or the active side of
/// a hinge changes within the perturbation, since the loss is not
/// differentiable there.
pub fn finite_diff_check(
    kind: LossKind,
    example: &Example,
    theta: &ElasticParams,
    hyper: &Hyperparams,
    eps: f64,
) -> Result<GradientCheck> {
    let grad = subgradient(kind, example, theta, hyper)?;
    let x = &example.series;
    let y = example.label;
    let (sigma0, path0) = elastic_inner_product_with_path(x, &theta.weights)?;
    let side = |f: f64| hinge_argument(kind, y, f, hyper).map(|a| a > 0.0);
    let side0 = side(theta.bias + sigma0);

    let eval = |t: &ElasticParams, entry: &str| -> Result<f64> {
        let (sigma, path) = elastic_inner_product_with_path(x, &t.weights)?;
        if path != path0 {
            return Err(Error::NonUniqueActivePath {
                entry: entry.to_string(),
            });
        }
        let f = t.bias + sigma;
        if side(f) != side0 {
            return Err(Error::NonSmoothPoint(format!("hinge switches at {entry}")));
        }
        Ok(loss(kind, y, f, hyper, t.weights.norm_squared()))
    };

    let mut check = GradientCheck {
        max_abs_deviation: 0.0,
        max_rel_deviation: 0.0,
        entries_checked: 0,
    };
    let mut record = |analytic: f64, numeric: f64| {
        let abs = (numeric - analytic).abs();
        check.max_abs_deviation = check.max_abs_deviation.max(abs);
        check.max_rel_deviation = check.max_rel_deviation.max(abs / analytic.abs().max(1.0));
        check.entries_checked += 1;
    };

    let mut probe = theta.clone();
    for i in 0..theta.rows() {
        for j in 0..theta.cols() {
            let entry = format!("W[{i},{j}]");
            let w = theta.weights[(i, j)];
            probe.weights[(i, j)] = w + eps;
            let plus = eval(&probe, &entry)?;
            probe.weights[(i, j)] = w - eps;
            let minus = eval(&probe, &entry)?;
            probe.weights[(i, j)] = w;
            record(grad.weights[(i, j)], (plus - minus) / (2.0 * eps));
        }
    }
    probe.bias = theta.bias + eps;
    let plus = eval(&probe, "b")?;
    probe.bias = theta.bias - eps;
    let minus = eval(&probe, "b")?;
    record(grad.bias, (plus - minus) / (2.0 * eps));
    Ok(check)
}
