//! Elastic embeddings and the two elastic proximities.
//!
//! A series `x` of length `k <= n` is embedded into an `n x m` matrix `Z`
//! along a warping path `phi` of the `k x m` grid: cells on `phi` in row `i`
//! take the value `x_i`, every other cell keeps `Z`. The elastic inner product
//! maximises `<x (x)_phi 0, W>` over paths; the elastic Euclidean distance
//! minimises `||x (x)_phi Y - Y||`. Both are one pass of the alignment
//! recurrence in [`crate::dp`].

use crate::dp::{self, Objective, ScoreMatrix};
use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;
use crate::warp::{validate_path, GridDims, TimeSeries, WarpingPath};

/// Result of embedding a series into a base matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMatrix {
    pub matrix: WeightMatrix,
    pub source_path: WarpingPath,
    pub source_len: usize,
}

fn check_fits(x: &TimeSeries, rows: usize) -> Result<()> {
    if x.len() > rows {
        return Err(Error::SeriesTooLong {
            len: x.len(),
            rows,
        });
    }
    Ok(())
}

/// `x (x)_path Z`.
pub fn embed(x: &TimeSeries, base: &WeightMatrix, path: &WarpingPath) -> Result<EmbeddedMatrix> {
    check_fits(x, base.rows())?;
    let dims = GridDims::new(x.len(), base.cols())?;
    if !validate_path(path, dims) {
        return Err(Error::InvalidPath {
            rows: dims.rows(),
            cols: dims.cols(),
        });
    }
    let mut matrix = base.clone();
    for (i, j) in path.cells() {
        matrix[(i, j)] = x[i];
    }
    Ok(EmbeddedMatrix {
        matrix,
        source_path: path.clone(),
        source_len: x.len(),
    })
}

fn product_local<'a>(x: &'a TimeSeries, w: &'a WeightMatrix) -> impl Fn(usize, usize) -> f64 + 'a {
    let (x, cols, w) = (x.values(), w.cols(), w.as_slice());
    move |i, j| x[i] * w[i * cols + j]
}

/// Full score matrix of the elastic inner product.
pub fn inner_product_scores(x: &TimeSeries, w: &WeightMatrix) -> Result<ScoreMatrix> {
    check_fits(x, w.rows())?;
    Ok(ScoreMatrix::fill(
        x.len(),
        w.cols(),
        Objective::Maximize,
        None,
        product_local(x, w),
    ))
}

/// `sigma_W(x) = max_phi <x (x)_phi 0, W>`.
pub fn elastic_inner_product(x: &TimeSeries, w: &WeightMatrix) -> Result<f64> {
    check_fits(x, w.rows())?;
    Ok(dp::final_score(
        x.len(),
        w.cols(),
        Objective::Maximize,
        None,
        product_local(x, w),
    ))
}

/// Elastic inner product together with an active (maximising) path.
pub fn elastic_inner_product_with_path(
    x: &TimeSeries,
    w: &WeightMatrix,
) -> Result<(f64, WarpingPath)> {
    let scores = inner_product_scores(x, w)?;
    Ok((scores.value(), scores.traceback()))
}

/// Outcome of an elastic Euclidean distance evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticMatch {
    /// `||x (x)_path Y - Y||^2`, the summed on-path squared costs.
    pub cost: f64,
    pub path: WarpingPath,
}

impl ElasticMatch {
    pub fn distance(&self) -> f64 {
        self.cost.sqrt()
    }
}

fn euclidean_local<'a>(x: &'a TimeSeries, y: &'a WeightMatrix) -> impl Fn(usize, usize) -> f64 + 'a {
    let (x, cols, y) = (x.values(), y.cols(), y.as_slice());
    move |i, j| {
        let d = x[i] - y[i * cols + j];
        d * d
    }
}

/// `delta_Y(x) = min_phi ||x (x)_phi Y - Y||` with its minimising path.
pub fn elastic_euclidean(x: &TimeSeries, y: &WeightMatrix) -> Result<ElasticMatch> {
    check_fits(x, y.rows())?;
    let scores = ScoreMatrix::fill(x.len(), y.cols(), Objective::Minimize, None, euclidean_local(x, y));
    Ok(ElasticMatch {
        cost: scores.value(),
        path: scores.traceback(),
    })
}

/// Squared elastic Euclidean distance without traceback.
pub fn elastic_euclidean_cost(x: &TimeSeries, y: &WeightMatrix) -> Result<f64> {
    check_fits(x, y.rows())?;
    Ok(dp::final_score(
        x.len(),
        y.cols(),
        Objective::Minimize,
        None,
        euclidean_local(x, y),
    ))
}

/// Parameters `theta = (W, b)` of an elastic linear function.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticParams {
    pub weights: WeightMatrix,
    pub bias: f64,
}

impl ElasticParams {
    pub fn new(weights: WeightMatrix, bias: f64) -> Result<Self> {
        if !weights.is_finite() || !bias.is_finite() {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Ok(Self {
            weights: WeightMatrix::zeros(rows, cols)?,
            bias: 0.0,
        })
    }

    pub fn rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn cols(&self) -> usize {
        self.weights.cols()
    }
}

/// `f_theta(x) = b + sigma_W(x)`.
pub fn elastic_linear(x: &TimeSeries, theta: &ElasticParams) -> Result<f64> {
    Ok(theta.bias + elastic_inner_product(x, &theta.weights)?)
}
