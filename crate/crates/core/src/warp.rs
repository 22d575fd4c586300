//! Time series, warping paths and the DTW distance.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::dp::{self, Objective, ScoreMatrix};
use crate::error::{Error, Result};

/// A univariate time series: at least one finite sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index, value });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Z-normalised copy. Constant series map to all zeros.
    pub fn z_normalized(&self) -> Self {
        let n = self.0.len() as f64;
        let mean = self.0.iter().sum::<f64>() / n;
        let var = self.0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd == 0.0 {
            return Self(vec![0.0; self.0.len()]);
        }
        Self(self.0.iter().map(|v| (v - mean) / sd).collect())
    }

    /// Linear resampling to `len` points, keeping both endpoints.
    pub fn resampled(&self, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptySeries);
        }
        let src = &self.0;
        if src.len() == len {
            return Ok(self.clone());
        }
        if len == 1 || src.len() == 1 {
            return Ok(Self(vec![src[0]; len]));
        }
        let scale = (src.len() - 1) as f64 / (len - 1) as f64;
        let out = (0..len)
            .map(|t| {
                let pos = t as f64 * scale;
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(src.len() - 1);
                let frac = pos - lo as f64;
                src[lo] + frac * (src[hi] - src[lo])
            })
            .collect();
        Ok(Self(out))
    }
}

impl Deref for TimeSeries {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(ts: TimeSeries) -> Self {
        ts.0
    }
}

/// Dimensions of an alignment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridDims {
    rows: usize,
    cols: usize,
}

impl GridDims {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDims { rows, cols });
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

/// A warping path through a grid, as 1-based `(row, column)` points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WarpingPath {
    points: Vec<(usize, usize)>,
}

impl WarpingPath {
    /// Build a path and check it against `dims`.
    pub fn new(points: Vec<(usize, usize)>, dims: GridDims) -> Result<Self> {
        let path = Self { points };
        if validate_path(&path, dims) {
            Ok(path)
        } else {
            Err(Error::InvalidPath {
                rows: dims.rows,
                cols: dims.cols,
            })
        }
    }

    /// Points are taken as given; [`validate_path`] may reject them.
    pub fn from_points_unchecked(points: Vec<(usize, usize)>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points as 0-based indices.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.points.iter().map(|&(i, j)| (i - 1, j - 1))
    }
}

/// Boundary and step conditions of a warping path in `dims`.
pub fn validate_path(path: &WarpingPath, dims: GridDims) -> bool {
    let pts = path.points();
    let (Some(&first), Some(&last)) = (pts.first(), pts.last()) else {
        return false;
    };
    if first != (1, 1) || last != (dims.rows, dims.cols) {
        return false;
    }
    pts.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        matches!(
            (b.0.checked_sub(a.0), b.1.checked_sub(a.1)),
            (Some(1), Some(0)) | (Some(0), Some(1)) | (Some(1), Some(1))
        )
    })
}

/// Largest `rows + cols` accepted by [`enumerate_warping_paths`].
pub const ENUMERATION_LIMIT: usize = 22;

/// Every warping path of `dims`, by depth-first search. Exponential; guarded
/// by [`ENUMERATION_LIMIT`].
pub fn enumerate_warping_paths(dims: GridDims) -> Result<Vec<WarpingPath>> {
    if dims.rows + dims.cols > ENUMERATION_LIMIT {
        return Err(Error::OracleLimit {
            rows: dims.rows,
            cols: dims.cols,
            limit: ENUMERATION_LIMIT,
        });
    }
    fn walk(
        dims: GridDims,
        stack: &mut Vec<(usize, usize)>,
        out: &mut Vec<WarpingPath>,
    ) {
        let (i, j) = *stack.last().expect("non-empty stack");
        if (i, j) == (dims.rows, dims.cols) {
            out.push(WarpingPath::from_points_unchecked(stack.clone()));
            return;
        }
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            let next = (i + di, j + dj);
            if next.0 <= dims.rows && next.1 <= dims.cols {
                stack.push(next);
                walk(dims, stack, out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(dims, &mut vec![(1, 1)], &mut out);
    Ok(out)
}

/// Result of aligning two series.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// Sum of squared differences along `path`.
    pub cost: f64,
    pub path: WarpingPath,
}

impl AlignmentResult {
    pub fn distance(&self) -> f64 {
        self.cost.sqrt()
    }
}

fn check_band(n: usize, m: usize, band: Option<usize>) -> Result<()> {
    match band {
        Some(r) if n.abs_diff(m) > r => Err(Error::InfeasibleBand {
            band: r,
            rows: n,
            cols: m,
        }),
        _ => Ok(()),
    }
}

/// DTW distance with squared local costs, optionally restricted to a
/// Sakoe-Chiba band of radius `band` (`|i - j| <= band`).
pub fn dtw_distance(x: &TimeSeries, y: &TimeSeries, band: Option<usize>) -> Result<f64> {
    check_band(x.len(), y.len(), band)?;
    let cost = dp::final_score(x.len(), y.len(), Objective::Minimize, band, |i, j| {
        let d = x[i] - y[j];
        d * d
    });
    Ok(cost.sqrt())
}

/// Optimal alignment with traceback.
pub fn dtw_alignment(x: &TimeSeries, y: &TimeSeries) -> AlignmentResult {
    dtw_alignment_banded(x, y, None).expect("unbanded alignment is always feasible")
}

pub fn dtw_alignment_banded(
    x: &TimeSeries,
    y: &TimeSeries,
    band: Option<usize>,
) -> Result<AlignmentResult> {
    check_band(x.len(), y.len(), band)?;
    let scores = ScoreMatrix::fill(x.len(), y.len(), Objective::Minimize, band, |i, j| {
        let d = x[i] - y[j];
        d * d
    });
    Ok(AlignmentResult {
        cost: scores.value(),
        path: scores.traceback(),
    })
}
