//! The Euclidean matrix space `R^{n x m}` that elastic functions live in.

use std::ops::{Index, IndexMut};

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

/// Dense `n x m` real matrix. `n` is the longest series the matrix accepts,
/// `m` the elasticity. Indexing is 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(Array2<f64>);

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self(Array2::zeros((rows, cols))))
    }

    /// Row-major construction.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_finite(&data)?;
        let arr = Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self(arr))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    /// Matrix whose `rows` rows all equal `row`.
    pub fn identical_rows(rows: usize, row: &[f64]) -> Result<Self> {
        let data = (0..rows).flat_map(|_| row.iter().copied()).collect();
        Self::from_row_major(rows, row.len(), data)
    }

    /// Entries drawn i.i.d. uniform on `[-scale, scale]`.
    pub fn random_uniform<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-scale..=scale))
            .collect();
        Self::from_row_major(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn as_array_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    /// Borrowed row-major entries; every constructor yields standard layout.
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice().expect("weight matrices are stored row-major")
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).to_vec()
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum())
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Frobenius (Euclidean) norm.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self(&self.0 + &(&other.0 * c)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self(&self.0 - &other.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for WeightMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[[i, j]]
    }
}

impl IndexMut<(usize, usize)> for WeightMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[[i, j]]
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDims { rows, cols });
    }
    Ok(())
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteSample {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}
