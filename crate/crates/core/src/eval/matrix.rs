use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                what: "matrix data length vs rows * cols",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    what: "matrix row length",
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix whose `q`-th column is `columns[q]`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (c, column) in columns.iter().enumerate() {
            if column.len() != rows {
                return Err(Error::Dimension {
                    what: "matrix column length",
                    expected: rows,
                    actual: column.len(),
                });
            }
            for (r, &v) in column.iter().enumerate() {
                m.data[r * cols + c] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn max(&self) -> Option<f64> {
        self.data.iter().copied().reduce(f64::max)
    }

    /// Element-wise sum. Shapes must agree.
    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension {
                what: "matrix element count in addition",
                expected: self.data.len(),
                actual: other.data.len(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                i / self.cols.max(1),
                i % self.cols.max(1)
            )));
        }
        Ok(())
    }
}

/// Matrix of nonnegative finite distances; smaller means more similar.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(Matrix);

impl DistanceMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        matrix.ensure_finite()?;
        if let Some(i) = matrix.as_slice().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "negative distance at flat index {i}"
            )));
        }
        Ok(Self(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0.get(row, col)
    }
}

/// Converts similarities to distances by subtracting each entry from the
/// global maximum, so the best match of the whole matrix sits at zero.
pub fn similarity_to_distance(similarity: &Matrix) -> Result<DistanceMatrix> {
    if similarity.is_empty() {
        return Err(Error::InvalidInput("empty similarity matrix".into()));
    }
    similarity.ensure_finite()?;
    let max = similarity.max().expect("non-empty");
    DistanceMatrix::new(similarity.map(|s| max - s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_from_small_similarity() {
        let s = Matrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 0.0]]).unwrap();
        let d = similarity_to_distance(&s).unwrap();
        assert_eq!(d.matrix().as_slice(), &[2.0, 0.0, 1.0, 3.0]);
    }

    #[test]
    fn constant_similarity_gives_zero_distance() {
        let s = Matrix::from_rows(&[vec![4.5; 3], vec![4.5; 3]]).unwrap();
        let d = similarity_to_distance(&s).unwrap();
        assert!(d.matrix().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_and_non_finite_rejected() {
        assert!(similarity_to_distance(&Matrix::zeros(0, 0)).is_err());
        let s = Matrix::from_rows(&[vec![f64::NAN, 1.0]]).unwrap();
        assert!(similarity_to_distance(&s).is_err());
    }

    #[test]
    fn columns_round_trip() {
        let m = Matrix::from_columns(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.shape(), (3, 2));
        assert_eq!(m.get(2, 1), 6.0);
        assert_eq!(m.column(0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn negative_distance_rejected() {
        assert!(DistanceMatrix::from_rows(&[vec![0.0, -1.0]]).is_err());
    }
}
