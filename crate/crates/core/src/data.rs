//! Dense row-major storage for observed points.

use alloc::format;
use alloc::vec::Vec;

use crate::error::CoreError;

/// N observed points in `cols` real dimensions, stored row-major.
///
/// Invariants enforced at construction: at least two points, at least one
/// feature, every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, CoreError> {
        if rows < 2 {
            return Err(CoreError::InvalidArgument(format!(
                "need at least 2 points, got {rows}"
            )));
        }
        if cols < 1 {
            return Err(CoreError::InvalidArgument(format!(
                "need at least 1 feature, got {cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(CoreError::InvalidArgument(format!(
                "value buffer holds {} entries, expected {}",
                values.len(),
                rows * cols
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CoreError> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CoreError::InvalidArgument(
                "rows have inconsistent widths".into(),
            ));
        }
        let mut values = Vec::with_capacity(n * cols);
        for r in rows {
            values.extend_from_slice(r);
        }
        Self::new(n, cols, values)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
