use nalgebra::DMatrix;

use crate::{Error, Result};

/// A square matrix of transition rates (units 1/time).
///
/// Construction only enforces shape and finiteness; sign and row-sum
/// validity are reported by [`RateMatrix::violations`] so that malformed
/// user input can be diagnosed rather than rejected wholesale.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix(DMatrix<f64>);

/// A single failed generator constraint.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub time: f64,
    pub row: usize,
    /// `None` for a row-sum violation.
    pub column: Option<usize>,
    /// The offending entry, or the row sum.
    pub value: f64,
}

impl RateMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidGenerator(format!(
                "rate matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGenerator("rate matrix has non-finite entries".into()));
        }
        Ok(RateMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        RateMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds a generator from its off-diagonal rates, setting each diagonal
    /// entry to the negative sum of the rest of its row.
    pub fn from_off_diagonal(mut m: DMatrix<f64>) -> Result<Self> {
        for i in 0..m.nrows().min(m.ncols()) {
            m[(i, i)] = 0.0;
            let s: f64 = m.row(i).iter().sum();
            m[(i, i)] = -s;
        }
        RateMatrix::new(m)
    }

    pub fn zeros(n: usize) -> Self {
        RateMatrix(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, v: usize, w: usize) -> f64 {
        self.0[(v, w)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.0.row(i).iter().copied().collect()).collect()
    }

    /// Total exit rate of state `v`.
    pub fn exit_rate(&self, v: usize) -> f64 {
        (0..self.dim()).filter(|&w| w != v).map(|w| self.0[(v, w)]).sum()
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.dim()).map(|v| self.exit_rate(v)).fold(0.0, f64::max)
    }

    /// Row-sum tolerance `1e-12 · max(1, max|entry|)`.
    pub fn row_sum_tolerance(&self) -> f64 {
        1e-12 * self.0.amax().max(1.0)
    }

    pub fn violations(&self, time: f64) -> Vec<Violation> {
        let n = self.dim();
        let tol = self.row_sum_tolerance();
        let mut out = Vec::new();
        for v in 0..n {
            for w in 0..n {
                if v != w && self.0[(v, w)] < 0.0 {
                    out.push(Violation { time, row: v, column: Some(w), value: self.0[(v, w)] });
                }
            }
            let sum: f64 = self.0.row(v).iter().sum();
            if sum.abs() > tol {
                out.push(Violation { time, row: v, column: None, value: sum });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations(0.0).is_empty()
    }
}
