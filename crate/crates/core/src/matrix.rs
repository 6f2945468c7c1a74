//! Dense square matrices indexed by vehicle pairs.
//!
//! Every per-link quantity in this crate (distances, powers, SNRs, delays) is an
//! `n × n` row-major matrix whose diagonal is unused. Aggregates always walk the
//! off-diagonal entries in row-major order so floating-point sums are
//! reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vehicle count the dense representation is meant for.
pub const MAX_VEHICLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Matrix with every off-diagonal entry set to `value` and a zero diagonal.
    pub fn off_diagonal_fill(n: usize, value: f64) -> Self {
        let mut m = Self::zeros(n);
        for (i, j) in off_diagonal_pairs(n) {
            m.set(i, j, value);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n > MAX_VEHICLES {
            return Err(Error::Capacity(format!(
                "{n} vehicles exceeds the supported maximum of {MAX_VEHICLES}"
            )));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Off-diagonal entries in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        off_diagonal_pairs(self.n).map(move |(i, j)| self.get(i, j))
    }

    /// Sum of row `i` excluding the diagonal entry.
    pub fn off_diagonal_row_sum(&self, i: usize) -> f64 {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn map_off_diagonal(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut out = Self::zeros(self.n);
        for (i, j) in off_diagonal_pairs(self.n) {
            out.set(i, j, f(self.get(i, j)));
        }
        out
    }

    pub(crate) fn check_same_size(&self, other: &Matrix, what: &str) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "{what}: {}×{} vs {}×{}",
                self.n, self.n, other.n, other.n
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Ordered pairs `(i, j)` with `i != j`, in row-major order.
pub fn off_diagonal_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}
