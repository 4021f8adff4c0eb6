//! Row-major dense matrices for the small factorizations and sketched
//! intermediates. Construction rejects NaN/Inf.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        alloc_watch::record(n_rows, n_cols);
        DenseMatrix {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::Structure(format!(
                "value buffer length {} != {n_rows} x {n_cols}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        alloc_watch::record(n_rows, n_cols);
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Ok(DenseMatrix::zeros(0, 0));
        }
        let n_cols = rows[0].len();
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Structure("ragged rows".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            values.extend_from_slice(r);
        }
        DenseMatrix::from_vec(rows.len(), n_cols, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n_cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.n_cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col_copy(&self, c: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimMismatch {
                context: "DenseMatrix::matmul",
                expected: self.n_cols,
                got: other.n_rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (o, &b) in out_row.iter_mut().zip(orow.iter()) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimMismatch {
                context: "DenseMatrix::mul_vec",
                expected: self.n_cols,
                got: x.len(),
            });
        }
        Ok((0..self.n_rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x.iter())
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// max |A - A^T| over all entries; 0 for symmetric matrices.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n_rows {
            for c in (r + 1)..self.n_cols.min(self.n_rows) {
                worst = worst.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Shape log for dense allocations, used by tests that pin down which
/// intermediates an algorithm is allowed to materialize. Disabled by default;
/// recording costs one thread-local check per allocation.
pub mod alloc_watch {
    use std::cell::{Cell, RefCell};

    thread_local! {
        static ENABLED: Cell<bool> = const { Cell::new(false) };
        static SHAPES: RefCell<Vec<(usize, usize)>> = const { RefCell::new(Vec::new()) };
    }

    const MIN_TRACKED_ENTRIES: usize = 256;

    pub(super) fn record(rows: usize, cols: usize) {
        if rows * cols < MIN_TRACKED_ENTRIES {
            return;
        }
        ENABLED.with(|e| {
            if e.get() {
                SHAPES.with(|s| s.borrow_mut().push((rows, cols)));
            }
        });
    }

    /// Start recording dense allocation shapes on this thread.
    pub fn start() {
        SHAPES.with(|s| s.borrow_mut().clear());
        ENABLED.with(|e| e.set(true));
    }

    /// Stop recording and return the shapes seen since `start`.
    pub fn stop() -> Vec<(usize, usize)> {
        ENABLED.with(|e| e.set(false));
        SHAPES.with(|s| std::mem::take(&mut *s.borrow_mut()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn matmul_small() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.row(0), &[2.0, 1.0]);
        assert_eq!(c.row(1), &[4.0, 3.0]);
    }

    #[test]
    fn alloc_watch_captures_shapes() {
        alloc_watch::start();
        let _m = DenseMatrix::zeros(32, 32);
        let shapes = alloc_watch::stop();
        assert!(shapes.contains(&(32, 32)));
        // not recording when stopped
        let _m2 = DenseMatrix::zeros(64, 64);
        let shapes = alloc_watch::stop();
        assert!(shapes.is_empty());
    }
}
