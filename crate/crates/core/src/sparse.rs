//! Compressed sparse row matrices.
//!
//! The input matrix and all of its row/column restrictions are CSR. Column
//! indices are strictly increasing inside each row and explicit zeros are
//! never stored, so `nnz` always means stored-and-nonzero.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::Structure(format!(
                "row_offsets length {} != n_rows + 1 = {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::Structure("row_offsets endpoints invalid".into()));
        }
        if col_indices.len() != values.len() {
            return Err(Error::Structure("col_indices/values length mismatch".into()));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::Structure(format!("row {r} has negative extent")));
            }
            let mut prev: Option<usize> = None;
            for k in lo..hi {
                let c = col_indices[k];
                if c >= n_cols {
                    return Err(Error::Structure(format!(
                        "column index {c} out of range in row {r}"
                    )));
                }
                if let Some(p) = prev {
                    if c <= p {
                        return Err(Error::Structure(format!(
                            "column indices not strictly increasing in row {r}"
                        )));
                    }
                }
                prev = Some(c);
                if !values[k].is_finite() {
                    return Err(Error::NonFinite(k));
                }
                if values[k] == 0.0 {
                    return Err(Error::Structure(format!(
                        "explicit zero stored at row {r}, col {c}"
                    )));
                }
            }
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Build from (row, col, value) triplets; duplicates are summed and
    /// entries that cancel to zero are dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Structure(format!("triplet ({r}, {c}) out of range")));
            }
            if !v.is_finite() {
                return Err(Error::Structure(format!("non-finite triplet value at ({r}, {c})")));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            let (r, c, mut v) = sorted[i];
            let mut j = i + 1;
            while j < sorted.len() && sorted[j].0 == r && sorted[j].1 == c {
                v += sorted[j].2;
                j += 1;
            }
            if v != 0.0 {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
            }
            i = j;
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        CsrMatrix::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CsrMatrix {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut triplets = Vec::new();
        for r in 0..d.n_rows() {
            for c in 0..d.n_cols() {
                let v = d.get(r, c);
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        CsrMatrix::from_triplets(d.n_rows(), d.n_cols(), &triplets).expect("dense source is valid")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_offsets[r + 1] - self.row_offsets[r]
    }

    pub fn iter_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals.iter()).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimMismatch {
                context: "CsrMatrix::mul_vec",
                expected: self.n_cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    /// max_j |(Ax)_j|, the discrepancy of `x` against this matrix.
    pub fn inf_norm_apply(&self, x: &[f64]) -> Result<f64> {
        let y = self.mul_vec(x)?;
        Ok(y.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| {
                let (_, vals) = self.row(r);
                vals.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Restriction to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            if r >= self.n_rows {
                return Err(Error::Structure(format!("row {r} out of range")));
            }
            let (cols, vals) = self.row(r);
            col_indices.extend_from_slice(cols);
            values.extend_from_slice(vals);
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Restriction to the given columns (strictly increasing), reindexed to
    /// 0..keep.len().
    pub fn select_columns(&self, keep: &[usize]) -> Result<Self> {
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Structure("column selection must be strictly increasing".into()));
        }
        if let Some(&last) = keep.last() {
            if last >= self.n_cols {
                return Err(Error::Structure(format!("column {last} out of range")));
            }
        }
        let mut remap = vec![usize::MAX; self.n_cols];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                if remap[c] != usize::MAX {
                    col_indices.push(remap[c]);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            n_rows: self.n_rows,
            n_cols: keep.len(),
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Append empty rows until the matrix has `new_rows` rows.
    pub fn pad_rows(&self, new_rows: usize) -> Self {
        assert!(new_rows >= self.n_rows);
        let mut row_offsets = self.row_offsets.clone();
        row_offsets.resize(new_rows + 1, self.nnz());
        CsrMatrix {
            n_rows: new_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices: self.col_indices.clone(),
            values: self.values.clone(),
        }
    }

    /// Dense copy; intended for oracles and small reference paths.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.iter_triplets() {
            d.set(r, c, v);
        }
        d
    }

    /// A^T A accumulated densely (n x n).
    pub fn gram(&self) -> DenseMatrix {
        let n = self.n_cols;
        let mut h = DenseMatrix::zeros(n, n);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (i, (&ci, &vi)) in cols.iter().zip(vals.iter()).enumerate() {
                for (&cj, &vj) in cols[i..].iter().zip(vals[i..].iter()) {
                    let add = vi * vj;
                    let cur = h.get(ci, cj);
                    h.set(ci, cj, cur + add);
                    if ci != cj {
                        let cur = h.get(cj, ci);
                        h.set(cj, ci, cur + add);
                    }
                }
            }
        }
        h
    }
}
