//! Orthonormal row bases and the projection primitives built on them.
//!
//! The basis `V` (rows of unit length, pairwise orthogonal) encodes the
//! projector `P = V^T V`; everything downstream works with `I - P` applied
//! implicitly, one vector at a time.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Residuals at or below `DROP_TOL * max(1, ||s||)` count as "already in the
/// span" and are not appended.
pub const DROP_TOL: f64 = 1e-10;

/// Below this relative residual the projection is applied a second time
/// before normalizing (twice is enough).
const REORTH_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    n: usize,
    rows: Vec<f64>, // len() == len * n, row-major
    ortho_tol: f64,
}

impl OrthonormalBasis {
    pub fn empty(n: usize) -> Self {
        OrthonormalBasis {
            n,
            rows: Vec::new(),
            ortho_tol: 1e-8,
        }
    }

    /// Wrap externally produced rows, verifying the Gram invariant.
    pub fn from_rows(n: usize, rows: Vec<Vec<f64>>, ortho_tol: f64) -> Result<Self> {
        if rows.len() > n {
            return Err(Error::TooLarge {
                what: "basis rows",
                limit: n,
                got: rows.len(),
            });
        }
        let mut basis = OrthonormalBasis {
            n,
            rows: Vec::with_capacity(rows.len() * n),
            ortho_tol,
        };
        for r in &rows {
            if r.len() != n {
                return Err(Error::DimMismatch {
                    context: "OrthonormalBasis::from_rows",
                    expected: n,
                    got: r.len(),
                });
            }
            basis.rows.extend_from_slice(r);
        }
        let err = basis.gram_max_error();
        if err > ortho_tol {
            return Err(Error::Structure(format!(
                "rows are not orthonormal: gram error {err:e} > {ortho_tol:e}"
            )));
        }
        Ok(basis)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Tolerance the Gram invariant is held to.
    pub fn ortho_tol(&self) -> f64 {
        self.ortho_tol
    }

    pub fn len(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.rows.len() / self.n
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// V y (length-l coefficients of y against the basis rows).
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| dot(self.row(i), y))
            .collect()
    }

    /// V^T z for a coefficient vector z.
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &zi) in z.iter().enumerate() {
            if zi != 0.0 {
                axpy(&mut out, zi, self.row(i));
            }
        }
        out
    }

    /// Subtract the span component in place: y <- (I - V^T V) y.
    pub fn project_out(&self, y: &mut [f64]) {
        for i in 0..self.len() {
            let c = dot(self.row(i), y);
            axpy(y, -c, self.row(i));
        }
    }

    /// max |V V^T - I| over all basis-row pairs.
    pub fn gram_max_error(&self) -> f64 {
        let l = self.len();
        let mut worst = 0.0f64;
        for i in 0..l {
            for j in i..l {
                let g = dot(self.row(i), self.row(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Materialize V as a dense l x n matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_vec(self.len(), self.n, self.rows.clone()).expect("basis rows are finite")
    }

    /// P = V^T V materialized densely (n x n).
    pub fn projector(&self) -> DenseMatrix {
        let n = self.n;
        let mut p = DenseMatrix::zeros(n, n);
        for i in 0..self.len() {
            let v = self.row(i);
            for a in 0..n {
                let va = v[a];
                if va == 0.0 {
                    continue;
                }
                let prow = p.row_mut(a);
                for (pb, &vb) in prow.iter_mut().zip(v.iter()) {
                    *pb += va * vb;
                }
            }
        }
        p
    }

    fn push_row(&mut self, row: &[f64]) {
        self.rows.extend_from_slice(row);
    }
}

/// Gram-Schmidt append: project `s` against `v`, and add the normalized
/// residual as a new row when it is numerically nonzero. Returns whether a
/// row was added.
pub fn orthogonalize(v: &mut OrthonormalBasis, s: &[f64]) -> Result<bool> {
    if s.len() != v.n() {
        return Err(Error::DimMismatch {
            context: "orthogonalize",
            expected: v.n(),
            got: s.len(),
        });
    }
    let s_norm = dot(s, s).sqrt();
    let mut resid = s.to_vec();
    v.project_out(&mut resid);
    let mut r_norm = dot(&resid, &resid).sqrt();
    if r_norm < REORTH_THRESHOLD * s_norm {
        // heavy cancellation: one more projection pass keeps the Gram
        // invariant through long append sequences
        v.project_out(&mut resid);
        r_norm = dot(&resid, &resid).sqrt();
    }
    if r_norm <= DROP_TOL * s_norm.max(1.0) {
        return Ok(false);
    }
    for x in resid.iter_mut() {
        *x /= r_norm;
    }
    v.push_row(&resid);
    Ok(true)
}

/// y - V^T (V y) as a fresh vector.
pub fn project_complement(v: &OrthonormalBasis, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != v.n() {
        return Err(Error::DimMismatch {
            context: "project_complement",
            expected: v.n(),
            got: y.len(),
        });
    }
    let mut out = y.to_vec();
    v.project_out(&mut out);
    Ok(out)
}

/// Exact l2 norms of the rows of A (I - V^T V), computed row by row; the
/// m x n product itself is never formed.
pub fn row_norms_exact(a: &CsrMatrix, v: &OrthonormalBasis) -> Result<Vec<f64>> {
    if a.n_cols() != v.n() {
        return Err(Error::DimMismatch {
            context: "row_norms_exact",
            expected: v.n(),
            got: a.n_cols(),
        });
    }
    let n = v.n();
    let mut resid = vec![0.0; n];
    let mut out = Vec::with_capacity(a.n_rows());
    for r in 0..a.n_rows() {
        resid.iter_mut().for_each(|x| *x = 0.0);
        let (cols, vals) = a.row(r);
        for (&c, &val) in cols.iter().zip(vals.iter()) {
            resid[c] = val;
        }
        v.project_out(&mut resid);
        out.push(dot(&resid, &resid).sqrt());
    }
    Ok(out)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for i in 0..y.len() {
        y[i] += alpha * x[i];
    }
}
