//! Seeded sketching operators: Gaussian, AMS, CountSketch, sparse embeddings
//! and the CountSketch-then-Gaussian composition.
//!
//! Operators are immutable after construction; applying one twice to the same
//! input gives bit-identical output. Hash-based kinds draw their hash
//! functions from a 4-wise independent family of degree-3 polynomials over
//! the Mersenne prime 2^61 - 1.

use crate::basis::{axpy, dot, OrthonormalBasis};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sparse::CsrMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const MERSENNE_61: u64 = (1u64 << 61) - 1;

/// A member of the 4-wise independent family h(x) = c3 x^3 + c2 x^2 + c1 x + c0
/// over GF(2^61 - 1).
#[derive(Debug, Clone, Copy)]
pub struct FourWiseHash {
    coeffs: [u64; 4],
}

impl FourWiseHash {
    pub fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut coeffs = [0u64; 4];
        for c in coeffs.iter_mut() {
            *c = rng.gen_range(0..MERSENNE_61);
        }
        FourWiseHash { coeffs }
    }

    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        let x = x % MERSENNE_61;
        let mut acc = self.coeffs[3];
        for k in (0..3).rev() {
            acc = add_mod(mul_mod(acc, x), self.coeffs[k]);
        }
        acc
    }

    #[inline]
    pub fn bucket(&self, x: u64, b: usize) -> usize {
        (self.eval(x) % b as u64) as usize
    }

    #[inline]
    pub fn sign(&self, x: u64) -> f64 {
        if self.eval(x) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let prod = a as u128 * b as u128;
    let lo = (prod & MERSENNE_61 as u128) as u64;
    let hi = (prod >> 61) as u64;
    add_mod(lo, hi % MERSENNE_61)
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    Gaussian,
    Ams,
    CountSketch,
    SparseEmbeddingI,
    SparseEmbeddingII,
    CountSketchThenGaussian,
}

/// Kind-specific construction parameters; unused fields are ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct SketchParams {
    /// Entry scale for Gaussian kinds; defaults to 1/sqrt(rows).
    pub scale: Option<f64>,
    /// Nonzeros per column for the sparse embeddings.
    pub sparsity: Option<usize>,
    /// Inner CountSketch dimension for the composed transform.
    pub inner_dim: Option<usize>,
}

#[derive(Debug, Clone)]
enum SketchData {
    /// Row-major rows x cols Gaussian entries (already scaled).
    Dense(Vec<f64>),
    /// One 4-wise hash per output row; entry (i, j) = sign(h_i(j)) / sqrt(rows).
    Ams { hashes: Vec<FourWiseHash>, scale: f64 },
    /// bucket[j], sign[j] per input column.
    CountSketch { bucket: Vec<u32>, sign: Vec<f64> },
    /// Per input column: `s` distinct row positions with values +-1/sqrt(s).
    SparseCols {
        s: usize,
        idx: Vec<u32>, // cols * s entries
        val: Vec<f64>,
    },
    /// gaussian (rows x t) composed with countsketch (t x cols).
    Composed {
        gaussian: Box<SketchOperator>,
        count_sketch: Box<SketchOperator>,
    },
}

/// A seeded random linear map R^cols -> R^rows.
#[derive(Debug, Clone)]
pub struct SketchOperator {
    pub kind: SketchKind,
    rows: usize,
    cols: usize,
    data: SketchData,
}

/// Construct a sketching operator of the requested kind.
pub fn make_sketch(
    kind: SketchKind,
    rows: usize,
    cols: usize,
    params: SketchParams,
    rng: RngStream,
) -> Result<SketchOperator> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!(
            "sketch dimensions must be positive, got {rows} x {cols}"
        )));
    }
    let mut gen = rng.rng();
    let data = match kind {
        SketchKind::Gaussian => {
            let scale = params.scale.unwrap_or(1.0 / (rows as f64).sqrt());
            let mut vals = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let g: f64 = gen.sample(StandardNormal);
                vals.push(scale * g);
            }
            SketchData::Dense(vals)
        }
        SketchKind::Ams => {
            let hashes = (0..rows).map(|_| FourWiseHash::draw(&mut gen)).collect();
            SketchData::Ams {
                hashes,
                scale: 1.0 / (rows as f64).sqrt(),
            }
        }
        SketchKind::CountSketch => {
            let h = FourWiseHash::draw(&mut gen);
            let sg = FourWiseHash::draw(&mut gen);
            let bucket = (0..cols).map(|j| h.bucket(j as u64, rows) as u32).collect();
            let sign = (0..cols).map(|j| sg.sign(j as u64)).collect();
            SketchData::CountSketch { bucket, sign }
        }
        SketchKind::SparseEmbeddingI => {
            let s = params
                .sparsity
                .ok_or_else(|| Error::InvalidParameter("sparse embedding needs `sparsity`".into()))?;
            if s == 0 || s > rows {
                return Err(Error::InvalidParameter(format!(
                    "column sparsity {s} out of range for {rows} rows"
                )));
            }
            let mut idx = Vec::with_capacity(cols * s);
            let mut val = Vec::with_capacity(cols * s);
            let scale = 1.0 / (s as f64).sqrt();
            let mut pool: Vec<u32> = (0..rows as u32).collect();
            for _ in 0..cols {
                // partial Fisher-Yates: first s entries become the positions
                for k in 0..s {
                    let pick = gen.gen_range(k..rows);
                    pool.swap(k, pick);
                }
                for k in 0..s {
                    idx.push(pool[k]);
                    val.push(if gen.gen::<bool>() { scale } else { -scale });
                }
            }
            SketchData::SparseCols { s, idx, val }
        }
        SketchKind::SparseEmbeddingII => {
            let s = params
                .sparsity
                .ok_or_else(|| Error::InvalidParameter("sparse embedding needs `sparsity`".into()))?;
            if s == 0 || s > rows {
                return Err(Error::InvalidParameter(format!(
                    "column sparsity {s} out of range for {rows} rows"
                )));
            }
            if rows % s != 0 {
                return Err(Error::InvalidParameter(format!(
                    "sparse embedding II requires sparsity {s} to divide rows {rows}"
                )));
            }
            let block = rows / s;
            let h = FourWiseHash::draw(&mut gen);
            let sg = FourWiseHash::draw(&mut gen);
            let scale = 1.0 / (s as f64).sqrt();
            let mut idx = Vec::with_capacity(cols * s);
            let mut val = Vec::with_capacity(cols * s);
            for i in 0..cols {
                for j in 0..s {
                    let key = (i as u64) * (s as u64) + j as u64;
                    let row = j * block + h.bucket(key, block);
                    idx.push(row as u32);
                    val.push(sg.sign(key) * scale);
                }
            }
            SketchData::SparseCols { s, idx, val }
        }
        SketchKind::CountSketchThenGaussian => {
            let t = params
                .inner_dim
                .ok_or_else(|| Error::InvalidParameter("composition needs `inner_dim`".into()))?;
            let count_sketch = make_sketch(
                SketchKind::CountSketch,
                t,
                cols,
                SketchParams::default(),
                rng.substream(1),
            )?;
            let gaussian = make_sketch(
                SketchKind::Gaussian,
                rows,
                t,
                SketchParams {
                    scale: params.scale,
                    ..SketchParams::default()
                },
                rng.substream(2),
            )?;
            SketchData::Composed {
                gaussian: Box::new(gaussian),
                count_sketch: Box::new(count_sketch),
            }
        }
    };
    Ok(SketchOperator {
        kind,
        rows,
        cols,
        data,
    })
}

impl SketchOperator {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// CountSketch with explicitly given bucket/sign maps, for callers that
    /// need a fixed routing (identity-shaped sketches in particular).
    pub fn count_sketch_from_maps(rows: usize, bucket: Vec<u32>, sign: Vec<f64>) -> Result<Self> {
        if bucket.len() != sign.len() {
            return Err(Error::Structure("bucket/sign length mismatch".into()));
        }
        if bucket.iter().any(|&b| b as usize >= rows) {
            return Err(Error::Structure("bucket out of range".into()));
        }
        if sign.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Structure("signs must be +-1".into()));
        }
        let cols = bucket.len();
        Ok(SketchOperator {
            kind: SketchKind::CountSketch,
            rows,
            cols,
            data: SketchData::CountSketch { bucket, sign },
        })
    }

    /// Number of stored nonzero entries (dense kinds count every entry).
    pub fn stored_nnz(&self) -> usize {
        match &self.data {
            SketchData::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            SketchData::Ams { .. } => self.rows * self.cols,
            SketchData::CountSketch { bucket, .. } => bucket.len(),
            SketchData::SparseCols { idx, .. } => idx.len(),
            SketchData::Composed { gaussian, count_sketch } => {
                gaussian.stored_nnz() + count_sketch.stored_nnz()
            }
        }
    }

    /// Entries of one input column (row position, value).
    pub fn column_entries(&self, j: usize) -> Vec<(usize, f64)> {
        match &self.data {
            SketchData::Dense(v) => (0..self.rows)
                .map(|i| (i, v[i * self.cols + j]))
                .filter(|(_, x)| *x != 0.0)
                .collect(),
            SketchData::Ams { hashes, scale } => (0..self.rows)
                .map(|i| (i, hashes[i].sign(j as u64) * scale))
                .collect(),
            SketchData::CountSketch { bucket, sign } => vec![(bucket[j] as usize, sign[j])],
            SketchData::SparseCols { s, idx, val } => (0..*s)
                .map(|k| (idx[j * s + k] as usize, val[j * s + k]))
                .collect(),
            SketchData::Composed { .. } => {
                let col = self.materialize_column(j);
                col.into_iter()
                    .enumerate()
                    .filter(|(_, x)| *x != 0.0)
                    .collect()
            }
        }
    }

    fn materialize_column(&self, j: usize) -> Vec<f64> {
        match &self.data {
            SketchData::Composed { gaussian, count_sketch } => {
                let mut inner = vec![0.0; count_sketch.rows];
                for (i, v) in count_sketch.column_entries(j) {
                    inner[i] = v;
                }
                let mut out = vec![0.0; self.rows];
                for (k, &x) in inner.iter().enumerate() {
                    if x != 0.0 {
                        for (i, v) in gaussian.column_entries(k) {
                            out[i] += v * x;
                        }
                    }
                }
                out
            }
            _ => {
                let mut out = vec![0.0; self.rows];
                for (i, v) in self.column_entries(j) {
                    out[i] = v;
                }
                out
            }
        }
    }

    /// S A for a CSR input with A.n_rows == cols. Accumulation visits the
    /// rows of A in index order, so the result is reproducible.
    pub fn apply_left(&self, a: &CsrMatrix) -> Result<DenseMatrix> {
        if a.n_rows() != self.cols {
            return Err(Error::DimMismatch {
                context: "SketchOperator::apply_left",
                expected: self.cols,
                got: a.n_rows(),
            });
        }
        match &self.data {
            SketchData::Composed { gaussian, count_sketch } => {
                let mid = count_sketch.apply_left(a)?;
                // dense (rows x t) * (t x n)
                let t = count_sketch.rows;
                let mut out = DenseMatrix::zeros(self.rows, a.n_cols());
                for i in 0..self.rows {
                    for k in 0..t {
                        let coeff = match &gaussian.data {
                            SketchData::Dense(v) => v[i * t + k],
                            _ => unreachable!("composition stores a dense gaussian"),
                        };
                        if coeff != 0.0 {
                            axpy(out.row_mut(i), coeff, mid.row(k));
                        }
                    }
                }
                Ok(out)
            }
            _ => {
                let mut out = DenseMatrix::zeros(self.rows, a.n_cols());
                for k in 0..a.n_rows() {
                    let (cols_k, vals_k) = a.row(k);
                    if cols_k.is_empty() {
                        continue;
                    }
                    for (i, coeff) in self.column_entries(k) {
                        let row = out.row_mut(i);
                        for (&c, &v) in cols_k.iter().zip(vals_k.iter()) {
                            row[c] += coeff * v;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Materialize S^T as a cols x rows dense matrix (for right-products).
    pub fn transpose_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for (i, v) in self.column_entries(j) {
                out.set(j, i, v);
            }
        }
        out
    }
}

/// (A (I - V^T V)) S^T without materializing the m x n projected matrix:
/// computed as (A St) - (A V^T)(V St), row by row.
pub fn apply_right_jl(
    a: &CsrMatrix,
    v: &OrthonormalBasis,
    s: &SketchOperator,
) -> Result<DenseMatrix> {
    if a.n_cols() != v.n() {
        return Err(Error::DimMismatch {
            context: "apply_right_jl (matrix vs basis)",
            expected: v.n(),
            got: a.n_cols(),
        });
    }
    if s.cols() != v.n() {
        return Err(Error::DimMismatch {
            context: "apply_right_jl (sketch vs ambient)",
            expected: v.n(),
            got: s.cols(),
        });
    }
    let st = s.transpose_dense(); // n x r
    let r = s.rows();
    let w = basis_times_dense(v, &st); // l x r
    let mut out = DenseMatrix::zeros(a.n_rows(), r);
    let mut coeffs = vec![0.0; v.len()];
    for row in 0..a.n_rows() {
        let (cols, vals) = a.row(row);
        let orow = out.row_mut(row);
        for (&c, &val) in cols.iter().zip(vals.iter()) {
            axpy(orow, val, st.row(c));
        }
        if !v.is_empty() {
            for (k, coeff) in coeffs.iter_mut().enumerate() {
                *coeff = sparse_dot(cols, vals, v.row(k));
            }
            for (k, &coeff) in coeffs.iter().enumerate() {
                if coeff != 0.0 {
                    axpy(orow, -coeff, w.row(k));
                }
            }
        }
    }
    Ok(out)
}

/// Row norms of (A (I - V^T V)) S^T, streamed one row at a time. Same math
/// as [`apply_right_jl`] but only O(r) live memory per row.
pub fn sketched_residual_row_norms(
    a: &CsrMatrix,
    v: &OrthonormalBasis,
    s: &SketchOperator,
) -> Result<Vec<f64>> {
    if a.n_cols() != v.n() || s.cols() != v.n() {
        return Err(Error::DimMismatch {
            context: "sketched_residual_row_norms",
            expected: v.n(),
            got: if a.n_cols() != v.n() { a.n_cols() } else { s.cols() },
        });
    }
    let st = s.transpose_dense(); // n x r
    let w = basis_times_dense(v, &st); // l x r
    let r = s.rows();
    let mut buf = vec![0.0; r];
    let mut out = Vec::with_capacity(a.n_rows());
    for row in 0..a.n_rows() {
        buf.iter_mut().for_each(|x| *x = 0.0);
        let (cols, vals) = a.row(row);
        for (&c, &val) in cols.iter().zip(vals.iter()) {
            axpy(&mut buf, val, st.row(c));
        }
        for k in 0..v.len() {
            let coeff = sparse_dot(cols, vals, v.row(k));
            if coeff != 0.0 {
                axpy(&mut buf, -coeff, w.row(k));
            }
        }
        out.push(dot(&buf, &buf).sqrt());
    }
    Ok(out)
}

/// V * D for dense D (n x r) -> l x r.
pub(crate) fn basis_times_dense(v: &OrthonormalBasis, d: &DenseMatrix) -> DenseMatrix {
    let l = v.len();
    let r = d.n_cols();
    let mut out = DenseMatrix::zeros(l, r);
    for k in 0..l {
        let vk = v.row(k);
        let orow = out.row_mut(k);
        for (c, &coeff) in vk.iter().enumerate() {
            if coeff != 0.0 {
                axpy(orow, coeff, d.row(c));
            }
        }
    }
    out
}

#[inline]
pub(crate) fn sparse_dot(cols: &[usize], vals: &[f64], dense: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&c, &v) in cols.iter().zip(vals.iter()) {
        acc += v * dense[c];
    }
    acc
}

/// n_rows x n_cols matrix of standard normals drawn from `rng`.
pub fn gaussian_matrix(n_rows: usize, n_cols: usize, rng: RngStream) -> DenseMatrix {
    let mut gen = rng.rng();
    let vals: Vec<f64> = (0..n_rows * n_cols)
        .map(|_| gen.sample(StandardNormal))
        .collect();
    DenseMatrix::from_vec(n_rows, n_cols, vals).expect("normal samples are finite")
}
