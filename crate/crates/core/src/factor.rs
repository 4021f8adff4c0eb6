//! Dense factorizations: Householder QR (plain and column-pivoted, R only)
//! and a cyclic Jacobi symmetric eigensolver. Sizes here are n x n or
//! (sketch rows) x n, so simple robust kernels are enough.

use crate::basis::OrthonormalBasis;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Relative diagonal threshold below which R is treated as rank-deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Upper-triangular R of an (unpivoted) Householder QR of `m`, so that
/// `m = Q R` with orthonormal Q columns. Requires at least as many rows as
/// columns.
pub fn qr_r_factor(m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.n_rows() < m.n_cols() {
        return Err(Error::DimMismatch {
            context: "qr_r_factor (rows >= cols required)",
            expected: m.n_cols(),
            got: m.n_rows(),
        });
    }
    let mut work = m.clone();
    householder_reduce(&mut work, None);
    let n = m.n_cols();
    let mut r = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r.set(i, j, work.get(i, j));
        }
    }
    Ok(r)
}

/// Column-pivoted QR, keeping only R and the column permutation:
/// `m[:, perm] = Q R`. Used where R must be (pseudo-)inverted and the input
/// may be rank-deficient.
#[derive(Debug, Clone)]
pub struct PivotedR {
    pub r: DenseMatrix,
    /// perm[k] = original column placed at pivoted position k
    pub perm: Vec<usize>,
    pub rank: usize,
}

pub fn qr_pivoted_r(m: &DenseMatrix) -> Result<PivotedR> {
    if m.n_rows() < m.n_cols() {
        return Err(Error::DimMismatch {
            context: "qr_pivoted_r (rows >= cols required)",
            expected: m.n_cols(),
            got: m.n_rows(),
        });
    }
    let n = m.n_cols();
    let mut work = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    householder_reduce(&mut work, Some(&mut perm));
    let mut r = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r.set(i, j, work.get(i, j));
        }
    }
    let head = r.get(0, 0).abs();
    let mut rank = 0;
    for i in 0..n {
        if r.get(i, i).abs() > RANK_TOL * head {
            rank += 1;
        } else {
            break; // pivoting sorts the diagonal by magnitude
        }
    }
    Ok(PivotedR { r, perm, rank })
}

/// Householder reduction to upper-triangular form, in place, discarding the
/// reflectors' action beyond the current panel. With `perm` present, columns
/// are pivoted by largest remaining norm (classic norm downdating).
///
/// The reflector application is organized as two row-major sweeps
/// (w = v^T A, then A -= beta v w^T) so tall inputs stream through cache.
fn householder_reduce(a: &mut DenseMatrix, mut perm: Option<&mut Vec<usize>>) {
    let rows = a.n_rows();
    let cols = a.n_cols();
    let mut col_norms_sq: Vec<f64> = if perm.is_some() {
        let mut ns = vec![0.0f64; cols];
        for r in 0..rows {
            for (c, &x) in a.row(r).iter().enumerate() {
                ns[c] += x * x;
            }
        }
        ns
    } else {
        Vec::new()
    };
    let mut v = vec![0.0; rows];
    let mut w = vec![0.0; cols];
    for k in 0..cols {
        if let Some(p) = perm.as_deref_mut() {
            // bring the heaviest remaining column to position k
            let (best, _) = col_norms_sq[k..]
                .iter()
                .enumerate()
                .fold((0usize, -1.0f64), |acc, (i, &x)| {
                    if x > acc.1 {
                        (i, x)
                    } else {
                        acc
                    }
                });
            let best = k + best;
            if best != k {
                p.swap(k, best);
                col_norms_sq.swap(k, best);
                for r in 0..rows {
                    let t = a.get(r, k);
                    a.set(r, k, a.get(r, best));
                    a.set(r, best, t);
                }
            }
        }
        // build the reflector for column k below the diagonal
        let mut sigma = 0.0;
        for r in k..rows {
            let x = a.get(r, k);
            sigma += x * x;
        }
        let norm = sigma.sqrt();
        if norm == 0.0 {
            continue;
        }
        let akk = a.get(k, k);
        let alpha = if akk >= 0.0 { -norm } else { norm };
        let mut vnorm_sq = 0.0;
        for r in k..rows {
            let x = if r == k { akk - alpha } else { a.get(r, k) };
            v[r] = x;
            vnorm_sq += x * x;
        }
        if vnorm_sq == 0.0 {
            continue;
        }
        a.set(k, k, alpha);
        for r in (k + 1)..rows {
            a.set(r, k, 0.0);
        }
        let beta = 2.0 / vnorm_sq;
        // first sweep: w = v^T A over the trailing panel
        for x in w[k + 1..cols].iter_mut() {
            *x = 0.0;
        }
        for r in k..rows {
            let vr = v[r];
            if vr != 0.0 {
                let arow = a.row(r);
                for (wc, &ac) in w[k + 1..cols].iter_mut().zip(arow[k + 1..cols].iter()) {
                    *wc += vr * ac;
                }
            }
        }
        // second sweep: A -= beta v w^T
        for r in k..rows {
            let f = beta * v[r];
            if f != 0.0 {
                let arow = a.row_mut(r);
                for (ac, &wc) in arow[k + 1..cols].iter_mut().zip(w[k + 1..cols].iter()) {
                    *ac -= f * wc;
                }
            }
        }
        if perm.is_some() {
            for c in (k + 1)..cols {
                let x = a.get(k, c);
                col_norms_sq[c] = (col_norms_sq[c] - x * x).max(0.0);
            }
        }
    }
}

/// Apply the triangular pseudo-inverse of a pivoted R to the columns of
/// `b` (n x k): returns X with `m X = Q_{:rank}` structure, i.e.
/// X = Perm * R^+ * b. Diagonal entries below the rank cut contribute zero.
pub fn pinv_r_apply(pr: &PivotedR, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = pr.r.n_rows();
    if b.n_rows() != n {
        return Err(Error::DimMismatch {
            context: "pinv_r_apply",
            expected: n,
            got: b.n_rows(),
        });
    }
    let k = b.n_cols();
    let mut out = DenseMatrix::zeros(n, k);
    let mut y = vec![0.0; n];
    for col in 0..k {
        // back-substitute R y = b[:, col] over the leading rank block
        for i in (0..pr.rank).rev() {
            let mut acc = b.get(i, col);
            for j in (i + 1)..pr.rank {
                acc -= pr.r.get(i, j) * y[j];
            }
            y[i] = acc / pr.r.get(i, i);
        }
        for i in pr.rank..n {
            y[i] = 0.0;
        }
        // undo the column pivoting
        for i in 0..n {
            out.set(pr.perm[i], col, y[i]);
        }
    }
    Ok(out)
}

/// Symmetric eigendecomposition H = U diag(vals) U^T with eigenvalues in
/// descending order and orthonormal eigenvector rows. Rejects visibly
/// asymmetric input.
pub fn sym_eig_desc(h: &DenseMatrix) -> Result<(Vec<f64>, OrthonormalBasis)> {
    if h.n_rows() != h.n_cols() {
        return Err(Error::DimMismatch {
            context: "sym_eig_desc",
            expected: h.n_rows(),
            got: h.n_cols(),
        });
    }
    let n = h.n_rows();
    let scale = h.max_abs();
    let asym = h.max_asymmetry();
    if asym > 1e-9 * scale.max(1e-300) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if n == 0 {
        return Ok((Vec::new(), OrthonormalBasis::empty(0)));
    }
    let mut a = h.clone();
    // symmetrize exactly so the sweep sees a clean input
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, m);
            a.set(j, i, m);
        }
    }
    let mut u = DenseMatrix::identity(n);
    jacobi_sweeps(&mut a, &mut u);
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a.get(i, i), i)).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut rows = Vec::with_capacity(n);
    for &(_, idx) in &pairs {
        rows.push(u.col_copy(idx));
    }
    let basis = OrthonormalBasis::from_rows(n, rows, 1e-8)?;
    Ok((vals, basis))
}

fn jacobi_sweeps(a: &mut DenseMatrix, u: &mut DenseMatrix) {
    let n = a.n_rows();
    let fro = a.frobenius_norm().max(1e-300);
    let tol = 1e-15 * fro;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let ukp = u.get(k, p);
                    let ukq = u.get(k, q);
                    u.set(k, p, c * ukp - s * ukq);
                    u.set(k, q, s * ukp + c * ukq);
                }
            }
        }
    }
}
