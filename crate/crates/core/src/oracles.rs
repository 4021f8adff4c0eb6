//! Exact and brute-force reference computations: ground truth for the
//! randomized components at desk scale.

use crate::basis::{dot, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::factor::sym_eig_desc;
use crate::rng::RngStream;
use crate::sparse::CsrMatrix;
use rand::Rng;

/// Column-count cap for exhaustive coloring enumeration (2^(n-1) states).
pub const DISC_MAX_COLS: usize = 22;
/// Column-count cap for hereditary enumeration (3^n work).
pub const HERDISC_MAX_COLS: usize = 14;
/// Entry cap for the exact leverage-score oracle.
pub const EXACT_LEVERAGE_MAX_ENTRIES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct DiscResult {
    pub value: f64,
    pub witness: Vec<i8>,
}

/// ||A x||_inf for a sign vector.
pub fn disc_of(a: &CsrMatrix, x: &[i8]) -> Result<f64> {
    let xs: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    a.inf_norm_apply(&xs)
}

/// Exhaustive minimum of ||A x||_inf over sign vectors. Walks a Gray code
/// with x_0 fixed to +1 (x and -x are equivalent) and updates A x
/// incrementally, one column flip at a time.
pub fn brute_force_disc(a: &CsrMatrix) -> Result<DiscResult> {
    let n = a.n_cols();
    if n > DISC_MAX_COLS {
        return Err(Error::TooLarge {
            what: "brute_force_disc columns",
            limit: DISC_MAX_COLS,
            got: n,
        });
    }
    if n == 0 {
        return Ok(DiscResult {
            value: 0.0,
            witness: Vec::new(),
        });
    }
    let m = a.n_rows();
    // column adjacency for incremental flips
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, c, v) in a.iter_triplets() {
        cols[c].push((r, v));
    }
    let mut x = vec![1i8; n];
    let mut y = a.mul_vec(&vec![1.0; n])?;
    let max_abs = |y: &[f64]| y.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut best = max_abs(&y);
    let mut witness = x.clone();
    // Gray code over coordinates 1..n (coordinate 0 pinned)
    let steps: u64 = 1u64 << (n - 1);
    for k in 1..steps {
        let flip = 1 + k.trailing_zeros() as usize; // coordinate to toggle
        let delta = -2.0 * x[flip] as f64;
        x[flip] = -x[flip];
        for &(r, v) in &cols[flip] {
            y[r] += delta * v;
        }
        let _ = m;
        let val = max_abs(&y);
        if val < best {
            best = val;
            witness = x.clone();
        }
    }
    Ok(DiscResult {
        value: best,
        witness,
    })
}

/// Exact hereditary discrepancy: max over nonempty column subsets of the
/// exhaustive discrepancy of the restricted matrix.
pub fn brute_force_herdisc(a: &CsrMatrix) -> Result<f64> {
    let n = a.n_cols();
    if n > HERDISC_MAX_COLS {
        return Err(Error::TooLarge {
            what: "brute_force_herdisc columns",
            limit: HERDISC_MAX_COLS,
            got: n,
        });
    }
    let mut worst = 0.0f64;
    for mask in 1u32..(1u32 << n) {
        let keep: Vec<usize> = (0..n).filter(|&c| mask & (1 << c) != 0).collect();
        let sub = a.select_columns(&keep)?;
        let d = brute_force_disc(&sub)?;
        if d.value > worst {
            worst = d.value;
        }
    }
    Ok(worst)
}

/// Spectral lower bound on the hereditary discrepancy:
/// (k / 2e) sqrt(lambda_k(A^T A) / (m n)) for a 1-based k.
pub fn herdisc_eigen_lower_bound(a: &CsrMatrix, k: usize) -> Result<f64> {
    let (m, n) = (a.n_rows(), a.n_cols());
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidParameter(format!(
            "k must lie in [1, min(m, n)] = [1, {}], got {k}",
            m.min(n)
        )));
    }
    let gram = a.gram();
    let (vals, _) = sym_eig_desc(&gram)?;
    let lambda_k = vals[k - 1].max(0.0);
    Ok((k as f64 / (2.0 * std::f64::consts::E)) * (lambda_k / (m as f64 * n as f64)).sqrt())
}

/// The lower bound of [`herdisc_eigen_lower_bound`] for every valid k, from
/// a single eigendecomposition.
pub fn herdisc_eigen_lower_bound_sweep(a: &CsrMatrix) -> Result<Vec<f64>> {
    let (m, n) = (a.n_rows(), a.n_cols());
    if m.min(n) == 0 {
        return Ok(Vec::new());
    }
    let gram = a.gram();
    let (vals, _) = sym_eig_desc(&gram)?;
    Ok((1..=m.min(n))
        .map(|k| {
            (k as f64 / (2.0 * std::f64::consts::E))
                * (vals[k - 1].max(0.0) / (m as f64 * n as f64)).sqrt()
        })
        .collect())
}

/// Exact leverage scores of A (I - V^T V) via the eigendecomposition of its
/// Gram: sigma_i = sum_k <b_i, w_k>^2 / lambda_k over the numerically
/// nonzero spectrum.
pub fn exact_leverage_scores(a: &CsrMatrix, v: &OrthonormalBasis) -> Result<Vec<f64>> {
    if a.n_cols() != v.n() {
        return Err(Error::DimMismatch {
            context: "exact_leverage_scores",
            expected: v.n(),
            got: a.n_cols(),
        });
    }
    let (m, n) = (a.n_rows(), a.n_cols());
    if m * n > EXACT_LEVERAGE_MAX_ENTRIES {
        return Err(Error::TooLarge {
            what: "exact_leverage_scores entries",
            limit: EXACT_LEVERAGE_MAX_ENTRIES,
            got: m * n,
        });
    }
    // Gram of the projected rows
    let mut gram = crate::dense::DenseMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    let mut resid_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    for r in 0..m {
        b.iter_mut().for_each(|x| *x = 0.0);
        let (cols, vals) = a.row(r);
        for (&c, &val) in cols.iter().zip(vals.iter()) {
            b[c] = val;
        }
        v.project_out(&mut b);
        for i in 0..n {
            let bi = b[i];
            if bi != 0.0 {
                let grow = gram.row_mut(i);
                for (g, &bj) in grow.iter_mut().zip(b.iter()) {
                    *g += bi * bj;
                }
            }
        }
        resid_rows.push(b.clone());
    }
    let (vals, vecs) = sym_eig_desc(&gram)?;
    let lambda_max = vals.first().copied().unwrap_or(0.0).max(0.0);
    let cut = 1e-10 * lambda_max;
    let mut scores = vec![0.0; m];
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= cut || lam <= 0.0 {
            break;
        }
        let w = vecs.row(k);
        for (r, row) in resid_rows.iter().enumerate() {
            let c = dot(row, w);
            scores[r] += c * c / lam;
        }
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy)]
pub struct BaselineStats {
    pub median: f64,
    pub max: f64,
    pub min: f64,
    pub trials: usize,
}

/// Discrepancy statistics of uniformly random colorings.
pub fn random_coloring_baseline(a: &CsrMatrix, trials: usize, rng: RngStream) -> Result<BaselineStats> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let n = a.n_cols();
    let mut gen = rng.rng();
    let mut values = Vec::with_capacity(trials);
    let mut x = vec![0.0f64; n];
    for _ in 0..trials {
        for xi in x.iter_mut() {
            *xi = if gen.gen::<bool>() { 1.0 } else { -1.0 };
        }
        values.push(a.inf_norm_apply(&x)?);
    }
    values.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let median = if trials % 2 == 1 {
        values[trials / 2]
    } else {
        0.5 * (values[trials / 2 - 1] + values[trials / 2])
    };
    Ok(BaselineStats {
        median,
        max: *values.last().unwrap(),
        min: values[0],
        trials,
    })
}
