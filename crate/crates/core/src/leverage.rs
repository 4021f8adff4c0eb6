//! Implicit leverage-score estimation for A (I - V^T V) and the
//! matrix-Chernoff row sampler built on it.
//!
//! The projected matrix is never materialized: a sparse embedding compresses
//! its row space, the R factor of the compressed matrix acts as an
//! approximate whitener, and a JL sketch cuts the per-row cost of reading off
//! the scores.

use crate::basis::{axpy, OrthonormalBasis};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::factor::{pinv_r_apply, qr_pivoted_r};
use crate::rng::RngStream;
use crate::sketch::{basis_times_dense, make_sketch, sparse_dot, SketchKind, SketchParams};
use crate::sparse::CsrMatrix;
use rand_distr::{Binomial, Distribution};

/// Rows of the sparse embedding: EMBED_ROWS_CONST * n / eps_se^2.
/// Calibrated against the Monte-Carlo accuracy suites.
pub const EMBED_ROWS_CONST: f64 = 2.0;
/// Column sparsity of the embedding: EMBED_SPARSITY_CONST * ln(n/delta) / eps_se.
pub const EMBED_SPARSITY_CONST: f64 = 2.0;
/// JL column count: JL_COLS_CONST * ln(4m/delta) / eps_jl^2.
pub const JL_COLS_CONST: f64 = 4.0;
/// Trial count: CHERNOFF_TRIALS_CONST * beta * n * ln(2n/delta) / eps^2.
pub const CHERNOFF_TRIALS_CONST: f64 = 8.0;
/// Probability floor so that rows with (numerically) zero estimated score
/// still have finite sampling weight.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// Approximate leverage scores of A (I - V^T V).
#[derive(Debug, Clone)]
pub struct LeverageEstimate {
    pub scores: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
}

/// A weighted with-replacement row sample. `entries` holds one
/// `(row, 1/sqrt(T p_row))` pair per trial, duplicates kept, so
/// `entries.len()` equals the trial count T.
#[derive(Debug, Clone)]
pub struct SamplingMatrix {
    pub entries: Vec<(usize, f64)>,
    pub source_rows: usize,
}

impl SamplingMatrix {
    /// Collapse duplicate trials: per distinct row, the summed squared
    /// weight (count / (T p_row)). Accumulating rank-1 terms with these
    /// factors reproduces the Gram of the full T-row sample exactly.
    pub fn grouped(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        let mut i = 0;
        while i < self.entries.len() {
            let (row, w) = self.entries[i];
            let mut count = 0usize;
            while i < self.entries.len() && self.entries[i].0 == row {
                count += 1;
                i += 1;
            }
            out.push((row, count as f64 * w * w));
        }
        out
    }
}

/// Leverage scores of B = A (I - V^T V), estimated without forming B.
///
/// Returns scores within (1 +- eps_sigma) of the exact values with
/// probability at least 1 - delta_sigma. A fully annihilated matrix yields
/// all-zero scores.
pub fn implicit_leverage_scores(
    a: &CsrMatrix,
    v: &OrthonormalBasis,
    eps_sigma: f64,
    delta_sigma: f64,
    rng: RngStream,
) -> Result<LeverageEstimate> {
    implicit_leverage_scores_impl(a, v, eps_sigma, delta_sigma, rng, None)
}

/// `s2_override` forces the JL read-off width (tests use it to exercise the
/// sketched branch, which the auto formula only selects at very large n).
pub(crate) fn implicit_leverage_scores_impl(
    a: &CsrMatrix,
    v: &OrthonormalBasis,
    eps_sigma: f64,
    delta_sigma: f64,
    rng: RngStream,
    s2_override: Option<usize>,
) -> Result<LeverageEstimate> {
    if a.n_cols() != v.n() {
        return Err(Error::DimMismatch {
            context: "implicit_leverage_scores",
            expected: v.n(),
            got: a.n_cols(),
        });
    }
    if !(eps_sigma > 0.0 && eps_sigma <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "eps_sigma must lie in (0, 0.5], got {eps_sigma}"
        )));
    }
    if !(delta_sigma > 0.0 && delta_sigma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta_sigma must lie in (0, 1), got {delta_sigma}"
        )));
    }
    let m = a.n_rows();
    let n = a.n_cols();
    // error split between the subspace embedding and the JL read-off
    let eps_se = eps_sigma / 3.0;
    let eps_jl = eps_sigma / 6.0;

    let s1 = ((EMBED_ROWS_CONST * n as f64 / (eps_se * eps_se)).ceil() as usize).max(n);
    let sparsity = ((EMBED_SPARSITY_CONST * (n as f64 / delta_sigma).ln() / eps_se).ceil() as usize)
        .clamp(1, s1);
    let s1_sketch = make_sketch(
        SketchKind::SparseEmbeddingI,
        s1,
        m,
        SketchParams {
            sparsity: Some(sparsity),
            ..Default::default()
        },
        rng.substream(1),
    )?;

    // M = (S1 A)(I - V^T V), projected in place row by row
    let mut m_mat = s1_sketch.apply_left(a)?;
    for r in 0..s1 {
        v.project_out(m_mat.row_mut(r));
    }
    let pr = qr_pivoted_r(&m_mat)?;
    drop(m_mat);

    // N = (I - V^T V) Perm R^+ S2. A JL map wider than the ambient dimension
    // cannot beat the identity, so the column count caps at n and the cap
    // degenerates to the exact read-off.
    let s2_formula = ((JL_COLS_CONST * (4.0 * m as f64 / delta_sigma).ln() / (eps_jl * eps_jl))
        .ceil() as usize)
        .max(1);
    let s2 = s2_override.unwrap_or(s2_formula).min(n);
    let s2_dense = if s2 < n {
        let s2_sketch = make_sketch(
            SketchKind::Gaussian,
            s2,
            n,
            SketchParams {
                scale: Some(1.0 / (s2 as f64).sqrt()),
                ..Default::default()
            },
            rng.substream(2),
        )?;
        s2_sketch.transpose_dense() // n x s2
    } else {
        DenseMatrix::identity(n)
    };
    let mut n_mat = pinv_r_apply(&pr, &s2_dense)?; // n x s2
    if !v.is_empty() {
        let z = basis_times_dense(v, &n_mat); // l x s2
        for k in 0..v.len() {
            let vk = v.row(k);
            for (c, &coeff) in vk.iter().enumerate() {
                if coeff != 0.0 {
                    axpy(n_mat.row_mut(c), -coeff, z.row(k));
                }
            }
        }
    }

    // sigma_j = || (e_j^T A) N ||^2
    let mut buf = vec![0.0; s2];
    let mut scores = Vec::with_capacity(m);
    for j in 0..m {
        buf.iter_mut().for_each(|x| *x = 0.0);
        let (cols, vals) = a.row(j);
        for (&c, &val) in cols.iter().zip(vals.iter()) {
            axpy(&mut buf, val, n_mat.row(c));
        }
        scores.push(buf.iter().map(|x| x * x).sum());
    }
    Ok(LeverageEstimate {
        scores,
        epsilon: eps_sigma,
        delta: delta_sigma,
    })
}

/// Trial count for the Chernoff sampler.
pub fn chernoff_trial_count(beta: f64, eps: f64, delta: f64, n: usize) -> usize {
    (CHERNOFF_TRIALS_CONST * beta * (n as f64) * (2.0 * n as f64 / delta).ln() / (eps * eps)).ceil()
        as usize
}

/// Sample T rows independently with replacement according to
/// `probabilities` (normalized internally), with the reweighting that makes
/// the sampled Gram an unbiased spectral estimate.
pub fn chernoff_row_sample(
    probabilities: &[f64],
    beta: f64,
    eps: f64,
    delta: f64,
    n: usize,
    rng: RngStream,
) -> Result<SamplingMatrix> {
    if probabilities.is_empty() {
        return Err(Error::Empty("sampling probabilities"));
    }
    if let Some(idx) = probabilities.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::NonPositiveProbability { index: idx });
    }
    let total: f64 = probabilities.iter().sum();
    let p: Vec<f64> = probabilities.iter().map(|x| x / total).collect();
    let t = chernoff_trial_count(beta, eps, delta, n).max(1);

    // Multinomial counts drawn as sequential conditional binomials; this is
    // distributionally identical to T categorical draws and much faster.
    let mut gen = rng.rng();
    let mut counts = vec![0u64; p.len()];
    let mut remaining = t as u64;
    let mut rest = 1.0f64;
    for (j, &pj) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if j + 1 == p.len() {
            counts[j] = remaining;
            break;
        }
        let q = (pj / rest).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?
            .sample(&mut gen);
        counts[j] = draw;
        remaining -= draw;
        rest = (rest - pj).max(f64::MIN_POSITIVE);
    }

    let mut entries = Vec::with_capacity(t);
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            let w = 1.0 / (t as f64 * p[j]).sqrt();
            entries.extend(std::iter::repeat((j, w)).take(c as usize));
        }
    }
    debug_assert_eq!(entries.len(), t);
    Ok(SamplingMatrix {
        entries,
        source_rows: probabilities.len(),
    })
}

/// Leverage-score subsampling of the rows of B = A_selected (I - V^T V):
/// estimates scores at constant accuracy, then Chernoff-samples so the
/// reweighted Gram sandwiches B^T B within (1 +- eps_b) w.p. >= 1 - delta_b.
pub fn subsample(
    a_selected: &CsrMatrix,
    v: &OrthonormalBasis,
    eps_b: f64,
    delta_b: f64,
    rng: RngStream,
) -> Result<SamplingMatrix> {
    if !(eps_b > 0.0 && eps_b < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "eps_b must lie in (0, 0.5), got {eps_b}"
        )));
    }
    // constant-accuracy scores; the (1+e)/(1-e) oversampling factor below
    // absorbs the estimation error
    let eps_sigma = 1.0 / 3.0;
    let beta = (1.0 + eps_sigma) / (1.0 - eps_sigma);
    let est = implicit_leverage_scores(a_selected, v, eps_sigma, delta_b / 2.0, rng.substream(1))?;
    let p: Vec<f64> = est.scores.iter().map(|&s| s.max(PROBABILITY_FLOOR)).collect();
    chernoff_row_sample(
        &p,
        beta,
        eps_b,
        delta_b / 2.0,
        a_selected.n_cols(),
        rng.substream(2),
    )
}

/// Gram of the sampled residual rows: sum over distinct sampled rows of
/// factor * b_j b_j^T with b_j = (I - V^T V)^T-projected row j of A.
pub fn sampled_residual_gram(
    a: &CsrMatrix,
    v: &OrthonormalBasis,
    sample: &SamplingMatrix,
) -> Result<DenseMatrix> {
    if a.n_rows() != sample.source_rows {
        return Err(Error::DimMismatch {
            context: "sampled_residual_gram",
            expected: sample.source_rows,
            got: a.n_rows(),
        });
    }
    let n = a.n_cols();
    let mut h = DenseMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    for (row, factor) in sample.grouped() {
        residual_row(a, v, row, &mut b);
        for i in 0..n {
            let f = factor * b[i];
            if f != 0.0 {
                axpy(h.row_mut(i), f, &b);
            }
        }
    }
    Ok(h)
}

/// The sampled rows themselves, one per distinct sampled index, scaled by
/// sqrt(factor); its Gram equals [`sampled_residual_gram`].
pub fn sampled_residual_rows(
    a: &CsrMatrix,
    v: &OrthonormalBasis,
    sample: &SamplingMatrix,
) -> Result<DenseMatrix> {
    if a.n_rows() != sample.source_rows {
        return Err(Error::DimMismatch {
            context: "sampled_residual_rows",
            expected: sample.source_rows,
            got: a.n_rows(),
        });
    }
    let grouped = sample.grouped();
    let n = a.n_cols();
    let mut out = DenseMatrix::zeros(grouped.len(), n);
    for (k, (row, factor)) in grouped.iter().enumerate() {
        let dst = out.row_mut(k);
        residual_row(a, v, *row, dst);
        let s = factor.sqrt();
        dst.iter_mut().for_each(|x| *x *= s);
    }
    Ok(out)
}

fn residual_row(a: &CsrMatrix, v: &OrthonormalBasis, row: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let (cols, vals) = a.row(row);
    for (&c, &val) in cols.iter().zip(vals.iter()) {
        out[c] = val;
    }
    if !v.is_empty() {
        for k in 0..v.len() {
            let coeff = sparse_dot(cols, vals, v.row(k));
            if coeff != 0.0 {
                axpy(out, -coeff, v.row(k));
            }
        }
    }
}
