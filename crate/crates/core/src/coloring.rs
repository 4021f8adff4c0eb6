//! Partial coloring by a projected Gaussian walk, and the outer driver that
//! iterates it to a full +-1 coloring.
//!
//! Each walk round projects fresh Gaussian directions onto the complement of
//! the hereditary-projection basis (plus every coordinate frozen so far),
//! scales the step to stay inside the [-1, 1] box, and freezes coordinates
//! as they touch the boundary. A single exact `||A u||_inf` check at
//! termination replaces per-iteration verification.

use crate::basis::{row_norms_exact, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::leverage::JL_COLS_CONST;
use crate::maintain::MaintainState;
use crate::projection::{
    fast_project_to_small_rows, slow_project_to_small_rows, ProjectionConfig,
};
use crate::rng::RngStream;
use crate::sketch::{gaussian_matrix, make_sketch, sketched_residual_row_norms, SketchKind, SketchParams};
use crate::sparse::CsrMatrix;

/// Smallest admissible discrepancy envelope; keeps the terminal strict
/// comparison meaningful for all-zero inputs.
const BETA_FLOOR: f64 = 1e-12;

/// Coordinates at distance below this from the box boundary after a step are
/// snapped to exactly +-1 and frozen.
const FREEZE_TOL: f64 = 1e-9;

/// Projection columns count below which the walk runs without a hereditary
/// basis (the projection needs at least 8 columns to have anything to cut).
const MIN_PROJECTION_COLS: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct ColoringConfig {
    /// Overall failure budget of the full minimization.
    pub delta_final: f64,
    /// Per-round envelope failure probability.
    pub delta: f64,
    /// Accuracy of the sketched max-row-norm estimate.
    pub eps1: f64,
    /// Batch exponent a; the maintenance batch is K = ceil(n^a).
    pub batch_exponent: f64,
    /// Step size constant: eps = c_eps / sqrt(ln(mn) + n).
    pub c_eps: f64,
    /// Iteration budget constant: N = ceil(c_n (16 eps^-2 + 400 n)).
    pub c_n: f64,
    /// Envelope constant: beta = c_beta * eps * eta * sqrt(N ln(m/delta)).
    pub c_beta: f64,
    /// Use the exact reference paths (slow projection, eager norms).
    pub slow_mode: bool,
}

impl Default for ColoringConfig {
    fn default() -> Self {
        ColoringConfig {
            delta_final: 1e-3,
            delta: 0.01,
            eps1: 0.1,
            batch_exponent: 0.529,
            c_eps: 1.0,
            c_n: 1.0,
            c_beta: 100.0,
            slow_mode: false,
        }
    }
}

impl ColoringConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta_final > 0.0 && self.delta_final <= 0.001) {
            return Err(Error::InvalidParameter(format!(
                "delta_final must lie in (0, 0.001], got {}",
                self.delta_final
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 0.01) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 0.01], got {}",
                self.delta
            )));
        }
        if !(self.eps1 > 0.0 && self.eps1 <= 0.1) {
            return Err(Error::InvalidParameter(format!(
                "eps1 must lie in (0, 0.1], got {}",
                self.eps1
            )));
        }
        if !(0.0..=1.0).contains(&self.batch_exponent) {
            return Err(Error::InvalidParameter(format!(
                "batch_exponent must lie in [0, 1], got {}",
                self.batch_exponent
            )));
        }
        if self.c_beta < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "c_beta must be at least 1, got {}",
                self.c_beta
            )));
        }
        Ok(())
    }
}

/// Sketched estimate of the largest residual row norm.
#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    /// max_j || a_j^T (I - V^T V) R ||, the raw sketched maximum.
    pub eta: f64,
    /// eta / (1 - eps1); upper-bounds the true maximum w.h.p. and is what
    /// the walk envelope consumes.
    pub envelope: f64,
}

/// Estimate max_j ||a_j^T (I - V^T V)||_2 through a JL sketch with
/// r = O(eps1^-2 log(m/delta2)) columns. When the formula asks for at least
/// n columns the sketch cannot beat the identity, so the row norms are
/// computed exactly instead (and the envelope collapses onto eta).
pub fn fast_approx_max_norm(
    a: &CsrMatrix,
    v: &OrthonormalBasis,
    eps1: f64,
    delta2: f64,
    rng: RngStream,
) -> Result<NormEstimate> {
    if a.n_cols() != v.n() {
        return Err(Error::DimMismatch {
            context: "fast_approx_max_norm",
            expected: v.n(),
            got: a.n_cols(),
        });
    }
    if !(eps1 > 0.0 && eps1 <= 0.1) {
        return Err(Error::InvalidParameter(format!(
            "eps1 must lie in (0, 0.1], got {eps1}"
        )));
    }
    let m = a.n_rows().max(1);
    let r = ((JL_COLS_CONST * (2.0 * m as f64 / delta2).ln() / (eps1 * eps1)).ceil() as usize)
        .max(4);
    if r >= v.n() {
        let eta = row_norms_exact(a, v)?.into_iter().fold(0.0f64, f64::max);
        return Ok(NormEstimate { eta, envelope: eta });
    }
    approx_max_norm_with_cols(a, v, eps1, r, rng)
}

/// Sketched maximum residual row norm at an explicit column count.
pub fn approx_max_norm_with_cols(
    a: &CsrMatrix,
    v: &OrthonormalBasis,
    eps1: f64,
    r: usize,
    rng: RngStream,
) -> Result<NormEstimate> {
    let sketch = make_sketch(
        SketchKind::Gaussian,
        r,
        v.n(),
        SketchParams {
            scale: Some(1.0 / (r as f64).sqrt()),
            ..Default::default()
        },
        rng,
    )?;
    let norms = sketched_residual_row_norms(a, v, &sketch)?;
    let eta = norms.into_iter().fold(0.0f64, f64::max);
    Ok(NormEstimate {
        eta,
        envelope: eta / (1.0 - eps1),
    })
}

/// Largest-magnitude scale mu with max(||mu g + b||_inf, ||mu g - b||_inf) = 1,
/// or None when some coordinate with g_i = 0 already violates |b_i| <= 1.
///
/// Coordinates with g_i = 0 and |b_i| <= 1 impose no constraint. When no
/// coordinate constrains the scale at all, the result is +infinity.
pub fn find_boundary(g: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(g.len(), b.len(), "direction/offset length mismatch");
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (&gi, &bi) in g.iter().zip(b.iter()) {
        if gi == 0.0 {
            if bi.abs() > 1.0 {
                return None;
            }
            continue;
        }
        // -1 <= mu g - b <= 1
        let (x1, y1) = sorted_pair((bi - 1.0) / gi, (bi + 1.0) / gi);
        // -1 <= mu g + b <= 1
        let (x2, y2) = sorted_pair((-bi - 1.0) / gi, (-bi + 1.0) / gi);
        lo = lo.max(x1).max(x2);
        hi = hi.min(y1).min(y2);
    }
    if lo > hi {
        return None;
    }
    if lo.abs() <= hi.abs() {
        Some(hi)
    } else {
        Some(lo)
    }
}

#[inline]
fn sorted_pair(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub enum PartialColoringOutcome {
    /// New coloring with at least half the coordinates at exactly +-1 and
    /// the per-row movement bounded by beta.
    Success(Vec<f64>),
    /// The terminal check found ||A u||_inf > beta.
    FailBetaExceeded,
    /// The Gaussian budget ran out before half the coordinates froze.
    FailInsufficientFreeze,
}

/// One walk execution with its diagnostics.
#[derive(Debug, Clone)]
pub struct PartialColoringRun {
    pub outcome: PartialColoringOutcome,
    pub beta: f64,
    pub eta: f64,
    pub eta_envelope: f64,
    pub epsilon: f64,
    pub iteration_budget: usize,
    pub iterations_used: usize,
    pub frozen_count: usize,
    pub basis_rows: usize,
    pub batch_size: usize,
    /// Accumulated movement x_end - x_start, for envelope auditing.
    pub u_end: Vec<f64>,
}

/// Partial coloring of `a` starting from the strictly fractional `x`.
pub fn fast_partial_coloring(
    a: &CsrMatrix,
    x: &[f64],
    cfg: &ColoringConfig,
    rng: RngStream,
) -> Result<PartialColoringOutcome> {
    run_partial_coloring(a, x, cfg, rng).map(|r| r.outcome)
}

/// Same as [`fast_partial_coloring`] but returns the full run record.
pub fn run_partial_coloring(
    a: &CsrMatrix,
    x: &[f64],
    cfg: &ColoringConfig,
    rng: RngStream,
) -> Result<PartialColoringRun> {
    cfg.validate()?;
    let n = a.n_cols();
    let m = a.n_rows();
    if m == 0 || n == 0 {
        return Err(Error::Empty("partial coloring input"));
    }
    if x.len() != n {
        return Err(Error::DimMismatch {
            context: "fast_partial_coloring",
            expected: n,
            got: x.len(),
        });
    }
    if let Some(i) = x.iter().position(|v| v.abs() >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "starting coloring must be strictly inside the box; |x[{i}]| >= 1"
        )));
    }

    let delta1 = (cfg.delta_final * cfg.delta_final) / (n as f64 * n as f64);
    let delta2 = delta1;

    // hereditary projection basis (skipped below the minimum column count,
    // where the n/8-row budget rounds to nothing anyway)
    let v = if n >= MIN_PROJECTION_COLS {
        let pcfg = ProjectionConfig {
            delta: delta1,
            ..ProjectionConfig::default()
        };
        if cfg.slow_mode {
            slow_project_to_small_rows(a, &pcfg)?.basis
        } else {
            fast_project_to_small_rows(a, &pcfg, rng.substream(1))?.basis
        }
    } else {
        OrthonormalBasis::empty(n)
    };

    let norm_est = if cfg.slow_mode {
        let eta = row_norms_exact(a, &v)?.into_iter().fold(0.0f64, f64::max);
        NormEstimate { eta, envelope: eta }
    } else {
        fast_approx_max_norm(a, &v, cfg.eps1, delta2, rng.substream(2))?
    };

    let eps = cfg.c_eps / (((m * n) as f64).ln() + n as f64).sqrt();
    let budget = (cfg.c_n * (16.0 / (eps * eps) + 400.0 * n as f64)).ceil() as usize;
    let beta = (cfg.c_beta
        * eps
        * norm_est.envelope
        * (budget as f64 * (m as f64 / cfg.delta).ln()).sqrt())
    .max(BETA_FLOOR);

    let g_all = gaussian_matrix(n, budget, rng.substream(3));
    let batch = ((n as f64).powf(cfg.batch_exponent).ceil() as usize).clamp(1, budget);
    let mut ds = if cfg.slow_mode {
        None
    } else {
        Some(MaintainState::init(&v, g_all.clone(), batch)?)
    };
    let mut v_eager = if cfg.slow_mode { Some(v.clone()) } else { None };

    let mut y = x.to_vec();
    let mut frozen = vec![false; n];
    let mut frozen_count = 0usize;
    let mut unit = vec![0.0; n];

    for t in 0..budget {
        let mut g = match (&mut ds, &v_eager) {
            (Some(ds), _) => ds.query()?,
            (None, Some(ve)) => crate::basis::project_complement(ve, &g_all.col_copy(t))?,
            _ => unreachable!(),
        };
        // frozen coordinates are exactly zero in exact arithmetic; enforce it
        for (i, gi) in g.iter_mut().enumerate() {
            if frozen[i] {
                *gi = 0.0;
            }
        }
        // boundary scale; the +-pair constraints make the feasible interval
        // symmetric, so the magnitude is the positive boundary scale
        let mu = match find_boundary(&g, &y) {
            Some(v) => v.abs(),
            None => 0.0,
        };
        let step = eps.min(mu);
        let mut newly_frozen: Vec<usize> = Vec::new();
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            let cand = y[i] + step * g[i];
            if cand.abs() >= 1.0 - FREEZE_TOL {
                // snap to the boundary exactly; the walk never moves it again
                y[i] = if cand >= 0.0 { 1.0 } else { -1.0 };
                newly_frozen.push(i);
            } else {
                y[i] = cand;
            }
        }
        for &i in &newly_frozen {
            frozen[i] = true;
            frozen_count += 1;
            match (&mut ds, &mut v_eager) {
                (Some(ds), _) => ds.update_coordinate(i)?,
                (None, Some(ve)) => {
                    unit.iter_mut().for_each(|z| *z = 0.0);
                    unit[i] = 1.0;
                    crate::basis::orthogonalize(ve, &unit)?;
                }
                _ => unreachable!(),
            }
        }
        assert!(
            y.iter().all(|v| v.abs() <= 1.0 + 1e-12),
            "box invariant violated at iteration {t}"
        );
        if 2 * frozen_count >= n {
            let u_end: Vec<f64> = y.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let moved = a.inf_norm_apply(&u_end)?;
            let outcome = if moved > beta {
                PartialColoringOutcome::FailBetaExceeded
            } else {
                PartialColoringOutcome::Success(y.clone())
            };
            return Ok(PartialColoringRun {
                outcome,
                beta,
                eta: norm_est.eta,
                eta_envelope: norm_est.envelope,
                epsilon: eps,
                iteration_budget: budget,
                iterations_used: t + 1,
                frozen_count,
                basis_rows: v.len(),
                batch_size: batch,
                u_end,
            });
        }
    }
    let u_end: Vec<f64> = y.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
    Ok(PartialColoringRun {
        outcome: PartialColoringOutcome::FailInsufficientFreeze,
        beta,
        eta: norm_est.eta,
        eta_envelope: norm_est.envelope,
        epsilon: eps,
        iteration_budget: budget,
        iterations_used: budget,
        frozen_count,
        basis_rows: v.len(),
        batch_size: batch,
        u_end,
    })
}

/// Full minimization record.
#[derive(Debug, Clone)]
pub struct HereditaryRun {
    pub coloring: Vec<i8>,
    pub outer_rounds: usize,
    pub retries_per_round: Vec<usize>,
    /// Diagnostics of the first (full-size) successful walk.
    pub first_round: Option<PartialColoringRun>,
}

/// Round a fractional start to a full coloring in {-1, +1}^n by repeated
/// partial coloring over the still-fractional coordinates.
pub fn fast_hereditary_minimize(
    a: &CsrMatrix,
    delta_final: f64,
    cfg: &ColoringConfig,
    rng: RngStream,
) -> Result<Vec<i8>> {
    run_hereditary_minimize(a, delta_final, cfg, rng).map(|r| r.coloring)
}

/// Same as [`fast_hereditary_minimize`] with the full run record.
pub fn run_hereditary_minimize(
    a: &CsrMatrix,
    delta_final: f64,
    cfg: &ColoringConfig,
    rng: RngStream,
) -> Result<HereditaryRun> {
    let n = a.n_cols();
    let cfg = ColoringConfig {
        delta_final,
        ..*cfg
    };
    cfg.validate()?;
    let mut x = vec![0.0f64; n];
    let retry_cap = ((10.0 * (n as f64 / delta_final).ln()).ceil() as usize).max(1);
    let mut retries_per_round = Vec::new();
    let mut first_round: Option<PartialColoringRun> = None;
    let mut round = 0usize;
    loop {
        let alive: Vec<usize> = (0..n).filter(|&i| x[i].abs() < 1.0).collect();
        if alive.is_empty() {
            break;
        }
        let sub = a.select_columns(&alive)?;
        let x_sub: Vec<f64> = alive.iter().map(|&i| x[i]).collect();
        let mut succeeded = false;
        for retry in 0..retry_cap {
            let attempt_rng = rng
                .substream(0x436f_6c6f)
                .substream(round as u64)
                .substream(retry as u64);
            let run = run_partial_coloring(&sub, &x_sub, &cfg, attempt_rng)?;
            let is_success = matches!(run.outcome, PartialColoringOutcome::Success(_));
            if round == 0 && first_round.is_none() && is_success {
                first_round = Some(run.clone());
            }
            if let PartialColoringOutcome::Success(x_new) = run.outcome {
                for (j, &i) in alive.iter().enumerate() {
                    x[i] = x_new[j];
                }
                retries_per_round.push(retry + 1);
                succeeded = true;
                break;
            }
        }
        if !succeeded {
            return Err(Error::RetriesExhausted {
                round,
                retries: retry_cap,
            });
        }
        round += 1;
    }
    let coloring: Vec<i8> = x
        .iter()
        .map(|&v| {
            debug_assert!(v == 1.0 || v == -1.0);
            if v >= 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok(HereditaryRun {
        coloring,
        outer_rounds: round,
        retries_per_round,
        first_round,
    })
}
