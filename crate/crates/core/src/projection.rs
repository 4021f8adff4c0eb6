//! Hereditary projection: build an orthonormal basis V with at most n/4 rows
//! so that every row of A (I - V^T V) is short.
//!
//! The fast path ranks rows by sketched residual norms, leverage-subsamples
//! the heavy block, and absorbs its top eigenvectors; after a logarithmic
//! number of halving rounds the few surviving heavy rows are orthogonalized
//! in directly. The slow path runs the same schedule with exact norms and
//! exact Grams and serves as the reference.

use crate::basis::{orthogonalize, row_norms_exact, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::factor::sym_eig_desc;
use crate::leverage::{sampled_residual_gram, subsample};
use crate::rng::RngStream;
use crate::sketch::{make_sketch, sketched_residual_row_norms, SketchKind, SketchParams};
use crate::sparse::CsrMatrix;

/// Eigenvalues below this fraction of the leading one are treated as zero
/// when deciding which eigenvectors to absorb.
const EIGENVALUE_CUT: f64 = 1e-12;

/// Slow-path size guard.
const SLOW_PATH_MAX_ENTRIES: usize = 4_000_000;

#[derive(Debug, Clone, Copy)]
pub struct ProjectionConfig {
    /// Norm-bound constant in the certified residual guarantee.
    pub c0: f64,
    /// Slack constant appearing next to `c0` in the guarantee.
    pub eps0: f64,
    /// Spectral accuracy of the per-round subsampling.
    pub eps_b: f64,
    /// Overall failure budget, split across rounds internally.
    pub delta: f64,
    /// Multiplier on the JL column-count formula.
    pub jl_rows_constant: f64,
    /// Accuracy actually used when sizing the row-selection sketch.
    pub select_eps: f64,
    /// Use the sketched row selection even when the sketch would be at least
    /// as wide as the ambient dimension (where exact norms are cheaper and
    /// the automatic policy prefers them).
    pub force_sketched_selection: bool,
    /// Record exact residual norms after every round (test instrumentation;
    /// costs an extra pass over A per round).
    pub collect_exact_residuals: bool,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            c0: 1000.0,
            eps0: 0.01,
            eps_b: 0.1,
            delta: 0.01,
            jl_rows_constant: 4.0,
            select_eps: 0.25,
            force_sketched_selection: false,
            collect_exact_residuals: false,
        }
    }
}

impl ProjectionConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 <= 0.05) {
            return Err(Error::InvalidParameter(format!(
                "eps0 must lie in (0, 0.05], got {}",
                self.eps0
            )));
        }
        if !(self.eps_b > 0.0 && self.eps_b < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "eps_b must lie in (0, 0.5), got {}",
                self.eps_b
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RoundStats {
    /// Bound on heavy rows surviving this round (m / 2^t).
    pub m_t: usize,
    /// Basis size after the round.
    pub l_t: usize,
    /// Rows selected into the heavy block.
    pub rows_selected: usize,
    /// Trials drawn by the subsampler.
    pub subsample_size: usize,
    /// Exact residual row norms after the round, when collection is enabled.
    pub exact_residual_norms: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub basis: OrthonormalBasis,
    pub iterations: usize,
    pub per_round_stats: Vec<RoundStats>,
}

fn round_schedule(m: usize, n: usize) -> (usize, usize, usize) {
    let t = ((8.0 * m as f64 / n as f64).log2().ceil() as usize).max(1);
    let loop_budget = n / 8;
    let per_round = n.div_ceil(8 * t);
    (t, loop_budget, per_round)
}

fn check_shape(a: &CsrMatrix) -> Result<()> {
    if a.n_cols() < 8 {
        return Err(Error::InvalidParameter(format!(
            "projection needs at least 8 columns, got {}",
            a.n_cols()
        )));
    }
    Ok(())
}

/// Indices of the `count` largest values, ties broken toward smaller index,
/// returned in ascending index order.
fn top_rows(norms: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..norms.len()).collect();
    idx.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap()
            .then_with(|| i.cmp(&j))
    });
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// Randomized hereditary projection of `a` (padded with zero rows when
/// m < n). The returned basis has at most n/4 orthonormal rows.
pub fn fast_project_to_small_rows(
    a: &CsrMatrix,
    cfg: &ProjectionConfig,
    rng: RngStream,
) -> Result<ProjectionResult> {
    check_shape(a)?;
    cfg.validate()?;
    let n = a.n_cols();
    let padded;
    let a = if a.n_rows() < n {
        padded = a.pad_rows(n);
        &padded
    } else {
        a
    };
    let m = a.n_rows();
    let (t_rounds, loop_budget, per_round) = round_schedule(m, n);
    let delta0 = cfg.delta / (4.0 * m as f64 * t_rounds as f64);
    let delta_b = cfg.delta / (4.0 * t_rounds as f64);
    let jl_cols = {
        let by_formula = ((cfg.jl_rows_constant * (1.0 / delta0).ln()
            / (cfg.select_eps * cfg.select_eps))
            .ceil() as usize)
            .max(4);
        if cfg.force_sketched_selection {
            by_formula.min((n / 2).max(4))
        } else {
            by_formula
        }
    };

    let mut v = OrthonormalBasis::empty(n);
    let mut stats = Vec::with_capacity(t_rounds);
    let mut appended = 0usize;
    for t in 1..=t_rounds {
        if appended >= loop_budget {
            break;
        }
        let round_rng = rng.substream(t as u64);
        let m_sel = (m.div_ceil(1 << (t - 1))).min(m).max(1);
        let selected: Vec<usize> = if m_sel >= m {
            (0..m).collect()
        } else if jl_cols < n || cfg.force_sketched_selection {
            let jl = make_sketch(
                SketchKind::Gaussian,
                jl_cols,
                n,
                SketchParams {
                    scale: Some(1.0 / (jl_cols as f64).sqrt()),
                    ..Default::default()
                },
                round_rng.substream(1),
            )?;
            let norms = sketched_residual_row_norms(a, &v, &jl)?;
            top_rows(&norms, m_sel)
        } else {
            // a selection sketch at least n wide cannot beat exact norms
            let norms = row_norms_exact(a, &v)?;
            top_rows(&norms, m_sel)
        };
        let a_sel = a.select_rows(&selected)?;
        let sample = subsample(&a_sel, &v, cfg.eps_b, delta_b, round_rng.substream(2))?;
        let gram = sampled_residual_gram(&a_sel, &v, &sample)?;
        let (vals, vecs) = sym_eig_desc(&gram)?;
        let take = per_round.min(loop_budget - appended);
        for k in 0..take.min(vals.len()) {
            if vals[k] <= EIGENVALUE_CUT * vals[0].max(0.0) || vals[k] <= 0.0 {
                break;
            }
            if orthogonalize(&mut v, vecs.row(k))? {
                appended += 1;
            }
        }
        stats.push(RoundStats {
            m_t: m.div_ceil(1 << t),
            l_t: v.len(),
            rows_selected: selected.len(),
            subsample_size: sample.entries.len(),
            exact_residual_norms: if cfg.collect_exact_residuals {
                Some(row_norms_exact(a, &v)?)
            } else {
                None
            },
        });
    }

    finale(a, &mut v, n)?;
    Ok(ProjectionResult {
        basis: v,
        iterations: t_rounds,
        per_round_stats: stats,
    })
}

/// Deterministic reference: exact residual norms, exact heavy-block Gram,
/// exact eigendecomposition. Same schedule and output contract as the fast
/// path, with the sketching and sampling slack removed.
pub fn slow_project_to_small_rows(a: &CsrMatrix, cfg: &ProjectionConfig) -> Result<ProjectionResult> {
    check_shape(a)?;
    cfg.validate()?;
    let n = a.n_cols();
    let padded;
    let a = if a.n_rows() < n {
        padded = a.pad_rows(n);
        &padded
    } else {
        a
    };
    let m = a.n_rows();
    if m * n > SLOW_PATH_MAX_ENTRIES {
        return Err(Error::TooLarge {
            what: "slow projection input (rows x cols)",
            limit: SLOW_PATH_MAX_ENTRIES,
            got: m * n,
        });
    }
    let (t_rounds, loop_budget, per_round) = round_schedule(m, n);
    let mut v = OrthonormalBasis::empty(n);
    let mut stats = Vec::with_capacity(t_rounds);
    let mut appended = 0usize;
    let mut resid = vec![0.0; n];
    for t in 1..=t_rounds {
        if appended >= loop_budget {
            break;
        }
        let m_sel = (m.div_ceil(1 << (t - 1))).min(m).max(1);
        let norms = row_norms_exact(a, &v)?;
        let selected = top_rows(&norms, m_sel);
        // exact Gram of the selected residual rows
        let mut gram = crate::dense::DenseMatrix::zeros(n, n);
        for &r in &selected {
            resid.iter_mut().for_each(|x| *x = 0.0);
            let (cols, vals) = a.row(r);
            for (&c, &val) in cols.iter().zip(vals.iter()) {
                resid[c] = val;
            }
            v.project_out(&mut resid);
            for i in 0..n {
                let ri = resid[i];
                if ri != 0.0 {
                    let grow = gram.row_mut(i);
                    for (g, &rj) in grow.iter_mut().zip(resid.iter()) {
                        *g += ri * rj;
                    }
                }
            }
        }
        let (vals, vecs) = sym_eig_desc(&gram)?;
        let take = per_round.min(loop_budget - appended);
        for k in 0..take.min(vals.len()) {
            if vals[k] <= EIGENVALUE_CUT * vals[0].max(0.0) || vals[k] <= 0.0 {
                break;
            }
            if orthogonalize(&mut v, vecs.row(k))? {
                appended += 1;
            }
        }
        stats.push(RoundStats {
            m_t: m.div_ceil(1 << t),
            l_t: v.len(),
            rows_selected: selected.len(),
            subsample_size: 0,
            exact_residual_norms: if cfg.collect_exact_residuals {
                Some(row_norms_exact(a, &v)?)
            } else {
                None
            },
        });
    }
    finale(a, &mut v, n)?;
    Ok(ProjectionResult {
        basis: v,
        iterations: t_rounds,
        per_round_stats: stats,
    })
}

/// Absorb the n/8 heaviest exact residual rows directly into the basis,
/// keeping the total at or below n/4 rows.
fn finale(a: &CsrMatrix, v: &mut OrthonormalBasis, n: usize) -> Result<()> {
    let final_budget = n / 8;
    if final_budget == 0 {
        return Ok(());
    }
    let norms = row_norms_exact(a, v)?;
    let heavy = top_rows(&norms, final_budget);
    let mut row_buf = vec![0.0; n];
    for &r in &heavy {
        if v.len() >= n / 4 {
            break;
        }
        if norms[r] == 0.0 {
            continue;
        }
        row_buf.iter_mut().for_each(|x| *x = 0.0);
        let (cols, vals) = a.row(r);
        for (&c, &val) in cols.iter().zip(vals.iter()) {
            row_buf[c] = val;
        }
        orthogonalize(v, &row_buf)?;
    }
    debug_assert!(v.len() <= n / 4);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn stream(seed: u64) -> RngStream {
        RngStream::new(seed, 0)
    }

    fn random_pm1(m: usize, n: usize, seed: u64) -> CsrMatrix {
        let mut rng = stream(seed).substream(31).rng();
        let trips: Vec<(usize, usize, f64)> = (0..m)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, if rng.gen::<bool>() { 1.0 } else { -1.0 }))
            .collect();
        CsrMatrix::from_triplets(m, n, &trips).unwrap()
    }

    #[test]
    fn identity_matrix_small_basis() {
        let a = CsrMatrix::identity(16);
        let cfg = ProjectionConfig::default();
        let res = fast_project_to_small_rows(&a, &cfg, stream(1)).unwrap();
        assert!(res.basis.len() <= 4);
        assert!(res.basis.gram_max_error() <= 1e-8);
        // every residual row of the identity is already short
        let norms = row_norms_exact(&a, &res.basis).unwrap();
        assert!(norms.iter().all(|&x| x <= 1.0 + 1e-9));
    }

    #[test]
    fn zero_matrix_keeps_empty_basis() {
        let a = CsrMatrix::zeros(16, 8);
        let cfg = ProjectionConfig::default();
        let res = fast_project_to_small_rows(&a, &cfg, stream(2)).unwrap();
        assert_eq!(res.basis.len(), 0);
        let norms = row_norms_exact(&a, &res.basis).unwrap();
        assert!(norms.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_tiny_column_count() {
        let a = CsrMatrix::identity(4);
        let cfg = ProjectionConfig::default();
        assert!(fast_project_to_small_rows(&a, &cfg, stream(0)).is_err());
        assert!(slow_project_to_small_rows(&a, &cfg).is_err());
    }

    #[test]
    fn pads_wide_inputs() {
        // m < n: zero rows are padded in and never selected into the basis
        let a = random_pm1(6, 12, 3);
        let cfg = ProjectionConfig::default();
        let res = fast_project_to_small_rows(&a, &cfg, stream(3)).unwrap();
        assert!(res.basis.len() <= 3);
    }

    #[test]
    fn rank_one_matrix_is_absorbed_in_one_round() {
        // all-ones 32 x 8: a single eigenvector kills every row
        let trips: Vec<(usize, usize, f64)> = (0..32)
            .flat_map(|r| (0..8).map(move |c| (r, c, 1.0)))
            .collect();
        let a = CsrMatrix::from_triplets(32, 8, &trips).unwrap();
        let mut cfg = ProjectionConfig::default();
        cfg.collect_exact_residuals = true;
        let res = slow_project_to_small_rows(&a, &cfg).unwrap();
        let after_round_1 = res.per_round_stats[0].exact_residual_norms.as_ref().unwrap();
        assert!(after_round_1.iter().all(|&x| x <= 1e-9));
    }

    #[test]
    fn slow_path_structural_contract() {
        let a = random_pm1(64, 16, 7);
        let cfg = ProjectionConfig::default();
        let res = slow_project_to_small_rows(&a, &cfg).unwrap();
        assert!(res.basis.len() <= 4);
        assert!(res.basis.gram_max_error() <= 1e-8);
        assert_eq!(res.iterations, 5); // ceil(log2(8 * 64 / 16))
    }

    #[test]
    fn slow_path_is_deterministic() {
        let a = random_pm1(40, 16, 9);
        let cfg = ProjectionConfig::default();
        let r1 = slow_project_to_small_rows(&a, &cfg).unwrap();
        let r2 = slow_project_to_small_rows(&a, &cfg).unwrap();
        assert_eq!(r1.basis.to_dense(), r2.basis.to_dense());
    }

    #[test]
    fn monotone_residuals_across_rounds() {
        let a = random_pm1(48, 16, 11);
        let mut cfg = ProjectionConfig::default();
        cfg.collect_exact_residuals = true;
        let res = fast_project_to_small_rows(&a, &cfg, stream(11)).unwrap();
        let mut prev_max = f64::INFINITY;
        for round in &res.per_round_stats {
            let norms = round.exact_residual_norms.as_ref().unwrap();
            let max = norms.iter().cloned().fold(0.0f64, f64::max);
            assert!(max <= prev_max + 1e-8);
            prev_max = max;
        }
    }

    #[test]
    fn fast_tracks_slow_within_factor_four() {
        let mut bad = 0;
        for seed in 0..100 {
            let a = random_pm1(512, 32, 400 + seed);
            let cfg = ProjectionConfig::default();
            let fast = fast_project_to_small_rows(&a, &cfg, stream(seed)).unwrap();
            let slow = slow_project_to_small_rows(&a, &cfg).unwrap();
            let fmax = row_norms_exact(&a, &fast.basis)
                .unwrap()
                .into_iter()
                .fold(0.0f64, f64::max);
            let smax = row_norms_exact(&a, &slow.basis)
                .unwrap()
                .into_iter()
                .fold(0.0f64, f64::max);
            if fmax > 4.0 * smax {
                bad += 1;
            }
            assert!(fast.basis.len() <= 8);
        }
        assert!(bad <= 5, "{bad}/100 fast runs exceeded 4x the slow residual");
    }

    #[test]
    fn forced_sketched_selection_keeps_contracts() {
        let a = random_pm1(128, 16, 19);
        let cfg = ProjectionConfig {
            force_sketched_selection: true,
            ..ProjectionConfig::default()
        };
        let res = fast_project_to_small_rows(&a, &cfg, stream(19)).unwrap();
        assert!(res.basis.len() <= 4);
        assert!(res.basis.gram_max_error() <= 1e-8);
        // deterministic under the same stream
        let res2 = fast_project_to_small_rows(&a, &cfg, stream(19)).unwrap();
        assert_eq!(res.basis.to_dense(), res2.basis.to_dense());
    }

    #[test]
    fn never_materializes_the_projected_matrix() {
        // tall enough that every n-driven sketch dimension stays below m, so
        // any dense allocation with both dims at full size must be the
        // forbidden m x n intermediate
        let mut rng = stream(5).substream(1).rng();
        let mut trips = Vec::new();
        for r in 0..10_000usize {
            for c in 0..16usize {
                if rng.gen::<f64>() < 0.02 {
                    trips.push((r, c, if rng.gen::<bool>() { 1.0 } else { -1.0 }));
                }
            }
        }
        let a = CsrMatrix::from_triplets(10_000, 16, &trips).unwrap();
        let cfg = ProjectionConfig::default();
        crate::dense::alloc_watch::start();
        let res = fast_project_to_small_rows(&a, &cfg, stream(5)).unwrap();
        let shapes = crate::dense::alloc_watch::stop();
        let m = a.n_rows();
        let n = a.n_cols();
        assert!(res.per_round_stats.len() >= 2, "want the sketched-selection round to run");
        assert!(
            shapes.iter().all(|&(r, c)| r < m || c < n),
            "allocated a dense m x n intermediate: {shapes:?}"
        );
    }
}
