//! Lazily maintained Gaussian projections.
//!
//! The coloring walk needs (I - V^T V) g for a stream of pre-drawn Gaussian
//! columns g while V keeps growing by coordinate directions. Instead of
//! touching the n x n projector on every update, the structure caches
//! P = V^T V as of the last restart plus up to K pending rank-1 corrections,
//! pre-projects the current window of K Gaussian columns, and folds
//! corrections in batch when either counter reaches K.

use crate::basis::{axpy, dot, orthogonalize, project_complement, OrthonormalBasis};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Residual threshold below which an update is already represented and is
/// silently skipped.
const UPDATE_DROP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct MaintainState {
    n: usize,
    total: usize, // number of Gaussian columns N
    k_cap: usize, // batch size K
    p: DenseMatrix,       // n x n cached projector V^T V at last restart
    g: DenseMatrix,       // n x N pre-drawn Gaussians
    g_tilde: DenseMatrix, // n x K pre-projected window P * G[:, window]
    w: DenseMatrix,       // K x n pending corrections (rows 0..k_u in use)
    k_u: usize,
    k_q: usize,
    tau_q: usize,        // global queries served
    window_start: usize, // global index of the first column in the window
    last_op_muladds: u64,
}

impl MaintainState {
    /// Build the structure from the starting basis and the full Gaussian
    /// budget. `k` is the batch size.
    pub fn init(v: &OrthonormalBasis, g: DenseMatrix, k: usize) -> Result<Self> {
        let n = v.n();
        if g.n_rows() != n {
            return Err(Error::DimMismatch {
                context: "MaintainState::init",
                expected: n,
                got: g.n_rows(),
            });
        }
        let total = g.n_cols();
        if total == 0 {
            return Err(Error::Empty("gaussian budget"));
        }
        if k == 0 || k > total {
            return Err(Error::InvalidParameter(format!(
                "batch size {k} out of range for {total} columns"
            )));
        }
        let mut st = MaintainState {
            n,
            total,
            k_cap: k,
            p: v.projector(),
            g,
            g_tilde: DenseMatrix::zeros(n, k),
            w: DenseMatrix::zeros(k, n),
            k_u: 0,
            k_q: 0,
            tau_q: 0,
            window_start: 0,
            last_op_muladds: 0,
        };
        st.refill_window();
        Ok(st)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn batch_size(&self) -> usize {
        self.k_cap
    }

    pub fn queries_served(&self) -> usize {
        self.tau_q
    }

    pub fn pending_updates(&self) -> usize {
        self.k_u
    }

    /// Multiply-add count of the most recent query/update, excluding any
    /// restart it may have triggered.
    pub fn last_op_muladds(&self) -> u64 {
        self.last_op_muladds
    }

    pub fn projector(&self) -> &DenseMatrix {
        &self.p
    }

    /// Serve the next Gaussian column projected onto the complement of the
    /// current span: g - g_tilde - sum_i w_i (w_i^T g).
    pub fn query(&mut self) -> Result<Vec<f64>> {
        if self.tau_q >= self.total {
            return Err(Error::GaussianBudget { served: self.tau_q });
        }
        if self.k_q >= self.k_cap {
            self.restart();
        }
        let col = self.window_start + self.k_q;
        let gcol = self.g.col_copy(col);
        let mut out = gcol.clone();
        for (r, x) in out.iter_mut().enumerate() {
            *x -= self.g_tilde.get(r, self.k_q);
        }
        let mut ops = self.n as u64;
        for i in 0..self.k_u {
            let wi = self.w.row(i);
            let c = dot(wi, &gcol);
            // safe to mutate `out` here: wi borrows self.w, out is local
            for (o, &w) in out.iter_mut().zip(wi.iter()) {
                *o -= c * w;
            }
            ops += 2 * self.n as u64;
        }
        self.last_op_muladds = ops;
        self.k_q += 1;
        self.tau_q += 1;
        Ok(out)
    }

    /// Absorb a frozen coordinate direction. `u` must be a 1-sparse vector
    /// with its single nonzero equal to 1.
    pub fn update(&mut self, u: &[f64]) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::DimMismatch {
                context: "MaintainState::update",
                expected: self.n,
                got: u.len(),
            });
        }
        let mut idx = None;
        for (i, &x) in u.iter().enumerate() {
            if x != 0.0 {
                if x != 1.0 || idx.is_some() {
                    return Err(Error::InvalidParameter(
                        "update vector must be 1-sparse with value 1".into(),
                    ));
                }
                idx = Some(i);
            }
        }
        let idx = idx.ok_or_else(|| {
            Error::InvalidParameter("update vector must have exactly one nonzero".into())
        })?;
        self.update_coordinate(idx)
    }

    /// Same as [`update`](Self::update) for the standard basis vector e_idx.
    pub fn update_coordinate(&mut self, idx: usize) -> Result<()> {
        if idx >= self.n {
            return Err(Error::DimMismatch {
                context: "MaintainState::update_coordinate",
                expected: self.n,
                got: idx,
            });
        }
        // residual of e_idx against P and the pending corrections:
        // w~ = e_idx - P[:, idx] - sum_i w_i w_i[idx]
        let mut wt: Vec<f64> = self.p.row(idx).iter().map(|&x| -x).collect();
        wt[idx] += 1.0;
        let mut ops = self.n as u64;
        for i in 0..self.k_u {
            let wi = self.w.row(i);
            let c = wi[idx];
            if c != 0.0 {
                for (o, &w) in wt.iter_mut().zip(wi.iter()) {
                    *o -= c * w;
                }
            }
            ops += self.n as u64;
        }
        self.last_op_muladds = ops;
        let norm = dot(&wt, &wt).sqrt();
        if norm <= UPDATE_DROP_TOL {
            // coordinate already in the span; no slot consumed
            return Ok(());
        }
        for x in wt.iter_mut() {
            *x /= norm;
        }
        self.w.row_mut(self.k_u).copy_from_slice(&wt);
        self.k_u += 1;
        if self.k_u >= self.k_cap {
            self.restart();
        }
        Ok(())
    }

    /// Fold pending corrections into P, reposition the window at the next
    /// unserved column, and re-project it.
    fn restart(&mut self) {
        for i in 0..self.k_u {
            let wi = self.w.row(i).to_vec();
            for (r, &wr) in wi.iter().enumerate() {
                if wr != 0.0 {
                    axpy(self.p.row_mut(r), wr, &wi);
                }
            }
        }
        for i in 0..self.k_u {
            self.w.row_mut(i).iter_mut().for_each(|x| *x = 0.0);
        }
        self.k_u = 0;
        self.k_q = 0;
        self.window_start = self.tau_q;
        self.refill_window();
    }

    fn refill_window(&mut self) {
        let hi = (self.window_start + self.k_cap).min(self.total);
        for (slot, col) in (self.window_start..hi).enumerate() {
            for r in 0..self.n {
                let prow = self.p.row(r);
                let mut acc = 0.0;
                for (c, &pv) in prow.iter().enumerate() {
                    if pv != 0.0 {
                        acc += pv * self.g.get(c, col);
                    }
                }
                self.g_tilde.set(r, slot, acc);
            }
        }
    }
}

/// Batched run of the data structure over a freeze schedule: query column t,
/// then absorb every coordinate listed in `schedule[t]`.
pub fn fast_maintain(
    v0: &OrthonormalBasis,
    schedule: &[Vec<usize>],
    g: &DenseMatrix,
    k: usize,
) -> Result<Vec<Vec<f64>>> {
    if schedule.len() != g.n_cols() {
        return Err(Error::DimMismatch {
            context: "fast_maintain (schedule length)",
            expected: g.n_cols(),
            got: schedule.len(),
        });
    }
    let mut ds = MaintainState::init(v0, g.clone(), k)?;
    let mut out = Vec::with_capacity(g.n_cols());
    for frozen in schedule {
        out.push(ds.query()?);
        for &i in frozen {
            ds.update_coordinate(i)?;
        }
    }
    Ok(out)
}

/// Eager reference: recompute the projection against an explicitly grown
/// basis for every column. `schedule[t]` lists the coordinates frozen right
/// after query t.
pub fn slow_maintain(
    v0: &OrthonormalBasis,
    schedule: &[Vec<usize>],
    g: &DenseMatrix,
) -> Result<Vec<Vec<f64>>> {
    if g.n_rows() != v0.n() {
        return Err(Error::DimMismatch {
            context: "slow_maintain",
            expected: v0.n(),
            got: g.n_rows(),
        });
    }
    if schedule.len() != g.n_cols() {
        return Err(Error::DimMismatch {
            context: "slow_maintain (schedule length)",
            expected: g.n_cols(),
            got: schedule.len(),
        });
    }
    let n = v0.n();
    let mut v = v0.clone();
    let mut out = Vec::with_capacity(g.n_cols());
    let mut e = vec![0.0; n];
    for t in 0..g.n_cols() {
        let col = g.col_copy(t);
        out.push(project_complement(&v, &col)?);
        for &i in &schedule[t] {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[i] = 1.0;
            orthogonalize(&mut v, &e)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::sketch::gaussian_matrix;
    use rand::Rng;

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }

    fn random_basis(n: usize, l: usize, seed: u64) -> OrthonormalBasis {
        use rand_distr::StandardNormal;
        let mut rng = RngStream::new(seed, 3).rng();
        let mut v = OrthonormalBasis::empty(n);
        while v.len() < l {
            let s: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            orthogonalize(&mut v, &s).unwrap();
        }
        v
    }

    #[test]
    fn empty_basis_returns_columns_verbatim() {
        let n = 6;
        let g = gaussian_matrix(n, 8, RngStream::new(1, 0));
        let v = OrthonormalBasis::empty(n);
        let mut ds = MaintainState::init(&v, g.clone(), 3).unwrap();
        let out = ds.query().unwrap();
        assert_eq!(out, g.col_copy(0));
    }

    #[test]
    fn full_basis_annihilates_everything() {
        let n = 5;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| unit(n, i)).collect();
        let v = OrthonormalBasis::from_rows(n, rows, 1e-12).unwrap();
        let g = gaussian_matrix(n, 4, RngStream::new(2, 0));
        let mut ds = MaintainState::init(&v, g, 2).unwrap();
        for _ in 0..4 {
            let out = ds.query().unwrap();
            assert!(out.iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn init_projector_is_idempotent() {
        let v = random_basis(12, 5, 4);
        let g = gaussian_matrix(12, 6, RngStream::new(4, 1));
        let ds = MaintainState::init(&v, g, 3).unwrap();
        let p = ds.projector();
        let p2 = p.matmul(p).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert!((p2.get(i, j) - p.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn updated_coordinate_is_zeroed_in_queries() {
        let n = 8;
        let v = OrthonormalBasis::empty(n);
        let g = gaussian_matrix(n, 12, RngStream::new(7, 0));
        let mut ds = MaintainState::init(&v, g, 4).unwrap();
        ds.update(&unit(n, 3)).unwrap();
        for _ in 0..6 {
            let out = ds.query().unwrap();
            assert!(out[3].abs() <= 1e-10);
        }
    }

    #[test]
    fn redundant_update_consumes_no_slot() {
        let n = 8;
        let v = OrthonormalBasis::empty(n);
        let g = gaussian_matrix(n, 12, RngStream::new(8, 0));
        let mut ds = MaintainState::init(&v, g, 4).unwrap();
        ds.update(&unit(n, 1)).unwrap();
        assert_eq!(ds.pending_updates(), 1);
        ds.update(&unit(n, 1)).unwrap();
        assert_eq!(ds.pending_updates(), 1);
    }

    #[test]
    fn rejects_non_unit_updates() {
        let n = 4;
        let v = OrthonormalBasis::empty(n);
        let g = gaussian_matrix(n, 4, RngStream::new(9, 0));
        let mut ds = MaintainState::init(&v, g, 2).unwrap();
        assert!(ds.update(&[0.0, 2.0, 0.0, 0.0]).is_err());
        assert!(ds.update(&[1.0, 1.0, 0.0, 0.0]).is_err());
        assert!(ds.update(&[0.0; 4]).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let n = 4;
        let v = OrthonormalBasis::empty(n);
        let g = gaussian_matrix(n, 3, RngStream::new(10, 0));
        let mut ds = MaintainState::init(&v, g, 3).unwrap();
        for _ in 0..3 {
            ds.query().unwrap();
        }
        assert!(matches!(ds.query(), Err(Error::GaussianBudget { .. })));
    }

    #[test]
    fn stored_corrections_stay_orthogonal_to_basis() {
        let n = 16;
        let v = random_basis(n, 4, 11);
        let g = gaussian_matrix(n, 8, RngStream::new(11, 2));
        let mut ds = MaintainState::init(&v, g, 8).unwrap();
        for i in [0usize, 5, 9] {
            ds.update(&unit(n, i)).unwrap();
        }
        for i in 0..ds.pending_updates() {
            let wi = ds.w.row(i);
            for k in 0..v.len() {
                assert!(dot(wi, v.row(k)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn restart_keeps_projector_idempotent() {
        let n = 10;
        let v = random_basis(n, 3, 13);
        let g = gaussian_matrix(n, 20, RngStream::new(13, 5));
        let mut ds = MaintainState::init(&v, g, 2).unwrap();
        // force several update-triggered restarts
        for i in 0..6 {
            ds.update(&unit(n, i)).unwrap();
        }
        let p = ds.projector();
        assert_eq!(p.max_asymmetry(), 0.0);
        let p2 = p.matmul(p).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((p2.get(i, j) - p.get(i, j)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn fast_matches_slow_on_random_interleavings() {
        let n = 16;
        let total = 3 * n;
        for (seed, k) in [(1u64, 1usize), (2, 2), (3, 4), (4, n)] {
            let v0 = random_basis(n, 4, seed);
            let g = gaussian_matrix(n, total, RngStream::new(seed, 77));
            let mut rng = RngStream::new(seed, 78).rng();
            let mut used = vec![false; n];
            let schedule: Vec<Vec<usize>> = (0..total)
                .map(|_| {
                    let mut frozen = Vec::new();
                    if rng.gen::<f64>() < 0.3 {
                        let i = rng.gen_range(0..n);
                        if !used[i] {
                            used[i] = true;
                            frozen.push(i);
                        }
                    }
                    frozen
                })
                .collect();
            let fast = fast_maintain(&v0, &schedule, &g, k).unwrap();
            let slow = slow_maintain(&v0, &schedule, &g).unwrap();
            let tol = 1e-9 * (1.0 + g.max_abs());
            for (f, s) in fast.iter().zip(slow.iter()) {
                for (a, b) in f.iter().zip(s.iter()) {
                    assert!((a - b).abs() <= tol, "fast={a}, slow={b}");
                }
            }
        }
    }

    #[test]
    fn per_call_work_is_bounded_by_batch() {
        let n = 32;
        let k = 6;
        let v = OrthonormalBasis::empty(n);
        let g = gaussian_matrix(n, 3 * n, RngStream::new(20, 0));
        let mut ds = MaintainState::init(&v, g, k).unwrap();
        let budget = 8 * (n as u64) * (k as u64);
        let mut rng = RngStream::new(21, 0).rng();
        let mut next_coord = 0usize;
        for _ in 0..(2 * n) {
            ds.query().unwrap();
            assert!(ds.last_op_muladds() <= budget);
            if rng.gen::<f64>() < 0.4 && next_coord < n {
                ds.update_coordinate(next_coord).unwrap();
                assert!(ds.last_op_muladds() <= budget);
                next_coord += 1;
            }
        }
    }
}
