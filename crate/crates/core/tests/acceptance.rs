//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with its measurements (visible under `--nocapture`).
//!
//! Run with `cargo test --test acceptance -- --nocapture`.

use discrep_core::basis::{orthogonalize, row_norms_exact, OrthonormalBasis};
use discrep_core::bench::projection_scaling_bench;
use discrep_core::coloring::{
    find_boundary, run_hereditary_minimize, run_partial_coloring, ColoringConfig,
    PartialColoringOutcome,
};
use discrep_core::dense::DenseMatrix;
use discrep_core::factor::sym_eig_desc;
use discrep_core::leverage::{implicit_leverage_scores, sampled_residual_gram, subsample};
use discrep_core::oracles::{
    brute_force_herdisc, disc_of, exact_leverage_scores, herdisc_eigen_lower_bound,
    random_coloring_baseline,
};
use discrep_core::projection::{fast_project_to_small_rows, ProjectionConfig};
use discrep_core::rng::RngStream;
use discrep_core::sketch::gaussian_matrix;
use discrep_core::sparse::CsrMatrix;
use discrep_core::maintain::{fast_maintain, slow_maintain};
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::OnceLock;
use std::time::Instant;

fn random_sparse_gaussian(m: usize, n: usize, density: f64, seed: u64) -> CsrMatrix {
    let mut rng = RngStream::new(seed, 0xA0).rng();
    let mut trips = Vec::new();
    for r in 0..m {
        for c in 0..n {
            if rng.gen::<f64>() < density {
                trips.push((r, c, rng.sample::<f64, _>(StandardNormal)));
            }
        }
    }
    CsrMatrix::from_triplets(m, n, &trips).unwrap()
}

fn random_zero_one(m: usize, n: usize, density: f64, seed: u64) -> CsrMatrix {
    let mut rng = RngStream::new(seed, 0xB0).rng();
    let mut trips = Vec::new();
    for r in 0..m {
        for c in 0..n {
            if rng.gen::<f64>() < density {
                trips.push((r, c, 1.0));
            }
        }
    }
    CsrMatrix::from_triplets(m, n, &trips).unwrap()
}

fn random_pm1(m: usize, n: usize, seed: u64) -> CsrMatrix {
    let mut rng = RngStream::new(seed, 0xC0).rng();
    let trips: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, if rng.gen::<bool>() { 1.0 } else { -1.0 }))
        .collect();
    CsrMatrix::from_triplets(m, n, &trips).unwrap()
}

fn random_basis(n: usize, l: usize, seed: u64) -> OrthonormalBasis {
    let mut rng = RngStream::new(seed, 0xD0).rng();
    let mut v = OrthonormalBasis::empty(n);
    while v.len() < l {
        let s: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        orthogonalize(&mut v, &s).unwrap();
    }
    v
}

/// Criterion 1: the fast projection returns an orthonormal basis of at most
/// n/4 rows on every instance, under a total wall-clock budget.
#[test]
fn criterion_01_orthonormality_and_budget() {
    let start = Instant::now();
    let mut pass = 0;
    let mut total = 0;
    let cfg = ProjectionConfig::default();
    for (i, &n) in [16usize, 32, 64].iter().cycle().take(50).enumerate() {
        let m = 8 * n;
        let a = random_sparse_gaussian(m, n, 0.1, 1_000 + i as u64);
        let res = fast_project_to_small_rows(&a, &cfg, RngStream::new(2_000 + i as u64, 0)).unwrap();
        total += 1;
        if res.basis.gram_max_error() <= 1e-8 && res.basis.len() <= n / 4 {
            pass += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    println!("[criterion 01] {} ({pass}/{total} orthonormal within 1e-8 and within the n/4 budget, {secs:.1} s)",
        if pass == total && secs < 30.0 { "PASS" } else { "FAIL" });
    assert_eq!(pass, total);
    assert!(secs < 30.0, "runtime budget exceeded: {secs:.1} s");
}

/// Criterion 2: on tiny 0/1 instances every exact residual row norm obeys
/// the certified bound (1 + eps0) * C0 * T * herdisc(A).
#[test]
fn criterion_02_hereditary_bound_tiny() {
    let start = Instant::now();
    let cfg = ProjectionConfig::default();
    let mut pass = 0;
    for i in 0..30u64 {
        let n = 8 + (i % 3) as usize; // 8..=10
        let m = 6 + (i % 7) as usize; // 6..=12
        let a = random_zero_one(m, n, 0.5, 3_000 + i);
        let res = fast_project_to_small_rows(&a, &cfg, RngStream::new(4_000 + i, 0)).unwrap();
        let herdisc = brute_force_herdisc(&a).unwrap();
        let t_rounds = ((8.0 * m.max(n) as f64 / n as f64).log2().ceil()).max(1.0);
        let bound = (1.0 + cfg.eps0) * cfg.c0 * t_rounds * herdisc;
        let worst = row_norms_exact(&a, &res.basis)
            .unwrap()
            .into_iter()
            .fold(0.0f64, f64::max);
        if worst <= bound {
            pass += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "[criterion 02] {} ({pass}/30 tiny instances within the hereditary bound, {secs:.1} s)",
        if pass == 30 && secs < 60.0 { "PASS" } else { "FAIL" }
    );
    assert_eq!(pass, 30);
    assert!(secs < 60.0, "runtime budget exceeded: {secs:.1} s");
}

/// Criterion 3: implicit leverage scores track the exact oracle within
/// (1 +- 0.25) on 256 x 16 instances; at most 3 of 100 runs may stray.
#[test]
fn criterion_03_leverage_accuracy() {
    let start = Instant::now();
    let mut failures = 0;
    for i in 0..100u64 {
        let a = random_sparse_gaussian(256, 16, 0.5, 5_000 + i);
        let v = random_basis(16, 4, 6_000 + i);
        let est = implicit_leverage_scores(&a, &v, 0.25, 0.01, RngStream::new(7_000 + i, 0)).unwrap();
        let exact = exact_leverage_scores(&a, &v).unwrap();
        let ok = est
            .scores
            .iter()
            .zip(exact.iter())
            .all(|(&e, &x)| e >= 0.75 * x - 1e-12 && e <= 1.25 * x + 1e-12);
        if !ok {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "[criterion 03] {} ({failures}/100 leverage runs out of (1 +- 0.25), allowed 3, {secs:.1} s)",
        if failures <= 3 && secs < 60.0 { "PASS" } else { "FAIL" }
    );
    assert!(failures <= 3, "{failures} failures > 3");
    assert!(secs < 60.0, "runtime budget exceeded: {secs:.1} s");
}

/// Criterion 4: the subsampled Gram sandwiches the exact one eigenvalue by
/// eigenvalue within (1 +- 0.1); at most 10 of 100 runs may fail.
#[test]
fn criterion_04_spectral_sandwich() {
    let start = Instant::now();
    let mut failures = 0;
    for i in 0..100u64 {
        let a = random_sparse_gaussian(200, 12, 0.5, 8_000 + i);
        let v = random_basis(12, 3, 9_000 + i);
        let sample = subsample(&a, &v, 0.1, 0.05, RngStream::new(10_000 + i, 0)).unwrap();
        let h_tilde = sampled_residual_gram(&a, &v, &sample).unwrap();
        // exact Gram of the projected rows
        let n = 12;
        let mut h = DenseMatrix::zeros(n, n);
        for r in 0..a.n_rows() {
            let mut b = vec![0.0; n];
            let (cols, vals) = a.row(r);
            for (&c, &val) in cols.iter().zip(vals.iter()) {
                b[c] = val;
            }
            let b = discrep_core::basis::project_complement(&v, &b).unwrap();
            for p in 0..n {
                for q in 0..n {
                    let cur = h.get(p, q);
                    h.set(p, q, cur + b[p] * b[q]);
                }
            }
        }
        let (lam_exact, vecs_exact) = sym_eig_desc(&h).unwrap();
        let (lam_tilde, _) = sym_eig_desc(&h_tilde).unwrap();
        let floor = 1e-9 * lam_exact[0].max(1e-300);
        let eig_ok = lam_exact.iter().zip(lam_tilde.iter()).all(|(&e, &t)| {
            if e <= floor {
                t.abs() <= 10.0 * floor + 1e-12
            } else {
                t >= 0.9 * e && t <= 1.1 * e
            }
        });
        // quadratic-form route: eigenvalues of H^{-1/2} H~ H^{-1/2} on the
        // range of H must land in the same band
        let rank = lam_exact.iter().filter(|&&e| e > floor).count();
        let mut whitened = DenseMatrix::zeros(rank, rank);
        for i in 0..rank {
            let wi = vecs_exact.row(i);
            let hw: Vec<f64> = (0..n)
                .map(|p| {
                    (0..n)
                        .map(|q| h_tilde.get(p, q) * wi[q])
                        .sum::<f64>()
                })
                .collect();
            for j in 0..rank {
                let wj = vecs_exact.row(j);
                let val: f64 = wj.iter().zip(hw.iter()).map(|(a, b)| a * b).sum();
                whitened.set(j, i, val / (lam_exact[i] * lam_exact[j]).sqrt());
            }
        }
        // symmetrize away accumulation asymmetry before the eig
        for i in 0..rank {
            for j in (i + 1)..rank {
                let s = 0.5 * (whitened.get(i, j) + whitened.get(j, i));
                whitened.set(i, j, s);
                whitened.set(j, i, s);
            }
        }
        let (lam_white, _) = sym_eig_desc(&whitened).unwrap();
        let psd_ok = lam_white.iter().all(|&l| (0.9..=1.1).contains(&l));
        if !(eig_ok && psd_ok) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "[criterion 04] {} ({failures}/100 sandwich runs out of (1 +- 0.1), allowed 10, {secs:.1} s)",
        if failures <= 10 && secs < 60.0 { "PASS" } else { "FAIL" }
    );
    assert!(failures <= 10, "{failures} failures > 10");
    assert!(secs < 60.0, "runtime budget exceeded: {secs:.1} s");
}

/// Criterion 5: the lazy maintenance structure agrees elementwise with the
/// eager reference on every batch size and schedule, zero violations.
#[test]
fn criterion_05_fast_equals_slow_maintenance() {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut violations = 0usize;
    for &n in &[8usize, 32, 64] {
        let total = 3 * n;
        let batches = [1usize, 2, (n as f64).sqrt().ceil() as usize, n];
        for &k in &batches {
            for sched_id in 0..20u64 {
                let seed = 11_000 + n as u64 * 100 + k as u64 * 10 + sched_id;
                let v0 = if sched_id % 2 == 0 {
                    OrthonormalBasis::empty(n)
                } else {
                    random_basis(n, n / 4, seed)
                };
                let g = gaussian_matrix(n, total, RngStream::new(seed, 1));
                let mut rng = RngStream::new(seed, 2).rng();
                let mut used = vec![false; n];
                let schedule: Vec<Vec<usize>> = (0..total)
                    .map(|_| {
                        let mut frozen = Vec::new();
                        let burst = if rng.gen::<f64>() < 0.05 { 3 } else { 1 };
                        for _ in 0..burst {
                            if rng.gen::<f64>() < 0.25 {
                                let i = rng.gen_range(0..n);
                                if !used[i] {
                                    used[i] = true;
                                    frozen.push(i);
                                }
                            }
                        }
                        frozen
                    })
                    .collect();
                let fast = fast_maintain(&v0, &schedule, &g, k).unwrap();
                let slow = slow_maintain(&v0, &schedule, &g).unwrap();
                let tol = 1e-9 * (1.0 + g.max_abs());
                checked += 1;
                let worst = fast
                    .iter()
                    .zip(slow.iter())
                    .flat_map(|(f, s)| f.iter().zip(s.iter()).map(|(a, b)| (a - b).abs()))
                    .fold(0.0f64, f64::max);
                if worst > tol {
                    violations += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "[criterion 05] {} ({violations}/{checked} schedules deviated beyond 1e-9, {secs:.1} s)",
        if violations == 0 && secs < 60.0 { "PASS" } else { "FAIL" }
    );
    assert_eq!(violations, 0);
    assert!(secs < 60.0, "runtime budget exceeded: {secs:.1} s");
}

/// Criterion 6: boundary scales are exact and maximal on random inputs and
/// on the closed-form reference instance.
#[test]
fn criterion_06_find_boundary_exactness() {
    let start = Instant::now();
    // closed-form instance
    let mu = find_boundary(&[1.0, 15.0 / 7.0], &[0.7, 3.0 / 5.0]).unwrap();
    assert!((mu - 14.0 / 75.0).abs() <= 1e-12, "reference mu = {mu}");

    let mut rng = RngStream::new(12_000, 0).rng();
    let mut checked = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=8);
        let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mu = find_boundary(&g, &b).unwrap();
        if !mu.is_finite() {
            continue;
        }
        let reach = |s: f64| -> f64 {
            let plus = g
                .iter()
                .zip(b.iter())
                .map(|(&gi, &bi)| (s * gi + bi).abs())
                .fold(0.0f64, f64::max);
            let minus = g
                .iter()
                .zip(b.iter())
                .map(|(&gi, &bi)| (s * gi - bi).abs())
                .fold(0.0f64, f64::max);
            plus.max(minus)
        };
        let at = reach(mu);
        assert!(
            (0.999_999_999..=1.000_000_001).contains(&at),
            "boundary value {at} at mu {mu}"
        );
        assert!(reach(mu * (1.0 + 1e-6)) > 1.0, "mu not maximal");
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    println!("[criterion 06] PASS ({checked} random boundary instances exact, {secs:.1} s)");
    assert!(secs < 10.0, "runtime budget exceeded: {secs:.1} s");
}

struct WalkStats {
    envelope_violations: usize,
    successes: usize,
    runs: usize,
    secs: f64,
}

fn walk_stats() -> &'static WalkStats {
    static STATS: OnceLock<WalkStats> = OnceLock::new();
    STATS.get_or_init(|| {
        let start = Instant::now();
        let cfg = ColoringConfig::default();
        let mut envelope_violations = 0;
        let mut successes = 0;
        let runs = 200;
        for i in 0..runs as u64 {
            let a = random_pm1(64, 32, 13_000 + i);
            let run =
                run_partial_coloring(&a, &vec![0.0; 32], &cfg, RngStream::new(14_000 + i, 0))
                    .unwrap();
            let moved = a.inf_norm_apply(&run.u_end).unwrap();
            if moved >= run.beta {
                envelope_violations += 1;
            }
            if matches!(run.outcome, PartialColoringOutcome::Success(_)) {
                successes += 1;
            }
        }
        WalkStats {
            envelope_violations,
            successes,
            runs,
            secs: start.elapsed().as_secs_f64(),
        }
    })
}

/// Criterion 7: across 200 seeded walks the movement bound ||A u||_inf < beta
/// is violated at most 6 times (delta = 0.01 envelope plus slack).
#[test]
fn criterion_07_martingale_envelope() {
    let s = walk_stats();
    println!(
        "[criterion 07] {} ({}/{} envelope violations, allowed 6, shared walk batch {:.1} s)",
        if s.envelope_violations <= 6 && s.secs < 300.0 { "PASS" } else { "FAIL" },
        s.envelope_violations,
        s.runs,
        s.secs
    );
    assert!(s.envelope_violations <= 6);
    assert!(s.secs < 300.0, "runtime budget exceeded: {:.1} s", s.secs);
}

/// Criterion 8: the same 200 walks succeed at least 5% of the time.
#[test]
fn criterion_08_partial_coloring_success_floor() {
    let s = walk_stats();
    let floor = s.runs / 20;
    println!(
        "[criterion 08] {} ({}/{} successes, floor {floor})",
        if s.successes >= floor { "PASS" } else { "FAIL" },
        s.successes,
        s.runs
    );
    assert!(s.successes >= floor);
}

/// Criterion 9: end-to-end colorings satisfy the hereditary quality bound on
/// every seed and beat the random-coloring baseline in the median.
#[test]
fn criterion_09_end_to_end_quality() {
    let start = Instant::now();
    let cfg = ColoringConfig::default();
    let mut bound_pass = 0;
    let mut achieved = Vec::new();
    let mut baselines = Vec::new();
    for i in 0..50u64 {
        let a = random_pm1(16, 12, 15_000 + i);
        let run = run_hereditary_minimize(&a, 1e-3, &cfg, RngStream::new(16_000 + i, 0)).unwrap();
        let disc = disc_of(&a, &run.coloring).unwrap();
        let herdisc = brute_force_herdisc(&a).unwrap();
        let bound = 1000.0 * herdisc * (12.0f64).log2() * (16.0f64).log2().powf(1.5);
        if disc <= bound {
            bound_pass += 1;
        }
        achieved.push(disc);
        let base = random_coloring_baseline(&a, 500, RngStream::new(17_000 + i, 0)).unwrap();
        baselines.push(base.median);
    }
    let median = |v: &mut Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if v.len() % 2 == 1 {
            v[v.len() / 2]
        } else {
            0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
        }
    };
    let med_achieved = median(&mut achieved);
    let med_baseline = median(&mut baselines);
    let secs = start.elapsed().as_secs_f64();
    let ok = bound_pass == 50 && med_achieved <= med_baseline && secs < 300.0;
    println!(
        "[criterion 09] {} ({bound_pass}/50 within the hereditary bound; median disc {med_achieved:.2} vs baseline {med_baseline:.2}, {secs:.1} s)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert_eq!(bound_pass, 50);
    assert!(
        med_achieved <= med_baseline,
        "median achieved {med_achieved} vs baseline {med_baseline}"
    );
    assert!(secs < 300.0, "runtime budget exceeded: {secs:.1} s");
}

/// Criterion 10 (soft, non-gating): projection wall time should grow at most
/// ~linearly as nnz doubles at fixed n. Ratios are reported and flagged, not
/// failed, since CI timing noise dominates at these scales.
#[test]
fn criterion_10_input_sparsity_scaling_report() {
    let rows = projection_scaling_bench(256, &[0.01, 0.02, 0.04, 0.08], 42).unwrap();
    let mut flagged = false;
    let mut report = String::new();
    for w in rows.windows(2) {
        let ratio = w[1].projection_ms / w[0].projection_ms.max(1e-9);
        report.push_str(&format!(
            " nnz {} -> {}: x{:.2};",
            w[0].nnz, w[1].nnz, ratio
        ));
        if ratio > 2.5 {
            flagged = true;
        }
    }
    println!(
        "[criterion 10] {} (per-doubling projection time ratios:{report})",
        if flagged { "FLAG" } else { "PASS" }
    );
    // reporting criterion: flagged ratios are surfaced, not failed
}

/// Criterion 11: the spectral lower bound never exceeds the brute-force
/// hereditary discrepancy, for every valid k.
#[test]
fn criterion_11_eigen_lower_bound_consistency() {
    let start = Instant::now();
    let mut pass = 0;
    for i in 0..30u64 {
        let n = 4 + (i % 5) as usize; // 4..=8
        let m = 4 + (i % 6) as usize; // 4..=9
        let a = random_zero_one(m, n, 0.5, 18_000 + i);
        let herdisc = brute_force_herdisc(&a).unwrap();
        let ok = (1..=m.min(n))
            .all(|k| herdisc_eigen_lower_bound(&a, k).unwrap() <= herdisc + 1e-9);
        if ok {
            pass += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "[criterion 11] {} ({pass}/30 instances consistent for all k, {secs:.1} s)",
        if pass == 30 && secs < 30.0 { "PASS" } else { "FAIL" }
    );
    assert_eq!(pass, 30);
    assert!(secs < 30.0, "runtime budget exceeded: {secs:.1} s");
}
