//! Wall-clock scaling measurement for the projection stage.

use crate::error::Result;
use crate::projection::{fast_project_to_small_rows, ProjectionConfig};
use crate::rng::RngStream;
use crate::sparse::CsrMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct BenchRow {
    pub density: f64,
    pub nnz: usize,
    pub projection_ms: f64,
}

/// Random m x n instance with roughly `density * m * n` Gaussian entries.
pub fn synthetic_instance(m: usize, n: usize, density: f64, rng: RngStream) -> Result<CsrMatrix> {
    let mut gen = rng.rng();
    let mut trips = Vec::new();
    for r in 0..m {
        for c in 0..n {
            if gen.gen::<f64>() < density {
                trips.push((r, c, gen.sample::<f64, _>(StandardNormal)));
            }
        }
    }
    CsrMatrix::from_triplets(m, n, &trips)
}

/// Time the fast projection at fixed n across a density sweep. Row counts
/// are fixed at 4n so only nnz varies between rows of the report.
pub fn projection_scaling_bench(
    n: usize,
    densities: &[f64],
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let m = 4 * n;
    let cfg = ProjectionConfig::default();
    let mut out = Vec::with_capacity(densities.len());
    for (i, &density) in densities.iter().enumerate() {
        let rng = RngStream::new(seed, 40_000 + i as u64);
        let a = synthetic_instance(m, n, density, rng.substream(1))?;
        let nnz = a.nnz();
        let start = Instant::now();
        let res = fast_project_to_small_rows(&a, &cfg, rng.substream(2))?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        debug_assert!(res.basis.len() <= n / 4);
        out.push(BenchRow {
            density,
            nnz,
            projection_ms: elapsed,
        });
    }
    Ok(out)
}
