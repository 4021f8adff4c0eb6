//! Discrepancy minimization for sparse real matrices.
//!
//! Given A in R^{m x n}, the engine finds a coloring x in {-1,+1}^n with
//! small `||Ax||_inf` by combining a sketched "hereditary projection" (a
//! short orthonormal basis V whose complement leaves every row of A short),
//! implicit leverage-score row sampling, and a lazily maintained Gaussian
//! partial-coloring walk. Slow exact reference paths and brute-force oracles
//! back every randomized component at desk scale.

pub mod basis;
pub mod bench;
pub mod coloring;
pub mod dense;
pub mod error;
pub mod factor;
pub mod leverage;
pub mod maintain;
pub mod oracles;
pub mod projection;
pub mod rng;
pub mod sketch;
pub mod sparse;

pub use basis::{orthogonalize, project_complement, row_norms_exact, OrthonormalBasis};
pub use coloring::{
    fast_approx_max_norm, fast_hereditary_minimize, fast_partial_coloring, find_boundary,
    ColoringConfig, PartialColoringOutcome,
};
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use leverage::{chernoff_row_sample, implicit_leverage_scores, subsample, LeverageEstimate, SamplingMatrix};
pub use maintain::{slow_maintain, MaintainState};
pub use oracles::{brute_force_disc, brute_force_herdisc, herdisc_eigen_lower_bound};
pub use projection::{
    fast_project_to_small_rows, slow_project_to_small_rows, ProjectionConfig, ProjectionResult,
};
pub use rng::RngStream;
pub use sketch::{apply_right_jl, make_sketch, SketchKind, SketchOperator, SketchParams};
pub use sparse::CsrMatrix;
