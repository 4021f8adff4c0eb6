//! File formats shared by the `discrep` binary and its integration tests.

pub mod mmio;
pub mod report;
