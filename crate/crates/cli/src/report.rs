//! Machine-readable run report with stable field names.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct StageTimes {
    pub parse: f64,
    pub solve: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub input_path: String,
    pub m: usize,
    pub n: usize,
    pub nnz: usize,
    pub seed: u64,
    pub mode: String,
    pub disc_achieved: f64,
    pub herdisc_lower_bound: f64,
    pub beta_used: f64,
    pub eta_used: f64,
    #[serde(rename = "N_used")]
    pub n_used: usize,
    #[serde(rename = "K_used")]
    pub k_used: usize,
    pub outer_rounds: usize,
    pub retries_per_round: Vec<usize>,
    pub wall_time_ms: StageTimes,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_sweep: Option<Vec<f64>>,
}
