//! Per-UE and per-cell throughput, Jain's fairness index and run comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scheduler::PfPolicy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("fairness index of an empty set")]
    Empty,
    #[error("fairness index undefined when every throughput is zero")]
    AllZero,
    #[error("negative or non-finite throughput {0}")]
    BadValue(f64),
    #[error("baseline cell throughput is zero")]
    ZeroBaseline,
}

/// Jain's fairness index `(Σx)² / (n·Σx²)`, in `[1/n, 1]`.
pub fn jain_index(xs: &[f64]) -> Result<f64, MetricsError> {
    if xs.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(MetricsError::BadValue(bad));
    }
    // Scaling by the maximum keeps the squares in range.
    let max = xs.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(MetricsError::AllZero);
    }
    let sum: f64 = xs.iter().map(|x| x / max).sum();
    let sum_sq: f64 = xs.iter().map(|x| (x / max).powi(2)).sum();
    Ok((sum * sum / (xs.len() as f64 * sum_sq)).min(1.0))
}

/// Mean throughput in Mbps of per-TTI granted bits.
pub fn ue_throughput(granted_bits: &[f64], tti_s: f64) -> f64 {
    if granted_bits.is_empty() {
        return 0.0;
    }
    granted_bits.iter().sum::<f64>() / (granted_bits.len() as f64 * tti_s) / 1e6
}

/// Throughput of bits accumulated over `n_tti` TTIs, in Mbps.
pub fn throughput_mbps(total_bits: f64, n_tti: u32, tti_s: f64) -> f64 {
    total_bits / (f64::from(n_tti) * tti_s) / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeResult {
    pub ue_id: usize,
    /// Global sector index.
    pub sector: usize,
    pub x: f64,
    pub y: f64,
    pub throughput_mbps: f64,
}

/// Summary statistics of one run over the centre site's cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Carrier combination, e.g. "1800@20+2100@20".
    pub aggregation: String,
    /// "2CC", "3CC", ...
    pub mode: String,
    pub total_bandwidth_mhz: f64,
    pub seed: u64,
    pub n_tti: u32,
    pub policy: PfPolicy,
    /// Number of cells the throughput is averaged over.
    pub cells: usize,
    pub cell_avg_throughput_mbps: f64,
    pub fairness_index: f64,
    pub per_ue: Vec<UeResult>,
}

impl RunResult {
    pub fn per_ue_throughput(&self) -> Vec<f64> {
        self.per_ue.iter().map(|u| u.throughput_mbps).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub throughput_gain_pct: f64,
    pub fairness_delta_pct: f64,
}

/// Relative change from run `a` to run `b`, in percent.
pub fn compare_runs(a: &RunResult, b: &RunResult) -> Result<Comparison, MetricsError> {
    compare_values(a.cell_avg_throughput_mbps, a.fairness_index, b.cell_avg_throughput_mbps, b.fairness_index)
}

pub fn compare_values(a_tput: f64, a_fair: f64, b_tput: f64, b_fair: f64) -> Result<Comparison, MetricsError> {
    if a_tput == 0.0 || a_fair == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(Comparison {
        throughput_gain_pct: 100.0 * (b_tput - a_tput) / a_tput,
        fairness_delta_pct: 100.0 * (b_fair - a_fair) / a_fair,
    })
}

/// Sample mean and standard deviation (n − 1 denominator; 0 for one sample).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
