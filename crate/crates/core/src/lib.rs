//! Deterministic downlink system-level simulator for LTE-Advanced carrier
//! aggregation.
//!
//! The crate models a tri-sector hexagonal network, Okumura-Hata and
//! COST-231 Hata path loss, a truncated-Shannon link abstraction with
//! rank-adaptive 2x2 MIMO, and a proportional-fair scheduler working across
//! aggregated component carriers. Runs are reproducible bit for bit from a
//! master seed.

pub mod cli;
pub mod engine;
pub mod geometry;
pub mod link;
pub mod metrics;
pub mod propagation;
pub mod scenario;
pub mod scheduler;
pub mod seed;

pub use engine::{run, run_sweep, run_with_trace, sweep_combinations, EngineError, RunOutput, RunPlan, SweepTable};
pub use metrics::{compare_runs, jain_index, Comparison, RunResult};
pub use scenario::{parse_scenario, AggregationConfig, CarrierSpec, ScenarioConfig, ScenarioError};
