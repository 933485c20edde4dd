//! Link abstraction: per-RB SINR, mutual-information effective SINR,
//! truncated-Shannon rate mapping with a 2x2 closed-loop spatial
//! multiplexing abstraction, and block-fading offsets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::ScenarioError;
use crate::seed;

/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("effective SINR of an empty RB set")]
    Empty,
    #[error("negative or non-finite SINR {0}")]
    BadSinr(f64),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Truncated-Shannon rate-mapping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateMap {
    /// Bandwidth-efficiency factor.
    pub alpha: f64,
    /// Below this SINR nothing is decodable.
    pub sinr_min_db: f64,
    /// Per-stream cap in bits/s/Hz (64QAM after coding and overhead).
    pub se_max: f64,
    pub rb_bandwidth_hz: f64,
}

impl Default for RateMap {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            sinr_min_db: -10.0,
            se_max: 4.4,
            rb_bandwidth_hz: 180_000.0,
        }
    }
}

impl RateMap {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(ScenarioError::invalid("link.alpha", "must lie in (0, 1]"));
        }
        if !self.sinr_min_db.is_finite() {
            return Err(ScenarioError::invalid("link.sinr_min_db", "must be finite"));
        }
        if !(self.se_max.is_finite() && self.se_max > 0.0) {
            return Err(ScenarioError::invalid("link.se_max", "must be positive"));
        }
        if !(self.rb_bandwidth_hz.is_finite() && self.rb_bandwidth_hz > 0.0) {
            return Err(ScenarioError::invalid("link.rb_bandwidth_hz", "must be positive"));
        }
        Ok(())
    }
}

/// Thermal noise power in dBm over `bandwidth_hz` with a receiver noise figure.
pub fn noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Linear SINR on one RB.
///
/// `interferers` holds `(gain dB, power per RB dBm)` pairs; every interfering
/// sector is assumed to transmit on every RB. `fading_offset` applies to the
/// serving link only.
pub fn sinr_rb(
    serving_gain: f64,
    serving_power_per_rb: f64,
    interferers: &[(f64, f64)],
    noise: f64,
    fading_offset: f64,
) -> f64 {
    let signal = db_to_linear(serving_gain + serving_power_per_rb + fading_offset);
    signal / interference_plus_noise_mw(interferers, noise)
}

/// Interference plus noise in mW, the denominator of [`sinr_rb`].
pub fn interference_plus_noise_mw(interferers: &[(f64, f64)], noise: f64) -> f64 {
    interferers
        .iter()
        .map(|(g, p)| db_to_linear(g + p))
        .sum::<f64>()
        + db_to_linear(noise)
}

/// Mutual-information effective SINR: `2^(mean log2(1 + s)) - 1`.
pub fn effective_sinr(per_rb: &[f64]) -> Result<f64, LinkError> {
    if per_rb.is_empty() {
        return Err(LinkError::Empty);
    }
    if let Some(&bad) = per_rb.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(LinkError::BadSinr(bad));
    }
    let mi = per_rb.iter().map(|s| s.ln_1p()).sum::<f64>() / per_rb.len() as f64;
    Ok(mi.exp_m1())
}

/// Per-stream spectral efficiency in bits/s/Hz.
pub fn spectral_efficiency(sinr: f64, rm: &RateMap) -> f64 {
    if sinr < db_to_linear(rm.sinr_min_db) {
        return 0.0;
    }
    (rm.alpha * (1.0 + sinr).log2()).min(rm.se_max)
}

/// Bits carried by one RB in one TTI under rank-adaptive 2x2 CLSM.
///
/// Rank 1 gains 3 dB from combining; rank 2 splits the power over two
/// streams. The better of the two is used.
pub fn mimo_bits_per_rb(sinr: f64, rm: &RateMap, tti_s: f64) -> f64 {
    let rank1 = spectral_efficiency(2.0 * sinr, rm);
    let rank2 = 2.0 * spectral_efficiency(sinr / 2.0, rm);
    rm.rb_bandwidth_hz * tti_s * rank1.max(rank2)
}

/// Identifies a carrier for fading purposes: band frequency and the index of
/// the carrier among carriers of that band. Keying by band (not by position in
/// the aggregation) keeps a carrier's fading identical across configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CarrierKey {
    pub frequency_mhz: u32,
    pub occurrence: usize,
}

/// Rayleigh block fading, deterministic in (seed, UE, carrier, RB, TTI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fading {
    pub seed: u64,
    pub enabled: bool,
    pub ue_speed_mps: f64,
    pub tti_s: f64,
    pub trace_length_s: f64,
}

impl Fading {
    /// Coherence time `0.423 c / (f v)` in seconds.
    pub fn coherence_time(&self, frequency_hz: f64) -> f64 {
        if self.ue_speed_mps <= 0.0 {
            return f64::INFINITY;
        }
        0.423 * SPEED_OF_LIGHT / (frequency_hz * self.ue_speed_mps)
    }

    pub fn trace_length_tti(&self) -> u64 {
        ((self.trace_length_s / self.tti_s).round() as u64).max(1)
    }

    /// TTIs over which one fading realisation is held.
    pub fn block_length_tti(&self, frequency_hz: f64) -> u64 {
        let tc = self.coherence_time(frequency_hz);
        let trace = self.trace_length_tti();
        if !tc.is_finite() {
            return trace;
        }
        ((tc / self.tti_s).ceil() as u64).clamp(1, trace)
    }

    /// Index of the fading block containing `tti`; the trace wraps around.
    pub fn block_index(&self, frequency_hz: f64, tti: u64) -> u64 {
        (tti % self.trace_length_tti()) / self.block_length_tti(frequency_hz)
    }

    /// Linear power gain (unit mean) for a given block.
    pub fn block_power(&self, ue: usize, carrier: CarrierKey, rb: usize, block: u64) -> f64 {
        if !self.enabled {
            return 1.0;
        }
        let x = seed::derive(
            self.seed,
            seed::FADING,
            &[ue as u64, u64::from(carrier.frequency_mhz), carrier.occurrence as u64, rb as u64, block],
        );
        // Uniform on (0, 1], then the inverse exponential CDF.
        let u = ((x >> 11) + 1) as f64 / (1u64 << 53) as f64;
        -u.ln()
    }

    pub fn power(&self, ue: usize, carrier: CarrierKey, rb: usize, tti: u64) -> f64 {
        let block = self.block_index(f64::from(carrier.frequency_mhz) * 1e6, tti);
        self.block_power(ue, carrier, rb, block)
    }

    /// Fading offset in dB.
    pub fn offset_db(&self, ue: usize, carrier: CarrierKey, rb: usize, tti: u64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        linear_to_db(self.power(ue, carrier, rb, tti))
    }
}
