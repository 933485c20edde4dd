//! Scenario definition: bands, component carriers, aggregation configurations
//! and the layout/population/simulation parameters of one run.

mod combos;
mod file;

pub use combos::{enumerate_combinations, AllowedBands};
pub use file::{parse_scenario, serialize_scenario};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link::RateMap;
use crate::scheduler::PfPolicy;

/// LTE-A limit on the number of aggregated component carriers.
pub const MAX_CCS: usize = 5;
/// Upper bound on the aggregated bandwidth.
pub const MAX_AGGREGATED_BW_MHZ: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(String),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("at least one carrier required")]
    NoCarriers,
    #[error("illegal bandwidth {0} MHz (allowed: 1.4, 3, 5, 10, 15, 20)")]
    IllegalBandwidth(f64),
    #[error("{n_cc} carriers requested but only {bands} distinct bands available")]
    NotEnoughBands { n_cc: usize, bands: usize },
}

impl ScenarioError {
    pub(crate) fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Prefixes the key of an `Invalid` error, e.g. `bw` -> `carriers[1].bw`.
    fn under(self, prefix: &str) -> Self {
        match self {
            Self::Invalid { key, message } => Self::Invalid {
                key: format!("{prefix}.{key}"),
                message,
            },
            Self::IllegalBandwidth(v) => Self::Invalid {
                key: format!("{prefix}.bw"),
                message: Self::IllegalBandwidth(v).to_string(),
            },
            other => other,
        }
    }
}

/// Empirical path-loss model bound to a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLossModelId {
    HataUrban,
    #[serde(rename = "cost231_hata")]
    Cost231Hata,
}

/// One of the standard LTE channel bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bandwidth {
    Mhz1_4,
    Mhz3,
    Mhz5,
    Mhz10,
    Mhz15,
    Mhz20,
}

impl Bandwidth {
    pub const ALL: [Bandwidth; 6] = [
        Bandwidth::Mhz1_4,
        Bandwidth::Mhz3,
        Bandwidth::Mhz5,
        Bandwidth::Mhz10,
        Bandwidth::Mhz15,
        Bandwidth::Mhz20,
    ];

    pub fn from_mhz(mhz: f64) -> Result<Self, ScenarioError> {
        Self::ALL
            .into_iter()
            .find(|b| (b.mhz() - mhz).abs() < 1e-9)
            .ok_or(ScenarioError::IllegalBandwidth(mhz))
    }

    pub fn mhz(self) -> f64 {
        match self {
            Bandwidth::Mhz1_4 => 1.4,
            Bandwidth::Mhz3 => 3.0,
            Bandwidth::Mhz5 => 5.0,
            Bandwidth::Mhz10 => 10.0,
            Bandwidth::Mhz15 => 15.0,
            Bandwidth::Mhz20 => 20.0,
        }
    }

    /// Resource blocks in a carrier of this bandwidth.
    pub fn rb_count(self) -> usize {
        match self {
            Bandwidth::Mhz1_4 => 6,
            Bandwidth::Mhz3 => 15,
            Bandwidth::Mhz5 => 25,
            Bandwidth::Mhz10 => 50,
            Bandwidth::Mhz15 => 75,
            Bandwidth::Mhz20 => 100,
        }
    }

    /// 43 dBm up to 5 MHz, 46 dBm from 10 MHz upwards.
    pub fn default_tx_power_dbm(self) -> f64 {
        if self <= Bandwidth::Mhz5 {
            43.0
        } else {
            46.0
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mhz())
    }
}

impl Serialize for Bandwidth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.mhz())
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mhz = f64::deserialize(d)?;
        Bandwidth::from_mhz(mhz).map_err(serde::de::Error::custom)
    }
}

/// Number of resource blocks for a channel bandwidth given in MHz.
pub fn rb_count(bandwidth_mhz: f64) -> Result<usize, ScenarioError> {
    Bandwidth::from_mhz(bandwidth_mhz).map(Bandwidth::rb_count)
}

/// Default transmit power in dBm for a channel bandwidth given in MHz.
pub fn default_tx_power(bandwidth_mhz: f64) -> Result<f64, ScenarioError> {
    Bandwidth::from_mhz(bandwidth_mhz).map(Bandwidth::default_tx_power_dbm)
}

/// An operating band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub frequency_mhz: u32,
    pub antenna_gain_dbi: f64,
    pub pathloss: PathLossModelId,
    pub max_bandwidth: Bandwidth,
}

impl Band {
    /// Built-in bands: 900 MHz (Okumura-Hata, 16 dBi, at most 10 MHz wide),
    /// 1800 and 2100 MHz (COST-231 Hata, 18 dBi).
    pub fn builtin(frequency_mhz: u32) -> Option<Band> {
        let (antenna_gain_dbi, pathloss, max_bandwidth) = match frequency_mhz {
            900 => (16.0, PathLossModelId::HataUrban, Bandwidth::Mhz10),
            1800 | 2100 => (18.0, PathLossModelId::Cost231Hata, Bandwidth::Mhz20),
            _ => return None,
        };
        Some(Band {
            frequency_mhz,
            antenna_gain_dbi,
            pathloss,
            max_bandwidth,
        })
    }

    pub fn frequency_hz(&self) -> f64 {
        f64::from(self.frequency_mhz) * 1e6
    }
}

/// One component carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierSpec {
    pub band: Band,
    pub bandwidth: Bandwidth,
    pub tx_power_dbm: f64,
}

impl CarrierSpec {
    /// Carrier on `band` with the default power for its bandwidth.
    pub fn new(band: Band, bandwidth: Bandwidth) -> Result<Self, ScenarioError> {
        let c = Self {
            band,
            bandwidth,
            tx_power_dbm: bandwidth.default_tx_power_dbm(),
        };
        c.validate()?;
        Ok(c)
    }

    /// Carrier on a built-in band.
    pub fn builtin(frequency_mhz: u32, bandwidth_mhz: f64) -> Result<Self, ScenarioError> {
        let band = Band::builtin(frequency_mhz).ok_or_else(|| {
            ScenarioError::invalid(
                "band",
                format!("{frequency_mhz} MHz is not a built-in band; give `model` explicitly"),
            )
        })?;
        Self::new(band, Bandwidth::from_mhz(bandwidth_mhz)?)
    }

    pub fn n_rb(&self) -> usize {
        self.bandwidth.rb_count()
    }

    /// Transmit power spread evenly over the carrier's resource blocks.
    pub fn power_per_rb_dbm(&self) -> f64 {
        self.tx_power_dbm - 10.0 * (self.n_rb() as f64).log10()
    }

    pub fn label(&self) -> String {
        format!("{}@{}", self.band.frequency_mhz, self.bandwidth)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.bandwidth > self.band.max_bandwidth {
            return Err(ScenarioError::invalid(
                "bw",
                format!(
                    "{} MHz bandwidth cap exceeded ({} MHz > {} MHz)",
                    self.band.frequency_mhz, self.bandwidth, self.band.max_bandwidth
                ),
            ));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(ScenarioError::invalid("tx_power_dbm", "must be finite"));
        }
        if !self.band.antenna_gain_dbi.is_finite() {
            return Err(ScenarioError::invalid("antenna_gain_dbi", "must be finite"));
        }
        if self.band.frequency_mhz == 0 {
            return Err(ScenarioError::invalid("band", "frequency must be positive"));
        }
        Ok(())
    }
}

/// Carrier aggregation taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaKind {
    SingleCarrier,
    IntraBandContiguous,
    IntraBandNonContiguous,
    InterBand,
}

/// Ordered list of component carriers with one designated primary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    carriers: Vec<CarrierSpec>,
    pcc_index: usize,
    contiguous: bool,
}

impl AggregationConfig {
    /// Aggregation with the primary on the lowest-frequency carrier.
    pub fn new(carriers: Vec<CarrierSpec>) -> Result<Self, ScenarioError> {
        let pcc = lowest_frequency_index(&carriers);
        Self::with_pcc(carriers, pcc, false)
    }

    pub fn with_pcc(
        carriers: Vec<CarrierSpec>,
        pcc_index: usize,
        contiguous: bool,
    ) -> Result<Self, ScenarioError> {
        let cfg = Self {
            carriers,
            pcc_index,
            contiguous,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.carriers.is_empty() {
            return Err(ScenarioError::NoCarriers);
        }
        if self.carriers.len() > MAX_CCS {
            return Err(ScenarioError::invalid(
                "carriers",
                format!("at most {MAX_CCS} component carriers, got {}", self.carriers.len()),
            ));
        }
        for (i, c) in self.carriers.iter().enumerate() {
            c.validate().map_err(|e| e.under(&format!("carriers[{i}]")))?;
        }
        let total = self.total_bandwidth_mhz();
        if total > MAX_AGGREGATED_BW_MHZ + 1e-9 {
            return Err(ScenarioError::invalid(
                "carriers",
                format!("aggregated bandwidth {total} MHz exceeds {MAX_AGGREGATED_BW_MHZ} MHz"),
            ));
        }
        if self.pcc_index >= self.carriers.len() {
            return Err(ScenarioError::invalid(
                "pcc",
                format!("index {} out of range for {} carriers", self.pcc_index, self.carriers.len()),
            ));
        }
        let mut freqs: Vec<u32> = self.carriers.iter().map(|c| c.band.frequency_mhz).collect();
        freqs.sort_unstable();
        freqs.dedup();
        if freqs.len() != 1 && freqs.len() != self.carriers.len() {
            return Err(ScenarioError::invalid(
                "carriers",
                "carriers must either share one band (intra-band) or use pairwise-distinct bands (inter-band)",
            ));
        }
        for f in &freqs {
            let bands: Vec<&Band> = self
                .carriers
                .iter()
                .map(|c| &c.band)
                .filter(|b| b.frequency_mhz == *f)
                .collect();
            if bands.windows(2).any(|w| w[0] != w[1]) {
                return Err(ScenarioError::invalid(
                    "carriers",
                    format!("conflicting definitions of the {f} MHz band"),
                ));
            }
        }
        if self.contiguous && self.kind() == CaKind::InterBand {
            return Err(ScenarioError::invalid(
                "contiguous",
                "inter-band aggregation cannot be contiguous",
            ));
        }
        Ok(())
    }

    pub fn carriers(&self) -> &[CarrierSpec] {
        &self.carriers
    }

    pub fn pcc_index(&self) -> usize {
        self.pcc_index
    }

    pub fn pcc(&self) -> &CarrierSpec {
        &self.carriers[self.pcc_index]
    }

    pub fn is_contiguous(&self) -> bool {
        self.contiguous
    }

    pub fn kind(&self) -> CaKind {
        let first = self.carriers[0].band.frequency_mhz;
        if self.carriers.len() == 1 {
            CaKind::SingleCarrier
        } else if self.carriers.iter().all(|c| c.band.frequency_mhz == first) {
            if self.contiguous {
                CaKind::IntraBandContiguous
            } else {
                CaKind::IntraBandNonContiguous
            }
        } else {
            CaKind::InterBand
        }
    }

    /// "2CC", "3CC", ...
    pub fn mode_label(&self) -> String {
        format!("{}CC", self.carriers.len())
    }

    /// e.g. "1800@20+2100@20".
    pub fn label(&self) -> String {
        self.carriers
            .iter()
            .map(CarrierSpec::label)
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn total_bandwidth_mhz(&self) -> f64 {
        self.carriers.iter().map(|c| c.bandwidth.mhz()).sum()
    }

    /// Index of each carrier among the carriers of the same band, used to key
    /// per-carrier random streams independently of carrier order.
    pub fn band_occurrence(&self, carrier: usize) -> usize {
        let f = self.carriers[carrier].band.frequency_mhz;
        self.carriers[..carrier]
            .iter()
            .filter(|c| c.band.frequency_mhz == f)
            .count()
    }
}

fn lowest_frequency_index(carriers: &[CarrierSpec]) -> usize {
    carriers
        .iter()
        .enumerate()
        .min_by_key(|(i, c)| (c.band.frequency_mhz, *i))
        .map_or(0, |(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    pub inter_site_distance_m: f64,
    pub rings: u32,
    pub sectors_per_site: u32,
    pub site_height_m: f64,
    pub azimuth_offset_deg: f64,
    pub downtilt_deg: f64,
    pub min_ue_distance_m: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            inter_site_distance_m: 500.0,
            rings: 1,
            sectors_per_site: 3,
            site_height_m: 20.0,
            azimuth_offset_deg: 30.0,
            downtilt_deg: 8.0,
            min_ue_distance_m: 35.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationParams {
    pub ues_per_sector: u32,
    pub rx_height_m: f64,
    pub ue_speed_mps: f64,
    pub ue_antenna_gain_db: f64,
    /// Component carriers a UE can be configured on.
    pub max_ccs: u32,
}

impl Default for PopulationParams {
    fn default() -> Self {
        Self {
            ues_per_sector: 10,
            rx_height_m: 1.5,
            ue_speed_mps: 5.0 / 3.6,
            ue_antenna_gain_db: 0.0,
            max_ccs: MAX_CCS as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub n_tti: u32,
    pub tti_ms: f64,
    pub feedback_delay_tti: u32,
    pub min_coupling_loss_db: f64,
    pub noise_figure_db: f64,
    pub shadowing_sigma_db: f64,
    pub pf_time_constant: f64,
    pub pf_policy: PfPolicy,
    pub fading: bool,
    pub trace_length_s: f64,
    /// Added to COST-231 Hata losses (0 for medium cities, 3 for metropolitan centres).
    pub cost231_metro_correction_db: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_tti: 20,
            tti_ms: 1.0,
            feedback_delay_tti: 3,
            min_coupling_loss_db: 70.0,
            noise_figure_db: 9.0,
            shadowing_sigma_db: 8.0,
            pf_time_constant: 50.0,
            pf_policy: PfPolicy::Joint,
            fading: true,
            trace_length_s: 5.0,
            cost231_metro_correction_db: 0.0,
        }
    }
}

impl SimParams {
    pub fn tti_s(&self) -> f64 {
        self.tti_ms * 1e-3
    }
}

/// A complete, validated simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub aggregation: AggregationConfig,
    pub layout: LayoutParams,
    pub population: PopulationParams,
    pub sim: SimParams,
    pub link: RateMap,
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    /// Defaults for everything except the carriers.
    pub fn new(aggregation: AggregationConfig) -> Self {
        Self {
            aggregation,
            layout: LayoutParams::default(),
            population: PopulationParams::default(),
            sim: SimParams::default(),
            link: RateMap::default(),
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.aggregation.validate()?;
        let l = &self.layout;
        positive("layout.inter_site_distance_m", l.inter_site_distance_m)?;
        positive("layout.site_height_m", l.site_height_m)?;
        non_negative("layout.min_ue_distance_m", l.min_ue_distance_m)?;
        finite("layout.azimuth_offset_deg", l.azimuth_offset_deg)?;
        finite("layout.downtilt_deg", l.downtilt_deg)?;
        count("layout.sectors_per_site", l.sectors_per_site)?;
        if l.inter_site_distance_m <= 2.0 * l.min_ue_distance_m {
            return Err(ScenarioError::invalid(
                "layout.inter_site_distance_m",
                "must exceed twice layout.min_ue_distance_m",
            ));
        }
        let p = &self.population;
        count("population.ues_per_sector", p.ues_per_sector)?;
        count("population.max_ccs", p.max_ccs)?;
        positive("population.rx_height_m", p.rx_height_m)?;
        non_negative("population.ue_speed_mps", p.ue_speed_mps)?;
        finite("population.ue_antenna_gain_db", p.ue_antenna_gain_db)?;
        if p.rx_height_m >= l.site_height_m {
            return Err(ScenarioError::invalid(
                "population.rx_height_m",
                "must be below layout.site_height_m",
            ));
        }
        let s = &self.sim;
        count("sim.n_tti", s.n_tti)?;
        positive("sim.tti_ms", s.tti_ms)?;
        non_negative("sim.min_coupling_loss_db", s.min_coupling_loss_db)?;
        finite("sim.noise_figure_db", s.noise_figure_db)?;
        non_negative("sim.shadowing_sigma_db", s.shadowing_sigma_db)?;
        positive("sim.trace_length_s", s.trace_length_s)?;
        if s.cost231_metro_correction_db != 0.0 && s.cost231_metro_correction_db != 3.0 {
            return Err(ScenarioError::invalid("sim.cost231_metro_correction_db", "must be 0 or 3"));
        }
        if !s.pf_time_constant.is_finite() || s.pf_time_constant < 1.0 {
            return Err(ScenarioError::invalid("sim.pf_time_constant", "must be at least 1"));
        }
        self.link.validate()?;
        Ok(())
    }
}

fn finite(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::invalid(key, "must be finite"))
    }
}

fn positive(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(key, format!("must be non-negative, got {v}")))
    }
}

fn count(key: &str, v: u32) -> Result<(), ScenarioError> {
    if v > 0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(key, "must be strictly positive"))
    }
}
