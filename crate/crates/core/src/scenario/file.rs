//! Scenario documents.
//!
//! The native format is a flat key-value document using TOML syntax, with
//! dotted or bracketed section keys:
//!
//! ```toml
//! seed = 1
//! carriers = [{band = 1800, bw = 20}, {band = 2100, bw = 20}]
//! layout.downtilt_deg = 8
//!
//! [sim]
//! n_tti = 1000
//! ```
//!
//! A JSON rendering of the same schema (a document starting with `{`) is also
//! accepted. Every field except `carriers` is optional and takes its default.

use serde::{Deserialize, Serialize};

use super::{
    AggregationConfig, Band, Bandwidth, CarrierSpec, LayoutParams, PathLossModelId,
    PopulationParams, ScenarioConfig, ScenarioError, SimParams,
};
use crate::link::RateMap;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pcc: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contiguous: Option<bool>,
    #[serde(default)]
    carriers: Vec<CarrierDoc>,
    #[serde(default)]
    layout: LayoutParams,
    #[serde(default)]
    population: PopulationParams,
    #[serde(default)]
    sim: SimParams,
    #[serde(default)]
    link: RateMap,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CarrierDoc {
    /// Band centre frequency in MHz.
    band: u32,
    /// Channel bandwidth in MHz.
    bw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tx_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    antenna_gain_dbi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<PathLossModelId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_bw: Option<f64>,
}

impl CarrierDoc {
    fn into_spec(self, key: &str) -> Result<CarrierSpec, ScenarioError> {
        let bandwidth = Bandwidth::from_mhz(self.bw)
            .map_err(|e| ScenarioError::invalid(format!("{key}.bw"), e.to_string()))?;
        let max_bandwidth = self
            .max_bw
            .map(Bandwidth::from_mhz)
            .transpose()
            .map_err(|e| ScenarioError::invalid(format!("{key}.max_bw"), e.to_string()))?;
        let band = match (Band::builtin(self.band), self.model) {
            (Some(b), model) => Band {
                pathloss: model.unwrap_or(b.pathloss),
                antenna_gain_dbi: self.antenna_gain_dbi.unwrap_or(b.antenna_gain_dbi),
                max_bandwidth: max_bandwidth.unwrap_or(b.max_bandwidth),
                ..b
            },
            (None, Some(pathloss)) => Band {
                frequency_mhz: self.band,
                antenna_gain_dbi: self.antenna_gain_dbi.unwrap_or(18.0),
                pathloss,
                max_bandwidth: max_bandwidth.unwrap_or(Bandwidth::Mhz20),
            },
            (None, None) => {
                return Err(ScenarioError::invalid(
                    format!("{key}.band"),
                    format!(
                        "{} MHz is not a built-in band (900, 1800, 2100); declare `model`",
                        self.band
                    ),
                ))
            }
        };
        let spec = CarrierSpec {
            band,
            bandwidth,
            tx_power_dbm: self.tx_power_dbm.unwrap_or(bandwidth.default_tx_power_dbm()),
        };
        spec.validate().map_err(|e| e.under(key))?;
        Ok(spec)
    }

    fn from_spec(c: &CarrierSpec) -> Self {
        Self {
            band: c.band.frequency_mhz,
            bw: c.bandwidth.mhz(),
            tx_power_dbm: Some(c.tx_power_dbm),
            antenna_gain_dbi: Some(c.band.antenna_gain_dbi),
            model: Some(c.band.pathloss),
            max_bw: Some(c.band.max_bandwidth.mhz()),
        }
    }
}

/// Parses and validates a scenario document (TOML-style or JSON).
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let doc: ScenarioDoc = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(format!("JSON parse error: {e}")))?
    } else {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string().trim_end().to_owned()))?
    };
    if doc.carriers.is_empty() {
        return Err(ScenarioError::NoCarriers);
    }
    let carriers = doc
        .carriers
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.into_spec(&format!("carriers[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregation = match doc.pcc {
        Some(pcc) => AggregationConfig::with_pcc(carriers, pcc, doc.contiguous.unwrap_or(false))?,
        None => {
            let default = AggregationConfig::new(carriers)?;
            let pcc = default.pcc_index();
            AggregationConfig::with_pcc(default.carriers, pcc, doc.contiguous.unwrap_or(false))?
        }
    };
    let cfg = ScenarioConfig {
        aggregation,
        layout: doc.layout,
        population: doc.population,
        sim: doc.sim,
        link: doc.link,
        seed: doc.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Renders a scenario as a fully specified TOML-style document.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    let doc = ScenarioDoc {
        seed: cfg.seed,
        pcc: Some(cfg.aggregation.pcc_index()),
        contiguous: Some(cfg.aggregation.is_contiguous()),
        carriers: cfg.aggregation.carriers().iter().map(CarrierDoc::from_spec).collect(),
        layout: cfg.layout.clone(),
        population: cfg.population.clone(),
        sim: cfg.sim.clone(),
        link: cfg.link,
    };
    toml::to_string(&doc).expect("scenario documents always serialize")
}
