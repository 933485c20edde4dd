//! Large-scale link gain: empirical path loss, sector antenna pattern,
//! log-normal shadowing and the minimum-coupling-loss floor.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{self, GeometryError, Position, SectorId};
use crate::scenario::{CarrierSpec, PathLossModelId, ScenarioConfig};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("{param} = {value} is outside the model's domain")]
    Domain { param: &'static str, value: f64 },
    #[error("{param} = {value} is outside the validity range {lo}..={hi} (strict mode)")]
    OutOfRange {
        param: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("metropolitan correction must be 0 or 3 dB, got {0}")]
    MetroCorrection(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A path-loss value and whether any input lay outside the model's nominal
/// validity range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub db: f64,
    pub extrapolated: bool,
}

struct Ranges {
    f: (f64, f64),
    d: (f64, f64),
    hb: (f64, f64),
    hm: (f64, f64),
}

const HATA_RANGES: Ranges = Ranges {
    f: (150.0, 1500.0),
    d: (1.0, 20.0),
    hb: (30.0, 200.0),
    hm: (1.0, 10.0),
};

const COST231_RANGES: Ranges = Ranges {
    f: (1500.0, 2000.0),
    ..HATA_RANGES
};

fn check_inputs(f: f64, d: f64, hb: f64, hm: f64, ranges: &Ranges, strict: bool) -> Result<bool, PropagationError> {
    let inputs = [("f", f, ranges.f), ("d", d, ranges.d), ("hb", hb, ranges.hb), ("hm", hm, ranges.hm)];
    let mut extrapolated = false;
    for (param, value, (lo, hi)) in inputs {
        if !(value.is_finite() && value > 0.0) {
            return Err(PropagationError::Domain { param, value });
        }
        if value < lo || value > hi {
            if strict {
                return Err(PropagationError::OutOfRange { param, value, lo, hi });
            }
            extrapolated = true;
        }
    }
    Ok(extrapolated)
}

/// Mobile antenna height correction a(hm) for small and medium cities.
pub fn mobile_height_correction(f_mhz: f64, hm: f64) -> f64 {
    let lf = f_mhz.log10();
    (1.1 * lf - 0.7) * hm - (1.56 * lf - 0.8)
}

fn distance_term(hb: f64, d_km: f64) -> f64 {
    (44.9 - 6.55 * hb.log10()) * d_km.log10()
}

/// Okumura-Hata urban path loss in dB (small/medium-city correction).
///
/// `f` in MHz, `d` in km, antenna heights in m. Inputs outside the nominal
/// validity range are computed and flagged unless `strict` is set.
pub fn hata_urban(f: f64, d: f64, hb: f64, hm: f64, strict: bool) -> Result<PathLoss, PropagationError> {
    let extrapolated = check_inputs(f, d, hb, hm, &HATA_RANGES, strict)?;
    let db = 69.55 + 26.16 * f.log10() - 13.82 * hb.log10() - mobile_height_correction(f, hm) + distance_term(hb, d);
    Ok(PathLoss { db, extrapolated })
}

/// COST-231 Hata path loss in dB with metropolitan correction 0 or 3 dB.
pub fn cost231_hata(
    f: f64,
    d: f64,
    hb: f64,
    hm: f64,
    metro_correction: f64,
    strict: bool,
) -> Result<PathLoss, PropagationError> {
    if metro_correction != 0.0 && metro_correction != 3.0 {
        return Err(PropagationError::MetroCorrection(metro_correction));
    }
    let extrapolated = check_inputs(f, d, hb, hm, &COST231_RANGES, strict)?;
    let db = 46.3 + 33.9 * f.log10() - 13.82 * hb.log10() - mobile_height_correction(f, hm)
        + distance_term(hb, d)
        + metro_correction;
    Ok(PathLoss { db, extrapolated })
}

/// Parabolic sector pattern with separate horizontal and vertical cuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    pub h_beamwidth_deg: f64,
    pub front_to_back_db: f64,
    pub v_beamwidth_deg: f64,
    pub side_lobe_db: f64,
    pub max_attenuation_db: f64,
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self {
            h_beamwidth_deg: 70.0,
            front_to_back_db: 25.0,
            v_beamwidth_deg: 10.0,
            side_lobe_db: 20.0,
            max_attenuation_db: 25.0,
        }
    }
}

impl AntennaPattern {
    /// Non-negative attenuation in dB relative to boresight.
    pub fn attenuation(&self, horizontal_offset: f64, vertical_offset: f64, downtilt: f64) -> f64 {
        let h = (12.0 * (horizontal_offset / self.h_beamwidth_deg).powi(2)).min(self.front_to_back_db);
        let v = (12.0 * ((vertical_offset - downtilt) / self.v_beamwidth_deg).powi(2)).min(self.side_lobe_db);
        (h + v).min(self.max_attenuation_db)
    }
}

/// Attenuation of the default sector pattern.
pub fn antenna_attenuation(horizontal_offset: f64, vertical_offset: f64, downtilt: f64) -> f64 {
    AntennaPattern::default().attenuation(horizontal_offset, vertical_offset, downtilt)
}

/// Draws one zero-mean normal deviate with standard deviation `sigma` dB.
pub fn shadowing_sample<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

/// Log-normal shadowing keyed by (UE, site): every sector and carrier of a
/// site sees the same value for a given UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shadowing {
    seed: u64,
    sigma: f64,
}

impl Shadowing {
    pub fn new(seed: u64, sigma: f64) -> Self {
        Self { seed, sigma }
    }

    pub fn sample(&self, ue: usize, site: usize) -> f64 {
        shadowing_sample(self.sigma, &mut seed::stream(self.seed, seed::SHADOWING, &[ue as u64, site as u64]))
    }
}

/// Composition of the large-scale terms of one (UE, sector, carrier) link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub pathloss: f64,
    pub antenna_attenuation: f64,
    pub shadowing: f64,
    /// Negative total loss including both antenna gains, after the
    /// minimum-coupling-loss clamp.
    pub total_gain: f64,
    pub extrapolated: bool,
}

/// Path loss of a carrier's band model at horizontal distance `d_m`.
pub fn band_pathloss(carrier: &CarrierSpec, d_m: f64, scenario: &ScenarioConfig) -> Result<PathLoss, PropagationError> {
    let f = f64::from(carrier.band.frequency_mhz);
    let hb = scenario.layout.site_height_m;
    let hm = scenario.population.rx_height_m;
    match carrier.band.pathloss {
        PathLossModelId::HataUrban => hata_urban(f, d_m / 1000.0, hb, hm, false),
        PathLossModelId::Cost231Hata => {
            cost231_hata(f, d_m / 1000.0, hb, hm, scenario.sim.cost231_metro_correction_db, false)
        }
    }
}

/// Large-scale gain from `site`'s `sector` to a UE on `carrier`.
pub fn link_gain(
    ue: &Position,
    sector: &SectorId,
    site: &Position,
    carrier: &CarrierSpec,
    scenario: &ScenarioConfig,
    shadowing_db: f64,
) -> Result<LinkGain, PropagationError> {
    let ang = geometry::angles(sector, site, ue)?;
    let pl = band_pathloss(carrier, ue.horizontal_distance(site), scenario)?;
    let att = antenna_attenuation(ang.horizontal_offset, ang.vertical_offset, scenario.layout.downtilt_deg);
    let raw = -pl.db - att - shadowing_db + carrier.band.antenna_gain_dbi + scenario.population.ue_antenna_gain_db;
    Ok(LinkGain {
        pathloss: pl.db,
        antenna_attenuation: att,
        shadowing: shadowing_db,
        total_gain: raw.min(-scenario.sim.min_coupling_loss_db),
        extrapolated: pl.extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{AggregationConfig, CarrierSpec};
    use proptest::prelude::*;

    /// Term-by-term evaluation, written out independently of the model code.
    fn hand_hata_900() -> f64 {
        let lf = 900f64.log10(); // 2.954243
        let lhb = 20f64.log10(); // 1.301030
        let a_hm = (1.1 * lf - 0.7) * 1.5 - (1.56 * lf - 0.8); // 0.015882
        69.55 + 26.16 * lf - 13.82 * lhb - a_hm + (44.9 - 6.55 * lhb) * 0.5f64.log10()
    }

    #[test]
    fn hata_hand_values() {
        let pl = hata_urban(900.0, 0.5, 20.0, 1.5, false).unwrap();
        assert!((pl.db - 117.89).abs() < 0.05, "{}", pl.db);
        assert!((pl.db - hand_hata_900()).abs() < 1e-9);
        assert!(pl.extrapolated);
        assert!((mobile_height_correction(900.0, 1.5) - 0.016).abs() < 5e-4);

        let far = hata_urban(900.0, 1.0, 20.0, 1.5, false).unwrap();
        let step = (44.9 - 6.55 * 20f64.log10()) * 2f64.log10();
        assert!((far.db - pl.db - step).abs() < 1e-9);
    }

    #[test]
    fn cost231_hand_values() {
        let pl = cost231_hata(1800.0, 0.5, 20.0, 1.5, 0.0, false).unwrap();
        assert!((pl.db - 127.68).abs() < 0.05, "{}", pl.db);
        let metro = cost231_hata(1800.0, 0.5, 20.0, 1.5, 3.0, false).unwrap();
        assert!((metro.db - pl.db - 3.0).abs() < 1e-12);
        assert!((metro.db - 130.68).abs() < 0.05);
        let high = cost231_hata(2100.0, 0.5, 20.0, 1.5, 0.0, false).unwrap();
        assert!(high.db > pl.db);
        assert!(cost231_hata(1800.0, 0.5, 20.0, 1.5, 1.0, false).is_err());
    }

    #[test]
    fn strict_mode_rejects_extrapolation() {
        assert!(matches!(
            hata_urban(900.0, 0.5, 20.0, 1.5, true),
            Err(PropagationError::OutOfRange { param: "d", .. })
        ));
        assert!(matches!(
            cost231_hata(2100.0, 2.0, 50.0, 1.5, 0.0, true),
            Err(PropagationError::OutOfRange { param: "f", .. })
        ));
        let ok = hata_urban(900.0, 2.0, 50.0, 1.5, true).unwrap();
        assert!(!ok.extrapolated);
        assert!(matches!(hata_urban(900.0, 0.0, 20.0, 1.5, false), Err(PropagationError::Domain { param: "d", .. })));
    }

    #[test]
    fn antenna_cases() {
        assert_eq!(antenna_attenuation(0.0, 8.0, 8.0), 0.0);
        assert!((antenna_attenuation(35.0, 8.0, 8.0) - 3.0).abs() < 1e-12);
        assert_eq!(antenna_attenuation(180.0, 8.0, 8.0), 25.0);
        assert_eq!(antenna_attenuation(0.0, 90.0, 8.0), 20.0);
        assert_eq!(antenna_attenuation(60.0, 20.0, 8.0), 25.0);
    }

    #[test]
    fn shadowing_statistics() {
        let sh = Shadowing::new(11, 8.0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|i| sh.sample(i, i % 7)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(mean.abs() < 0.1, "{mean}");
        assert!((std - 8.0).abs() / 8.0 < 0.02, "{std}");
        assert_eq!(sh.sample(3, 2), sh.sample(3, 2));
        assert_ne!(sh.sample(3, 2), sh.sample(3, 1));
        let off = Shadowing::new(11, 0.0);
        assert!((0..100).all(|i| off.sample(i, 0) == 0.0));
    }

    fn scenario() -> ScenarioConfig {
        let agg = AggregationConfig::new(vec![CarrierSpec::builtin(900, 10.0).unwrap(), CarrierSpec::builtin(1800, 20.0).unwrap()]).unwrap();
        ScenarioConfig::new(agg)
    }

    #[test]
    fn coupling_loss_floor() {
        let sc = scenario();
        let site = Position::new(0.0, 0.0, 20.0);
        let sector = SectorId { site_index: 0, sector_index: 0, azimuth: 30.0 };
        let ue = Position::new(1f64 * 30f64.to_radians().cos(), 30f64.to_radians().sin(), 1.5);
        for c in sc.aggregation.carriers() {
            let g = link_gain(&ue, &sector, &site, c, &sc, 0.0).unwrap();
            assert_eq!(g.total_gain, -70.0);
        }
    }

    #[test]
    fn boresight_composition() {
        let mut sc = scenario();
        let site = Position::new(0.0, 0.0, 20.0);
        let sector = SectorId { site_index: 0, sector_index: 0, azimuth: 30.0 };
        let t = 30f64.to_radians();
        let ue = Position::new(500.0 * t.cos(), 500.0 * t.sin(), 1.5);
        // Tilt the beam onto the UE so both pattern cuts are at boresight.
        sc.layout.downtilt_deg = (18.5f64 / 500.0).atan().to_degrees();
        let c900 = sc.aggregation.carriers()[0];
        let c1800 = sc.aggregation.carriers()[1];
        let g900 = link_gain(&ue, &sector, &site, &c900, &sc, 0.0).unwrap();
        assert!(g900.antenna_attenuation.abs() < 1e-12);
        assert!((g900.total_gain - (-hand_hata_900() + 16.0)).abs() < 1e-9);
        assert!((g900.total_gain + 101.89).abs() < 0.05);
        let g1800 = link_gain(&ue, &sector, &site, &c1800, &sc, 0.0).unwrap();
        assert!(g900.total_gain > g1800.total_gain);
    }

    proptest! {
        #[test]
        fn pathloss_monotone(f in 150.0f64..2500.0, d in 0.02f64..20.0, hb in 10.0f64..200.0, hm in 1.0f64..10.0, k in 1.001f64..3.0) {
            let h = |f: f64, d: f64| hata_urban(f, d, hb, hm, false).unwrap().db;
            let c = |f: f64, d: f64| cost231_hata(f, d, hb, hm, 0.0, false).unwrap().db;
            prop_assert!(h(f, d * k) > h(f, d));
            prop_assert!(c(f, d * k) > c(f, d));
            prop_assert!(h(f * k, d) > h(f, d));
            prop_assert!(c(f * k, d) > c(f, d));
        }

        #[test]
        fn distance_doubling_identity(f in 150.0f64..2500.0, d in 0.02f64..10.0, hb in 10.0f64..200.0, hm in 1.0f64..10.0) {
            let step = (44.9 - 6.55 * hb.log10()) * 2f64.log10();
            let h = hata_urban(f, 2.0 * d, hb, hm, false).unwrap().db - hata_urban(f, d, hb, hm, false).unwrap().db;
            let c = cost231_hata(f, 2.0 * d, hb, hm, 3.0, false).unwrap().db - cost231_hata(f, d, hb, hm, 3.0, false).unwrap().db;
            prop_assert!((h - step).abs() < 1e-9);
            prop_assert!((c - step).abs() < 1e-9);
        }

        #[test]
        fn attenuation_bounds(h in -180.0f64..=180.0, v in -90.0f64..=90.0, tilt in 0.0f64..15.0) {
            let a = antenna_attenuation(h, v, tilt);
            prop_assert!((0.0..=25.0).contains(&a));
            if h != 0.0 || v != tilt {
                prop_assert!(a > 0.0);
            }
        }
    }
}
