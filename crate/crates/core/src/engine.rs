//! Simulation runs and sweeps.
//!
//! A run builds the layout, drops UEs, computes every large-scale link gain,
//! then steps the proportional-fair scheduler of each centre-site cell through
//! the TTI loop. Only the centre site's cells are scheduled and measured; the
//! surrounding rings contribute full-buffer interference.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::link::{self, CarrierKey, Fading};
use crate::metrics::{self, MetricsError, RunResult, UeResult};
use crate::propagation::{self, PropagationError, Shadowing};
use crate::scenario::{enumerate_combinations, AggregationConfig, AllowedBands, ScenarioConfig, ScenarioError};
use crate::scheduler::{configure_ca, LinkOracle, PfScheduler, UeContext};
use crate::seed::SubSeeds;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("empty simulation: n_tti must be at least 1")]
    EmptySimulation,
    #[error("seed required")]
    SeedRequired,
    #[error("no carrier combinations to simulate")]
    NoCombinations,
    #[error("no seeds given")]
    NoSeeds,
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A validated scenario and the sub-seeds derived from its master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub sub_seeds: SubSeeds,
}

impl RunPlan {
    pub fn new(scenario: ScenarioConfig) -> Result<Self, EngineError> {
        if scenario.sim.n_tti == 0 {
            return Err(EngineError::EmptySimulation);
        }
        scenario.validate()?;
        let seed = scenario.seed.ok_or(EngineError::SeedRequired)?;
        Ok(Self {
            scenario,
            seed,
            sub_seeds: SubSeeds::new(seed),
        })
    }
}

/// One granted RB, as written to the allocation trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tti: u64,
    pub carrier: usize,
    pub rb: usize,
    pub ue: usize,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub result: RunResult,
    /// Present when requested; ordered by (sector, tti, carrier, rb).
    pub trace: Option<Vec<TraceRow>>,
}

/// Precomputed channel of the centre-site UEs: per (UE, carrier) the serving
/// received power and the interference-plus-noise power per RB, both in mW,
/// and the fading power of every block the run touches.
struct CenterChannel {
    serving_mw: Vec<Vec<f64>>,
    denom_mw: Vec<Vec<f64>>,
    /// `[ue][carrier][block][rb]`.
    fading: Vec<Vec<Vec<Vec<f64>>>>,
    block_len: Vec<u64>,
    trace_len: u64,
}

impl LinkOracle for CenterChannel {
    fn sinr(&self, ue: usize, carrier: usize, rb: usize, tti: u64) -> f64 {
        let block = ((tti % self.trace_len) / self.block_len[carrier]) as usize;
        self.serving_mw[ue][carrier] * self.fading[ue][carrier][block][rb] / self.denom_mw[ue][carrier]
    }
}

/// Runs one scenario.
pub fn run(scenario: &ScenarioConfig) -> Result<RunResult, EngineError> {
    run_with_trace(scenario, false).map(|o| o.result)
}

pub fn run_with_trace(scenario: &ScenarioConfig, trace: bool) -> Result<RunOutput, EngineError> {
    let plan = RunPlan::new(scenario.clone())?;
    let sc = &plan.scenario;
    let agg = &sc.aggregation;
    let carriers = agg.carriers();

    let layout = geometry::build_hex_layout(
        sc.layout.inter_site_distance_m,
        sc.layout.rings,
        sc.layout.sectors_per_site as usize,
        sc.layout.azimuth_offset_deg,
        sc.layout.site_height_m,
    )?;
    let mut placement = ChaCha8Rng::seed_from_u64(plan.sub_seeds.placement);
    let ues = geometry::drop_ues(
        &layout,
        sc.population.ues_per_sector as usize,
        sc.layout.min_ue_distance_m,
        sc.population.rx_height_m,
        &mut placement,
    )?;
    // Site 0 is dropped first, so its UEs hold ids 0..n_center.
    let n_center = ues.iter().take_while(|u| u.sector < layout.sectors_per_site).count();

    let shadowing = Shadowing::new(plan.sub_seeds.shadowing, sc.sim.shadowing_sigma_db);
    let noise_dbm = link::noise_power(sc.link.rb_bandwidth_hz, sc.sim.noise_figure_db);
    let mut serving_mw = vec![vec![0.0; carriers.len()]; n_center];
    let mut denom_mw = vec![vec![0.0; carriers.len()]; n_center];
    for (u, ue) in ues[..n_center].iter().enumerate() {
        let shadow: Vec<f64> = (0..layout.sites.len()).map(|s| shadowing.sample(u, s)).collect();
        for (c, carrier) in carriers.iter().enumerate() {
            let p_rb = carrier.power_per_rb_dbm();
            let mut interferers = Vec::with_capacity(layout.sectors.len() - 1);
            let mut serving = f64::NAN;
            for (k, sector) in layout.sectors.iter().enumerate() {
                let site = &layout.sites[sector.site_index];
                let g = propagation::link_gain(&ue.position, sector, site, carrier, sc, shadow[sector.site_index])?;
                if k == ue.sector {
                    serving = g.total_gain;
                } else {
                    interferers.push((g.total_gain, p_rb));
                }
            }
            serving_mw[u][c] = link::db_to_linear(serving + p_rb);
            denom_mw[u][c] = link::interference_plus_noise_mw(&interferers, noise_dbm);
        }
    }

    let fading = Fading {
        seed: plan.sub_seeds.fading,
        enabled: sc.sim.fading,
        ue_speed_mps: sc.population.ue_speed_mps,
        tti_s: sc.sim.tti_s(),
        trace_length_s: sc.sim.trace_length_s,
    };
    let trace_len = fading.trace_length_tti();
    let last_tti = u64::from(sc.sim.n_tti - 1).min(trace_len - 1);
    let block_len: Vec<u64> = carriers.iter().map(|c| fading.block_length_tti(c.band.frequency_hz())).collect();
    let keys: Vec<CarrierKey> = (0..carriers.len())
        .map(|c| CarrierKey {
            frequency_mhz: carriers[c].band.frequency_mhz,
            occurrence: agg.band_occurrence(c),
        })
        .collect();
    let fading_table: Vec<Vec<Vec<Vec<f64>>>> = (0..n_center)
        .map(|u| {
            (0..carriers.len())
                .map(|c| {
                    (0..=last_tti / block_len[c])
                        .map(|b| (0..carriers[c].n_rb()).map(|rb| fading.block_power(u, keys[c], rb, b)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let channel = CenterChannel {
        serving_mw,
        denom_mw,
        fading: fading_table,
        block_len,
        trace_len,
    };

    let scheduler = PfScheduler::new(
        agg,
        sc.link,
        sc.sim.tti_s(),
        sc.sim.feedback_delay_tti as usize,
        sc.sim.pf_time_constant,
        sc.sim.pf_policy,
    );
    let mut bits = vec![0.0; n_center];
    let mut rows = trace.then(Vec::new);
    for sector in 0..layout.sectors_per_site {
        let mut cell: Vec<UeContext> = (0..n_center)
            .filter(|&u| ues[u].sector == sector)
            .map(|u| configure_ca(UeContext::new(u, sector, sc.population.max_ccs as usize), agg))
            .collect();
        for tti in 0..u64::from(sc.sim.n_tti) {
            let alloc = scheduler.step(&mut cell, tti, &channel);
            for (c, rb, g) in alloc.grants() {
                bits[g.ue_id] += g.bits;
                if let Some(rows) = rows.as_mut() {
                    rows.push(TraceRow { tti, carrier: c, rb, ue: g.ue_id, bits: g.bits });
                }
            }
        }
    }

    let tti_s = sc.sim.tti_s();
    let per_ue: Vec<UeResult> = (0..n_center)
        .map(|u| UeResult {
            ue_id: u,
            sector: ues[u].sector,
            x: ues[u].position.x,
            y: ues[u].position.y,
            throughput_mbps: metrics::throughput_mbps(bits[u], sc.sim.n_tti, tti_s),
        })
        .collect();
    let cells = layout.sectors_per_site;
    let cell_avg = metrics::throughput_mbps(bits.iter().sum::<f64>(), sc.sim.n_tti, tti_s) / cells as f64;
    let fairness = metrics::jain_index(&per_ue.iter().map(|u| u.throughput_mbps).collect::<Vec<_>>())?;
    Ok(RunOutput {
        result: RunResult {
            aggregation: agg.label(),
            mode: agg.mode_label(),
            total_bandwidth_mhz: agg.total_bandwidth_mhz(),
            seed: plan.seed,
            n_tti: sc.sim.n_tti,
            policy: sc.sim.pf_policy,
            cells,
            cell_avg_throughput_mbps: cell_avg,
            fairness_index: fairness,
            per_ue,
        },
        trace: rows,
    })
}

/// Inter-band combinations for every requested carrier count, in canonical
/// order within each count.
pub fn sweep_combinations(allowed: &AllowedBands, cc_counts: &[usize]) -> Result<Vec<AggregationConfig>, EngineError> {
    let mut out = Vec::new();
    for &n in cc_counts {
        out.extend(enumerate_combinations(allowed, n, true)?);
    }
    if out.is_empty() {
        return Err(EngineError::NoCombinations);
    }
    Ok(out)
}

/// One (combination, seed) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub combination: AggregationConfig,
    pub seed: u64,
    pub outcome: Result<RunResult, EngineError>,
}

/// Mean and standard deviation over the successful seeds of a combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAggregate {
    pub combination: AggregationConfig,
    pub runs: usize,
    pub mean_throughput_mbps: f64,
    pub std_throughput_mbps: f64,
    pub mean_fairness: f64,
    pub std_fairness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Combination-major, seeds in the order given.
    pub runs: Vec<SweepRun>,
    /// One per combination, same order as the combinations.
    pub aggregates: Vec<SweepAggregate>,
}

impl SweepTable {
    pub fn runs_for(&self, combination: &str) -> impl Iterator<Item = &SweepRun> + '_ {
        let combination = combination.to_owned();
        self.runs.iter().filter(move |r| r.combination.label() == combination)
    }

    pub fn aggregate(&self, combination: &str) -> Option<&SweepAggregate> {
        self.aggregates.iter().find(|a| a.combination.label() == combination)
    }
}

/// Runs every combination under every seed on top of `base`.
///
/// Runs are independent and may execute on `threads` workers; results are
/// gathered by key, so the table does not depend on the worker count. A
/// failed run is recorded in its cell without aborting the sweep.
pub fn run_sweep(
    base: &ScenarioConfig,
    combinations: &[AggregationConfig],
    seeds: &[u64],
    threads: Option<usize>,
) -> Result<SweepTable, EngineError> {
    if combinations.is_empty() {
        return Err(EngineError::NoCombinations);
    }
    if seeds.is_empty() {
        return Err(EngineError::NoSeeds);
    }
    let jobs: Vec<(&AggregationConfig, u64)> = combinations.iter().flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let work = || -> Vec<SweepRun> {
        jobs.par_iter()
            .map(|&(combination, seed)| {
                let mut sc = base.clone();
                sc.aggregation = combination.clone();
                sc.seed = Some(seed);
                SweepRun {
                    combination: combination.clone(),
                    seed,
                    outcome: run(&sc),
                }
            })
            .collect()
    };
    let runs = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| EngineError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    };
    let aggregates = combinations
        .iter()
        .map(|c| {
            let ok: Vec<&RunResult> = runs
                .iter()
                .filter(|r| &r.combination == c)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let (mt, st) = metrics::mean_std(&ok.iter().map(|r| r.cell_avg_throughput_mbps).collect::<Vec<_>>());
            let (mf, sf) = metrics::mean_std(&ok.iter().map(|r| r.fairness_index).collect::<Vec<_>>());
            SweepAggregate {
                combination: c.clone(),
                runs: ok.len(),
                mean_throughput_mbps: mt,
                std_throughput_mbps: st,
                mean_fairness: mf,
                std_fairness: sf,
            }
        })
        .collect();
    Ok(SweepTable { runs, aggregates })
}
