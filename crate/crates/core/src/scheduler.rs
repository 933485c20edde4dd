//! Per-TTI proportional-fair scheduling over aggregated component carriers.
//!
//! Every RB of every carrier is granted independently to the configured UE
//! with the highest `instantaneous rate / average rate`, where the
//! instantaneous rate is evaluated on channel feedback that is
//! `feedback_delay` TTIs old and the granted bits on the true channel.
//! Average rates move only at TTI boundaries, so the order in which RBs are
//! visited does not affect the outcome.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::link::{mimo_bits_per_rb, RateMap};
use crate::scenario::AggregationConfig;

/// Floor on average rates (bits/TTI), also their initial value.
pub const EPSILON_FLOOR: f64 = 1.0;

/// How historical throughput is accounted across component carriers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfPolicy {
    /// One average per UE over all its carriers (cross-carrier PF).
    #[default]
    Joint,
    /// One independent average per UE and carrier.
    PerCc,
}

impl PfPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            PfPolicy::Joint => "joint",
            PfPolicy::PerCc => "per_cc",
        }
    }
}

/// Per-carrier, per-RB linear SINR as seen by one UE in one TTI. Carriers the
/// UE is not configured on hold an empty vector.
pub type Snapshot = Vec<Vec<f64>>;

/// Scheduler-side state of one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct UeContext {
    pub ue_id: usize,
    pub serving_sector: usize,
    pub max_ccs: usize,
    configured: Vec<bool>,
    avg_joint: f64,
    avg_per_cc: Vec<f64>,
    cqi_buffer: VecDeque<Snapshot>,
}

impl UeContext {
    /// A UE not yet configured on any carrier.
    pub fn new(ue_id: usize, serving_sector: usize, max_ccs: usize) -> Self {
        Self {
            ue_id,
            serving_sector,
            max_ccs,
            configured: Vec::new(),
            avg_joint: EPSILON_FLOOR,
            avg_per_cc: Vec::new(),
            cqi_buffer: VecDeque::new(),
        }
    }

    pub fn is_configured(&self, carrier: usize) -> bool {
        self.configured.get(carrier).copied().unwrap_or(false)
    }

    /// Indices of the carriers this UE is configured on, ascending.
    pub fn configured_ccs(&self) -> Vec<usize> {
        (0..self.configured.len()).filter(|&c| self.configured[c]).collect()
    }

    pub fn avg_rate(&self, policy: PfPolicy, carrier: usize) -> f64 {
        match policy {
            PfPolicy::Joint => self.avg_joint,
            PfPolicy::PerCc => self.avg_per_cc[carrier],
        }
    }
}

/// Configures a UE on the primary carrier plus the first `max_ccs - 1`
/// secondary carriers in aggregation order. All are active for the whole run.
pub fn configure_ca(mut ue: UeContext, aggregation: &AggregationConfig) -> UeContext {
    let n = aggregation.carriers().len();
    let pcc = aggregation.pcc_index();
    let mut configured = vec![false; n];
    configured[pcc] = true;
    for c in (0..n).filter(|&c| c != pcc).take(ue.max_ccs.max(1) - 1) {
        configured[c] = true;
    }
    ue.configured = configured;
    ue.avg_per_cc = vec![EPSILON_FLOOR; n];
    ue.cqi_buffer.clear();
    ue
}

pub fn pf_metric(inst_rate: f64, avg_rate: f64) -> f64 {
    inst_rate / avg_rate
}

/// Exponential moving average with time constant `t_c` TTIs, floored.
pub fn update_average(avg_rate: f64, realized_bits: f64, t_c: f64) -> f64 {
    let w = 1.0 / t_c;
    ((1.0 - w) * avg_rate + w * realized_bits).max(EPSILON_FLOOR)
}

/// Source of true per-RB SINR.
pub trait LinkOracle {
    fn sinr(&self, ue: usize, carrier: usize, rb: usize, tti: u64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grant {
    pub ue_id: usize,
    pub bits: f64,
}

/// RB assignments of one cell in one TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub tti: u64,
    /// `per_carrier[c][rb]`; `None` when no UE is configured on the carrier.
    pub per_carrier: Vec<Vec<Option<Grant>>>,
}

impl Allocation {
    pub fn bits_for(&self, ue_id: usize) -> f64 {
        self.grants().filter(|(_, _, g)| g.ue_id == ue_id).map(|(_, _, g)| g.bits).sum()
    }

    pub fn total_bits(&self) -> f64 {
        self.grants().map(|(_, _, g)| g.bits).sum()
    }

    /// `(carrier, rb, grant)` triples in ascending (carrier, rb) order.
    pub fn grants(&self) -> impl Iterator<Item = (usize, usize, &Grant)> {
        self.per_carrier
            .iter()
            .enumerate()
            .flat_map(|(c, rbs)| rbs.iter().enumerate().filter_map(move |(rb, g)| g.as_ref().map(|g| (c, rb, g))))
    }
}

/// Proportional-fair scheduler for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PfScheduler {
    /// RB count of each carrier.
    pub n_rb: Vec<usize>,
    pub rate_map: RateMap,
    pub tti_s: f64,
    pub feedback_delay: usize,
    pub time_constant: f64,
    pub policy: PfPolicy,
}

impl PfScheduler {
    pub fn new(aggregation: &AggregationConfig, rate_map: RateMap, tti_s: f64, feedback_delay: usize, time_constant: f64, policy: PfPolicy) -> Self {
        Self {
            n_rb: aggregation.carriers().iter().map(|c| c.n_rb()).collect(),
            rate_map,
            tti_s,
            feedback_delay,
            time_constant,
            policy,
        }
    }

    fn bits(&self, sinr: f64) -> f64 {
        mimo_bits_per_rb(sinr, &self.rate_map, self.tti_s)
    }

    /// Records this TTI's true channel in every UE's feedback buffer. After
    /// the call the front of each buffer holds the snapshot of TTI
    /// `max(0, tti - feedback_delay)`.
    pub fn observe<O: LinkOracle + ?Sized>(&self, ues: &mut [UeContext], tti: u64, oracle: &O) {
        for ue in ues.iter_mut() {
            let snapshot: Snapshot = self
                .n_rb
                .iter()
                .enumerate()
                .map(|(c, &n)| {
                    if ue.is_configured(c) {
                        (0..n).map(|rb| oracle.sinr(ue.ue_id, c, rb, tti)).collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect();
            ue.cqi_buffer.push_back(snapshot);
            while ue.cqi_buffer.len() > self.feedback_delay + 1 {
                ue.cqi_buffer.pop_front();
            }
        }
    }

    /// Grants every RB by the PF rule on delayed feedback; ties go to the
    /// lowest `ue_id`. Granted bits use the true SINR at `tti`.
    ///
    /// Panics if a configured UE has no feedback yet; call [`Self::observe`]
    /// first.
    pub fn schedule_tti<O: LinkOracle + ?Sized>(&self, ues: &[UeContext], tti: u64, oracle: &O) -> Allocation {
        let mut order: Vec<usize> = (0..ues.len()).collect();
        order.sort_by_key(|&i| ues[i].ue_id);
        let per_carrier = self
            .n_rb
            .iter()
            .enumerate()
            .map(|(c, &n)| {
                let candidates: Vec<&UeContext> = order.iter().map(|&i| &ues[i]).filter(|u| u.is_configured(c)).collect();
                (0..n)
                    .map(|rb| {
                        let mut best: Option<(&UeContext, f64)> = None;
                        for ue in &candidates {
                            let delayed = ue.cqi_buffer.front().expect("no channel feedback recorded")[c][rb];
                            let metric = pf_metric(self.bits(delayed), ue.avg_rate(self.policy, c));
                            if best.is_none_or(|(_, m)| metric > m) {
                                best = Some((ue, metric));
                            }
                        }
                        best.map(|(ue, _)| Grant {
                            ue_id: ue.ue_id,
                            bits: self.bits(oracle.sinr(ue.ue_id, c, rb, tti)),
                        })
                    })
                    .collect()
            })
            .collect();
        Allocation { tti, per_carrier }
    }

    /// Folds the realised bits of `alloc` into the UEs' average rates.
    pub fn commit(&self, ues: &mut [UeContext], alloc: &Allocation) {
        for ue in ues.iter_mut() {
            let mut per_cc = vec![0.0; self.n_rb.len()];
            for (c, _, g) in alloc.grants() {
                if g.ue_id == ue.ue_id {
                    per_cc[c] += g.bits;
                }
            }
            ue.avg_joint = update_average(ue.avg_joint, per_cc.iter().sum(), self.time_constant);
            for (c, &bits) in per_cc.iter().enumerate() {
                if ue.is_configured(c) {
                    ue.avg_per_cc[c] = update_average(ue.avg_per_cc[c], bits, self.time_constant);
                }
            }
        }
    }

    /// Observe, schedule and commit one TTI.
    pub fn step<O: LinkOracle + ?Sized>(&self, ues: &mut [UeContext], tti: u64, oracle: &O) -> Allocation {
        self.observe(ues, tti, oracle);
        let alloc = self.schedule_tti(ues, tti, oracle);
        self.commit(ues, &alloc);
        alloc
    }
}
