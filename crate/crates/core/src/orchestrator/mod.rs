//! Per-slot placement, assignment and routing: water-filling placement
//! driven by predictions, plus random, single-node-per-service and
//! exhaustive baselines.

mod baselines;
mod exact;
mod state;
mod wise;

pub use baselines::{ccam_place, random_place, CcamPlanner, RandomConfig};
pub use exact::{exact_solve, ExactConfig, ExactLimits};
pub use state::SlotState;
pub use wise::{select_host_node, water_fill, wise_place, HostChoice, WiseConfig};

use std::collections::{BTreeMap, BTreeSet};

use crate::ids::{NodeId, RequestId, ServiceId, Slot};
use crate::model::{Model, ModelError, SlotAllocation};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OrchestratorError {
    #[error("no feasible host node for service {0}")]
    NoFeasibleHost(ServiceId),
    #[error("instance too large for exhaustive search: {what} = {value} exceeds limit {limit}")]
    ExactLimit { what: &'static str, value: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrchestratorKind {
    Wise,
    Random,
    Ccam,
    Exact,
}

impl OrchestratorKind {
    pub const ALL: [OrchestratorKind; 4] =
        [OrchestratorKind::Wise, OrchestratorKind::Random, OrchestratorKind::Ccam, OrchestratorKind::Exact];

    pub fn name(self) -> &'static str {
        match self {
            OrchestratorKind::Wise => "wise",
            OrchestratorKind::Random => "random",
            OrchestratorKind::Ccam => "ccam",
            OrchestratorKind::Exact => "exact",
        }
    }
}

impl std::fmt::Display for OrchestratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OrchestratorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        OrchestratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown orchestrator {s:?} (expected wise, random, ccam or exact)"))
    }
}

/// Services expected per PoA for one slot, with the per-service pivot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionTable {
    by_poa: BTreeMap<NodeId, BTreeSet<ServiceId>>,
    by_service: BTreeMap<ServiceId, BTreeSet<NodeId>>,
}

impl PredictionTable {
    pub fn new() -> Self {
        PredictionTable::default()
    }

    pub fn insert(&mut self, poa: NodeId, services: impl IntoIterator<Item = ServiceId>) {
        for s in services {
            self.by_poa.entry(poa).or_default().insert(s);
            self.by_service.entry(s).or_default().insert(poa);
        }
    }

    /// PoAs expecting `service`, ascending.
    pub fn poas_for(&self, service: ServiceId) -> Vec<NodeId> {
        self.by_service.get(&service).map(|p| p.iter().copied().collect()).unwrap_or_default()
    }

    pub fn services_at(&self, poa: NodeId) -> Vec<ServiceId> {
        self.by_poa.get(&poa).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    pub fn services(&self) -> impl Iterator<Item = ServiceId> + '_ {
        self.by_service.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.by_poa.is_empty()
    }

    /// The table a perfect predictor would produce for slot `t`.
    pub fn actual(model: &Model, t: Slot) -> Self {
        let mut table = PredictionTable::new();
        for r in model.scenario.active_at(t) {
            if let Ok(poa) = r.poa_at(t) {
                table.insert(poa, [r.service]);
            }
        }
        table
    }
}

/// Cumulative delay charged to each request so far.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaLedger {
    used: Vec<f64>,
}

impl SlaLedger {
    pub fn new(requests: usize) -> Self {
        SlaLedger { used: vec![0.0; requests] }
    }

    pub fn used(&self, r: RequestId) -> f64 {
        self.used[r.0]
    }

    /// Per-request delay bound for the next slot: the per-slot maximum or
    /// whatever SLA budget remains, whichever is smaller.
    pub fn bounds(&self, model: &Model) -> Vec<f64> {
        model
            .scenario
            .requests
            .iter()
            .map(|r| r.qos.max_delay.min(r.sla_budget - self.used[r.id.0]))
            .collect()
    }

    pub fn charge(&mut self, slot: &SlotAllocation) {
        for a in &slot.assignments {
            self.used[a.request.0] += a.recorded_delay.unwrap_or(0.0);
        }
    }

    /// A fresh residual state for slot `t`.
    pub fn slot_state<'m>(&self, model: Model<'m>, t: Slot) -> SlotState<'m> {
        SlotState::new(model, t, self.bounds(&model))
    }
}

/// Active requests at `t` ordered tightest delay bound first, then earlier
/// arrival, then lower id.
pub fn tightest_first(model: &Model, t: Slot) -> Vec<RequestId> {
    let mut reqs: Vec<_> = model.scenario.active_at(t).collect();
    reqs.sort_by(|a, b| {
        a.qos
            .max_delay
            .total_cmp(&b.qos.max_delay)
            .then(a.arrival.cmp(&b.arrival))
            .then(a.id.cmp(&b.id))
    });
    reqs.into_iter().map(|r| r.id).collect()
}
