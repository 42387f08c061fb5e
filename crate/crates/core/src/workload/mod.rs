//! Service catalog, request population and mobility traces.

mod format;
mod generate;
mod mobility;

pub use generate::{generate_scenario, QosRanges, ScenarioParams};
pub use mobility::{MarkovChain, Mobility, MobilityModel};

use std::collections::BTreeSet;

use crate::ids::{InstanceId, NodeId, RequestId, ServiceId, Slot};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WorkloadError {
    #[error("request {request} has not arrived at slot {slot} (arrives at {arrival})")]
    NotYetArrived { request: RequestId, slot: Slot, arrival: Slot },
    #[error("slot {slot} is outside the horizon 1..={horizon}")]
    OutsideHorizon { slot: Slot, horizon: Slot },
    #[error("topology has no points of attachment")]
    NoPoaNodes,
    #[error("invalid scenario parameter: {0}")]
    BadParam(String),
    #[error("transition matrix row {row} sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },
    #[error("unknown instance {0}")]
    UnknownInstance(InstanceId),
    #[error("unknown request {0}")]
    UnknownRequest(RequestId),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub id: InstanceId,
    pub capacity: u32,
    /// Charged per assigned request per slot.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceCatalog {
    services: Vec<Vec<InstanceSpec>>,
}

impl ServiceCatalog {
    pub fn new(services: Vec<Vec<InstanceSpec>>) -> Result<Self, WorkloadError> {
        for (s, insts) in services.iter().enumerate() {
            if insts.is_empty() {
                return Err(WorkloadError::Invalid(format!("service s{s} has no instances")));
            }
            for (i, inst) in insts.iter().enumerate() {
                if inst.id != InstanceId::new(s, i) {
                    return Err(WorkloadError::Invalid(format!("instance {} stored at s{s}i{i}", inst.id)));
                }
                if inst.capacity == 0 || !(inst.cost > 0.0 && inst.cost.is_finite()) {
                    return Err(WorkloadError::Invalid(format!("instance {} needs positive capacity and cost", inst.id)));
                }
            }
        }
        Ok(ServiceCatalog { services })
    }

    pub fn service_count(&self) -> usize {
        self.services.len()
    }

    pub fn instance_count(&self) -> usize {
        self.services.iter().map(Vec::len).sum()
    }

    pub fn instances(&self, service: ServiceId) -> &[InstanceSpec] {
        self.services.get(service.0).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn instance(&self, id: InstanceId) -> Result<&InstanceSpec, WorkloadError> {
        self.services
            .get(id.service.0)
            .and_then(|s| s.get(id.index))
            .ok_or(WorkloadError::UnknownInstance(id))
    }

    pub fn all_instances(&self) -> impl Iterator<Item = &InstanceSpec> {
        self.services.iter().flatten()
    }

    /// Dense index of an instance, `0..instance_count()`.
    pub fn flat_index(&self, id: InstanceId) -> Option<usize> {
        if id.service.0 >= self.services.len() || id.index >= self.services[id.service.0].len() {
            return None;
        }
        Some(self.services[..id.service.0].iter().map(Vec::len).sum::<usize>() + id.index)
    }
}

/// Quality-of-service vector of a request. Values are held constant over the
/// request's lifetime.
#[derive(Debug, Clone, PartialEq)]
pub struct Qos {
    /// Minimum instance capacity consumed on the instance and its host.
    pub min_capacity: u32,
    /// Bandwidth reserved on every traversal of a link.
    pub min_bandwidth: u32,
    /// Maximum end-to-end delay per slot, ms.
    pub max_delay: f64,
    pub burstiness: u32,
    pub max_packet: u32,
}

impl Qos {
    /// Traffic a request injects on each link it crosses (burst + packet).
    pub fn traffic(&self) -> f64 {
        (self.burstiness + self.max_packet) as f64
    }

    /// Processing delay at the instance, packet size over capacity.
    pub fn compute_delay(&self) -> f64 {
        self.max_packet as f64 / self.min_capacity as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: RequestId,
    pub arrival: Slot,
    pub service: ServiceId,
    /// PoA per slot, `poa_trace[k]` is the PoA at slot `arrival + k`.
    pub poa_trace: Vec<NodeId>,
    pub qos: Qos,
    /// Cumulative delay budget over the whole horizon, ms.
    pub sla_budget: f64,
}

impl Request {
    pub fn is_active(&self, t: Slot) -> bool {
        t >= self.arrival && t < self.arrival + self.poa_trace.len()
    }

    pub fn poa_at(&self, t: Slot) -> Result<NodeId, WorkloadError> {
        if t < self.arrival {
            return Err(WorkloadError::NotYetArrived { request: self.id, slot: t, arrival: self.arrival });
        }
        self.poa_trace.get(t - self.arrival).copied().ok_or(WorkloadError::OutsideHorizon {
            slot: t,
            horizon: self.arrival + self.poa_trace.len() - 1,
        })
    }

    pub fn qos_at(&self, _t: Slot) -> &Qos {
        &self.qos
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub horizon: Slot,
    pub catalog: ServiceCatalog,
    pub requests: Vec<Request>,
}

impl Scenario {
    pub fn new(horizon: Slot, catalog: ServiceCatalog, requests: Vec<Request>) -> Result<Self, WorkloadError> {
        for (i, r) in requests.iter().enumerate() {
            let bad = |m: &str| Err(WorkloadError::Invalid(format!("request {}: {m}", r.id)));
            if r.id.0 != i {
                return bad("id out of order");
            }
            if r.arrival == 0 || r.arrival > horizon {
                return bad("arrival outside horizon");
            }
            if r.poa_trace.len() != horizon - r.arrival + 1 {
                return bad("trace does not span arrival..=horizon");
            }
            if r.service.0 >= catalog.service_count() {
                return bad("unknown service");
            }
            let q = &r.qos;
            if q.min_capacity == 0 || q.min_bandwidth == 0 || q.burstiness == 0 || q.max_packet == 0 {
                return bad("QoS values must be positive");
            }
            if !(q.max_delay > 0.0) || !(r.sla_budget > 0.0) {
                return bad("delay bounds must be positive");
            }
        }
        Ok(Scenario { horizon, catalog, requests })
    }

    pub fn request(&self, id: RequestId) -> Result<&Request, WorkloadError> {
        self.requests.get(id.0).ok_or(WorkloadError::UnknownRequest(id))
    }

    /// Requests active at slot `t`, by id.
    pub fn active_at(&self, t: Slot) -> impl Iterator<Item = &Request> {
        self.requests.iter().filter(move |r| r.is_active(t))
    }

    /// Requests that have arrived by `t` and sit at `poa` during `t`.
    pub fn arrivals_at(&self, poa: NodeId, t: Slot) -> Vec<RequestId> {
        self.active_at(t)
            .filter(|r| r.poa_at(t).ok() == Some(poa))
            .map(|r| r.id)
            .collect()
    }

    /// Distinct services requested from `poa` during `t`.
    pub fn services_at(&self, poa: NodeId, t: Slot) -> BTreeSet<ServiceId> {
        self.active_at(t)
            .filter(|r| r.poa_at(t).ok() == Some(poa))
            .map(|r| r.service)
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn qos(min_capacity: u32, max_delay: f64) -> Qos {
        Qos { min_capacity, min_bandwidth: 1, max_delay, burstiness: 1, max_packet: 1 }
    }

    pub fn request(id: usize, arrival: Slot, service: usize, trace: Vec<usize>, qos: Qos) -> Request {
        Request {
            id: RequestId(id),
            arrival,
            service: ServiceId(service),
            poa_trace: trace.into_iter().map(NodeId).collect(),
            sla_budget: qos.max_delay * 100.0,
            qos,
        }
    }

    /// `services` services each with instances of the given (capacity, cost).
    pub fn catalog(services: usize, instances: &[(u32, f64)]) -> ServiceCatalog {
        ServiceCatalog::new(
            (0..services)
                .map(|s| {
                    instances
                        .iter()
                        .enumerate()
                        .map(|(i, &(capacity, cost))| InstanceSpec { id: InstanceId::new(s, i), capacity, cost })
                        .collect()
                })
                .collect(),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn poa_at_and_arrival_errors() {
        let r = request(0, 2, 0, vec![3, 3, 3], qos(1, 10.0));
        assert_eq!(r.poa_at(3).unwrap(), NodeId(3));
        assert_eq!(
            r.poa_at(1),
            Err(WorkloadError::NotYetArrived { request: RequestId(0), slot: 1, arrival: 2 })
        );
        assert!(r.poa_at(5).is_err());
    }

    #[test]
    fn arrivals_before_anyone_is_empty() {
        let sc = Scenario::new(
            3,
            catalog(1, &[(4, 1.0)]),
            vec![request(0, 2, 0, vec![1, 1], qos(1, 10.0)), request(1, 3, 0, vec![1], qos(1, 10.0))],
        )
        .unwrap();
        assert!(sc.arrivals_at(NodeId(1), 1).is_empty());
        assert_eq!(sc.arrivals_at(NodeId(1), 2), vec![RequestId(0)]);
        assert_eq!(sc.arrivals_at(NodeId(1), 3), vec![RequestId(0), RequestId(1)]);
    }

    #[test]
    fn catalog_flat_index() {
        let c = catalog(3, &[(4, 1.0), (4, 2.0)]);
        assert_eq!(c.instance_count(), 6);
        assert_eq!(c.flat_index(InstanceId::new(2, 1)), Some(5));
        assert_eq!(c.flat_index(InstanceId::new(3, 0)), None);
        assert!(c.instance(InstanceId::new(0, 2)).is_err());
    }

    #[test]
    fn scenario_rejects_short_trace() {
        let r = request(0, 1, 0, vec![1], qos(1, 10.0));
        assert!(Scenario::new(2, catalog(1, &[(4, 1.0)]), vec![r]).is_err());
    }
}
