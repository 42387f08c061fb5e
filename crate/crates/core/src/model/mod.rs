//! Decision variables, objective and feasibility predicates of the joint
//! placement / assignment / routing problem, plus the per-link delay calculus.

mod constraints;
mod csv_io;
mod eval;

pub use constraints::{check_constraints, Constraint, ConstraintReport, ConstraintResult, Witness};
pub use csv_io::ALLOCATION_CSV_HEADER;
pub use eval::{DelayBreakdown, SlotEvaluator};

use std::collections::{BTreeMap, BTreeSet};

use crate::ids::{InstanceId, LinkId, NodeId, PathId, RequestId, Slot};
use crate::topology::{Topology, TopologyError};
use crate::workload::{Scenario, WorkloadError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("request {request} has no allocation at slot {slot}")]
    NoAllocation { request: RequestId, slot: Slot },
    #[error("link {link} is not on the paths of request {request} at slot {slot}")]
    LinkNotOnPath { request: RequestId, link: LinkId, slot: Slot },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("allocation csv line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// How the congestion numerator of a link delay is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayModel {
    /// Only other requests whose chosen paths cross the link contribute.
    #[default]
    Restricted,
    /// Every other supported request of the slot contributes, whatever its
    /// route.
    Literal,
}

impl std::str::FromStr for DelayModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "restricted" => Ok(DelayModel::Restricted),
            "literal" => Ok(DelayModel::Literal),
            other => Err(format!("unknown delay model {other:?} (expected restricted or literal)")),
        }
    }
}

impl std::fmt::Display for DelayModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DelayModel::Restricted => "restricted",
            DelayModel::Literal => "literal",
        })
    }
}

/// Request `request` served by `instance` over the given path pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub request: RequestId,
    pub instance: InstanceId,
    pub inquiry: PathId,
    pub response: PathId,
    /// End-to-end delay as computed by whoever produced the allocation.
    pub recorded_delay: Option<f64>,
    /// Routing cost as computed by whoever produced the allocation.
    pub recorded_cost: Option<f64>,
}

impl Assignment {
    pub fn new(request: RequestId, instance: InstanceId, inquiry: PathId, response: PathId) -> Self {
        Assignment { request, instance, inquiry, response, recorded_delay: None, recorded_cost: None }
    }
}

/// Decisions for one slot. Requests without an assignment are unsupported.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotAllocation {
    pub placements: BTreeMap<InstanceId, BTreeSet<NodeId>>,
    pub assignments: Vec<Assignment>,
}

impl SlotAllocation {
    pub fn place(&mut self, instance: InstanceId, node: NodeId) {
        self.placements.entry(instance).or_default().insert(node);
    }

    pub fn hosts(&self, instance: InstanceId) -> Option<&BTreeSet<NodeId>> {
        self.placements.get(&instance)
    }

    pub fn assignment(&self, request: RequestId) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.request == request)
    }

    pub fn is_empty(&self) -> bool {
        self.placements.values().all(BTreeSet::is_empty) && self.assignments.is_empty()
    }

    /// Fills `recorded_delay` / `recorded_cost` of every assignment from the
    /// model's own evaluation.
    pub fn record(&mut self, model: &Model, slot: Slot) {
        let eval = SlotEvaluator::new(model, self, slot);
        let values: Vec<(Option<f64>, Option<f64>)> = self
            .assignments
            .iter()
            .map(|a| (eval.e2e_delay(a.request).ok(), eval.path_cost(a.request).ok()))
            .collect();
        for (a, (d, c)) in self.assignments.iter_mut().zip(values) {
            a.recorded_delay = d;
            a.recorded_cost = c;
        }
    }
}

/// Decisions over the horizon, keyed by slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    pub slots: BTreeMap<Slot, SlotAllocation>,
}

impl Allocation {
    pub fn new() -> Self {
        Allocation::default()
    }

    pub fn slot(&self, t: Slot) -> Option<&SlotAllocation> {
        self.slots.get(&t)
    }

    pub fn slot_mut(&mut self, t: Slot) -> &mut SlotAllocation {
        self.slots.entry(t).or_default()
    }

    pub fn assignment(&self, request: RequestId, t: Slot) -> Option<&Assignment> {
        self.slot(t).and_then(|s| s.assignment(request))
    }

    pub fn is_empty(&self) -> bool {
        self.slots.values().all(SlotAllocation::is_empty)
    }

    /// Active (request, slot) pairs left without an assignment.
    pub fn unsupported(&self, scenario: &Scenario) -> Vec<(RequestId, Slot)> {
        let mut out = Vec::new();
        for t in 1..=scenario.horizon {
            for r in scenario.active_at(t) {
                if self.assignment(r.id, t).is_none() {
                    out.push((r.id, t));
                }
            }
        }
        out
    }
}

/// A topology and scenario under one delay model. All evaluation hangs off
/// this.
#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub topology: &'a Topology,
    pub scenario: &'a Scenario,
    pub delay_model: DelayModel,
}

impl<'a> Model<'a> {
    pub fn new(topology: &'a Topology, scenario: &'a Scenario) -> Self {
        Model { topology, scenario, delay_model: DelayModel::default() }
    }

    pub fn with_delay_model(mut self, delay_model: DelayModel) -> Self {
        self.delay_model = delay_model;
        self
    }

    fn slot_of<'b>(&self, alloc: &'b Allocation, request: RequestId, t: Slot) -> Result<&'b SlotAllocation, ModelError> {
        self.scenario.request(request)?;
        alloc
            .slot(t)
            .filter(|s| s.assignment(request).is_some())
            .ok_or(ModelError::NoAllocation { request, slot: t })
    }

    /// Delay request `request` sees on `link` at slot `t`, ms.
    pub fn link_delay(&self, alloc: &Allocation, request: RequestId, link: LinkId, t: Slot) -> Result<f64, ModelError> {
        let slot = self.slot_of(alloc, request, t)?;
        SlotEvaluator::new(self, slot, t).link_delay(request, link)
    }

    /// End-to-end delay of `request` at slot `t`, ms.
    pub fn e2e_delay(&self, alloc: &Allocation, request: RequestId, t: Slot) -> Result<f64, ModelError> {
        let slot = self.slot_of(alloc, request, t)?;
        SlotEvaluator::new(self, slot, t).e2e_delay(request)
    }

    /// Routing cost of `request` at slot `t`.
    pub fn path_cost(&self, alloc: &Allocation, request: RequestId, t: Slot) -> Result<f64, ModelError> {
        let slot = self.slot_of(alloc, request, t)?;
        SlotEvaluator::new(self, slot, t).path_cost(request)
    }

    pub fn breakdown(&self, alloc: &Allocation, request: RequestId, t: Slot) -> Result<DelayBreakdown, ModelError> {
        let slot = self.slot_of(alloc, request, t)?;
        SlotEvaluator::new(self, slot, t).breakdown(request)
    }

    /// Placement, instance and routing cost of one slot.
    pub fn slot_cost(&self, slot: &SlotAllocation, t: Slot) -> Result<f64, ModelError> {
        let mut cost = 0.0;
        for hosts in slot.placements.values() {
            for &n in hosts {
                cost += self.topology.node(n)?.compute_cost;
            }
        }
        let eval = SlotEvaluator::new(self, slot, t);
        for a in &slot.assignments {
            cost += self.scenario.catalog.instance(a.instance)?.cost;
            cost += eval.assignment_path_cost(a)?;
        }
        Ok(cost)
    }

    /// Objective summed over every slot of the allocation.
    pub fn objective_cost(&self, alloc: &Allocation) -> Result<f64, ModelError> {
        alloc.slots.iter().map(|(&t, s)| self.slot_cost(s, t)).sum()
    }

    pub fn check_constraints(&self, alloc: &Allocation) -> ConstraintReport {
        check_constraints(self, alloc)
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::topology::{LinkSpec, NodeSpec, Path};

    pub fn node(id: usize, cap: u32, cost: f64) -> NodeSpec {
        NodeSpec { id: NodeId(id), tier: 0, compute_capacity: cap, compute_cost: cost }
    }

    pub fn link(id: usize, src: usize, dst: usize, cap: u32, cost: f64) -> LinkSpec {
        LinkSpec { id: LinkId(id), src: NodeId(src), dst: NodeId(dst), bandwidth_capacity: cap, link_cost: cost }
    }

    /// Self paths for every node followed by `extra` (head, tail, links).
    pub fn topology(nodes: Vec<NodeSpec>, links: Vec<LinkSpec>, extra: &[(usize, usize, &[usize])], poa: &[usize]) -> Topology {
        let n = nodes.len();
        let mut paths: Vec<Path> =
            (0..n).map(|i| Path { id: PathId(i), head: NodeId(i), tail: NodeId(i), links: vec![] }).collect();
        for &(h, t, ls) in extra {
            paths.push(Path {
                id: PathId(paths.len()),
                head: NodeId(h),
                tail: NodeId(t),
                links: ls.iter().map(|&l| LinkId(l)).collect(),
            });
        }
        Topology::new(nodes, links, paths, poa.iter().map(|&p| NodeId(p)).collect()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use crate::workload::testutil::{catalog, qos, request};
    use crate::workload::{Qos, Scenario};

    /// n0 (PoA) <-> n1 over l0 (0->1) and l1 (1->0); paths p2: 0->1, p3: 1->0.
    fn pair() -> Topology {
        topology(
            vec![node(0, 10, 50.0), node(1, 10, 50.0)],
            vec![link(0, 0, 1, 100, 10.0), link(1, 1, 0, 100, 20.0)],
            &[(0, 1, &[0]), (1, 0, &[1])],
            &[0],
        )
    }

    fn q(burst: u32, packet: u32, cap: u32) -> Qos {
        Qos { min_capacity: cap, min_bandwidth: 1, max_delay: 50.0, burstiness: burst, max_packet: packet }
    }

    #[test]
    fn lone_request_has_zero_link_delay() {
        let topo = pair();
        let sc = Scenario::new(1, catalog(1, &[(10, 20.0)]), vec![request(0, 1, 0, vec![0], q(2, 1, 10))]).unwrap();
        let m = Model::new(&topo, &sc);
        let mut alloc = Allocation::new();
        let s = alloc.slot_mut(1);
        s.place(InstanceId::new(0, 0), NodeId(1));
        s.assignments.push(Assignment::new(RequestId(0), InstanceId::new(0, 0), PathId(2), PathId(3)));
        assert_eq!(m.link_delay(&alloc, RequestId(0), LinkId(0), 1).unwrap(), 0.0);
        assert!((m.e2e_delay(&alloc, RequestId(0), 1).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(m.path_cost(&alloc, RequestId(0), 1).unwrap(), 30.0);
        // placement 50 + instance 20 + paths 30
        assert_eq!(m.objective_cost(&alloc).unwrap(), 100.0);
        assert!(matches!(m.link_delay(&alloc, RequestId(0), LinkId(5), 1), Err(ModelError::Topology(_))));
        assert!(matches!(m.e2e_delay(&alloc, RequestId(0), 2), Err(ModelError::NoAllocation { .. })));
    }

    #[test]
    fn shared_link_delay_is_other_traffic_over_capacity() {
        let topo = pair();
        let reqs = vec![request(0, 1, 0, vec![0], q(2, 1, 10)), request(1, 1, 0, vec![0], q(1, 1, 10))];
        let sc = Scenario::new(1, catalog(1, &[(10, 20.0)]), reqs).unwrap();
        let m = Model::new(&topo, &sc);
        let mut alloc = Allocation::new();
        let s = alloc.slot_mut(1);
        s.place(InstanceId::new(0, 0), NodeId(1));
        for r in 0..2 {
            s.assignments.push(Assignment::new(RequestId(r), InstanceId::new(0, 0), PathId(2), PathId(3)));
        }
        assert!((m.link_delay(&alloc, RequestId(1), LinkId(0), 1).unwrap() - 0.03).abs() < 1e-12);
        // inquiry and response each 0.03, compute 1/10
        assert!((m.e2e_delay(&alloc, RequestId(1), 1).unwrap() - 0.16).abs() < 1e-12);
        let b = m.breakdown(&alloc, RequestId(1), 1).unwrap();
        assert!((b.total - (b.network + b.compute)).abs() < 1e-12);
    }

    #[test]
    fn empty_allocation_costs_nothing() {
        let topo = pair();
        let sc = Scenario::new(1, catalog(1, &[(10, 20.0)]), vec![request(0, 1, 0, vec![0], qos(1, 10.0))]).unwrap();
        let m = Model::new(&topo, &sc);
        let alloc = Allocation::new();
        assert_eq!(m.objective_cost(&alloc).unwrap(), 0.0);
        assert!(alloc.is_empty());
        assert_eq!(alloc.unsupported(&sc), vec![(RequestId(0), 1)]);
    }

    #[test]
    fn delay_model_parses() {
        assert_eq!("literal".parse::<DelayModel>().unwrap(), DelayModel::Literal);
        assert_eq!(DelayModel::default().to_string(), "restricted");
        assert!("x".parse::<DelayModel>().is_err());
    }
}
