use std::collections::BTreeMap;

use crate::ids::{InstanceId, LinkId, NodeId, PathId, RequestId, ServiceId, Slot};
use crate::model::{Assignment, DelayModel, Model, SlotAllocation};

#[derive(Debug, Clone)]
struct Served {
    request: RequestId,
    traffic: f64,
    delay: f64,
    bound: f64,
    /// Sum over crossed links of multiplicity / capacity.
    weight: f64,
}

/// Residual capacities and congestion of one slot while an orchestrator
/// builds its allocation. Every accepted assignment keeps C3, C4, C7, C11 and
/// the remaining SLA budget satisfied for all requests served so far.
#[derive(Debug, Clone)]
pub struct SlotState<'m> {
    model: Model<'m>,
    slot: Slot,
    bounds: Vec<f64>,
    node_load: Vec<u64>,
    host_of: BTreeMap<InstanceId, NodeId>,
    inst_load: BTreeMap<InstanceId, u64>,
    link_bw: Vec<u64>,
    link_traffic: Vec<f64>,
    total_traffic: f64,
    /// (index into `served`, multiplicity) per link.
    link_users: Vec<Vec<(usize, u32)>>,
    served: Vec<Served>,
    alloc: SlotAllocation,
}

impl<'m> SlotState<'m> {
    /// `bounds[r]` is the largest delay request `r` may see this slot.
    pub fn new(model: Model<'m>, slot: Slot, bounds: Vec<f64>) -> Self {
        let n = model.topology.node_count();
        let l = model.topology.links().len();
        SlotState {
            model,
            slot,
            bounds,
            node_load: vec![0; n],
            host_of: BTreeMap::new(),
            inst_load: BTreeMap::new(),
            link_bw: vec![0; l],
            link_traffic: vec![0.0; l],
            total_traffic: 0.0,
            link_users: vec![Vec::new(); l],
            served: Vec::new(),
            alloc: SlotAllocation::default(),
        }
    }

    pub fn model(&self) -> &Model<'m> {
        &self.model
    }

    pub fn slot(&self) -> Slot {
        self.slot
    }

    pub fn bound(&self, r: RequestId) -> f64 {
        self.bounds[r.0]
    }

    pub fn node_residual(&self, n: NodeId) -> u64 {
        (self.model.topology.nodes()[n.0].compute_capacity as u64).saturating_sub(self.node_load[n.0])
    }

    pub fn host(&self, inst: InstanceId) -> Option<NodeId> {
        self.host_of.get(&inst).copied()
    }

    pub fn instance_residual(&self, inst: InstanceId) -> u64 {
        let cap = self.model.scenario.catalog.instance(inst).map(|i| i.capacity as u64).unwrap_or(0);
        cap.saturating_sub(self.inst_load.get(&inst).copied().unwrap_or(0))
    }

    /// Instances of `service` hosted on `node`, in catalog order.
    pub fn instances_on(&self, node: NodeId, service: ServiceId) -> Vec<InstanceId> {
        self.host_of
            .iter()
            .filter(|(i, &n)| i.service == service && n == node)
            .map(|(&i, _)| i)
            .collect()
    }

    pub fn is_served(&self, r: RequestId) -> bool {
        self.served.iter().any(|s| s.request == r)
    }

    pub fn served_count(&self) -> usize {
        self.served.len()
    }

    /// Places `inst` on `node`. Fails when it already sits elsewhere.
    pub fn place(&mut self, inst: InstanceId, node: NodeId) -> bool {
        match self.host_of.get(&inst) {
            Some(&n) => n == node,
            None => {
                self.host_of.insert(inst, node);
                self.alloc.place(inst, node);
                true
            }
        }
    }

    /// Removes a placement that carries no requests.
    pub fn unplace(&mut self, inst: InstanceId) {
        if self.inst_load.get(&inst).copied().unwrap_or(0) == 0 {
            self.host_of.remove(&inst);
            self.alloc.placements.remove(&inst);
        }
    }

    fn other_traffic(&self, l: LinkId) -> f64 {
        match self.model.delay_model {
            DelayModel::Restricted => self.link_traffic[l.0],
            DelayModel::Literal => self.total_traffic,
        }
    }

    fn cap(&self, l: LinkId) -> f64 {
        self.model.topology.links()[l.0].bandwidth_capacity as f64
    }

    /// Delay a new request would see on `path` under current congestion,
    /// excluding compute.
    pub fn path_delay(&self, path: PathId) -> f64 {
        self.model.topology.paths()[path.0].links.iter().map(|&l| self.other_traffic(l) / self.cap(l)).sum()
    }

    fn crossing(&self, inquiry: PathId, response: PathId) -> Vec<(LinkId, u32)> {
        let paths = self.model.topology.paths();
        let mut m: BTreeMap<LinkId, u32> = BTreeMap::new();
        for &l in paths[inquiry.0].links.iter().chain(&paths[response.0].links) {
            *m.entry(l).or_default() += 1;
        }
        m.into_iter().collect()
    }

    /// Assigns `r` to `inst` over the path pair if every constraint stays
    /// satisfied, returning its delay. `inst` must already be hosted at the
    /// inquiry tail.
    pub fn assign(&mut self, r: RequestId, inst: InstanceId, inquiry: PathId, response: PathId) -> Option<f64> {
        let sc = self.model.scenario;
        let topo = self.model.topology;
        let req = sc.request(r).ok()?;
        let poa = req.poa_at(self.slot).ok()?;
        let (pi, pr) = (topo.path(inquiry).ok()?, topo.path(response).ok()?);
        let host = self.host(inst)?;
        if inst.service != req.service || self.is_served(r) {
            return None;
        }
        if pi.head != poa || pi.tail != host || pr.head != host || pr.tail != poa {
            return None;
        }
        let q = &req.qos;
        let need = q.min_capacity as u64;
        if self.instance_residual(inst) < need || self.node_residual(host) < need {
            return None;
        }
        let crossing = self.crossing(inquiry, response);
        for &(l, m) in &crossing {
            if self.link_bw[l.0] + q.min_bandwidth as u64 * m as u64 > topo.links()[l.0].bandwidth_capacity as u64 {
                return None;
            }
        }
        let delay = self.path_delay(inquiry) + self.path_delay(response) + q.compute_delay();
        let bound = self.bounds[r.0];
        if delay > bound {
            return None;
        }

        let traffic = q.traffic();
        let mut deltas: Vec<(usize, f64)> = Vec::new();
        match self.model.delay_model {
            DelayModel::Restricted => {
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for &(l, _) in &crossing {
                    let c = self.cap(l);
                    for &(s, ms) in &self.link_users[l.0] {
                        *acc.entry(s).or_default() += traffic * ms as f64 / c;
                    }
                }
                deltas.extend(acc);
            }
            DelayModel::Literal => {
                deltas.extend(self.served.iter().enumerate().map(|(s, sv)| (s, traffic * sv.weight)));
            }
        }
        if deltas.iter().any(|&(s, d)| self.served[s].delay + d > self.served[s].bound) {
            return None;
        }

        for (s, d) in deltas {
            self.served[s].delay += d;
        }
        let idx = self.served.len();
        let mut weight = 0.0;
        for &(l, m) in &crossing {
            self.link_bw[l.0] += q.min_bandwidth as u64 * m as u64;
            self.link_traffic[l.0] += traffic;
            self.link_users[l.0].push((idx, m));
            weight += m as f64 / self.cap(l);
        }
        self.total_traffic += traffic;
        self.served.push(Served { request: r, traffic, delay, bound, weight });
        *self.inst_load.entry(inst).or_default() += need;
        self.node_load[host.0] += need;
        self.alloc.assignments.push(Assignment::new(r, inst, inquiry, response));
        Some(delay)
    }

    /// Current delay estimate of a served request.
    pub fn delay_of(&self, r: RequestId) -> Option<f64> {
        self.served.iter().find(|s| s.request == r).map(|s| s.delay)
    }

    /// Traffic a served request injects per crossed link.
    pub fn traffic_of(&self, r: RequestId) -> Option<f64> {
        self.served.iter().find(|s| s.request == r).map(|s| s.traffic)
    }

    pub fn allocation(&self) -> &SlotAllocation {
        &self.alloc
    }

    /// The slot's decisions with delays and costs recorded by the model.
    pub fn finish(self) -> SlotAllocation {
        let mut alloc = self.alloc;
        alloc.record(&self.model, self.slot);
        alloc
    }
}
