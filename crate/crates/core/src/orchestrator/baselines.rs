use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::wise::{select_host_node, water_fill, WiseConfig};
use super::{tightest_first, SlotState};
use crate::ids::{NodeId, RequestId, ServiceId};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomConfig {
    /// Draws per request before it is declared unsupported.
    pub draws: usize,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig { draws: 32 }
    }
}

/// For each active request, in id order, draws (instance, node, inquiry,
/// response) uniformly until a draw passes every feasibility check. An
/// instance drawn for a second node is rejected, so placements stay single
/// host.
pub fn random_place<R: Rng>(state: &mut SlotState, rng: &mut R, config: &RandomConfig) {
    let model = *state.model();
    let topo = model.topology;
    let t = state.slot();
    let nodes: Vec<NodeId> = topo.node_ids().collect();
    for req in model.scenario.active_at(t) {
        let poa = req.poa_at(t).expect("active request has a PoA");
        let instances = model.scenario.catalog.instances(req.service);
        for _ in 0..config.draws {
            let inst = instances.choose(rng).expect("catalog services are non-empty").id;
            let node = *nodes.choose(rng).expect("topology has nodes");
            let (Some(&pi), Some(&pr)) = (topo.paths_between(poa, node).choose(rng), topo.paths_between(node, poa).choose(rng))
            else {
                continue;
            };
            let fresh = state.host(inst).is_none();
            if !state.place(inst, node) {
                continue;
            }
            if state.assign(req.id, inst, pi, pr).is_some() {
                break;
            }
            if fresh {
                state.unplace(inst);
            }
        }
    }
}

/// Single-node-per-service baseline. Each service's home node is chosen
/// once, the first time the service is requested, and never revisited.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CcamPlanner {
    homes: BTreeMap<ServiceId, NodeId>,
}

impl CcamPlanner {
    pub fn new() -> Self {
        CcamPlanner::default()
    }

    pub fn home(&self, service: ServiceId) -> Option<NodeId> {
        self.homes.get(&service).copied()
    }
}

/// Hosts every instance of a service on its home node, water-filling the
/// slot's requests into them; overflow is unsupported.
pub fn ccam_place(state: &mut SlotState, planner: &mut CcamPlanner, config: &WiseConfig) {
    let model = *state.model();
    let t = state.slot();
    let all_poas: Vec<NodeId> = model.topology.poa_nodes().to_vec();
    let mut pending = tightest_first(&model, t);
    while let Some(&r) = pending.first() {
        let service = model.scenario.requests[r.0].service;
        let mut group: Vec<RequestId> =
            pending.iter().copied().filter(|q| model.scenario.requests[q.0].service == service).collect();
        pending.retain(|q| model.scenario.requests[q.0].service != service);
        let home = match planner.homes.get(&service) {
            Some(&n) => n,
            None => match select_host_node(state, service, &group, &all_poas, &BTreeSet::new(), config) {
                Ok(c) => {
                    planner.homes.insert(service, c.node);
                    c.node
                }
                Err(_) => continue,
            },
        };
        // path preferences are recomputed for this slot's congestion
        let mut excluded: BTreeSet<NodeId> = model.topology.node_ids().collect();
        excluded.remove(&home);
        let choice = match select_host_node(state, service, &group, &all_poas, &excluded, config) {
            Ok(c) => c,
            Err(_) => super::HostChoice { node: home, paths: BTreeMap::new(), score: 0.0 },
        };
        water_fill(state, &choice, service, &mut group);
    }
}
