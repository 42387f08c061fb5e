use std::collections::{BTreeMap, BTreeSet};

use super::{tightest_first, OrchestratorError, PredictionTable, SlotState};
use crate::ids::{InstanceId, NodeId, PathId, RequestId, ServiceId};

#[derive(Debug, Clone, PartialEq)]
pub struct WiseConfig {
    /// Weight of path delay (ms) against cost units in the host score.
    pub w_delay: f64,
}

impl Default for WiseConfig {
    fn default() -> Self {
        WiseConfig { w_delay: 1.0 }
    }
}

/// A host node and the lowest-delay path pair towards each PoA it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct HostChoice {
    pub node: NodeId,
    /// PoA -> (inquiry PoA->node, response node->PoA).
    pub paths: BTreeMap<NodeId, (PathId, PathId)>,
    pub score: f64,
}

/// Lowest-delay path from `from` to `to`, ties by cost then id.
fn best_path(state: &SlotState, from: NodeId, to: NodeId) -> Option<(PathId, f64, f64)> {
    let topo = state.model().topology;
    topo.paths_between(from, to)
        .iter()
        .map(|&p| (p, state.path_delay(p), topo.path_cost(p).expect("known path")))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)))
}

fn min_need(state: &SlotState, group: &[RequestId]) -> u64 {
    let sc = state.model().scenario;
    group.iter().map(|r| sc.requests[r.0].qos.min_capacity as u64).min().unwrap_or(1).max(1)
}

/// Unplaced instance of `service` with capacity at least `need`, cheapest
/// first.
fn cheapest_unplaced(state: &SlotState, service: ServiceId, need: u64) -> Option<InstanceId> {
    state
        .model()
        .scenario
        .catalog
        .instances(service)
        .iter()
        .filter(|i| state.host(i.id).is_none() && i.capacity as u64 >= need)
        .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.id.cmp(&b.id)))
        .map(|i| i.id)
}

/// Picks the node minimising, over every PoA in `eta`, the weighted delay
/// plus cost of its best path pair plus the node's placement cost.
///
/// Nodes in `excluded`, nodes without `min Ǐ` residual compute, nodes that
/// cannot take another instance of the service and nodes unreachable from
/// some PoA are skipped.
pub fn select_host_node(
    state: &SlotState,
    service: ServiceId,
    group: &[RequestId],
    eta: &[NodeId],
    excluded: &BTreeSet<NodeId>,
    config: &WiseConfig,
) -> Result<HostChoice, OrchestratorError> {
    if eta.is_empty() {
        return Err(OrchestratorError::NoFeasibleHost(service));
    }
    let topo = state.model().topology;
    let need = min_need(state, group);
    let spare_instance = cheapest_unplaced(state, service, need).is_some();
    let mut best: Option<HostChoice> = None;
    'nodes: for n1 in topo.node_ids() {
        if excluded.contains(&n1) || state.node_residual(n1) < need {
            continue;
        }
        let reusable = state.instances_on(n1, service).iter().any(|&i| state.instance_residual(i) >= need);
        if !spare_instance && !reusable {
            continue;
        }
        let node_cost = topo.nodes()[n1.0].compute_cost;
        let mut score = 0.0;
        let mut paths = BTreeMap::new();
        for &n2 in eta {
            let (Some((pin, din, cin)), Some((pout, dout, cout))) = (best_path(state, n2, n1), best_path(state, n1, n2))
            else {
                continue 'nodes;
            };
            score += config.w_delay * (din + dout) + cin + cout + node_cost;
            paths.insert(n2, (pin, pout));
        }
        if best.as_ref().is_none_or(|b| score < b.score) {
            best = Some(HostChoice { node: n1, paths, score });
        }
    }
    best.ok_or(OrchestratorError::NoFeasibleHost(service))
}

/// Path pairs between `poa` and `node`: the host choice's pair first, then
/// the rest by estimated delay, cost and ids.
fn pair_candidates(state: &SlotState, poa: NodeId, choice: &HostChoice) -> Vec<(PathId, PathId)> {
    let topo = state.model().topology;
    let node = choice.node;
    let preferred = choice.paths.get(&poa).copied();
    let mut rest: Vec<(f64, f64, PathId, PathId)> = Vec::new();
    for &pi in topo.paths_between(poa, node) {
        for &pr in topo.paths_between(node, poa) {
            if Some((pi, pr)) == preferred {
                continue;
            }
            let d = state.path_delay(pi) + state.path_delay(pr);
            let c = topo.path_cost(pi).expect("known path") + topo.path_cost(pr).expect("known path");
            rest.push((d, c, pi, pr));
        }
    }
    rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then((a.2, a.3).cmp(&(b.2, b.3))));
    preferred.into_iter().chain(rest.into_iter().map(|(_, _, pi, pr)| (pi, pr))).collect()
}

/// Assigns pending requests, in order, to `inst` wherever they fit.
fn fill(state: &mut SlotState, inst: InstanceId, choice: &HostChoice, pending: &mut Vec<RequestId>) -> usize {
    let model = *state.model();
    let t = state.slot();
    let mut taken = Vec::new();
    for &r in pending.iter() {
        let req = &model.scenario.requests[r.0];
        let need = req.qos.min_capacity as u64;
        if state.instance_residual(inst) < need || state.node_residual(choice.node) < need {
            continue;
        }
        let poa = req.poa_at(t).expect("pending requests are active");
        for (pi, pr) in pair_candidates(state, poa, choice) {
            if state.assign(r, inst, pi, pr).is_some() {
                taken.push(r);
                break;
            }
        }
    }
    pending.retain(|r| !taken.contains(r));
    taken.len()
}

/// Fills `choice.node` with instances of `service`: instances already on the
/// node first, then new instances (cheapest first) while the node has room
/// for the smallest pending request and the catalog has instances left.
/// Assigned requests are removed from `pending`; returns how many.
pub fn water_fill(state: &mut SlotState, choice: &HostChoice, service: ServiceId, pending: &mut Vec<RequestId>) -> usize {
    let before = pending.len();
    for inst in state.instances_on(choice.node, service) {
        fill(state, inst, choice, pending);
    }
    while !pending.is_empty() {
        let need = min_need(state, pending);
        if state.node_residual(choice.node) < need {
            break;
        }
        let Some(inst) = cheapest_unplaced(state, service, need) else { break };
        state.place(inst, choice.node);
        if fill(state, inst, choice, pending) == 0 {
            state.unplace(inst);
            break;
        }
    }
    before - pending.len()
}

fn actual_poas(state: &SlotState, group: &[RequestId]) -> Vec<NodeId> {
    let set: BTreeSet<NodeId> = group
        .iter()
        .filter_map(|r| state.model().scenario.requests[r.0].poa_at(state.slot()).ok())
        .collect();
    set.into_iter().collect()
}

/// Places one service group: select a host over `eta`, water-fill it, and
/// reselect among untried nodes while requests remain. `skip` is excluded
/// from the first selection only. Returns the requests left unserved.
fn place_group(
    state: &mut SlotState,
    service: ServiceId,
    mut group: Vec<RequestId>,
    mut eta: Vec<NodeId>,
    skip: &BTreeSet<NodeId>,
    config: &WiseConfig,
) -> Vec<RequestId> {
    let mut tried = skip.clone();
    let mut first = true;
    while !group.is_empty() {
        let Ok(choice) = select_host_node(state, service, &group, &eta, &tried, config) else { break };
        if std::mem::take(&mut first) {
            tried.clear();
        }
        tried.insert(choice.node);
        water_fill(state, &choice, service, &mut group);
        eta = actual_poas(state, &group);
    }
    group
}

/// Water-filling placement of the slot's actual requests, steered by the
/// predicted PoAs of each service. Services predicted but not requested are
/// left unplaced; an instance with no request would only add cost.
///
/// A group left short is retried from its starting state over its actual
/// PoAs, restricted at first to nodes that can hold the whole group; the
/// retry is kept only if it serves more requests.
pub fn wise_place(state: &mut SlotState, prediction: &PredictionTable, config: &WiseConfig) {
    let model = *state.model();
    let t = state.slot();
    let mut pending = tightest_first(&model, t);
    while let Some(&r) = pending.first() {
        let service = model.scenario.requests[r.0].service;
        let group: Vec<RequestId> =
            pending.iter().copied().filter(|q| model.scenario.requests[q.0].service == service).collect();
        pending.retain(|q| model.scenario.requests[q.0].service != service);
        let mut eta = prediction.poas_for(service);
        if eta.is_empty() {
            eta = actual_poas(state, &group);
        }
        let snapshot = state.clone();
        let left = place_group(state, service, group.clone(), eta, &BTreeSet::new(), config);
        if left.is_empty() {
            continue;
        }
        let mut retry = snapshot;
        let total: u64 = group.iter().map(|q| model.scenario.requests[q.0].qos.min_capacity as u64).sum();
        let mut small: BTreeSet<NodeId> = model.topology.node_ids().filter(|&n| retry.node_residual(n) < total).collect();
        if small.len() == model.topology.node_count() {
            small.clear();
        }
        let eta = actual_poas(&retry, &group);
        if place_group(&mut retry, service, group, eta, &small, config).len() < left.len() {
            *state = retry;
        }
    }
}
