use super::{OrchestratorError, SlaLedger, SlotState};
use crate::ids::{InstanceId, NodeId, PathId, RequestId, Slot};
use crate::model::{Allocation, Model, SlotAllocation};

/// Size limits beyond which [`exact_solve`] refuses to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLimits {
    pub max_requests: usize,
    pub max_horizon: usize,
    pub max_nodes: usize,
    pub max_services: usize,
    pub max_instances_per_service: usize,
    pub max_paths_per_pair: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            max_requests: 5,
            max_horizon: 3,
            max_nodes: 6,
            max_services: 3,
            max_instances_per_service: 3,
            max_paths_per_pair: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactConfig {
    pub limits: ExactLimits,
    /// Charged per unsupported request-slot.
    pub penalty: f64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { limits: ExactLimits::default(), penalty: 1e6 }
    }
}

#[derive(Debug, Clone)]
enum Choice {
    Serve { inst: InstanceId, node: NodeId, inquiry: PathId, response: PathId },
    Unsupported,
}

#[derive(Debug, Clone)]
struct Opt {
    choice: Choice,
    /// Position in the canonical (instance, host, inquiry, response) order;
    /// unsupported is last.
    canon: usize,
    /// Instance plus routing cost, or the penalty. Placement cost comes on
    /// top when the instance is new.
    base: f64,
}

#[derive(Debug)]
struct Point {
    request: RequestId,
    opts: Vec<Opt>,
}

#[derive(Debug)]
struct SlotPlan {
    slot: Slot,
    points: Vec<Point>,
    /// `suffix_lb[j]`: lower bound on the cost of points `j..`.
    suffix_lb: Vec<f64>,
}

fn plan_slot(model: &Model, t: Slot, penalty: f64) -> SlotPlan {
    let topo = model.topology;
    let sc = model.scenario;
    let mut points = Vec::new();
    for req in sc.active_at(t) {
        let poa = req.poa_at(t).expect("active request has a PoA");
        let need = req.qos.min_capacity;
        let mut opts = Vec::new();
        let mut canon = 0;
        for inst in sc.catalog.instances(req.service) {
            for node in topo.nodes() {
                for &pi in topo.paths_between(poa, node.id) {
                    for &pr in topo.paths_between(node.id, poa) {
                        let idx = canon;
                        canon += 1;
                        if inst.capacity < need || node.compute_capacity < need {
                            continue;
                        }
                        let base =
                            inst.cost + topo.path_cost(pi).expect("known path") + topo.path_cost(pr).expect("known path");
                        opts.push(Opt {
                            choice: Choice::Serve { inst: inst.id, node: node.id, inquiry: pi, response: pr },
                            canon: idx,
                            base,
                        });
                    }
                }
            }
        }
        opts.push(Opt { choice: Choice::Unsupported, canon, base: penalty });
        opts.sort_by(|a, b| a.base.total_cmp(&b.base).then(a.canon.cmp(&b.canon)));
        points.push(Point { request: req.id, opts });
    }
    let mut suffix_lb = vec![0.0; points.len() + 1];
    for j in (0..points.len()).rev() {
        suffix_lb[j] = suffix_lb[j + 1] + points[j].opts[0].base;
    }
    SlotPlan { slot: t, points, suffix_lb }
}

struct Search<'a, 'm> {
    model: Model<'m>,
    plans: &'a [SlotPlan],
    /// Lower bound on the cost of all plans after index k.
    future_lb: Vec<f64>,
    penalty: f64,
    best_cost: f64,
    best_choice: Vec<usize>,
    best: Option<Vec<SlotAllocation>>,
    choice: Vec<usize>,
    done: Vec<SlotAllocation>,
}

fn tol(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

impl<'a, 'm> Search<'a, 'm> {
    fn new(model: Model<'m>, plans: &'a [SlotPlan], future_lb: Vec<f64>, penalty: f64) -> Self {
        Search {
            model,
            plans,
            future_lb,
            penalty,
            best_cost: f64::INFINITY,
            best_choice: Vec::new(),
            best: None,
            choice: Vec::new(),
            done: Vec::new(),
        }
    }

    fn run(mut self, ledger: &SlaLedger) -> (f64, Vec<SlotAllocation>) {
        if self.plans.is_empty() {
            return (0.0, Vec::new());
        }
        let state = ledger.slot_state(self.model, self.plans[0].slot);
        self.dfs(0, 0, state, 0.0, ledger);
        (self.best_cost, self.best.expect("the all-unsupported choice is always feasible"))
    }

    fn dfs(&mut self, k: usize, pos: usize, state: SlotState<'m>, partial: f64, ledger: &SlaLedger) {
        let plan = &self.plans[k];
        if pos == plan.points.len() {
            let slot = state.finish();
            let mut next = ledger.clone();
            next.charge(&slot);
            self.done.push(slot);
            if k + 1 == self.plans.len() {
                let better = self.best.is_none()
                    || partial < self.best_cost - tol(self.best_cost)
                    || ((partial - self.best_cost).abs() <= tol(self.best_cost) && self.choice < self.best_choice);
                if better {
                    self.best_cost = partial;
                    self.best_choice = self.choice.clone();
                    self.best = Some(self.done.clone());
                }
            } else {
                let state = next.slot_state(self.model, self.plans[k + 1].slot);
                self.dfs(k + 1, 0, state, partial, &next);
            }
            self.done.pop();
            return;
        }
        let point = &plan.points[pos];
        let rest = plan.suffix_lb[pos + 1] + self.future_lb[k];
        for opt in &point.opts {
            if partial + opt.base + rest > self.best_cost + tol(self.best_cost) {
                break;
            }
            self.choice.push(opt.canon);
            match opt.choice {
                Choice::Unsupported => self.dfs(k, pos + 1, state.clone(), partial + self.penalty, ledger),
                Choice::Serve { inst, node, inquiry, response } => {
                    let extra = match state.host(inst) {
                        None => self.model.topology.nodes()[node.0].compute_cost,
                        Some(n) if n == node => 0.0,
                        Some(_) => {
                            self.choice.pop();
                            continue;
                        }
                    };
                    let mut next = state.clone();
                    next.place(inst, node);
                    if next.assign(point.request, inst, inquiry, response).is_some() {
                        self.dfs(k, pos + 1, next, partial + opt.base + extra, ledger);
                    }
                }
            }
            self.choice.pop();
        }
    }
}

fn check_limits(model: &Model, limits: &ExactLimits) -> Result<(), OrchestratorError> {
    let sc = model.scenario;
    let topo = model.topology;
    let max_inst = (0..sc.catalog.service_count())
        .map(|s| sc.catalog.instances(crate::ids::ServiceId(s)).len())
        .max()
        .unwrap_or(0);
    let max_paths = topo
        .node_ids()
        .flat_map(|a| topo.node_ids().map(move |b| (a, b)))
        .map(|(a, b)| topo.paths_between(a, b).len())
        .max()
        .unwrap_or(0);
    let checks = [
        ("requests", sc.requests.len(), limits.max_requests),
        ("horizon", sc.horizon, limits.max_horizon),
        ("nodes", topo.node_count(), limits.max_nodes),
        ("services", sc.catalog.service_count(), limits.max_services),
        ("instances per service", max_inst, limits.max_instances_per_service),
        ("paths per pair", max_paths, limits.max_paths_per_pair),
    ];
    for (what, value, limit) in checks {
        if value > limit {
            return Err(OrchestratorError::ExactLimit { what, value, limit });
        }
    }
    Ok(())
}

/// Minimum-cost allocation over the whole horizon by exhaustive
/// branch-and-bound, with a penalty per unsupported request-slot. Ties go to
/// the lexicographically smallest choice vector. Instances are placed on a
/// single host.
///
/// Slots are first solved independently under the per-slot bound and the
/// SLA budget; only if the combination breaks a cumulative SLA budget is the
/// horizon searched jointly.
pub fn exact_solve(model: &Model, config: &ExactConfig) -> Result<Allocation, OrchestratorError> {
    check_limits(model, &config.limits)?;
    let horizon = model.scenario.horizon;
    let plans: Vec<SlotPlan> = (1..=horizon).map(|t| plan_slot(model, t, config.penalty)).collect();
    let fresh = SlaLedger::new(model.scenario.requests.len());

    let mut slot_opt = Vec::with_capacity(plans.len());
    let mut slots = Vec::with_capacity(plans.len());
    for plan in &plans {
        let (cost, mut s) = Search::new(*model, std::slice::from_ref(plan), vec![0.0], config.penalty).run(&fresh);
        slot_opt.push(cost);
        slots.push(s.pop().expect("one slot"));
    }
    let mut ledger = fresh.clone();
    for s in &slots {
        ledger.charge(s);
    }
    let sla_ok = model.scenario.requests.iter().all(|r| crate::within_bound(ledger.used(r.id), r.sla_budget));
    if !sla_ok {
        let future_lb: Vec<f64> = (0..plans.len()).map(|k| slot_opt[k + 1..].iter().sum()).collect();
        slots = Search::new(*model, &plans, future_lb, config.penalty).run(&fresh).1;
    }
    let mut alloc = Allocation::new();
    for (plan, s) in plans.iter().zip(slots) {
        alloc.slots.insert(plan.slot, s);
    }
    Ok(alloc)
}
