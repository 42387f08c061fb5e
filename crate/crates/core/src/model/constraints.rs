use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use super::{Allocation, Model, SlotEvaluator};
use crate::ids::{InstanceId, LinkId, NodeId, RequestId, Slot};
use crate::{within_bound, FLOAT_SLACK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Constraint {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
    C12,
}

impl Constraint {
    pub const ALL: [Constraint; 12] = [
        Constraint::C1,
        Constraint::C2,
        Constraint::C3,
        Constraint::C4,
        Constraint::C5,
        Constraint::C6,
        Constraint::C7,
        Constraint::C8,
        Constraint::C9,
        Constraint::C10,
        Constraint::C11,
        Constraint::C12,
    ];

    pub fn description(self) -> &'static str {
        match self {
            Constraint::C1 => "each active request uses at most one instance of its own service",
            Constraint::C2 => "every used instance is placed on at least one existing node",
            Constraint::C3 => "instance load within instance capacity",
            Constraint::C4 => "node load within node capacity",
            Constraint::C5 => "inquiry path runs from the PoA to a host of the instance",
            Constraint::C6 => "response path runs from the inquiry tail back to the PoA",
            Constraint::C7 => "link bandwidth reservations within link capacity",
            Constraint::C8 => "routing cost is finite and matches its recorded value",
            Constraint::C9 => "link delays are finite and non-negative",
            Constraint::C10 => "end-to-end delay is finite and matches its recorded value",
            Constraint::C11 => "end-to-end delay within the per-slot bound",
            Constraint::C12 => "cumulative delay within the SLA budget",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// 0 for horizon-wide constraints.
    pub slot: Slot,
    pub entity: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintResult {
    pub constraint: Constraint,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub feasible: bool,
    pub constraints: Vec<ConstraintResult>,
    /// Active (request, slot) pairs without an assignment. Not a violation.
    pub unsupported: Vec<(RequestId, Slot)>,
}

impl ConstraintReport {
    pub fn result(&self, c: Constraint) -> &ConstraintResult {
        &self.constraints[c as usize]
    }

    pub fn passes(&self, c: Constraint) -> bool {
        self.result(c).pass
    }

    /// Every witness, prefixed by its constraint.
    pub fn violations(&self) -> impl Iterator<Item = (Constraint, &Witness)> {
        self.constraints.iter().flat_map(|r| r.witnesses.iter().map(move |w| (r.constraint, w)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "feasible: {}", self.feasible)?;
        for (c, w) in self.violations().take(20) {
            writeln!(f, "  {c} slot {} {}: {}", w.slot, w.entity, w.detail)?;
        }
        Ok(())
    }
}

fn matches_recorded(recorded: Option<f64>, computed: f64) -> bool {
    recorded.is_none_or(|r| (r - computed).abs() <= FLOAT_SLACK * computed.abs().max(1.0))
}

struct Collector(BTreeMap<Constraint, Vec<Witness>>);

impl Collector {
    fn add(&mut self, c: Constraint, slot: Slot, entity: impl ToString, detail: String) {
        self.0.entry(c).or_default().push(Witness { slot, entity: entity.to_string(), detail });
    }
}

/// Evaluates all twelve predicates. Violations are reported, never thrown.
pub fn check_constraints(model: &Model, alloc: &Allocation) -> ConstraintReport {
    use Constraint::*;
    let topo = model.topology;
    let sc = model.scenario;
    let mut w = Collector(BTreeMap::new());
    let mut sla_used: BTreeMap<RequestId, f64> = BTreeMap::new();

    for (&t, slot) in &alloc.slots {
        if t == 0 || t > sc.horizon {
            w.add(C1, t, format!("t{t}"), format!("slot outside horizon 1..={}", sc.horizon));
            continue;
        }
        for (&inst, hosts) in &slot.placements {
            if sc.catalog.instance(inst).is_err() {
                w.add(C2, t, inst, "placed instance not in catalog".into());
            }
            for &n in hosts {
                if topo.node(n).is_err() {
                    w.add(C2, t, inst, format!("host {n} not in topology"));
                }
            }
        }

        let eval = SlotEvaluator::new(model, slot, t);
        let mut seen: HashMap<RequestId, usize> = HashMap::new();
        let mut inst_load: BTreeMap<InstanceId, u64> = BTreeMap::new();
        let mut node_load: BTreeMap<NodeId, u64> = BTreeMap::new();
        let mut link_bw: BTreeMap<LinkId, u64> = BTreeMap::new();

        for a in &slot.assignments {
            let r = a.request;
            let Ok(req) = sc.request(r) else {
                w.add(C1, t, r, "unknown request".into());
                continue;
            };
            if !req.is_active(t) {
                w.add(C1, t, r, format!("assigned while inactive (arrival {})", req.arrival));
                continue;
            }
            let count = seen.entry(r).or_insert(0);
            *count += 1;
            let first = *count == 1;
            if *count == 2 {
                w.add(C1, t, r, "assigned to more than one instance".into());
            }
            if sc.catalog.instance(a.instance).is_err() {
                w.add(C1, t, r, format!("unknown instance {}", a.instance));
                continue;
            }
            if a.instance.service != req.service {
                w.add(C1, t, r, format!("instance {} does not serve {}", a.instance, req.service));
                continue;
            }
            let poa = req.poa_at(t).expect("active request has a PoA");
            let q = &req.qos;

            let hosts = slot.hosts(a.instance).filter(|h| !h.is_empty());
            match hosts {
                None => w.add(C2, t, a.instance, format!("serves {r} but has no host")),
                Some(hs) => {
                    for &n in hs {
                        *node_load.entry(n).or_default() += q.min_capacity as u64;
                    }
                }
            }
            *inst_load.entry(a.instance).or_default() += q.min_capacity as u64;

            let inquiry = topo.path(a.inquiry).ok();
            let response = topo.path(a.response).ok();
            match inquiry {
                None => w.add(C5, t, r, format!("unknown inquiry path {}", a.inquiry)),
                Some(p) => {
                    if p.head != poa {
                        w.add(C5, t, r, format!("inquiry head {} is not PoA {poa}", p.head));
                    }
                    if !hosts.is_some_and(|h| h.contains(&p.tail)) {
                        w.add(C5, t, r, format!("inquiry tail {} does not host {}", p.tail, a.instance));
                    }
                }
            }
            match response {
                None => w.add(C6, t, r, format!("unknown response path {}", a.response)),
                Some(p) => {
                    if let Some(inq) = inquiry {
                        if p.head != inq.tail {
                            w.add(C6, t, r, format!("response head {} is not inquiry tail {}", p.head, inq.tail));
                        }
                    }
                    if p.tail != poa {
                        w.add(C6, t, r, format!("response tail {} is not PoA {poa}", p.tail));
                    }
                }
            }
            for p in [inquiry, response].into_iter().flatten() {
                for &l in &p.links {
                    *link_bw.entry(l).or_default() += q.min_bandwidth as u64;
                }
            }

            let (Some(inq), Some(resp)) = (inquiry, response) else { continue };
            if !first {
                continue;
            }
            let cost = eval.path_cost(r).expect("evaluated request");
            if !cost.is_finite() || !matches_recorded(a.recorded_cost, cost) {
                w.add(C8, t, r, format!("routing cost {cost} vs recorded {:?}", a.recorded_cost));
            }
            for &l in inq.links.iter().chain(&resp.links) {
                let d = eval.link_delay(r, l).expect("link on path");
                if !(d.is_finite() && d >= 0.0) {
                    w.add(C9, t, r, format!("delay {d} on {l}"));
                }
            }
            let d = eval.e2e_delay(r).expect("evaluated request");
            if !d.is_finite() || !matches_recorded(a.recorded_delay, d) {
                w.add(C10, t, r, format!("delay {d} vs recorded {:?}", a.recorded_delay));
            }
            if !within_bound(d, q.max_delay) {
                w.add(C11, t, r, format!("delay {d} exceeds bound {}", q.max_delay));
            }
            *sla_used.entry(r).or_default() += d;
        }

        for (inst, load) in inst_load {
            if let Ok(spec) = sc.catalog.instance(inst) {
                if load > spec.capacity as u64 {
                    w.add(C3, t, inst, format!("load {load} exceeds capacity {}", spec.capacity));
                }
            }
        }
        for (n, load) in node_load {
            if let Ok(node) = topo.node(n) {
                if load > node.compute_capacity as u64 {
                    w.add(C4, t, n, format!("load {load} exceeds capacity {}", node.compute_capacity));
                }
            }
        }
        for (l, bw) in link_bw {
            let cap = topo.links()[l.0].bandwidth_capacity as u64;
            if bw > cap {
                w.add(C7, t, l, format!("bandwidth {bw} exceeds capacity {cap}"));
            }
        }
    }

    for (r, used) in sla_used {
        let budget = sc.requests[r.0].sla_budget;
        if !within_bound(used, budget) {
            w.add(Constraint::C12, 0, r, format!("cumulative delay {used} exceeds budget {budget}"));
        }
    }

    let constraints: Vec<ConstraintResult> = Constraint::ALL
        .iter()
        .map(|&c| {
            let witnesses = w.0.remove(&c).unwrap_or_default();
            ConstraintResult { constraint: c, pass: witnesses.is_empty(), witnesses }
        })
        .collect();
    ConstraintReport {
        feasible: constraints.iter().all(|c| c.pass),
        constraints,
        unsupported: alloc.unsupported(sc),
    }
}
