use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::{Assignment, DelayModel, Model, ModelError, SlotAllocation};
use crate::ids::{LinkId, RequestId, Slot};

/// Per-request, per-slot delay decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayBreakdown {
    pub request: RequestId,
    pub slot: Slot,
    /// Link delays along the inquiry path followed by the response path.
    pub links: Vec<(LinkId, f64)>,
    pub network: f64,
    /// Packet size over instance capacity.
    pub compute: f64,
    pub total: f64,
}

impl DelayBreakdown {
    pub const CSV_HEADER: &'static str = "request,slot,link,delay_ms";

    /// Rows for [`Self::CSV_HEADER`], without the header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (l, d) in &self.links {
            writeln!(out, "{},{},{},{}", self.request.0, self.slot, l.0, d).unwrap();
        }
        out
    }
}

#[derive(Debug)]
struct Flow {
    inquiry: crate::ids::PathId,
    response: crate::ids::PathId,
    traffic: f64,
    compute: f64,
    /// Links crossed by any of the request's assignments.
    links: BTreeSet<LinkId>,
}

/// Delay and cost evaluation for one slot with per-link traffic
/// precomputed, so each query is proportional to path length.
///
/// Assignments naming unknown requests, instances or paths are ignored;
/// the constraint checker reports them separately.
#[derive(Debug)]
pub struct SlotEvaluator<'m> {
    model: Model<'m>,
    slot: Slot,
    flows: BTreeMap<RequestId, Flow>,
    link_traffic: Vec<f64>,
    total_traffic: f64,
}

impl<'m> SlotEvaluator<'m> {
    pub fn new(model: &Model<'m>, alloc: &SlotAllocation, slot: Slot) -> Self {
        let topo = model.topology;
        let mut flows: BTreeMap<RequestId, Flow> = BTreeMap::new();
        for a in &alloc.assignments {
            let (Ok(req), Ok(_), Ok(inq), Ok(resp)) = (
                model.scenario.request(a.request),
                model.scenario.catalog.instance(a.instance),
                topo.path(a.inquiry),
                topo.path(a.response),
            ) else {
                continue;
            };
            let flow = flows.entry(a.request).or_insert_with(|| Flow {
                inquiry: a.inquiry,
                response: a.response,
                traffic: req.qos.traffic(),
                compute: req.qos.compute_delay(),
                links: BTreeSet::new(),
            });
            flow.links.extend(inq.links.iter().chain(&resp.links).copied());
        }
        let mut link_traffic = vec![0.0; topo.links().len()];
        let mut total_traffic = 0.0;
        for f in flows.values() {
            total_traffic += f.traffic;
            for l in &f.links {
                link_traffic[l.0] += f.traffic;
            }
        }
        SlotEvaluator { model: *model, slot, flows, link_traffic, total_traffic }
    }

    fn flow(&self, request: RequestId) -> Result<&Flow, ModelError> {
        self.flows.get(&request).ok_or(ModelError::NoAllocation { request, slot: self.slot })
    }

    pub fn is_supported(&self, request: RequestId) -> bool {
        self.flows.contains_key(&request)
    }

    /// Traffic from requests other than `flow` that counts against `link`.
    fn other_traffic(&self, flow: &Flow, link: LinkId) -> f64 {
        match self.model.delay_model {
            DelayModel::Restricted => self.link_traffic[link.0] - flow.traffic,
            DelayModel::Literal => self.total_traffic - flow.traffic,
        }
    }

    fn delay_on(&self, flow: &Flow, link: LinkId) -> f64 {
        self.other_traffic(flow, link) / self.model.topology.links()[link.0].bandwidth_capacity as f64
    }

    pub fn link_delay(&self, request: RequestId, link: LinkId) -> Result<f64, ModelError> {
        let flow = self.flow(request)?;
        self.model.topology.link(link)?;
        if !flow.links.contains(&link) {
            return Err(ModelError::LinkNotOnPath { request, link, slot: self.slot });
        }
        Ok(self.delay_on(flow, link))
    }

    pub fn e2e_delay(&self, request: RequestId) -> Result<f64, ModelError> {
        let flow = self.flow(request)?;
        let topo = self.model.topology;
        let mut network = 0.0;
        for p in [flow.inquiry, flow.response] {
            for &l in &topo.paths()[p.0].links {
                network += self.delay_on(flow, l);
            }
        }
        Ok(network + flow.compute)
    }

    pub fn breakdown(&self, request: RequestId) -> Result<DelayBreakdown, ModelError> {
        let flow = self.flow(request)?;
        let topo = self.model.topology;
        let links: Vec<(LinkId, f64)> = [flow.inquiry, flow.response]
            .iter()
            .flat_map(|p| topo.paths()[p.0].links.iter())
            .map(|&l| (l, self.delay_on(flow, l)))
            .collect();
        let network: f64 = links.iter().map(|(_, d)| d).sum();
        Ok(DelayBreakdown { request, slot: self.slot, links, network, compute: flow.compute, total: network + flow.compute })
    }

    pub fn path_cost(&self, request: RequestId) -> Result<f64, ModelError> {
        let flow = self.flow(request)?;
        Ok(self.model.topology.path_cost(flow.inquiry)? + self.model.topology.path_cost(flow.response)?)
    }

    pub(crate) fn assignment_path_cost(&self, a: &Assignment) -> Result<f64, ModelError> {
        Ok(self.model.topology.path_cost(a.inquiry)? + self.model.topology.path_cost(a.response)?)
    }

    /// Requests with a usable assignment in this slot, by id.
    pub fn supported(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.flows.keys().copied()
    }
}
