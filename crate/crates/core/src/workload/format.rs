//! Text form of a [`Scenario`] and a CSV view of its request table.
//!
//! ```text
//! ascetic-scn v1
//! horizon <T>
//! instance <service> <index> <capacity> <cost>
//! request <id> <arrival> <service> <min_cap> <min_bw> <max_delay> <burst> <max_packet> <sla> <poa1,poa2,...>
//! ```

use std::fmt::Write;
use std::str::FromStr;

use super::{InstanceSpec, Qos, Request, Scenario, ServiceCatalog, WorkloadError};
use crate::ids::{InstanceId, NodeId, RequestId, ServiceId};

pub const SCENARIO_HEADER: &str = "ascetic-scn v1";

fn field<T: FromStr>(parts: &[&str], idx: usize, line: usize) -> Result<T, WorkloadError> {
    let raw = parts.get(idx).ok_or_else(|| WorkloadError::Parse { line, reason: "missing field".into() })?;
    raw.parse().map_err(|_| WorkloadError::Parse { line, reason: format!("bad value {raw:?}") })
}

impl Scenario {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{SCENARIO_HEADER}").unwrap();
        writeln!(out, "horizon {}", self.horizon).unwrap();
        for inst in self.catalog.all_instances() {
            writeln!(out, "instance {} {} {} {}", inst.id.service.0, inst.id.index, inst.capacity, inst.cost).unwrap();
        }
        for r in &self.requests {
            let q = &r.qos;
            let trace: Vec<String> = r.poa_trace.iter().map(|n| n.0.to_string()).collect();
            writeln!(
                out,
                "request {} {} {} {} {} {} {} {} {} {}",
                r.id.0,
                r.arrival,
                r.service.0,
                q.min_capacity,
                q.min_bandwidth,
                q.max_delay,
                q.burstiness,
                q.max_packet,
                r.sla_budget,
                trace.join(",")
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, WorkloadError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == SCENARIO_HEADER => {}
            _ => return Err(WorkloadError::Parse { line: 1, reason: format!("expected header {SCENARIO_HEADER:?}") }),
        }
        let mut horizon = None;
        let mut services: Vec<Vec<InstanceSpec>> = Vec::new();
        let mut requests = Vec::new();
        for (i, raw) in lines {
            let line = i + 1;
            let parts: Vec<&str> = raw.split_whitespace().collect();
            match parts.first().copied() {
                None => continue,
                Some(s) if s.starts_with('#') => continue,
                Some("horizon") => horizon = Some(field::<usize>(&parts, 1, line)?),
                Some("instance") => {
                    let s: usize = field(&parts, 1, line)?;
                    let idx: usize = field(&parts, 2, line)?;
                    if services.len() <= s {
                        services.resize_with(s + 1, Vec::new);
                    }
                    services[s].push(InstanceSpec {
                        id: InstanceId::new(s, idx),
                        capacity: field(&parts, 3, line)?,
                        cost: field(&parts, 4, line)?,
                    });
                }
                Some("request") => {
                    let raw_trace: String = field(&parts, 10, line)?;
                    let poa_trace = raw_trace
                        .split(',')
                        .map(|x| {
                            x.parse().map(NodeId).map_err(|_| WorkloadError::Parse { line, reason: format!("bad PoA {x:?}") })
                        })
                        .collect::<Result<_, _>>()?;
                    requests.push(Request {
                        id: RequestId(field(&parts, 1, line)?),
                        arrival: field(&parts, 2, line)?,
                        service: ServiceId(field(&parts, 3, line)?),
                        qos: Qos {
                            min_capacity: field(&parts, 4, line)?,
                            min_bandwidth: field(&parts, 5, line)?,
                            max_delay: field(&parts, 6, line)?,
                            burstiness: field(&parts, 7, line)?,
                            max_packet: field(&parts, 8, line)?,
                        },
                        sla_budget: field(&parts, 9, line)?,
                        poa_trace,
                    });
                }
                Some(other) => {
                    return Err(WorkloadError::Parse { line, reason: format!("unknown record {other:?}") })
                }
            }
        }
        let horizon = horizon.ok_or(WorkloadError::Parse { line: 0, reason: "missing horizon record".into() })?;
        Scenario::new(horizon, ServiceCatalog::new(services)?, requests)
    }

    /// Request table as CSV, one row per request.
    pub fn requests_csv(&self) -> String {
        let mut out = String::from(
            "id,arrival,service,min_capacity,min_bandwidth,max_delay_ms,burstiness,max_packet,sla_budget_ms,first_poa\n",
        );
        for r in &self.requests {
            let q = &r.qos;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.id.0,
                r.arrival,
                r.service.0,
                q.min_capacity,
                q.min_bandwidth,
                q.max_delay,
                q.burstiness,
                q.max_packet,
                r.sla_budget,
                r.poa_trace[0].0
            )
            .unwrap();
        }
        out
    }
}
