use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InstanceSpec, Mobility, MobilityModel, Qos, Request, Scenario, ServiceCatalog, WorkloadError};
use crate::ids::{InstanceId, RequestId, ServiceId};
use crate::topology::Topology;

/// Inclusive draw ranges for request QoS. Integer fields are in traffic or
/// capacity units, `max_delay` in ms.
#[derive(Debug, Clone, PartialEq)]
pub struct QosRanges {
    pub min_capacity: (u32, u32),
    pub min_bandwidth: (u32, u32),
    pub burstiness: (u32, u32),
    pub max_packet: (u32, u32),
    pub max_delay: (f64, f64),
}

impl Default for QosRanges {
    fn default() -> Self {
        QosRanges {
            min_capacity: (1, 4),
            min_bandwidth: (1, 5),
            burstiness: (1, 3),
            max_packet: (1, 2),
            max_delay: (5.0, 50.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub services: usize,
    pub instances_per_service: usize,
    pub requests: usize,
    pub horizon: usize,
    pub mobility: Mobility,
    pub qos: QosRanges,
    /// Instance capacity is `scale * U(alpha, alpha+1)`.
    pub instance_capacity_scale: f64,
    pub instance_capacity_alpha: f64,
    /// Instance cost is `base ^ U(alpha, alpha+1)`.
    pub instance_cost_base: f64,
    pub instance_cost_alpha: f64,
    /// Arrivals are uniform over `1..=min(window, horizon)`; `None` spans the
    /// whole horizon.
    pub arrival_window: Option<usize>,
    /// SLA budget is `max(D, factor * horizon * D)` for per-slot bound `D`.
    pub sla_factor: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            services: 20,
            instances_per_service: 5,
            requests: 40,
            horizon: 10,
            mobility: Mobility::default(),
            qos: QosRanges::default(),
            instance_capacity_scale: 20.0,
            instance_capacity_alpha: 1.0,
            instance_cost_base: 20.0,
            instance_cost_alpha: 0.0,
            arrival_window: None,
            sla_factor: 0.9,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::BadParam(m));
        if self.requests == 0 {
            return bad("request count must be at least 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.services == 0 || self.instances_per_service == 0 {
            return bad("catalog needs at least one service and one instance per service".into());
        }
        if self.arrival_window == Some(0) {
            return bad("arrival window must be at least 1".into());
        }
        let q = &self.qos;
        for (name, (lo, hi)) in [
            ("min_capacity", q.min_capacity),
            ("min_bandwidth", q.min_bandwidth),
            ("burstiness", q.burstiness),
            ("max_packet", q.max_packet),
        ] {
            if lo == 0 || hi < lo {
                return bad(format!("{name} range [{lo}, {hi}] must be positive and ordered"));
            }
        }
        let (dlo, dhi) = q.max_delay;
        if !(dlo > 0.0) || dhi < dlo || !dhi.is_finite() {
            return bad(format!("max_delay range [{dlo}, {dhi}] must be positive and ordered"));
        }
        let fastest = q.max_packet.0 as f64 / q.min_capacity.1 as f64;
        if dhi < fastest {
            return bad(format!("max_delay upper bound {dhi} is below the minimum compute delay {fastest}"));
        }
        if !(self.instance_capacity_scale > 0.0) || !(self.instance_cost_base > 0.0) {
            return bad("instance distributions need positive scale and base".into());
        }
        if self.instance_capacity_alpha < 0.0 {
            return bad("instance capacity exponent must be non-negative".into());
        }
        if !(self.sla_factor > 0.0) {
            return bad("sla_factor must be positive".into());
        }
        Ok(())
    }
}

/// Draws a catalog and request population over `topology`'s PoAs.
pub fn generate_scenario(topology: &Topology, params: &ScenarioParams, seed: u64) -> Result<Scenario, WorkloadError> {
    params.validate()?;
    let mobility = MobilityModel::bind(&params.mobility, topology.poa_nodes())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let services = (0..params.services)
        .map(|s| {
            (0..params.instances_per_service)
                .map(|i| {
                    let a = params.instance_capacity_alpha;
                    let capacity = (params.instance_capacity_scale * rng.gen_range(a..a + 1.0)).round().max(1.0) as u32;
                    let b = params.instance_cost_alpha;
                    let cost = params.instance_cost_base.powf(rng.gen_range(b..b + 1.0));
                    InstanceSpec { id: InstanceId::new(s, i), capacity, cost }
                })
                .collect()
        })
        .collect();
    let catalog = ServiceCatalog::new(services)?;

    let horizon = params.horizon;
    let window = params.arrival_window.unwrap_or(horizon).min(horizon);
    let q = &params.qos;
    let requests = (0..params.requests)
        .map(|id| {
            let arrival = rng.gen_range(1..=window);
            let service = ServiceId(rng.gen_range(0..params.services));
            let qos = Qos {
                min_capacity: rng.gen_range(q.min_capacity.0..=q.min_capacity.1),
                min_bandwidth: rng.gen_range(q.min_bandwidth.0..=q.min_bandwidth.1),
                burstiness: rng.gen_range(q.burstiness.0..=q.burstiness.1),
                max_packet: rng.gen_range(q.max_packet.0..=q.max_packet.1),
                max_delay: if q.max_delay.0 == q.max_delay.1 {
                    q.max_delay.0
                } else {
                    rng.gen_range(q.max_delay.0..q.max_delay.1)
                },
            };
            let sla_budget = (params.sla_factor * horizon as f64 * qos.max_delay).max(qos.max_delay);
            let poa_trace = mobility.trace(arrival, horizon, &mut rng);
            Request { id: RequestId(id), arrival, service, poa_trace, qos, sla_budget }
        })
        .collect();
    Scenario::new(horizon, catalog, requests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::NodeId;
    use crate::topology::{build_topology, TopologyParams};

    fn topo() -> Topology {
        build_topology(6, 2, 1, &TopologyParams::default()).unwrap()
    }

    #[test]
    fn catalog_matches_table_size() {
        let sc = generate_scenario(&topo(), &ScenarioParams::default(), 1).unwrap();
        assert_eq!(sc.catalog.service_count(), 20);
        assert_eq!(sc.catalog.instance_count(), 100);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = ScenarioParams::default();
        let t = topo();
        assert_eq!(generate_scenario(&t, &p, 7).unwrap(), generate_scenario(&t, &p, 7).unwrap());
        assert_ne!(generate_scenario(&t, &p, 7).unwrap(), generate_scenario(&t, &p, 8).unwrap());
    }

    #[test]
    fn static_mobility_keeps_poa() {
        let p = ScenarioParams { mobility: Mobility::Static, ..ScenarioParams::default() };
        let sc = generate_scenario(&topo(), &p, 3).unwrap();
        for r in &sc.requests {
            assert!(r.poa_trace.iter().all(|&n| n == r.poa_trace[0]));
        }
    }

    #[test]
    fn traces_span_arrival_to_horizon_on_poas() {
        let t = topo();
        let sc = generate_scenario(&t, &ScenarioParams::default(), 5).unwrap();
        for r in &sc.requests {
            assert_eq!(r.arrival + r.poa_trace.len() - 1, sc.horizon);
            assert!(r.poa_trace.iter().all(|n| t.poa_nodes().contains(n)));
            assert!(r.sla_budget >= r.qos.max_delay);
        }
    }

    #[test]
    fn qos_within_ranges_over_many_draws() {
        let p = ScenarioParams { requests: 10_000, horizon: 1, ..ScenarioParams::default() };
        let sc = generate_scenario(&topo(), &p, 11).unwrap();
        let q = &p.qos;
        let inside = |v: u32, (lo, hi): (u32, u32)| lo <= v && v <= hi;
        for r in &sc.requests {
            assert!(inside(r.qos.min_capacity, q.min_capacity));
            assert!(inside(r.qos.min_bandwidth, q.min_bandwidth));
            assert!(inside(r.qos.burstiness, q.burstiness));
            assert!(inside(r.qos.max_packet, q.max_packet));
            assert!(r.qos.max_delay >= q.max_delay.0 && r.qos.max_delay < q.max_delay.1);
        }
    }

    #[test]
    fn arrivals_partition_active_requests() {
        let t = topo();
        let sc = generate_scenario(&t, &ScenarioParams { requests: 60, ..ScenarioParams::default() }, 2).unwrap();
        for slot in 1..=sc.horizon {
            let counted: usize = t.poa_nodes().iter().map(|&p| sc.arrivals_at(p, slot).len()).sum();
            assert_eq!(counted, sc.active_at(slot).count());
        }
    }

    #[test]
    fn rejects_bad_params() {
        let t = topo();
        let p = ScenarioParams { requests: 0, ..ScenarioParams::default() };
        assert!(generate_scenario(&t, &p, 1).is_err());
        let p = ScenarioParams { horizon: 0, ..ScenarioParams::default() };
        assert!(generate_scenario(&t, &p, 1).is_err());
        let mut p = ScenarioParams::default();
        p.qos.max_delay = (0.05, 0.1); // fastest possible compute delay is 1/4
        assert!(generate_scenario(&t, &p, 1).is_err());
        let no_poa = Topology::new(t.nodes().to_vec(), t.links().to_vec(), t.paths().to_vec(), vec![]).unwrap();
        assert_eq!(generate_scenario(&no_poa, &ScenarioParams::default(), 1), Err(WorkloadError::NoPoaNodes));
        let _ = NodeId(0);
    }
}
