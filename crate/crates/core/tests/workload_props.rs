use std::collections::BTreeSet;

use ascetic_core::topology::{build_topology, TopologyParams};
use ascetic_core::workload::{generate_scenario, MarkovChain, Mobility, Scenario, ScenarioParams};
use ascetic_core::NodeId;
use proptest::prelude::*;

fn mobility() -> impl Strategy<Value = Mobility> {
    prop_oneof![
        Just(Mobility::Static),
        (0.0f64..1.0).prop_map(|p| Mobility::Markov { self_loop: p }),
        (1usize..6).prop_map(|k| Mobility::Cyclic { period: k }),
    ]
}

fn scenario_params() -> impl Strategy<Value = ScenarioParams> {
    (1usize..6, 1usize..4, 1usize..30, 1usize..12, mobility(), proptest::option::of(1usize..5)).prop_map(
        |(services, inst, requests, horizon, mobility, window)| ScenarioParams {
            services,
            instances_per_service: inst,
            requests,
            horizon,
            mobility,
            arrival_window: window,
            ..ScenarioParams::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn traces_span_arrival_to_horizon(sp in scenario_params(), n in 2usize..10, seed in any::<u64>()) {
        let topo = build_topology(n, 2, seed, &TopologyParams::default()).unwrap();
        let sc = generate_scenario(&topo, &sp, seed).unwrap();
        let poas: BTreeSet<NodeId> = topo.poa_nodes().iter().copied().collect();
        prop_assert_eq!(sc.requests.len(), sp.requests);
        for r in &sc.requests {
            prop_assert!(r.arrival >= 1 && r.arrival <= sc.horizon);
            prop_assert_eq!(r.poa_trace.len(), sc.horizon - r.arrival + 1);
            prop_assert!(r.poa_trace.iter().all(|p| poas.contains(p)));
            prop_assert!(r.service.0 < sp.services);
            prop_assert!(r.sla_budget >= r.qos.max_delay);
            if let Some(w) = sp.arrival_window {
                prop_assert!(r.arrival <= w);
            }
            if sp.mobility == Mobility::Static {
                prop_assert!(r.poa_trace.iter().all(|p| *p == r.poa_trace[0]));
            }
        }
        for inst in sc.catalog.all_instances() {
            prop_assert!(inst.capacity > 0 && inst.cost > 0.0);
        }
        for s in 0..sc.catalog.service_count() {
            prop_assert!(!sc.catalog.instances(ascetic_core::ServiceId(s)).is_empty());
        }
    }

    #[test]
    fn arrivals_match_active_requests(sp in scenario_params(), seed in any::<u64>()) {
        let topo = build_topology(6, 2, seed, &TopologyParams::default()).unwrap();
        let sc = generate_scenario(&topo, &sp, seed).unwrap();
        for t in 1..=sc.horizon {
            let mut total = 0;
            for &p in topo.poa_nodes() {
                let here = sc.arrivals_at(p, t);
                total += here.len();
                for r in &here {
                    prop_assert_eq!(sc.requests[r.0].poa_at(t).unwrap(), p);
                }
            }
            prop_assert_eq!(total, sc.active_at(t).count());
        }
    }

    #[test]
    fn text_round_trip(sp in scenario_params(), seed in any::<u64>()) {
        let topo = build_topology(5, 2, seed, &TopologyParams::default()).unwrap();
        let sc = generate_scenario(&topo, &sp, seed).unwrap();
        let text = sc.to_text();
        prop_assert_eq!(Scenario::from_text(&text).unwrap().to_text(), text);
    }

    #[test]
    fn markov_rows_are_stochastic(k in 1usize..12, p in 0.0f64..1.0) {
        let states: Vec<NodeId> = (0..k).map(NodeId).collect();
        let chain = MarkovChain::with_self_loop(states, p).unwrap();
        for row in chain.transition() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
        }
    }
}
