//! Straight-loop re-implementations of the delay and cost formulas checked
//! against the cached evaluator on random allocations.

use ascetic_core::model::{Allocation, Assignment, DelayModel, Model};
use ascetic_core::topology::{build_topology, Topology, TopologyParams};
use ascetic_core::workload::{generate_scenario, Scenario, ScenarioParams};
use ascetic_core::{InstanceId, LinkId, NodeId, RequestId, Slot};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_allocation(topo: &Topology, sc: &Scenario, rng: &mut ChaCha8Rng) -> Allocation {
    let mut alloc = Allocation::new();
    for t in 1..=sc.horizon {
        let slot = alloc.slot_mut(t);
        for r in sc.active_at(t) {
            if rng.gen_bool(0.3) {
                continue;
            }
            let poa = r.poa_at(t).unwrap();
            let inst = InstanceId::new(r.service.0, rng.gen_range(0..sc.catalog.instances(r.service).len()));
            let host = NodeId(rng.gen_range(0..topo.node_count()));
            let (Some(&inq), Some(&resp)) =
                (topo.paths_between(poa, host).choose(rng), topo.paths_between(host, poa).choose(rng))
            else {
                continue;
            };
            slot.place(inst, host);
            slot.assignments.push(Assignment::new(r.id, inst, inq, resp));
        }
    }
    alloc
}

fn on_path(topo: &Topology, a: &Assignment, l: LinkId) -> bool {
    topo.incidence(a.inquiry, l).unwrap() || topo.incidence(a.response, l).unwrap()
}

fn naive_link_delay(topo: &Topology, sc: &Scenario, alloc: &Allocation, dm: DelayModel, r: RequestId, l: LinkId, t: Slot) -> f64 {
    let mut sum = 0.0;
    for a in &alloc.slot(t).unwrap().assignments {
        if a.request == r {
            continue;
        }
        if dm == DelayModel::Literal || on_path(topo, a, l) {
            let q = &sc.requests[a.request.0].qos;
            sum += (q.burstiness + q.max_packet) as f64;
        }
    }
    sum / topo.links()[l.0].bandwidth_capacity as f64
}

fn naive_e2e(topo: &Topology, sc: &Scenario, alloc: &Allocation, dm: DelayModel, r: RequestId, t: Slot) -> f64 {
    let a = alloc.assignment(r, t).unwrap();
    let mut d = 0.0;
    for l in 0..topo.links().len() {
        let l = LinkId(l);
        let mult = topo.incidence(a.inquiry, l).unwrap() as u32 + topo.incidence(a.response, l).unwrap() as u32;
        if mult > 0 {
            d += mult as f64 * naive_link_delay(topo, sc, alloc, dm, r, l, t);
        }
    }
    let q = &sc.requests[r.0].qos;
    d + q.max_packet as f64 / q.min_capacity as f64
}

fn naive_path_cost(topo: &Topology, a: &Assignment) -> f64 {
    let mut c = 0.0;
    for link in topo.links() {
        let mult = topo.incidence(a.inquiry, link.id).unwrap() as u32 + topo.incidence(a.response, link.id).unwrap() as u32;
        c += link.link_cost * mult as f64;
    }
    c
}

fn naive_objective(topo: &Topology, sc: &Scenario, alloc: &Allocation) -> f64 {
    let mut total = 0.0;
    for t in 1..=sc.horizon {
        let Some(slot) = alloc.slot(t) else { continue };
        for n in topo.nodes() {
            for inst in sc.catalog.all_instances() {
                if slot.hosts(inst.id).is_some_and(|h| h.contains(&n.id)) {
                    total += n.compute_cost;
                }
            }
        }
        for r in &sc.requests {
            for inst in sc.catalog.all_instances() {
                if slot.assignments.iter().any(|a| a.request == r.id && a.instance == inst.id) {
                    total += inst.cost;
                }
            }
        }
        for a in &slot.assignments {
            total += naive_path_cost(topo, a);
        }
    }
    total
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn check_case(seed: u64, dm: DelayModel) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..8);
    let topo = build_topology(n, 2, seed, &TopologyParams { paths_per_pair: 2, ..TopologyParams::default() }).unwrap();
    let params = ScenarioParams {
        services: 3,
        instances_per_service: 2,
        requests: rng.gen_range(1..12),
        horizon: rng.gen_range(1..4),
        ..ScenarioParams::default()
    };
    let sc = generate_scenario(&topo, &params, seed).unwrap();
    let alloc = random_allocation(&topo, &sc, &mut rng);
    let model = Model::new(&topo, &sc).with_delay_model(dm);
    for (&t, slot) in &alloc.slots {
        for a in &slot.assignments {
            let d = model.e2e_delay(&alloc, a.request, t).unwrap();
            prop_assert!(close(d, naive_e2e(&topo, &sc, &alloc, dm, a.request, t)));
            prop_assert!(close(model.path_cost(&alloc, a.request, t).unwrap(), naive_path_cost(&topo, a)));
            for l in topo.paths()[a.inquiry.0].links.iter().chain(&topo.paths()[a.response.0].links) {
                let ld = model.link_delay(&alloc, a.request, *l, t).unwrap();
                prop_assert!(close(ld, naive_link_delay(&topo, &sc, &alloc, dm, a.request, *l, t)));
            }
            let b = model.breakdown(&alloc, a.request, t).unwrap();
            prop_assert!(close(b.total, d) && close(b.total, b.network + b.compute));
        }
    }
    let ob = model.objective_cost(&alloc).unwrap();
    prop_assert!(close(ob, naive_objective(&topo, &sc, &alloc)));
    prop_assert!(ob >= 0.0);
    prop_assert_eq!(ob == 0.0, alloc.is_empty());
    let per_slot: f64 = alloc.slots.iter().map(|(&t, s)| model.slot_cost(s, t).unwrap()).sum();
    prop_assert!(close(ob, per_slot));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn restricted_matches_naive(seed in any::<u64>()) {
        check_case(seed, DelayModel::Restricted)?;
    }

    #[test]
    fn literal_matches_naive(seed in any::<u64>()) {
        check_case(seed, DelayModel::Literal)?;
    }

    /// Adding a request that crosses a link never lowers anyone's delay there.
    #[test]
    fn adding_traffic_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = build_topology(5, 2, seed, &TopologyParams::default()).unwrap();
        let params = ScenarioParams { services: 2, instances_per_service: 2, requests: 8, horizon: 1, ..ScenarioParams::default() };
        let sc = generate_scenario(&topo, &params, seed).unwrap();
        let full = random_allocation(&topo, &sc, &mut rng);
        let slot = full.slot(1).unwrap();
        prop_assume!(slot.assignments.len() >= 2);
        let mut partial = full.clone();
        partial.slot_mut(1).assignments.pop();
        let model = Model::new(&topo, &sc);
        for a in &partial.slot(1).unwrap().assignments {
            for l in topo.paths()[a.inquiry.0].links.iter().chain(&topo.paths()[a.response.0].links) {
                let before = model.link_delay(&partial, a.request, *l, 1).unwrap();
                let after = model.link_delay(&full, a.request, *l, 1).unwrap();
                prop_assert!(after >= before);
            }
        }
    }
}

#[test]
fn doubling_capacity_halves_link_delay() {
    let topo = build_topology(5, 2, 3, &TopologyParams::default()).unwrap();
    let sc = generate_scenario(&topo, &ScenarioParams { requests: 15, horizon: 1, services: 2, ..ScenarioParams::default() }, 3)
        .unwrap();
    let alloc = random_allocation(&topo, &sc, &mut ChaCha8Rng::seed_from_u64(3));
    let mut links = topo.links().to_vec();
    for l in &mut links {
        l.bandwidth_capacity *= 2;
    }
    let wide = Topology::new(topo.nodes().to_vec(), links, topo.paths().to_vec(), topo.poa_nodes().to_vec()).unwrap();
    let (m1, m2) = (Model::new(&topo, &sc), Model::new(&wide, &sc));
    let mut checked = 0;
    for a in &alloc.slot(1).unwrap().assignments {
        for l in &topo.paths()[a.inquiry.0].links {
            let d1 = m1.link_delay(&alloc, a.request, *l, 1).unwrap();
            let d2 = m2.link_delay(&alloc, a.request, *l, 1).unwrap();
            assert!(close(d2 * 2.0, d1));
            checked += 1;
        }
    }
    assert!(checked > 0);
}
