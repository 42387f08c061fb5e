use std::collections::BTreeSet;

use ascetic_core::topology::{build_topology, Topology, TopologyParams};
use ascetic_core::NodeId;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (usize, usize, u64, usize)> {
    (2usize..16, 1usize..4, any::<u64>(), 1usize..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_paths_chain_and_are_simple((n, tiers, seed, ppp) in params()) {
        let p = TopologyParams { paths_per_pair: ppp, ..TopologyParams::default() };
        let topo = build_topology(n, tiers, seed, &p).unwrap();
        for path in topo.paths() {
            let nodes = topo.path_nodes(path.id).unwrap();
            prop_assert_eq!(nodes[0], path.head);
            prop_assert_eq!(*nodes.last().unwrap(), path.tail);
            for (k, l) in path.links.iter().enumerate() {
                let link = &topo.links()[l.0];
                prop_assert_eq!(link.src, nodes[k]);
                prop_assert_eq!(link.dst, nodes[k + 1]);
            }
            let distinct: BTreeSet<NodeId> = nodes.iter().copied().collect();
            prop_assert_eq!(distinct.len(), nodes.len());
        }
    }

    #[test]
    fn generated_topology_is_connected_and_well_formed((n, tiers, seed, ppp) in params()) {
        let p = TopologyParams { paths_per_pair: ppp, ..TopologyParams::default() };
        let topo = build_topology(n, tiers, seed, &p).unwrap();
        prop_assert_eq!(topo.node_count(), n);
        prop_assert!(topo.unreachable_pairs().is_empty());
        for l in topo.links() {
            prop_assert!(l.src != l.dst);
            prop_assert!(l.bandwidth_capacity > 0 && l.link_cost > 0.0);
        }
        for node in topo.nodes() {
            prop_assert!(node.compute_capacity > 0 && node.compute_cost > 0.0);
        }
        prop_assert!(!topo.poa_nodes().is_empty());
        for a in topo.node_ids() {
            for b in topo.node_ids() {
                let k = topo.paths_between(a, b).len();
                prop_assert!(k >= 1 && k <= ppp.max(1));
            }
        }
    }

    #[test]
    fn text_round_trip((n, tiers, seed, ppp) in params()) {
        let p = TopologyParams { paths_per_pair: ppp, ..TopologyParams::default() };
        let topo = build_topology(n, tiers, seed, &p).unwrap();
        let text = topo.to_text();
        let back = Topology::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn same_seed_same_topology((n, tiers, seed, ppp) in params()) {
        let p = TopologyParams { paths_per_pair: ppp, ..TopologyParams::default() };
        let a = build_topology(n, tiers, seed, &p).unwrap().to_text();
        let b = build_topology(n, tiers, seed, &p).unwrap().to_text();
        prop_assert_eq!(a, b);
    }
}
