use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{enumerate_paths, LinkSpec, NodeSpec, Topology, TopologyError};
use crate::ids::{LinkId, NodeId};

/// Random draw parameters for [`build_topology`].
///
/// Integer ranges are inclusive. With `t` the node tier and `T` the highest
/// tier present, node capacity is `node_capacity_scale * U(t, t+1)` and node
/// cost is `node_cost_base ^ U(T-t, T-t+1)`: core nodes are richer and
/// cheaper than access nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyParams {
    /// Link count is drawn from `U{lo*N, hi*N}`.
    pub link_count_factor: (usize, usize),
    pub link_cost: (u32, u32),
    pub link_capacity: (u32, u32),
    pub node_cost_base: f64,
    pub node_capacity_scale: f64,
    pub paths_per_pair: usize,
    /// Defaults to the node count.
    pub max_hops: Option<usize>,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            link_count_factor: (3, 5),
            link_cost: (10, 20),
            link_capacity: (100, 150),
            node_cost_base: 50.0,
            node_capacity_scale: 50.0,
            paths_per_pair: 3,
            max_hops: None,
        }
    }
}

impl TopologyParams {
    fn validate(&self) -> Result<(), TopologyError> {
        let check = |name, lo: f64, hi: f64| {
            if lo <= 0.0 || hi < lo || !hi.is_finite() {
                Err(TopologyError::BadDistribution { name, lo, hi })
            } else {
                Ok(())
            }
        };
        let (flo, fhi) = self.link_count_factor;
        check("link_count_factor", flo as f64, fhi as f64)?;
        check("link_cost", self.link_cost.0 as f64, self.link_cost.1 as f64)?;
        check("link_capacity", self.link_capacity.0 as f64, self.link_capacity.1 as f64)?;
        check("node_cost_base", self.node_cost_base, self.node_cost_base)?;
        check("node_capacity_scale", self.node_capacity_scale, self.node_capacity_scale)?;
        if self.paths_per_pair == 0 {
            return Err(TopologyError::BadPathParam("paths_per_pair"));
        }
        if self.max_hops == Some(0) {
            return Err(TopologyError::BadPathParam("max_hops"));
        }
        Ok(())
    }
}

/// Tier of node `i` when `n` nodes are split into `tiers` equal blocks.
fn tier_of(i: usize, n: usize, tiers: usize) -> usize {
    i * tiers / n
}

/// Builds a random strongly connected tiered topology.
///
/// Tier-0 nodes are the points of attachment. A random spanning tree hangs
/// every node below the next richer tier (core nodes form a tree among
/// themselves) and is installed in both directions; the remaining directed
/// links are drawn uniformly from the missing ordered pairs until the link
/// count reaches its target, clamped to `[2(N-1), N(N-1)]`.
pub fn build_topology(
    n_nodes: usize,
    tiers: usize,
    seed: u64,
    params: &TopologyParams,
) -> Result<Topology, TopologyError> {
    if n_nodes < 2 {
        return Err(TopologyError::TooFewNodes(n_nodes));
    }
    if tiers == 0 {
        return Err(TopologyError::NoTiers);
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_nodes;
    let tier: Vec<usize> = (0..n).map(|i| tier_of(i, n, tiers)).collect();
    let top = tier[n - 1];

    let nodes: Vec<NodeSpec> = (0..n)
        .map(|i| {
            let t = tier[i] as f64;
            let cap_draw = rng.gen_range(t..t + 1.0);
            let capacity = (params.node_capacity_scale * cap_draw).round().max(1.0) as u32;
            let exp = (top - tier[i]) as f64;
            let cost_draw = rng.gen_range(exp..exp + 1.0);
            NodeSpec {
                id: NodeId(i),
                tier: tier[i],
                compute_capacity: capacity,
                compute_cost: params.node_cost_base.powf(cost_draw),
            }
        })
        .collect();

    // spanning tree, core first
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(tier[i]), i));
    let mut attached: Vec<usize> = Vec::with_capacity(n);
    let mut pairs = std::collections::BTreeSet::new();
    for &v in &order {
        if !attached.is_empty() {
            let higher: Vec<usize> = attached.iter().copied().filter(|&u| tier[u] > tier[v]).collect();
            let parent = if higher.is_empty() {
                *attached.choose(&mut rng).expect("non-empty")
            } else {
                let nearest = higher.iter().map(|&u| tier[u]).min().expect("non-empty");
                let pool: Vec<usize> = higher.into_iter().filter(|&u| tier[u] == nearest).collect();
                *pool.choose(&mut rng).expect("non-empty")
            };
            pairs.insert((v, parent));
            pairs.insert((parent, v));
        }
        attached.push(v);
    }

    let (flo, fhi) = params.link_count_factor;
    let drawn = rng.gen_range(flo * n..=fhi * n);
    let target = drawn.clamp(2 * (n - 1), n * (n - 1));
    let mut missing: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && !pairs.contains(&(a, b)))
        .collect();
    missing.shuffle(&mut rng);
    let extra = target.saturating_sub(pairs.len());
    pairs.extend(missing.into_iter().take(extra));

    let links: Vec<LinkSpec> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| LinkSpec {
            id: LinkId(i),
            src: NodeId(a),
            dst: NodeId(b),
            bandwidth_capacity: rng.gen_range(params.link_capacity.0..=params.link_capacity.1),
            link_cost: rng.gen_range(params.link_cost.0..=params.link_cost.1) as f64,
        })
        .collect();

    let max_hops = params.max_hops.unwrap_or(n);
    let set = enumerate_paths(n, &links, params.paths_per_pair, max_hops)?;
    let poa = (0..n).filter(|&i| tier[i] == 0).map(NodeId).collect();
    Topology::new(nodes, links, set.paths, poa)
}
