//! k-shortest loop-free paths per ordered node pair.
//!
//! Paths are ranked by hop count, then total link cost, then the node-id
//! sequence (lexicographic). Yen's algorithm runs on top of a label-setting
//! search that uses that same total order as its key, so the result is fully
//! deterministic.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use super::{LinkSpec, Path, TopologyError};
use crate::ids::{LinkId, NodeId, PathId};

/// Output of [`enumerate_paths`]: the path list plus the ordered pairs that
/// had no path within the hop bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub unreachable: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone)]
struct Candidate {
    cost: f64,
    nodes: Vec<usize>,
    links: Vec<usize>,
}

impl Candidate {
    fn hops(&self) -> usize {
        self.links.len()
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.hops()
            .cmp(&other.hops())
            .then_with(|| self.cost.total_cmp(&other.cost))
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

struct Graph<'a> {
    links: &'a [LinkSpec],
    /// Outgoing link indices per node, ordered by destination id.
    out: Vec<Vec<usize>>,
}

impl<'a> Graph<'a> {
    fn new(n: usize, links: &'a [LinkSpec]) -> Self {
        let mut out = vec![Vec::new(); n];
        for (i, l) in links.iter().enumerate() {
            out[l.src.0].push(i);
        }
        for adj in &mut out {
            adj.sort_by_key(|&i| (links[i].dst.0, i));
        }
        Graph { links, out }
    }

    /// Best path from `src` to `dst` avoiding the banned nodes and links,
    /// with at most `max_hops` links.
    fn best_path(
        &self,
        src: usize,
        dst: usize,
        banned_nodes: &[bool],
        banned_links: &HashSet<usize>,
        max_hops: usize,
    ) -> Option<Candidate> {
        let mut settled = vec![false; self.out.len()];
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Candidate { cost: 0.0, nodes: vec![src], links: Vec::new() }));
        while let Some(Reverse(cand)) = heap.pop() {
            let at = *cand.nodes.last().expect("non-empty");
            if settled[at] {
                continue;
            }
            settled[at] = true;
            if at == dst {
                return Some(cand);
            }
            if cand.hops() >= max_hops {
                continue;
            }
            for &li in &self.out[at] {
                let next = self.links[li].dst.0;
                if settled[next] || banned_nodes[next] || banned_links.contains(&li) || cand.nodes.contains(&next) {
                    continue;
                }
                let mut nodes = cand.nodes.clone();
                nodes.push(next);
                let mut links = cand.links.clone();
                links.push(li);
                heap.push(Reverse(Candidate { cost: cand.cost + self.links[li].link_cost, nodes, links }));
            }
        }
        None
    }

    fn path_cost(&self, links: &[usize]) -> f64 {
        links.iter().fold(0.0, |acc, &l| acc + self.links[l].link_cost)
    }

    fn k_shortest(&self, src: usize, dst: usize, k: usize, max_hops: usize) -> Vec<Candidate> {
        let n = self.out.len();
        let no_nodes = vec![false; n];
        let Some(first) = self.best_path(src, dst, &no_nodes, &HashSet::new(), max_hops) else {
            return Vec::new();
        };
        let mut accepted = vec![first];
        let mut pool: BTreeSet<Candidate> = BTreeSet::new();
        while accepted.len() < k {
            let prev = accepted.last().expect("non-empty").clone();
            for spur_idx in 0..prev.links.len() {
                let root_nodes = &prev.nodes[..=spur_idx];
                let root_links = &prev.links[..spur_idx];
                let mut banned_links = HashSet::new();
                for p in &accepted {
                    if p.nodes.len() > spur_idx + 1 && p.nodes[..=spur_idx] == *root_nodes {
                        banned_links.insert(p.links[spur_idx]);
                    }
                }
                let mut banned_nodes = vec![false; n];
                for &v in &root_nodes[..spur_idx] {
                    banned_nodes[v] = true;
                }
                let budget = max_hops - spur_idx;
                if let Some(spur) =
                    self.best_path(root_nodes[spur_idx], dst, &banned_nodes, &banned_links, budget)
                {
                    let mut nodes = root_nodes.to_vec();
                    nodes.extend_from_slice(&spur.nodes[1..]);
                    let mut links = root_links.to_vec();
                    links.extend_from_slice(&spur.links);
                    let cost = self.path_cost(&links);
                    let cand = Candidate { cost, nodes, links };
                    if !accepted.contains(&cand) {
                        pool.insert(cand);
                    }
                }
            }
            match pool.pop_first() {
                Some(best) => accepted.push(best),
                None => break,
            }
        }
        accepted
    }
}

/// Enumerates up to `k` loop-free paths for every ordered node pair, sorted
/// by ascending hop count, then total link cost, then node-id sequence.
///
/// Every node also gets one link-free path to itself. Path ids are assigned
/// in (head, tail, rank) order.
pub fn enumerate_paths(
    node_count: usize,
    links: &[LinkSpec],
    k: usize,
    max_hops: usize,
) -> Result<PathSet, TopologyError> {
    if k == 0 {
        return Err(TopologyError::BadPathParam("k"));
    }
    if max_hops == 0 {
        return Err(TopologyError::BadPathParam("max_hops"));
    }
    let graph = Graph::new(node_count, links);
    let mut paths = Vec::new();
    let mut unreachable = Vec::new();
    for a in 0..node_count {
        for b in 0..node_count {
            if a == b {
                paths.push(Path { id: PathId(paths.len()), head: NodeId(a), tail: NodeId(a), links: Vec::new() });
                continue;
            }
            let found = graph.k_shortest(a, b, k, max_hops);
            if found.is_empty() {
                unreachable.push((NodeId(a), NodeId(b)));
            }
            for cand in found {
                paths.push(Path {
                    id: PathId(paths.len()),
                    head: NodeId(a),
                    tail: NodeId(b),
                    links: cand.links.into_iter().map(LinkId).collect(),
                });
            }
        }
    }
    Ok(PathSet { paths, unreachable })
}
