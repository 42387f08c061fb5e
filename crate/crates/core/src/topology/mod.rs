//! Tiered edge-cloud graph: nodes, directed capacitated links and the
//! enumerated set of directional paths with their link incidence.

mod format;
mod generate;
mod paths;

pub use generate::{build_topology, TopologyParams};
pub use paths::{enumerate_paths, PathSet};

use crate::ids::{LinkId, NodeId, PathId};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopologyError {
    #[error("topology needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("topology needs at least one tier")]
    NoTiers,
    #[error("parameter {name} has non-positive support [{lo}, {hi}]")]
    BadDistribution { name: &'static str, lo: f64, hi: f64 },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("unknown path {0}")]
    UnknownPath(PathId),
    #[error("invalid node {id}: {reason}")]
    InvalidNode { id: NodeId, reason: &'static str },
    #[error("invalid link {id}: {reason}")]
    InvalidLink { id: LinkId, reason: &'static str },
    #[error("invalid path {id}: {reason}")]
    InvalidPath { id: PathId, reason: &'static str },
    #[error("path set parameter {0} must be at least 1")]
    BadPathParam(&'static str),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    /// 0 is the access edge; the highest tier is the core.
    pub tier: usize,
    pub compute_capacity: u32,
    /// Charged per placed instance per slot.
    pub compute_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: LinkId,
    pub src: NodeId,
    pub dst: NodeId,
    pub bandwidth_capacity: u32,
    /// Charged per traversal per request-slot.
    pub link_cost: f64,
}

/// A loop-free directed walk from `head` to `tail`. Paths with `head == tail`
/// have no links and model an instance hosted at the request's own PoA.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub id: PathId,
    pub head: NodeId,
    pub tail: NodeId,
    pub links: Vec<LinkId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<NodeSpec>,
    links: Vec<LinkSpec>,
    paths: Vec<Path>,
    poa_nodes: Vec<NodeId>,
    by_pair: Vec<Vec<PathId>>,
}

impl Topology {
    /// Assembles a topology, checking every node, link and path invariant.
    /// Ids must be dense and equal to their position.
    pub fn new(
        nodes: Vec<NodeSpec>,
        links: Vec<LinkSpec>,
        paths: Vec<Path>,
        poa_nodes: Vec<NodeId>,
    ) -> Result<Self, TopologyError> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.id.0 != i {
                return Err(TopologyError::InvalidNode { id: node.id, reason: "id out of order" });
            }
            if node.compute_capacity == 0 {
                return Err(TopologyError::InvalidNode { id: node.id, reason: "zero capacity" });
            }
            if !(node.compute_cost > 0.0 && node.compute_cost.is_finite()) {
                return Err(TopologyError::InvalidNode { id: node.id, reason: "cost must be positive" });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (i, link) in links.iter().enumerate() {
            let bad = |reason| Err(TopologyError::InvalidLink { id: link.id, reason });
            if link.id.0 != i {
                return bad("id out of order");
            }
            if link.src.0 >= n || link.dst.0 >= n {
                return bad("endpoint outside node set");
            }
            if link.src == link.dst {
                return bad("self loop");
            }
            if link.bandwidth_capacity == 0 {
                return bad("zero bandwidth");
            }
            if !(link.link_cost > 0.0 && link.link_cost.is_finite()) {
                return bad("cost must be positive");
            }
            if !seen.insert((link.src, link.dst)) {
                return bad("duplicate directed link");
            }
        }
        for &poa in &poa_nodes {
            if poa.0 >= n {
                return Err(TopologyError::UnknownNode(poa));
            }
        }
        let mut by_pair = vec![Vec::new(); n * n];
        for (i, path) in paths.iter().enumerate() {
            if path.id.0 != i {
                return Err(TopologyError::InvalidPath { id: path.id, reason: "id out of order" });
            }
            validate_path(path, &links, n)?;
            by_pair[path.head.0 * n + path.tail.0].push(path.id);
        }
        Ok(Topology { nodes, links, paths, poa_nodes, by_pair })
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn poa_nodes(&self) -> &[NodeId] {
        &self.poa_nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn max_tier(&self) -> usize {
        self.nodes.iter().map(|n| n.tier).max().unwrap_or(0)
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeSpec, TopologyError> {
        self.nodes.get(id.0).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn link(&self, id: LinkId) -> Result<&LinkSpec, TopologyError> {
        self.links.get(id.0).ok_or(TopologyError::UnknownLink(id))
    }

    pub fn path(&self, id: PathId) -> Result<&Path, TopologyError> {
        self.paths.get(id.0).ok_or(TopologyError::UnknownPath(id))
    }

    /// Paths with head `from` and tail `to`, best first.
    pub fn paths_between(&self, from: NodeId, to: NodeId) -> &[PathId] {
        let n = self.nodes.len();
        if from.0 >= n || to.0 >= n {
            return &[];
        }
        &self.by_pair[from.0 * n + to.0]
    }

    /// Binary incidence of `link` in `path`.
    pub fn incidence(&self, path: PathId, link: LinkId) -> Result<bool, TopologyError> {
        let p = self.path(path)?;
        self.link(link)?;
        Ok(p.links.contains(&link))
    }

    /// Sum of link costs along the path.
    pub fn path_cost(&self, path: PathId) -> Result<f64, TopologyError> {
        let p = self.path(path)?;
        Ok(p.links.iter().fold(0.0, |acc, l| acc + self.links[l.0].link_cost))
    }

    /// Node sequence visited by the path, head first.
    pub fn path_nodes(&self, path: PathId) -> Result<Vec<NodeId>, TopologyError> {
        let p = self.path(path)?;
        let mut out = vec![p.head];
        out.extend(p.links.iter().map(|l| self.links[l.0].dst));
        Ok(out)
    }

    /// Ordered node pairs (a, b), a != b, with no path in the set.
    pub fn unreachable_pairs(&self) -> Vec<(NodeId, NodeId)> {
        let n = self.nodes.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && self.by_pair[a * n + b].is_empty() {
                    out.push((NodeId(a), NodeId(b)));
                }
            }
        }
        out
    }
}

fn validate_path(path: &Path, links: &[LinkSpec], n: usize) -> Result<(), TopologyError> {
    let bad = |reason| Err(TopologyError::InvalidPath { id: path.id, reason });
    if path.head.0 >= n || path.tail.0 >= n {
        return bad("endpoint outside node set");
    }
    if path.links.is_empty() {
        return if path.head == path.tail { Ok(()) } else { bad("empty path between distinct nodes") };
    }
    let mut visited = vec![false; n];
    let mut at = path.head;
    visited[at.0] = true;
    for l in &path.links {
        let Some(link) = links.get(l.0) else {
            return bad("unknown link");
        };
        if link.src != at {
            return bad("links do not chain");
        }
        at = link.dst;
        if visited[at.0] {
            return bad("repeated node");
        }
        visited[at.0] = true;
    }
    if at != path.tail {
        return bad("last link does not end at tail");
    }
    Ok(())
}
