//! Line-oriented text form of a [`Topology`].
//!
//! ```text
//! ascetic-topo v1
//! node <id> <tier> <cap> <cost>
//! link <id> <src> <dst> <cap> <cost>
//! path <id> <head> <tail> <l1,l2,...>     (`-` for a link-free path)
//! poa <n1,n2,...>
//! ```

use std::fmt::Write;
use std::str::FromStr;

use super::{LinkSpec, NodeSpec, Path, Topology, TopologyError};
use crate::ids::{LinkId, NodeId, PathId};

pub const TOPOLOGY_HEADER: &str = "ascetic-topo v1";

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let s: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    if s.is_empty() {
        "-".to_string()
    } else {
        s.join(",")
    }
}

fn field<T: FromStr>(parts: &[&str], idx: usize, line: usize) -> Result<T, TopologyError> {
    let raw = parts.get(idx).ok_or_else(|| TopologyError::Parse { line, reason: "missing field".into() })?;
    raw.parse()
        .map_err(|_| TopologyError::Parse { line, reason: format!("bad value {raw:?}") })
}

fn list(raw: &str, line: usize) -> Result<Vec<usize>, TopologyError> {
    if raw == "-" {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|x| x.parse().map_err(|_| TopologyError::Parse { line, reason: format!("bad list entry {x:?}") }))
        .collect()
}

impl Topology {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{TOPOLOGY_HEADER}").unwrap();
        for n in &self.nodes {
            writeln!(out, "node {} {} {} {}", n.id.0, n.tier, n.compute_capacity, n.compute_cost).unwrap();
        }
        for l in &self.links {
            writeln!(out, "link {} {} {} {} {}", l.id.0, l.src.0, l.dst.0, l.bandwidth_capacity, l.link_cost)
                .unwrap();
        }
        for p in &self.paths {
            writeln!(out, "path {} {} {} {}", p.id.0, p.head.0, p.tail.0, join(p.links.iter().map(|l| l.0)))
                .unwrap();
        }
        writeln!(out, "poa {}", join(self.poa_nodes.iter().map(|n| n.0))).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TOPOLOGY_HEADER => {}
            _ => return Err(TopologyError::Parse { line: 1, reason: format!("expected header {TOPOLOGY_HEADER:?}") }),
        }
        let (mut nodes, mut links, mut paths, mut poa) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, raw) in lines {
            let line = i + 1;
            let parts: Vec<&str> = raw.split_whitespace().collect();
            match parts.first().copied() {
                None => continue,
                Some(s) if s.starts_with('#') => continue,
                Some("node") => nodes.push(NodeSpec {
                    id: NodeId(field(&parts, 1, line)?),
                    tier: field(&parts, 2, line)?,
                    compute_capacity: field(&parts, 3, line)?,
                    compute_cost: field(&parts, 4, line)?,
                }),
                Some("link") => links.push(LinkSpec {
                    id: LinkId(field(&parts, 1, line)?),
                    src: NodeId(field(&parts, 2, line)?),
                    dst: NodeId(field(&parts, 3, line)?),
                    bandwidth_capacity: field(&parts, 4, line)?,
                    link_cost: field(&parts, 5, line)?,
                }),
                Some("path") => {
                    let raw_links: String = field(&parts, 4, line)?;
                    paths.push(Path {
                        id: PathId(field(&parts, 1, line)?),
                        head: NodeId(field(&parts, 2, line)?),
                        tail: NodeId(field(&parts, 3, line)?),
                        links: list(&raw_links, line)?.into_iter().map(LinkId).collect(),
                    })
                }
                Some("poa") => {
                    let raw_poa: String = field(&parts, 1, line)?;
                    poa = list(&raw_poa, line)?.into_iter().map(NodeId).collect();
                }
                Some(other) => {
                    return Err(TopologyError::Parse { line, reason: format!("unknown record {other:?}") })
                }
            }
        }
        Topology::new(nodes, links, paths, poa)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_topology, TopologyParams};
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let t = build_topology(7, 3, 11, &TopologyParams::default()).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("ascetic-topo v1\n"));
        let back = Topology::from_text(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_missing_header_and_garbage() {
        assert!(Topology::from_text("node 0 0 1 1\n").is_err());
        let err = Topology::from_text("ascetic-topo v1\nnode 0 x 1 1\n").unwrap_err();
        assert!(matches!(err, TopologyError::Parse { line: 2, .. }));
        assert!(Topology::from_text("ascetic-topo v1\nbogus 1\n").is_err());
    }
}
