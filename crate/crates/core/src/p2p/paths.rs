//! K shortest simple paths by hop count (Yen's algorithm).
//!
//! Paths are totally ordered by `(hops, node sequence)`; spur paths are the
//! lexicographically smallest shortest path in the reduced graph, so the
//! output is the first `k` paths in that order.

use std::collections::{BTreeSet, VecDeque};

use crate::topology::{ArcId, NodeId, Topology};

/// A simple directed path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    nodes: Vec<NodeId>,
}

impl Path {
    pub fn from_nodes(nodes: Vec<NodeId>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// Arcs along the path; `None` if consecutive nodes are not adjacent.
    pub fn arcs(&self, topology: &Topology) -> Option<Vec<ArcId>> {
        self.nodes.windows(2).map(|w| topology.arc_between(w[0], w[1])).collect()
    }

    fn key(&self) -> (usize, &[NodeId]) {
        (self.nodes.len(), &self.nodes)
    }
}

/// Lexicographically smallest shortest path from `source` to `target`
/// avoiding `banned_nodes` and the directed hops in `banned_hops`.
fn smallest_shortest_path(
    topology: &Topology,
    source: NodeId,
    target: NodeId,
    banned_nodes: &[bool],
    banned_hops: &BTreeSet<(NodeId, NodeId)>,
) -> Option<Vec<NodeId>> {
    let n = topology.node_count();
    // Hop distance to the target over allowed hops, searched backwards.
    let mut dist = vec![usize::MAX; n];
    dist[target] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        for &(u, _) in topology.neighbors(v) {
            if banned_nodes[u] || dist[u] != usize::MAX || banned_hops.contains(&(u, v)) {
                continue;
            }
            dist[u] = dist[v] + 1;
            queue.push_back(u);
        }
    }
    if dist[source] == usize::MAX {
        return None;
    }
    let mut path = vec![source];
    let mut at = source;
    while at != target {
        let next = topology
            .neighbors(at)
            .iter()
            .map(|&(v, _)| v)
            .find(|&v| !banned_hops.contains(&(at, v)) && dist[v] != usize::MAX && dist[v] + 1 == dist[at])?;
        path.push(next);
        at = next;
    }
    Some(path)
}

/// Up to `k` shortest simple paths from `source` to `destination`, ascending.
pub fn k_shortest_paths(topology: &Topology, source: NodeId, destination: NodeId, k: usize) -> Vec<Path> {
    let n = topology.node_count();
    if k == 0 || source >= n || destination >= n || source == destination {
        return Vec::new();
    }
    let none = vec![false; n];
    let Some(first) = smallest_shortest_path(topology, source, destination, &none, &BTreeSet::new()) else {
        return Vec::new();
    };
    let mut found = vec![Path::from_nodes(first)];
    let mut candidates: BTreeSet<(usize, Vec<NodeId>)> = BTreeSet::new();
    while found.len() < k {
        let last = found.last().expect("at least one path").nodes.clone();
        for i in 0..last.len() - 1 {
            let spur = last[i];
            let root = &last[..=i];
            let mut banned_hops = BTreeSet::new();
            for p in &found {
                if p.nodes.len() > i + 1 && p.nodes[..=i] == *root {
                    banned_hops.insert((p.nodes[i], p.nodes[i + 1]));
                }
            }
            let mut banned_nodes = vec![false; n];
            for &v in &root[..i] {
                banned_nodes[v] = true;
            }
            if let Some(tail) = smallest_shortest_path(topology, spur, destination, &banned_nodes, &banned_hops) {
                let mut nodes = root[..i].to_vec();
                nodes.extend(tail);
                candidates.insert((nodes.len(), nodes));
            }
        }
        // Paths already emitted can reappear as candidates from another spur.
        let next = loop {
            match candidates.pop_first() {
                Some((_, nodes)) if found.iter().any(|p| p.nodes == nodes) => continue,
                other => break other,
            }
        };
        match next {
            Some((_, nodes)) => found.push(Path::from_nodes(nodes)),
            None => break,
        }
    }
    debug_assert!(found.windows(2).all(|w| w[0].key() < w[1].key()));
    found
}
