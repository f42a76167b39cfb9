//! Inter-datacenter WAN graph.
//!
//! Every undirected edge `e = {u, v}` (stored with `u < v`) carries two
//! independent directed arcs: `2e` runs `u -> v` and `2e + 1` runs `v -> u`.
//! All arcs share one capacity, expressed as volume-units per second.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Datacenter index, `0..node_count`.
pub type NodeId = usize;

/// Index of an undirected edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

/// Index of a directed arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

impl ArcId {
    pub fn edge(self) -> EdgeId {
        EdgeId(self.0 / 2)
    }
}

/// A directed arc of an undirected edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
}

/// One violated topology invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    Empty,
    NodeOutOfRange { u: NodeId, v: NodeId },
    SelfLoop(NodeId),
    DuplicateEdge(NodeId, NodeId),
    Disconnected { unreachable: usize },
    BadCapacity(f64),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Empty => write!(f, "topology has no nodes"),
            Diagnostic::NodeOutOfRange { u, v } => {
                write!(f, "edge ({u}, {v}) references a node out of range")
            }
            Diagnostic::SelfLoop(u) => write!(f, "self-loop on node {u}"),
            Diagnostic::DuplicateEdge(u, v) => write!(f, "duplicate edge ({u}, {v})"),
            Diagnostic::Disconnected { unreachable } => {
                write!(f, "graph is disconnected: {unreachable} node(s) unreachable from node 0")
            }
            Diagnostic::BadCapacity(c) => write!(f, "capacity must be positive and finite, got {c}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("invalid topology: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("cannot build a simple connected graph with {nodes} nodes and {edges} edges")]
    Infeasible { nodes: usize, edges: usize },
    #[error("topology file: {0}")]
    Parse(String),
    #[error("topology file: {0}")]
    Io(#[from] std::io::Error),
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Unvalidated graph description, as read from a file or assembled by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTopology {
    pub node_count: usize,
    pub edges: Vec<(NodeId, NodeId)>,
    pub capacity: f64,
}

impl RawTopology {
    pub fn new(node_count: usize, edges: Vec<(NodeId, NodeId)>) -> Self {
        Self { node_count, edges, capacity: 1.0 }
    }

    /// Checks every invariant; empty iff the description is a valid topology.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.node_count == 0 {
            out.push(Diagnostic::Empty);
            return out;
        }
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            out.push(Diagnostic::BadCapacity(self.capacity));
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            if u >= self.node_count || v >= self.node_count {
                out.push(Diagnostic::NodeOutOfRange { u, v });
                continue;
            }
            if u == v {
                out.push(Diagnostic::SelfLoop(u));
                continue;
            }
            if !seen.insert((u.min(v), u.max(v))) {
                out.push(Diagnostic::DuplicateEdge(u.min(v), u.max(v)));
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let reached = reachable_count(&adjacency, 0);
        if reached < self.node_count {
            out.push(Diagnostic::Disconnected { unreachable: self.node_count - reached });
        }
        out
    }
}

fn reachable_count(adjacency: &[Vec<NodeId>], start: NodeId) -> usize {
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count
}

/// A validated, immutable datacenter graph.
#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    capacity: f64,
    /// Neighbors sorted ascending, paired with the connecting edge.
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

impl Topology {
    pub fn new(raw: RawTopology) -> Result<Self, TopologyError> {
        let diags = raw.validate();
        if !diags.is_empty() {
            return Err(TopologyError::Invalid(diags));
        }
        let mut edges: Vec<_> = raw.edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        edges.sort_unstable();
        let mut adjacency = vec![Vec::new(); raw.node_count];
        for (i, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, EdgeId(i)));
            adjacency[v].push((u, EdgeId(i)));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { node_count: raw.node_count, edges, capacity: raw.capacity, adjacency })
    }

    pub fn with_capacity(mut self, capacity: f64) -> Result<Self, TopologyError> {
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(TopologyError::Invalid(vec![Diagnostic::BadCapacity(capacity)]));
        }
        self.capacity = capacity;
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn arc_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Endpoints of an edge, smaller id first.
    pub fn endpoints(&self, edge: EdgeId) -> (NodeId, NodeId) {
        self.edges[edge.0]
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, NodeId, NodeId)> + '_ {
        self.edges.iter().enumerate().map(|(i, &(u, v))| (EdgeId(i), u, v))
    }

    /// Sorted neighbors of `node` with the connecting edges.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        let list = self.adjacency.get(u)?;
        list.binary_search_by_key(&v, |&(n, _)| n).ok().map(|i| list[i].1)
    }

    /// The arc of `edge` that leaves `tail`.
    pub fn arc_from(&self, edge: EdgeId, tail: NodeId) -> ArcId {
        let (u, v) = self.edges[edge.0];
        debug_assert!(tail == u || tail == v);
        if tail == u {
            ArcId(2 * edge.0)
        } else {
            ArcId(2 * edge.0 + 1)
        }
    }

    pub fn arc_between(&self, tail: NodeId, head: NodeId) -> Option<ArcId> {
        self.edge_between(tail, head).map(|e| self.arc_from(e, tail))
    }

    pub fn arc(&self, arc: ArcId) -> Arc {
        let (u, v) = self.edges[arc.0 / 2];
        if arc.0.is_multiple_of(2) {
            Arc { tail: u, head: v }
        } else {
            Arc { tail: v, head: u }
        }
    }

    pub fn is_connected(&self) -> bool {
        let plain: Vec<Vec<NodeId>> =
            self.adjacency.iter().map(|l| l.iter().map(|&(n, _)| n).collect()).collect();
        reachable_count(&plain, 0) == self.node_count
    }

    pub fn to_raw(&self) -> RawTopology {
        RawTopology { node_count: self.node_count, edges: self.edges.clone(), capacity: self.capacity }
    }

    /// Parses the `n m` header followed by `m` lines of `u v`.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| TopologyError::Parse("empty file".into()))?;
        let (n, m) = parse_pair(header, 1)?;
        let mut edges = Vec::with_capacity(m);
        for (lineno, line) in lines {
            edges.push(parse_pair(line, lineno + 1)?);
        }
        if edges.len() != m {
            return Err(TopologyError::Parse(format!(
                "header declares {m} edges but {} were listed",
                edges.len()
            )));
        }
        Self::new(RawTopology::new(n, edges))
    }

    pub fn read(path: &Path) -> Result<Self, TopologyError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("{} {}\n", self.node_count, self.edges.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize), TopologyError> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize, TopologyError> {
        it.next()
            .ok_or_else(|| TopologyError::Parse(format!("line {lineno}: expected two integers")))?
            .parse()
            .map_err(|e| TopologyError::Parse(format!("line {lineno}: {e}")))
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(TopologyError::Parse(format!("line {lineno}: trailing tokens")));
    }
    Ok((a, b))
}

/// Reconstruction of the B4 (GScale) inter-datacenter WAN: 12 sites and 19
/// links. Sites 0-2 are on the US west coast, 3-5 in the central/eastern US,
/// 6-8 in Europe and 9-11 in Asia. The published topology figure does not
/// list links, so this adjacency is an approximation with the right size,
/// minimum degree two and a regional layout.
pub const GSCALE_EDGES: [(NodeId, NodeId); 19] = [
    (0, 1),
    (0, 2),
    (0, 9),
    (1, 2),
    (1, 10),
    (2, 3),
    (2, 4),
    (3, 4),
    (3, 5),
    (4, 5),
    (4, 6),
    (5, 6),
    (5, 7),
    (6, 7),
    (6, 8),
    (7, 8),
    (9, 10),
    (9, 11),
    (10, 11),
];

pub fn build_gscale() -> Topology {
    Topology::new(RawTopology::new(12, GSCALE_EDGES.to_vec())).expect("embedded GScale edge list is valid")
}

/// Random connected simple graph: a uniform random labelled spanning tree
/// (decoded from a Prüfer sequence) plus `m - (n - 1)` distinct extra edges
/// drawn uniformly from the remaining pairs.
pub fn build_random(n: usize, m: usize, seed: u64) -> Result<Topology, TopologyError> {
    let max_edges = n * n.saturating_sub(1) / 2;
    if n == 0 || m + 1 < n || m > max_edges {
        return Err(TopologyError::Infeasible { nodes: n, edges: m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = random_spanning_tree(n, &mut rng);
    let present: BTreeSet<(NodeId, NodeId)> = edges.iter().copied().collect();
    let candidates: Vec<(NodeId, NodeId)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|p| !present.contains(p))
        .collect();
    let extra = m - (n - 1);
    let mut picks = index::sample(&mut rng, candidates.len(), extra).into_vec();
    picks.sort_unstable();
    edges.extend(picks.into_iter().map(|i| candidates[i]));
    Topology::new(RawTopology::new(n, edges))
}

fn random_spanning_tree(n: usize, rng: &mut impl Rng) -> Vec<(NodeId, NodeId)> {
    match n {
        1 => return Vec::new(),
        2 => return vec![(0, 1)],
        _ => {}
    }
    let prufer: Vec<NodeId> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &x in &prufer {
        degree[x] += 1;
    }
    let mut leaves: BTreeSet<NodeId> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &x in &prufer {
        let leaf = leaves.pop_first().expect("a Prüfer sequence always leaves a leaf");
        edges.push((leaf.min(x), leaf.max(x)));
        degree[x] -= 1;
        if degree[x] == 1 {
            leaves.insert(x);
        }
    }
    let u = leaves.pop_first().expect("two leaves remain");
    let v = leaves.pop_first().expect("two leaves remain");
    edges.push((u, v));
    edges
}
