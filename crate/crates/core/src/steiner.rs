//! Terminal-spanning tree construction.
//!
//! [`min_weight_steiner_tree`] is the metric-closure heuristic (shortest
//! paths between terminals, MST on the closure, expansion, MST again, leaf
//! pruning). It is within a factor of two of optimal. [`exact_steiner_small`]
//! is a Dreyfus-Wagner dynamic program used as a test oracle.
//!
//! All weight ties are broken by the smallest `(node, node)` pair so that
//! repeated runs pick identical trees.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::{ArcId, EdgeId, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SteinerError {
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("terminal set is empty")]
    NoTerminals,
    #[error("terminal {0} is unreachable from the root")]
    Unreachable(NodeId),
    #[error("instance too large for the exact solver ({nodes} nodes, {terminals} terminals)")]
    TooLarge { nodes: usize, terminals: usize },
    #[error("edge weights must be finite and nonnegative (edge {0:?})")]
    BadWeight(EdgeId),
    #[error("weight vector has {got} entries, graph has {expected} edges")]
    WeightCount { expected: usize, got: usize },
    #[error("not a forwarding tree: {0}")]
    Malformed(String),
}

/// A topology with one nonnegative weight per undirected edge.
#[derive(Debug, Clone)]
pub struct WeightedView<'a> {
    topology: &'a Topology,
    weights: Vec<f64>,
}

impl<'a> WeightedView<'a> {
    pub fn new(topology: &'a Topology, weights: Vec<f64>) -> Result<Self, SteinerError> {
        if weights.len() != topology.edge_count() {
            return Err(SteinerError::WeightCount { expected: topology.edge_count(), got: weights.len() });
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SteinerError::BadWeight(EdgeId(i)));
        }
        Ok(Self { topology, weights })
    }

    pub fn uniform(topology: &'a Topology, weight: f64) -> Self {
        Self::new(topology, vec![weight; topology.edge_count()]).expect("uniform weight must be finite and >= 0")
    }

    pub fn topology(&self) -> &'a Topology {
        self.topology
    }

    pub fn weight(&self, edge: EdgeId) -> f64 {
        self.weights[edge.0]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of the weights of `edges`.
    pub fn total(&self, edges: &[EdgeId]) -> f64 {
        edges.iter().map(|e| self.weights[e.0]).sum()
    }

    fn tie_key(&self, edge: EdgeId) -> (f64, NodeId, NodeId) {
        let (u, v) = self.topology.endpoints(edge);
        (self.weights[edge.0], u, v)
    }
}

/// A tree spanning `root` and all terminals whose leaves are all terminals.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardingTree {
    root: NodeId,
    terminals: Vec<NodeId>,
    edges: Vec<EdgeId>,
    /// Tree edges oriented away from the root, in BFS order.
    arcs: Vec<ArcId>,
}

impl ForwardingTree {
    /// Validates and orients an edge set.
    pub fn from_edges(
        topology: &Topology,
        root: NodeId,
        terminals: &[NodeId],
        edges: &[EdgeId],
    ) -> Result<Self, SteinerError> {
        let mut terminals: Vec<NodeId> = terminals.iter().copied().filter(|&t| t != root).collect();
        terminals.sort_unstable();
        terminals.dedup();
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();

        let mut adjacency: Vec<Vec<(NodeId, EdgeId)>> = vec![Vec::new(); topology.node_count()];
        let mut nodes = BTreeSet::from([root]);
        for &e in &edges {
            if e.0 >= topology.edge_count() {
                return Err(SteinerError::Malformed(format!("edge {e:?} is not in the graph")));
            }
            let (u, v) = topology.endpoints(e);
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
            nodes.insert(u);
            nodes.insert(v);
        }
        if edges.len() + 1 != nodes.len() {
            return Err(SteinerError::Malformed(format!(
                "{} edges over {} nodes cannot be a tree",
                edges.len(),
                nodes.len()
            )));
        }
        let mut seen = vec![false; topology.node_count()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        let mut arcs = Vec::with_capacity(edges.len());
        while let Some(u) = queue.pop_front() {
            adjacency[u].sort_unstable();
            for &(v, e) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    arcs.push(topology.arc_from(e, u));
                    queue.push_back(v);
                }
            }
        }
        if arcs.len() != edges.len() {
            return Err(SteinerError::Malformed("edge set is not connected to the root".into()));
        }
        if let Some(&t) = terminals.iter().find(|&&t| !seen[t]) {
            return Err(SteinerError::Malformed(format!("terminal {t} is not spanned")));
        }
        for &n in &nodes {
            let is_terminal = n == root || terminals.binary_search(&n).is_ok();
            if adjacency[n].len() == 1 && !is_terminal {
                return Err(SteinerError::Malformed(format!("non-terminal leaf {n}")));
            }
        }
        Ok(Self { root, terminals, edges, arcs })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Terminals other than the root, sorted.
    pub fn terminals(&self) -> &[NodeId] {
        &self.terminals
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    /// Directed arcs used when sending from the root.
    pub fn arcs(&self) -> &[ArcId] {
        &self.arcs
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, view: &WeightedView<'_>) -> f64 {
        view.total(&self.edges)
    }

    pub fn max_edge_weight(&self, view: &WeightedView<'_>) -> f64 {
        self.edges.iter().map(|&e| view.weight(e)).fold(0.0, f64::max)
    }
}

/// Interface for minimum-weight Steiner tree heuristics.
pub trait SteinerHeuristic {
    /// Returns a terminal-spanning edge set using only edges with `allowed[e]`.
    fn solve(
        &self,
        view: &WeightedView<'_>,
        allowed: &[bool],
        root: NodeId,
        terminals: &[NodeId],
    ) -> Result<Vec<EdgeId>, SteinerError>;
}

/// Shortest-path metric closure heuristic (Kou, Markowsky and Berman).
#[derive(Debug, Clone, Copy, Default)]
pub struct MetricClosure;

impl SteinerHeuristic for MetricClosure {
    fn solve(
        &self,
        view: &WeightedView<'_>,
        allowed: &[bool],
        root: NodeId,
        terminals: &[NodeId],
    ) -> Result<Vec<EdgeId>, SteinerError> {
        let terms = terminal_set(view.topology(), root, terminals)?;
        let trees: Vec<ShortestPaths> = terms.iter().map(|&t| dijkstra(view, allowed, t)).collect();
        for &t in &terms[1..] {
            if trees[0].dist[t].is_infinite() {
                return Err(SteinerError::Unreachable(t));
            }
        }

        // Prim over the closure, ties by the (node, node) pair.
        let k = terms.len();
        let mut in_tree = vec![false; k];
        in_tree[0] = true;
        let mut closure_edges = Vec::with_capacity(k - 1);
        for _ in 1..k {
            let mut best: Option<(f64, NodeId, NodeId, usize, usize)> = None;
            for a in (0..k).filter(|&a| in_tree[a]) {
                for b in (0..k).filter(|&b| !in_tree[b]) {
                    let d = trees[a].dist[terms[b]];
                    let key = (d, terms[a].min(terms[b]), terms[a].max(terms[b]), a, b);
                    if best.is_none_or(|cur| cmp_tie(&key, &cur) == Ordering::Less) {
                        best = Some(key);
                    }
                }
            }
            let (_, _, _, a, b) = best.expect("closure is complete");
            in_tree[b] = true;
            closure_edges.push((a, b));
        }

        let mut union = BTreeSet::new();
        for (a, b) in closure_edges {
            let mut node = terms[b];
            while node != terms[a] {
                let (prev, edge) = trees[a].pred[node].expect("reachable node has a predecessor");
                union.insert(edge);
                node = prev;
            }
        }
        let spanning = minimum_spanning_forest(view, union.into_iter().collect());
        Ok(prune_leaves(view.topology(), spanning, &terms))
    }
}

fn cmp_tie(a: &(f64, NodeId, NodeId, usize, usize), b: &(f64, NodeId, NodeId, usize, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
}

/// Sorted, deduplicated `root ∪ terminals` with the root first.
fn terminal_set(topology: &Topology, root: NodeId, terminals: &[NodeId]) -> Result<Vec<NodeId>, SteinerError> {
    let n = topology.node_count();
    if root >= n {
        return Err(SteinerError::UnknownNode(root));
    }
    if let Some(&t) = terminals.iter().find(|&&t| t >= n) {
        return Err(SteinerError::UnknownNode(t));
    }
    let mut rest: Vec<NodeId> = terminals.iter().copied().filter(|&t| t != root).collect();
    rest.sort_unstable();
    rest.dedup();
    if rest.is_empty() {
        return Err(SteinerError::NoTerminals);
    }
    let mut terms = vec![root];
    terms.extend(rest);
    Ok(terms)
}

struct ShortestPaths {
    dist: Vec<f64>,
    pred: Vec<Option<(NodeId, EdgeId)>>,
}

#[derive(PartialEq)]
struct HeapItem(f64, NodeId);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra restricted to allowed edges; equal-distance predecessors resolve
/// to the smallest node id.
fn dijkstra(view: &WeightedView<'_>, allowed: &[bool], source: NodeId) -> ShortestPaths {
    let topology = view.topology();
    let n = topology.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(NodeId, EdgeId)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, e) in topology.neighbors(u) {
            if !allowed[e.0] || done[v] {
                continue;
            }
            let nd = d + view.weight(e);
            let better = nd < dist[v] || (nd == dist[v] && pred[v].is_some_and(|(p, _)| u < p));
            if better {
                dist[v] = nd;
                pred[v] = Some((u, e));
                heap.push(HeapItem(nd, v));
            }
        }
    }
    ShortestPaths { dist, pred }
}

/// Kruskal over `edges`, ties by `(weight, u, v)`.
fn minimum_spanning_forest(view: &WeightedView<'_>, mut edges: Vec<EdgeId>) -> Vec<EdgeId> {
    edges.sort_by(|&a, &b| {
        let (wa, ua, va) = view.tie_key(a);
        let (wb, ub, vb) = view.tie_key(b);
        wa.total_cmp(&wb).then(ua.cmp(&ub)).then(va.cmp(&vb))
    });
    let mut sets = DisjointSets::new(view.topology().node_count());
    edges
        .into_iter()
        .filter(|&e| {
            let (u, v) = view.topology().endpoints(e);
            sets.union(u, v)
        })
        .collect()
}

/// Repeatedly removes leaves that are not terminals.
fn prune_leaves(topology: &Topology, edges: Vec<EdgeId>, terms: &[NodeId]) -> Vec<EdgeId> {
    let n = topology.node_count();
    let mut is_term = vec![false; n];
    for &t in terms {
        is_term[t] = true;
    }
    let mut degree = vec![0usize; n];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &e) in edges.iter().enumerate() {
        let (u, v) = topology.endpoints(e);
        degree[u] += 1;
        degree[v] += 1;
        incident[u].push(i);
        incident[v].push(i);
    }
    let mut alive = vec![true; edges.len()];
    let mut stack: Vec<NodeId> = (0..n).filter(|&v| degree[v] == 1 && !is_term[v]).collect();
    while let Some(leaf) = stack.pop() {
        if degree[leaf] != 1 {
            continue;
        }
        let i = *incident[leaf].iter().find(|&&i| alive[i]).expect("leaf has one live edge");
        alive[i] = false;
        let (u, v) = topology.endpoints(edges[i]);
        let other = if u == leaf { v } else { u };
        degree[leaf] = 0;
        degree[other] -= 1;
        if degree[other] == 1 && !is_term[other] {
            stack.push(other);
        }
    }
    let mut kept: Vec<EdgeId> = edges.into_iter().zip(alive).filter_map(|(e, a)| a.then_some(e)).collect();
    kept.sort_unstable();
    kept
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `true` if the two sets were distinct.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

pub fn min_weight_steiner_tree(
    view: &WeightedView<'_>,
    root: NodeId,
    terminals: &[NodeId],
) -> Result<ForwardingTree, SteinerError> {
    let allowed = vec![true; view.topology().edge_count()];
    steiner_with(&MetricClosure, view, &allowed, root, terminals)
}

fn steiner_with(
    heuristic: &impl SteinerHeuristic,
    view: &WeightedView<'_>,
    allowed: &[bool],
    root: NodeId,
    terminals: &[NodeId],
) -> Result<ForwardingTree, SteinerError> {
    let edges = heuristic.solve(view, allowed, root, terminals)?;
    ForwardingTree::from_edges(view.topology(), root, terminals, &edges)
}

pub const EXACT_MAX_NODES: usize = 16;
pub const EXACT_MAX_TERMINALS: usize = 6;

/// Exact minimum Steiner tree by dynamic programming over terminal subsets.
pub fn exact_steiner_small(
    view: &WeightedView<'_>,
    root: NodeId,
    terminals: &[NodeId],
) -> Result<ForwardingTree, SteinerError> {
    let topology = view.topology();
    let n = topology.node_count();
    let terms = terminal_set(topology, root, terminals)?;
    if n > EXACT_MAX_NODES || terms.len() - 1 > EXACT_MAX_TERMINALS {
        return Err(SteinerError::TooLarge { nodes: n, terminals: terms.len() - 1 });
    }

    // All-pairs shortest paths with next-hop edges.
    let allowed = vec![true; topology.edge_count()];
    let sp: Vec<ShortestPaths> = (0..n).map(|s| dijkstra(view, &allowed, s)).collect();
    for &t in &terms[1..] {
        if sp[root].dist[t].is_infinite() {
            return Err(SteinerError::Unreachable(t));
        }
    }
    let d = |a: NodeId, b: NodeId| sp[a].dist[b];

    let k = terms.len();
    let full = (1usize << k) - 1;
    let mut cost = vec![vec![f64::INFINITY; n]; full + 1];
    let mut merged = vec![vec![f64::INFINITY; n]; full + 1];
    let mut split = vec![vec![0usize; n]; full + 1];
    let mut via = vec![vec![0usize; n]; full + 1];
    for (i, &t) in terms.iter().enumerate() {
        for v in 0..n {
            cost[1 << i][v] = d(t, v);
        }
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        let low = mask & mask.wrapping_neg();
        for v in 0..n {
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                if sub & low != 0 {
                    let c = cost[sub][v] + cost[mask ^ sub][v];
                    if c < merged[mask][v] {
                        merged[mask][v] = c;
                        split[mask][v] = sub;
                    }
                }
                sub = (sub - 1) & mask;
            }
        }
        for v in 0..n {
            for u in 0..n {
                let c = merged[mask][u] + d(u, v);
                if c < cost[mask][v] {
                    cost[mask][v] = c;
                    via[mask][v] = u;
                }
            }
        }
    }

    let mut edges = BTreeSet::new();
    let path = |from: NodeId, to: NodeId, edges: &mut BTreeSet<EdgeId>| {
        let mut node = to;
        while node != from {
            let (prev, e) = sp[from].pred[node].expect("reachable");
            edges.insert(e);
            node = prev;
        }
    };
    let mut stack = vec![(full, root)];
    while let Some((mask, v)) = stack.pop() {
        if mask.count_ones() == 1 {
            path(terms[mask.trailing_zeros() as usize], v, &mut edges);
            continue;
        }
        let u = via[mask][v];
        path(u, v, &mut edges);
        let sub = split[mask][u];
        stack.push((sub, u));
        stack.push((mask ^ sub, u));
    }
    let spanning = minimum_spanning_forest(view, edges.into_iter().collect());
    let pruned = prune_leaves(topology, spanning, &terms);
    ForwardingTree::from_edges(topology, root, terminals, &pruned)
}

/// Minimizes the largest edge weight first, then total weight among the
/// edges at or below that bottleneck.
pub fn bottleneck_steiner_tree(
    view: &WeightedView<'_>,
    root: NodeId,
    terminals: &[NodeId],
) -> Result<ForwardingTree, SteinerError> {
    let topology = view.topology();
    let terms = terminal_set(topology, root, terminals)?;
    let mut order: Vec<EdgeId> = (0..topology.edge_count()).map(EdgeId).collect();
    order.sort_by(|&a, &b| {
        let (wa, ua, va) = view.tie_key(a);
        let (wb, ub, vb) = view.tie_key(b);
        wa.total_cmp(&wb).then(ua.cmp(&ub)).then(va.cmp(&vb))
    });
    let mut sets = DisjointSets::new(topology.node_count());
    let mut threshold = None;
    let mut i = 0;
    while i < order.len() {
        let w = view.weight(order[i]);
        while i < order.len() && view.weight(order[i]) == w {
            let (u, v) = topology.endpoints(order[i]);
            sets.union(u, v);
            i += 1;
        }
        let r = sets.find(terms[0]);
        if terms[1..].iter().all(|&t| sets.find(t) == r) {
            threshold = Some(w);
            break;
        }
    }
    let threshold = threshold.ok_or_else(|| {
        let r = sets.find(terms[0]);
        SteinerError::Unreachable(*terms[1..].iter().find(|&&t| sets.find(t) != r).unwrap_or(&terms[1]))
    })?;
    let allowed: Vec<bool> = view.weights().iter().map(|&w| w <= threshold).collect();
    steiner_with(&MetricClosure, view, &allowed, root, terminals)
}

/// Steiner tree under independent uniform `(0, 1]` edge weights.
pub fn random_tree(
    topology: &Topology,
    root: NodeId,
    terminals: &[NodeId],
    seed: u64,
) -> Result<ForwardingTree, SteinerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..topology.edge_count()).map(|_| 1.0 - rng.random::<f64>()).collect();
    let view = WeightedView::new(topology, weights)?;
    min_weight_steiner_tree(&view, root, terminals)
}
