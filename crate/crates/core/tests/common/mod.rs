//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use dccast::topology::{NodeId, Topology};

pub struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[x] = r;
        r
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a] = b;
    }
}

fn spans(topology: &Topology, mask: u64, terminals: &[NodeId]) -> bool {
    let mut uf = UnionFind::new(topology.node_count());
    for (e, u, v) in topology.edges() {
        if mask >> e.0 & 1 == 1 {
            uf.union(u, v);
        }
    }
    let r = uf.find(terminals[0]);
    terminals.iter().all(|&t| uf.find(t) == r)
}

/// Cheapest edge subset connecting all terminals, by enumerating subsets.
pub fn brute_force_steiner(topology: &Topology, weights: &[f64], terminals: &[NodeId]) -> f64 {
    let m = topology.edge_count();
    assert!(m <= 20, "too many edges to enumerate");
    let mut best = f64::INFINITY;
    for mask in 0u64..(1 << m) {
        let w: f64 = (0..m).filter(|e| mask >> e & 1 == 1).map(|e| weights[e]).sum();
        if w < best && spans(topology, mask, terminals) {
            best = w;
        }
    }
    best
}

/// Smallest possible largest edge weight of a terminal-connecting subgraph.
pub fn brute_force_bottleneck(topology: &Topology, weights: &[f64], terminals: &[NodeId]) -> f64 {
    let m = topology.edge_count();
    let mut best = f64::INFINITY;
    for mask in 1u64..(1 << m) {
        let w = (0..m).filter(|e| mask >> e & 1 == 1).map(|e| weights[e]).fold(0.0, f64::max);
        if w < best && spans(topology, mask, terminals) {
            best = w;
        }
    }
    best
}

/// Every simple path from `s` to `d`, sorted by hops then node sequence.
pub fn all_simple_paths(topology: &Topology, s: NodeId, d: NodeId) -> Vec<Vec<NodeId>> {
    fn walk(t: &Topology, d: NodeId, path: &mut Vec<NodeId>, seen: &mut [bool], out: &mut Vec<Vec<NodeId>>) {
        let u = *path.last().unwrap();
        if u == d {
            out.push(path.clone());
            return;
        }
        for &(v, _) in t.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                path.push(v);
                walk(t, d, path, seen, out);
                path.pop();
                seen[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; topology.node_count()];
    seen[s] = true;
    walk(topology, d, &mut vec![s], &mut seen, &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in 0..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Maximum of `Σ x_p` subject to one constraint per arc row, by trying every
/// vertex of the polytope. `rows[i]` is the 0/1 path incidence of arc `i`.
pub fn vertex_oracle(paths: usize, rows: &[(Vec<f64>, f64)]) -> f64 {
    let mut all: Vec<(Vec<f64>, f64)> = rows.to_vec();
    for p in 0..paths {
        let mut r = vec![0.0; paths];
        r[p] = -1.0;
        all.push((r, 0.0));
    }
    let mut best: f64 = 0.0;
    let idx: Vec<usize> = (0..all.len()).collect();
    let mut choose = vec![0usize; paths];
    fn combos(start: usize, depth: usize, idx: &[usize], choose: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if depth == choose.len() {
            f(choose);
            return;
        }
        for i in start..idx.len() {
            choose[depth] = idx[i];
            combos(i + 1, depth + 1, idx, choose, f);
        }
    }
    combos(0, 0, &idx, &mut choose, &mut |set: &[usize]| {
        let a: Vec<Vec<f64>> = set.iter().map(|&i| all[i].0.clone()).collect();
        let b: Vec<f64> = set.iter().map(|&i| all[i].1).collect();
        if let Some(x) = solve(a, b) {
            let feasible = all.iter().all(|(r, c)| r.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() <= c + 1e-9);
            if feasible {
                best = best.max(x.iter().sum());
            }
        }
    });
    best
}
