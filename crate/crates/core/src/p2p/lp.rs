//! Per-slot maximum volume over a fixed set of paths.
//!
//! Arcs are grouped by the subset of paths that cross them; only the
//! tightest arc of every group matters, so the program is
//!
//! ```text
//! maximize Σ_p x_p  subject to  Σ_{p ∈ S} x_p ≤ cap_S  for every group S,  x ≥ 0
//! ```
//!
//! Up to three paths it is solved by enumerating vertices; beyond that by a
//! dense simplex with Bland's rule.

use crate::scheduler::LinkState;
use crate::scheduler::Slot;
use crate::topology::ArcId;

/// Largest path count solved by vertex enumeration.
pub const VERTEX_ENUMERATION_MAX_PATHS: usize = 3;

/// Arcs of a path set, grouped by which paths use them.
#[derive(Debug, Clone)]
pub struct PathGroups {
    paths: usize,
    /// `(membership mask, arcs)`, masks ascending.
    groups: Vec<(u64, Vec<ArcId>)>,
}

impl PathGroups {
    pub fn new(paths: &[Vec<ArcId>]) -> Self {
        assert!(paths.len() <= 64, "at most 64 paths");
        let mut masks: std::collections::BTreeMap<ArcId, u64> = Default::default();
        for (p, arcs) in paths.iter().enumerate() {
            for &a in arcs {
                *masks.entry(a).or_default() |= 1 << p;
            }
        }
        let mut grouped: std::collections::BTreeMap<u64, Vec<ArcId>> = Default::default();
        for (a, m) in masks {
            grouped.entry(m).or_default().push(a);
        }
        Self { paths: paths.len(), groups: grouped.into_iter().collect() }
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    /// Tightest residual of every group in `slot`.
    pub fn capacities(&self, state: &LinkState, slot: Slot) -> Vec<(u64, f64)> {
        self.groups
            .iter()
            .map(|(m, arcs)| (*m, arcs.iter().map(|&a| state.available(a, slot)).fold(f64::INFINITY, f64::min)))
            .collect()
    }
}

/// Per-path volumes maximizing the total, given `(mask, cap)` constraints.
pub fn max_path_packing(paths: usize, constraints: &[(u64, f64)]) -> Vec<f64> {
    if paths == 0 {
        return Vec::new();
    }
    let mut x = if constraints.iter().all(|(m, _)| m.count_ones() == 1) {
        let mut x = vec![f64::INFINITY; paths];
        for &(m, c) in constraints {
            let p = m.trailing_zeros() as usize;
            x[p] = x[p].min(c);
        }
        x
    } else if paths <= VERTEX_ENUMERATION_MAX_PATHS {
        by_vertex_enumeration(paths, constraints)
    } else {
        by_simplex(paths, constraints)
    };
    for v in &mut x {
        if !v.is_finite() || *v < 0.0 {
            *v = 0.0;
        }
    }
    // Round-off can leave a group a hair over its cap; scale back into the box.
    let mut scale: f64 = 1.0;
    for &(m, c) in constraints {
        let used: f64 = (0..paths).filter(|p| m >> p & 1 == 1).map(|p| x[p]).sum();
        if used > c {
            scale = scale.min(if used > 0.0 { c / used } else { 0.0 });
        }
    }
    if scale < 1.0 {
        x.iter_mut().for_each(|v| *v *= scale);
    }
    x
}

fn by_vertex_enumeration(paths: usize, constraints: &[(u64, f64)]) -> Vec<f64> {
    let mut rows: Vec<(Vec<f64>, f64)> = constraints
        .iter()
        .map(|&(m, c)| ((0..paths).map(|p| if m >> p & 1 == 1 { 1.0 } else { 0.0 }).collect(), c))
        .collect();
    for p in 0..paths {
        let mut a = vec![0.0; paths];
        a[p] = -1.0;
        rows.push((a, 0.0));
    }
    let mut best = vec![0.0; paths];
    let mut best_value = 0.0;
    let mut chosen = Vec::with_capacity(paths);
    for_each_combination(rows.len(), paths, &mut chosen, &mut |subset| {
        let Some(x) = solve_square(subset.iter().map(|&i| &rows[i]), paths) else {
            return;
        };
        let feasible = rows.iter().all(|(a, b)| dot(a, &x) <= b + 1e-9 * (1.0 + b.abs()));
        let value: f64 = x.iter().sum();
        if feasible && value > best_value + 1e-12 {
            best_value = value;
            best = x;
        }
    });
    best
}

fn for_each_combination(n: usize, k: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    let start = chosen.last().map_or(0, |&i| i + 1);
    for i in start..n {
        if n - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        for_each_combination(n, k, chosen, f);
        chosen.pop();
    }
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_square<'r>(rows: impl Iterator<Item = &'r (Vec<f64>, f64)>, n: usize) -> Option<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(*b);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

fn by_simplex(paths: usize, constraints: &[(u64, f64)]) -> Vec<f64> {
    let rows = constraints.len();
    let cols = paths + rows;
    // Tableau rows: constraints, then the objective row (reduced costs).
    let mut t = vec![vec![0.0; cols + 1]; rows + 1];
    for (i, &(m, c)) in constraints.iter().enumerate() {
        for p in 0..paths {
            if m >> p & 1 == 1 {
                t[i][p] = 1.0;
            }
        }
        t[i][paths + i] = 1.0;
        t[i][cols] = c.max(0.0);
    }
    for p in 0..paths {
        t[rows][p] = -1.0;
    }
    let mut basis: Vec<usize> = (paths..cols).collect();
    const EPS: f64 = 1e-12;
    // Bland: smallest index with negative reduced cost enters.
    while let Some(enter) = (0..cols).find(|&j| t[rows][j] < -EPS) {
        let mut leave: Option<usize> = None;
        for i in 0..rows {
            if t[i][enter] > EPS {
                let ratio = t[i][cols] / t[i][enter];
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let best = t[l][cols] / t[l][enter];
                        if ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        // Every path is capped by some group, so the program is bounded.
        let leave = leave.expect("bounded program");
        let pivot = t[leave][enter];
        for c in 0..=cols {
            t[leave][c] /= pivot;
        }
        for r in 0..=rows {
            if r != leave {
                let f = t[r][enter];
                if f != 0.0 {
                    for c in 0..=cols {
                        t[r][c] -= f * t[leave][c];
                    }
                }
            }
        }
        basis[leave] = enter;
    }
    let mut x = vec![0.0; paths];
    for (i, &b) in basis.iter().enumerate() {
        if b < paths {
            x[b] = t[i][cols];
        }
    }
    x
}
