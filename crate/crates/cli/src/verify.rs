//! Self-check run by `dccast-sim verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dccast::p2p::max_path_packing;
use dccast::sim::{simulate, Scheme, SimConfig};
use dccast::steiner::{bottleneck_steiner_tree, exact_steiner_small, min_weight_steiner_tree, WeightedView};
use dccast::topology::{build_gscale, build_random, Topology};
use dccast::workload::{generate, WorkloadSpec};

pub struct Check {
    pub name: String,
    pub failure: Option<String>,
}

fn check(name: impl Into<String>, result: Result<(), String>) -> Check {
    Check { name: name.into(), failure: result.err() }
}

fn simulations() -> Vec<Check> {
    let mut out = Vec::new();
    let topologies: Vec<(String, Topology)> = vec![
        ("gscale".into(), build_gscale()),
        ("random:16,30".into(), build_random(16, 30, 5).expect("feasible size")),
    ];
    for (name, topology) in &topologies {
        for copies in [1, 3] {
            let spec = WorkloadSpec { copies, last_arrival: 60, seed: 9, ..WorkloadSpec::default() };
            let requests = generate(&spec, topology).expect("valid spec");
            let config = SimConfig { ledger_interval: 1, ..SimConfig::default() };
            for scheme in Scheme::ALL {
                let result = simulate(topology, &requests, scheme, &config).map(|_| ()).map_err(|e| e.to_string());
                out.push(check(format!("simulation invariants: {scheme} on {name}, copies={copies}"), result));
            }
        }
    }
    out
}

fn steiner() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 1.0;
    let mut bottleneck = Ok(());
    for i in 0..30 {
        let t = build_random(8, 14, 100 + i).expect("feasible size");
        let weights: Vec<f64> = (0..t.edge_count()).map(|_| rng.random_range(1.0..10.0)).collect();
        let view = WeightedView::new(&t, weights).expect("positive weights");
        let root = rng.random_range(0..8);
        let mut terminals = Vec::new();
        while terminals.len() < 3 {
            let v = rng.random_range(0..8);
            if v != root && !terminals.contains(&v) {
                terminals.push(v);
            }
        }
        let (Ok(h), Ok(x), Ok(b)) = (
            min_weight_steiner_tree(&view, root, &terminals),
            exact_steiner_small(&view, root, &terminals),
            bottleneck_steiner_tree(&view, root, &terminals),
        ) else {
            return vec![check("steiner trees", Err(format!("instance {i} failed to solve")))];
        };
        worst = worst.max(h.weight(&view) / x.weight(&view));
        let best_max = h.max_edge_weight(&view).min(x.max_edge_weight(&view));
        if b.max_edge_weight(&view) > best_max + 1e-12 && bottleneck.is_ok() {
            bottleneck = Err(format!("instance {i}: bottleneck tree is not minimax"));
        }
    }
    let ratio = if worst <= 2.0 { Ok(()) } else { Err(format!("worst ratio {worst:.3}")) };
    vec![
        check(format!("steiner heuristic within 2x of exact on 30 instances (worst {worst:.3})"), ratio),
        check("bottleneck tree minimizes the largest edge weight", bottleneck),
    ]
}

fn packing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..500 {
        let paths = rng.random_range(1..=5usize);
        let groups = rng.random_range(1..=6usize);
        let mut constraints: Vec<(u64, f64)> = (0..groups)
            .map(|_| (rng.random_range(1..(1u64 << paths)), rng.random_range(0.0..1.0)))
            .collect();
        constraints.extend((0..paths).map(|p| (1u64 << p, rng.random_range(0.0..2.0))));
        let x = max_path_packing(paths, &constraints);
        for &(m, c) in &constraints {
            let used: f64 = (0..paths).filter(|p| m >> p & 1 == 1).map(|p| x[p]).sum();
            if used > c + 1e-9 {
                return check("path packing", Err(format!("instance {i}: group {m:b} over capacity")));
            }
        }
        // Every path must cross a tight group, or it could carry more.
        for p in 0..paths {
            let tight = constraints.iter().any(|&(m, c)| {
                m >> p & 1 == 1 && (0..paths).filter(|q| m >> q & 1 == 1).map(|q| x[q]).sum::<f64>() >= c - 1e-9
            });
            if !tight {
                return check("path packing", Err(format!("instance {i}: path {p} can be increased")));
            }
        }
    }
    check("path packing is feasible and saturating on 500 instances", Ok(()))
}

pub fn run_all() -> Vec<Check> {
    let mut out = simulations();
    out.extend(steiner());
    out.push(packing());
    out
}
