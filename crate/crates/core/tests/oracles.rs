mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dccast::p2p::{k_shortest_paths, max_path_packing, PathGroups};
use dccast::scheduler::LinkState;
use dccast::steiner::{bottleneck_steiner_tree, exact_steiner_small, min_weight_steiner_tree, WeightedView};
use dccast::topology::{build_random, NodeId, Topology};

use common::{all_simple_paths, brute_force_bottleneck, brute_force_steiner, vertex_oracle};

fn pick_terminals(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::new();
    while out.len() < count {
        let v = rng.random_range(0..n);
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn random_weights(rng: &mut ChaCha8Rng, t: &Topology) -> Vec<f64> {
    (0..t.edge_count()).map(|_| rng.random_range(0.5..10.0)).collect()
}

#[test]
fn exact_steiner_matches_subset_enumeration_on_six_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..50 {
        let m = rng.random_range(5..=9);
        let t = build_random(6, m, i).unwrap();
        let w = random_weights(&mut rng, &t);
        let view = WeightedView::new(&t, w.clone()).unwrap();
        let k = rng.random_range(2..=5);
        let terms = pick_terminals(&mut rng, 6, k);
        let exact = exact_steiner_small(&view, terms[0], &terms[1..]).unwrap();
        let oracle = brute_force_steiner(&t, &w, &terms);
        assert!((exact.weight(&view) - oracle).abs() < 1e-9, "instance {i}: {} vs {oracle}", exact.weight(&view));
    }
}

#[test]
fn heuristic_is_near_the_exact_tree() {
    for terminals in [3, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(10 + terminals as u64);
        let mut close = 0;
        for i in 0..30 {
            let t = build_random(8, 14, 500 + i).unwrap();
            let w = random_weights(&mut rng, &t);
            let view = WeightedView::new(&t, w.clone()).unwrap();
            let terms = pick_terminals(&mut rng, 8, terminals);
            let h = min_weight_steiner_tree(&view, terms[0], &terms[1..]).unwrap().weight(&view);
            let x = exact_steiner_small(&view, terms[0], &terms[1..]).unwrap().weight(&view);
            assert!((x - brute_force_steiner(&t, &w, &terms)).abs() < 1e-9);
            assert!(h <= 2.0 * x + 1e-9, "instance {i}: heuristic {h} exact {x}");
            if h <= 1.2 * x + 1e-9 {
                close += 1;
            }
        }
        assert!(close >= 24, "{terminals} terminals: only {close}/30 within 1.2x");
    }
}

#[test]
fn bottleneck_tree_has_minimal_largest_edge() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..40 {
        let t = build_random(7, 11, 900 + i).unwrap();
        // Few distinct values so that ties occur.
        let w: Vec<f64> = (0..t.edge_count()).map(|_| rng.random_range(1..=5) as f64).collect();
        let view = WeightedView::new(&t, w.clone()).unwrap();
        let terms = pick_terminals(&mut rng, 7, 3);
        let tree = bottleneck_steiner_tree(&view, terms[0], &terms[1..]).unwrap();
        assert_eq!(tree.max_edge_weight(&view), brute_force_bottleneck(&t, &w, &terms), "instance {i}");
        let exact = exact_steiner_small(&view, terms[0], &terms[1..]).unwrap();
        assert!(tree.max_edge_weight(&view) <= exact.max_edge_weight(&view));
    }
}

#[test]
fn k_shortest_paths_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..60 {
        let m = rng.random_range(8..=16);
        let t = build_random(8, m, 2000 + i).unwrap();
        let terms = pick_terminals(&mut rng, 8, 2);
        let oracle = all_simple_paths(&t, terms[0], terms[1]);
        for k in 1..=5 {
            let got: Vec<Vec<NodeId>> =
                k_shortest_paths(&t, terms[0], terms[1], k).iter().map(|p| p.nodes().to_vec()).collect();
            let want: Vec<Vec<NodeId>> = oracle.iter().take(k).cloned().collect();
            assert_eq!(got, want, "instance {i}, K={k}");
        }
    }
}

#[test]
fn per_slot_packing_is_maximal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..60 {
        let t = build_random(8, 14, 3000 + i).unwrap();
        let terms = pick_terminals(&mut rng, 8, 2);
        let k = if i < 40 { rng.random_range(2..=3) } else { rng.random_range(4..=5) };
        let paths: Vec<Vec<_>> =
            k_shortest_paths(&t, terms[0], terms[1], k).iter().map(|p| p.arcs(&t).unwrap()).collect();
        let mut state = LinkState::new(&t, 1.0);
        for a in 0..t.arc_count() {
            let used = rng.random_range(0.0..1.0);
            state.book(dccast::topology::ArcId(a), 1, if rng.random_bool(0.2) { 1.0 } else { used });
        }
        let groups = PathGroups::new(&paths);
        let x = max_path_packing(paths.len(), &groups.capacities(&state, 1));
        let mut arcs: Vec<_> = paths.iter().flatten().copied().collect();
        arcs.sort();
        arcs.dedup();
        let rows: Vec<(Vec<f64>, f64)> = arcs
            .iter()
            .map(|a| {
                let r = paths.iter().map(|p| if p.contains(a) { 1.0 } else { 0.0 }).collect::<Vec<_>>();
                (r, state.available(*a, 1))
            })
            .collect();
        for (r, c) in &rows {
            let used: f64 = r.iter().zip(&x).map(|(a, x)| a * x).sum();
            assert!(used <= c + 1e-9, "instance {i}: arc over capacity");
        }
        assert!(x.iter().all(|&v| v >= -1e-12));
        let best = vertex_oracle(paths.len(), &rows);
        assert!((x.iter().sum::<f64>() - best).abs() < 1e-7, "instance {i}: {} vs {best}", x.iter().sum::<f64>());
    }
}
