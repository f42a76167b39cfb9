mod common;

use std::collections::HashMap;

use proptest::prelude::*;

use dccast::p2p::{P2pDiscipline, P2pScheduler};
use dccast::scheduler::{
    allocate, srpt_reschedule, LinkState, RequestId, Scheduler, Slot, TransferRequest, TreeFcfsScheduler,
    TreeSelection,
};
use dccast::sim::{simulate, Scheme, SimConfig};
use dccast::topology::{build_random, ArcId, Topology};
use dccast::workload::{read_csv, write_csv};

type RawRequest = (f64, u64, usize, Slot);

fn topology() -> impl Strategy<Value = Topology> {
    (4usize..10, 0usize..12, any::<u64>()).prop_map(|(n, extra, seed)| {
        let m = (n - 1 + extra).min(n * (n - 1) / 2);
        build_random(n, m, seed).unwrap()
    })
}

fn tree_topology() -> impl Strategy<Value = Topology> {
    (3usize..10, any::<u64>()).prop_map(|(n, seed)| build_random(n, n - 1, seed).unwrap())
}

fn raw_requests(max_copies: usize) -> impl Strategy<Value = Vec<RawRequest>> {
    prop::collection::vec((0.05f64..8.0, any::<u64>(), 1usize..=max_copies, 0u64..15), 1..20)
}

/// Requests ordered by arrival with ids in that order.
fn realize(t: &Topology, raw: &[RawRequest]) -> Vec<TransferRequest> {
    let n = t.node_count();
    let mut sorted = raw.to_vec();
    sorted.sort_by_key(|r| r.3);
    sorted
        .iter()
        .enumerate()
        .map(|(i, &(volume, pick, copies, arrival))| {
            let source = (pick % n as u64) as usize;
            let mut dests: Vec<usize> = (0..n).filter(|&v| v != source).collect();
            let shift = (pick / n as u64) as usize % dests.len();
            dests.rotate_left(shift);
            dests.truncate(copies.min(n - 1));
            TransferRequest::new(RequestId(i as u64), volume, source, dests, arrival).unwrap()
        })
        .collect()
}

fn by_slot(requests: &[TransferRequest], slot: Slot) -> Vec<TransferRequest> {
    requests.iter().filter(|r| r.arrival_slot == slot).cloned().collect()
}

fn next_arrival(requests: &[TransferRequest], slot: Slot) -> Option<Slot> {
    requests.iter().map(|r| r.arrival_slot).filter(|&a| a > slot).min()
}

fn assert_ledger(state: &LinkState) {
    for a in 0..state.arc_count() {
        let (l, r) = (state.load(ArcId(a)), state.recomputed_load(ArcId(a)));
        assert!((l - r).abs() <= 1e-9 * r.max(1.0), "arc {a}: ledger {l} vs residual map {r}");
    }
    assert!(state.min_residual() >= 0.0 && state.max_residual() <= state.capacity());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_scheme_passes_the_online_checks(t in topology(), raw in raw_requests(3), k in 1usize..4) {
        let requests = realize(&t, &raw);
        let config = SimConfig { k_paths: k, batch_window: 3, ledger_interval: 1, ..SimConfig::default() };
        for scheme in Scheme::ALL {
            let out = simulate(&t, &requests, scheme, &config);
            prop_assert!(out.is_ok(), "{scheme}: {:?}", out.err());
            let out = out.unwrap();
            let volume: f64 = requests.iter().map(|r| r.volume).sum();
            prop_assert!(out.report.total_bandwidth >= volume - 1e-9);
            prop_assert!(out.report.max_tct >= out.report.tail_tct && out.report.tail_tct >= out.report.mean_tct);
            prop_assert!(out.report.mean_tct > 0.0);
        }
    }

    #[test]
    fn fcfs_trees_keep_every_guarantee(t in topology(), raw in raw_requests(4), pick in 0usize..3) {
        let selection = [TreeSelection::Dccast, TreeSelection::MinMax, TreeSelection::Random { seed: 3 }][pick];
        let requests = realize(&t, &raw);
        let volumes: HashMap<RequestId, f64> = requests.iter().map(|r| (r.id, r.volume)).collect();
        let mut s = TreeFcfsScheduler::new(&t, 1.0, selection);
        let mut promised = HashMap::new();
        let mut identity = 0.0;
        let mut delivered: HashMap<RequestId, f64> = HashMap::new();
        let mut bandwidth = 0.0;
        let mut slot = 0;
        loop {
            if slot > 0 {
                let report = s.update(slot);
                let mut arc_rate = vec![0.0; t.arc_count()];
                let mut seen = std::collections::HashSet::new();
                for d in &report.dispatches {
                    prop_assert!(seen.insert(d.request), "one rate per request per slot");
                    for a in d.arcs.iter() {
                        arc_rate[a.0] += d.rate;
                    }
                    *delivered.entry(d.request).or_default() += d.rate;
                    bandwidth += d.rate * d.arcs.len() as f64;
                }
                for (a, &r) in arc_rate.iter().enumerate() {
                    prop_assert!(r <= t.capacity() + 1e-9, "arc {a} over capacity");
                    prop_assert!((report.sent[a] - r).abs() <= 1e-9);
                }
                for id in &report.completed {
                    prop_assert_eq!(promised[id], slot);
                    prop_assert!((delivered[id] - volumes[id]).abs() <= 1e-9 + 1e-12 * volumes[id]);
                }
            }
            for a in s.admit(slot, &by_slot(&requests, slot), next_arrival(&requests, slot)).unwrap() {
                promised.insert(a.request, a.promised.unwrap());
                identity += a.bandwidth.unwrap();
            }
            assert_ledger(s.link_state());
            if slot >= 15 && s.outstanding() == 0 {
                break;
            }
            slot += 1;
        }
        prop_assert_eq!(promised.len(), requests.len());
        prop_assert!((bandwidth - identity).abs() <= 1e-6);
    }

    #[test]
    fn allocation_is_work_conserving(
        t in topology(),
        bookings in prop::collection::vec((any::<usize>(), 1u64..12, 0.0f64..1.0), 0..60),
        volume in 0.1f64..10.0,
        pick in any::<u64>(),
    ) {
        let mut state = LinkState::new(&t, 1.0);
        for (a, slot, rate) in bookings {
            let arc = ArcId(a % t.arc_count());
            let r = rate.min(state.available(arc, slot));
            state.book(arc, slot, r);
        }
        let before = state.clone();
        let r = &realize(&t, &[(volume, pick, 2, 0)])[0];
        let s = allocate(&t, r, &mut state, TreeSelection::Dccast).unwrap();
        let arcs = s.tree.arcs();
        let mut remaining = volume;
        let mut rates = s.rates.iter().peekable();
        for slot in 1..=s.completion_slot {
            let b = before.bottleneck(arcs, slot);
            let want = b.min(remaining);
            match rates.peek() {
                Some(&&(ts, rate)) if ts == slot => {
                    prop_assert!((rate - want).abs() <= 1e-12, "slot {slot}: rate {rate} wanted {want}");
                    remaining -= rate;
                    rates.next();
                }
                _ => prop_assert_eq!(b, 0.0, "slot {} idle with bottleneck {}", slot, b),
            }
        }
        prop_assert!(remaining.abs() <= 1e-9);
        assert_ledger(&state);
    }

    #[test]
    fn srpt_reschedule_conserves_residuals(t in topology(), raw in raw_requests(3), cut in prop::collection::vec(0.05f64..1.0, 20)) {
        let requests = realize(&t, &raw);
        let jobs: Vec<(TransferRequest, f64)> =
            requests.iter().zip(&cut).map(|(r, &f)| (r.clone(), r.volume * f)).collect();
        let mut state = LinkState::new(&t, 1.0);
        let schedules = srpt_reschedule(&t, &jobs, &mut state).unwrap();
        for ((_, residual), s) in jobs.iter().zip(&schedules) {
            prop_assert!((s.volume(1.0) - residual).abs() <= 1e-9);
        }
        assert_ledger(&state);
    }

    #[test]
    fn truncated_p2p_srpt_dispatches_like_full_rescheduling(t in topology(), raw in raw_requests(3), k in 1usize..4) {
        let requests = realize(&t, &raw);
        let mut short = P2pScheduler::new(&t, 1.0, k, P2pDiscipline::Srpt);
        let mut full = P2pScheduler::new(&t, 1.0, k, P2pDiscipline::Srpt);
        let mut slot = 0;
        loop {
            if slot > 0 {
                let a = short.update(slot);
                let b = full.update(slot);
                prop_assert_eq!(&a.completed, &b.completed, "slot {}", slot);
                prop_assert_eq!(a.dispatches.len(), b.dispatches.len(), "slot {}", slot);
                for (x, y) in a.dispatches.iter().zip(&b.dispatches) {
                    prop_assert_eq!((x.request, x.copy, &x.arcs), (y.request, y.copy, &y.arcs));
                    prop_assert!((x.rate - y.rate).abs() <= 1e-12);
                }
            }
            let arrivals = by_slot(&requests, slot);
            short.admit(slot, &arrivals, next_arrival(&requests, slot)).unwrap();
            full.admit(slot, &arrivals, None).unwrap();
            assert_ledger(short.link_state());
            if slot >= 15 && short.outstanding() == 0 && full.outstanding() == 0 {
                break;
            }
            slot += 1;
        }
    }

    #[test]
    fn single_path_single_copy_matches_trees_on_tree_graphs(t in tree_topology(), raw in raw_requests(1)) {
        let requests = realize(&t, &raw);
        let config = SimConfig { k_paths: 1, ..SimConfig::default() };
        let a = simulate(&t, &requests, Scheme::Dccast, &config).unwrap();
        let b = simulate(&t, &requests, Scheme::P2pFcfs, &config).unwrap();
        prop_assert_eq!(a.completions, b.completions);
        prop_assert!((a.report.total_bandwidth - b.report.total_bandwidth).abs() <= 1e-6);
    }

    #[test]
    fn ledger_survives_random_bookings(ops in prop::collection::vec((0usize..38, 1u64..40, 0.0f64..1.2, any::<bool>()), 1..200)) {
        let t = dccast::build_gscale();
        let mut state = LinkState::new(&t, 2.0);
        for (a, offset, rate, advance) in ops {
            let slot = state.now() + offset;
            let arc = ArcId(a);
            state.book(arc, slot, rate.min(state.available(arc, slot)));
            if advance {
                let now = state.now() + 1;
                state.advance(now);
            }
            assert_ledger(&state);
        }
    }

    #[test]
    fn random_topologies_are_connected_and_simple(n in 2usize..30, extra in 0usize..40, seed in any::<u64>()) {
        let m = (n - 1 + extra).min(n * (n - 1) / 2);
        let t = build_random(n, m, seed).unwrap();
        prop_assert_eq!(t.node_count(), n);
        prop_assert_eq!(t.edge_count(), m);
        prop_assert_eq!(t.arc_count(), 2 * m);
        prop_assert!(t.to_raw().validate().is_empty());
        let mut uf = common::UnionFind::new(n);
        for (_, u, v) in t.edges() {
            uf.union(u, v);
        }
        let root = uf.find(0);
        prop_assert!((0..n).all(|v| uf.find(v) == root));
        prop_assert_eq!(build_random(n, m, seed).unwrap().to_raw(), t.to_raw());
        prop_assert_eq!(Topology::parse(&t.to_file_string()).unwrap().to_raw(), t.to_raw());
    }

    #[test]
    fn workload_csv_round_trips(t in topology(), raw in raw_requests(3)) {
        let requests = realize(&t, &raw);
        let mut buf = Vec::new();
        write_csv(&requests, &mut buf).unwrap();
        prop_assert_eq!(read_csv(&buf[..]).unwrap(), requests);
    }
}
