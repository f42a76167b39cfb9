//! Point-to-point baselines: every destination of a request is served by an
//! independent unicast transfer spread over its K shortest paths.

pub mod lp;
mod paths;

use std::collections::HashMap;
use std::rc::Rc;

pub use lp::{max_path_packing, PathGroups};
pub use paths::{k_shortest_paths, Path};

use crate::scheduler::{
    check_admission, Admission, Dispatch, LinkState, RequestId, Scheduler, SchedulerError, Slot, SlotReport,
    TransferRequest, VOLUME_EPS,
};
use crate::topology::{ArcId, NodeId, Topology};

/// One destination copy of a point-to-multipoint request.
#[derive(Debug, Clone)]
pub struct UnicastTransfer {
    pub parent: RequestId,
    pub copy: usize,
    pub volume: f64,
    pub source: NodeId,
    pub destination: NodeId,
    pub arrival_slot: Slot,
    pub paths: Vec<Path>,
    arcs: Vec<Rc<[ArcId]>>,
    groups: PathGroups,
}

impl UnicastTransfer {
    pub fn new(topology: &Topology, request: &TransferRequest, copy: usize, k: usize) -> Self {
        let destination = request.destinations[copy];
        let paths = k_shortest_paths(topology, request.source, destination, k);
        assert!(!paths.is_empty(), "no path from {} to {destination}", request.source);
        let arcs: Vec<Rc<[ArcId]>> =
            paths.iter().map(|p| p.arcs(topology).expect("paths follow edges").into()).collect();
        let plain: Vec<Vec<ArcId>> = arcs.iter().map(|a| a.to_vec()).collect();
        Self {
            parent: request.id,
            copy,
            volume: request.volume,
            source: request.source,
            destination,
            arrival_slot: request.arrival_slot,
            paths,
            groups: PathGroups::new(&plain),
            arcs,
        }
    }

    pub fn path_arcs(&self, path: usize) -> &[ArcId] {
        &self.arcs[path]
    }
}

/// Splits a request into one unicast transfer per destination.
pub fn split_request(topology: &Topology, request: &TransferRequest, k: usize) -> Vec<UnicastTransfer> {
    (0..request.destinations.len()).map(|c| UnicastTransfer::new(topology, request, c, k)).collect()
}

/// Per-slot, per-path rates of one unicast transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathSchedule {
    pub parent: RequestId,
    pub copy: usize,
    /// `(slot, rate on each path)`, ascending slots.
    pub slots: Vec<(Slot, Vec<f64>)>,
    /// `None` when booking stopped at a horizon before the volume was placed.
    pub completion_slot: Option<Slot>,
}

impl MultipathSchedule {
    pub fn volume(&self, slot_width: f64) -> f64 {
        self.slots.iter().flat_map(|(_, r)| r.iter()).map(|r| r * slot_width).sum()
    }

    /// `Σ_p volume on p × hops of p`.
    pub fn bandwidth(&self, transfer: &UnicastTransfer, slot_width: f64) -> f64 {
        self.slots
            .iter()
            .flat_map(|(_, r)| r.iter().enumerate())
            .map(|(p, r)| r * slot_width * transfer.paths[p].hops() as f64)
            .sum()
    }
}

/// Earliest-finish schedule for `volume` of `transfer`: every slot routes the
/// most volume its paths can carry given existing bookings.
pub fn p2p_allocate(
    transfer: &UnicastTransfer,
    volume: f64,
    state: &mut LinkState,
    until: Option<Slot>,
) -> MultipathSchedule {
    let width = state.slot_width();
    let k = transfer.paths.len();
    let mut remaining = volume;
    let mut slots = Vec::new();
    let mut slot = state.now() + 1;
    let mut truncated = false;
    while remaining > VOLUME_EPS {
        slot = (0..k).map(|p| state.first_open_all(&transfer.arcs[p], slot)).min().expect("at least one path");
        if until.is_some_and(|u| slot >= u) {
            truncated = true;
            break;
        }
        let mut x = max_path_packing(k, &transfer.groups.capacities(state, slot));
        let total: f64 = x.iter().sum();
        if total <= 0.0 {
            slot += 1;
            continue;
        }
        if total * width > remaining {
            let f = remaining / (total * width);
            x.iter_mut().for_each(|v| *v *= f);
        }
        for (p, &rate) in x.iter().enumerate() {
            for &a in transfer.arcs[p].iter() {
                state.book(a, slot, rate);
            }
        }
        remaining -= x.iter().sum::<f64>() * width;
        slots.push((slot, x));
        slot += 1;
    }
    let completion_slot = if truncated { None } else { Some(slots.last().map_or(state.now(), |s| s.0)) };
    MultipathSchedule { parent: transfer.parent, copy: transfer.copy, slots, completion_slot }
}

/// Drops all future bookings and reallocates every `(transfer, residual)`
/// in order of residual volume (ties by arrival, parent id, copy).
///
/// Returns one schedule per input, in input order.
pub fn p2p_srpt_reschedule(
    active: &[(&UnicastTransfer, f64)],
    state: &mut LinkState,
    until: Option<Slot>,
) -> Vec<MultipathSchedule> {
    state.clear_future();
    let mut order: Vec<usize> = (0..active.len()).collect();
    order.sort_by(|&a, &b| {
        let (ta, ra) = active[a];
        let (tb, rb) = active[b];
        ra.total_cmp(&rb)
            .then(ta.arrival_slot.cmp(&tb.arrival_slot))
            .then(ta.parent.cmp(&tb.parent))
            .then(ta.copy.cmp(&tb.copy))
    });
    let mut out: Vec<Option<MultipathSchedule>> = vec![None; active.len()];
    for i in order {
        let (t, residual) = active[i];
        out[i] = Some(p2p_allocate(t, residual, state, until));
    }
    out.into_iter().map(|s| s.expect("every index is scheduled")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P2pDiscipline {
    Fcfs,
    Srpt,
}

#[derive(Debug)]
struct ActiveUnicast {
    transfer: UnicastTransfer,
    schedule: MultipathSchedule,
    cursor: usize,
    delivered: f64,
}

/// Point-to-point scheduler over K shortest paths.
#[derive(Debug)]
pub struct P2pScheduler<'a> {
    topology: &'a Topology,
    k: usize,
    discipline: P2pDiscipline,
    state: LinkState,
    active: Vec<ActiveUnicast>,
    copies_left: HashMap<RequestId, usize>,
}

impl<'a> P2pScheduler<'a> {
    pub fn new(topology: &'a Topology, slot_width: f64, k: usize, discipline: P2pDiscipline) -> Self {
        assert!(k >= 1, "K must be at least 1");
        Self {
            topology,
            k,
            discipline,
            state: LinkState::new(topology, slot_width),
            active: Vec::new(),
            copies_left: HashMap::new(),
        }
    }
}

impl Scheduler for P2pScheduler<'_> {
    fn update(&mut self, now: Slot) -> SlotReport {
        let width = self.state.slot_width();
        let mut report = SlotReport { slot: now, ..SlotReport::default() };
        for a in &mut self.active {
            let Some((slot, rates)) = a.schedule.slots.get(a.cursor) else { continue };
            if *slot != now {
                continue;
            }
            for (p, &rate) in rates.iter().enumerate() {
                if rate > 0.0 {
                    a.delivered += rate * width;
                    report.dispatches.push(Dispatch {
                        request: a.transfer.parent,
                        copy: a.transfer.copy,
                        rate,
                        arcs: a.transfer.arcs[p].clone(),
                    });
                }
            }
            a.cursor += 1;
        }
        let copies_left = &mut self.copies_left;
        self.active.retain(|a| {
            let done = a.schedule.completion_slot.is_some() && a.cursor == a.schedule.slots.len();
            if done {
                let left = copies_left.get_mut(&a.transfer.parent).expect("parent is tracked");
                *left -= 1;
                if *left == 0 {
                    copies_left.remove(&a.transfer.parent);
                    report.completed.push(a.transfer.parent);
                }
            }
            !done
        });
        report.sent = self.state.advance(now);
        report
    }

    fn admit(
        &mut self,
        now: Slot,
        arrivals: &[TransferRequest],
        next_arrival: Option<Slot>,
    ) -> Result<Vec<Admission>, SchedulerError> {
        if arrivals.is_empty() {
            return Ok(Vec::new());
        }
        for r in arrivals {
            check_admission(now, r)?;
        }
        let width = self.state.slot_width();
        match self.discipline {
            P2pDiscipline::Fcfs => {
                let mut out = Vec::with_capacity(arrivals.len());
                for r in arrivals {
                    let mut promised = now;
                    let mut bandwidth = 0.0;
                    for transfer in split_request(self.topology, r, self.k) {
                        let schedule = p2p_allocate(&transfer, transfer.volume, &mut self.state, None);
                        promised = promised.max(schedule.completion_slot.expect("unbounded allocation completes"));
                        bandwidth += schedule.bandwidth(&transfer, width);
                        self.active.push(ActiveUnicast { transfer, schedule, cursor: 0, delivered: 0.0 });
                    }
                    self.copies_left.insert(r.id, r.destinations.len());
                    out.push(Admission { request: r.id, promised: Some(promised), bandwidth: Some(bandwidth) });
                }
                Ok(out)
            }
            P2pDiscipline::Srpt => {
                for r in arrivals {
                    for transfer in split_request(self.topology, r, self.k) {
                        let schedule = MultipathSchedule {
                            parent: r.id,
                            copy: transfer.copy,
                            slots: Vec::new(),
                            completion_slot: None,
                        };
                        self.active.push(ActiveUnicast { transfer, schedule, cursor: 0, delivered: 0.0 });
                    }
                    self.copies_left.insert(r.id, r.destinations.len());
                }
                // Bookings after the next arrival's slot are recomputed then.
                let until = next_arrival.map(|t| t + 1);
                let jobs: Vec<(&UnicastTransfer, f64)> =
                    self.active.iter().map(|a| (&a.transfer, (a.transfer.volume - a.delivered).max(0.0))).collect();
                let schedules = p2p_srpt_reschedule(&jobs, &mut self.state, until);
                for (a, s) in self.active.iter_mut().zip(schedules) {
                    a.schedule = s;
                    a.cursor = 0;
                }
                Ok(arrivals.iter().map(|r| Admission { request: r.id, promised: None, bandwidth: None }).collect())
            }
        }
    }

    fn outstanding(&self) -> usize {
        self.copies_left.len()
    }

    fn link_state(&self) -> &LinkState {
        &self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::{allocate, TreeSelection};
    use crate::topology::RawTopology;

    fn req(id: u64, volume: f64, source: NodeId, dests: &[NodeId], arrival: Slot) -> TransferRequest {
        TransferRequest::new(RequestId(id), volume, source, dests.to_vec(), arrival).unwrap()
    }

    #[test]
    fn single_path_matches_tree_water_filling() {
        let t = crate::topology::build_gscale();
        let r = req(1, 5.5, 0, &[5], 0);
        let mut a = LinkState::new(&t, 1.0);
        let mut b = LinkState::new(&t, 1.0);
        let tree = allocate(&t, &r, &mut a, TreeSelection::Dccast).unwrap();
        let transfer = UnicastTransfer::new(&t, &r, 0, 1);
        let multi = p2p_allocate(&transfer, r.volume, &mut b, None);
        assert_eq!(multi.completion_slot, Some(tree.completion_slot));
        let rates: Vec<(Slot, f64)> = multi.slots.iter().map(|(s, x)| (*s, x[0])).collect();
        assert_eq!(rates, tree.rates);
    }

    #[test]
    fn single_path_fills_around_existing_bookings() {
        let t = crate::topology::build_gscale();
        let r = req(1, 5.5, 0, &[5], 0);
        let transfer = UnicastTransfer::new(&t, &r, 0, 1);
        let mut a = LinkState::new(&t, 1.0);
        for slot in [1, 2, 4] {
            a.book(transfer.path_arcs(0)[0], slot, 0.75);
        }
        let mut b = a.clone();
        let multi = p2p_allocate(&transfer, r.volume, &mut a, None);
        let (rates, rest) = crate::scheduler::water_fill(&mut b, transfer.path_arcs(0), r.volume, None);
        assert_eq!(rest, 0.0);
        assert_eq!(multi.slots.iter().map(|(s, x)| (*s, x[0])).collect::<Vec<_>>(), rates);
    }

    #[test]
    fn two_disjoint_paths_double_the_rate() {
        let t = Topology::new(RawTopology::new(4, vec![(0, 1), (1, 3), (0, 2), (2, 3)])).unwrap();
        let mut s = LinkState::new(&t, 1.0);
        let r = req(0, 4.0, 0, &[3], 0);
        let transfer = UnicastTransfer::new(&t, &r, 0, 2);
        let sched = p2p_allocate(&transfer, 4.0, &mut s, None);
        assert_eq!(sched.slots, vec![(1, vec![1.0, 1.0]), (2, vec![1.0, 1.0])]);
        assert_eq!(sched.completion_slot, Some(2));
        assert_eq!(sched.bandwidth(&transfer, 1.0), 8.0);
    }

    #[test]
    fn copies_sharing_the_source_link_cost_more_than_a_tree() {
        let t = Topology::new(RawTopology::new(4, vec![(0, 1), (1, 2), (1, 3)])).unwrap();
        let r = req(0, 4.0, 0, &[2, 3], 0);
        let mut s = LinkState::new(&t, 1.0);
        let mut p2p_bw = 0.0;
        for transfer in split_request(&t, &r, 3) {
            let sched = p2p_allocate(&transfer, transfer.volume, &mut s, None);
            p2p_bw += sched.bandwidth(&transfer, 1.0);
        }
        assert_eq!(p2p_bw, 2.0 * 2.0 * 4.0);
        let mut s = LinkState::new(&t, 1.0);
        let tree = allocate(&t, &r, &mut s, TreeSelection::Dccast).unwrap();
        assert!(p2p_bw > r.volume * tree.tree.edge_count() as f64);
    }

    #[test]
    fn srpt_reschedule_lets_small_copy_finish_first() {
        let t = Topology::new(RawTopology::new(3, vec![(0, 1), (1, 2)])).unwrap();
        let mut s = LinkState::new(&t, 1.0);
        let big = UnicastTransfer::new(&t, &req(0, 10.0, 0, &[2], 0), 0, 2);
        let small = UnicastTransfer::new(&t, &req(1, 2.0, 0, &[1], 3), 0, 2);
        let out = p2p_srpt_reschedule(&[(&big, 8.0), (&small, 2.0)], &mut s, None);
        assert_eq!(out[1].completion_slot, Some(2));
        assert_eq!(out[0].completion_slot, Some(10));
        assert!((out[0].volume(1.0) - 8.0).abs() < 1e-12);
        assert!((out[1].volume(1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn horizon_truncates_without_completion() {
        let t = Topology::new(RawTopology::new(3, vec![(0, 1), (1, 2)])).unwrap();
        let mut s = LinkState::new(&t, 1.0);
        let tr = UnicastTransfer::new(&t, &req(0, 10.0, 0, &[2], 0), 0, 1);
        let sched = p2p_allocate(&tr, 10.0, &mut s, Some(4));
        assert_eq!(sched.slots.len(), 3);
        assert_eq!(sched.completion_slot, None);
    }
}
