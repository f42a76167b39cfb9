//! Preemptive shortest-remaining-processing-time scheduling over trees.

use std::cmp::Ordering;

use crate::scheduler::{
    allocate_volume, check_admission, dispatch_trees, ActiveTree, Admission, LinkState, RequestId, Scheduler,
    SchedulerError, Slot, SlotReport, TransferRequest, TransmissionSchedule, TreeSelection,
};
use crate::topology::Topology;

/// Indices of `items` sorted by `(residual, arrival, id)` ascending.
pub fn srpt_order<T>(items: &[T], key: impl Fn(&T) -> (f64, Slot, RequestId)) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, ta, ia) = key(&items[a]);
        let (rb, tb, ib) = key(&items[b]);
        ra.total_cmp(&rb).then(ta.cmp(&tb)).then(ia.cmp(&ib)).then(Ordering::Equal)
    });
    idx
}

/// Drops all future bookings and reallocates every `(request, residual)` in
/// SRPT order, picking fresh trees under load-plus-residual weights.
///
/// Returns one schedule per input, in input order.
pub fn srpt_reschedule(
    topology: &Topology,
    active: &[(TransferRequest, f64)],
    state: &mut LinkState,
) -> Result<Vec<TransmissionSchedule>, SchedulerError> {
    state.clear_future();
    let order = srpt_order(active, |(r, residual)| (*residual, r.arrival_slot, r.id));
    let mut out: Vec<Option<TransmissionSchedule>> = vec![None; active.len()];
    for i in order {
        let (request, residual) = &active[i];
        out[i] = Some(allocate_volume(topology, request, *residual, state, TreeSelection::Dccast)?);
    }
    Ok(out.into_iter().map(|s| s.expect("every index is scheduled")).collect())
}

/// Reschedules every unfinished request whenever a new one arrives.
#[derive(Debug)]
pub struct SrptTreeScheduler<'a> {
    topology: &'a Topology,
    state: LinkState,
    active: Vec<ActiveTree>,
}

impl<'a> SrptTreeScheduler<'a> {
    pub fn new(topology: &'a Topology, slot_width: f64) -> Self {
        Self { topology, state: LinkState::new(topology, slot_width), active: Vec::new() }
    }
}

impl Scheduler for SrptTreeScheduler<'_> {
    fn update(&mut self, now: Slot) -> SlotReport {
        dispatch_trees(&mut self.active, &mut self.state, now)
    }

    fn admit(
        &mut self,
        now: Slot,
        arrivals: &[TransferRequest],
        _next_arrival: Option<Slot>,
    ) -> Result<Vec<Admission>, SchedulerError> {
        if arrivals.is_empty() {
            return Ok(Vec::new());
        }
        for request in arrivals {
            check_admission(now, request)?;
        }
        let mut jobs: Vec<(TransferRequest, f64)> =
            self.active.iter().map(|a| (a.request.clone(), a.residual_volume())).collect();
        jobs.extend(arrivals.iter().map(|r| (r.clone(), r.volume)));
        let schedules = srpt_reschedule(self.topology, &jobs, &mut self.state)?;
        let mut schedules = schedules.into_iter();
        for (a, s) in self.active.iter_mut().zip(schedules.by_ref()) {
            a.replace(s);
        }
        for (r, s) in arrivals.iter().zip(schedules) {
            self.active.push(ActiveTree::new(r.clone(), s));
        }
        Ok(arrivals.iter().map(|r| Admission { request: r.id, promised: None, bandwidth: None }).collect())
    }

    fn outstanding(&self) -> usize {
        self.active.len()
    }

    fn link_state(&self) -> &LinkState {
        &self.state
    }
}
