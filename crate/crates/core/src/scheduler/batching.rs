//! Windowed batching with shortest-job-first order inside each batch.

use crate::scheduler::{
    allocate, check_admission, dispatch_trees, ActiveTree, Admission, LinkState, Scheduler, SchedulerError, Slot,
    SlotReport, TransferRequest, TreeSelection,
};
use crate::topology::Topology;

/// Queues arrivals and allocates them at every multiple of `window`.
#[derive(Debug)]
pub struct BatchingScheduler<'a> {
    topology: &'a Topology,
    window: Slot,
    state: LinkState,
    pending: Vec<TransferRequest>,
    active: Vec<ActiveTree>,
}

impl<'a> BatchingScheduler<'a> {
    pub fn new(topology: &'a Topology, slot_width: f64, window: Slot) -> Self {
        assert!(window >= 1, "batch window must be at least one slot");
        Self { topology, window, state: LinkState::new(topology, slot_width), pending: Vec::new(), active: Vec::new() }
    }

    /// Allocates a batch in shortest-job-first order (ties by arrival, then id)
    /// under load-plus-volume weights, leaving earlier bookings untouched.
    pub fn batch_schedule(&mut self, mut batch: Vec<TransferRequest>) -> Result<Vec<Admission>, SchedulerError> {
        batch.sort_by(|a, b| {
            a.volume.total_cmp(&b.volume).then(a.arrival_slot.cmp(&b.arrival_slot)).then(a.id.cmp(&b.id))
        });
        let mut out = Vec::with_capacity(batch.len());
        for request in batch {
            let schedule = allocate(self.topology, &request, &mut self.state, TreeSelection::Dccast)?;
            out.push(Admission {
                request: request.id,
                promised: Some(schedule.completion_slot),
                bandwidth: Some(request.volume * schedule.tree.edge_count() as f64),
            });
            self.active.push(ActiveTree::new(request, schedule));
        }
        Ok(out)
    }
}

impl Scheduler for BatchingScheduler<'_> {
    fn update(&mut self, now: Slot) -> SlotReport {
        dispatch_trees(&mut self.active, &mut self.state, now)
    }

    fn admit(
        &mut self,
        now: Slot,
        arrivals: &[TransferRequest],
        _next_arrival: Option<Slot>,
    ) -> Result<Vec<Admission>, SchedulerError> {
        for request in arrivals {
            check_admission(now, request)?;
            self.pending.push(request.clone());
        }
        if !now.is_multiple_of(self.window) || self.pending.is_empty() {
            return Ok(Vec::new());
        }
        let batch = std::mem::take(&mut self.pending);
        self.batch_schedule(batch)
    }

    fn outstanding(&self) -> usize {
        self.active.len() + self.pending.len()
    }

    fn link_state(&self) -> &LinkState {
        &self.state
    }
}
