//! First-come-first-serve tree scheduling (DCCAST, MINMAX, RANDOM).

use crate::scheduler::{
    allocate, check_admission, dispatch_trees, ActiveTree, Admission, LinkState, Scheduler, SchedulerError, Slot,
    SlotReport, TransferRequest, TreeSelection,
};
use crate::topology::Topology;

/// Allocates every request on arrival and never revisits it.
#[derive(Debug)]
pub struct TreeFcfsScheduler<'a> {
    topology: &'a Topology,
    selection: TreeSelection,
    state: LinkState,
    active: Vec<ActiveTree>,
}

impl<'a> TreeFcfsScheduler<'a> {
    pub fn new(topology: &'a Topology, slot_width: f64, selection: TreeSelection) -> Self {
        Self { topology, selection, state: LinkState::new(topology, slot_width), active: Vec::new() }
    }
}

impl Scheduler for TreeFcfsScheduler<'_> {
    fn update(&mut self, now: Slot) -> SlotReport {
        dispatch_trees(&mut self.active, &mut self.state, now)
    }

    fn admit(
        &mut self,
        now: Slot,
        arrivals: &[TransferRequest],
        _next_arrival: Option<Slot>,
    ) -> Result<Vec<Admission>, SchedulerError> {
        let mut out = Vec::with_capacity(arrivals.len());
        for request in arrivals {
            check_admission(now, request)?;
            let schedule = allocate(self.topology, request, &mut self.state, self.selection)?;
            out.push(Admission {
                request: request.id,
                promised: Some(schedule.completion_slot),
                bandwidth: Some(request.volume * schedule.tree.edge_count() as f64),
            });
            self.active.push(ActiveTree::new(request.clone(), schedule));
        }
        Ok(out)
    }

    fn outstanding(&self) -> usize {
        self.active.len()
    }

    fn link_state(&self) -> &LinkState {
        &self.state
    }
}
