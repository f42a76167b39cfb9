//! The slotted-timeline scheduler.
//!
//! Each slot the driver first calls [`Scheduler::update`] to dispatch that
//! slot's rates, then [`Scheduler::admit`] with the requests arriving in it.
//! Admitted requests are booked from the next slot on.

mod allocate;
mod batching;
mod fcfs;
mod srpt;
pub mod state;

use std::rc::Rc;

pub use allocate::{
    allocate, allocate_volume, load_weights, select_tree, water_fill, TransmissionSchedule, TreeSelection,
};
pub use batching::BatchingScheduler;
pub use fcfs::TreeFcfsScheduler;
pub use srpt::{srpt_order, srpt_reschedule, SrptTreeScheduler};
pub use state::{LinkState, Slot, RATE_EPS, VOLUME_EPS};

use crate::steiner::SteinerError;
use crate::topology::{ArcId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RequestId(pub u64);

impl std::fmt::Display for RequestId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchedulerError {
    #[error("request {0}: volume must be finite and above {VOLUME_EPS}")]
    BadVolume(RequestId),
    #[error("request {0}: no destinations")]
    NoDestinations(RequestId),
    #[error("request {0}: source is also a destination")]
    SourceIsDestination(RequestId),
    #[error("request {id}: arrives at slot {arrival} but was admitted at slot {now}")]
    NotArrived { id: RequestId, arrival: Slot, now: Slot },
    #[error("tree selection failed: {0}")]
    Steiner(#[from] SteinerError),
}

/// A point-to-multipoint transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRequest {
    pub id: RequestId,
    pub volume: f64,
    pub source: NodeId,
    /// Sorted, distinct.
    pub destinations: Vec<NodeId>,
    pub arrival_slot: Slot,
}

impl TransferRequest {
    pub fn new(
        id: RequestId,
        volume: f64,
        source: NodeId,
        mut destinations: Vec<NodeId>,
        arrival_slot: Slot,
    ) -> Result<Self, SchedulerError> {
        destinations.sort_unstable();
        destinations.dedup();
        let r = Self { id, volume, source, destinations, arrival_slot };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), SchedulerError> {
        if !(self.volume.is_finite() && self.volume > VOLUME_EPS) {
            return Err(SchedulerError::BadVolume(self.id));
        }
        if self.destinations.is_empty() {
            return Err(SchedulerError::NoDestinations(self.id));
        }
        if self.destinations.contains(&self.source) {
            return Err(SchedulerError::SourceIsDestination(self.id));
        }
        Ok(())
    }
}

/// Rate order for one slot. Tree schemes send one copy (`copy == 0`) over
/// the tree; point-to-point schemes emit one order per destination copy and
/// path.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub request: RequestId,
    pub copy: usize,
    pub rate: f64,
    /// Arcs carrying this rate.
    pub arcs: Rc<[ArcId]>,
}

#[derive(Debug, Clone, Default)]
pub struct SlotReport {
    pub slot: Slot,
    pub dispatches: Vec<Dispatch>,
    /// Requests whose last bit was delivered in this slot.
    pub completed: Vec<RequestId>,
    /// Volume carried by each arc in this slot, read from the residual map.
    pub sent: Vec<f64>,
}

/// Outcome of admitting one request.
#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    pub request: RequestId,
    /// Completion slot guaranteed at admission, for non-preemptive schemes.
    pub promised: Option<Slot>,
    /// Bandwidth the request will consume in total, when fixed at admission.
    pub bandwidth: Option<f64>,
}

pub trait Scheduler {
    /// Dispatches slot `now` and removes it from the timeline.
    fn update(&mut self, now: Slot) -> SlotReport;

    /// Admits the requests arriving at `now` (possibly none).
    ///
    /// `next_arrival` is the next slot at which a request will arrive, if
    /// any. Schemes that recompute all schedules on arrival may use it to
    /// avoid booking slots that the next recomputation overwrites.
    fn admit(
        &mut self,
        now: Slot,
        arrivals: &[TransferRequest],
        next_arrival: Option<Slot>,
    ) -> Result<Vec<Admission>, SchedulerError>;

    /// Requests admitted or queued but not yet complete.
    fn outstanding(&self) -> usize;

    fn link_state(&self) -> &LinkState;
}

/// A request whose tree schedule is being dispatched.
#[derive(Debug)]
pub(crate) struct ActiveTree {
    pub request: TransferRequest,
    pub schedule: TransmissionSchedule,
    pub arcs: Rc<[ArcId]>,
    pub cursor: usize,
    pub delivered: f64,
}

impl ActiveTree {
    pub fn new(request: TransferRequest, schedule: TransmissionSchedule) -> Self {
        let arcs: Rc<[ArcId]> = schedule.tree.arcs().into();
        Self { request, schedule, arcs, cursor: 0, delivered: 0.0 }
    }

    pub fn replace(&mut self, schedule: TransmissionSchedule) {
        self.arcs = schedule.tree.arcs().into();
        self.schedule = schedule;
        self.cursor = 0;
    }

    pub fn residual_volume(&self) -> f64 {
        (self.request.volume - self.delivered).max(0.0)
    }
}

/// Emits this slot's orders for every active tree schedule and drops
/// finished ones.
pub(crate) fn dispatch_trees(active: &mut Vec<ActiveTree>, state: &mut LinkState, now: Slot) -> SlotReport {
    let width = state.slot_width();
    let mut report = SlotReport { slot: now, ..SlotReport::default() };
    for a in active.iter_mut() {
        if let Some(&(slot, rate)) = a.schedule.rates.get(a.cursor) {
            debug_assert!(slot >= now, "schedule of request {} has a stale slot", a.request.id);
            if slot == now {
                a.cursor += 1;
                a.delivered += rate * width;
                report.dispatches.push(Dispatch { request: a.request.id, copy: 0, rate, arcs: a.arcs.clone() });
            }
        }
    }
    active.retain(|a| {
        let done = a.cursor == a.schedule.rates.len();
        if done {
            report.completed.push(a.request.id);
        }
        !done
    });
    report.sent = state.advance(now);
    report
}

pub(crate) fn check_admission(now: Slot, request: &TransferRequest) -> Result<(), SchedulerError> {
    request.validate()?;
    if request.arrival_slot > now {
        return Err(SchedulerError::NotArrived { id: request.id, arrival: request.arrival_slot, now });
    }
    Ok(())
}
