//! Tree selection and earliest-finish allocation of a single request.

use crate::scheduler::state::{LinkState, Slot, VOLUME_EPS};
use crate::scheduler::{RequestId, SchedulerError, TransferRequest};
use crate::steiner::{self, ForwardingTree, WeightedView};
use crate::topology::{ArcId, NodeId, Topology};

/// How the forwarding tree of a new request is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeSelection {
    /// Minimum-weight Steiner tree under `W_e = L_e + V_R`.
    Dccast,
    /// Minimum bottleneck of `L_e + V_R`, then minimum total weight.
    MinMax,
    /// Minimum-weight Steiner tree under random weights, reseeded per request.
    Random { seed: u64 },
}

/// A tree plus per-slot rates delivering the full volume to every destination.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSchedule {
    pub request: RequestId,
    pub tree: ForwardingTree,
    /// `(slot, rate)` in ascending slot order; every rate is positive.
    pub rates: Vec<(Slot, f64)>,
    pub completion_slot: Slot,
}

impl TransmissionSchedule {
    pub fn volume(&self, slot_width: f64) -> f64 {
        self.rates.iter().map(|&(_, r)| r * slot_width).sum()
    }

    pub fn rate_at(&self, slot: Slot) -> f64 {
        self.rates
            .binary_search_by_key(&slot, |&(s, _)| s)
            .map(|i| self.rates[i].1)
            .unwrap_or(0.0)
    }
}

/// Edge weights `L_e + extra`, where the load of an undirected edge is the
/// larger of its two arc ledgers.
pub fn load_weights(topology: &Topology, state: &LinkState, extra: f64) -> Vec<f64> {
    topology
        .edges()
        .map(|(e, u, v)| {
            let fwd = state.load(topology.arc_from(e, u));
            let back = state.load(topology.arc_from(e, v));
            fwd.max(back).max(0.0) + extra
        })
        .collect()
}

/// Per-request seed for [`TreeSelection::Random`].
pub(crate) fn request_seed(seed: u64, request: RequestId) -> u64 {
    seed ^ request.0.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn select_tree(
    topology: &Topology,
    state: &LinkState,
    request: RequestId,
    source: NodeId,
    destinations: &[NodeId],
    volume: f64,
    selection: TreeSelection,
) -> Result<ForwardingTree, SchedulerError> {
    let tree = match selection {
        TreeSelection::Dccast => {
            let view = WeightedView::new(topology, load_weights(topology, state, volume))?;
            steiner::min_weight_steiner_tree(&view, source, destinations)?
        }
        TreeSelection::MinMax => {
            let view = WeightedView::new(topology, load_weights(topology, state, volume))?;
            steiner::bottleneck_steiner_tree(&view, source, destinations)?
        }
        TreeSelection::Random { seed } => {
            steiner::random_tree(topology, source, destinations, request_seed(seed, request))?
        }
    };
    Ok(tree)
}

/// Books `volume` on `arcs` as early as possible starting after `state.now()`,
/// using the same rate on every arc in each slot.
///
/// Slots at or past `until` are left untouched; the returned remainder is the
/// volume that did not fit before it.
pub fn water_fill(state: &mut LinkState, arcs: &[ArcId], volume: f64, until: Option<Slot>) -> (Vec<(Slot, f64)>, f64) {
    let width = state.slot_width();
    let mut remaining = volume;
    let mut rates = Vec::new();
    let mut slot = state.now() + 1;
    while remaining > VOLUME_EPS {
        slot = state.first_open_all(arcs, slot);
        if until.is_some_and(|u| slot >= u) {
            break;
        }
        let bottleneck = state.bottleneck(arcs, slot);
        let rate = bottleneck.min(remaining / width);
        for &a in arcs {
            state.book(a, slot, rate);
        }
        rates.push((slot, rate));
        remaining -= rate * width;
        slot += 1;
    }
    (rates, remaining.max(0.0))
}

/// Picks a tree for `request` and schedules it to finish as early as
/// possible without touching existing bookings.
pub fn allocate(
    topology: &Topology,
    request: &TransferRequest,
    state: &mut LinkState,
    selection: TreeSelection,
) -> Result<TransmissionSchedule, SchedulerError> {
    allocate_volume(topology, request, request.volume, state, selection)
}

/// [`allocate`] for the undelivered part `volume` of a request.
pub fn allocate_volume(
    topology: &Topology,
    request: &TransferRequest,
    volume: f64,
    state: &mut LinkState,
    selection: TreeSelection,
) -> Result<TransmissionSchedule, SchedulerError> {
    let tree = select_tree(topology, state, request.id, request.source, &request.destinations, volume, selection)?;
    let (rates, _) = water_fill(state, tree.arcs(), volume, None);
    let completion_slot = rates.last().map_or(state.now(), |&(s, _)| s);
    Ok(TransmissionSchedule { request: request.id, tree, rates, completion_slot })
}
