//! Per-arc residual bandwidth over future slots and the scheduled-load ledger.

use std::collections::VecDeque;

use crate::topology::{ArcId, Topology};

/// Timeslot index. Slot 0 is the initial instant; the first dispatched slot is 1.
pub type Slot = u64;

/// Residual rates below this are treated as exhausted.
pub const RATE_EPS: f64 = 1e-9;

/// A request is complete once its undelivered volume drops to this.
pub const VOLUME_EPS: f64 = 1e-9;

/// Future bookings of every arc.
///
/// Residuals are rates in volume-units per second; a slot carries
/// `rate * slot_width` volume. Slots past the stored horizon are unbooked.
#[derive(Debug, Clone)]
pub struct LinkState {
    capacity: f64,
    slot_width: f64,
    now: Slot,
    /// `residual[a][i]` is the residual rate of arc `a` in slot `now + 1 + i`.
    residual: Vec<VecDeque<f64>>,
    /// Union-find over slots: `next_open[a][i]` points at a slot at or after
    /// `now + 1 + i` and at or before the first slot with residual left.
    next_open: Vec<VecDeque<Slot>>,
    /// `L_e`: volume booked on each arc over all future slots.
    load: Vec<f64>,
}

impl LinkState {
    pub fn new(topology: &Topology, slot_width: f64) -> Self {
        assert!(slot_width.is_finite() && slot_width > 0.0, "slot width must be positive");
        let arcs = topology.arc_count();
        Self {
            capacity: topology.capacity(),
            slot_width,
            now: 0,
            residual: vec![VecDeque::new(); arcs],
            next_open: vec![VecDeque::new(); arcs],
            load: vec![0.0; arcs],
        }
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn slot_width(&self) -> f64 {
        self.slot_width
    }

    /// Last dispatched slot.
    pub fn now(&self) -> Slot {
        self.now
    }

    pub fn arc_count(&self) -> usize {
        self.load.len()
    }

    /// One past the last slot with any stored booking.
    pub fn horizon(&self) -> Slot {
        self.now + 1 + self.residual.iter().map(VecDeque::len).max().unwrap_or(0) as Slot
    }

    pub fn load(&self, arc: ArcId) -> f64 {
        self.load[arc.0]
    }

    /// Raw residual rate `B_e(t)` for `t > now`.
    pub fn residual(&self, arc: ArcId, slot: Slot) -> f64 {
        debug_assert!(slot > self.now, "slot {slot} is not in the future (now = {})", self.now);
        let i = (slot - self.now - 1) as usize;
        self.residual[arc.0].get(i).copied().unwrap_or(self.capacity)
    }

    /// Residual rate usable for new bookings.
    pub fn available(&self, arc: ArcId, slot: Slot) -> f64 {
        let r = self.residual(arc, slot);
        if r < RATE_EPS {
            0.0
        } else {
            r
        }
    }

    /// Books `rate` on `arc` in `slot`.
    ///
    /// Panics if the booking would take the residual meaningfully below zero.
    pub fn book(&mut self, arc: ArcId, slot: Slot, rate: f64) {
        assert!(slot > self.now, "cannot book past slot {slot} (now = {})", self.now);
        if rate <= 0.0 {
            return;
        }
        let i = (slot - self.now - 1) as usize;
        self.extend(arc, i);
        let r = &mut self.residual[arc.0][i];
        assert!(
            rate <= *r + RATE_EPS,
            "over-booking arc {} in slot {slot}: rate {rate} > residual {r}",
            arc.0
        );
        *r = (*r - rate).max(0.0);
        self.load[arc.0] += rate * self.slot_width;
        if *r < RATE_EPS {
            self.next_open[arc.0][i] = slot + 1;
        }
    }

    fn extend(&mut self, arc: ArcId, i: usize) {
        let res = &mut self.residual[arc.0];
        let links = &mut self.next_open[arc.0];
        while res.len() <= i {
            links.push_back(self.now + 1 + res.len() as Slot);
            res.push_back(self.capacity);
        }
    }

    /// First slot `>= from` (and `> now`) in which `arc` has residual left.
    pub fn first_open(&mut self, arc: ArcId, from: Slot) -> Slot {
        let base = self.now + 1;
        let links = &mut self.next_open[arc.0];
        let mut slot = from.max(base);
        // Find the representative, then compress the path behind it.
        loop {
            let i = (slot - base) as usize;
            match links.get(i) {
                Some(&next) if next != slot => slot = next,
                _ => break,
            }
        }
        let root = slot;
        let mut slot = from.max(base);
        while slot != root {
            let i = (slot - base) as usize;
            let next = links[i];
            links[i] = root;
            slot = next;
        }
        root
    }

    /// First slot `>= from` in which every arc of `arcs` has residual left.
    pub fn first_open_all(&mut self, arcs: &[ArcId], from: Slot) -> Slot {
        let mut slot = from.max(self.now + 1);
        loop {
            let mut moved = false;
            for &a in arcs {
                let s = self.first_open(a, slot);
                if s != slot {
                    slot = s;
                    moved = true;
                }
            }
            if !moved {
                return slot;
            }
        }
    }

    /// Bottleneck residual of `arcs` in `slot`.
    pub fn bottleneck(&self, arcs: &[ArcId], slot: Slot) -> f64 {
        arcs.iter().map(|&a| self.available(a, slot)).fold(f64::INFINITY, f64::min)
    }

    /// Ends slot `now`: removes it from every residual map, deducts the
    /// traffic sent during it from `L_e`, and returns that traffic per arc.
    pub fn advance(&mut self, now: Slot) -> Vec<f64> {
        assert_eq!(now, self.now + 1, "slots must be dispatched in order");
        let mut sent = vec![0.0; self.load.len()];
        for (a, out) in sent.iter_mut().enumerate() {
            let r = self.residual[a].pop_front().unwrap_or(self.capacity);
            self.next_open[a].pop_front();
            let volume = (self.capacity - r) * self.slot_width;
            self.load[a] -= volume;
            if self.residual[a].is_empty() {
                // Nothing booked in the future: reset accumulated drift.
                self.load[a] = 0.0;
            }
            *out = volume;
        }
        self.now = now;
        sent
    }

    /// Drops every future booking.
    pub fn clear_future(&mut self) {
        for a in 0..self.load.len() {
            self.residual[a].clear();
            self.next_open[a].clear();
            self.load[a] = 0.0;
        }
    }

    /// `Σ_{t > now} (capacity − B_e(t)) × W`, recomputed from the residual map.
    pub fn recomputed_load(&self, arc: ArcId) -> f64 {
        self.residual[arc.0].iter().map(|r| (self.capacity - r) * self.slot_width).sum()
    }

    /// Smallest raw residual over all arcs and stored slots.
    pub fn min_residual(&self) -> f64 {
        self.residual.iter().flatten().copied().fold(self.capacity, f64::min)
    }

    /// Largest raw residual over all arcs and stored slots.
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().flatten().copied().fold(0.0, f64::max)
    }
}
