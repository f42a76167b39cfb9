//! Slot-by-slot simulation driver with online invariant checks.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::metrics::{self, MetricsError, Recorder, RunReport, Timing};
use crate::p2p::{P2pDiscipline, P2pScheduler};
use crate::scheduler::{
    Admission, BatchingScheduler, RequestId, Scheduler, SchedulerError, Slot, SlotReport, SrptTreeScheduler,
    TransferRequest, TreeFcfsScheduler, TreeSelection, RATE_EPS, VOLUME_EPS,
};
use crate::topology::{ArcId, Topology};

/// Tolerance of the bandwidth identities and the ledger comparison.
pub const IDENTITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Dccast,
    MinMax,
    Random,
    Batching,
    Srpt,
    P2pSrpt,
    P2pFcfs,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Dccast,
        Scheme::MinMax,
        Scheme::Random,
        Scheme::Batching,
        Scheme::Srpt,
        Scheme::P2pSrpt,
        Scheme::P2pFcfs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dccast => "DCCAST",
            Scheme::MinMax => "MINMAX",
            Scheme::Random => "RANDOM",
            Scheme::Batching => "BATCHING",
            Scheme::Srpt => "SRPT",
            Scheme::P2pSrpt => "P2P-SRPT",
            Scheme::P2pFcfs => "P2P-FCFS",
        }
    }

    pub fn is_p2p(self) -> bool {
        matches!(self, Scheme::P2pSrpt | Scheme::P2pFcfs)
    }

    /// Whether completion slots are fixed when a request is allocated.
    pub fn keeps_promises(self) -> bool {
        !matches!(self, Scheme::Srpt | Scheme::P2pSrpt)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scheme {0:?} (expected one of DCCAST, MINMAX, RANDOM, BATCHING, SRPT, P2P-SRPT, P2P-FCFS)")]
pub struct UnknownScheme(pub String);

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase().replace('_', "-");
        let scheme = match upper.as_str() {
            "DCCAST" | "FCFS" => Scheme::Dccast,
            "MINMAX" => Scheme::MinMax,
            "RANDOM" => Scheme::Random,
            "BATCHING" => Scheme::Batching,
            "SRPT" => Scheme::Srpt,
            "P2P-SRPT" | "P2P-SRPT-LP" => Scheme::P2pSrpt,
            "P2P-FCFS" | "P2P-FCFS-LP" => Scheme::P2pFcfs,
            _ => return Err(UnknownScheme(s.to_string())),
        };
        Ok(scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub slot_width: f64,
    pub k_paths: usize,
    pub batch_window: Slot,
    pub tail_percentile: f64,
    /// Seed of the RANDOM tree weights.
    pub seed: u64,
    /// Slots between full ledger recomputations; 0 checks only at the end.
    pub ledger_interval: Slot,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { slot_width: 1.0, k_paths: 3, batch_window: 5, tail_percentile: 99.0, seed: 1, ledger_interval: 64 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invariant violated in slot {slot}: {message}")]
    Invariant { slot: Slot, message: String },
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("bad simulation parameter: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub report: RunReport,
    /// Completion slot of every request, in input order.
    pub completions: Vec<Slot>,
    /// Last simulated slot.
    pub last_slot: Slot,
}

fn build<'a>(topology: &'a Topology, scheme: Scheme, config: &SimConfig) -> Box<dyn Scheduler + 'a> {
    let w = config.slot_width;
    match scheme {
        Scheme::Dccast => Box::new(TreeFcfsScheduler::new(topology, w, TreeSelection::Dccast)),
        Scheme::MinMax => Box::new(TreeFcfsScheduler::new(topology, w, TreeSelection::MinMax)),
        Scheme::Random => Box::new(TreeFcfsScheduler::new(topology, w, TreeSelection::Random { seed: config.seed })),
        Scheme::Batching => Box::new(BatchingScheduler::new(topology, w, config.batch_window)),
        Scheme::Srpt => Box::new(SrptTreeScheduler::new(topology, w)),
        Scheme::P2pSrpt => Box::new(P2pScheduler::new(topology, w, config.k_paths, P2pDiscipline::Srpt)),
        Scheme::P2pFcfs => Box::new(P2pScheduler::new(topology, w, config.k_paths, P2pDiscipline::Fcfs)),
    }
}

/// State of the online checks.
struct Checker<'r> {
    scheme: Scheme,
    capacity: f64,
    slot_width: f64,
    requests: HashMap<RequestId, &'r TransferRequest>,
    delivered: HashMap<(RequestId, usize), f64>,
    promised: HashMap<RequestId, Slot>,
    promised_bandwidth: f64,
    sent_total: f64,
    arc_rates: Vec<f64>,
}

impl<'r> Checker<'r> {
    fn fail(slot: Slot, message: String) -> SimError {
        SimError::Invariant { slot, message }
    }

    fn admitted(&mut self, slot: Slot, admissions: &[Admission]) -> Result<(), SimError> {
        for a in admissions {
            if self.scheme.keeps_promises() {
                let Some(p) = a.promised else {
                    return Err(Self::fail(slot, format!("request {} admitted without a completion slot", a.request)));
                };
                self.promised.insert(a.request, p);
                self.promised_bandwidth += a.bandwidth.unwrap_or(0.0);
            }
        }
        Ok(())
    }

    fn slot(&mut self, report: &SlotReport) -> Result<(), SimError> {
        let t = report.slot;
        self.arc_rates.iter_mut().for_each(|r| *r = 0.0);
        for d in &report.dispatches {
            if !(d.rate > 0.0 && d.rate.is_finite()) {
                return Err(Self::fail(t, format!("request {} dispatched rate {}", d.request, d.rate)));
            }
            for &a in d.arcs.iter() {
                self.arc_rates[a.0] += d.rate;
            }
            *self.delivered.entry((d.request, d.copy)).or_insert(0.0) += d.rate * self.slot_width;
        }
        for (a, (&rate, &sent)) in self.arc_rates.iter().zip(&report.sent).enumerate() {
            if rate > self.capacity + RATE_EPS {
                return Err(Self::fail(t, format!("arc {a} carries rate {rate} above capacity {}", self.capacity)));
            }
            if (rate * self.slot_width - sent).abs() > RATE_EPS * self.slot_width {
                return Err(Self::fail(
                    t,
                    format!("arc {a} dispatched {} but its residual map released {sent}", rate * self.slot_width),
                ));
            }
            self.sent_total += sent;
        }
        for &id in &report.completed {
            let Some(request) = self.requests.get(&id) else {
                return Err(Self::fail(t, format!("unknown request {id} completed")));
            };
            let copies = if self.scheme.is_p2p() { request.destinations.len() } else { 1 };
            let tol = VOLUME_EPS + 1e-12 * request.volume;
            for c in 0..copies {
                let got = self.delivered.remove(&(id, c)).unwrap_or(0.0);
                if (got - request.volume).abs() > tol {
                    return Err(Self::fail(
                        t,
                        format!("request {id} copy {c} delivered {got} of volume {}", request.volume),
                    ));
                }
            }
            if let Some(&p) = self.promised.get(&id) {
                if p != t {
                    return Err(Self::fail(t, format!("request {id} was promised slot {p} but completed in {t}")));
                }
            } else if self.scheme.keeps_promises() {
                return Err(Self::fail(t, format!("request {id} completed before it was allocated")));
            }
        }
        Ok(())
    }

    fn ledger(&self, slot: Slot, scheduler: &dyn Scheduler) -> Result<(), SimError> {
        let state = scheduler.link_state();
        for a in 0..state.arc_count() {
            let (booked, recomputed) = (state.load(ArcId(a)), state.recomputed_load(ArcId(a)));
            if (booked - recomputed).abs() > IDENTITY_TOL * recomputed.max(1.0) {
                return Err(Self::fail(slot, format!("arc {a} ledger {booked} differs from residual map {recomputed}")));
            }
        }
        if state.min_residual() < 0.0 || state.max_residual() > self.capacity {
            return Err(Self::fail(slot, "residual outside [0, capacity]".into()));
        }
        Ok(())
    }

    fn finish(&self, slot: Slot, recorder: &Recorder) -> Result<(), SimError> {
        let total = recorder.total_bandwidth();
        if (total - self.sent_total).abs() > IDENTITY_TOL {
            return Err(Self::fail(slot, format!("dispatched bandwidth {total} differs from released {}", self.sent_total)));
        }
        if self.scheme.keeps_promises() && (total - self.promised_bandwidth).abs() > IDENTITY_TOL {
            return Err(Self::fail(
                slot,
                format!("dispatched bandwidth {total} differs from allocated {}", self.promised_bandwidth),
            ));
        }
        if let Some((&(id, c), _)) = self.delivered.iter().next() {
            return Err(Self::fail(slot, format!("request {id} copy {c} was dispatched but never completed")));
        }
        Ok(())
    }
}

/// Runs `requests` through `scheme` until every request has completed.
///
/// Arrivals of a slot are admitted after that slot is dispatched, in
/// ascending id order.
pub fn simulate(
    topology: &Topology,
    requests: &[TransferRequest],
    scheme: Scheme,
    config: &SimConfig,
) -> Result<SimOutcome, SimError> {
    if !(config.slot_width.is_finite() && config.slot_width > 0.0) {
        return Err(SimError::Config(format!("slot width must be positive, got {}", config.slot_width)));
    }
    if config.k_paths == 0 {
        return Err(SimError::Config("k_paths must be at least 1".into()));
    }
    if config.batch_window == 0 {
        return Err(SimError::Config("batch_window must be at least 1".into()));
    }
    for r in requests {
        r.validate()?;
        if r.source >= topology.node_count() || r.destinations.iter().any(|&d| d >= topology.node_count()) {
            return Err(SimError::Config(format!("request {} names a node outside the topology", r.id)));
        }
    }
    let mut order: Vec<&TransferRequest> = requests.iter().collect();
    order.sort_by_key(|r| (r.arrival_slot, r.id));

    let mut scheduler = build(topology, scheme, config);
    let mut recorder = Recorder::new(config.slot_width);
    let mut check = Checker {
        scheme,
        capacity: topology.capacity(),
        slot_width: config.slot_width,
        requests: requests.iter().map(|r| (r.id, r)).collect(),
        delivered: HashMap::new(),
        promised: HashMap::new(),
        promised_bandwidth: 0.0,
        sent_total: 0.0,
        arc_rates: vec![0.0; topology.arc_count()],
    };
    if check.requests.len() != requests.len() {
        return Err(SimError::Config("request ids are not unique".into()));
    }
    let mut timing = Timing::default();
    let mut next = 0;
    let mut idle = 0;
    let mut now: Slot = 0;
    loop {
        if now > 0 {
            let start = Instant::now();
            let report = scheduler.update(now);
            timing.slot_ms += start.elapsed().as_secs_f64() * 1e3;
            timing.slots += 1;
            check.slot(&report)?;
            recorder.record(&report);
            idle = if report.dispatches.is_empty() && report.completed.is_empty() { idle + 1 } else { 0 };
        }
        let begin = next;
        while next < order.len() && order[next].arrival_slot <= now {
            next += 1;
        }
        let arrivals: Vec<TransferRequest> = order[begin..next].iter().map(|&r| r.clone()).collect();
        let next_arrival = order.get(next).map(|r| r.arrival_slot);
        let start = Instant::now();
        let admitted = scheduler.admit(now, &arrivals, next_arrival)?;
        timing.alloc_ms += start.elapsed().as_secs_f64() * 1e3;
        check.admitted(now, &admitted)?;
        if !arrivals.is_empty() {
            idle = 0;
        }
        if config.ledger_interval > 0 && now.is_multiple_of(config.ledger_interval) {
            check.ledger(now, scheduler.as_ref())?;
        }
        if next == order.len() && scheduler.outstanding() == 0 {
            break;
        }
        if next == order.len() && idle > config.batch_window + 1 && scheduler.link_state().horizon() <= now + 1 {
            return Err(Checker::fail(now, format!("{} requests are stuck", scheduler.outstanding())));
        }
        now += 1;
    }
    check.ledger(now, scheduler.as_ref())?;
    check.finish(now, &recorder)?;
    let report = metrics::report(scheme.name(), requests, &recorder, timing, config.tail_percentile)?;
    let completions = requests.iter().map(|r| recorder.completion(r.id).expect("report checked completions")).collect();
    Ok(SimOutcome { report, completions, last_slot: now })
}
