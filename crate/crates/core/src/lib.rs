//! Scheduling of point-to-multipoint transfers between datacenters over
//! forwarding trees on a slotted timeline.
//!
//! A [`topology::Topology`] holds the WAN graph. The [`scheduler`] module
//! books each request's volume on a Steiner tree chosen under the current
//! link load; [`p2p`] provides the unicast multipath baselines. [`sim`]
//! drives a workload from [`workload`] through one scheme and produces a
//! [`metrics::RunReport`].

pub mod metrics;
pub mod p2p;
pub mod scheduler;
pub mod sim;
pub mod steiner;
pub mod topology;
pub mod workload;

pub use scheduler::{RequestId, Slot, TransferRequest};
pub use sim::{simulate, Scheme, SimConfig, SimError, SimOutcome};
pub use topology::{build_gscale, build_random, Topology};
