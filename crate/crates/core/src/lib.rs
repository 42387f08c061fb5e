//! Joint service placement, instance assignment and path selection for
//! edge-cloud networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] builds the tiered, directed, capacitated network and its
//!   enumerated path set.
//! * [`workload`] generates the service catalog and the time-indexed request
//!   population with point-of-attachment (PoA) traces.
//! * [`model`] is the executable cost/constraint model: objective, the twelve
//!   feasibility predicates and the per-link delay calculus.
//! * [`predictor`] holds the per-PoA double deep Q-learning agents that guess
//!   which services will be requested next slot, plus learning-free baselines.
//! * [`orchestrator`] implements water-filling placement and the random,
//!   single-node-per-service and exhaustive baselines.
//! * [`sim`] drives slot-by-slot simulations and parameter sweeps.

pub mod ids;
pub mod model;
pub mod orchestrator;
pub mod predictor;
pub mod sim;
pub mod topology;
pub mod workload;

pub use ids::{InstanceId, LinkId, NodeId, PathId, RequestId, ServiceId, Slot};

/// Relative/absolute slack used when comparing accumulated floating point
/// quantities against their bounds.
pub const FLOAT_SLACK: f64 = 1e-9;

/// `value <= bound` up to [`FLOAT_SLACK`] (relative for large magnitudes).
pub fn within_bound(value: f64, bound: f64) -> bool {
    value <= bound + FLOAT_SLACK * bound.abs().max(1.0)
}
