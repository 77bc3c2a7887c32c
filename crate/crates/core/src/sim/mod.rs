//! Slot-synchronous simulation of the pull schemes on a random mesh.
//!
//! Each slot the source hands the newest chunk to one random peer, every peer
//! reads its neighbors' buffer maps as they stand at that moment, issues at
//! most one request, and every peer serves up to its reply cap. Deliveries
//! land at the end of the slot. Occupancy is sampled from the buffer maps, so
//! position 1 always has exactly one holder and position `n` is the chunk
//! being played.

mod engine;
mod topology;

pub use engine::{
    run_observed, run_on_topology, run_simulation, Delivery, DeliveryKind, EmpiricalProfile, Request,
    SimConfig, SimOutcome, SlotObserver, SlotRecord, DEFAULT_MEASURED_SLOTS, DEFAULT_WARMUP,
};
pub use topology::{build_topology, Topology};
