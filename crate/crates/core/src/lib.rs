//! Control plane for switched QKD networks.
//!
//! A switched QKD network shares transmitters, receivers and wavelengths
//! between mutually exclusive physical links, so only some links can generate
//! key at any moment. This crate models such networks, derives the feasible
//! configurations, computes switching schedules with two strategies — the
//! reactive fill-most-critical-buffer policy and a proactive max-min duration
//! program — and verifies schedules against an exact piecewise-linear
//! simulation of the link-buffer dynamics.
//!
//! Modules:
//! - [`model`]: domain types, the scenario file format, validation.
//! - [`configspace`]: configuration enumeration and supersession reduction.
//! - [`optimize`]: rate matrices, the supported-consumption metric, FMCB
//!   selection and the MMAK linear program.
//! - [`coordinator`]: the interrupt-driven switching coordinator.
//! - [`simenv`]: in-process mock SDN controller and event-driven simulator.

// Negated float comparisons like `!(x > 0.0)` are deliberate throughout:
// unlike `x <= 0.0`, they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod configspace;
pub mod coordinator;
pub mod model;
pub mod optimize;
pub mod simenv;

#[cfg(test)]
pub(crate) mod testnet;

pub use configspace::{enumerate_configurations, rate_vector, reduce_useful, RateVector};
pub use coordinator::{Coordinator, CoordinatorConfig};
pub use optimize::{
    build_matrices, k_supported, mmak_solve, schedule_from_mix, MixVector, RateMatrix, Schedule,
    ScheduleEntry,
};
pub use simenv::{detect_steady_state, run, SimParams, Trace};
pub use model::{
    parse_scenario, serialize_scenario, serialize_state, Configuration, LinkSpec, LinkState, Mode,
    ModelError, NetworkState, NetworkStructure, PhysicalLinkSpec, ResourceId, Scenario,
    StrategyKind, StrategySettings, Violation,
};
