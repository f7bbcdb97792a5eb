//! Event-driven simulation of requests flowing through a DAG of services.
//!
//! The simulator never places a request by itself: whenever a request is
//! ready for a service stage, [`Cluster::advance`] hands back a
//! [`DecisionPoint`] and waits for [`Cluster::place`]. Policies, learned or
//! not, sit outside.

mod cluster;
mod mm1;
mod network;
mod topology;

use core::fmt;

pub use cluster::{
    Advance, Candidate, Cluster, CompletedRequest, DecisionPoint, EventSummary, PlaceOutcome,
    ReplicaState, Request, RequestStatus, ServiceStats, SimOptions, service_time,
};
pub use mm1::{mm1_mean_response, run_mm1_validation};
pub use network::NetworkModel;
pub use topology::{ServiceSpec, Topology};

/// Simulation time, integer microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    /// Rounds to the nearest microsecond; negative and non-finite inputs map to zero.
    pub fn from_ms(ms: f64) -> Self {
        if !ms.is_finite() || ms <= 0.0 {
            return SimTime(0);
        }
        SimTime(libm::round(ms * 1000.0) as u64)
    }

    pub const fn micros(self) -> u64 {
        self.0
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1_000_000.0
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl core::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.as_ms())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    EmptyTopology,
    CyclicTopology,
    InvalidSpec { service: usize, reason: &'static str },
    InvalidNetwork(&'static str),
    PastTimestamp { at: SimTime, clock: SimTime },
    EmptyQueue,
    DecisionPending,
    StaleDecision,
    InvalidReplica { index: usize, candidates: usize },
    UnknownService(usize),
    UnstableSystem { arrival_rate: f64, service_rate: f64 },
    InvalidRate(f64),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::EmptyTopology => f.write_str("topology has no services"),
            SimError::CyclicTopology => f.write_str("downstream edges contain a cycle"),
            SimError::InvalidSpec { service, reason } => {
                write!(f, "invalid spec for service {service}: {reason}")
            }
            SimError::InvalidNetwork(reason) => write!(f, "invalid network model: {reason}"),
            SimError::PastTimestamp { at, clock } => {
                write!(f, "arrival at {at} is before the simulation clock {clock}")
            }
            SimError::EmptyQueue => f.write_str("no pending events"),
            SimError::DecisionPending => {
                f.write_str("a placement decision is pending; call place() first")
            }
            SimError::StaleDecision => f.write_str("decision point is not the pending one"),
            SimError::InvalidReplica { index, candidates } => {
                write!(f, "replica index {index} out of range ({candidates} candidates)")
            }
            SimError::UnknownService(s) => write!(f, "unknown service {s}"),
            SimError::UnstableSystem {
                arrival_rate,
                service_rate,
            } => write!(
                f,
                "arrival rate {arrival_rate} must be below service rate {service_rate}"
            ),
            SimError::InvalidRate(r) => write!(f, "rate must be finite and positive, got {r}"),
        }
    }
}

impl core::error::Error for SimError {}
