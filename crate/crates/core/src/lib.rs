//! Deterministic discrete-event simulation of a microservice cluster, with a
//! Markov-decision-process wrapper and reinforcement-learning schedulers.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! harness and the command line live in the companion `rlsched-bench` crate.
//!
//! Layout:
//! * [`resources`]: the four-dimensional [`ResourceVector`].
//! * [`sim`]: the event-driven cluster simulator and the M/M/1 self-check.
//! * [`workload`]: Poisson arrival generation and trace replay.
//! * [`env`]: featurization, reward, action decoding and the stepping environment.
//! * [`agents`]: tabular Q-learning, DQN and the baseline routing policies.
//! * [`metrics`]: response time, throughput, utilization, energy and efficiency.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agents;
pub mod env;
pub mod metrics;
pub mod resources;
pub mod rng;
pub mod sim;
pub mod workload;

pub use resources::{Resource, ResourceVector};
