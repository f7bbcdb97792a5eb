//! Scheduling policies: tabular Q-learning, a from-scratch DQN, and the
//! non-learning baselines they are compared against.

pub mod baselines;
pub mod dqn;
pub mod nn;
pub mod qlearn;
pub mod replay;

use core::fmt;

pub use baselines::{LeastLoaded, RandomChoice, RoundRobin, Static};
pub use dqn::{train_dqn, DqnConfig, DqnPolicy};
pub use nn::{sgd_step, sync_target, td_targets, Dense, Gradient, TargetNetwork, ValueNetwork};
pub use qlearn::{
    q_update, select_action, train_tabular, Discretizer, EpsilonSchedule, LearningParams, QTable, QTablePolicy,
};
pub use replay::ReplayBuffer;

#[derive(Debug, Clone, PartialEq)]
pub enum AgentError {
    EmptyActionSet,
    EmptyBatch,
    DimensionMismatch { expected: usize, got: usize },
    ArchitectureMismatch,
    NonFiniteLoss,
    InvalidParams(&'static str),
    Parse { line: usize, reason: &'static str },
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::EmptyActionSet => f.write_str("action set is empty"),
            AgentError::EmptyBatch => f.write_str("batch is empty"),
            AgentError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            AgentError::ArchitectureMismatch => f.write_str("network architectures differ"),
            AgentError::NonFiniteLoss => f.write_str("loss is not finite"),
            AgentError::InvalidParams(what) => write!(f, "invalid parameters: {what}"),
            AgentError::Parse { line, reason } => write!(f, "line {line}: {reason}"),
        }
    }
}

impl core::error::Error for AgentError {}

/// Failure during training: either the environment or the agent.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainError<E> {
    Env(E),
    Agent(AgentError),
}

impl<E> From<AgentError> for TrainError<E> {
    fn from(e: AgentError) -> Self {
        TrainError::Agent(e)
    }
}

impl<E: fmt::Display> fmt::Display for TrainError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Env(e) => write!(f, "environment: {e}"),
            TrainError::Agent(e) => write!(f, "agent: {e}"),
        }
    }
}

impl<E: fmt::Debug + fmt::Display> core::error::Error for TrainError<E> {}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn max_value(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
