//! Deep Q-network training: ε-greedy acting through the online network,
//! uniform experience replay, and a periodically synchronized target.

use alloc::vec::Vec;

use super::nn::{sgd_step, sync_target, td_targets, TargetNetwork, ValueNetwork};
use super::qlearn::{select_action, EpsilonSchedule};
use super::replay::ReplayBuffer;
use super::{argmax, AgentError, TrainError};
use crate::env::{Environment, RoutingPolicy, Transition};
use crate::rng::{self, stream};
use crate::sim::DecisionPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Online-to-target copy period, in gradient steps.
    pub sync_interval: usize,
    pub episodes: usize,
    /// Environment steps before the first gradient step.
    pub warmup: usize,
    /// Environment steps per gradient step.
    pub train_every: usize,
    pub max_grad_norm: Option<f64>,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: alloc::vec![64, 64],
            learning_rate: 1e-3,
            gamma: 0.95,
            epsilon: EpsilonSchedule::default(),
            replay_capacity: 10_000,
            batch_size: 32,
            sync_interval: 500,
            episodes: 10,
            warmup: 32,
            train_every: 1,
            max_grad_norm: None,
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(AgentError::InvalidParams("learning rate must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(AgentError::InvalidParams("gamma must lie in [0, 1)"));
        }
        if self.replay_capacity == 0 || self.batch_size == 0 || self.sync_interval == 0 || self.train_every == 0 {
            return Err(AgentError::InvalidParams(
                "replay capacity, batch size, sync interval and train_every must be positive",
            ));
        }
        if self.hidden.contains(&0) {
            return Err(AgentError::InvalidParams("hidden layers must be non-empty"));
        }
        Ok(())
    }

    pub fn layer_sizes(&self, inputs: usize, actions: usize) -> Vec<usize> {
        let mut s = alloc::vec![inputs];
        s.extend_from_slice(&self.hidden);
        s.push(actions);
        s
    }
}

/// Trains a fresh network on `env`. Returns the online network and the
/// undiscounted return of each episode.
pub fn train_dqn<E: Environment>(
    env: &mut E,
    config: &DqnConfig,
) -> Result<(ValueNetwork, Vec<f64>), TrainError<E::Error>> {
    config.validate()?;
    let actions = env.action_count();
    if actions == 0 {
        return Err(AgentError::EmptyActionSet.into());
    }
    let mut init_rng = rng::seeded(config.seed, stream::INIT);
    let mut rng = rng::seeded(config.seed, stream::AGENT);
    let mut online = ValueNetwork::new(&config.layer_sizes(env.observation_len(), actions), &mut init_rng)?;
    let mut target = TargetNetwork::new(&online, config.sync_interval);
    let mut replay = ReplayBuffer::new(config.replay_capacity);
    let mut curve = Vec::with_capacity(config.episodes);
    let mut env_steps = 0u64;
    let mut grad_steps = 0usize;
    let mut batch = Vec::with_capacity(config.batch_size);

    for _ in 0..config.episodes {
        let mut obs = env.reset().map_err(TrainError::Env)?;
        let mut total = 0.0;
        loop {
            let q = online.forward(&obs)?;
            let a = select_action(&q, config.epsilon.at(env_steps), &mut rng)?;
            let out = env.step(a).map_err(TrainError::Env)?;
            env_steps += 1;
            total += out.reward;
            let done = out.terminal || out.truncated;
            replay.push(Transition {
                state: obs,
                action: a,
                reward: out.reward,
                next_state: out.observation.clone(),
                terminal: out.terminal,
            });
            obs = out.observation;

            if replay.len() >= config.warmup.max(1) && env_steps.is_multiple_of(config.train_every as u64) {
                batch.clear();
                batch.extend(replay.sample(config.batch_size, &mut rng).into_iter().cloned());
                let targets = td_targets(&batch, &target.net, config.gamma)?;
                sgd_step(&mut online, &batch, &targets, config.learning_rate, config.max_grad_norm)?;
                grad_steps += 1;
                if grad_steps.is_multiple_of(target.sync_interval) {
                    sync_target(&online, &mut target)?;
                }
            }
            if done {
                break;
            }
        }
        curve.push(total);
    }
    Ok((online, curve))
}

/// Greedy routing through a trained network.
#[derive(Debug, Clone)]
pub struct DqnPolicy<'a> {
    pub net: &'a ValueNetwork,
}

impl RoutingPolicy for DqnPolicy<'_> {
    fn choose(&mut self, decision: &DecisionPoint, features: &[f64]) -> usize {
        let a = self.net.forward(features).ok().and_then(|q| argmax(&q)).unwrap_or(0);
        a % decision.candidates.len().max(1)
    }
}
