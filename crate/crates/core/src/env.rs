//! The scheduling problem as a Markov decision process.
//!
//! [`observe`] featurizes a [`Cluster`], [`reward`] scores a window of
//! activity, [`decode_action`] maps discrete action indices onto placements
//! or capacity changes, and [`SchedEnv`] ties them together behind the
//! [`Environment`] trait that the learning agents consume.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::rng::{derive_seed, seeded, stream, SimRng};
use crate::sim::{
    Cluster, DecisionPoint, NetworkModel, PlaceOutcome, Request, SimError, SimOptions, SimTime, Topology,
};
use crate::workload::poisson_arrivals;

/// Features per service in a [`StateVector`].
pub const FEATURES_PER_SERVICE: usize = 6;

/// Per service: `[cpu_util, mem_util, storage_util, net_util, queue_fill,
/// ewma_response_norm]`, every entry clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn zeros(services: usize) -> Self {
        StateVector(vec![0.0; services * FEATURES_PER_SERVICE])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn services(&self) -> usize {
        self.0.len() / FEATURES_PER_SERVICE
    }

    pub fn is_valid_for(&self, services: usize) -> bool {
        self.0.len() == services * FEATURES_PER_SERVICE && self.0.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

fn unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

fn queue_norm(cluster: &Cluster) -> f64 {
    cluster.options().max_queue.unwrap_or(64).max(1) as f64
}

/// Featurizes the cluster. Utilizations are `in_use / capacity` averaged
/// over replicas, `queue_fill` is the mean queue length over the queue
/// bound, and the latency feature is the service's response EWMA divided by
/// `response_norm_ms`.
pub fn observe(cluster: &Cluster, response_norm_ms: f64) -> StateVector {
    let n = cluster.topology().len();
    let qnorm = queue_norm(cluster);
    let mut values = Vec::with_capacity(n * FEATURES_PER_SERVICE);
    for s in 0..n {
        let replicas = cluster.replicas(s);
        let k = replicas.len() as f64;
        let mut util = [0.0; 4];
        let mut queue = 0.0;
        for r in replicas {
            for (acc, u) in util.iter_mut().zip(r.utilization().to_array()) {
                *acc += u;
            }
            queue += r.queue_len() as f64;
        }
        values.extend(util.iter().map(|u| unit(u / k)));
        values.push(unit(queue / k / qnorm));
        let ewma = cluster.stats(s).ewma_response_ms.unwrap_or(0.0);
        values.push(unit(ewma / response_norm_ms));
    }
    StateVector(values)
}

/// Per-service delay and utilization weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardWeights {
    /// Delay weights, 1/ms.
    pub lambda: Vec<f64>,
    /// Utilization weights.
    pub alpha: Vec<f64>,
}

impl RewardWeights {
    pub fn uniform(services: usize, lambda: f64, alpha: f64) -> Self {
        Self {
            lambda: vec![lambda; services],
            alpha: vec![alpha; services],
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            lambda: self.lambda.iter().map(|v| v * k).collect(),
            alpha: self.alpha.iter().map(|v| v * k).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvError {
    LengthMismatch { expected: usize, got: usize },
    IndexOutOfRange { index: usize, actions: usize },
    EpisodeOver,
    NotStarted,
    InvalidWeights,
    Sim(SimError),
}

impl From<SimError> for EnvError {
    fn from(e: SimError) -> Self {
        EnvError::Sim(e)
    }
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            EnvError::IndexOutOfRange { index, actions } => {
                write!(f, "action {index} out of range for {actions} actions")
            }
            EnvError::EpisodeOver => f.write_str("episode is over; call reset"),
            EnvError::NotStarted => f.write_str("episode not started; call reset"),
            EnvError::InvalidWeights => f.write_str("reward weights must be finite and match the service count"),
            EnvError::Sim(e) => write!(f, "simulation: {e}"),
        }
    }
}

impl core::error::Error for EnvError {}

/// `Σ_i (−λ_i · R_i + α_i · U_i)`.
pub fn reward(response_ms: &[f64], utilization: &[f64], weights: &RewardWeights) -> Result<f64, EnvError> {
    let n = response_ms.len();
    for got in [utilization.len(), weights.lambda.len(), weights.alpha.len()] {
        if got != n {
            return Err(EnvError::LengthMismatch { expected: n, got });
        }
    }
    Ok((0..n)
        .map(|i| -weights.lambda[i] * response_ms[i] + weights.alpha[i] * utilization[i])
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Pick a replica for each pending request.
    Routing,
    /// Pick a (service, capacity tier) pair at every epoch boundary.
    Allocation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityTier {
    Half,
    Base,
    Double,
}

impl CapacityTier {
    pub const ALL: [CapacityTier; 3] = [CapacityTier::Half, CapacityTier::Base, CapacityTier::Double];

    pub fn factor(self) -> f64 {
        match self {
            CapacityTier::Half => 0.5,
            CapacityTier::Base => 1.0,
            CapacityTier::Double => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Route { replica: usize },
    Allocate { service: usize, tier: CapacityTier },
}

/// Size of the discrete action space for a topology.
pub fn action_count(mode: ActionMode, topology: &Topology) -> usize {
    match mode {
        ActionMode::Routing => topology.max_replicas(),
        ActionMode::Allocation => topology.len() * CapacityTier::ALL.len(),
    }
}

/// Maps an action index to a command.
///
/// Routing indices address the pending stage's candidates; when a service
/// has fewer replicas than `|A|` the index wraps around. Allocation indices
/// are row-major: `index = service * 3 + tier`.
pub fn decode_action(
    index: usize,
    mode: ActionMode,
    topology: &Topology,
    decision: Option<&DecisionPoint>,
) -> Result<Action, EnvError> {
    let actions = action_count(mode, topology);
    if index >= actions {
        return Err(EnvError::IndexOutOfRange { index, actions });
    }
    match mode {
        ActionMode::Routing => {
            let candidates = decision.map_or(actions, |d| d.candidates.len()).max(1);
            Ok(Action::Route {
                replica: index % candidates,
            })
        }
        ActionMode::Allocation => Ok(Action::Allocate {
            service: index / 3,
            tier: CapacityTier::ALL[index % 3],
        }),
    }
}

/// One unit of experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// The episode ended; no bootstrapping past this step.
    pub terminal: bool,
    /// The episode was cut short (time limit); bootstrapping is still valid.
    pub truncated: bool,
}

/// What a learning agent needs from an environment.
pub trait Environment {
    type Error;

    fn action_count(&self) -> usize;
    fn observation_len(&self) -> usize;
    fn reset(&mut self) -> Result<Vec<f64>, Self::Error>;
    fn step(&mut self, action: usize) -> Result<StepOutcome, Self::Error>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub mode: ActionMode,
    pub weights: RewardWeights,
    /// Response time charged to a service with no completions in a window,
    /// and to every request rejected in it.
    pub timeout_penalty_ms: f64,
    pub response_norm_ms: f64,
    pub options: SimOptions,
    /// Allocation-mode decision interval.
    pub epoch_ms: f64,
    /// Append per-candidate load and the pending service to observations.
    pub routing_context: bool,
    /// How a window's reward depends on its length.
    pub accrual: RewardAccrual,
    /// Response charged to a service without completions in a window.
    pub empty_window: EmptyWindow,
    /// Present each decision's candidates in a fresh random order, so slot
    /// positions carry no replica identity.
    pub shuffle_slots: bool,
}

/// Response time used for a service with no completions in a window.
/// Rejections always contribute `timeout_penalty_ms` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyWindow {
    /// Charge `timeout_penalty_ms`.
    Penalty,
    /// Charge the service's smoothed response estimate, or the penalty
    /// while it has none.
    CarryForward,
}

/// Per-decision rewards ignore how much time a window covers, so a policy
/// that thins out decisions (for example by getting requests rejected)
/// collects fewer penalties per unit time. Time accrual weights each
/// window's reward by its duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardAccrual {
    /// One evaluation of the reward per decision.
    PerDecision,
    /// The reward is a rate per `unit_ms`, integrated over the window.
    PerTime { unit_ms: f64 },
}

impl EnvConfig {
    pub fn new(services: usize) -> Self {
        Self {
            mode: ActionMode::Routing,
            weights: RewardWeights::uniform(services, 0.01, 0.5),
            timeout_penalty_ms: 500.0,
            response_norm_ms: 500.0,
            options: SimOptions::default(),
            epoch_ms: 1000.0,
            routing_context: true,
            accrual: RewardAccrual::PerDecision,
            empty_window: EmptyWindow::Penalty,
            shuffle_slots: false,
        }
    }
}

/// Where an episode's requests come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalSource {
    /// Fresh Poisson arrivals per episode, seeded by the episode seed.
    Poisson { rate_per_ms: f64, horizon_ms: f64 },
    /// The same request list every episode.
    Fixed(Vec<Request>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub clock: SimTime,
    pub outcome: Option<PlaceOutcome>,
    pub rejected_in_window: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
struct WindowMark {
    time: SimTime,
    completions: Vec<u64>,
    response_sum: Vec<f64>,
    rejections: Vec<u64>,
    util_integral: Vec<f64>,
}

/// The cluster simulator as an episodic environment.
#[derive(Debug, Clone)]
pub struct SchedEnv {
    topology: Topology,
    network: NetworkModel,
    config: EnvConfig,
    source: ArrivalSource,
    seed: u64,
    episode: u64,
    cluster: Option<Cluster>,
    /// The pending decision in slot order.
    view: Option<DecisionPoint>,
    slot_rng: SimRng,
    mark: Option<WindowMark>,
    done: bool,
}

impl SchedEnv {
    pub fn new(
        topology: Topology,
        network: NetworkModel,
        config: EnvConfig,
        source: ArrivalSource,
        seed: u64,
    ) -> Result<Self, EnvError> {
        network.validate()?;
        let n = topology.len();
        let w = &config.weights;
        if w.lambda.len() != n
            || w.alpha.len() != n
            || !w.lambda.iter().chain(&w.alpha).all(|v| v.is_finite())
        {
            return Err(EnvError::InvalidWeights);
        }
        Ok(Self {
            topology,
            network,
            config,
            source,
            seed,
            episode: 0,
            cluster: None,
            view: None,
            slot_rng: seeded(seed, stream::SLOTS),
            mark: None,
            done: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn cluster(&self) -> Option<&Cluster> {
        self.cluster.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// The pending decision with candidates in slot order; action `i`
    /// routes to `candidates[i]`.
    pub fn pending_decision(&self) -> Option<&DecisionPoint> {
        self.view.as_ref()
    }

    pub fn action_count(&self) -> usize {
        action_count(self.config.mode, &self.topology)
    }

    pub fn observation_len(&self) -> usize {
        let n = self.topology.len();
        let base = n * FEATURES_PER_SERVICE;
        if self.config.routing_context && self.config.mode == ActionMode::Routing {
            base + n + 2 * self.topology.max_replicas()
        } else {
            base
        }
    }

    /// Starts an episode whose cluster and arrivals are seeded with `seed`.
    pub fn reset_with_seed(&mut self, seed: u64) -> Result<Vec<f64>, EnvError> {
        let mut cluster =
            Cluster::with_options(self.topology.clone(), self.network, seed, self.config.options)?;
        let arrivals = match &self.source {
            ArrivalSource::Poisson { rate_per_ms, horizon_ms } => poisson_arrivals(*rate_per_ms, *horizon_ms, seed),
            ArrivalSource::Fixed(reqs) => reqs.clone(),
        };
        for req in arrivals {
            cluster.inject_arrival(req)?;
        }
        self.cluster = Some(cluster);
        self.slot_rng = seeded(seed, stream::SLOTS);
        self.view = None;
        self.done = false;
        match self.config.mode {
            ActionMode::Routing => self.run_to_decision()?,
            ActionMode::Allocation => {}
        }
        let c = self.cluster.as_ref().expect("just set");
        self.done = c.is_drained();
        self.mark = Some(self.window_mark());
        Ok(self.features())
    }

    /// Starts the next episode, seeded from the environment seed and the
    /// episode counter.
    pub fn reset(&mut self) -> Result<Vec<f64>, EnvError> {
        let seed = derive_seed(self.seed, self.episode);
        self.episode += 1;
        self.reset_with_seed(seed)
    }

    pub fn step(&mut self, action_index: usize) -> Result<EnvStep, EnvError> {
        if self.cluster.is_none() {
            return Err(EnvError::NotStarted);
        }
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let action = decode_action(
            action_index,
            self.config.mode,
            &self.topology,
            self.pending_decision(),
        )?;
        let outcome = match action {
            Action::Route { replica } => {
                let chosen = self.view.as_ref().ok_or(EnvError::EpisodeOver)?.candidates[replica].replica;
                let cluster = self.cluster.as_mut().expect("checked");
                let dp = cluster.pending().cloned().ok_or(EnvError::EpisodeOver)?;
                let index = dp.candidates.iter().position(|c| c.replica == chosen).expect("same decision");
                let out = cluster.place(&dp, index)?;
                self.run_to_decision()?;
                Some(out)
            }
            Action::Allocate { service, tier } => {
                self.cluster
                    .as_mut()
                    .expect("checked")
                    .set_capacity_scale(service, tier.factor())?;
                self.run_epoch()?;
                None
            }
        };
        let cluster = self.cluster.as_ref().expect("checked");
        self.done = cluster.is_drained();
        let (reward, rejected) = self.window_reward()?;
        self.mark = Some(self.window_mark());
        Ok(EnvStep {
            observation: self.features(),
            reward,
            terminal: self.done,
            info: StepInfo {
                clock: self.cluster.as_ref().expect("checked").clock(),
                outcome,
                rejected_in_window: rejected,
            },
        })
    }

    /// Full feature vector: the [`StateVector`] plus, in routing mode with
    /// context enabled, a one-hot of the pending service and
    /// `(queue_fill, binding_utilization)` per candidate slot.
    pub fn features(&self) -> Vec<f64> {
        let Some(cluster) = self.cluster.as_ref() else {
            return vec![0.0; self.observation_len()];
        };
        let mut out = observe(cluster, self.config.response_norm_ms).0;
        if self.config.routing_context && self.config.mode == ActionMode::Routing {
            let n = self.topology.len();
            let slots = self.topology.max_replicas();
            let mut ctx = vec![0.0; n + 2 * slots];
            if let Some(dp) = self.view.as_ref() {
                ctx[dp.service] = 1.0;
                let qnorm = queue_norm(cluster);
                for (i, c) in dp.candidates.iter().take(slots).enumerate() {
                    let binding = c.in_use.ratio(c.capacity).to_array().into_iter().fold(0.0, f64::max);
                    ctx[n + 2 * i] = unit(c.queue_len as f64 / qnorm);
                    ctx[n + 2 * i + 1] = unit(binding);
                }
            }
            out.extend(ctx);
        }
        out
    }

    fn run_to_decision(&mut self) -> Result<(), EnvError> {
        let cluster = self.cluster.as_mut().expect("started");
        while cluster.pending().is_none() && !cluster.is_drained() {
            cluster.advance()?;
        }
        self.view = cluster.pending().cloned();
        if let (Some(view), true) = (self.view.as_mut(), self.config.shuffle_slots) {
            view.candidates.shuffle(&mut self.slot_rng);
        }
        Ok(())
    }

    /// Runs until the next epoch boundary, routing with the least-loaded rule.
    fn run_epoch(&mut self) -> Result<(), EnvError> {
        let epoch = SimTime::from_ms(self.config.epoch_ms).micros().max(1);
        let cluster = self.cluster.as_mut().expect("started");
        let boundary = SimTime(cluster.clock().micros() / epoch * epoch + epoch);
        loop {
            if let Some(dp) = cluster.pending().cloned() {
                let choice = crate::agents::baselines::least_loaded(&dp);
                cluster.place(&dp, choice)?;
                continue;
            }
            match cluster.next_event_time() {
                Some(t) if t < boundary => {
                    cluster.advance()?;
                }
                Some(_) => {
                    cluster.idle_until(boundary)?;
                    break;
                }
                None => break,
            }
        }
        Ok(())
    }

    fn window_mark(&self) -> WindowMark {
        let c = self.cluster.as_ref().expect("started");
        let n = self.topology.len();
        let now = c.clock();
        WindowMark {
            time: now,
            completions: (0..n).map(|s| c.stats(s).stage_completions).collect(),
            response_sum: (0..n).map(|s| c.stats(s).stage_response_sum_ms).collect(),
            rejections: (0..n).map(|s| c.stats(s).rejections).collect(),
            util_integral: (0..n)
                .map(|s| c.replicas(s).iter().map(|r| r.integrals_at(now).1.mean()).sum())
                .collect(),
        }
    }

    fn window_reward(&self) -> Result<(f64, u64), EnvError> {
        let prev = self.mark.as_ref().ok_or(EnvError::NotStarted)?;
        let now = self.window_mark();
        let c = self.cluster.as_ref().expect("started");
        let n = self.topology.len();
        let dt = now.time.saturating_sub(prev.time).as_secs();
        let penalty = self.config.timeout_penalty_ms;
        let mut resp = vec![0.0; n];
        let mut util = vec![0.0; n];
        let mut rejected = 0;
        for s in 0..n {
            let done = now.completions[s] - prev.completions[s];
            let rej = now.rejections[s] - prev.rejections[s];
            rejected += rej;
            let samples = done + rej;
            resp[s] = if samples == 0 {
                match self.config.empty_window {
                    EmptyWindow::Penalty => penalty,
                    EmptyWindow::CarryForward => c.stats(s).ewma_response_ms.unwrap_or(penalty),
                }
            } else {
                (now.response_sum[s] - prev.response_sum[s] + rej as f64 * penalty) / samples as f64
            };
            let k = c.replicas(s).len() as f64;
            util[s] = if dt > 0.0 {
                (now.util_integral[s] - prev.util_integral[s]) / (dt * k)
            } else {
                c.replicas(s).iter().map(|r| r.utilization().mean()).sum::<f64>() / k
            };
        }
        let r = reward(&resp, &util, &self.config.weights)?;
        let r = match self.config.accrual {
            RewardAccrual::PerDecision => r,
            RewardAccrual::PerTime { unit_ms } => r * now.time.saturating_sub(prev.time).as_ms() / unit_ms,
        };
        Ok((r, rejected))
    }
}

impl Environment for SchedEnv {
    type Error = EnvError;

    fn action_count(&self) -> usize {
        SchedEnv::action_count(self)
    }

    fn observation_len(&self) -> usize {
        SchedEnv::observation_len(self)
    }

    fn reset(&mut self) -> Result<Vec<f64>, EnvError> {
        SchedEnv::reset(self)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        let s = SchedEnv::step(self, action)?;
        Ok(StepOutcome {
            observation: s.observation,
            reward: s.reward,
            terminal: s.terminal,
            truncated: false,
        })
    }
}

/// A replica-choosing policy, learned or fixed.
pub trait RoutingPolicy {
    /// Index into `decision.candidates`.
    fn choose(&mut self, decision: &DecisionPoint, features: &[f64]) -> usize;
}

/// Plays one routing-mode episode with `policy` and returns its return.
pub fn run_routing_episode<P: RoutingPolicy + ?Sized>(
    env: &mut SchedEnv,
    seed: u64,
    policy: &mut P,
) -> Result<f64, EnvError> {
    let mut obs = env.reset_with_seed(seed)?;
    let mut total = 0.0;
    while !env.is_done() {
        let dp = env.pending_decision().cloned().ok_or(EnvError::EpisodeOver)?;
        let choice = policy.choose(&dp, &obs);
        let step = env.step(choice)?;
        total += step.reward;
        obs = step.observation;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ServiceSpec;
    use crate::ResourceVector;

    fn two_service_cluster() -> Cluster {
        let t = Topology::chain(2, 2, ResourceVector::splat(1.0), 10.0, ResourceVector::splat(1.0)).unwrap();
        Cluster::new(t, NetworkModel::NONE, 1).unwrap()
    }

    #[test]
    fn idle_cluster_observes_zeros() {
        let c = two_service_cluster();
        let s = observe(&c, 500.0);
        assert_eq!(s, StateVector::zeros(2));
        assert_eq!(s.0.len(), 12);
    }

    #[test]
    fn fully_busy_replica_reads_one() {
        let t = Topology::chain(1, 1, ResourceVector::new(2.0, 4.0, 4.0, 4.0), 10.0, ResourceVector::new(2.0, 1.0, 0.0, 0.0))
            .unwrap();
        let mut c = Cluster::new(t, NetworkModel::NONE, 1).unwrap();
        c.inject_arrival(Request::new(0, SimTime::ZERO)).unwrap();
        let dp = c.advance().unwrap().decision.unwrap();
        c.place(&dp, 0).unwrap();
        let s = observe(&c, 500.0);
        assert_eq!(s.0[0], 1.0);
        assert_eq!(s.0[1], 0.25);
        assert!(s.is_valid_for(1));
    }

    #[test]
    fn ewma_of_constant_responses() {
        // the EWMA of a constant sequence is that constant
        let mut stats = crate::sim::ServiceStats::default();
        for _ in 0..3 {
            let prev = stats.ewma_response_ms;
            stats.ewma_response_ms = Some(prev.map_or(100.0, |p| p + 0.2 * (100.0 - p)));
        }
        assert_eq!(stats.ewma_response_ms.unwrap() / 500.0, 0.2);
    }

    #[test]
    fn reward_substitution() {
        let w = RewardWeights {
            lambda: vec![0.01, 0.02],
            alpha: vec![0.5, 0.5],
        };
        let r = reward(&[120.0, 150.0], &[0.85, 0.80], &w).unwrap();
        assert!((r - (-3.375)).abs() < 1e-12);
        let zero = RewardWeights::uniform(2, 0.0, 0.0);
        assert_eq!(reward(&[1e9, 3.0], &[1.0, 0.3], &zero).unwrap(), 0.0);
        let single = RewardWeights { lambda: vec![1.0], alpha: vec![0.0] };
        assert_eq!(reward(&[5.0], &[0.7], &single).unwrap(), -5.0);
        assert!(matches!(
            reward(&[1.0], &[1.0, 2.0], &single),
            Err(EnvError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn action_decoding() {
        let t = Topology::chain(2, 3, ResourceVector::splat(1.0), 10.0, ResourceVector::splat(1.0)).unwrap();
        assert_eq!(
            decode_action(2, ActionMode::Routing, &t, None),
            Ok(Action::Route { replica: 2 })
        );
        assert_eq!(
            decode_action(4, ActionMode::Allocation, &t, None),
            Ok(Action::Allocate { service: 1, tier: CapacityTier::Base })
        );
        assert_eq!(
            decode_action(6, ActionMode::Allocation, &t, None),
            Err(EnvError::IndexOutOfRange { index: 6, actions: 6 })
        );
        assert!(decode_action(3, ActionMode::Routing, &t, None).is_err());
    }

    fn tiny_env(arrivals: Vec<Request>, max_queue: usize) -> SchedEnv {
        let spec = ServiceSpec::new(0, 1, ResourceVector::splat(1.0), 10.0, ResourceVector::splat(1.0));
        let mut cfg = EnvConfig::new(1);
        cfg.options.max_queue = Some(max_queue);
        SchedEnv::new(
            Topology::new(vec![spec]).unwrap(),
            NetworkModel::NONE,
            cfg,
            ArrivalSource::Fixed(arrivals),
            3,
        )
        .unwrap()
    }

    #[test]
    fn rejection_charges_the_timeout_penalty() {
        let arrivals = vec![Request::new(0, SimTime::ZERO), Request::new(1, SimTime::ZERO), Request::new(2, SimTime::ZERO)];
        let mut env = tiny_env(arrivals, 0);
        env.reset().unwrap();
        // first request starts; window until the next decision (same instant)
        let s1 = env.step(0).unwrap();
        assert_eq!(s1.info.outcome, Some(PlaceOutcome::Started));
        // second request is rejected: R = 500 ms penalty, U = 1 (replica full)
        let s2 = env.step(0).unwrap();
        assert_eq!(s2.info.outcome, Some(PlaceOutcome::Rejected));
        assert_eq!(s2.info.rejected_in_window, 1);
        assert!((s2.reward - (-0.01 * 500.0 + 0.5 * 1.0)).abs() < 1e-12);
    }

    #[test]
    fn last_completion_is_terminal() {
        let mut env = tiny_env(vec![Request::new(0, SimTime::ZERO)], 4);
        env.reset().unwrap();
        let s = env.step(0).unwrap();
        assert!(s.terminal);
        assert_eq!(env.step(0), Err(EnvError::EpisodeOver));
    }

    #[test]
    fn step_before_reset() {
        let mut env = tiny_env(vec![], 4);
        assert_eq!(env.step(0), Err(EnvError::NotStarted));
        env.reset().unwrap();
        assert!(env.is_done());
    }
}
