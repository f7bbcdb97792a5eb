//! Experiment configuration: a versioned JSON document.
//!
//! Every section has defaults, so `{"version": 1}` is the reference
//! experiment. Unknown fields are rejected.

use std::path::{Path, PathBuf};

use rlsched_core::agents::{DqnConfig, EpsilonSchedule, LearningParams};
use rlsched_core::env::{EmptyWindow, EnvConfig, RewardAccrual, RewardWeights};
use rlsched_core::metrics::EnergyModel;
use rlsched_core::sim::{NetworkModel, ServiceSpec, SimOptions, Topology};
use rlsched_core::workload::{LoadLevel, ResourceProfile};
use rlsched_core::ResourceVector;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config field `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Dotted path of the offending field.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Read { .. } => None,
            ConfigError::Parse { path, .. } => Some(path),
            ConfigError::Invalid { field, .. } => Some(field),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Dqn,
    QLearning,
    Static,
    RoundRobin,
    LeastLoaded,
    Random,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] = [
        SchedulerKind::Dqn,
        SchedulerKind::QLearning,
        SchedulerKind::Static,
        SchedulerKind::RoundRobin,
        SchedulerKind::LeastLoaded,
        SchedulerKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Dqn => "dqn",
            SchedulerKind::QLearning => "q_learning",
            SchedulerKind::Static => "static",
            SchedulerKind::RoundRobin => "round_robin",
            SchedulerKind::LeastLoaded => "least_loaded",
            SchedulerKind::Random => "random",
        }
    }

    pub fn is_learning(self) -> bool {
        matches!(self, SchedulerKind::Dqn | SchedulerKind::QLearning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resources {
    pub cpu: f64,
    pub memory: f64,
    pub storage: f64,
    pub network: f64,
}

impl Resources {
    pub const fn splat(v: f64) -> Self {
        Self {
            cpu: v,
            memory: v,
            storage: v,
            network: v,
        }
    }
}

impl From<Resources> for ResourceVector {
    fn from(r: Resources) -> Self {
        ResourceVector::new(r.cpu, r.memory, r.storage, r.network)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub name: String,
    pub replicas: usize,
    pub capacity: Resources,
    pub base_service_time_ms: f64,
    /// Overrides the profile-derived demand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<Resources>,
    #[serde(default)]
    pub downstream: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub services: Vec<ServiceConfig>,
    /// Demand shape for services without an explicit `demand`.
    pub profile: ResourceProfileName,
    /// Demand in the non-dominant dimensions.
    pub base_demand: f64,
    /// Dominant-dimension demand is `base_demand * skew`.
    pub skew: f64,
}

/// Chain gateway -> auth -> logic -> store, three replicas each.
pub fn reference_services() -> Vec<ServiceConfig> {
    ["gateway", "auth", "logic", "store"]
        .iter()
        .enumerate()
        .map(|(i, name)| ServiceConfig {
            name: (*name).to_string(),
            replicas: 3,
            capacity: Resources::splat(2.0),
            base_service_time_ms: 10.0,
            demand: None,
            downstream: if i < 3 { vec![i + 1] } else { Vec::new() },
        })
        .collect()
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            services: reference_services(),
            profile: ResourceProfileName(ResourceProfile::CpuBound),
            base_demand: 0.25,
            skew: ResourceProfile::DEFAULT_SKEW,
        }
    }
}

impl TopologyConfig {
    pub fn build(&self, profile: ResourceProfile) -> Result<Topology, ConfigError> {
        let demand = profile.demand(self.base_demand, self.skew);
        let specs = self
            .services
            .iter()
            .enumerate()
            .map(|(i, s)| {
                ServiceSpec::new(
                    i,
                    s.replicas,
                    s.capacity.into(),
                    s.base_service_time_ms,
                    s.demand.map_or(demand, Into::into),
                )
                .with_downstream(s.downstream.clone())
            })
            .collect();
        Topology::new(specs).map_err(|e| ConfigError::invalid("topology.services", e.to_string()))
    }
}

macro_rules! named_enum {
    ($wrapper:ident, $inner:ty, $what:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub struct $wrapper(pub $inner);

        impl Serialize for $wrapper {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.0.name())
            }
        }

        impl<'de> Deserialize<'de> for $wrapper {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                <$inner>::from_name(&s)
                    .map($wrapper)
                    .ok_or_else(|| serde::de::Error::custom(format!(concat!("unknown ", $what, " `{}`"), s)))
            }
        }
    };
}

named_enum!(LoadLevelName, LoadLevel, "load level");
named_enum!(ResourceProfileName, ResourceProfile, "resource profile");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadConfig {
    pub level: LoadLevelName,
    /// Requests per ms at the `low` level.
    pub base_rate_per_ms: f64,
    pub horizon_ms: f64,
    /// Horizon of each training episode.
    pub train_horizon_ms: f64,
    /// Replay this trace instead of generating Poisson arrivals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            level: LoadLevelName(LoadLevel::Medium),
            base_rate_per_ms: 0.16,
            horizon_ms: 10_000.0,
            train_horizon_ms: 2_000.0,
            trace: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub per_hop_latency_ms: f64,
    pub jitter_fraction: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            per_hop_latency_ms: 10.0,
            jitter_fraction: 0.1,
        }
    }
}

impl NetworkConfig {
    pub fn model(&self) -> Result<NetworkModel, ConfigError> {
        NetworkModel::new(self.per_hop_latency_ms, self.jitter_fraction)
            .map_err(|e| ConfigError::invalid("network", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnSettings {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub sync_interval: usize,
    pub episodes: usize,
    pub warmup: usize,
    pub train_every: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_grad_norm: Option<f64>,
}

impl Default for DqnSettings {
    fn default() -> Self {
        let d = DqnConfig::default();
        Self {
            hidden: d.hidden,
            learning_rate: d.learning_rate,
            gamma: d.gamma,
            epsilon_start: d.epsilon.start,
            epsilon_end: d.epsilon.end,
            epsilon_decay_steps: d.epsilon.decay_steps,
            replay_capacity: d.replay_capacity,
            batch_size: d.batch_size,
            sync_interval: d.sync_interval,
            episodes: d.episodes,
            warmup: d.warmup,
            train_every: d.train_every,
            // rewards grow with load; unclipped steps can diverge at ultra_high
            max_grad_norm: Some(10.0),
        }
    }
}

impl DqnSettings {
    pub fn to_config(&self, seed: u64) -> DqnConfig {
        DqnConfig {
            hidden: self.hidden.clone(),
            learning_rate: self.learning_rate,
            gamma: self.gamma,
            epsilon: EpsilonSchedule {
                start: self.epsilon_start,
                end: self.epsilon_end,
                decay_steps: self.epsilon_decay_steps,
            },
            replay_capacity: self.replay_capacity,
            batch_size: self.batch_size,
            sync_interval: self.sync_interval,
            episodes: self.episodes,
            warmup: self.warmup,
            train_every: self.train_every,
            max_grad_norm: self.max_grad_norm,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QLearningSettings {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub bins: u8,
    pub episodes: usize,
}

impl Default for QLearningSettings {
    fn default() -> Self {
        let p = LearningParams::default();
        Self {
            alpha: p.alpha,
            gamma: p.gamma,
            epsilon_start: p.epsilon.start,
            epsilon_end: p.epsilon.end,
            epsilon_decay_steps: p.epsilon.decay_steps,
            bins: 4,
            episodes: 10,
        }
    }
}

impl QLearningSettings {
    pub fn params(&self) -> LearningParams {
        LearningParams {
            alpha: self.alpha,
            gamma: self.gamma,
            epsilon: EpsilonSchedule {
                start: self.epsilon_start,
                end: self.epsilon_end,
                decay_steps: self.epsilon_decay_steps,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub dqn: DqnSettings,
    pub q_learning: QLearningSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Response-time weight per ms, identical for every service.
    pub lambda: f64,
    /// Utilization weight, identical for every service.
    pub alpha: f64,
    /// Multiplies both weights during training.
    pub scale: f64,
    pub timeout_penalty_ms: f64,
    pub response_norm_ms: f64,
    /// Treat the reward as a rate per this many ms, integrated over each
    /// decision window; `null` evaluates it once per decision.
    pub accrual_unit_ms: Option<f64>,
    /// Charge services without completions in a window their smoothed
    /// response instead of the timeout penalty.
    pub carry_forward: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            alpha: 0.5,
            scale: 1.0,
            timeout_penalty_ms: 500.0,
            response_norm_ms: 500.0,
            accrual_unit_ms: Some(1.0),
            carry_forward: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub p_idle: f64,
    pub p_max: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        let m = EnergyModel::default();
        Self {
            p_idle: m.p_idle,
            p_max: m.p_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub levels: Vec<LoadLevelName>,
    pub latencies_ms: Vec<f64>,
    pub profiles: Vec<ResourceProfileName>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            levels: LoadLevel::ALL.iter().copied().map(LoadLevelName).collect(),
            latencies_ms: vec![10.0, 20.0, 30.0, 40.0, 50.0],
            profiles: ResourceProfile::ALL.iter().copied().map(ResourceProfileName).collect(),
        }
    }
}

fn default_schedulers() -> Vec<SchedulerKind> {
    SchedulerKind::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_max_queue() -> Option<usize> {
    SimOptions::default().max_queue
}

fn default_slo() -> f64 {
    250.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default = "default_schedulers")]
    pub schedulers: Vec<SchedulerKind>,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default = "default_slo")]
    pub slo_ms: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub sweeps: SweepConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Per-replica queue bound; `null` for unbounded.
    #[serde(default = "default_max_queue")]
    pub max_queue: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            topology: TopologyConfig::default(),
            workload: WorkloadConfig::default(),
            network: NetworkConfig::default(),
            schedulers: default_schedulers(),
            agent: AgentConfig::default(),
            reward: RewardConfig::default(),
            slo_ms: default_slo(),
            seeds: default_seeds(),
            energy: EnergyConfig::default(),
            sweeps: SweepConfig::default(),
            output_dir: None,
            max_queue: default_max_queue(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        // trace paths are relative to the config file
        if let (Some(trace), Some(dir)) = (cfg.workload.trace.as_mut(), path.parent()) {
            if trace.is_relative() {
                *trace = dir.join(&*trace);
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::invalid(
                "version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.version),
            ));
        }
        if self.schedulers.is_empty() {
            return Err(ConfigError::invalid("schedulers", "at least one scheduler is required"));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::invalid("seeds", "at least one seed is required"));
        }
        let w = &self.workload;
        if !(w.horizon_ms > 0.0 && w.horizon_ms.is_finite()) {
            return Err(ConfigError::invalid("workload.horizon_ms", "must be positive"));
        }
        if !(w.train_horizon_ms > 0.0 && w.train_horizon_ms.is_finite()) {
            return Err(ConfigError::invalid("workload.train_horizon_ms", "must be positive"));
        }
        if !(w.base_rate_per_ms > 0.0 && w.base_rate_per_ms.is_finite()) {
            return Err(ConfigError::invalid("workload.base_rate_per_ms", "must be positive"));
        }
        if !(self.slo_ms > 0.0) {
            return Err(ConfigError::invalid("slo_ms", "must be positive"));
        }
        if self.topology.services.is_empty() {
            return Err(ConfigError::invalid("topology.services", "at least one service is required"));
        }
        if !(self.topology.base_demand > 0.0 && self.topology.skew >= 1.0) {
            return Err(ConfigError::invalid("topology", "base_demand must be > 0 and skew >= 1"));
        }
        self.topology.build(self.topology.profile.0)?;
        self.network.model()?;
        if !(0.0 <= self.energy.p_idle && self.energy.p_idle <= self.energy.p_max) {
            return Err(ConfigError::invalid("energy", "need 0 <= p_idle <= p_max"));
        }
        let r = &self.reward;
        if ![r.lambda, r.alpha, r.scale].iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(ConfigError::invalid("reward", "weights must be finite and >= 0"));
        }
        if r.accrual_unit_ms.is_some_and(|u| !(u > 0.0 && u.is_finite())) {
            return Err(ConfigError::invalid("reward.accrual_unit_ms", "must be positive"));
        }
        if !(r.timeout_penalty_ms >= 0.0 && r.response_norm_ms > 0.0) {
            return Err(ConfigError::invalid("reward", "penalty must be >= 0 and norm > 0"));
        }
        if self.max_queue == Some(0) {
            return Err(ConfigError::invalid("max_queue", "must be at least 1"));
        }
        self.agent
            .dqn
            .to_config(0)
            .validate()
            .map_err(|e| ConfigError::invalid("agent.dqn", e.to_string()))?;
        self.agent
            .q_learning
            .params()
            .validate()
            .map_err(|e| ConfigError::invalid("agent.q_learning", e.to_string()))?;
        if self.agent.q_learning.bins == 0 {
            return Err(ConfigError::invalid("agent.q_learning.bins", "must be at least 1"));
        }
        Ok(())
    }

    pub fn energy_model(&self) -> EnergyModel {
        EnergyModel {
            p_idle: self.energy.p_idle,
            p_max: self.energy.p_max,
        }
    }

    /// Environment settings for `services` services. `scale` multiplies the
    /// reward weights.
    pub fn env_config(&self, services: usize, scale: f64) -> EnvConfig {
        let mut cfg = EnvConfig::new(services);
        let r = &self.reward;
        cfg.weights = RewardWeights::uniform(services, r.lambda, r.alpha).scaled(scale);
        cfg.timeout_penalty_ms = r.timeout_penalty_ms;
        cfg.response_norm_ms = r.response_norm_ms;
        cfg.options.max_queue = self.max_queue;
        cfg.accrual = match r.accrual_unit_ms {
            Some(unit_ms) => RewardAccrual::PerTime { unit_ms },
            None => RewardAccrual::PerDecision,
        };
        cfg.shuffle_slots = true;
        cfg.empty_window = if r.carry_forward {
            EmptyWindow::CarryForward
        } else {
            EmptyWindow::Penalty
        };
        cfg
    }
}
