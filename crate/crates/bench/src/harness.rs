//! Training, evaluation, and the experiment families.
//!
//! Every (axis value, scheduler, seed) cell is independent: it builds its
//! own simulator, environment and agent. Learning schedulers train on
//! episodes seeded from `seed` and are evaluated greedily on arrivals and a
//! cluster seeded from `seed + EVAL_SEED_OFFSET`, so changing the evaluation
//! seeds never changes what was learned. All schedulers in a cell see the
//! same evaluation arrivals.

use rayon::prelude::*;
use rlsched_core::agents::{
    train_dqn, train_tabular, AgentError, Discretizer, DqnPolicy, LeastLoaded, QTable, QTablePolicy, RandomChoice,
    RoundRobin, Static, TrainError, ValueNetwork,
};
use rlsched_core::env::{run_routing_episode, ArrivalSource, EnvError, RoutingPolicy, SchedEnv};
use rlsched_core::metrics::{apply_cost_efficiency, report_for_run, MetricsError, MetricsReport};
use rlsched_core::rng::{seeded, stream};
use rlsched_core::sim::{NetworkModel, Request, Topology};
use rlsched_core::workload::{generate_arrivals, trace_to_arrivals, LoadLevel, ResourceProfile};

use crate::config::{ConfigError, ExperimentConfig, SchedulerKind};
use crate::trace::{load_trace, TraceFileError};

pub const EVAL_SEED_OFFSET: u64 = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceFileError),
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("agent: {0}")]
    Agent(#[from] AgentError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}

impl From<TrainError<EnvError>> for HarnessError {
    fn from(e: TrainError<EnvError>) -> Self {
        match e {
            TrainError::Env(e) => HarnessError::Env(e),
            TrainError::Agent(e) => HarnessError::Agent(e),
        }
    }
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Dqn(ValueNetwork),
    QTable(QTable),
}

#[derive(Debug, Clone)]
pub struct RunCell {
    pub axis_value: String,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub report: MetricsReport,
    /// Undiscounted return per training episode; empty for baselines.
    pub learning_curve: Vec<f64>,
    pub model: Option<TrainedModel>,
}

/// One experiment's cells, ordered by axis value, then scheduler, then seed.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: String,
    pub values: Vec<String>,
    pub schedulers: Vec<SchedulerKind>,
    pub seeds: Vec<u64>,
    pub cells: Vec<RunCell>,
}

impl SweepResult {
    pub fn cells_for<'a>(&'a self, axis_value: &'a str, scheduler: SchedulerKind) -> impl Iterator<Item = &'a RunCell> {
        self.cells
            .iter()
            .filter(move |c| c.axis_value == axis_value && c.scheduler == scheduler)
    }

    /// Seed mean and sample standard deviation of `metric`.
    pub fn stat(&self, axis_value: &str, scheduler: SchedulerKind, metric: impl Fn(&MetricsReport) -> f64) -> (f64, f64) {
        let xs: Vec<f64> = self.cells_for(axis_value, scheduler).map(|c| metric(&c.report)).collect();
        mean_std(&xs)
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Everything that varies along a sweep axis.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub level: LoadLevel,
    pub profile: ResourceProfile,
    pub network: NetworkModel,
}

impl Scenario {
    pub fn reference(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        Ok(Self {
            label: String::new(),
            level: cfg.workload.level.0,
            profile: cfg.topology.profile.0,
            network: cfg.network.model()?,
        })
    }
}

struct Prepared {
    topology: Topology,
    trace: Option<Vec<Request>>,
}

fn prepare(cfg: &ExperimentConfig, scenario: &Scenario) -> Result<Prepared, HarnessError> {
    let topology = cfg.topology.build(scenario.profile)?;
    let trace = match &cfg.workload.trace {
        Some(path) => Some(trace_to_arrivals(&load_trace(path)?, topology.entry())),
        None => None,
    };
    Ok(Prepared { topology, trace })
}

fn source(cfg: &ExperimentConfig, p: &Prepared, scenario: &Scenario, horizon_ms: f64) -> ArrivalSource {
    match &p.trace {
        Some(reqs) => ArrivalSource::Fixed(reqs.clone()),
        None => ArrivalSource::Poisson {
            rate_per_ms: cfg.workload.base_rate_per_ms * scenario.level.multiplier(),
            horizon_ms,
        },
    }
}

fn eval_arrivals(cfg: &ExperimentConfig, p: &Prepared, scenario: &Scenario, eval_seed: u64) -> Vec<Request> {
    match &p.trace {
        Some(reqs) => reqs.clone(),
        None => generate_arrivals(cfg.workload.base_rate_per_ms, scenario.level, cfg.workload.horizon_ms, eval_seed),
    }
}

/// Trains a learning scheduler for one seed. Baselines return `None`.
pub fn train(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    kind: SchedulerKind,
    seed: u64,
) -> Result<Option<(TrainedModel, Vec<f64>)>, HarnessError> {
    if !kind.is_learning() {
        return Ok(None);
    }
    let p = prepare(cfg, scenario)?;
    let n = p.topology.len();
    let env_cfg = cfg.env_config(n, cfg.reward.scale);
    let src = source(cfg, &p, scenario, cfg.workload.train_horizon_ms);
    let mut env = SchedEnv::new(p.topology, scenario.network, env_cfg, src, seed)?;
    Ok(Some(match kind {
        SchedulerKind::Dqn => {
            let (net, curve) = train_dqn(&mut env, &cfg.agent.dqn.to_config(seed))?;
            (TrainedModel::Dqn(net), curve)
        }
        _ => {
            let q = &cfg.agent.q_learning;
            let (table, curve) = train_tabular(&mut env, &q.params(), Discretizer { bins: q.bins }, q.episodes, seed)?;
            (TrainedModel::QTable(table), curve)
        }
    }))
}

/// Plays the evaluation episode for `seed` and reports its metrics.
pub fn evaluate(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    kind: SchedulerKind,
    model: Option<&TrainedModel>,
    seed: u64,
) -> Result<MetricsReport, HarnessError> {
    let p = prepare(cfg, scenario)?;
    let eval_seed = seed + EVAL_SEED_OFFSET;
    let arrivals = eval_arrivals(cfg, &p, scenario, eval_seed);
    let env_cfg = cfg.env_config(p.topology.len(), 1.0);
    let mut env = SchedEnv::new(p.topology, scenario.network, env_cfg, ArrivalSource::Fixed(arrivals), eval_seed)?;
    let mut policy: Box<dyn RoutingPolicy + '_> = match (kind, model) {
        (SchedulerKind::Dqn, Some(TrainedModel::Dqn(net))) => Box::new(DqnPolicy { net }),
        (SchedulerKind::QLearning, Some(TrainedModel::QTable(table))) => Box::new(QTablePolicy { table }),
        (SchedulerKind::Static, _) => Box::new(Static),
        (SchedulerKind::RoundRobin, _) => Box::new(RoundRobin::new()),
        (SchedulerKind::LeastLoaded, _) => Box::new(LeastLoaded),
        (SchedulerKind::Random, _) => Box::new(RandomChoice::new(seeded(eval_seed, stream::POLICY))),
        _ => return Err(AgentError::InvalidParams("learning scheduler evaluated without a model").into()),
    };
    run_routing_episode(&mut env, eval_seed, policy.as_mut())?;
    let cluster = env.cluster().expect("episode ran");
    Ok(report_for_run(cluster, &cfg.energy_model(), cfg.slo_ms)?)
}

fn run_cell(cfg: &ExperimentConfig, scenario: &Scenario, kind: SchedulerKind, seed: u64) -> Result<RunCell, HarnessError> {
    let trained = train(cfg, scenario, kind, seed)?;
    let (model, curve) = match trained {
        Some((m, c)) => (Some(m), c),
        None => (None, Vec::new()),
    };
    let report = evaluate(cfg, scenario, kind, model.as_ref(), seed)?;
    Ok(RunCell {
        axis_value: scenario.label.clone(),
        scheduler: kind,
        seed,
        report,
        learning_curve: curve,
        model,
    })
}

/// Runs every (scenario, scheduler, seed) cell, in parallel, and fills in
/// cost efficiency across schedulers within each (scenario, seed).
pub fn run_grid(cfg: &ExperimentConfig, axis: &str, scenarios: &[Scenario]) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let jobs: Vec<(&Scenario, SchedulerKind, u64)> = scenarios
        .iter()
        .flat_map(|s| cfg.schedulers.iter().flat_map(move |&k| cfg.seeds.iter().map(move |&seed| (s, k, seed))))
        .collect();
    let mut cells = jobs
        .par_iter()
        .map(|&(s, k, seed)| run_cell(cfg, s, k, seed))
        .collect::<Result<Vec<_>, _>>()?;

    for s in scenarios {
        for &seed in &cfg.seeds {
            let idx: Vec<usize> = (0..cells.len())
                .filter(|&i| cells[i].axis_value == s.label && cells[i].seed == seed)
                .collect();
            let mut reports: Vec<MetricsReport> = idx.iter().map(|&i| cells[i].report.clone()).collect();
            // a scheduler with no completions has no cost per request
            if reports.iter().all(|r| r.completed > 0) {
                apply_cost_efficiency(&mut reports)?;
            } else {
                reports.iter_mut().for_each(|r| r.cost_efficiency_pct = 0.0);
            }
            for (&i, r) in idx.iter().zip(reports) {
                cells[i].report = r;
            }
        }
    }
    Ok(SweepResult {
        axis: axis.to_string(),
        values: scenarios.iter().map(|s| s.label.clone()).collect(),
        schedulers: cfg.schedulers.clone(),
        seeds: cfg.seeds.clone(),
        cells,
    })
}

/// Every configured scheduler on the reference scenario.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    let mut s = Scenario::reference(cfg)?;
    s.label = cfg.workload.level.0.name().to_string();
    run_grid(cfg, "scheduler", &[s])
}

pub fn sweep_load(cfg: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    let base = Scenario::reference(cfg)?;
    let scenarios: Vec<Scenario> = cfg
        .sweeps
        .levels
        .iter()
        .map(|l| Scenario {
            label: l.0.name().to_string(),
            level: l.0,
            ..base.clone()
        })
        .collect();
    run_grid(cfg, "load", &scenarios)
}

pub fn sweep_latency(cfg: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    let base = Scenario::reference(cfg)?;
    let scenarios = cfg
        .sweeps
        .latencies_ms
        .iter()
        .map(|&ms| {
            let network = NetworkModel::new(ms, cfg.network.jitter_fraction).map_err(|e| ConfigError::Invalid {
                field: "sweeps.latencies_ms".into(),
                reason: e.to_string(),
            })?;
            Ok(Scenario {
                label: format!("{ms}"),
                network,
                ..base.clone()
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    run_grid(cfg, "latency", &scenarios)
}

pub fn sweep_resource(cfg: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    let base = Scenario::reference(cfg)?;
    let scenarios: Vec<Scenario> = cfg
        .sweeps
        .profiles
        .iter()
        .map(|p| Scenario {
            label: p.0.name().to_string(),
            profile: p.0,
            ..base.clone()
        })
        .collect();
    run_grid(cfg, "resource", &scenarios)
}
