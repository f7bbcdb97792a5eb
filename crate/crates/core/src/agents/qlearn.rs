//! Tabular Q-learning.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;

use super::{argmax, max_value, AgentError, TrainError};
use crate::env::{Environment, RoutingPolicy};
use crate::rng::{self, stream};
use crate::sim::DecisionPoint;

/// `q + α (r + γ · max_next − q)`. Pass `max_next = 0` for terminal transitions.
pub fn q_update(q: f64, reward: f64, max_next: f64, alpha: f64, gamma: f64) -> f64 {
    q + alpha * (reward + gamma * max_next - q)
}

/// ε-greedy choice: a uniform action with probability ε, otherwise the
/// argmax with ties to the lowest index. Consumes exactly one draw, plus one
/// more when exploring.
pub fn select_action<R: Rng + ?Sized>(values: &[f64], epsilon: f64, rng: &mut R) -> Result<usize, AgentError> {
    if values.is_empty() {
        return Err(AgentError::EmptyActionSet);
    }
    if rng.gen::<f64>() < epsilon {
        Ok(rng.gen_range(0..values.len()))
    } else {
        Ok(argmax(values).unwrap_or(0))
    }
}

/// Linear decay from `start` to `end` over `decay_steps`, then flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        Self {
            start: eps,
            end: eps,
            decay_steps: 0,
        }
    }

    pub fn at(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }

    fn validate(&self) -> Result<(), AgentError> {
        if !((0.0..=1.0).contains(&self.start) && (0.0..=1.0).contains(&self.end)) {
            return Err(AgentError::InvalidParams("epsilon must lie in [0, 1]"));
        }
        Ok(())
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_steps: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningParams {
    /// Learning rate in `(0, 1]`.
    pub alpha: f64,
    /// Discount in `[0, 1)`.
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.95,
            epsilon: EpsilonSchedule::default(),
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(AgentError::InvalidParams("alpha must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(AgentError::InvalidParams("gamma must lie in [0, 1)"));
        }
        self.epsilon.validate()
    }
}

/// Uniform binning of `[0, 1]` features into table keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Discretizer {
    pub bins: u8,
}

impl Default for Discretizer {
    fn default() -> Self {
        Self { bins: 4 }
    }
}

impl Discretizer {
    pub fn key(&self, features: &[f64]) -> Vec<u8> {
        let b = self.bins.max(1);
        features
            .iter()
            .map(|&x| {
                let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
                let bin = libm::floor(x * b as f64) as u8;
                bin.min(b - 1)
            })
            .collect()
    }
}

/// Sparse Q-table; missing rows read as all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    actions: usize,
    discretizer: Discretizer,
    rows: BTreeMap<Vec<u8>, Vec<f64>>,
}

impl QTable {
    pub fn new(actions: usize, discretizer: Discretizer) -> Self {
        Self {
            actions,
            discretizer,
            rows: BTreeMap::new(),
        }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn discretizer(&self) -> Discretizer {
        self.discretizer
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn values(&self, features: &[f64]) -> Vec<f64> {
        self.values_for_key(&self.discretizer.key(features))
    }

    pub fn values_for_key(&self, key: &[u8]) -> Vec<f64> {
        self.rows.get(key).cloned().unwrap_or_else(|| vec![0.0; self.actions])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Vec<u8>, &Vec<f64>)> {
        self.rows.iter()
    }

    fn row_mut(&mut self, key: Vec<u8>) -> &mut Vec<f64> {
        let n = self.actions;
        self.rows.entry(key).or_insert_with(|| vec![0.0; n])
    }

    /// Versioned text: header, action count, bin count, then one sorted
    /// `key values...` line per row with the key's bins joined by `.`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("rlsched-qtable v1\n");
        let _ = writeln!(out, "actions {}", self.actions);
        let _ = writeln!(out, "bins {}", self.discretizer.bins);
        for (key, values) in &self.rows {
            if key.is_empty() {
                out.push('-');
            }
            for (i, b) in key.iter().enumerate() {
                if i > 0 {
                    out.push('.');
                }
                let _ = write!(out, "{b}");
            }
            for v in values {
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, AgentError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let err = |line, reason| AgentError::Parse { line, reason };
        let (n, header) = lines.next().ok_or(err(1, "empty file"))?;
        if header != "rlsched-qtable v1" {
            return Err(err(n, "unknown header"));
        }
        let mut field = |name: &str| -> Result<usize, AgentError> {
            let (n, l) = lines.next().ok_or(err(0, "unexpected end of file"))?;
            l.strip_prefix(name)
                .and_then(|v| v.trim().parse().ok())
                .ok_or(err(n, "bad header field"))
        };
        let actions = field("actions")?;
        let bins = field("bins")?;
        let bins = u8::try_from(bins).map_err(|_| err(3, "bin count too large"))?;
        let mut table = QTable::new(actions, Discretizer { bins });
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key_text = parts.next().ok_or(err(n, "missing key"))?;
            let key = if key_text == "-" {
                Vec::new()
            } else {
                key_text
                    .split('.')
                    .map(|b| b.parse::<u8>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err(n, "bad key"))?
            };
            let values = parts
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| err(n, "bad value"))?;
            if values.len() != actions {
                return Err(err(n, "wrong number of values"));
            }
            table.rows.insert(key, values);
        }
        Ok(table)
    }
}

/// Runs `episodes` of ε-greedy interaction, applying [`q_update`] after
/// every transition. Returns the table and the undiscounted return of each
/// episode.
pub fn train_tabular<E: Environment>(
    env: &mut E,
    params: &LearningParams,
    discretizer: Discretizer,
    episodes: usize,
    seed: u64,
) -> Result<(QTable, Vec<f64>), TrainError<E::Error>> {
    params.validate()?;
    let actions = env.action_count();
    if actions == 0 {
        return Err(AgentError::EmptyActionSet.into());
    }
    let mut table = QTable::new(actions, discretizer);
    let mut rng = rng::seeded(seed, stream::AGENT);
    let mut curve = Vec::with_capacity(episodes);
    let mut step = 0u64;
    for _ in 0..episodes {
        let mut obs = env.reset().map_err(TrainError::Env)?;
        let mut total = 0.0;
        loop {
            let key = discretizer.key(&obs);
            let values = table.values_for_key(&key);
            let a = select_action(&values, params.epsilon.at(step), &mut rng)?;
            let out = env.step(a).map_err(TrainError::Env)?;
            step += 1;
            total += out.reward;
            let max_next = if out.terminal {
                0.0
            } else {
                max_value(&table.values(&out.observation))
            };
            let row = table.row_mut(key);
            row[a] = q_update(row[a], out.reward, max_next, params.alpha, params.gamma);
            if out.terminal || out.truncated {
                break;
            }
            obs = out.observation;
        }
        curve.push(total);
    }
    Ok((table, curve))
}

/// Greedy routing from a trained table.
#[derive(Debug, Clone)]
pub struct QTablePolicy<'a> {
    pub table: &'a QTable,
}

impl RoutingPolicy for QTablePolicy<'_> {
    fn choose(&mut self, decision: &DecisionPoint, features: &[f64]) -> usize {
        let a = argmax(&self.table.values(features)).unwrap_or(0);
        a % decision.candidates.len().max(1)
    }
}
