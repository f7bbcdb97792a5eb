//! Oracles and fixtures shared by integration tests.
#![allow(dead_code)]

use rand::Rng;
use rlsched_core::agents::ValueNetwork;
use rlsched_core::env::{Environment, RoutingPolicy, StepOutcome, Transition};
use rlsched_core::rng::{seeded, stream, SimRng};
use rlsched_core::sim::{Cluster, SimError};

/// Five cells in a row. Action 0 moves left, 1 moves right; both are
/// clamped at the ends. Pushing left at cell 0 pays `LEFT_REWARD`, pushing
/// right at cell 4 pays `RIGHT_REWARD`, everything else pays 0.
pub const CELLS: usize = 5;
pub const LEFT_REWARD: f64 = 0.1;
pub const RIGHT_REWARD: f64 = 1.0;

pub fn chain_step(s: usize, a: usize) -> (usize, f64) {
    match a {
        0 if s == 0 => (0, LEFT_REWARD),
        0 => (s - 1, 0.0),
        _ if s == CELLS - 1 => (s, RIGHT_REWARD),
        _ => (s + 1, 0.0),
    }
}

/// Q* by value iteration to a fixed point.
pub fn value_iteration(gamma: f64) -> Vec<[f64; 2]> {
    let mut q = vec![[0.0f64; 2]; CELLS];
    loop {
        let mut next = q.clone();
        for s in 0..CELLS {
            for a in 0..2 {
                let (s2, r) = chain_step(s, a);
                next[s][a] = r + gamma * q[s2][0].max(q[s2][1]);
            }
        }
        let delta = (0..CELLS)
            .flat_map(|s| (0..2).map(move |a| (s, a)))
            .map(|(s, a)| (next[s][a] - q[s][a]).abs())
            .fold(0.0, f64::max);
        q = next;
        if delta < 1e-14 {
            return q;
        }
    }
}

pub fn greedy(q: &[[f64; 2]]) -> Vec<usize> {
    q.iter().map(|row| usize::from(row[1] > row[0])).collect()
}

pub fn one_hot(s: usize) -> Vec<f64> {
    let mut v = vec![0.0; CELLS];
    v[s] = 1.0;
    v
}

/// The chain as an episodic environment with one-hot observations, uniform
/// random start cells and a fixed episode length.
pub struct ChainMdp {
    rng: SimRng,
    state: usize,
    t: usize,
    pub horizon: usize,
}

impl ChainMdp {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: seeded(seed, stream::SIMULATION),
            state: 0,
            t: 0,
            horizon: 20,
        }
    }
}

impl Environment for ChainMdp {
    type Error = ();

    fn action_count(&self) -> usize {
        2
    }

    fn observation_len(&self) -> usize {
        CELLS
    }

    fn reset(&mut self) -> Result<Vec<f64>, ()> {
        self.state = self.rng.gen_range(0..CELLS);
        self.t = 0;
        Ok(one_hot(self.state))
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome, ()> {
        let (s2, r) = chain_step(self.state, action);
        self.state = s2;
        self.t += 1;
        Ok(StepOutcome {
            observation: one_hot(s2),
            reward: r,
            terminal: false,
            truncated: self.t >= self.horizon,
        })
    }
}

/// Max over parameters of `|analytic − numeric| / max(|analytic|, |numeric|, floor)`
/// using central differences with step `h`.
pub fn gradient_check(net: &ValueNetwork, batch: &[Transition], targets: &[f64], h: f64) -> f64 {
    let (_, grad) = net.loss_and_gradient(batch, targets).unwrap();
    let analytic = grad.flatten();
    let base = net.params();
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_params(&p).unwrap();
        let up = probe.loss(batch, targets).unwrap();
        p[i] = base[i] - h;
        probe.set_params(&p).unwrap();
        let down = probe.loss(batch, targets).unwrap();
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

pub fn random_batch(rng: &mut SimRng, inputs: usize, actions: usize, len: usize) -> (Vec<Transition>, Vec<f64>) {
    let batch: Vec<Transition> = (0..len)
        .map(|_| Transition {
            state: (0..inputs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            action: rng.gen_range(0..actions),
            reward: rng.gen_range(-1.0..1.0),
            next_state: (0..inputs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            terminal: false,
        })
        .collect();
    let targets = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
    (batch, targets)
}

/// Runs `cluster` to exhaustion, routing each decision with `policy` and
/// calling `check` after every event.
pub fn drive<P: RoutingPolicy>(cluster: &mut Cluster, policy: &mut P, mut check: impl FnMut(&Cluster)) {
    loop {
        match cluster.advance() {
            Ok(adv) => {
                if let Some(dp) = adv.decision {
                    let choice = policy.choose(&dp, &[]);
                    cluster.place(&dp, choice).unwrap();
                }
                check(cluster);
            }
            Err(SimError::EmptyQueue) => break,
            Err(e) => panic!("simulation failed: {e}"),
        }
    }
}
