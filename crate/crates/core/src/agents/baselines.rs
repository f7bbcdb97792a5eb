//! Non-learning routing policies.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::env::RoutingPolicy;
use crate::rng::SimRng;
use crate::sim::DecisionPoint;

// Every rule below depends on replica ids, never on candidate order.

fn position_of(decision: &DecisionPoint, replica: usize) -> usize {
    decision.candidates.iter().position(|c| c.replica == replica).unwrap_or(0)
}

/// Always the lowest-numbered replica.
pub fn static_choice(decision: &DecisionPoint) -> usize {
    let first = decision.candidates.iter().map(|c| c.replica).min().unwrap_or(0);
    position_of(decision, first)
}

/// Fewest queued requests, then lowest CPU in use, then lowest replica id.
pub fn least_loaded(decision: &DecisionPoint) -> usize {
    let mut best = 0;
    for (i, c) in decision.candidates.iter().enumerate().skip(1) {
        let b = &decision.candidates[best];
        let ord = c
            .queue_len
            .cmp(&b.queue_len)
            .then(c.in_use.cpu.partial_cmp(&b.in_use.cpu).unwrap_or(Ordering::Equal))
            .then(c.replica.cmp(&b.replica));
        if ord == Ordering::Less {
            best = i;
        }
    }
    best
}

pub fn random_choice<R: Rng + ?Sized>(decision: &DecisionPoint, rng: &mut R) -> usize {
    rng.gen_range(0..decision.candidates.len().max(1))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Static;

impl RoutingPolicy for Static {
    fn choose(&mut self, decision: &DecisionPoint, _: &[f64]) -> usize {
        static_choice(decision)
    }
}

/// Cycles through replicas with one counter per service.
#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    counters: Vec<usize>,
}

impl RoundRobin {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next(&mut self, decision: &DecisionPoint) -> usize {
        if self.counters.len() <= decision.service {
            self.counters.resize(decision.service + 1, 0);
        }
        let c = &mut self.counters[decision.service];
        let mut ids: Vec<usize> = decision.candidates.iter().map(|c| c.replica).collect();
        ids.sort_unstable();
        let turn = *c % ids.len().max(1);
        *c += 1;
        ids.get(turn).map_or(0, |&r| position_of(decision, r))
    }
}

impl RoutingPolicy for RoundRobin {
    fn choose(&mut self, decision: &DecisionPoint, _: &[f64]) -> usize {
        self.next(decision)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LeastLoaded;

impl RoutingPolicy for LeastLoaded {
    fn choose(&mut self, decision: &DecisionPoint, _: &[f64]) -> usize {
        least_loaded(decision)
    }
}

#[derive(Debug, Clone)]
pub struct RandomChoice {
    rng: SimRng,
}

impl RandomChoice {
    pub fn new(rng: SimRng) -> Self {
        Self { rng }
    }
}

impl RoutingPolicy for RandomChoice {
    fn choose(&mut self, decision: &DecisionPoint, _: &[f64]) -> usize {
        random_choice(decision, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Cluster, NetworkModel, Request, SimTime, Topology};
    use crate::ResourceVector;
    use alloc::vec;

    /// Builds a real decision point, then overwrites the candidate loads.
    fn decision(loads: &[(usize, f64)]) -> DecisionPoint {
        let t = Topology::chain(1, loads.len(), ResourceVector::splat(4.0), 10.0, ResourceVector::splat(1.0)).unwrap();
        let mut c = Cluster::new(t, NetworkModel::NONE, 0).unwrap();
        c.inject_arrival(Request::new(0, SimTime::ZERO)).unwrap();
        let mut dp = c.advance().unwrap().decision.unwrap();
        for (cand, &(q, cpu)) in dp.candidates.iter_mut().zip(loads) {
            cand.queue_len = q;
            cand.in_use.cpu = cpu;
        }
        dp
    }

    #[test]
    fn round_robin_cycles() {
        let dp = decision(&[(0, 0.0); 3]);
        let mut rr = RoundRobin::new();
        let picks: Vec<usize> = (0..6).map(|_| rr.next(&dp)).collect();
        assert_eq!(picks, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn least_loaded_prefers_short_queue_then_cpu() {
        assert_eq!(least_loaded(&decision(&[(2, 0.0), (0, 0.0), (1, 0.0)])), 1);
        assert_eq!(least_loaded(&decision(&[(1, 3.0), (1, 1.0), (1, 2.0)])), 1);
        assert_eq!(least_loaded(&decision(&[(0, 1.0), (0, 1.0)])), 0);
    }

    #[test]
    fn static_is_always_zero() {
        let dp = decision(&[(5, 4.0), (0, 0.0)]);
        assert_eq!(Static.choose(&dp, &[]), 0);
    }

    #[test]
    fn random_stays_in_range() {
        let dp = decision(&[(0, 0.0); 3]);
        let mut r = RandomChoice::new(crate::rng::seeded(4, 0));
        let mut seen = [false; 3];
        for _ in 0..100 {
            seen[r.choose(&dp, &[])] = true;
        }
        assert_eq!(seen, [true; 3]);
    }
}
