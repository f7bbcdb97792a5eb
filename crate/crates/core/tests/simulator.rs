mod support;

use proptest::prelude::*;
use rlsched_core::agents::{LeastLoaded, RandomChoice, RoundRobin, Static};
use rlsched_core::env::RoutingPolicy;
use rlsched_core::rng::{seeded, stream};
use rlsched_core::sim::{
    mm1_mean_response, run_mm1_validation, Cluster, NetworkModel, Request, RequestStatus, ServiceSpec, SimTime,
    Topology,
};
use rlsched_core::workload::poisson_arrivals;
use rlsched_core::ResourceVector;
use support::drive;

fn diamond() -> Topology {
    let cap = ResourceVector::new(2.0, 2.0, 2.0, 2.0);
    let d = ResourceVector::new(1.0, 0.25, 0.25, 0.25);
    Topology::new(vec![
        ServiceSpec::new(0, 2, cap, 5.0, d).with_downstream(vec![1, 2]),
        ServiceSpec::new(1, 3, cap, 8.0, d).with_downstream(vec![3]),
        ServiceSpec::new(2, 1, cap, 3.0, d).with_downstream(vec![3]),
        ServiceSpec::new(3, 2, cap, 6.0, d),
    ])
    .unwrap()
}

fn loaded_cluster(rate: f64, seed: u64, latency: f64) -> Cluster {
    let mut c = Cluster::new(diamond(), NetworkModel::new(latency, 0.3).unwrap(), seed).unwrap();
    for r in poisson_arrivals(rate, 2_000.0, seed) {
        c.inject_arrival(r).unwrap();
    }
    c
}

fn policy_for(kind: u8, seed: u64) -> Box<dyn RoutingPolicy> {
    match kind % 4 {
        0 => Box::new(Static),
        1 => Box::new(RoundRobin::new()),
        2 => Box::new(LeastLoaded),
        _ => Box::new(RandomChoice::new(seeded(seed, stream::POLICY))),
    }
}

struct Dyn(Box<dyn RoutingPolicy>);

impl RoutingPolicy for Dyn {
    fn choose(&mut self, d: &rlsched_core::sim::DecisionPoint, f: &[f64]) -> usize {
        self.0.choose(d, f)
    }
}

#[test]
fn mm1_heavy_load_matches_closed_form() {
    let mean = run_mm1_validation(0.9, 1.0, 100_000, 7).unwrap();
    let expect = mm1_mean_response(0.9, 1.0);
    assert!((expect - 10.0).abs() < 1e-12);
    assert!((mean - expect).abs() / expect < 0.10, "{mean}");
}

#[test]
fn mm1_error_shrinks_with_more_requests() {
    let expect = mm1_mean_response(0.5, 1.0);
    let small = (run_mm1_validation(0.5, 1.0, 1_000, 3).unwrap() - expect).abs();
    let large = (run_mm1_validation(0.5, 1.0, 200_000, 3).unwrap() - expect).abs();
    assert!(large / expect < 0.05);
    assert!(large < small.max(0.02 * expect));
}

#[test]
fn paths_follow_topological_order() {
    let mut c = loaded_cluster(0.3, 5, 2.0);
    drive(&mut c, &mut LeastLoaded, |_| {});
    let rank = c.topology().rank();
    for r in c.requests() {
        let ranks: Vec<usize> = r.path_taken.iter().map(|&(s, _)| rank[s]).collect();
        assert!(ranks.windows(2).all(|w| w[0] < w[1]), "{:?}", r.path_taken);
        if r.status == RequestStatus::Completed {
            assert_eq!(r.path_taken.first().map(|p| p.0), Some(0));
            assert_eq!(r.path_taken.last().map(|p| p.0), Some(3));
            assert!(r.completion_time.unwrap() >= r.arrival_time);
        }
    }
}

#[test]
fn hop_latency_delays_completion() {
    let run = |latency: f64| {
        let t = Topology::chain(4, 1, ResourceVector::splat(1.0), 5.0, ResourceVector::splat(1.0)).unwrap();
        let mut c = Cluster::new(t, NetworkModel::new(latency, 0.0).unwrap(), 1).unwrap();
        c.inject_arrival(Request::new(0, SimTime::ZERO)).unwrap();
        drive(&mut c, &mut Static, |_| {});
        c.completions()[0].response_ms()
    };
    // three hops, identical service draws
    assert!((run(20.0) - run(10.0) - 30.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_capacity_and_clock(seed in any::<u64>(), rate in 0.05f64..1.5, kind in any::<u8>(),
                                        latency in 0.0f64..20.0) {
        let mut c = loaded_cluster(rate, seed, latency);
        let mut policy = Dyn(policy_for(kind, seed));
        let mut last = SimTime::ZERO;
        let mut ok = true;
        drive(&mut c, &mut policy, |c| {
            ok &= c.clock() >= last;
            last = c.clock();
            ok &= c.injected() == c.completed() + c.rejected() + c.in_flight();
            for s in 0..c.topology().len() {
                for r in c.replicas(s) {
                    ok &= r.in_use.fits_within(&r.capacity);
                    ok &= r.queue_len() <= 64;
                }
            }
        });
        prop_assert!(ok);
        prop_assert!(c.is_drained());
        prop_assert_eq!(c.in_flight(), 0);
        prop_assert_eq!(c.injected(), c.completed() + c.rejected());
    }

    #[test]
    fn identical_inputs_give_identical_runs(seed in any::<u64>(), kind in any::<u8>()) {
        let run = || {
            let mut c = loaded_cluster(0.8, seed, 5.0);
            let mut policy = Dyn(policy_for(kind, seed));
            let mut trace = Vec::new();
            drive(&mut c, &mut policy, |c| trace.push((c.clock(), c.completed(), c.rejected())));
            (trace, c.completions().to_vec())
        };
        prop_assert_eq!(run(), run());
    }
}
