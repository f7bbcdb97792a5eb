mod support;

use proptest::prelude::*;
use rlsched_core::agents::{LeastLoaded, Static};
use rlsched_core::metrics::{
    cost_efficiency, energy, report_for_run, scheduling_efficiency, EnergyModel,
};
use rlsched_core::sim::{Cluster, NetworkModel, Topology};
use rlsched_core::workload::poisson_arrivals;
use rlsched_core::ResourceVector;

fn finished(rate: f64, static_routing: bool) -> Cluster {
    let t = Topology::chain(2, 3, ResourceVector::splat(2.0), 10.0, ResourceVector::new(1.0, 0.5, 0.5, 0.5)).unwrap();
    let mut c = Cluster::new(t, NetworkModel::new(2.0, 0.1).unwrap(), 3).unwrap();
    for r in poisson_arrivals(rate, 5_000.0, 3) {
        c.inject_arrival(r).unwrap();
    }
    if static_routing {
        support::drive(&mut c, &mut Static, |_| {});
    } else {
        support::drive(&mut c, &mut LeastLoaded, |_| {});
    }
    c
}

#[test]
fn report_for_finished_run_is_consistent() {
    let c = finished(0.2, false);
    let r = report_for_run(&c, &EnergyModel::default(), 250.0).unwrap();
    r.check_conservation().unwrap();
    assert_eq!(r.offered, c.injected());
    assert!(r.p95_response_ms >= r.mean_response_ms * 0.5);
    let u = r.utilization_pct;
    for v in [u.cpu, u.memory, u.storage, u.network, u.overall, r.scheduling_efficiency_pct] {
        assert!((0.0..=100.0).contains(&v), "{v}");
    }
    // memory demand is half the cpu demand on every replica
    assert!((u.memory - u.cpu / 2.0).abs() < 1e-9);
    // six replicas idle at 10 W for the whole run is a lower bound
    assert!(r.energy_joules >= 6.0 * 10.0 * c.clock().as_secs());
}

#[test]
fn overload_under_static_routing_costs_efficiency() {
    let m = EnergyModel::default();
    let ll = report_for_run(&finished(0.3, false), &m, 250.0).unwrap();
    let st = report_for_run(&finished(0.3, true), &m, 250.0).unwrap();
    assert!(st.rejected > 0);
    assert!(st.scheduling_efficiency_pct < ll.scheduling_efficiency_pct);
    assert!(st.mean_response_ms > ll.mean_response_ms);
}

proptest! {
    #[test]
    fn efficiency_falls_with_rejections(within in 0u64..100, completed_late in 0u64..100, extra in 0u64..100) {
        let offered = within + completed_late;
        prop_assume!(offered > 0);
        let a = scheduling_efficiency(within, offered).unwrap();
        let b = scheduling_efficiency(within, offered + extra).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn cost_efficiency_tops_out_at_the_cheapest(runs in prop::collection::vec((1.0f64..1e4, 1u64..1000), 1..6)) {
        let eff = cost_efficiency(&runs).unwrap();
        let costs: Vec<f64> = runs.iter().map(|&(e, c)| e / c as f64).collect();
        let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
        for (c, e) in costs.iter().zip(&eff) {
            prop_assert!((0.0..=100.0).contains(e));
            prop_assert_eq!(*e == 100.0, *c == best);
        }
    }

    #[test]
    fn energy_grows_with_utilization(u in prop::collection::vec(0.0f64..10.0, 1..5), bump in 0.0f64..5.0,
                                     idle in 0.0f64..50.0, span in 0.0f64..50.0) {
        let m = EnergyModel { p_idle: idle, p_max: idle + span };
        let base = energy(&u, &m, 10.0);
        let mut more = u.clone();
        more[0] += bump;
        prop_assert!(energy(&more, &m, 10.0) >= base);
    }
}
