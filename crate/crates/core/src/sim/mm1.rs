use alloc::vec;

use super::{Cluster, NetworkModel, Request, ServiceSpec, SimError, SimOptions, SimTime, Topology};
use crate::rng::{self, stream};
use crate::ResourceVector;

/// Closed-form M/M/1 mean response time `1 / (mu - lambda)`.
pub fn mm1_mean_response(arrival_rate: f64, service_rate: f64) -> f64 {
    1.0 / (service_rate - arrival_rate)
}

/// Runs the simulator as an M/M/1 queue and returns the empirical mean
/// response time (ms) over `requests` completed requests.
///
/// Rates are per millisecond. The cluster is one service with one replica
/// that fits exactly one request, no contention scaling and an unbounded
/// queue.
pub fn run_mm1_validation(
    arrival_rate: f64,
    service_rate: f64,
    requests: u64,
    seed: u64,
) -> Result<f64, SimError> {
    for rate in [arrival_rate, service_rate] {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(SimError::InvalidRate(rate));
        }
    }
    if arrival_rate >= service_rate {
        return Err(SimError::UnstableSystem {
            arrival_rate,
            service_rate,
        });
    }
    let slot = ResourceVector::new(1.0, 0.0, 0.0, 0.0);
    let spec = ServiceSpec::new(0, 1, slot, 1.0 / service_rate, slot);
    let options = SimOptions {
        max_queue: None,
        contention_scaling: false,
        ..SimOptions::default()
    };
    let mut cluster = Cluster::with_options(Topology::new(vec![spec])?, NetworkModel::NONE, seed, options)?;

    let mut arrivals = rng::seeded(seed, stream::ARRIVALS);
    let mut t_ms = 0.0;
    for id in 0..requests {
        t_ms += -libm::log(rng::open_unit(&mut arrivals)) / arrival_rate;
        cluster.inject_arrival(Request::new(id, SimTime::from_ms(t_ms)))?;
    }
    while !cluster.is_drained() {
        if let Some(dp) = cluster.advance()?.decision {
            cluster.place(&dp, 0)?;
        }
    }
    let n = cluster.completions().len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = cluster.completions().iter().map(|c| c.response_ms()).sum();
    Ok(total / n as f64)
}
