use rand::Rng;

use super::{SimError, SimTime};

/// Per-hop delay applied on every DAG edge traversal.
///
/// A hop takes `per_hop_latency_ms * (1 + jitter_fraction * v)` with `v`
/// uniform in `[-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkModel {
    pub per_hop_latency_ms: f64,
    pub jitter_fraction: f64,
}

impl NetworkModel {
    pub const NONE: NetworkModel = NetworkModel {
        per_hop_latency_ms: 0.0,
        jitter_fraction: 0.0,
    };

    pub fn new(per_hop_latency_ms: f64, jitter_fraction: f64) -> Result<Self, SimError> {
        let m = NetworkModel {
            per_hop_latency_ms,
            jitter_fraction,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.per_hop_latency_ms.is_finite() || self.per_hop_latency_ms < 0.0 {
            return Err(SimError::InvalidNetwork("per-hop latency must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.jitter_fraction) {
            return Err(SimError::InvalidNetwork("jitter fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SimTime {
        if self.per_hop_latency_ms == 0.0 {
            return SimTime::ZERO;
        }
        let v = 2.0 * rng.gen::<f64>() - 1.0;
        SimTime::from_ms(self.per_hop_latency_ms * (1.0 + self.jitter_fraction * v))
    }
}
