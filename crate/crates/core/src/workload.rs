//! Arrival streams: Poisson generation at fixed load levels, and replay of
//! resource-monitoring traces.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::rng::{self, stream};
use crate::sim::{Request, SimTime};
use crate::{Resource, ResourceVector};

/// Offered-load level, as a multiple of a base arrival rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoadLevel {
    Low,
    Medium,
    High,
    UltraHigh,
}

impl LoadLevel {
    pub const ALL: [LoadLevel; 4] = [LoadLevel::Low, LoadLevel::Medium, LoadLevel::High, LoadLevel::UltraHigh];

    pub fn multiplier(self) -> f64 {
        match self {
            LoadLevel::Low => 1.0,
            LoadLevel::Medium => 2.0,
            LoadLevel::High => 4.0,
            LoadLevel::UltraHigh => 8.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LoadLevel::Low => "low",
            LoadLevel::Medium => "medium",
            LoadLevel::High => "high",
            LoadLevel::UltraHigh => "ultra_high",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == name)
    }
}

impl fmt::Display for LoadLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which resource dimension dominates per-request demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceProfile {
    CpuBound,
    MemoryBound,
    StorageBound,
    NetworkBound,
}

impl ResourceProfile {
    pub const ALL: [ResourceProfile; 4] = [
        ResourceProfile::CpuBound,
        ResourceProfile::MemoryBound,
        ResourceProfile::StorageBound,
        ResourceProfile::NetworkBound,
    ];

    /// Default ratio of the dominant dimension's demand to the others.
    pub const DEFAULT_SKEW: f64 = 4.0;

    pub fn dominant(self) -> Resource {
        match self {
            ResourceProfile::CpuBound => Resource::Cpu,
            ResourceProfile::MemoryBound => Resource::Memory,
            ResourceProfile::StorageBound => Resource::Storage,
            ResourceProfile::NetworkBound => Resource::Network,
        }
    }

    /// Per-request demand: `base` everywhere, `base * skew` on the dominant dimension.
    pub fn demand(self, base: f64, skew: f64) -> ResourceVector {
        let mut v = ResourceVector::splat(base);
        v[self.dominant()] = base * skew;
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            ResourceProfile::CpuBound => "cpu_bound",
            ResourceProfile::MemoryBound => "memory_bound",
            ResourceProfile::StorageBound => "storage_bound",
            ResourceProfile::NetworkBound => "network_bound",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for ResourceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of a resource-monitoring trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub timestamp_ms: f64,
    pub resource_type: Resource,
    /// Fraction in `[0, 1]`.
    pub utilization: f64,
    pub requested_capacity: f64,
    /// Requests observed at this timestamp; replayed as a batch.
    pub current_load: u64,
    pub response_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceError {
    /// Field-level problem on a 1-based line.
    Field { line: u64, field: &'static str, reason: &'static str },
    /// Timestamp smaller than the previous row's.
    Order { line: u64 },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::Field { line, field, reason } => write!(f, "line {line}: {field}: {reason}"),
            TraceError::Order { line } => write!(f, "line {line}: timestamp decreases"),
        }
    }
}

impl core::error::Error for TraceError {}

impl TraceRecord {
    /// Range checks for one record; `line` is used for error reporting.
    pub fn validate(&self, line: u64) -> Result<(), TraceError> {
        let field = |field, reason| Err(TraceError::Field { line, field, reason });
        if !(self.timestamp_ms.is_finite() && self.timestamp_ms >= 0.0) {
            return field("timestamp_ms", "must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.utilization) {
            return field("utilization", "must lie in [0, 1]");
        }
        if !(self.requested_capacity.is_finite() && self.requested_capacity >= 0.0) {
            return field("requested_capacity", "must be finite and >= 0");
        }
        if !(self.response_time_ms.is_finite() && self.response_time_ms >= 0.0) {
            return field("response_time_ms", "must be finite and >= 0");
        }
        Ok(())
    }
}

/// Validates every record and the non-decreasing timestamp order.
/// Line numbers assume a header on line 1.
pub fn validate_trace(records: &[TraceRecord]) -> Result<(), TraceError> {
    let mut prev = f64::NEG_INFINITY;
    for (i, r) in records.iter().enumerate() {
        let line = i as u64 + 2;
        r.validate(line)?;
        if r.timestamp_ms < prev {
            return Err(TraceError::Order { line });
        }
        prev = r.timestamp_ms;
    }
    Ok(())
}

/// Poisson arrivals with rate `base_rate * level.multiplier()` requests/ms
/// over `[0, horizon_ms)`, sorted, ids `0..`.
pub fn generate_arrivals(base_rate: f64, level: LoadLevel, horizon_ms: f64, seed: u64) -> Vec<Request> {
    poisson_arrivals(base_rate * level.multiplier(), horizon_ms, seed)
}

pub fn poisson_arrivals(rate_per_ms: f64, horizon_ms: f64, seed: u64) -> Vec<Request> {
    let mut out = Vec::new();
    if !(rate_per_ms > 0.0 && horizon_ms > 0.0) {
        return out;
    }
    let mut rng = rng::seeded(seed, stream::ARRIVALS);
    let mut t = 0.0;
    loop {
        t += -libm::log(rng::open_unit(&mut rng)) / rate_per_ms;
        if t >= horizon_ms {
            break;
        }
        out.push(Request::new(out.len() as u64, SimTime::from_ms(t)));
    }
    out
}

/// Expands each record into `current_load` requests at its timestamp.
/// The cluster always admits arrivals at its entry service; `target_service`
/// is recorded as the requests' initial stage.
pub fn trace_to_arrivals(records: &[TraceRecord], target_service: usize) -> Vec<Request> {
    let mut out: Vec<Request> = Vec::new();
    for r in records {
        for _ in 0..r.current_load {
            let mut req = Request::new(out.len() as u64, SimTime::from_ms(r.timestamp_ms));
            req.current_stage = target_service;
            out.push(req);
        }
    }
    // stable: equal timestamps keep file order
    out.sort_by_key(|r| r.arrival_time);
    out
}

/// Schema-conformant synthetic trace: one record per `interval_ms`, with
/// a Poisson batch size and resource types cycling through all four
/// dimensions.
pub fn synthesize_trace(
    base_rate: f64,
    level: LoadLevel,
    horizon_ms: f64,
    interval_ms: f64,
    seed: u64,
) -> Vec<TraceRecord> {
    let mut out = Vec::new();
    if !(interval_ms > 0.0 && horizon_ms > 0.0) {
        return out;
    }
    let mean = base_rate * level.multiplier() * interval_ms;
    let mut rng = rng::seeded(seed, stream::TRACE);
    let mut t = 0.0;
    let mut i = 0usize;
    while t < horizon_ms {
        // Poisson(mean) by counting unit-rate exponential gaps
        let mut load = 0u64;
        let mut acc = -libm::log(rng::open_unit(&mut rng));
        while acc < mean {
            load += 1;
            acc += -libm::log(rng::open_unit(&mut rng));
        }
        let utilization = libm::round((load as f64 / (2.0 * mean.max(1.0))).min(1.0) * 1000.0) / 1000.0;
        let response = libm::round((10.0 + 40.0 * utilization + rng.gen::<f64>() * 5.0) * 100.0) / 100.0;
        out.push(TraceRecord {
            timestamp_ms: t,
            resource_type: Resource::ALL[i % 4],
            utilization,
            requested_capacity: load as f64,
            current_load: load,
            response_time_ms: response,
        });
        t += interval_ms;
        i += 1;
    }
    out
}
