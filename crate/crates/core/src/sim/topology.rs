use alloc::vec;
use alloc::vec::Vec;

use super::SimError;
use crate::ResourceVector;

/// Static description of one microservice.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceSpec {
    /// Position of the service in the topology list.
    pub id: usize,
    pub replicas: usize,
    pub capacity_per_replica: ResourceVector,
    /// Mean service time on an idle replica, milliseconds.
    pub base_service_time_ms: f64,
    pub demand_per_request: ResourceVector,
    pub downstream: Vec<usize>,
}

impl ServiceSpec {
    pub fn new(
        id: usize,
        replicas: usize,
        capacity_per_replica: ResourceVector,
        base_service_time_ms: f64,
        demand_per_request: ResourceVector,
    ) -> Self {
        Self {
            id,
            replicas,
            capacity_per_replica,
            base_service_time_ms,
            demand_per_request,
            downstream: Vec::new(),
        }
    }

    pub fn with_downstream(mut self, downstream: Vec<usize>) -> Self {
        self.downstream = downstream;
        self
    }
}

/// A validated service DAG.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    services: Vec<ServiceSpec>,
    order: Vec<usize>,
    entry: usize,
}

impl Topology {
    pub fn new(services: Vec<ServiceSpec>) -> Result<Self, SimError> {
        if services.is_empty() {
            return Err(SimError::EmptyTopology);
        }
        let n = services.len();
        for (i, s) in services.iter().enumerate() {
            let bad = |reason| Err(SimError::InvalidSpec { service: i, reason });
            if s.id != i {
                return bad("service id must equal its position");
            }
            if s.replicas == 0 {
                return bad("at least one replica required");
            }
            if !(s.base_service_time_ms.is_finite() && s.base_service_time_ms > 0.0) {
                return bad("base service time must be finite and > 0");
            }
            if !s.capacity_per_replica.is_valid() || !s.demand_per_request.is_valid() {
                return bad("resource vectors must be finite and non-negative");
            }
            if !s.demand_per_request.fits_within(&s.capacity_per_replica) {
                return bad("per-request demand exceeds replica capacity");
            }
            if s.downstream.iter().any(|&d| d >= n) {
                return Err(SimError::UnknownService(
                    *s.downstream.iter().find(|&&d| d >= n).unwrap(),
                ));
            }
        }

        // Kahn's algorithm, lowest index first so the order is canonical.
        let mut indegree = vec![0usize; n];
        for s in &services {
            for &d in &s.downstream {
                indegree[d] += 1;
            }
        }
        let entry = (0..n).find(|&i| indegree[i] == 0).ok_or(SimError::CyclicTopology)?;
        let mut ready: alloc::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &d in &services[i].downstream {
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    ready.insert(d);
                }
            }
        }
        if order.len() != n {
            return Err(SimError::CyclicTopology);
        }
        Ok(Self {
            services,
            order,
            entry,
        })
    }

    /// A linear chain `0 -> 1 -> ... -> n-1` of identical services.
    pub fn chain(
        len: usize,
        replicas: usize,
        capacity: ResourceVector,
        base_service_time_ms: f64,
        demand: ResourceVector,
    ) -> Result<Self, SimError> {
        let services = (0..len)
            .map(|i| {
                let down = if i + 1 < len { vec![i + 1] } else { Vec::new() };
                ServiceSpec::new(i, replicas, capacity, base_service_time_ms, demand)
                    .with_downstream(down)
            })
            .collect();
        Self::new(services)
    }

    pub fn services(&self) -> &[ServiceSpec] {
        &self.services
    }

    pub fn service(&self, id: usize) -> Option<&ServiceSpec> {
        self.services.get(id)
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// The lowest-index source; every request enters here.
    pub fn entry(&self) -> usize {
        self.entry
    }

    pub fn max_replicas(&self) -> usize {
        self.services.iter().map(|s| s.replicas).max().unwrap_or(0)
    }

    pub fn total_replicas(&self) -> usize {
        self.services.iter().map(|s| s.replicas).sum()
    }

    /// Position of each service in the topological order.
    pub fn rank(&self) -> Vec<usize> {
        let mut rank = vec![0; self.services.len()];
        for (pos, &s) in self.order.iter().enumerate() {
            rank[s] = pos;
        }
        rank
    }
}
