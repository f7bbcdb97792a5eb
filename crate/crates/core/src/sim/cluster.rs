use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use super::{NetworkModel, SimError, SimTime, Topology};
use crate::rng::{self, SimRng};
use crate::ResourceVector;

/// Knobs that differ between the regular cluster model and the M/M/1 check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Per-replica FIFO bound. `None` means unbounded.
    pub max_queue: Option<usize>,
    /// Scale service times by `1 + in_use_cpu / capacity_cpu`.
    pub contention_scaling: bool,
    /// Smoothing factor for the per-service response EWMA.
    pub ewma_alpha: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            max_queue: Some(64),
            contention_scaling: true,
            ewma_alpha: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestStatus {
    InFlight,
    Completed,
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: u64,
    pub arrival_time: SimTime,
    pub current_stage: usize,
    /// `(service, replica)` per admitted stage, in visit order.
    pub path_taken: Vec<(usize, usize)>,
    pub completion_time: Option<SimTime>,
    pub status: RequestStatus,
    stage_entered: SimTime,
}

impl Request {
    pub fn new(id: u64, arrival_time: SimTime) -> Self {
        Self {
            id,
            arrival_time,
            current_stage: 0,
            path_taken: Vec::new(),
            completion_time: None,
            status: RequestStatus::InFlight,
            stage_entered: arrival_time,
        }
    }

    pub fn response_time(&self) -> Option<SimTime> {
        self.completion_time.map(|c| c.saturating_sub(self.arrival_time))
    }
}

/// Mutable state of one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaState {
    pub busy_until: SimTime,
    /// Request slots waiting, head first.
    pub queue: VecDeque<usize>,
    pub in_use: ResourceVector,
    /// Effective capacity. Differs from the spec value only after rescaling.
    pub capacity: ResourceVector,
    pub running: usize,
    /// `∫ in_use dt`, unit-seconds.
    pub usage_integral: ResourceVector,
    /// `∫ in_use / capacity dt`, seconds.
    pub utilization_integral: ResourceVector,
    target_capacity: ResourceVector,
    last_update: SimTime,
}

impl ReplicaState {
    fn new(capacity: ResourceVector) -> Self {
        Self {
            busy_until: SimTime::ZERO,
            queue: VecDeque::new(),
            in_use: ResourceVector::ZERO,
            capacity,
            running: 0,
            usage_integral: ResourceVector::ZERO,
            utilization_integral: ResourceVector::ZERO,
            target_capacity: capacity,
            last_update: SimTime::ZERO,
        }
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Instantaneous `in_use / capacity`.
    pub fn utilization(&self) -> ResourceVector {
        self.in_use.ratio(self.capacity)
    }

    fn settle(&mut self, now: SimTime) {
        let dt = now.saturating_sub(self.last_update).as_secs();
        if dt > 0.0 {
            self.usage_integral += self.in_use * dt;
            self.utilization_integral += self.utilization() * dt;
        }
        self.last_update = now;
    }

    /// Integrals extended to `now` without mutating.
    pub fn integrals_at(&self, now: SimTime) -> (ResourceVector, ResourceVector) {
        let dt = now.saturating_sub(self.last_update).as_secs();
        (
            self.usage_integral + self.in_use * dt,
            self.utilization_integral + self.utilization() * dt,
        )
    }

    fn apply_pending_capacity(&mut self) {
        if self.target_capacity != self.capacity && self.in_use.fits_within(&self.target_capacity) {
            self.capacity = self.target_capacity;
        }
    }
}

/// Per-service running statistics, cumulative since the start of the run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ServiceStats {
    pub stage_completions: u64,
    /// Sum of stage sojourn times (queueing + service), ms.
    pub stage_response_sum_ms: f64,
    pub rejections: u64,
    pub ewma_response_ms: Option<f64>,
}

/// Snapshot of one candidate replica at decision time.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub replica: usize,
    pub queue_len: usize,
    pub running: usize,
    pub in_use: ResourceVector,
    pub capacity: ResourceVector,
}

/// A request waiting for a replica choice at `service`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint {
    pub request_id: u64,
    pub service: usize,
    /// When the request reaches the service; later than the decision time
    /// when a network hop is involved.
    pub ready_at: SimTime,
    pub candidates: Vec<Candidate>,
    slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaceOutcome {
    Started,
    Queued,
    Rejected,
    InTransit { arrives_at: SimTime },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventSummary {
    Arrival { request_id: u64 },
    Admission { request_id: u64, service: usize, replica: usize, outcome: PlaceOutcome },
    StageCompleted { request_id: u64, service: usize, replica: usize },
    RequestCompleted { request_id: u64, response: SimTime },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advance {
    pub time: SimTime,
    pub event: EventSummary,
    pub decision: Option<DecisionPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletedRequest {
    pub request_id: u64,
    pub arrival_time: SimTime,
    pub completion_time: SimTime,
}

impl CompletedRequest {
    pub fn response_ms(&self) -> f64 {
        self.completion_time.saturating_sub(self.arrival_time).as_ms()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Arrival { slot: usize },
    Admit { slot: usize, service: usize, replica: usize },
    Complete { slot: usize, service: usize, replica: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Event {
    at: SimTime,
    seq: u64,
    kind: EventKind,
}

// Reversed so that BinaryHeap pops the earliest (time, seq) first.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Inverse-CDF exponential draw: `base * (-ln u) * contention`, where
/// `contention = 1 + in_use_cpu / capacity_cpu`. `u` must lie in `(0, 1]`.
pub fn service_time(base_ms: f64, in_use_cpu: f64, capacity_cpu: f64, u: f64) -> f64 {
    let contention = if capacity_cpu > 0.0 {
        1.0 + in_use_cpu / capacity_cpu
    } else {
        1.0
    };
    base_ms * -libm::log(u) * contention
}

/// The cluster: topology, replica state, the event queue and the clock.
#[derive(Debug, Clone)]
pub struct Cluster {
    topology: Topology,
    network: NetworkModel,
    options: SimOptions,
    clock: SimTime,
    replicas: Vec<Vec<ReplicaState>>,
    stats: Vec<ServiceStats>,
    events: BinaryHeap<Event>,
    next_seq: u64,
    requests: Vec<Request>,
    pending: Option<DecisionPoint>,
    completions: Vec<CompletedRequest>,
    completed: u64,
    rejected: u64,
    rng: SimRng,
    seed: u64,
}

impl Cluster {
    pub fn new(topology: Topology, network: NetworkModel, seed: u64) -> Result<Self, SimError> {
        Self::with_options(topology, network, seed, SimOptions::default())
    }

    pub fn with_options(
        topology: Topology,
        network: NetworkModel,
        seed: u64,
        options: SimOptions,
    ) -> Result<Self, SimError> {
        network.validate()?;
        let replicas = topology
            .services()
            .iter()
            .map(|s| (0..s.replicas).map(|_| ReplicaState::new(s.capacity_per_replica)).collect())
            .collect();
        let stats = alloc::vec![ServiceStats::default(); topology.len()];
        Ok(Self {
            topology,
            network,
            options,
            clock: SimTime::ZERO,
            replicas,
            stats,
            events: BinaryHeap::new(),
            next_seq: 0,
            requests: Vec::new(),
            pending: None,
            completions: Vec::new(),
            completed: 0,
            rejected: 0,
            rng: rng::seeded(seed, rng::stream::SIMULATION),
            seed,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn options(&self) -> &SimOptions {
        &self.options
    }

    pub fn network(&self) -> &NetworkModel {
        &self.network
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn replicas(&self, service: usize) -> &[ReplicaState] {
        &self.replicas[service]
    }

    pub fn stats(&self, service: usize) -> &ServiceStats {
        &self.stats[service]
    }

    pub fn pending(&self) -> Option<&DecisionPoint> {
        self.pending.as_ref()
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    pub fn next_event_time(&self) -> Option<SimTime> {
        self.events.peek().map(|e| e.at)
    }

    pub fn injected(&self) -> u64 {
        self.requests.len() as u64
    }

    pub fn completed(&self) -> u64 {
        self.completed
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Requests neither completed nor rejected.
    pub fn in_flight(&self) -> u64 {
        self.requests
            .iter()
            .filter(|r| r.status == RequestStatus::InFlight)
            .count() as u64
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn completions(&self) -> &[CompletedRequest] {
        &self.completions
    }

    /// No events left and no decision outstanding.
    pub fn is_drained(&self) -> bool {
        self.events.is_empty() && self.pending.is_none()
    }

    /// Schedules the arrival of `request` at the entry service.
    pub fn inject_arrival(&mut self, mut request: Request) -> Result<(), SimError> {
        if request.arrival_time < self.clock {
            return Err(SimError::PastTimestamp {
                at: request.arrival_time,
                clock: self.clock,
            });
        }
        let slot = self.requests.len();
        request.current_stage = self.topology.entry();
        request.stage_entered = request.arrival_time;
        request.status = RequestStatus::InFlight;
        let at = request.arrival_time;
        self.requests.push(request);
        self.schedule(at, EventKind::Arrival { slot });
        Ok(())
    }

    /// Pops and applies the next event. Returns a decision point when a
    /// request needs a replica; that decision must be resolved with
    /// [`Cluster::place`] before advancing again.
    pub fn advance(&mut self) -> Result<Advance, SimError> {
        if self.pending.is_some() {
            return Err(SimError::DecisionPending);
        }
        let event = self.events.pop().ok_or(SimError::EmptyQueue)?;
        debug_assert!(event.at >= self.clock);
        self.clock = event.at;
        match event.kind {
            EventKind::Arrival { slot } => {
                let service = self.requests[slot].current_stage;
                let dp = self.decision_point(slot, service, self.clock);
                self.pending = Some(dp.clone());
                Ok(Advance {
                    time: self.clock,
                    event: EventSummary::Arrival {
                        request_id: self.requests[slot].id,
                    },
                    decision: Some(dp),
                })
            }
            EventKind::Admit {
                slot,
                service,
                replica,
            } => {
                let outcome = self.admit(slot, service, replica);
                Ok(Advance {
                    time: self.clock,
                    event: EventSummary::Admission {
                        request_id: self.requests[slot].id,
                        service,
                        replica,
                        outcome,
                    },
                    decision: None,
                })
            }
            EventKind::Complete {
                slot,
                service,
                replica,
            } => Ok(self.complete_stage(slot, service, replica)),
        }
    }

    /// Resolves the pending decision by sending the request to candidate
    /// `replica`.
    pub fn place(&mut self, decision: &DecisionPoint, replica: usize) -> Result<PlaceOutcome, SimError> {
        let pending = self.pending.as_ref().ok_or(SimError::StaleDecision)?;
        if pending.slot != decision.slot || pending.service != decision.service {
            return Err(SimError::StaleDecision);
        }
        if replica >= pending.candidates.len() {
            return Err(SimError::InvalidReplica {
                index: replica,
                candidates: pending.candidates.len(),
            });
        }
        let dp = self.pending.take().expect("checked above");
        let replica = dp.candidates[replica].replica;
        if dp.ready_at <= self.clock {
            Ok(self.admit(dp.slot, dp.service, replica))
        } else {
            self.schedule(
                dp.ready_at,
                EventKind::Admit {
                    slot: dp.slot,
                    service: dp.service,
                    replica,
                },
            );
            Ok(PlaceOutcome::InTransit {
                arrives_at: dp.ready_at,
            })
        }
    }

    /// Rescales every replica of `service` to `factor` times its configured
    /// capacity (never below one request's demand). Shrinking waits until
    /// current usage fits.
    pub fn set_capacity_scale(&mut self, service: usize, factor: f64) -> Result<(), SimError> {
        let spec = self
            .topology
            .service(service)
            .ok_or(SimError::UnknownService(service))?;
        let target = (spec.capacity_per_replica * factor).max(spec.demand_per_request);
        let now = self.clock;
        for replica in &mut self.replicas[service] {
            replica.settle(now);
            replica.target_capacity = target;
            replica.apply_pending_capacity();
        }
        for r in 0..self.replicas[service].len() {
            self.drain_queue(service, r);
        }
        Ok(())
    }

    /// Moves the clock forward to `t` without processing events. `t` must not
    /// pass the next pending event.
    pub fn idle_until(&mut self, t: SimTime) -> Result<(), SimError> {
        if self.pending.is_some() {
            return Err(SimError::DecisionPending);
        }
        if t < self.clock {
            return Err(SimError::PastTimestamp { at: t, clock: self.clock });
        }
        let t = match self.next_event_time() {
            Some(next) if next < t => next,
            _ => t,
        };
        self.clock = t;
        self.settle_all();
        Ok(())
    }

    /// Settles all utilization integrals at the current clock.
    pub fn settle_all(&mut self) {
        let now = self.clock;
        for replica in self.replicas.iter_mut().flatten() {
            replica.settle(now);
        }
    }

    fn schedule(&mut self, at: SimTime, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(Event { at, seq, kind });
    }

    fn decision_point(&self, slot: usize, service: usize, ready_at: SimTime) -> DecisionPoint {
        let candidates = self.replicas[service]
            .iter()
            .enumerate()
            .map(|(i, r)| Candidate {
                replica: i,
                queue_len: r.queue.len(),
                running: r.running,
                in_use: r.in_use,
                capacity: r.capacity,
            })
            .collect();
        DecisionPoint {
            request_id: self.requests[slot].id,
            service,
            ready_at,
            candidates,
            slot,
        }
    }

    fn admit(&mut self, slot: usize, service: usize, replica: usize) -> PlaceOutcome {
        let now = self.clock;
        let demand = self.topology.services()[service].demand_per_request;
        {
            let req = &mut self.requests[slot];
            req.current_stage = service;
            req.stage_entered = now;
            req.path_taken.push((service, replica));
        }
        let state = &self.replicas[service][replica];
        let fits = (state.in_use + demand).fits_within(&state.capacity);
        if fits && state.queue.is_empty() {
            self.start(slot, service, replica);
            PlaceOutcome::Started
        } else if self.options.max_queue.is_none_or(|max| state.queue.len() < max) {
            self.replicas[service][replica].queue.push_back(slot);
            PlaceOutcome::Queued
        } else {
            let req = &mut self.requests[slot];
            req.status = RequestStatus::Rejected;
            self.rejected += 1;
            self.stats[service].rejections += 1;
            PlaceOutcome::Rejected
        }
    }

    fn start(&mut self, slot: usize, service: usize, replica: usize) {
        let now = self.clock;
        let spec = &self.topology.services()[service];
        let (base, demand) = (spec.base_service_time_ms, spec.demand_per_request);
        let state = &mut self.replicas[service][replica];
        let (in_use_cpu, cap_cpu) = if self.options.contention_scaling {
            (state.in_use.cpu, state.capacity.cpu)
        } else {
            (0.0, 0.0)
        };
        let u = rng::open_unit(&mut self.rng);
        let duration = SimTime::from_ms(service_time(base, in_use_cpu, cap_cpu, u));
        state.settle(now);
        state.in_use += demand;
        state.running += 1;
        let done = now + duration;
        if done > state.busy_until {
            state.busy_until = done;
        }
        self.schedule(
            done,
            EventKind::Complete {
                slot,
                service,
                replica,
            },
        );
    }

    fn drain_queue(&mut self, service: usize, replica: usize) {
        let demand = self.topology.services()[service].demand_per_request;
        loop {
            let state = &mut self.replicas[service][replica];
            let Some(&head) = state.queue.front() else { break };
            if !(state.in_use + demand).fits_within(&state.capacity) {
                break;
            }
            state.queue.pop_front();
            self.start(head, service, replica);
        }
    }

    fn complete_stage(&mut self, slot: usize, service: usize, replica: usize) -> Advance {
        let now = self.clock;
        let demand = self.topology.services()[service].demand_per_request;
        {
            let state = &mut self.replicas[service][replica];
            state.settle(now);
            state.in_use = (state.in_use - demand).map(|v| if v < 1e-12 { 0.0 } else { v });
            state.running -= 1;
            state.apply_pending_capacity();
        }
        let sojourn = now.saturating_sub(self.requests[slot].stage_entered).as_ms();
        let alpha = self.options.ewma_alpha;
        let stats = &mut self.stats[service];
        stats.stage_completions += 1;
        stats.stage_response_sum_ms += sojourn;
        stats.ewma_response_ms = Some(match stats.ewma_response_ms {
            None => sojourn,
            Some(prev) => prev + alpha * (sojourn - prev),
        });
        self.drain_queue(service, replica);

        let downstream = &self.topology.services()[service].downstream;
        let next = match downstream.len() {
            0 => None,
            1 => Some(downstream[0]),
            k => Some(downstream[self.rng.gen_range(0..k)]),
        };
        let request_id = self.requests[slot].id;
        match next {
            None => {
                let req = &mut self.requests[slot];
                req.completion_time = Some(now);
                req.status = RequestStatus::Completed;
                let arrival_time = req.arrival_time;
                self.completed += 1;
                self.completions.push(CompletedRequest {
                    request_id,
                    arrival_time,
                    completion_time: now,
                });
                Advance {
                    time: now,
                    event: EventSummary::RequestCompleted {
                        request_id,
                        response: now.saturating_sub(arrival_time),
                    },
                    decision: None,
                }
            }
            Some(next) => {
                let hop = self.network.sample(&mut self.rng);
                self.requests[slot].current_stage = next;
                let dp = self.decision_point(slot, next, now + hop);
                self.pending = Some(dp.clone());
                Advance {
                    time: now,
                    event: EventSummary::StageCompleted {
                        request_id,
                        service,
                        replica,
                    },
                    decision: Some(dp),
                }
            }
        }
    }
}
