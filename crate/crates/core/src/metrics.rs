//! Evaluation metrics computed from a finished simulation.

use alloc::vec::Vec;
use core::fmt;

use crate::sim::Cluster;
use crate::{Resource, ResourceVector};

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    ZeroWindow,
    NoCompletions,
    ZeroOffered,
    EmptySample,
    Conservation { offered: u64, completed: u64, rejected: u64, in_flight: u64 },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::ZeroWindow => f.write_str("measurement window is empty"),
            MetricsError::NoCompletions => f.write_str("a report has no completed requests"),
            MetricsError::ZeroOffered => f.write_str("no requests were offered"),
            MetricsError::EmptySample => f.write_str("no response samples"),
            MetricsError::Conservation {
                offered,
                completed,
                rejected,
                in_flight,
            } => write!(
                f,
                "conservation violated: offered {offered} != completed {completed} + rejected {rejected} + in flight {in_flight}"
            ),
        }
    }
}

impl core::error::Error for MetricsError {}

/// Linear server power model on CPU utilization, watts per replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub p_idle: f64,
    pub p_max: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            p_idle: 10.0,
            p_max: 20.0,
        }
    }
}

/// Utilization percentages per dimension and their mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UtilizationPct {
    pub cpu: f64,
    pub memory: f64,
    pub storage: f64,
    pub network: f64,
    pub overall: f64,
}

impl UtilizationPct {
    pub fn get(&self, r: Resource) -> f64 {
        match r {
            Resource::Cpu => self.cpu,
            Resource::Memory => self.memory,
            Resource::Storage => self.storage,
            Resource::Network => self.network,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mean_response_ms: f64,
    pub p95_response_ms: f64,
    pub throughput_rps: f64,
    pub utilization_pct: UtilizationPct,
    pub energy_joules: f64,
    pub cost_efficiency_pct: f64,
    pub scheduling_efficiency_pct: f64,
    pub offered: u64,
    pub completed: u64,
    pub rejected: u64,
    pub in_flight_at_end: u64,
}

impl MetricsReport {
    /// `offered = completed + rejected + in_flight_at_end`.
    pub fn check_conservation(&self) -> Result<(), MetricsError> {
        if self.offered == self.completed + self.rejected + self.in_flight_at_end {
            Ok(())
        } else {
            Err(MetricsError::Conservation {
                offered: self.offered,
                completed: self.completed,
                rejected: self.rejected,
                in_flight: self.in_flight_at_end,
            })
        }
    }

    pub fn energy_per_request(&self) -> Option<f64> {
        (self.completed > 0).then(|| self.energy_joules / self.completed as f64)
    }
}

pub fn throughput(completed: u64, wall_time_s: f64) -> Result<f64, MetricsError> {
    if !(wall_time_s > 0.0) {
        return Err(MetricsError::ZeroWindow);
    }
    Ok(completed as f64 / wall_time_s)
}

/// Per dimension `100 · mean_r(∫ in_use_r dt / capacity_r) / wall_time`.
/// `integrals` are in unit-seconds, one entry per replica.
pub fn utilization(
    integrals: &[ResourceVector],
    capacities: &[ResourceVector],
    wall_time_s: f64,
) -> Result<UtilizationPct, MetricsError> {
    if !(wall_time_s > 0.0) {
        return Err(MetricsError::ZeroWindow);
    }
    let count = integrals.len().max(1) as f64;
    let mut sum = ResourceVector::ZERO;
    for (i, c) in integrals.iter().zip(capacities) {
        sum += i.ratio(*c);
    }
    let pct = (sum * (100.0 / (count * wall_time_s))).map(|v| v.clamp(0.0, 100.0));
    Ok(UtilizationPct {
        cpu: pct.cpu,
        memory: pct.memory,
        storage: pct.storage,
        network: pct.network,
        overall: pct.mean(),
    })
}

/// `Σ_r (p_idle · T + (p_max − p_idle) · ∫ util_cpu_r dt)`, joules, with the
/// integrals in seconds.
pub fn energy(cpu_util_integrals_s: &[f64], model: &EnergyModel, wall_time_s: f64) -> f64 {
    cpu_util_integrals_s
        .iter()
        .map(|u| model.p_idle * wall_time_s + (model.p_max - model.p_idle) * u)
        .sum()
}

/// Cost per request relative to the cheapest entry: the cheapest scores 100.
/// Input is `(energy_joules, completed)` per scheduler.
pub fn cost_efficiency(runs: &[(f64, u64)]) -> Result<Vec<f64>, MetricsError> {
    if runs.is_empty() || runs.iter().any(|&(_, c)| c == 0) {
        return Err(MetricsError::NoCompletions);
    }
    let costs: Vec<f64> = runs.iter().map(|&(e, c)| e / c as f64).collect();
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(costs
        .iter()
        .map(|&c| if c == best { 100.0 } else { 100.0 * (best / c) })
        .collect())
}

/// Fills `cost_efficiency_pct` across a comparison set.
pub fn apply_cost_efficiency(reports: &mut [MetricsReport]) -> Result<(), MetricsError> {
    let runs: Vec<(f64, u64)> = reports.iter().map(|r| (r.energy_joules, r.completed)).collect();
    for (r, pct) in reports.iter_mut().zip(cost_efficiency(&runs)?) {
        r.cost_efficiency_pct = pct;
    }
    Ok(())
}

/// Share of offered requests that completed within the SLO, percent.
pub fn scheduling_efficiency(completed_within_slo: u64, offered: u64) -> Result<f64, MetricsError> {
    if offered == 0 {
        return Err(MetricsError::ZeroOffered);
    }
    Ok(100.0 * completed_within_slo as f64 / offered as f64)
}

/// Arithmetic mean and nearest-rank p95 (`sorted[ceil(0.95 N) − 1]`).
pub fn response_stats(samples_ms: &[f64]) -> Result<(f64, f64), MetricsError> {
    if samples_ms.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let n = samples_ms.len();
    let mean = samples_ms.iter().sum::<f64>() / n as f64;
    let mut sorted = samples_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (95 * n).div_ceil(100);
    Ok((mean, sorted[rank.max(1) - 1]))
}

/// Builds the report for one finished run. `cost_efficiency_pct` is set to
/// 100 and should be recomputed across the comparison set with
/// [`apply_cost_efficiency`].
pub fn report_for_run(cluster: &Cluster, model: &EnergyModel, slo_ms: f64) -> Result<MetricsReport, MetricsError> {
    let offered = cluster.injected();
    if offered == 0 {
        return Err(MetricsError::ZeroOffered);
    }
    let now = cluster.clock();
    let wall = now.as_secs();
    let samples: Vec<f64> = cluster.completions().iter().map(|c| c.response_ms()).collect();
    let (mean, p95) = if samples.is_empty() {
        (0.0, 0.0)
    } else {
        response_stats(&samples)?
    };
    let within = samples.iter().filter(|&&r| r <= slo_ms).count() as u64;

    let mut fractions = Vec::new();
    for s in 0..cluster.topology().len() {
        for r in cluster.replicas(s) {
            fractions.push(r.integrals_at(now).1);
        }
    }
    let ones = alloc::vec![ResourceVector::splat(1.0); fractions.len()];
    let cpu: Vec<f64> = fractions.iter().map(|f| f.cpu).collect();
    let report = MetricsReport {
        mean_response_ms: mean,
        p95_response_ms: p95,
        throughput_rps: throughput(cluster.completed(), wall)?,
        utilization_pct: utilization(&fractions, &ones, wall)?,
        energy_joules: energy(&cpu, model, wall),
        cost_efficiency_pct: 100.0,
        scheduling_efficiency_pct: scheduling_efficiency(within, offered)?,
        offered,
        completed: cluster.completed(),
        rejected: cluster.rejected(),
        in_flight_at_end: cluster.in_flight(),
    };
    report.check_conservation()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn throughput_cases() {
        assert_eq!(throughput(9500, 10.0), Ok(950.0));
        assert_eq!(throughput(0, 10.0), Ok(0.0));
        assert_eq!(throughput(5, 0.0), Err(MetricsError::ZeroWindow));
    }

    #[test]
    fn utilization_cases() {
        let cap = [ResourceVector::new(2.0, 1.0, 1.0, 1.0)];
        // fully busy on cpu for the whole 10 s run
        let u = utilization(&[ResourceVector::new(20.0, 0.0, 0.0, 0.0)], &cap, 10.0).unwrap();
        assert_eq!(u.cpu, 100.0);
        assert_eq!(u.overall, 25.0);
        let idle = utilization(&[ResourceVector::ZERO], &cap, 10.0).unwrap();
        assert_eq!(idle, UtilizationPct::default());
        // half capacity for half the run
        let half = utilization(&[ResourceVector::new(0.5 * 2.0 * 5.0, 0.0, 0.0, 0.0)], &cap, 10.0).unwrap();
        assert_eq!(half.cpu, 25.0);
        assert_eq!(utilization(&[], &[], 0.0), Err(MetricsError::ZeroWindow));
    }

    #[test]
    fn energy_cases() {
        let m = EnergyModel { p_idle: 10.0, p_max: 20.0 };
        assert_eq!(energy(&[0.0], &m, 10.0), 100.0);
        assert_eq!(energy(&[10.0], &m, 10.0), 200.0);
        let flat = EnergyModel { p_idle: 15.0, p_max: 15.0 };
        assert_eq!(energy(&[0.0], &flat, 10.0), energy(&[10.0], &flat, 10.0));
    }

    #[test]
    fn cost_efficiency_cases() {
        assert_eq!(cost_efficiency(&[(30.0, 10)]).unwrap(), vec![100.0]);
        assert_eq!(cost_efficiency(&[(10.0, 10), (20.0, 10)]).unwrap(), vec![100.0, 50.0]);
        assert_eq!(cost_efficiency(&[(10.0, 0)]), Err(MetricsError::NoCompletions));
        assert_eq!(cost_efficiency(&[]), Err(MetricsError::NoCompletions));
        let tied = cost_efficiency(&[(5.0, 5), (2.0, 2), (9.0, 3)]).unwrap();
        assert_eq!(&tied[..2], &[100.0, 100.0]);
    }

    #[test]
    fn scheduling_efficiency_cases() {
        assert_eq!(scheduling_efficiency(92, 100), Ok(92.0));
        assert_eq!(scheduling_efficiency(0, 100), Ok(0.0));
        assert_eq!(scheduling_efficiency(0, 0), Err(MetricsError::ZeroOffered));
    }

    #[test]
    fn response_stats_cases() {
        assert_eq!(response_stats(&[100.0, 200.0, 300.0]).unwrap().0, 200.0);
        assert_eq!(response_stats(&[120.0; 100]).unwrap(), (120.0, 120.0));
        let ramp: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(response_stats(&ramp).unwrap().1, 19.0);
        assert_eq!(response_stats(&[]), Err(MetricsError::EmptySample));
        assert_eq!(response_stats(&[7.0]).unwrap(), (7.0, 7.0));
    }

    #[test]
    fn conservation_check() {
        let mut r = MetricsReport {
            mean_response_ms: 0.0,
            p95_response_ms: 0.0,
            throughput_rps: 0.0,
            utilization_pct: UtilizationPct::default(),
            energy_joules: 0.0,
            cost_efficiency_pct: 100.0,
            scheduling_efficiency_pct: 0.0,
            offered: 10,
            completed: 6,
            rejected: 3,
            in_flight_at_end: 1,
        };
        assert!(r.check_conservation().is_ok());
        r.rejected = 4;
        assert!(r.check_conservation().is_err());
    }
}
