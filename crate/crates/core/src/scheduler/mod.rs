//! Placement of classified jobs onto virtual nodes and physical machines.
//!
//! Every strategy allocates as it goes, so later jobs in a batch see the
//! capacity consumed by earlier ones. Jobs that cannot be placed are returned
//! as rejected for the caller to re-queue.

mod baselines;
mod strategies;

pub use baselines::{baseline_fcfs, baseline_first_fit, baseline_random_fit, place_warm_up};
pub use strategies::{
    machines_touched, place_average, place_consolidated, place_diverted, place_heavy, place_hog,
    place_light, place_straggler, split_proportional,
};

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::Directive;
use crate::domain::{
    Cluster, DomainError, JobId, JobRequest, MachineId, Placement, Strategy, TrafficState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("diversion requested but no machine is reserved")]
    NoReservedMachines,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Tmcrn,
    Fcfs,
    RandomFit,
    FirstFit,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Tmcrn, Policy::Fcfs, Policy::RandomFit, Policy::FirstFit];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Tmcrn => "tmcrn",
            Policy::Fcfs => "fcfs",
            Policy::RandomFit => "random_fit",
            Policy::FirstFit => "first_fit",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s || p.name().replace('_', "-") == s)
            .ok_or_else(|| {
                format!("unknown policy `{s}` (expected tmcrn, fcfs, random_fit or first_fit)")
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    NoCapacity,
    ConstraintViolation,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::NoCapacity => "no-capacity",
            RejectReason::ConstraintViolation => "constraint-violation",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub placements: Vec<Placement>,
    pub rejected: Vec<(JobId, RejectReason)>,
    /// (straggler, hog) co-located so the hog can use the straggler's idle
    /// bandwidth.
    pub parallel_pairs: Vec<(JobId, JobId)>,
}

impl StrategyOutcome {
    pub fn merge(&mut self, other: StrategyOutcome) {
        self.placements.extend(other.placements);
        self.rejected.extend(other.rejected);
        self.parallel_pairs.extend(other.parallel_pairs);
    }

    pub fn placed(&self, job: JobId) -> Option<&Placement> {
        self.placements.iter().find(|p| p.job == job)
    }
}

/// A running straggler that a hog may pair with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveStraggler {
    pub job: JobId,
    pub machine: MachineId,
    pub io_fraction: f64,
    pub paired_with: Option<JobId>,
}

/// Per-state queues of classified jobs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SchedulingQueue {
    queues: BTreeMap<TrafficState, VecDeque<JobRequest>>,
}

impl SchedulingQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append in arrival order; Average is kept in deadline order.
    pub fn push(&mut self, job: JobRequest) {
        debug_assert!(!self.contains(job.id), "{} queued twice", job.id);
        let q = self.queues.entry(job.state).or_default();
        let key = |j: &JobRequest| {
            if j.state == TrafficState::Average {
                (ordered(j.deadline), j.priority, j.arrival, j.id)
            } else {
                (0, 0, j.arrival, j.id)
            }
        };
        let k = key(&job);
        let pos = q.iter().position(|j| key(j) > k).unwrap_or(q.len());
        q.insert(pos, job);
    }

    pub fn extend(&mut self, jobs: impl IntoIterator<Item = JobRequest>) {
        for j in jobs {
            self.push(j);
        }
    }

    pub fn contains(&self, id: JobId) -> bool {
        self.queues.values().any(|q| q.iter().any(|j| j.id == id))
    }

    pub fn len(&self) -> usize {
        self.queues.values().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, state: TrafficState) -> Vec<JobRequest> {
        self.queues
            .get(&state)
            .map(|q| q.iter().cloned().collect())
            .unwrap_or_default()
    }

    /// Remove and return every queued job of `state`.
    pub fn take(&mut self, state: TrafficState) -> Vec<JobRequest> {
        self.queues.remove(&state).map(Vec::from).unwrap_or_default()
    }

    /// Remove everything, in state order then queue order.
    pub fn drain_all(&mut self) -> Vec<JobRequest> {
        std::mem::take(&mut self.queues)
            .into_values()
            .flat_map(Vec::from)
            .collect()
    }
}

/// Total order key for a deadline (infinite last).
fn ordered(d: f64) -> u64 {
    let b = d.to_bits();
    if d.is_sign_negative() {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Order in which state queues are served under normal flow.
pub const SERVICE_ORDER: [TrafficState; 5] = [
    TrafficState::Heavy,
    TrafficState::Straggler,
    TrafficState::Hog,
    TrafficState::Average,
    TrafficState::Light,
];

/// Route the queue through the strategies for `directive`. The queue is
/// emptied; rejected jobs are reported in the outcome.
pub fn dispatch(
    queue: &mut SchedulingQueue,
    cluster: &mut Cluster,
    directive: Directive,
    stragglers: &mut Vec<ActiveStraggler>,
    interval: u32,
) -> Result<StrategyOutcome, SchedulerError> {
    match directive {
        Directive::DivertToReserved => {
            let jobs = take_in_service_order(queue);
            place_diverted(&jobs, cluster, interval)
        }
        Directive::Consolidate => {
            let jobs = take_in_service_order(queue);
            let mut packed_cluster = cluster.clone();
            let packed = place_consolidated(&jobs, &mut packed_cluster, interval);

            // The normal-flow plan is the yardstick: packing must not spread
            // the batch wider than the per-state strategies would.
            let mut q = SchedulingQueue::new();
            q.extend(jobs);
            let mut normal_cluster = cluster.clone();
            let mut normal_stragglers = stragglers.clone();
            let mut normal = dispatch(
                &mut q,
                &mut normal_cluster,
                Directive::NormalFlow,
                &mut normal_stragglers,
                interval,
            )?;
            let rank = |o: &StrategyOutcome| {
                (o.placements.len(), std::cmp::Reverse(machines_touched(o).len()))
            };
            if rank(&normal) > rank(&packed) {
                for p in &mut normal.placements {
                    p.strategy = Strategy::Consolidated;
                }
                *cluster = normal_cluster;
                *stragglers = normal_stragglers;
                Ok(normal)
            } else {
                *cluster = packed_cluster;
                Ok(packed)
            }
        }
        Directive::NormalFlow => {
            let mut out = StrategyOutcome::default();
            for state in SERVICE_ORDER {
                let jobs = queue.take(state);
                if jobs.is_empty() {
                    continue;
                }
                let o = match state {
                    TrafficState::Heavy => place_heavy(&jobs, cluster, interval),
                    TrafficState::Straggler => place_straggler(&jobs, cluster, interval),
                    TrafficState::Hog => place_hog(&jobs, cluster, stragglers, interval),
                    TrafficState::Average => place_average(&jobs, cluster, interval),
                    _ => place_light(&jobs, cluster, true, interval),
                };
                out.merge(o);
            }
            // Anything never classified falls back to first-fit.
            let rest = queue.take(TrafficState::Unclassified);
            if !rest.is_empty() {
                out.merge(baseline_first_fit(&rest, cluster, interval));
            }
            Ok(out)
        }
    }
}

fn take_in_service_order(queue: &mut SchedulingQueue) -> Vec<JobRequest> {
    let mut jobs = Vec::with_capacity(queue.len());
    for s in SERVICE_ORDER {
        jobs.extend(queue.take(s));
    }
    jobs.extend(queue.drain_all());
    jobs
}

/// Place a batch with one of the baseline policies.
pub fn dispatch_baseline(
    policy: Policy,
    jobs: &[JobRequest],
    cluster: &mut Cluster,
    rng: &mut ChaCha8Rng,
    interval: u32,
) -> StrategyOutcome {
    match policy {
        Policy::Fcfs => baseline_fcfs(jobs, cluster, interval),
        Policy::FirstFit | Policy::Tmcrn => baseline_first_fit(jobs, cluster, interval),
        Policy::RandomFit => baseline_random_fit(jobs, cluster, rng, interval),
    }
}

/// Allocate `job` whole on `machine`, in an existing node with room or a new
/// catalog node. A node provisioned here is removed again if allocation
/// fails.
pub(crate) fn place_on(
    cluster: &mut Cluster,
    job: &JobRequest,
    machine: MachineId,
    strategy: Strategy,
    interval: u32,
) -> Result<Placement, RejectReason> {
    let (node, fresh) = cluster
        .ensure_node(machine, &job.demand)
        .ok_or(RejectReason::NoCapacity)?;
    let p = Placement::single(job.id, node, machine, job.demand, strategy, interval);
    match cluster.allocate(&p, job) {
        Ok(()) => Ok(p),
        Err(_) => {
            if fresh {
                let _ = cluster.decommission(node);
            }
            Err(RejectReason::ConstraintViolation)
        }
    }
}

/// Try machines in the given order; first success wins.
pub(crate) fn place_first_of(
    cluster: &mut Cluster,
    job: &JobRequest,
    order: impl IntoIterator<Item = MachineId>,
    strategy: Strategy,
    interval: u32,
) -> Result<Placement, RejectReason> {
    let mut reason = RejectReason::NoCapacity;
    for m in order {
        if !cluster.can_host(m, &job.demand) {
            continue;
        }
        match place_on(cluster, job, m, strategy, interval) {
            Ok(p) => return Ok(p),
            Err(r) => reason = r,
        }
    }
    Err(reason)
}
