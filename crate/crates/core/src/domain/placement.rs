use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Cluster, DomainError, JobId, JobRequest, MachineId, NodeId, TrafficState};
use crate::resources::{Resource, ResourceVector};

/// Which rule produced a placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Arrival-ordered first feasible machine.
    Light,
    /// Machine with the largest aggregate headroom.
    Straggler,
    /// Machine with the largest bandwidth headroom.
    Hog,
    /// Minimal capacity-covering set of machines.
    Heavy,
    /// Deadline order onto machines by processing speed.
    Average,
    Diverted,
    Consolidated,
    WarmUp,
    Fcfs,
    FirstFit,
    RandomFit,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Light => "light",
            Strategy::Straggler => "straggler",
            Strategy::Hog => "hog",
            Strategy::Heavy => "heavy",
            Strategy::Average => "average",
            Strategy::Diverted => "diverted",
            Strategy::Consolidated => "consolidated",
            Strategy::WarmUp => "warm-up",
            Strategy::Fcfs => "fcfs",
            Strategy::FirstFit => "first-fit",
            Strategy::RandomFit => "random-fit",
        }
    }

    /// The state-specific strategy for a classified job under normal flow.
    pub fn for_state(state: TrafficState) -> Option<Strategy> {
        match state {
            TrafficState::Light => Some(Strategy::Light),
            TrafficState::Straggler => Some(Strategy::Straggler),
            TrafficState::Hog => Some(Strategy::Hog),
            TrafficState::Heavy => Some(Strategy::Heavy),
            TrafficState::Average => Some(Strategy::Average),
            TrafficState::Unclassified => None,
        }
    }
}

/// One slice of a job's demand hosted on a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub node: NodeId,
    pub machine: MachineId,
    pub amount: ResourceVector,
}

/// The mapping of a job onto one node (or, for heavy jobs, several nodes on
/// distinct machines).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub job: JobId,
    pub targets: Vec<Share>,
    pub strategy: Strategy,
    pub interval: u32,
}

impl Placement {
    pub fn single(
        job: JobId,
        node: NodeId,
        machine: MachineId,
        amount: ResourceVector,
        strategy: Strategy,
        interval: u32,
    ) -> Self {
        Placement {
            job,
            targets: vec![Share {
                node,
                machine,
                amount,
            }],
            strategy,
            interval,
        }
    }

    pub fn total(&self) -> ResourceVector {
        self.targets.iter().map(|t| t.amount).sum()
    }

    pub fn machines(&self) -> impl Iterator<Item = MachineId> + '_ {
        self.targets.iter().map(|t| t.machine)
    }
}

/// Placement constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    /// Single assignment: one node on one machine per share, one target for
    /// every state except heavy.
    C1,
    /// Node CPU fits the host.
    C2,
    /// Node memory fits the host.
    C3,
    /// Node bandwidth fits the host.
    C4,
    /// Aggregate job demand fits aggregate machine capacity.
    C5,
    /// Job demand fits the free capacity of the target node(s).
    C6,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Validation {
    violated: BTreeSet<Constraint>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violated.is_empty()
    }

    pub fn violated(&self) -> impl Iterator<Item = Constraint> + '_ {
        self.violated.iter().copied()
    }

    pub fn contains(&self, c: Constraint) -> bool {
        self.violated.contains(&c)
    }

    fn add(&mut self, c: Constraint) {
        self.violated.insert(c);
    }
}

/// Check a placement against the current cluster state. Violations are
/// returned; ids that do not resolve are reported as errors.
pub fn validate_placement(
    p: &Placement,
    cluster: &Cluster,
    job: &JobRequest,
) -> Result<Validation, DomainError> {
    let mut v = check_local(p, cluster, job)?;
    let demand = cluster
        .committed()
        .checked_add(&job.demand)
        .expect("demand overflow");
    if !demand.fits_within(&cluster.total_capacity()) {
        v.add(Constraint::C5);
    }
    Ok(v)
}

/// Validate a set of pending placements against the same cluster snapshot.
/// C5 is evaluated over the union of the batch and the already committed
/// demand; every other constraint is per placement.
pub fn validate_batch(
    batch: &[(Placement, JobRequest)],
    cluster: &Cluster,
) -> Result<Vec<Validation>, DomainError> {
    let pending: ResourceVector = batch.iter().map(|(_, j)| j.demand).sum();
    let aggregate_ok = cluster
        .committed()
        .checked_add(&pending)
        .is_some_and(|d| d.fits_within(&cluster.total_capacity()));
    batch
        .iter()
        .map(|(p, j)| {
            let mut v = check_local(p, cluster, j)?;
            if !aggregate_ok {
                v.add(Constraint::C5);
            }
            Ok(v)
        })
        .collect()
}

/// Everything except C5.
fn check_local(
    p: &Placement,
    cluster: &Cluster,
    job: &JobRequest,
) -> Result<Validation, DomainError> {
    if p.job != job.id {
        return Err(DomainError::JobMismatch {
            placement: p.job,
            job: job.id,
        });
    }
    if p.targets.is_empty() {
        return Err(DomainError::EmptyPlacement(p.job));
    }
    let mut v = Validation::default();

    // C1
    if job.state != TrafficState::Heavy && p.targets.len() != 1 {
        v.add(Constraint::C1);
    }
    let mut seen_nodes = BTreeSet::new();
    let mut seen_machines = BTreeSet::new();
    for t in &p.targets {
        let node = cluster.node(t.node).ok_or(DomainError::UnknownNode(t.node))?;
        cluster
            .machine(t.machine)
            .ok_or(DomainError::UnknownMachine(t.machine))?;
        if node.host != t.machine || !seen_nodes.insert(t.node) || !seen_machines.insert(t.machine)
        {
            v.add(Constraint::C1);
        }
    }
    if cluster.is_allocated(job.id) {
        v.add(Constraint::C1);
    }

    // C2-C4: the nodes carved out of each touched machine fit inside it.
    let mut per_machine: BTreeMap<MachineId, ResourceVector> = BTreeMap::new();
    for t in &p.targets {
        if per_machine.contains_key(&t.machine) {
            continue;
        }
        let m = cluster.machine(t.machine).expect("checked above");
        let carved: ResourceVector = m
            .hosted()
            .iter()
            .filter_map(|n| cluster.node(*n))
            .map(|n| n.capacity)
            .sum();
        per_machine.insert(t.machine, carved);
        for r in carved.exceeded(&m.capacity) {
            v.add(match r {
                Resource::Cpu => Constraint::C2,
                Resource::Mem => Constraint::C3,
                Resource::Bw => Constraint::C4,
            });
        }
    }

    // C6
    for t in &p.targets {
        let node = cluster.node(t.node).expect("checked above");
        if !t.amount.fits_within(&node.free()) {
            v.add(Constraint::C6);
        }
    }
    if !job.demand.fits_within(&p.total()) {
        v.add(Constraint::C6);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(id: u64, demand: ResourceVector, state: TrafficState) -> JobRequest {
        JobRequest::new(id, 0, demand, 10.0).unwrap().with_state(state)
    }

    fn setup(node_cap: ResourceVector) -> (Cluster, NodeId) {
        let mut c = Cluster::new(
            vec![(ResourceVector::with_gb(4076, 64, 8000), false)],
            vec![],
        )
        .unwrap();
        let n = c.provision(MachineId(0), node_cap).unwrap();
        (c, n)
    }

    #[test]
    fn slack_placement_is_ok() {
        let (c, n) = setup(ResourceVector::with_gb(200, 2, 400));
        let d = ResourceVector::with_gb(100, 1, 200);
        let j = job(1, d, TrafficState::Light);
        let p = Placement::single(j.id, n, MachineId(0), d, Strategy::Light, 0);
        assert!(validate_placement(&p, &c, &j).unwrap().is_ok());
    }

    #[test]
    fn cpu_over_node_free_violates_c6() {
        let (c, n) = setup(ResourceVector::with_gb(50, 2, 400));
        let d = ResourceVector::with_gb(100, 1, 200);
        let j = job(1, d, TrafficState::Light);
        let p = Placement::single(j.id, n, MachineId(0), d, Strategy::Light, 0);
        let v = validate_placement(&p, &c, &j).unwrap();
        assert_eq!(v.violated().collect::<Vec<_>>(), vec![Constraint::C6]);
    }

    #[test]
    fn light_job_with_two_targets_violates_c1() {
        let mut c = Cluster::new(
            vec![
                (ResourceVector::with_gb(4076, 64, 8000), false),
                (ResourceVector::with_gb(4076, 64, 8000), false),
            ],
            vec![],
        )
        .unwrap();
        let cap = ResourceVector::with_gb(200, 2, 400);
        let n0 = c.provision(MachineId(0), cap).unwrap();
        let n1 = c.provision(MachineId(1), cap).unwrap();
        let half = ResourceVector::with_gb(50, 1, 100);
        let j = job(1, half + half, TrafficState::Light);
        let p = Placement {
            job: j.id,
            targets: vec![
                Share { node: n0, machine: MachineId(0), amount: half },
                Share { node: n1, machine: MachineId(1), amount: half },
            ],
            strategy: Strategy::Light,
            interval: 0,
        };
        let v = validate_placement(&p, &c, &j).unwrap();
        assert_eq!(v.violated().collect::<Vec<_>>(), vec![Constraint::C1]);

        // The same shape is legal for a heavy job.
        let h = j.clone().with_state(TrafficState::Heavy);
        assert!(validate_placement(&p, &c, &h).unwrap().is_ok());
    }

    #[test]
    fn aggregate_demand_over_capacity_violates_c5() {
        // Ten jobs of (1000, 8, 2000) against a single (4076, 64, 8000)
        // machine: summed demand (10000, 80, 20000) exceeds every component.
        let d = ResourceVector::with_gb(1000, 8, 2000);
        let total: ResourceVector = std::iter::repeat_n(d, 10).sum();
        assert!(!total.fits_within(&ResourceVector::with_gb(4076, 64, 8000)));

        let mut c = Cluster::new(
            vec![(ResourceVector::with_gb(4076, 64, 8000), false)],
            vec![],
        )
        .unwrap();
        let n = c.provision(MachineId(0), ResourceVector::with_gb(1000, 8, 2000)).unwrap();
        let batch: Vec<(Placement, JobRequest)> = (0..10)
            .map(|i| {
                let j = job(i, d, TrafficState::Light);
                (Placement::single(j.id, n, MachineId(0), d, Strategy::Light, 0), j)
            })
            .collect();
        let vs = validate_batch(&batch, &c).unwrap();
        assert!(vs.iter().all(|v| v.contains(Constraint::C5)));
        // Each placement alone fits the node.
        assert!(vs.iter().all(|v| !v.contains(Constraint::C6)));
    }

    #[test]
    fn unknown_node_is_an_error() {
        let (c, _) = setup(ResourceVector::with_gb(200, 2, 400));
        let d = ResourceVector::with_gb(100, 1, 200);
        let j = job(1, d, TrafficState::Light);
        let p = Placement::single(j.id, NodeId(99), MachineId(0), d, Strategy::Light, 0);
        assert_eq!(
            validate_placement(&p, &c, &j),
            Err(DomainError::UnknownNode(NodeId(99)))
        );
    }

    #[test]
    fn share_on_wrong_host_violates_c1() {
        let mut c = Cluster::new(
            vec![
                (ResourceVector::with_gb(4076, 64, 8000), false),
                (ResourceVector::with_gb(4076, 64, 8000), false),
            ],
            vec![],
        )
        .unwrap();
        let n = c.provision(MachineId(0), ResourceVector::with_gb(200, 2, 400)).unwrap();
        let d = ResourceVector::with_gb(100, 1, 200);
        let j = job(1, d, TrafficState::Light);
        let p = Placement::single(j.id, n, MachineId(1), d, Strategy::Light, 0);
        assert!(validate_placement(&p, &c, &j).unwrap().contains(Constraint::C1));
    }
}
