use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::placement::{validate_placement, Placement};
use super::{DomainError, JobId, JobRequest};
use crate::resources::ResourceVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MachineId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u64);

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pm{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vn{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhysicalMachine {
    pub id: MachineId,
    pub capacity: ResourceVector,
    /// Held back for hogs, heavy jobs and diverted traffic.
    pub reserved: bool,
    available: ResourceVector,
    hosted: Vec<NodeId>,
}

impl PhysicalMachine {
    /// Capacity not yet carved into virtual nodes.
    pub fn available(&self) -> ResourceVector {
        self.available
    }

    pub fn hosted(&self) -> &[NodeId] {
        &self.hosted
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VirtualNode {
    pub id: NodeId,
    pub capacity: ResourceVector,
    pub host: MachineId,
    free: ResourceVector,
    assigned: Vec<(JobId, ResourceVector)>,
}

impl VirtualNode {
    pub fn free(&self) -> ResourceVector {
        self.free
    }

    pub fn assigned_jobs(&self) -> impl Iterator<Item = JobId> + '_ {
        self.assigned.iter().map(|(j, _)| *j)
    }

    pub fn is_idle(&self) -> bool {
        self.assigned.is_empty()
    }
}

/// Physical machines and the virtual nodes carved out of them.
///
/// Every machine satisfies `capacity == available + sum(hosted node capacities)`
/// and every node satisfies `capacity == free + sum(assigned shares)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    machines: Vec<PhysicalMachine>,
    nodes: BTreeMap<NodeId, VirtualNode>,
    catalog: Vec<ResourceVector>,
    next_node: u64,
}

impl Cluster {
    /// Build a cluster from `(capacity, reserved)` pairs and a VM catalog.
    /// The catalog is kept sorted by total normalized size, smallest first.
    pub fn new(
        machines: Vec<(ResourceVector, bool)>,
        catalog: Vec<ResourceVector>,
    ) -> Result<Self, DomainError> {
        if machines.is_empty() {
            return Err(DomainError::EmptyCluster);
        }
        let machines = machines
            .into_iter()
            .enumerate()
            .map(|(i, (capacity, reserved))| PhysicalMachine {
                id: MachineId(i),
                capacity,
                reserved,
                available: capacity,
                hosted: Vec::new(),
            })
            .collect::<Vec<_>>();
        let mut catalog = catalog;
        let norm = catalog
            .iter()
            .fold(ResourceVector::ZERO, |a, b| a.max(b));
        catalog.sort_by(|a, b| {
            a.normalized_sum(&norm)
                .total_cmp(&b.normalized_sum(&norm))
                .then(a.cpu.cmp(&b.cpu))
        });
        Ok(Cluster {
            machines,
            nodes: BTreeMap::new(),
            catalog,
            next_node: 0,
        })
    }

    pub fn machines(&self) -> &[PhysicalMachine] {
        &self.machines
    }

    pub fn machine(&self, id: MachineId) -> Option<&PhysicalMachine> {
        self.machines.get(id.0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &VirtualNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&VirtualNode> {
        self.nodes.get(&id)
    }

    pub fn catalog(&self) -> &[ResourceVector] {
        &self.catalog
    }

    /// Machine count.
    pub fn p(&self) -> usize {
        self.machines.len()
    }

    /// Node count.
    pub fn q(&self) -> usize {
        self.nodes.len()
    }

    pub fn set_reserved(&mut self, id: MachineId, reserved: bool) -> Result<(), DomainError> {
        self.machines
            .get_mut(id.0)
            .ok_or(DomainError::UnknownMachine(id))?
            .reserved = reserved;
        Ok(())
    }

    pub fn reserved_machines(&self) -> impl Iterator<Item = &PhysicalMachine> {
        self.machines.iter().filter(|m| m.reserved)
    }

    pub fn total_capacity(&self) -> ResourceVector {
        self.machines.iter().map(|m| m.capacity).sum()
    }

    /// Per-resource maximum machine capacity, used to normalize scores.
    pub fn max_capacity(&self) -> ResourceVector {
        self.machines
            .iter()
            .fold(ResourceVector::ZERO, |a, m| a.max(&m.capacity))
    }

    /// Capacity on a machine not consumed by job shares: unprovisioned
    /// capacity plus the free capacity of its nodes.
    pub fn headroom(&self, id: MachineId) -> ResourceVector {
        let m = &self.machines[id.0];
        m.hosted
            .iter()
            .map(|n| self.nodes[n].free)
            .fold(m.available, |a, b| a + b)
    }

    /// Sum of all job shares currently allocated on a machine.
    pub fn committed_on(&self, id: MachineId) -> ResourceVector {
        self.machines[id.0]
            .capacity
            .checked_sub(&self.headroom(id))
            .expect("headroom exceeds machine capacity")
    }

    /// Sum of all job shares currently allocated in the cluster.
    pub fn committed(&self) -> ResourceVector {
        self.nodes
            .values()
            .map(|n| n.capacity.checked_sub(&n.free).expect("node free exceeds capacity"))
            .sum()
    }

    /// Mean over the three resources of the committed fraction of a machine.
    pub fn utilization(&self, id: MachineId) -> f64 {
        self.committed_on(id)
            .normalized_sum(&self.machines[id.0].capacity)
            / 3.0
    }

    /// Whether `id` holds an allocation for `job`.
    pub fn is_allocated(&self, job: JobId) -> bool {
        self.nodes
            .values()
            .any(|n| n.assigned.iter().any(|(j, _)| *j == job))
    }

    /// First node on `machine` (by id) whose free capacity covers `share`.
    pub fn find_node(&self, machine: MachineId, share: &ResourceVector) -> Option<NodeId> {
        self.machines[machine.0]
            .hosted
            .iter()
            .copied()
            .find(|n| share.fits_within(&self.nodes[n].free))
    }

    /// Smallest catalog VM type covering `share` that still fits the
    /// machine's unprovisioned capacity.
    pub fn catalog_type_for(
        &self,
        machine: MachineId,
        share: &ResourceVector,
    ) -> Option<ResourceVector> {
        let avail = self.machines[machine.0].available;
        self.catalog
            .iter()
            .copied()
            .find(|t| share.fits_within(t) && t.fits_within(&avail))
    }

    /// Whether a single-target share can be hosted on `machine`, either in an
    /// existing node or in a freshly provisioned catalog node.
    pub fn can_host(&self, machine: MachineId, share: &ResourceVector) -> bool {
        self.find_node(machine, share).is_some()
            || self.catalog_type_for(machine, share).is_some()
    }

    /// Return a node that can take `share`, provisioning the smallest fitting
    /// catalog type when none exists. The flag reports fresh provisioning.
    pub fn ensure_node(
        &mut self,
        machine: MachineId,
        share: &ResourceVector,
    ) -> Option<(NodeId, bool)> {
        if let Some(n) = self.find_node(machine, share) {
            return Some((n, false));
        }
        let vm = self.catalog_type_for(machine, share)?;
        self.provision(machine, vm).ok().map(|n| (n, true))
    }

    /// Carve a node of `capacity` out of a machine's unprovisioned capacity.
    pub fn provision(
        &mut self,
        machine: MachineId,
        capacity: ResourceVector,
    ) -> Result<NodeId, DomainError> {
        let m = self
            .machines
            .get_mut(machine.0)
            .ok_or(DomainError::UnknownMachine(machine))?;
        let rest = m
            .available
            .checked_sub(&capacity)
            .ok_or(DomainError::NodeDoesNotFit {
                machine,
                requested: capacity,
            })?;
        let id = NodeId(self.next_node);
        self.next_node += 1;
        m.available = rest;
        m.hosted.push(id);
        self.nodes.insert(
            id,
            VirtualNode {
                id,
                capacity,
                host: machine,
                free: capacity,
                assigned: Vec::new(),
            },
        );
        Ok(id)
    }

    /// Remove an idle node and return its capacity to the host.
    pub fn decommission(&mut self, id: NodeId) -> Result<(), DomainError> {
        let node = self.nodes.get(&id).ok_or(DomainError::UnknownNode(id))?;
        if !node.is_idle() {
            return Err(DomainError::NodeBusy(id));
        }
        let node = self.nodes.remove(&id).expect("checked above");
        let m = &mut self.machines[node.host.0];
        m.available = m.available + node.capacity;
        m.hosted.retain(|n| *n != id);
        Ok(())
    }

    /// Decommission every idle node; returns how many were removed.
    pub fn reclaim_idle(&mut self) -> usize {
        let idle: Vec<NodeId> = self
            .nodes
            .values()
            .filter(|n| n.is_idle())
            .map(|n| n.id)
            .collect();
        for id in &idle {
            self.decommission(*id).expect("idle node");
        }
        idle.len()
    }

    /// Commit a validated placement. Allocating a placement that fails
    /// validation is a caller bug and is refused.
    pub fn allocate(&mut self, p: &Placement, job: &JobRequest) -> Result<(), DomainError> {
        let v = validate_placement(p, self, job)?;
        if !v.is_ok() {
            return Err(DomainError::ConstraintViolation {
                job: job.id,
                violated: v.violated().collect(),
            });
        }
        for t in &p.targets {
            let node = self.nodes.get_mut(&t.node).expect("validated");
            node.free = node.free.checked_sub(&t.amount).expect("validated C6");
            node.assigned.push((p.job, t.amount));
        }
        Ok(())
    }

    /// Return the shares of a previously allocated placement.
    pub fn release(&mut self, p: &Placement) -> Result<(), DomainError> {
        for t in &p.targets {
            let node = self.nodes.get(&t.node).ok_or(DomainError::UnknownNode(t.node))?;
            if !node.assigned.iter().any(|(j, a)| *j == p.job && *a == t.amount) {
                return Err(DomainError::NotAllocated {
                    job: p.job,
                    node: t.node,
                });
            }
        }
        for t in &p.targets {
            let node = self.nodes.get_mut(&t.node).expect("checked");
            let pos = node
                .assigned
                .iter()
                .position(|(j, a)| *j == p.job && *a == t.amount)
                .expect("checked");
            node.assigned.remove(pos);
            node.free = node.free + t.amount;
            debug_assert!(node.free.fits_within(&node.capacity));
        }
        Ok(())
    }

    /// Check every bookkeeping identity; returns a description of the first
    /// broken one.
    pub fn audit(&self) -> Result<(), String> {
        for m in &self.machines {
            let hosted: ResourceVector = m
                .hosted
                .iter()
                .map(|n| {
                    self.nodes
                        .get(n)
                        .map(|n| n.capacity)
                        .ok_or_else(|| format!("{} lists missing node {}", m.id, n))
                })
                .collect::<Result<Vec<_>, _>>()?
                .iter()
                .sum();
            if hosted.checked_add(&m.available) != Some(m.capacity) {
                return Err(format!(
                    "{}: capacity {} != available {} + hosted {}",
                    m.id, m.capacity, m.available, hosted
                ));
            }
        }
        for n in self.nodes.values() {
            if n.host.0 >= self.machines.len() || !self.machines[n.host.0].hosted.contains(&n.id)
            {
                return Err(format!("{} has dangling host {}", n.id, n.host));
            }
            let used: ResourceVector = n.assigned.iter().map(|(_, a)| *a).sum();
            if used.checked_add(&n.free) != Some(n.capacity) {
                return Err(format!(
                    "{}: capacity {} != free {} + assigned {}",
                    n.id, n.capacity, n.free, used
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Share, Strategy, TrafficState};

    fn one_machine(cap: ResourceVector) -> Cluster {
        Cluster::new(vec![(cap, false)], vec![]).unwrap()
    }

    fn placement_on(node: NodeId, share: ResourceVector) -> Placement {
        Placement {
            job: JobId(1),
            targets: vec![Share {
                node,
                machine: MachineId(0),
                amount: share,
            }],
            strategy: Strategy::Light,
            interval: 0,
        }
    }

    fn job(demand: ResourceVector) -> JobRequest {
        JobRequest::new(1, 0, demand, 10.0)
            .unwrap()
            .with_state(TrafficState::Light)
    }

    #[test]
    fn allocate_decrements_free() {
        let mut c = one_machine(ResourceVector::with_gb(1000, 10, 1000));
        let n = c.provision(MachineId(0), ResourceVector::with_gb(200, 2, 400)).unwrap();
        let share = ResourceVector::with_gb(100, 1, 200);
        c.allocate(&placement_on(n, share), &job(share)).unwrap();
        assert_eq!(c.node(n).unwrap().free(), ResourceVector::with_gb(100, 1, 200));
        c.audit().unwrap();
    }

    #[test]
    fn release_then_allocate_is_identity() {
        let mut c = one_machine(ResourceVector::with_gb(1000, 10, 1000));
        let n = c.provision(MachineId(0), ResourceVector::with_gb(200, 2, 400)).unwrap();
        let share = ResourceVector::with_gb(100, 1, 200);
        let p = placement_on(n, share);
        c.allocate(&p, &job(share)).unwrap();
        let before = c.clone();
        c.release(&p).unwrap();
        c.allocate(&p, &job(share)).unwrap();
        assert_eq!(c, before);
    }

    #[test]
    fn exact_fit_drains_node() {
        let mut c = one_machine(ResourceVector::with_gb(1000, 10, 1000));
        let n = c.provision(MachineId(0), ResourceVector::with_gb(200, 2, 400)).unwrap();
        let share = ResourceVector::with_gb(100, 1, 200);
        c.allocate(&placement_on(n, share), &job(share)).unwrap();
        let mut p2 = placement_on(n, share);
        p2.job = JobId(2);
        let mut j2 = job(share);
        j2.id = JobId(2);
        c.allocate(&p2, &j2).unwrap();
        assert_eq!(c.node(n).unwrap().free(), ResourceVector::ZERO);
        // and back again
        c.release(&p2).unwrap();
        c.release(&placement_on(n, share)).unwrap();
        assert_eq!(c.node(n).unwrap().free(), ResourceVector::with_gb(200, 2, 400));
    }

    #[test]
    fn double_release_is_an_error() {
        let mut c = one_machine(ResourceVector::with_gb(1000, 10, 1000));
        let n = c.provision(MachineId(0), ResourceVector::with_gb(200, 2, 400)).unwrap();
        let share = ResourceVector::with_gb(100, 1, 200);
        let p = placement_on(n, share);
        c.allocate(&p, &job(share)).unwrap();
        c.release(&p).unwrap();
        assert!(matches!(c.release(&p), Err(DomainError::NotAllocated { .. })));
    }

    #[test]
    fn allocate_after_failed_validation_is_refused() {
        let mut c = one_machine(ResourceVector::with_gb(1000, 10, 1000));
        let n = c.provision(MachineId(0), ResourceVector::with_gb(50, 2, 400)).unwrap();
        let share = ResourceVector::with_gb(100, 1, 200);
        let err = c.allocate(&placement_on(n, share), &job(share)).unwrap_err();
        assert!(matches!(err, DomainError::ConstraintViolation { .. }));
        assert_eq!(c.node(n).unwrap().free(), ResourceVector::with_gb(50, 2, 400));
    }

    #[test]
    fn provision_refuses_oversized_node() {
        let mut c = one_machine(ResourceVector::with_gb(1060, 2, 2000));
        let err = c
            .provision(MachineId(0), ResourceVector::with_gb(2500, 4, 2000))
            .unwrap_err();
        assert!(matches!(err, DomainError::NodeDoesNotFit { .. }));
    }

    #[test]
    fn reclaim_returns_capacity() {
        let mut c = one_machine(ResourceVector::with_gb(1000, 10, 1000));
        c.provision(MachineId(0), ResourceVector::with_gb(200, 2, 400)).unwrap();
        assert_eq!(c.reclaim_idle(), 1);
        assert_eq!(c.machines()[0].available(), ResourceVector::with_gb(1000, 10, 1000));
        assert_eq!(c.q(), 0);
    }

    #[test]
    fn empty_cluster_rejected() {
        assert_eq!(Cluster::new(vec![], vec![]), Err(DomainError::EmptyCluster));
    }
}
