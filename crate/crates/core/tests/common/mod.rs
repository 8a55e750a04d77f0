#![allow(dead_code)]

use std::collections::BTreeMap;

use cransim_core::domain::validate_placement;
use cransim_core::scheduler::StrategyOutcome;
use cransim_core::workload::{cluster_from_catalog, VM_CATALOG};
use cransim_core::{Cluster, JobRequest, MachineId, NodeId, ResourceVector, TrafficState};
use proptest::prelude::*;

pub const STATES: [TrafficState; 5] = [
    TrafficState::Light,
    TrafficState::Straggler,
    TrafficState::Hog,
    TrafficState::Heavy,
    TrafficState::Average,
];

/// Up to two machines of each type, at least one in total, with an arbitrary
/// reserved subset.
pub fn cluster() -> impl Strategy<Value = Cluster> {
    (
        prop::array::uniform4(0usize..=2),
        prop::collection::vec(any::<bool>(), 8),
    )
        .prop_filter("empty cluster", |(c, _)| c.iter().sum::<usize>() > 0)
        .prop_map(|(counts, reserved)| {
            let mut c = cluster_from_catalog(counts, &VM_CATALOG).unwrap();
            for i in 0..c.p() {
                c.set_reserved(MachineId(i), reserved[i]).unwrap();
            }
            c
        })
}

/// Mostly jobs that fit a single node, some that need several machines.
pub fn demand() -> impl Strategy<Value = ResourceVector> {
    prop_oneof![
        4 => (1u64..=1200, 1u64..=1500, 1u64..=1200),
        1 => (1u64..=4000, 1u64..=6000, 1u64..=5000),
    ]
    .prop_map(|(cpu, mem, bw)| ResourceVector::new(cpu, mem, bw))
}

pub fn job(id: u64) -> impl Strategy<Value = JobRequest> {
    (demand(), 1.0f64..2000.0, 0u32..4, 0usize..5, 0.0f64..5000.0, 1u8..=5).prop_map(
        move |(d, exec, arrival, s, slack, prio)| {
            JobRequest::new(id, arrival, d, exec)
                .unwrap()
                .with_state(STATES[s])
                .with_deadline(arrival as f64 * 300.0 + exec + slack)
                .with_priority(prio)
        },
    )
}

pub fn jobs(max: usize) -> impl Strategy<Value = Vec<JobRequest>> {
    (1..=max).prop_flat_map(|n| (0..n as u64).map(job).collect::<Vec<_>>())
}

/// Pre-load some machines so strategies see partial occupancy.
pub fn preload(cluster: &mut Cluster, fillers: &[JobRequest]) {
    for (k, f) in fillers.iter().enumerate() {
        let mut f = f.clone();
        f.id = cransim_core::JobId(10_000 + k as u64);
        let m = MachineId(k % cluster.p());
        if let Some((node, _)) = cluster.ensure_node(m, &f.demand) {
            let p = cransim_core::Placement::single(f.id, node, m, f.demand, cransim_core::Strategy::FirstFit, 0);
            let _ = cluster.allocate(&p, &f);
        }
    }
}

/// Replay `out` placement by placement on `before`, validating each one
/// against the state at its moment of allocation. Nodes the strategy created
/// are re-created with the capacity they have in `after`.
pub fn replay_and_validate(
    before: &Cluster,
    after: &Cluster,
    out: &StrategyOutcome,
    jobs: &[JobRequest],
) -> Result<(), String> {
    let mut replay = before.clone();
    let mut remap: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for p in &out.placements {
        let j = jobs
            .iter()
            .find(|j| j.id == p.job)
            .ok_or_else(|| format!("placement for unknown {}", p.job))?;
        let mut p = p.clone();
        for t in &mut p.targets {
            if before.node(t.node).is_some() {
                continue;
            }
            let id = match remap.get(&t.node) {
                Some(id) => *id,
                None => {
                    let cap = after
                        .node(t.node)
                        .ok_or_else(|| format!("{} targets vanished node {:?}", p.job, t.node))?
                        .capacity;
                    let id = replay
                        .provision(t.machine, cap)
                        .map_err(|e| format!("re-provisioning for {}: {e}", p.job))?;
                    remap.insert(t.node, id);
                    id
                }
            };
            t.node = id;
        }
        let v = validate_placement(&p, &replay, j).map_err(|e| e.to_string())?;
        if !v.is_ok() {
            let bad: Vec<_> = v.violated().collect();
            return Err(format!("{} ({:?}) violates {bad:?}", p.job, p.strategy));
        }
        replay.allocate(&p, j).map_err(|e| e.to_string())?;
        replay.audit()?;
    }
    after.audit()
}
