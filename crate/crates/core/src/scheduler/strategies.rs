use std::collections::BTreeSet;

use super::{place_first_of, ActiveStraggler, RejectReason, SchedulerError, StrategyOutcome};
use crate::domain::{Cluster, JobRequest, MachineId, Placement, Share, Strategy};
use crate::resources::{Resource, ResourceVector};

/// Exhaustive subset search for consolidation is used up to this many
/// machines; larger clusters go straight to first-fit-decreasing.
const SUBSET_SEARCH_MAX_MACHINES: usize = 8;

fn record(out: &mut StrategyOutcome, job: &JobRequest, r: Result<Placement, RejectReason>) {
    match r {
        Ok(p) => out.placements.push(p),
        Err(reason) => out.rejected.push((job.id, reason)),
    }
}

fn by_arrival(jobs: &[JobRequest]) -> Vec<&JobRequest> {
    let mut v: Vec<&JobRequest> = jobs.iter().collect();
    v.sort_by_key(|j| (j.arrival, j.id));
    v
}

/// Machine ids sorted by descending score, lowest id first on ties.
fn ranked(cluster: &Cluster, mut score: impl FnMut(MachineId) -> f64) -> Vec<MachineId> {
    let mut v: Vec<(MachineId, f64)> = cluster.machines().iter().map(|m| (m.id, score(m.id))).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(id, _)| id).collect()
}

/// First-come first-serve over machines in id order. With `skip_reserved`
/// the reserved machines are left for diverted traffic.
pub fn place_light(
    jobs: &[JobRequest],
    cluster: &mut Cluster,
    skip_reserved: bool,
    interval: u32,
) -> StrategyOutcome {
    let order: Vec<MachineId> = cluster
        .machines()
        .iter()
        .filter(|m| !(skip_reserved && m.reserved))
        .map(|m| m.id)
        .collect();
    let mut out = StrategyOutcome::default();
    for j in by_arrival(jobs) {
        let r = place_first_of(cluster, j, order.iter().copied(), Strategy::Light, interval);
        record(&mut out, j, r);
    }
    out
}

/// Each straggler goes to the machine with the largest aggregate headroom,
/// each resource normalized by the cluster-wide maximum capacity; if that
/// machine cannot host it, the next best is tried.
pub fn place_straggler(jobs: &[JobRequest], cluster: &mut Cluster, interval: u32) -> StrategyOutcome {
    let mut out = StrategyOutcome::default();
    let norm = cluster.max_capacity();
    for j in by_arrival(jobs) {
        let order = ranked(cluster, |m| cluster.headroom(m).normalized_sum(&norm));
        let r = place_first_of(cluster, j, order, Strategy::Straggler, interval);
        record(&mut out, j, r);
    }
    out
}

/// Each hog goes to the machine with the most bandwidth headroom. When that
/// machine runs an unpaired straggler with I/O idle time, the two are paired.
pub fn place_hog(
    jobs: &[JobRequest],
    cluster: &mut Cluster,
    stragglers: &mut [ActiveStraggler],
    interval: u32,
) -> StrategyOutcome {
    let mut out = StrategyOutcome::default();
    for j in by_arrival(jobs) {
        let order = ranked(cluster, |m| cluster.headroom(m).bw as f64);
        match place_first_of(cluster, j, order, Strategy::Hog, interval) {
            Ok(p) => {
                let host = p.targets[0].machine;
                if let Some(s) = stragglers
                    .iter_mut()
                    .filter(|s| s.machine == host && s.paired_with.is_none() && s.io_fraction > 0.0)
                    .min_by_key(|s| s.job)
                {
                    s.paired_with = Some(j.id);
                    out.parallel_pairs.push((s.job, j.id));
                }
                out.placements.push(p);
            }
            Err(r) => out.rejected.push((j.id, r)),
        }
    }
    out
}

/// Split `demand` over machines with unprovisioned capacity `avail`,
/// proportionally per resource, so each share fits its machine and the
/// shares sum to `demand`. `None` when the machines together cannot cover it.
pub fn split_proportional(demand: ResourceVector, avail: &[ResourceVector]) -> Option<Vec<ResourceVector>> {
    let total: ResourceVector = avail.iter().copied().sum();
    if !demand.fits_within(&total) {
        return None;
    }
    let mut shares = vec![ResourceVector::ZERO; avail.len()];
    for r in Resource::ALL {
        let d = demand.get(r) as u128;
        let s = total.get(r) as u128;
        if d == 0 {
            continue;
        }
        let mut given = 0u128;
        for (sh, a) in shares.iter_mut().zip(avail) {
            let part = d * a.get(r) as u128 / s;
            sh.set(r, part as u64);
            given += part;
        }
        // Hand out the rounding remainder, first machine first.
        let mut left = d - given;
        for (sh, a) in shares.iter_mut().zip(avail) {
            if left == 0 {
                break;
            }
            let room = (a.get(r) - sh.get(r)) as u128;
            let add = room.min(left);
            sh.set(r, sh.get(r) + add as u64);
            left -= add;
        }
        debug_assert_eq!(left, 0);
    }
    Some(shares)
}

/// Heavy jobs span the smallest prefix of machines, ranked by unprovisioned
/// capacity, that together cover the demand. Each machine in the prefix gets
/// a node sized exactly to its proportional share.
pub fn place_heavy(jobs: &[JobRequest], cluster: &mut Cluster, interval: u32) -> StrategyOutcome {
    let mut out = StrategyOutcome::default();
    let norm = cluster.max_capacity();
    for j in by_arrival(jobs) {
        let order = ranked(cluster, |m| {
            cluster.machine(m).expect("listed").available().normalized_sum(&norm)
        });
        let mut acc = ResourceVector::ZERO;
        let mut prefix = None;
        for (k, m) in order.iter().enumerate() {
            acc = acc + cluster.machine(*m).expect("listed").available();
            if j.demand.fits_within(&acc) {
                prefix = Some(k + 1);
                break;
            }
        }
        let Some(k) = prefix else {
            out.rejected.push((j.id, RejectReason::NoCapacity));
            continue;
        };
        let chosen = &order[..k];
        let avail: Vec<ResourceVector> = chosen
            .iter()
            .map(|m| cluster.machine(*m).expect("listed").available())
            .collect();
        let shares = split_proportional(j.demand, &avail).expect("prefix covers demand");

        let mut targets = Vec::new();
        for (m, share) in chosen.iter().zip(shares) {
            if share.is_zero() {
                continue;
            }
            let node = cluster.provision(*m, share).expect("share fits available");
            targets.push(Share { node, machine: *m, amount: share });
        }
        let p = Placement {
            job: j.id,
            targets,
            strategy: Strategy::Heavy,
            interval,
        };
        match cluster.allocate(&p, j) {
            Ok(()) => out.placements.push(p),
            Err(_) => {
                for t in &p.targets {
                    let _ = cluster.decommission(t.node);
                }
                out.rejected.push((j.id, RejectReason::ConstraintViolation));
            }
        }
    }
    out
}

/// Earliest deadline first onto machines by descending CPU capacity: the job
/// of rank k starts its search at machine k mod P.
pub fn place_average(jobs: &[JobRequest], cluster: &mut Cluster, interval: u32) -> StrategyOutcome {
    let mut sorted: Vec<&JobRequest> = jobs.iter().collect();
    sorted.sort_by(|a, b| {
        a.deadline
            .total_cmp(&b.deadline)
            .then(a.priority.cmp(&b.priority))
            .then(a.arrival.cmp(&b.arrival))
            .then(a.id.cmp(&b.id))
    });
    let speed = ranked(cluster, |m| cluster.machine(m).expect("listed").capacity.cpu as f64);
    let p = speed.len();
    let mut out = StrategyOutcome::default();
    for (k, j) in sorted.into_iter().enumerate() {
        let order = (0..p).map(|i| speed[(k + i) % p]);
        let r = place_first_of(cluster, j, order, Strategy::Average, interval);
        record(&mut out, j, r);
    }
    out
}

/// Congestion handling: every job goes to a reserved machine, ranked by
/// bandwidth headroom. Jobs that do not fit are rejected for re-queueing.
pub fn place_diverted(
    jobs: &[JobRequest],
    cluster: &mut Cluster,
    interval: u32,
) -> Result<StrategyOutcome, SchedulerError> {
    if cluster.reserved_machines().next().is_none() {
        return Err(SchedulerError::NoReservedMachines);
    }
    let mut out = StrategyOutcome::default();
    for j in jobs {
        let order: Vec<MachineId> = ranked(cluster, |m| cluster.headroom(m).bw as f64)
            .into_iter()
            .filter(|m| cluster.machine(*m).expect("listed").reserved)
            .collect();
        let r = place_first_of(cluster, j, order, Strategy::Diverted, interval);
        record(&mut out, j, r);
    }
    Ok(out)
}

fn size_key(j: &JobRequest, norm: &ResourceVector) -> f64 {
    j.demand.normalized_sum(norm)
}

/// First-fit-decreasing over `order`; returns the outcome.
fn ffd(jobs: &[&JobRequest], cluster: &mut Cluster, order: &[MachineId], interval: u32) -> StrategyOutcome {
    let mut out = StrategyOutcome::default();
    for j in jobs {
        let r = place_first_of(cluster, j, order.iter().copied(), Strategy::Consolidated, interval);
        record(&mut out, j, r);
    }
    out
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if f(&idx) {
            return;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

/// Sub-normal handling: pack the batch onto as few machines as possible.
///
/// Jobs are taken largest first; machines are tried fullest first. Machine
/// subsets are searched smallest first and the first subset that takes the
/// whole batch wins. If none does, first-fit-decreasing runs over all
/// machines.
pub fn place_consolidated(jobs: &[JobRequest], cluster: &mut Cluster, interval: u32) -> StrategyOutcome {
    if jobs.is_empty() {
        return StrategyOutcome::default();
    }
    let norm = cluster.max_capacity();
    let mut sorted: Vec<&JobRequest> = jobs.iter().collect();
    sorted.sort_by(|a, b| size_key(b, &norm).total_cmp(&size_key(a, &norm)).then(a.id.cmp(&b.id)));
    let fullest = ranked(cluster, |m| cluster.utilization(m));

    let p = fullest.len();
    if p <= SUBSET_SEARCH_MAX_MACHINES {
        let demand: ResourceVector = jobs.iter().map(|j| j.demand).sum();
        for k in 1..p {
            let mut found = None;
            combinations(p, k, |idx| {
                let subset: Vec<MachineId> = idx.iter().map(|&i| fullest[i]).collect();
                let room: ResourceVector = subset.iter().map(|m| cluster.headroom(*m)).sum();
                if !demand.fits_within(&room) {
                    return false;
                }
                let mut trial = cluster.clone();
                let out = ffd(&sorted, &mut trial, &subset, interval);
                if out.rejected.is_empty() {
                    found = Some((trial, out));
                    true
                } else {
                    false
                }
            });
            if let Some((trial, out)) = found {
                *cluster = trial;
                return out;
            }
        }
    }
    ffd(&sorted, cluster, &fullest, interval)
}

/// Machines that received at least one share in `out`.
pub fn machines_touched(out: &StrategyOutcome) -> BTreeSet<MachineId> {
    out.placements.iter().flat_map(|p| p.machines()).collect()
}
