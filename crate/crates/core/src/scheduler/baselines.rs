use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{place_first_of, place_on, RejectReason, StrategyOutcome};
use crate::domain::{Cluster, JobRequest, MachineId, Strategy};

fn all_machines(cluster: &Cluster) -> Vec<MachineId> {
    cluster.machines().iter().map(|m| m.id).collect()
}

/// Jobs strictly in arrival order, each onto the first machine (by id) that
/// can host it. The first job that cannot be placed blocks everything queued
/// behind it until the next interval.
pub fn baseline_fcfs(jobs: &[JobRequest], cluster: &mut Cluster, interval: u32) -> StrategyOutcome {
    let mut sorted: Vec<&JobRequest> = jobs.iter().collect();
    sorted.sort_by_key(|j| (j.arrival, j.id));
    let order = all_machines(cluster);
    let mut out = StrategyOutcome::default();
    let mut blocked = false;
    for j in sorted {
        if blocked {
            out.rejected.push((j.id, RejectReason::NoCapacity));
            continue;
        }
        match place_first_of(cluster, j, order.iter().copied(), Strategy::Fcfs, interval) {
            Ok(p) => out.placements.push(p),
            Err(r) => {
                out.rejected.push((j.id, r));
                blocked = true;
            }
        }
    }
    out
}

/// Jobs in the order given, each onto the first machine (by id) that can host
/// it.
pub fn baseline_first_fit(jobs: &[JobRequest], cluster: &mut Cluster, interval: u32) -> StrategyOutcome {
    scan(jobs.iter().collect(), cluster, Strategy::FirstFit, interval)
}

/// First-fit in arrival order, used to distribute the first interval's traffic
/// before any forecast exists.
pub fn place_warm_up(jobs: &[JobRequest], cluster: &mut Cluster, interval: u32) -> StrategyOutcome {
    let mut sorted: Vec<&JobRequest> = jobs.iter().collect();
    sorted.sort_by_key(|j| (j.arrival, j.id));
    scan(sorted, cluster, Strategy::WarmUp, interval)
}

fn scan(jobs: Vec<&JobRequest>, cluster: &mut Cluster, strategy: Strategy, interval: u32) -> StrategyOutcome {
    let order = all_machines(cluster);
    let mut out = StrategyOutcome::default();
    for j in jobs {
        match place_first_of(cluster, j, order.iter().copied(), strategy, interval) {
            Ok(p) => out.placements.push(p),
            Err(r) => out.rejected.push((j.id, r)),
        }
    }
    out
}

/// Jobs in the order given, each onto a machine drawn uniformly from those
/// that can host it.
pub fn baseline_random_fit(
    jobs: &[JobRequest],
    cluster: &mut Cluster,
    rng: &mut ChaCha8Rng,
    interval: u32,
) -> StrategyOutcome {
    let order = all_machines(cluster);
    let mut out = StrategyOutcome::default();
    for j in jobs {
        let feasible: Vec<MachineId> = order
            .iter()
            .copied()
            .filter(|m| cluster.can_host(*m, &j.demand))
            .collect();
        if feasible.is_empty() {
            out.rejected.push((j.id, RejectReason::NoCapacity));
            continue;
        }
        let m = feasible[rng.random_range(0..feasible.len())];
        match place_on(cluster, j, m, Strategy::RandomFit, interval) {
            Ok(p) => out.placements.push(p),
            Err(r) => out.rejected.push((j.id, r)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::ResourceVector;
    use crate::workload::VM_CATALOG;
    use rand::SeedableRng;

    fn twin() -> Cluster {
        let m = ResourceVector::with_gb(4076, 64, 8000);
        Cluster::new(vec![(m, false), (m, false)], VM_CATALOG.to_vec()).unwrap()
    }

    fn small(id: u64) -> JobRequest {
        JobRequest::new(id, 0, ResourceVector::with_gb(100, 1, 100), 10.0).unwrap()
    }

    #[test]
    fn single_job_lands_on_machine_zero() {
        for f in [baseline_fcfs, baseline_first_fit] {
            let mut c = twin();
            let out = f(&[small(0)], &mut c, 0);
            assert_eq!(out.placements[0].targets[0].machine, MachineId(0));
        }
    }

    #[test]
    fn fcfs_sorts_by_arrival() {
        let mut c = twin();
        let mut late = small(0);
        late.arrival = 5;
        let out = baseline_fcfs(&[late, small(1)], &mut c, 5);
        assert_eq!(out.placements[0].job.0, 1);
    }

    #[test]
    fn fcfs_blocks_behind_head_but_first_fit_does_not() {
        let m = ResourceVector::with_gb(1060, 2, 2000);
        let mk = || Cluster::new(vec![(m, false)], VM_CATALOG.to_vec()).unwrap();
        let big = JobRequest::new(0, 0, ResourceVector::with_gb(2000, 1, 100), 10.0).unwrap();
        let jobs = [big, small(1)];

        let mut c = mk();
        let out = baseline_fcfs(&jobs, &mut c, 0);
        assert!(out.placements.is_empty());
        assert_eq!(out.rejected.len(), 2);

        let mut c = mk();
        let out = baseline_first_fit(&jobs, &mut c, 0);
        assert_eq!(out.placements.len(), 1);
        assert_eq!(out.placements[0].job.0, 1);
    }

    #[test]
    fn random_fit_is_seed_deterministic() {
        let jobs: Vec<JobRequest> = (0..20).map(small).collect();
        let run = |seed| {
            let mut c = twin();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            baseline_random_fit(&jobs, &mut c, &mut rng, 0)
        };
        assert_eq!(run(7), run(7));
    }

    #[test]
    fn random_fit_is_uniform_on_symmetric_cluster() {
        let mut zero = 0;
        for seed in 0..1000 {
            let mut c = twin();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = baseline_random_fit(&[small(0)], &mut c, &mut rng, 0);
            if out.placements[0].targets[0].machine == MachineId(0) {
                zero += 1;
            }
        }
        let share = zero as f64 / 1000.0;
        assert!((share - 0.5).abs() <= 0.05, "share {share}");
    }
}
