mod common;

use common::{cluster, jobs, preload, STATES};
use cransim_core::analyzer::Directive;
use cransim_core::scheduler::{
    dispatch, machines_touched, place_average, place_heavy, place_hog, SchedulingQueue,
};
use cransim_core::workload::{cluster_from_catalog, PM_TYPES, VM_CATALOG};
use cransim_core::{Cluster, JobRequest, MachineId, ResourceVector, TrafficState};
use proptest::prelude::*;

fn heavy_job(d: ResourceVector) -> JobRequest {
    JobRequest::new(0, 0, d, 600.0).unwrap().with_state(TrafficState::Heavy)
}

/// Smallest number of machines whose unprovisioned capacity jointly covers
/// `demand`, by trying every subset.
fn brute_min_cover(c: &Cluster, demand: &ResourceVector) -> Option<usize> {
    let p = c.p();
    (1u32..(1 << p))
        .filter(|mask| {
            let sum: ResourceVector = (0..p)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| c.machines()[i].available())
                .sum();
            demand.fits_within(&sum)
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
}

/// Machines by descending normalized unprovisioned capacity, lowest id on ties.
fn capacity_order(c: &Cluster) -> Vec<MachineId> {
    let norm = c.max_capacity();
    let mut v: Vec<(MachineId, f64)> = c
        .machines()
        .iter()
        .map(|m| (m.id, m.available().normalized_sum(&norm)))
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(m, _)| m).collect()
}

fn scale_bw(v: ResourceVector, k: u64) -> ResourceVector {
    ResourceVector::new(v.cpu, v.mem, v.bw * k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn heavy_uses_the_minimal_covering_prefix(
        mut c in cluster(),
        fillers in jobs(5),
        cpu in 1u64..12_000,
        mem in 1u64..80_000,
        bw in 1u64..18_000,
    ) {
        preload(&mut c, &fillers);
        let j = heavy_job(ResourceVector::new(cpu, mem, bw));
        let order = capacity_order(&c);
        let mut acc = ResourceVector::ZERO;
        let mut prefix = None;
        for (k, m) in order.iter().enumerate() {
            acc = acc + c.machine(*m).unwrap().available();
            if j.demand.fits_within(&acc) {
                prefix = Some(k + 1);
                break;
            }
        }
        let mut after = c.clone();
        let out = place_heavy(std::slice::from_ref(&j), &mut after, 0);
        match prefix {
            None => prop_assert_eq!(out.rejected.len(), 1),
            Some(k) => {
                prop_assert_eq!(out.placements.len(), 1);
                let p = &out.placements[0];
                prop_assert!(p.targets.len() <= k);
                prop_assert!(p.machines().all(|m| order[..k].contains(&m)));
                prop_assert_eq!(p.total(), j.demand);
                let min = brute_min_cover(&c, &j.demand).unwrap();
                prop_assert!(min <= p.targets.len());
            }
        }
    }

    #[test]
    fn heavy_matches_brute_force_on_fresh_clusters(
        counts in prop::array::uniform4(0usize..=2),
        cpu in 1u64..12_000,
        mem in 1u64..80_000,
        bw in 1u64..18_000,
    ) {
        let p: usize = counts.iter().sum();
        prop_assume!(p > 0 && p <= 5);
        let c = cluster_from_catalog(counts, &VM_CATALOG).unwrap();
        let j = heavy_job(ResourceVector::new(cpu, mem, bw));
        let mut after = c.clone();
        let out = place_heavy(std::slice::from_ref(&j), &mut after, 0);
        match brute_min_cover(&c, &j.demand) {
            None => prop_assert_eq!(out.rejected.len(), 1),
            Some(min) => prop_assert_eq!(out.placements[0].targets.len(), min),
        }
    }

    #[test]
    fn hog_choice_is_invariant_to_bandwidth_scale(
        types in prop::collection::vec(0usize..4, 1..6),
        loads in prop::collection::vec((0u64..1500, 0u64..1500, 0u64..1500), 6),
        d in (1u64..800, 1u64..800, 1u64..800),
        k in 2u64..6,
    ) {
        let build = |k: u64| {
            let machines = types.iter().map(|t| (scale_bw(PM_TYPES[*t], k), false)).collect();
            let catalog = VM_CATALOG.iter().map(|v| scale_bw(*v, k)).collect();
            let mut c = Cluster::new(machines, catalog).unwrap();
            let fillers: Vec<JobRequest> = loads
                .iter()
                .enumerate()
                .map(|(i, l)| JobRequest::new(i as u64, 0, ResourceVector::new(l.0 + 1, l.1 + 1, (l.2 + 1) * k), 1.0).unwrap())
                .collect();
            preload(&mut c, &fillers);
            c
        };
        let hog = |k: u64| {
            JobRequest::new(99, 0, ResourceVector::new(d.0, d.1, d.2 * k), 10.0)
                .unwrap()
                .with_state(TrafficState::Hog)
        };
        let pick = |k: u64| {
            let mut c = build(k);
            let out = place_hog(&[hog(k)], &mut c, &mut [], 0);
            out.placements.first().map(|p| p.targets[0].machine)
        };
        prop_assert_eq!(pick(1), pick(k));
    }

    #[test]
    fn average_places_in_deadline_order(mut c in cluster(), fillers in jobs(4), batch in jobs(12)) {
        preload(&mut c, &fillers);
        let batch: Vec<JobRequest> = batch.into_iter().map(|j| j.with_state(TrafficState::Average)).collect();
        let out = place_average(&batch, &mut c, 0);
        let deadlines: Vec<f64> = out
            .placements
            .iter()
            .map(|p| batch.iter().find(|j| j.id == p.job).unwrap().deadline)
            .collect();
        prop_assert!(deadlines.windows(2).all(|w| w[0] <= w[1]), "{deadlines:?}");
    }
}

/// Jobs small enough to fit a catalog node, at most a few per state.
fn light_batch() -> impl Strategy<Value = Vec<JobRequest>> {
    prop::collection::vec((1u64..900, 1u64..1500, 1u64..900, 0usize..5), 1..10).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (cpu, mem, bw, s))| {
                JobRequest::new(i as u64, 0, ResourceVector::new(cpu, mem, bw), 100.0)
                    .unwrap()
                    .with_state(STATES[s])
                    .with_deadline(1000.0 + i as f64)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn consolidation_touches_no_more_machines_than_normal_flow(
        counts in prop::array::uniform4(0usize..=2),
        batch in light_batch(),
    ) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let c = cluster_from_catalog(counts, &VM_CATALOG).unwrap();
        let run = |d: Directive| {
            let mut q = SchedulingQueue::new();
            q.extend(batch.iter().cloned());
            let mut k = c.clone();
            dispatch(&mut q, &mut k, d, &mut Vec::new(), 0).unwrap()
        };
        let normal = run(Directive::NormalFlow);
        let packed = run(Directive::Consolidate);
        // A sub-normal interval is one where everything fits.
        prop_assume!(normal.rejected.is_empty());
        prop_assert!(packed.rejected.is_empty());
        prop_assert!(
            machines_touched(&packed).len() <= machines_touched(&normal).len(),
            "consolidated {:?} vs normal {:?}",
            machines_touched(&packed),
            machines_touched(&normal)
        );
    }
}
