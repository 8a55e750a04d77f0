mod common;

use cransim_core::scheduler::{baseline_fcfs, place_light, Policy};
use cransim_core::sim::{run, SimConfig};
use cransim_core::workload::{generate, read_trace, write_trace, GenSpec, PM_TYPES, VM_CATALOG};
use cransim_core::{Cluster, JobRequest, ResourceVector, TrafficState};
use proptest::prelude::*;

fn small_run(seed: u64, jobs: usize) -> (SimConfig, Vec<JobRequest>) {
    let spec = GenSpec { jobs, intervals: 12, seed, ..GenSpec::default() };
    let cfg = SimConfig { intervals: 12, seed, ..SimConfig::default() };
    (cfg, generate(&spec).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_round_trips(seed in any::<u64>(), jobs in 1usize..300) {
        let w = generate(&GenSpec { jobs, seed, ..GenSpec::default() }).unwrap();
        let mut buf = Vec::new();
        write_trace(&w, &mut buf).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        prop_assert_eq!(back, w.clone());
        for j in &w {
            prop_assert!(j.validate().is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn report_is_a_pure_function_of_inputs(seed in 0u64..500, pol in 0usize..4) {
        let (mut cfg, w) = small_run(seed, 150);
        cfg.policy = Policy::ALL[pol];
        let a = run(&cfg, &w).unwrap();
        let b = run(&cfg, &w).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// With the reserved machines listed last, light placement skipping them
    /// is FCFS on the remaining machines, as long as FCFS never blocks.
    #[test]
    fn light_flow_is_fcfs_on_unreserved_machines(
        open in prop::collection::vec(0usize..4, 1..5),
        reserved in prop::collection::vec(0usize..4, 0..3),
        demands in prop::collection::vec((1u64..900, 1u64..1500, 1u64..900, 0u32..3), 1..15),
    ) {
        let jobs: Vec<JobRequest> = demands
            .iter()
            .enumerate()
            .map(|(i, (c, m, b, a))| {
                JobRequest::new(i as u64, *a, ResourceVector::new(*c, *m, *b), 60.0)
                    .unwrap()
                    .with_state(TrafficState::Light)
            })
            .collect();
        let mut machines: Vec<_> = open.iter().map(|t| (PM_TYPES[*t], false)).collect();
        machines.extend(reserved.iter().map(|t| (PM_TYPES[*t], true)));
        let mut full = Cluster::new(machines, VM_CATALOG.to_vec()).unwrap();
        let mut unreserved =
            Cluster::new(open.iter().map(|t| (PM_TYPES[*t], false)).collect(), VM_CATALOG.to_vec()).unwrap();
        let fcfs = baseline_fcfs(&jobs, &mut unreserved, 0);
        prop_assume!(fcfs.rejected.is_empty());
        let light = place_light(&jobs, &mut full, true, 0);
        let key = |o: &cransim_core::scheduler::StrategyOutcome| {
            o.placements.iter().map(|p| (p.job, p.targets.clone())).collect::<Vec<_>>()
        };
        prop_assert_eq!(key(&light), key(&fcfs));
    }
}

/// Congestion is judged on deviation relative to the forecast, which scales
/// with the load, so doubling demand does not raise it run by run. Summed
/// over a fixed set of runs it still does not go down.
#[test]
fn doubling_bandwidth_does_not_lower_total_congestion() {
    let (mut base, mut doubled) = (0.0, 0.0);
    for seed in 0..12 {
        let spec = GenSpec { jobs: 250, seed, ..GenSpec::default() };
        let cfg = SimConfig { seed, ..SimConfig::default() };
        let w = generate(&spec).unwrap();
        let d: Vec<JobRequest> = w
            .iter()
            .map(|j| {
                let mut j = j.clone();
                j.demand.bw *= 2;
                j
            })
            .collect();
        base += run(&cfg, &w).unwrap().congestion_rate;
        doubled += run(&cfg, &d).unwrap().congestion_rate;
    }
    assert!(doubled >= base, "{base} -> {doubled}");
}

#[test]
fn light_only_run_keeps_light_placements_off_reserved_machines() {
    // Everything light: absolute cuts above every demand.
    use cransim_core::classifier::{ClassifierConfig, Threshold};
    use cransim_core::workload::ClusterSpec;
    let spec = GenSpec { jobs: 60, intervals: 12, ..GenSpec::default() };
    let w = generate(&spec).unwrap();
    let classifier = ClassifierConfig {
        bw_thr: Threshold::Absolute(1e9),
        et_thr: Threshold::Absolute(1e9),
        avg_band: None,
    };
    let cfg = SimConfig {
        intervals: 12,
        classifier,
        cluster: ClusterSpec { pm_counts: [1, 1, 1, 1], reserved: Some(vec![3]) },
        ..SimConfig::default()
    };
    let tm = run(&cfg, &w).unwrap();
    assert!(tm.records.iter().all(|r| r.state == TrafficState::Light));
    for r in tm.records.iter().filter(|r| r.placement.strategy == cransim_core::Strategy::Light) {
        assert!(r.placement.machines().all(|m| m.0 != 3), "{:?}", r.placement);
    }
    assert!(tm.records.iter().any(|r| r.placement.strategy == cransim_core::Strategy::Light));
}
