//! Batch experiments: threshold sweeps, policy comparisons and forecast
//! window sweeps. Independent cells run through [`crate::par`]; results come
//! back in input order so output does not depend on the execution mode.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierConfig;
use crate::domain::{JobRequest, TrafficState};
use crate::gbt::{GbtError, TrafficPredictor};
use crate::par::{self, Execution};
use crate::scheduler::Policy;
use crate::sim::{latency_reduction, run, SimConfig, SimError, SimReport};
use crate::workload::{aggregate, seasonal_series, SeriesSpec};

/// One row of the threshold sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub bw_thr: f64,
    pub et_thr: f64,
    pub light: f64,
    pub straggler: f64,
    pub hog: f64,
    pub heavy: f64,
    pub average: f64,
    pub bw_utilization: f64,
    pub et_consumption: f64,
    pub latency_reduction: f64,
    pub congestion_rate: f64,
    pub failed: usize,
}

impl ThresholdRow {
    fn from_report(bw_thr: f64, et_thr: f64, r: &SimReport, fcfs_latency: f64) -> Self {
        let f = &r.fractions;
        ThresholdRow {
            bw_thr,
            et_thr,
            light: f.percent(TrafficState::Light),
            straggler: f.percent(TrafficState::Straggler),
            hog: f.percent(TrafficState::Hog),
            heavy: f.percent(TrafficState::Heavy),
            average: f.percent(TrafficState::Average),
            bw_utilization: r.bw_utilization(),
            et_consumption: r.et_consumption(),
            latency_reduction: latency_reduction(fcfs_latency, r.total_latency()),
            congestion_rate: r.congestion_rate,
            failed: r.failures.len(),
        }
    }

    /// Sum of the four state percentages.
    pub fn four_state_total(&self) -> f64 {
        self.light + self.straggler + self.hog + self.heavy
    }
}

fn with_thresholds(base: &SimConfig, bw: f64, et: f64, policy: Policy) -> SimConfig {
    SimConfig {
        policy,
        classifier: ClassifierConfig {
            avg_band: base.classifier.avg_band,
            ..ClassifierConfig::percentiles(bw, et)
        },
        ..base.clone()
    }
}

fn check_axis(name: &'static str, v: &[f64]) -> Result<(), SimError> {
    if v.is_empty() {
        return Err(SimError::InvalidConfig {
            field: name,
            msg: "sweep list is empty".into(),
        });
    }
    Ok(())
}

/// Run tmcrn for every (bw, et) threshold pair, row-major over `bw_thrs`.
/// The FCFS twin ignores traffic states, so one FCFS run serves every row.
pub fn sweep_thresholds(
    base: &SimConfig,
    workload: &[JobRequest],
    bw_thrs: &[f64],
    et_thrs: &[f64],
    exec: Execution,
) -> Result<Vec<ThresholdRow>, SimError> {
    check_axis("bw_thresholds", bw_thrs)?;
    check_axis("et_thresholds", et_thrs)?;
    let cells: Vec<(f64, f64)> = bw_thrs
        .iter()
        .flat_map(|&b| et_thrs.iter().map(move |&e| (b, e)))
        .collect();
    for &(b, e) in &cells {
        with_thresholds(base, b, e, Policy::Tmcrn).validate()?;
    }
    let fcfs = run(&with_thresholds(base, cells[0].0, cells[0].1, Policy::Fcfs), workload)?;
    let reports = par::map(exec, &cells, |&(b, e)| run(&with_thresholds(base, b, e, Policy::Tmcrn), workload));
    cells
        .iter()
        .zip(reports)
        .map(|(&(b, e), r)| Ok(ThresholdRow::from_report(b, e, &r?, fcfs.total_latency())))
        .collect()
}

/// One (threshold point, policy) cell of a policy comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub policy: Policy,
    pub bw_thr: f64,
    pub et_thr: f64,
    pub congestion_rate: f64,
    pub bw_utilization: f64,
    pub et_consumption: f64,
    pub total_latency: f64,
    pub latency_reduction: f64,
    pub failed: usize,
}

/// Every policy at every threshold point on the same workload and seed.
pub fn compare_policies(
    base: &SimConfig,
    workload: &[JobRequest],
    policies: &[Policy],
    points: &[(f64, f64)],
    exec: Execution,
) -> Result<Vec<PolicyRow>, SimError> {
    if policies.is_empty() {
        return Err(SimError::InvalidConfig {
            field: "policies",
            msg: "policy list is empty".into(),
        });
    }
    if points.is_empty() {
        return Err(SimError::InvalidConfig {
            field: "thresholds",
            msg: "threshold list is empty".into(),
        });
    }
    // FCFS goes first at each point so the others can be compared with it.
    let mut cells = Vec::new();
    for &(b, e) in points {
        cells.push((b, e, Policy::Fcfs));
        cells.extend(policies.iter().filter(|p| **p != Policy::Fcfs).map(|&p| (b, e, p)));
    }
    for &(b, e, p) in &cells {
        with_thresholds(base, b, e, p).validate()?;
    }
    let reports = par::map(exec, &cells, |&(b, e, p)| run(&with_thresholds(base, b, e, p), workload));

    let mut rows = Vec::new();
    let mut fcfs_latency = 0.0;
    for (&(b, e, p), r) in cells.iter().zip(reports) {
        let r = r?;
        if p == Policy::Fcfs {
            fcfs_latency = r.total_latency();
        }
        if !policies.contains(&p) {
            continue;
        }
        rows.push(PolicyRow {
            policy: p,
            bw_thr: b,
            et_thr: e,
            congestion_rate: r.congestion_rate,
            bw_utilization: r.bw_utilization(),
            et_consumption: r.et_consumption(),
            total_latency: r.total_latency(),
            latency_reduction: latency_reduction(fcfs_latency, r.total_latency()),
            failed: r.failures.len(),
        });
    }
    Ok(rows)
}

/// Forecast accuracy when the minute series is aggregated into windows of a
/// given width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window_min: usize,
    pub points: usize,
    /// Held-out errors on the min-max scale of the training part.
    pub mse: f64,
    pub mae: f64,
    pub train_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSweep {
    pub series: SeriesSpec,
    pub windows: Vec<usize>,
    pub train_fraction: f64,
    /// Training is timed this many times; the fastest run is reported.
    pub timing_repeats: usize,
}

impl Default for WindowSweep {
    fn default() -> Self {
        WindowSweep {
            series: SeriesSpec::default(),
            windows: vec![5, 10, 30, 60],
            train_fraction: 0.8,
            timing_repeats: 3,
        }
    }
}

/// Train on the first part of `series`, forecast each held-out point one
/// step ahead from the actual preceding values.
pub fn evaluate_forecast(
    series: &[f64],
    booster: &crate::gbt::BoostConfig,
    train_fraction: f64,
    timing_repeats: usize,
) -> Result<(f64, f64, Duration), GbtError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(GbtError::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let split = (series.len() as f64 * train_fraction).round() as usize;
    let train = &series[..split];
    let mut best = Duration::MAX;
    let mut model = None;
    for _ in 0..timing_repeats.max(1) {
        let t0 = Instant::now();
        let m = TrafficPredictor::train_series(train, booster, crate::analyzer::Channel::Bandwidth)?;
        best = best.min(t0.elapsed());
        model = Some(m);
    }
    let model = model.expect("trained at least once");
    let w = model.window();
    let start = split.max(w);
    if start >= series.len() {
        return Err(GbtError::InsufficientHistory {
            needed: start + 1,
            got: series.len(),
        });
    }
    let (mut se, mut ae) = (0.0, 0.0);
    for i in start..series.len() {
        let pred = model.predict_next_series(&series[i - w..i])?;
        let err = model.scale.normalize(pred) - model.scale.normalize(series[i]);
        se += err * err;
        ae += err.abs();
    }
    let n = (series.len() - start) as f64;
    Ok((se / n, ae / n, best))
}

/// Aggregate one synthetic minute series at each width and evaluate the
/// forecaster on it. Widths run one after another so the timings do not
/// compete for cores.
pub fn sweep_windows(
    sweep: &WindowSweep,
    booster: &crate::gbt::BoostConfig,
) -> Result<Vec<WindowRow>, GbtError> {
    if sweep.windows.is_empty() || sweep.windows.contains(&0) {
        return Err(GbtError::InvalidConfig("windows must be a non-empty list of positive widths".into()));
    }
    let minutes = seasonal_series(&sweep.series);
    sweep
        .windows
        .iter()
        .map(|&width| {
            let series = aggregate(&minutes, width);
            let (mse, mae, train_time) =
                evaluate_forecast(&series, booster, sweep.train_fraction, sweep.timing_repeats)?;
            Ok(WindowRow {
                window_min: width,
                points: series.len(),
                mse,
                mae,
                train_time,
            })
        })
        .collect()
}

/// Count adjacent pairs where `values` decreases.
pub fn inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] < w[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::BoostConfig;
    use crate::workload::{generate, GenSpec};

    fn small() -> (SimConfig, Vec<JobRequest>) {
        let spec = GenSpec {
            jobs: 80,
            intervals: 8,
            ..GenSpec::default()
        };
        let cfg = SimConfig {
            intervals: 8,
            ..SimConfig::default()
        };
        (cfg, generate(&spec).unwrap())
    }

    #[test]
    fn threshold_sweep_shape() {
        let (cfg, w) = small();
        let rows = sweep_thresholds(&cfg, &w, &[25.0, 75.0], &[50.0, 90.0], Execution::Sequential).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[1].bw_thr, rows[1].et_thr), (25.0, 90.0));
        for r in &rows {
            assert!((r.four_state_total() - 100.0).abs() < 1e-9);
        }
        let one = sweep_thresholds(&cfg, &w, &[50.0], &[50.0], Execution::Sequential).unwrap();
        assert_eq!(one.len(), 1);
        assert!(sweep_thresholds(&cfg, &w, &[], &[50.0], Execution::Sequential).is_err());
    }

    #[test]
    fn sweeps_agree_across_modes() {
        let (cfg, w) = small();
        let a = sweep_thresholds(&cfg, &w, &[25.0, 50.0], &[25.0, 75.0], Execution::Sequential).unwrap();
        let b = sweep_thresholds(&cfg, &w, &[25.0, 50.0], &[25.0, 75.0], Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let pols = [Policy::Tmcrn, Policy::RandomFit];
        let a = compare_policies(&cfg, &w, &pols, &[(75.0, 75.0)], Execution::Sequential).unwrap();
        let b = compare_policies(&cfg, &w, &pols, &[(75.0, 75.0)], Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compare_two_policies_per_point() {
        let (cfg, w) = small();
        let rows = compare_policies(
            &cfg,
            &w,
            &[Policy::Tmcrn, Policy::FirstFit],
            &[(50.0, 50.0), (75.0, 75.0)],
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.policy != Policy::Fcfs));
        let with_fcfs = compare_policies(&cfg, &w, &[Policy::Fcfs], &[(50.0, 50.0)], Execution::Sequential).unwrap();
        assert_eq!(with_fcfs[0].latency_reduction, 0.0);
    }

    #[test]
    fn forecast_on_a_clean_ramp_is_near_exact() {
        let series: Vec<f64> = (0..200).map(|i| (i % 20) as f64).collect();
        let (mse, mae, _) = evaluate_forecast(&series, &BoostConfig::default(), 0.8, 1).unwrap();
        assert!(mse < 1e-3, "{mse}");
        assert!(mae < 0.03, "{mae}");
    }

    #[test]
    fn window_sweep_rows() {
        let sweep = WindowSweep {
            series: SeriesSpec {
                minutes: 2000,
                ..SeriesSpec::default()
            },
            windows: vec![10],
            train_fraction: 0.8,
            timing_repeats: 1,
        };
        let rows = sweep_windows(&sweep, &BoostConfig::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].points, 200);
        let bad = WindowSweep { windows: vec![], ..sweep };
        assert!(sweep_windows(&bad, &BoostConfig::default()).is_err());
    }

    #[test]
    fn inversion_count() {
        assert_eq!(inversions(&[1.0, 2.0, 2.0, 3.0]), 0);
        assert_eq!(inversions(&[1.0, 0.5, 2.0, 1.0]), 2);
    }
}
