use std::fmt::Write as _;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use cransim_core::experiment::{compare_policies, sweep_thresholds, sweep_windows};
use cransim_core::sim::{run_paired, strategy_counts, SimReport};
use cransim_core::TrafficState;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{fmt_value, secs, write_atomic, Report, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn runtime(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

const STATES: [TrafficState; 5] = [
    TrafficState::Light,
    TrafficState::Straggler,
    TrafficState::Hog,
    TrafficState::Heavy,
    TrafficState::Average,
];

fn point_id(bw: f64, et: f64) -> String {
    format!("bw{}_et{}", fmt_value(bw), fmt_value(et))
}

fn meta(cfg: &ExperimentConfig, command: &str) -> Vec<(String, String)> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    vec![
        ("command".into(), command.into()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("started_unix".into(), started.to_string()),
        ("os".into(), format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH)),
        ("available_threads".into(), threads.to_string()),
        (
            "execution".into(),
            format!("{:?} (parallel build: {})", cfg.execution, cfg!(feature = "parallel")),
        ),
        ("seed".into(), cfg.sim.seed.to_string()),
    ]
}

fn finish(cfg: &ExperimentConfig, mut report: Report, t0: Instant) -> Result<Report, CliError> {
    report.meta.push(("wall_seconds".into(), secs(t0.elapsed())));
    report
        .write(&cfg.out)
        .map_err(|e| runtime(format!("writing reports to {}: {e}", cfg.out.display())))?;
    Ok(report)
}

fn checked(cfg: &ExperimentConfig) -> Result<Vec<cransim_core::JobRequest>, CliError> {
    cfg.validate()?;
    cfg.prepare_out()?;
    Ok(cfg.workload()?)
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let t0 = Instant::now();
    let jobs = checked(cfg)?;
    let (rep, fcfs) = run_paired(&cfg.sim, &jobs).map_err(runtime)?;

    let mut main = Table::new(
        format!("run: {} on {} jobs, seed {}", rep.policy, rep.jobs, rep.seed),
        &[
            "bw_utilization",
            "et_consumption",
            "total_latency",
            "latency_reduction",
            "congestion_rate",
            "completed",
            "failed",
            "hybrid_pairs",
            "light",
            "straggler",
            "hog",
            "heavy",
            "average",
        ],
    );
    let mut row = vec![
        rep.bw_utilization(),
        rep.et_consumption(),
        rep.total_latency(),
        rep.latency_reduction.unwrap_or(0.0),
        rep.congestion_rate,
        rep.metrics.completed as f64,
        rep.metrics.failed as f64,
        rep.hybrid_pairs as f64,
    ];
    row.extend(STATES.iter().map(|s| rep.fractions.percent(*s)));
    main.push(format!("run/{}", rep.policy), row);

    let mut fcfs_table = Table::new(
        "fcfs reference",
        &["bw_utilization", "et_consumption", "total_latency", "failed"],
    );
    fcfs_table.push(
        "run/fcfs-reference",
        vec![
            fcfs.bw_utilization(),
            fcfs.et_consumption(),
            fcfs.total_latency(),
            fcfs.metrics.failed as f64,
        ],
    );

    let counts = strategy_counts(&rep.records);
    let names: Vec<&'static str> = counts.keys().map(|s| s.name()).collect();
    let mut strategies = Table::new("placements by strategy", &names);
    strategies.push(
        format!("run/{}/strategy", rep.policy),
        counts.values().map(|n| *n as f64).collect(),
    );

    write_atomic(&cfg.out.join("records.csv"), records_csv(&rep).as_bytes()).map_err(runtime)?;
    write_atomic(&cfg.out.join("assessments.csv"), assessments_csv(&rep).as_bytes()).map_err(runtime)?;
    write_atomic(&cfg.out.join("failures.csv"), failures_csv(&rep).as_bytes()).map_err(runtime)?;

    let mut report = Report {
        tables: vec![main, fcfs_table, strategies],
        meta: meta(cfg, "run"),
    };
    report.meta.push(("jobs".into(), jobs.len().to_string()));
    finish(cfg, report, t0)
}

fn records_csv(rep: &SimReport) -> String {
    let mut s = String::from(
        "job,state,strategy,machines,start_interval,hold_until,start_s,duration_s,completion_s,waited_s,io_fraction,paired_with\n",
    );
    for r in &rep.records {
        let machines: Vec<String> = r.placement.machines().map(|m| m.0.to_string()).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.job.0,
            r.state,
            r.placement.strategy.name(),
            machines.join(";"),
            r.start_interval,
            r.hold_until,
            fmt_value(r.start),
            fmt_value(r.duration),
            fmt_value(r.completion),
            fmt_value(r.waited),
            r.io_fraction.map(fmt_value).unwrap_or_default(),
            r.paired_with.map(|j| j.0.to_string()).unwrap_or_default(),
        );
    }
    s
}

fn assessments_csv(rep: &SimReport) -> String {
    let mut s = String::from("interval,predicted,observed,deviation,status,confirmed,violated,directive\n");
    for (a, d) in rep.assessments.iter().zip(rep.directives.iter().skip(rep.directives.len() - rep.assessments.len())) {
        let violated: Vec<String> = a.violated.iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{:?}",
            a.interval,
            fmt_value(a.predicted),
            fmt_value(a.observed),
            fmt_value(a.deviation),
            a.status,
            a.congestion_confirmed,
            violated.join(";"),
            d,
        );
    }
    s
}

fn failures_csv(rep: &SimReport) -> String {
    let mut s = String::from("job,state,reason,interval,waited_s,exec_time_s\n");
    for f in &rep.failures {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            f.job.0,
            f.state,
            f.reason,
            f.interval,
            fmt_value(f.waited),
            fmt_value(f.exec_time)
        );
    }
    s
}

pub fn cmd_sweep_thresholds(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let t0 = Instant::now();
    let jobs = checked(cfg)?;
    let rows = sweep_thresholds(
        &cfg.sim,
        &jobs,
        &cfg.sweep.bw_thresholds,
        &cfg.sweep.et_thresholds,
        cfg.execution,
    )
    .map_err(runtime)?;
    let mut t = Table::new(
        format!("threshold sweep: tmcrn vs fcfs, {} jobs, seed {}", jobs.len(), cfg.sim.seed),
        &[
            "light",
            "straggler",
            "hog",
            "heavy",
            "average",
            "bw_utilization",
            "et_consumption",
            "latency_reduction",
            "congestion_rate",
            "failed",
        ],
    );
    for r in &rows {
        t.push(
            point_id(r.bw_thr, r.et_thr),
            vec![
                r.light,
                r.straggler,
                r.hog,
                r.heavy,
                r.average,
                r.bw_utilization,
                r.et_consumption,
                r.latency_reduction,
                r.congestion_rate,
                r.failed as f64,
            ],
        );
    }
    let report = Report {
        tables: vec![t],
        meta: meta(cfg, "sweep-thresholds"),
    };
    finish(cfg, report, t0)
}

pub fn cmd_compare_policies(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let t0 = Instant::now();
    let jobs = checked(cfg)?;
    let rows = compare_policies(&cfg.sim, &jobs, &cfg.sweep.policies, &cfg.sweep.points, cfg.execution)
        .map_err(runtime)?;
    let mut t = Table::new(
        format!("policy comparison, {} jobs, seed {}", jobs.len(), cfg.sim.seed),
        &[
            "congestion_rate",
            "bw_utilization",
            "et_consumption",
            "total_latency",
            "latency_reduction",
            "failed",
        ],
    );
    for r in &rows {
        t.push(
            format!("{}/{}", r.policy, point_id(r.bw_thr, r.et_thr)),
            vec![
                r.congestion_rate,
                r.bw_utilization,
                r.et_consumption,
                r.total_latency,
                r.latency_reduction,
                r.failed as f64,
            ],
        );
    }
    let report = Report {
        tables: vec![t],
        meta: meta(cfg, "compare-policies"),
    };
    finish(cfg, report, t0)
}

pub fn cmd_sweep_windows(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let t0 = Instant::now();
    cfg.validate()?;
    cfg.prepare_out()?;
    let rows = sweep_windows(&cfg.window_sweep(), &cfg.window_predictor).map_err(runtime)?;
    let mut t = Table::new(
        format!(
            "forecast window sweep: {} minutes, lags {}, seed {}",
            cfg.series.minutes, cfg.window_predictor.window, cfg.series.seed
        ),
        &["points", "mse", "mae"],
    );
    let mut report = Report {
        tables: Vec::new(),
        meta: meta(cfg, "sweep-windows"),
    };
    for r in &rows {
        let id = format!("window{}", r.window_min);
        t.push(id.clone(), vec![r.points as f64, r.mse, r.mae]);
        report.meta.push((format!("{id}_train_seconds"), secs(r.train_time)));
    }
    report.tables.push(t);
    finish(cfg, report, t0)
}
