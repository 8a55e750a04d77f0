//! Workload acquisition: CSV traces, a seeded synthetic job generator, the
//! machine/VM catalog, and a minute-resolution seasonal load series.
//!
//! All randomness comes from ChaCha8 seeded with the caller's `u64`, so a seed
//! reproduces the same workload on every platform.

use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Cluster, DomainError, JobRequest, MachineId, DEFAULT_PRIORITY};
use crate::resources::ResourceVector;

/// Physical machine types: (CPU MIPS, RAM GB, bandwidth bps).
pub const PM_TYPES: [ResourceVector; 4] = [
    ResourceVector::with_gb(1060, 2, 2000),
    ResourceVector::with_gb(2660, 4, 2000),
    ResourceVector::with_gb(3067, 8, 4000),
    ResourceVector::with_gb(4076, 64, 8000),
];

/// Virtual node types: (CPU MIPS, RAM GB, bandwidth bps).
pub const VM_CATALOG: [ResourceVector; 4] = [
    ResourceVector::with_gb(500, 1, 500),
    ResourceVector::with_gb(1000, 2, 1000),
    ResourceVector::with_gb(2000, 3, 1000),
    ResourceVector::with_gb(2500, 4, 2000),
];

pub const TRACE_HEADER: [&str; 7] = [
    "arrival_interval",
    "bw_demand_bps",
    "cpu_demand_mips",
    "mem_demand_gb",
    "exec_time_s",
    "deadline_s",
    "priority",
];

const REQUIRED_COLUMNS: usize = 5;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace header is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("trace row {row}, column `{column}`: {reason}")]
    BadField {
        row: usize,
        column: &'static str,
        reason: String,
    },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Read a CSV trace. Job ids are the 0-based data row numbers; error rows are
/// reported 1-based counting the header line.
pub fn load_trace(path: &Path) -> Result<Vec<JobRequest>, WorkloadError> {
    read_trace(std::fs::File::open(path)?)
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<JobRequest>, WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [None; 7];
    for (slot, name) in index.iter_mut().zip(TRACE_HEADER) {
        *slot = headers.iter().position(|h| h == name);
    }
    for (i, name) in TRACE_HEADER.iter().enumerate().take(REQUIRED_COLUMNS) {
        if index[i].is_none() {
            return Err(WorkloadError::MissingColumn(name));
        }
    }

    let mut jobs = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 2;
        let field = |c: usize| index[c].and_then(|i| rec.get(i)).unwrap_or("");
        let num = |c: usize| -> Result<f64, WorkloadError> {
            let s = field(c);
            let v: f64 = s.parse().map_err(|_| WorkloadError::BadField {
                row,
                column: TRACE_HEADER[c],
                reason: format!("cannot parse `{s}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(WorkloadError::BadField {
                    row,
                    column: TRACE_HEADER[c],
                    reason: "not finite".into(),
                });
            }
            Ok(v)
        };
        let positive = |c: usize| -> Result<f64, WorkloadError> {
            let v = num(c)?;
            if v <= 0.0 {
                return Err(WorkloadError::BadField {
                    row,
                    column: TRACE_HEADER[c],
                    reason: format!("must be > 0, got {v}"),
                });
            }
            Ok(v)
        };

        let arrival = field(0).parse::<u32>().map_err(|_| WorkloadError::BadField {
            row,
            column: TRACE_HEADER[0],
            reason: format!("`{}` is not a non-negative integer", field(0)),
        })?;
        let bw = positive(1)?;
        let cpu = positive(2)?;
        let mem = positive(3)?;
        let exec = positive(4)?;
        let deadline = if field(5).is_empty() {
            f64::INFINITY
        } else {
            num(5)?
        };
        let priority = if field(6).is_empty() {
            DEFAULT_PRIORITY
        } else {
            field(6).parse::<u8>().map_err(|_| WorkloadError::BadField {
                row,
                column: TRACE_HEADER[6],
                reason: format!("`{}` is not an integer in 0..=255", field(6)),
            })?
        };
        let demand = ResourceVector::from_real(cpu, mem, bw).ok_or(WorkloadError::BadField {
            row,
            column: TRACE_HEADER[1],
            reason: "demand out of range".into(),
        })?;
        if demand.bw == 0 || demand.cpu == 0 || demand.mem == 0 {
            return Err(WorkloadError::BadField {
                row,
                column: TRACE_HEADER[if demand.bw == 0 { 1 } else if demand.cpu == 0 { 2 } else { 3 }],
                reason: "rounds to zero".into(),
            });
        }
        let job = JobRequest::new(k as u64, arrival, demand, exec)?
            .with_deadline(deadline)
            .with_priority(priority);
        jobs.push(job);
    }
    Ok(jobs)
}

pub fn write_trace<W: Write>(jobs: &[JobRequest], writer: W) -> Result<(), WorkloadError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for j in jobs {
        let deadline = if j.deadline.is_finite() {
            format!("{}", j.deadline)
        } else {
            String::new()
        };
        w.write_record([
            j.arrival.to_string(),
            j.demand.bw.to_string(),
            j.demand.cpu.to_string(),
            format!("{}", j.demand.mem_gb()),
            format!("{}", j.exec_time),
            deadline,
            j.priority.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace(jobs: &[JobRequest], path: &Path) -> Result<(), WorkloadError> {
    write_trace(jobs, std::fs::File::create(path)?)
}

/// Log-normal demand profile of one job family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub weight: f64,
    /// Medians.
    pub bw_bps: f64,
    pub cpu_mips: f64,
    pub mem_gb: f64,
    pub exec_s: f64,
    /// Log-space standard deviation shared by all four draws.
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub jobs: usize,
    /// Arrival horizon in intervals.
    pub intervals: u32,
    /// Interval length in seconds, used for deadlines.
    pub interval_s: f64,
    pub amplitude: f64,
    /// Diurnal period in intervals.
    pub period: f64,
    pub burst_probability: f64,
    pub burst_multiplier: f64,
    pub archetypes: Vec<Archetype>,
    /// Deadline = arrival + exec · U(lo, hi).
    pub deadline_slack: (f64, f64),
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            jobs: 500,
            intervals: 36,
            interval_s: 300.0,
            amplitude: 0.5,
            period: 24.0,
            burst_probability: 0.1,
            burst_multiplier: 2.5,
            archetypes: default_archetypes(),
            deadline_slack: (1.5, 4.0),
            seed: 1,
        }
    }
}

/// Light, straggler, hog, heavy and mid-range families. Bandwidth dominates:
/// with the default cluster and 500 jobs over 36 intervals, offered
/// bandwidth is about 1.2x capacity, so the run is congested.
pub fn default_archetypes() -> Vec<Archetype> {
    let a = |weight, bw_bps, cpu_mips, mem_gb, exec_s| Archetype {
        weight,
        bw_bps,
        cpu_mips,
        mem_gb,
        exec_s,
        sigma: 0.45,
    };
    vec![
        a(0.35, 225.0, 100.0, 0.4, 120.0),
        a(0.20, 300.0, 250.0, 0.8, 900.0),
        a(0.20, 1350.0, 150.0, 0.5, 150.0),
        a(0.10, 1500.0, 450.0, 1.2, 900.0),
        a(0.15, 600.0, 200.0, 0.6, 400.0),
    ]
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::InvalidSpec(m));
        if self.jobs < 1 {
            return bad("jobs must be >= 1".into());
        }
        if self.intervals < 1 {
            return bad("intervals must be >= 1".into());
        }
        if !(self.interval_s > 0.0) {
            return bad("interval_s must be > 0".into());
        }
        if !(0.0..1.0).contains(&self.amplitude) {
            return bad(format!("amplitude {} outside [0, 1)", self.amplitude));
        }
        if !(self.period > 0.0) {
            return bad("period must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.burst_probability) {
            return bad("burst_probability outside [0, 1]".into());
        }
        if !(self.burst_multiplier >= 1.0) {
            return bad("burst_multiplier must be >= 1".into());
        }
        if self.archetypes.is_empty() {
            return bad("at least one archetype is required".into());
        }
        for a in &self.archetypes {
            let medians = [a.bw_bps, a.cpu_mips, a.mem_gb, a.exec_s];
            if !(a.weight >= 0.0) || medians.iter().any(|m| !(*m > 0.0)) || !(a.sigma >= 0.0) {
                return bad(format!("archetype {a:?} has non-positive parameters"));
            }
        }
        if self.archetypes.iter().all(|a| a.weight == 0.0) {
            return bad("archetype weights are all zero".into());
        }
        let (lo, hi) = self.deadline_slack;
        if !(lo >= 1.0 && hi >= lo) {
            return bad("deadline_slack must satisfy 1 <= lo <= hi".into());
        }
        Ok(())
    }

    /// Relative arrival rate of each interval before bursts.
    pub fn rate(&self, t: u32) -> f64 {
        1.0 + self.amplitude * (TAU * t as f64 / self.period).sin()
    }
}

/// Which intervals burst, and the resulting per-interval arrival weights.
pub fn arrival_weights(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..spec.intervals)
        .map(|t| {
            let burst = rng.random_bool(spec.burst_probability);
            spec.rate(t) * if burst { spec.burst_multiplier } else { 1.0 }
        })
        .collect()
}

/// Exactly `spec.jobs` jobs, sorted by arrival, with ids equal to their
/// position.
pub fn generate(spec: &GenSpec) -> Result<Vec<JobRequest>, WorkloadError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights = arrival_weights(spec, &mut rng);
    let when = WeightedIndex::new(&weights).map_err(|e| WorkloadError::InvalidSpec(e.to_string()))?;
    let kind = WeightedIndex::new(spec.archetypes.iter().map(|a| a.weight))
        .map_err(|e| WorkloadError::InvalidSpec(e.to_string()))?;
    let cap = VM_CATALOG.iter().fold(ResourceVector::ZERO, |a, b| a.max(b));

    let mut arrivals: Vec<u32> = (0..spec.jobs).map(|_| when.sample(&mut rng) as u32).collect();
    arrivals.sort_unstable();

    let mut jobs = Vec::with_capacity(spec.jobs);
    for (id, arrival) in arrivals.into_iter().enumerate() {
        let a = &spec.archetypes[kind.sample(&mut rng)];
        let mut draw = |median: f64| {
            LogNormal::new(median.ln(), a.sigma)
                .expect("validated sigma")
                .sample(&mut rng)
        };
        let bw = draw(a.bw_bps).round().clamp(1.0, cap.bw as f64);
        let cpu = draw(a.cpu_mips).round().clamp(1.0, cap.cpu as f64);
        let mem = (draw(a.mem_gb) * 1000.0).round().clamp(1.0, cap.mem as f64);
        let exec = ((draw(a.exec_s) * 1000.0).round() / 1000.0).max(1.0);
        let slack = rng.random_range(spec.deadline_slack.0..=spec.deadline_slack.1);
        let deadline = ((arrival as f64 * spec.interval_s + exec * slack) * 1000.0).round() / 1000.0;
        let priority = rng.random_range(1..=5u8);
        let demand = ResourceVector::new(cpu as u64, mem as u64, bw as u64);
        jobs.push(
            JobRequest::new(id as u64, arrival, demand, exec)?
                .with_deadline(deadline)
                .with_priority(priority),
        );
    }
    Ok(jobs)
}

/// How many machines of each type the cluster has, plus which are reserved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSpec {
    pub pm_counts: [usize; 4],
    /// Explicit reserved machine indices; `None` reserves the single
    /// highest-capacity machine.
    pub reserved: Option<Vec<usize>>,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        ClusterSpec {
            pm_counts: [1, 1, 1, 1],
            reserved: None,
        }
    }
}

impl ClusterSpec {
    pub fn build(&self) -> Result<Cluster, WorkloadError> {
        let mut c = cluster_from_catalog(self.pm_counts, &VM_CATALOG)?;
        let reserved = match &self.reserved {
            Some(ids) => ids.clone(),
            None => vec![largest_machine(&c).0],
        };
        for i in reserved {
            if i >= c.p() {
                return Err(WorkloadError::InvalidSpec(format!(
                    "reserved machine {i} does not exist ({} machines)",
                    c.p()
                )));
            }
            c.set_reserved(MachineId(i), true)?;
        }
        Ok(c)
    }
}

/// Highest normalized capacity; lowest id on ties.
pub fn largest_machine(c: &Cluster) -> MachineId {
    let norm = c.max_capacity();
    c.machines()
        .iter()
        .fold(None::<(MachineId, f64)>, |best, m| {
            let s = m.capacity.normalized_sum(&norm);
            match best {
                Some((_, b)) if b >= s => best,
                _ => Some((m.id, s)),
            }
        })
        .map(|(id, _)| id)
        .expect("non-empty cluster")
}

/// Machines grouped by type in catalog order; nothing reserved.
pub fn cluster_from_catalog(
    pm_counts: [usize; 4],
    vm_catalog: &[ResourceVector],
) -> Result<Cluster, WorkloadError> {
    let machines: Vec<(ResourceVector, bool)> = PM_TYPES
        .iter()
        .zip(pm_counts)
        .flat_map(|(t, n)| std::iter::repeat_n((*t, false), n))
        .collect();
    Ok(Cluster::new(machines, vm_catalog.to_vec())?)
}

/// Parameters of a minute-resolution load series with a daily cycle, a slow
/// persistent drift and measurement noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSpec {
    pub minutes: usize,
    pub level: f64,
    pub daily_amplitude: f64,
    /// Per-minute autocorrelation of the drift term.
    pub drift_persistence: f64,
    /// Stationary standard deviation of the drift term.
    pub drift_sd: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        SeriesSpec {
            minutes: 14 * 1440,
            level: 8000.0,
            daily_amplitude: 3000.0,
            drift_persistence: 0.995,
            drift_sd: 1200.0,
            noise_sd: 600.0,
            seed: 1,
        }
    }
}

pub fn seasonal_series(spec: &SeriesSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phi = spec.drift_persistence;
    let innov = spec.drift_sd * (1.0 - phi * phi).sqrt();
    let step = Normal::new(0.0, innov.max(0.0)).expect("finite sd");
    let noise = Normal::new(0.0, spec.noise_sd.max(0.0)).expect("finite sd");
    let mut drift = 0.0;
    (0..spec.minutes)
        .map(|m| {
            drift = phi * drift + step.sample(&mut rng);
            let day = (TAU * m as f64 / 1440.0).sin();
            let half = 0.3 * (2.0 * TAU * m as f64 / 1440.0).sin();
            (spec.level + spec.daily_amplitude * (day + half) + drift + noise.sample(&mut rng))
                .max(0.0)
        })
        .collect()
}

/// Mean over consecutive blocks of `width`; a trailing partial block is
/// dropped.
pub fn aggregate(series: &[f64], width: usize) -> Vec<f64> {
    assert!(width >= 1);
    series
        .chunks_exact(width)
        .map(|c| c.iter().sum::<f64>() / width as f64)
        .collect()
}
