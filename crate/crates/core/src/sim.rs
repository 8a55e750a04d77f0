//! Interval-driven simulation of the traffic management loop.
//!
//! Each interval: finished jobs release their shares, arrivals are
//! classified against their cohort and queued, live demand is compared with
//! the forecast, the analyzer picks a directive and the queue is dispatched.
//! Rejected jobs are re-queued until they run out of attempts.
//!
//! Shares are held on whole-interval granularity (a job placed at interval
//! `i` that runs for `d` seconds holds its shares for `ceil(d / L)` intervals)
//! while completion times stay continuous.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::{
    assess_status, confirm_congestion, handling_directive, relative_deviation, AnalyzerConfig,
    Channel, Directive, TrafficAssessment, TrafficRecord, TrafficStatus,
};
use crate::classifier::{classify_all, ClassifierConfig, StateFractions};
use crate::domain::{Cluster, JobId, JobRequest, Placement, Strategy, TrafficState};
use crate::gbt::{BoostConfig, TrafficPredictor};
use crate::resources::ResourceVector;
use crate::scheduler::{
    dispatch, dispatch_baseline, place_warm_up, ActiveStraggler, Policy, RejectReason,
    SchedulingQueue, StrategyOutcome,
};
use crate::workload::ClusterSpec;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config field `{field}`: {msg}")]
    InvalidConfig { field: &'static str, msg: String },
    #[error("job {job} arrives at interval {arrival} but the run has {intervals} intervals")]
    ArrivalOutOfRange { job: JobId, arrival: u32, intervals: u32 },
    #[error("duplicate job id {0}")]
    DuplicateJob(JobId),
    #[error(transparent)]
    Scheduler(#[from] crate::scheduler::SchedulerError),
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
}

fn invalid(field: &'static str, msg: impl ToString) -> SimError {
    SimError::InvalidConfig {
        field,
        msg: msg.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub intervals: u32,
    /// Interval length in seconds.
    pub interval_s: f64,
    pub cluster: ClusterSpec,
    pub classifier: ClassifierConfig,
    pub analyzer: AnalyzerConfig,
    pub predictor: BoostConfig,
    pub policy: Policy,
    pub seed: u64,
    /// Times a rejected job goes back to the queue before it fails.
    pub max_requeue: u32,
    /// Retrain the forecaster every this many intervals.
    pub retrain_every: u32,
    /// Load channel that is forecast.
    pub channel: Channel,
    /// Range of the share of a straggler's run spent in I/O.
    pub io_fraction: (f64, f64),
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            intervals: 36,
            interval_s: 300.0,
            cluster: ClusterSpec::default(),
            classifier: ClassifierConfig::default(),
            analyzer: AnalyzerConfig::default(),
            predictor: BoostConfig::default(),
            policy: Policy::Tmcrn,
            seed: 1,
            max_requeue: 5,
            retrain_every: 10,
            channel: Channel::Bandwidth,
            io_fraction: (0.3, 0.7),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.intervals < 1 {
            return Err(invalid("intervals", "must be >= 1"));
        }
        if !(self.interval_s.is_finite() && self.interval_s > 0.0) {
            return Err(invalid("interval_s", format!("must be > 0, got {}", self.interval_s)));
        }
        if self.retrain_every < 1 {
            return Err(invalid("retrain_every", "must be >= 1"));
        }
        let (lo, hi) = self.io_fraction;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(invalid("io_fraction", format!("need 0 <= lo <= hi <= 1, got ({lo}, {hi})")));
        }
        self.classifier.validate().map_err(|e| invalid("classifier", e))?;
        self.analyzer.validate().map_err(|e| invalid("analyzer", e))?;
        self.predictor.validate().map_err(|e| invalid("predictor", e))?;
        let cluster = self.cluster.build().map_err(|e| invalid("cluster", e))?;
        if self.policy == Policy::Tmcrn && cluster.reserved_machines().next().is_none() {
            return Err(invalid("cluster.reserved", "tmcrn needs at least one reserved machine"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub job: JobId,
    pub state: TrafficState,
    pub placement: Placement,
    pub start_interval: u32,
    /// First interval at which the shares are free again.
    pub hold_until: u32,
    /// Seconds of simulated time.
    pub start: f64,
    pub duration: f64,
    pub completion: f64,
    /// Seconds spent queued before placement.
    pub waited: f64,
    pub io_fraction: Option<f64>,
    /// For a hog, the straggler whose idle bandwidth it used.
    pub paired_with: Option<JobId>,
    /// Bandwidth borrowed from the paired straggler during its I/O windows.
    pub borrowed_bw: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedJob {
    pub job: JobId,
    pub state: TrafficState,
    pub reason: RejectReason,
    pub interval: u32,
    pub waited: f64,
    pub exec_time: f64,
}

/// A straggler/hog pair sharing a machine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridPair {
    /// Bandwidth share held by the straggler, idle while it does I/O.
    pub straggler_bw: f64,
    pub io_fraction: f64,
    /// Seconds until the straggler finishes.
    pub straggler_remaining: f64,
    /// Bits the hog must move.
    pub hog_volume: f64,
    /// Bandwidth the hog has on its own.
    pub hog_own_bw: f64,
}

impl HybridPair {
    /// Hog run time when alone on its own bandwidth.
    pub fn unpaired_duration(&self) -> Option<f64> {
        (self.hog_own_bw > 0.0).then(|| self.hog_volume / self.hog_own_bw)
    }

    /// Hog run time when it also uses the straggler's idle bandwidth, taken
    /// as a time average over the straggler's remaining run. `None` if the
    /// hog never finishes.
    pub fn hog_duration(&self) -> Option<f64> {
        if self.hog_volume <= 0.0 {
            return Some(0.0);
        }
        let boosted = self.hog_own_bw + self.straggler_bw * self.io_fraction;
        if boosted > 0.0 && boosted * self.straggler_remaining >= self.hog_volume {
            return Some(self.hog_volume / boosted);
        }
        let left = self.hog_volume - boosted * self.straggler_remaining;
        (self.hog_own_bw > 0.0).then(|| self.straggler_remaining + left / self.hog_own_bw)
    }
}

/// Completion times of a paired straggler and hog. The straggler's is
/// unchanged; the hog's is recomputed with the borrowed bandwidth.
pub fn execute_hybrid_pair(
    straggler: &ExecutionRecord,
    hog: &ExecutionRecord,
    hog_job: &JobRequest,
    io_fraction: f64,
) -> (f64, Option<f64>) {
    let pair = HybridPair {
        straggler_bw: straggler.placement.total().bw as f64,
        io_fraction,
        straggler_remaining: (straggler.completion - hog.start).max(0.0),
        hog_volume: hog_job.demand.bw as f64 * hog_job.exec_time,
        hog_own_bw: hog.placement.total().bw as f64,
    };
    (straggler.completion, pair.hog_duration().map(|d| hog.start + d))
}

/// Metrics derived from a finished run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Time-averaged committed bandwidth over total bandwidth, percent.
    pub bw_utilization: f64,
    /// Sum of wait plus execution seconds over completed jobs.
    pub et_consumption: f64,
    /// `et_consumption` plus, for each failed job, its wait and its
    /// execution estimate.
    pub total_latency: f64,
    pub completed: usize,
    pub failed: usize,
}

pub fn compute_metrics(
    records: &[ExecutionRecord],
    failures: &[FailedJob],
    total_bw: u64,
    intervals: u32,
) -> Metrics {
    let mut held = 0.0;
    for r in records {
        let from = r.start_interval.min(intervals);
        let to = r.hold_until.min(intervals);
        held += r.placement.total().bw as f64 * f64::from(to - from);
    }
    let denom = total_bw as f64 * f64::from(intervals);
    let bw_utilization = if denom > 0.0 { 100.0 * held / denom } else { 0.0 };
    let et_consumption: f64 = records.iter().map(|r| r.waited + r.duration).sum();
    let penalty: f64 = failures.iter().map(|f| f.waited + f.exec_time).sum();
    Metrics {
        bw_utilization,
        et_consumption,
        total_latency: et_consumption + penalty,
        completed: records.len(),
        failed: failures.len(),
    }
}

/// Percent by which `policy` latency undercuts the FCFS latency.
pub fn latency_reduction(fcfs: f64, policy: f64) -> f64 {
    if fcfs > 0.0 {
        100.0 * (fcfs - policy) / fcfs
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: Policy,
    pub seed: u64,
    pub intervals: u32,
    pub jobs: usize,
    pub assessments: Vec<TrafficAssessment>,
    pub fractions: StateFractions,
    pub metrics: Metrics,
    /// Set only when a paired FCFS run exists.
    pub latency_reduction: Option<f64>,
    pub congestion_rate: f64,
    pub hybrid_pairs: usize,
    pub directives: Vec<Directive>,
    pub records: Vec<ExecutionRecord>,
    pub failures: Vec<FailedJob>,
}

impl SimReport {
    pub fn bw_utilization(&self) -> f64 {
        self.metrics.bw_utilization
    }
    pub fn et_consumption(&self) -> f64 {
        self.metrics.et_consumption
    }
    pub fn total_latency(&self) -> f64 {
        self.metrics.total_latency
    }
}

/// What happened in one interval.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalOutcome {
    pub interval: u32,
    pub assessment: Option<TrafficAssessment>,
    pub directive: Directive,
    pub placed: usize,
    pub requeued: usize,
    pub failed: usize,
    pub committed: ResourceVector,
}

struct Pending {
    job: JobRequest,
    attempts: u32,
}

struct Running {
    placement: Placement,
    hold_until: u32,
}

/// Engine state between intervals.
pub struct Engine {
    cfg: SimConfig,
    cluster: Cluster,
    pending: BTreeMap<JobId, Pending>,
    running: Vec<Running>,
    stragglers: Vec<ActiveStraggler>,
    history: Vec<f64>,
    window: Vec<(TrafficRecord, f64, f64)>,
    relative: Vec<f64>,
    predictor: Option<TrafficPredictor>,
    next_prediction: Option<f64>,
    records: Vec<ExecutionRecord>,
    failures: Vec<FailedJob>,
    assessments: Vec<TrafficAssessment>,
    directives: Vec<Directive>,
    fractions: StateFractions,
    rng: ChaCha8Rng,
    interval: u32,
    seen: usize,
}

impl Engine {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let cluster = cfg.cluster.build().map_err(|e| invalid("cluster", e))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0);
        Ok(Engine {
            cfg,
            cluster,
            pending: BTreeMap::new(),
            running: Vec::new(),
            stragglers: Vec::new(),
            history: Vec::new(),
            window: Vec::new(),
            relative: Vec::new(),
            predictor: None,
            next_prediction: None,
            records: Vec::new(),
            failures: Vec::new(),
            assessments: Vec::new(),
            directives: Vec::new(),
            fractions: StateFractions::default(),
            rng,
            interval: 0,
            seen: 0,
        })
    }

    pub fn cluster(&self) -> &Cluster {
        &self.cluster
    }

    pub fn interval(&self) -> u32 {
        self.interval
    }

    pub fn queued(&self) -> usize {
        self.pending.len()
    }

    pub fn records(&self) -> &[ExecutionRecord] {
        &self.records
    }

    /// The forecast for the coming interval, if one exists.
    pub fn next_prediction(&self) -> Option<f64> {
        self.next_prediction
    }

    fn io_fraction(&self, job: JobId) -> f64 {
        let (lo, hi) = self.cfg.io_fraction;
        if lo == hi {
            return lo;
        }
        let mut r = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        r.set_stream(job.0.wrapping_add(1));
        r.random_range(lo..=hi)
    }

    /// Run one interval with the jobs arriving in it.
    pub fn advance_interval(&mut self, arrivals: Vec<JobRequest>) -> Result<IntervalOutcome, SimError> {
        let t = self.interval;
        let len = self.cfg.interval_s;
        let now = f64::from(t) * len;

        // Releases come before any new allocation.
        let mut finished = Vec::new();
        let mut i = 0;
        while i < self.running.len() {
            if self.running[i].hold_until <= t {
                let r = self.running.swap_remove(i);
                self.cluster.release(&r.placement)?;
                finished.push(r.placement.job);
            } else {
                i += 1;
            }
        }
        self.stragglers.retain(|s| !finished.contains(&s.job));
        for s in &mut self.stragglers {
            if s.paired_with.is_some_and(|h| finished.contains(&h)) {
                s.paired_with = None;
            }
        }
        self.cluster.reclaim_idle();

        if !arrivals.is_empty() {
            let cohort = classify_all(&arrivals, &self.cfg.classifier).map_err(|e| invalid("classifier", e))?;
            for job in cohort.jobs {
                if self.pending.contains_key(&job.id) || self.records.iter().any(|r| r.job == job.id) {
                    return Err(SimError::DuplicateJob(job.id));
                }
                self.fractions.record(job.state);
                self.seen += 1;
                self.pending.insert(job.id, Pending { job, attempts: 0 });
            }
        }

        // Live demand: everything running plus everything waiting.
        let mut record = TrafficRecord::from_jobs(t, self.pending.values().map(|p| &p.job));
        for r in &self.running {
            record.demand = record.demand + r.placement.total();
            record.job_count += 1;
            record.jobs.push(r.placement.job);
        }
        let observed = record.load(self.cfg.channel);
        self.history.push(observed);

        let mut assessment = None;
        let mut directive = Directive::NormalFlow;
        if let Some(predicted) = self.next_prediction {
            let deviation = observed - predicted;
            self.relative.push(relative_deviation(predicted, deviation));
            let status = assess_status(&self.relative, &self.cfg.analyzer);
            self.window.push((record, predicted, deviation));
            let keep = self.cfg.analyzer.duration_threshold + 1;
            if self.window.len() > keep {
                self.window.drain(..self.window.len() - keep);
            }
            let recs: Vec<TrafficRecord> = self.window.iter().map(|w| w.0.clone()).collect();
            let preds: Vec<f64> = self.window.iter().map(|w| w.1).collect();
            let devs: Vec<f64> = self.window.iter().map(|w| w.2).collect();
            let conf = confirm_congestion(&recs, &preds, &devs, &self.cluster, &self.cfg.analyzer)
                .expect("window is aligned and non-empty");
            directive = handling_directive(status, conf.confirmed);
            let a = TrafficAssessment {
                interval: t,
                predicted,
                observed,
                deviation,
                status,
                congestion_confirmed: status == TrafficStatus::Congested && conf.confirmed,
                violated: conf.violated,
            };
            if t < self.cfg.intervals {
                self.assessments.push(a.clone());
            }
            assessment = Some(a);
        }

        let outcome = self.place(t, directive)?;
        if t < self.cfg.intervals {
            self.directives.push(directive);
        }

        let hog_to_straggler: BTreeMap<JobId, JobId> =
            outcome.parallel_pairs.iter().map(|(s, h)| (*h, *s)).collect();
        let placed = outcome.placements.len();
        for p in outcome.placements {
            let Pending { job, .. } = self.pending.remove(&p.job).expect("placed job was pending");
            let waited = f64::from(t - job.arrival) * len;
            let mut duration = job.exec_time;
            let mut io_fraction = None;
            let mut paired_with = None;
            let mut borrowed_bw = 0;

            if let Some(&s) = hog_to_straggler.get(&job.id) {
                let srec = self.records.iter().find(|r| r.job == s).expect("straggler recorded");
                let io = srec.io_fraction.unwrap_or(0.0);
                let pair = HybridPair {
                    straggler_bw: srec.placement.total().bw as f64,
                    io_fraction: io,
                    straggler_remaining: srec.completion - now,
                    hog_volume: job.demand.bw as f64 * job.exec_time,
                    hog_own_bw: p.total().bw as f64,
                };
                if let Some(d) = pair.hog_duration() {
                    if io > 0.0 && d < duration {
                        duration = d;
                        paired_with = Some(s);
                        borrowed_bw = srec.placement.total().bw;
                    }
                }
            }
            if self.cfg.policy == Policy::Tmcrn && job.state == TrafficState::Straggler {
                let io = self.io_fraction(job.id);
                io_fraction = Some(io);
                self.stragglers.push(ActiveStraggler {
                    job: job.id,
                    machine: p.targets[0].machine,
                    io_fraction: io,
                    paired_with: None,
                });
            }
            if paired_with.is_none() {
                // A pairing that gained nothing does not tie up the straggler.
                for s in &mut self.stragglers {
                    if s.paired_with == Some(job.id) {
                        s.paired_with = None;
                    }
                }
            }

            let held = ((duration / len).ceil() as u32).max(1);
            self.running.push(Running {
                placement: p.clone(),
                hold_until: t + held,
            });
            self.records.push(ExecutionRecord {
                job: job.id,
                state: job.state,
                placement: p,
                start_interval: t,
                hold_until: t + held,
                start: now,
                duration,
                completion: now + duration,
                waited,
                io_fraction,
                paired_with,
                borrowed_bw,
            });
        }

        let mut requeued = 0;
        let mut failed = 0;
        for (id, reason) in outcome.rejected {
            let p = self.pending.get_mut(&id).expect("rejected job was pending");
            p.attempts += 1;
            if p.attempts > self.cfg.max_requeue {
                let p = self.pending.remove(&id).expect("present");
                self.failures.push(FailedJob {
                    job: id,
                    state: p.job.state,
                    reason,
                    interval: t,
                    waited: f64::from(t + 1 - p.job.arrival) * len,
                    exec_time: p.job.exec_time,
                });
                failed += 1;
            } else {
                requeued += 1;
            }
        }
        debug_assert!(self.cluster.audit().is_ok(), "{:?}", self.cluster.audit());

        self.update_forecast();
        self.interval += 1;
        Ok(IntervalOutcome {
            interval: t,
            assessment,
            directive,
            placed,
            requeued,
            failed,
            committed: self.cluster.committed(),
        })
    }

    fn place(&mut self, t: u32, directive: Directive) -> Result<StrategyOutcome, SimError> {
        let mut jobs: Vec<JobRequest> = self.pending.values().map(|p| p.job.clone()).collect();
        jobs.sort_by_key(|j| (j.arrival, j.id));
        match self.cfg.policy {
            Policy::Tmcrn if t == 0 => Ok(place_warm_up(&jobs, &mut self.cluster, t)),
            Policy::Tmcrn => {
                let mut queue = SchedulingQueue::new();
                queue.extend(jobs);
                Ok(dispatch(&mut queue, &mut self.cluster, directive, &mut self.stragglers, t)?)
            }
            p => Ok(dispatch_baseline(p, &jobs, &mut self.cluster, &mut self.rng, t)),
        }
    }

    /// Retrain on schedule and forecast the next interval. Until a model
    /// exists the forecast is the last observation.
    fn update_forecast(&mut self) {
        let t = self.interval;
        let w = self.cfg.predictor.window;
        let enough = self.history.len() >= w + 2;
        let due = self.predictor.is_none() || t % self.cfg.retrain_every == 0;
        if enough && due {
            if let Ok(p) = TrafficPredictor::train_series(&self.history, &self.cfg.predictor, self.cfg.channel) {
                self.predictor = Some(p);
            }
        }
        self.next_prediction = match &self.predictor {
            Some(p) => p.predict_next_series(&self.history).ok(),
            None => self.history.last().copied(),
        };
    }

    /// Summarize the run.
    pub fn finish(self) -> SimReport {
        let total_bw = self.cluster.total_capacity().bw;
        let mut metrics = compute_metrics(&self.records, &self.failures, total_bw, self.cfg.intervals);
        metrics.completed = self.records.len();
        let confirmed = self.assessments.iter().filter(|a| a.congestion_confirmed).count();
        let congestion_rate = 100.0 * confirmed as f64 / f64::from(self.cfg.intervals);
        let hybrid_pairs = self.records.iter().filter(|r| r.paired_with.is_some()).count();
        SimReport {
            policy: self.cfg.policy,
            seed: self.cfg.seed,
            intervals: self.cfg.intervals,
            jobs: self.seen,
            assessments: self.assessments,
            fractions: self.fractions,
            metrics,
            latency_reduction: None,
            congestion_rate,
            hybrid_pairs,
            directives: self.directives,
            records: self.records,
            failures: self.failures,
        }
    }
}

/// Run the full loop over `workload`, then keep dispatching (without new
/// arrivals) until the queue is empty.
pub fn run(cfg: &SimConfig, workload: &[JobRequest]) -> Result<SimReport, SimError> {
    let mut engine = Engine::new(cfg.clone())?;
    let mut by_interval: BTreeMap<u32, Vec<JobRequest>> = BTreeMap::new();
    for j in workload {
        if j.arrival >= cfg.intervals {
            return Err(SimError::ArrivalOutOfRange {
                job: j.id,
                arrival: j.arrival,
                intervals: cfg.intervals,
            });
        }
        by_interval.entry(j.arrival).or_default().push(j.clone());
    }
    for t in 0..cfg.intervals {
        engine.advance_interval(by_interval.remove(&t).unwrap_or_default())?;
    }
    while engine.queued() > 0 {
        engine.advance_interval(Vec::new())?;
    }
    Ok(engine.finish())
}

/// Run `cfg` and a FCFS twin on the same workload and seed, filling in the
/// latency reduction.
pub fn run_paired(cfg: &SimConfig, workload: &[JobRequest]) -> Result<(SimReport, SimReport), SimError> {
    let mut report = run(cfg, workload)?;
    let fcfs = if cfg.policy == Policy::Fcfs {
        report.clone()
    } else {
        run(&SimConfig { policy: Policy::Fcfs, ..cfg.clone() }, workload)?
    };
    report.latency_reduction = Some(latency_reduction(fcfs.total_latency(), report.total_latency()));
    Ok((report, fcfs))
}

/// Check capacity at every interval of the run: shares held at the same time
/// on a machine never exceed its capacity, and a hog only borrows bandwidth
/// from a straggler on the same machine that is running at the time.
pub fn audit_timeline(records: &[ExecutionRecord], cluster: &Cluster) -> Result<(), String> {
    let end = records.iter().map(|r| r.hold_until).max().unwrap_or(0);
    for t in 0..end {
        let mut used: BTreeMap<usize, ResourceVector> = BTreeMap::new();
        for r in records.iter().filter(|r| r.start_interval <= t && t < r.hold_until) {
            for s in &r.placement.targets {
                let u = used.entry(s.machine.0).or_insert(ResourceVector::ZERO);
                *u = *u + s.amount;
            }
        }
        for (m, u) in used {
            let cap = cluster.machines()[m].capacity;
            if !u.fits_within(&cap) {
                return Err(format!("interval {t}: machine {m} holds {u:?} over {cap:?}"));
            }
        }
    }
    for hog in records.iter().filter(|r| r.paired_with.is_some()) {
        let s = hog.paired_with.expect("filtered");
        let Some(st) = records.iter().find(|r| r.job == s) else {
            return Err(format!("{} paired with unknown {s}", hog.job));
        };
        let hm: Vec<_> = hog.placement.machines().collect();
        if !st.placement.machines().all(|m| hm.contains(&m)) {
            return Err(format!("{} and {s} are on different machines", hog.job));
        }
        if hog.borrowed_bw > st.placement.total().bw {
            return Err(format!("{} borrows more than {s} holds", hog.job));
        }
        if !(st.start <= hog.start && hog.start < st.completion) {
            return Err(format!("{} starts outside the run of {s}", hog.job));
        }
        if st.io_fraction.unwrap_or(0.0) <= 0.0 {
            return Err(format!("{s} has no I/O time to lend"));
        }
    }
    Ok(())
}

/// Which strategy tag placed each job.
pub fn strategy_counts(records: &[ExecutionRecord]) -> BTreeMap<Strategy, usize> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry(r.placement.strategy).or_insert(0) += 1;
    }
    m
}
