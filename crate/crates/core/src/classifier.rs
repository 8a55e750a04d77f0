//! Traffic-state classification by bandwidth demand and execution time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{JobRequest, TrafficState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("cannot resolve thresholds over an empty job list")]
    NoJobs,
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
}

/// A cut given either as a percentile of the current cohort or as an
/// absolute value (bps for bandwidth, seconds for execution time).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    Percentile(f64),
    Absolute(f64),
}

impl Threshold {
    fn validate(&self, what: &str) -> Result<(), ClassifierError> {
        match *self {
            Threshold::Percentile(p) if !(1.0..=99.0).contains(&p) => Err(
                ClassifierError::InvalidConfig(format!("{what} percentile {p} outside [1, 99]")),
            ),
            Threshold::Absolute(v) if !(v > 0.0 && v.is_finite()) => Err(
                ClassifierError::InvalidConfig(format!("{what} absolute value {v} must be > 0")),
            ),
            _ => Ok(()),
        }
    }

    fn resolve(&self, sorted: &[f64]) -> f64 {
        match *self {
            Threshold::Percentile(p) => nearest_rank(sorted, p),
            Threshold::Absolute(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub bw_thr: Threshold,
    pub et_thr: Threshold,
    /// Inner percentile pair; jobs inside the band on both axes are Average.
    pub avg_band: Option<(f64, f64)>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            bw_thr: Threshold::Percentile(75.0),
            et_thr: Threshold::Percentile(75.0),
            avg_band: None,
        }
    }
}

impl ClassifierConfig {
    pub fn percentiles(bw: f64, et: f64) -> Self {
        ClassifierConfig {
            bw_thr: Threshold::Percentile(bw),
            et_thr: Threshold::Percentile(et),
            avg_band: None,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        self.bw_thr.validate("bw_thr")?;
        self.et_thr.validate("et_thr")?;
        if let Some((lo, hi)) = self.avg_band {
            if !(1.0..=99.0).contains(&lo) || !(1.0..=99.0).contains(&hi) || lo >= hi {
                return Err(ClassifierError::InvalidConfig(format!(
                    "avg_band ({lo}, {hi}) must be increasing percentiles in [1, 99]"
                )));
            }
        }
        Ok(())
    }
}

/// Average band resolved to absolute bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub bw: (f64, f64),
    pub et: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cuts {
    pub bw_cut: f64,
    pub et_cut: f64,
    pub band: Option<Band>,
}

/// The ⌈p/100 · n⌉-th smallest value (1-based). `sorted` must be ascending
/// and non-empty.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn sorted_by<F: Fn(&JobRequest) -> f64>(jobs: &[JobRequest], f: F) -> Vec<f64> {
    let mut v: Vec<f64> = jobs.iter().map(f).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn resolve_thresholds(jobs: &[JobRequest], cfg: &ClassifierConfig) -> Result<Cuts, ClassifierError> {
    if jobs.is_empty() {
        return Err(ClassifierError::NoJobs);
    }
    let bw = sorted_by(jobs, |j| j.demand.bw as f64);
    let et = sorted_by(jobs, |j| j.exec_time);
    let band = cfg.avg_band.map(|(lo, hi)| Band {
        bw: (nearest_rank(&bw, lo), nearest_rank(&bw, hi)),
        et: (nearest_rank(&et, lo), nearest_rank(&et, hi)),
    });
    Ok(Cuts {
        bw_cut: cfg.bw_thr.resolve(&bw),
        et_cut: cfg.et_thr.resolve(&et),
        band,
    })
}

/// Cases are tried in order; the first match wins.
pub fn classify(job: &JobRequest, cuts: &Cuts) -> TrafficState {
    let bw = job.demand.bw as f64;
    let et = job.exec_time;
    if let Some(b) = cuts.band {
        let inside = |v: f64, (lo, hi): (f64, f64)| lo < v && v < hi;
        if inside(bw, b.bw) && inside(et, b.et) {
            return TrafficState::Average;
        }
    }
    let (bc, ec) = (cuts.bw_cut, cuts.et_cut);
    if bw < bc && et < ec {
        TrafficState::Light
    } else if bw <= bc && et >= ec {
        TrafficState::Straggler
    } else if bw >= bc && et <= ec {
        TrafficState::Hog
    } else if bw >= bc && et >= ec {
        TrafficState::Heavy
    } else {
        TrafficState::Average
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub jobs: Vec<JobRequest>,
    pub by_state: BTreeMap<TrafficState, Vec<crate::domain::JobId>>,
}

impl Classification {
    pub fn count(&self, s: TrafficState) -> usize {
        self.by_state.get(&s).map_or(0, Vec::len)
    }

    /// Share of jobs in `s`, in percent.
    pub fn fraction(&self, s: TrafficState) -> f64 {
        if self.jobs.is_empty() {
            0.0
        } else {
            100.0 * self.count(s) as f64 / self.jobs.len() as f64
        }
    }
}

/// Classify a cohort against cuts resolved from that same cohort. Returned
/// jobs carry their state.
pub fn classify_all(jobs: &[JobRequest], cfg: &ClassifierConfig) -> Result<Classification, ClassifierError> {
    let cuts = resolve_thresholds(jobs, cfg)?;
    let mut out = Classification::default();
    for j in jobs {
        let s = classify(j, &cuts);
        out.by_state.entry(s).or_default().push(j.id);
        out.jobs.push(j.clone().with_state(s));
    }
    Ok(out)
}

/// Aggregate state percentages over several independently classified
/// cohorts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateFractions {
    pub counts: BTreeMap<TrafficState, usize>,
    pub total: usize,
}

impl StateFractions {
    pub fn record(&mut self, s: TrafficState) {
        *self.counts.entry(s).or_default() += 1;
        self.total += 1;
    }

    pub fn percent(&self, s: TrafficState) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * *self.counts.get(&s).unwrap_or(&0) as f64 / self.total as f64
        }
    }
}
