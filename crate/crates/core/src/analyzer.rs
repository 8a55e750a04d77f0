//! Per-interval traffic analysis: deviation from forecast, three-way traffic
//! status, the congestion confirmation test and the resulting handling
//! directive.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Cluster, JobId, JobRequest};
use crate::resources::ResourceVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzerError {
    #[error("congestion window is empty")]
    EmptyWindow,
    #[error("window inputs misaligned: {records} records, {predictions} predictions, {deviations} deviations")]
    Misaligned {
        records: usize,
        predictions: usize,
        deviations: usize,
    },
    #[error("invalid analyzer config: {0}")]
    InvalidConfig(String),
}

/// Which scalar of a traffic record is forecast and tracked for deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    #[default]
    Bandwidth,
    Cpu,
    Memory,
    Jobs,
}

/// Aggregate traffic observed in one interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficRecord {
    pub interval: u32,
    pub demand: ResourceVector,
    pub job_count: usize,
    pub jobs: Vec<JobId>,
}

impl TrafficRecord {
    /// Aggregate the jobs arriving in `interval`.
    pub fn from_jobs<'a>(interval: u32, jobs: impl IntoIterator<Item = &'a JobRequest>) -> Self {
        let mut demand = ResourceVector::ZERO;
        let mut ids = Vec::new();
        for j in jobs {
            demand = demand + j.demand;
            ids.push(j.id);
        }
        TrafficRecord {
            interval,
            demand,
            job_count: ids.len(),
            jobs: ids,
        }
    }

    /// A record that carries only a scalar load on `channel`.
    pub fn scalar(interval: u32, channel: Channel, value: f64) -> Self {
        let v = value.max(0.0).round() as u64;
        let demand = match channel {
            Channel::Bandwidth => ResourceVector::new(0, 0, v),
            Channel::Cpu => ResourceVector::new(v, 0, 0),
            Channel::Memory => ResourceVector::new(0, v, 0),
            Channel::Jobs => ResourceVector::ZERO,
        };
        TrafficRecord {
            interval,
            demand,
            job_count: if channel == Channel::Jobs { v as usize } else { 0 },
            jobs: Vec::new(),
        }
    }

    pub fn load(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Bandwidth => self.demand.bw as f64,
            Channel::Cpu => self.demand.cpu as f64,
            Channel::Memory => self.demand.mem as f64,
            Channel::Jobs => self.job_count as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerConfig {
    /// Deviation threshold as a fraction of the predicted load.
    pub deviation_threshold: f64,
    /// Number of consecutive intervals.
    pub duration_threshold: usize,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            deviation_threshold: 0.2,
            duration_threshold: 2,
        }
    }
}

impl AnalyzerConfig {
    pub fn validate(&self) -> Result<(), AnalyzerError> {
        if !(self.deviation_threshold.is_finite() && self.deviation_threshold > 0.0) {
            return Err(AnalyzerError::InvalidConfig(format!(
                "deviation_threshold must be > 0, got {}",
                self.deviation_threshold
            )));
        }
        if self.duration_threshold < 1 {
            return Err(AnalyzerError::InvalidConfig(
                "duration_threshold must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrafficStatus {
    Congested,
    SubNormal,
    Normal,
}

impl TrafficStatus {
    /// +1 congested, -1 sub-normal, 0 normal.
    pub fn value(&self) -> i8 {
        match self {
            TrafficStatus::Congested => 1,
            TrafficStatus::SubNormal => -1,
            TrafficStatus::Normal => 0,
        }
    }
}

impl fmt::Display for TrafficStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrafficStatus::Congested => "congested",
            TrafficStatus::SubNormal => "sub-normal",
            TrafficStatus::Normal => "normal",
        })
    }
}

/// Disjuncts of the congestion confirmation test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CongestionCondition {
    /// Overflow persisted for longer than the duration threshold.
    C1,
    /// Live bandwidth demand reaches total bandwidth capacity.
    C2,
    /// Live CPU demand reaches total CPU capacity.
    C3,
    /// Live memory demand reaches total memory capacity.
    C4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confirmation {
    pub confirmed: bool,
    pub violated: Vec<CongestionCondition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficAssessment {
    pub interval: u32,
    pub predicted: f64,
    pub observed: f64,
    /// observed − predicted.
    pub deviation: f64,
    pub status: TrafficStatus,
    pub congestion_confirmed: bool,
    pub violated: Vec<CongestionCondition>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Directive {
    DivertToReserved,
    Consolidate,
    NormalFlow,
}

/// Deviation expressed as a fraction of the predicted load.
pub fn relative_deviation(predicted: f64, deviation: f64) -> f64 {
    if predicted > 0.0 {
        deviation / predicted
    } else if deviation > 0.0 {
        f64::INFINITY
    } else if deviation < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// Classify the newest interval given the history of relative deviations
/// (oldest first).
///
/// Sub-normal whenever the current deviation is negative; congested when the
/// deviation has exceeded the threshold for at least `duration_threshold`
/// consecutive trailing intervals; normal otherwise. An empty history is
/// normal.
pub fn assess_status(relative_deviations: &[f64], cfg: &AnalyzerConfig) -> TrafficStatus {
    let Some(&current) = relative_deviations.last() else {
        return TrafficStatus::Normal;
    };
    if current < 0.0 {
        return TrafficStatus::SubNormal;
    }
    let streak = relative_deviations
        .iter()
        .rev()
        .take_while(|&&d| d > cfg.deviation_threshold)
        .count();
    if streak >= cfg.duration_threshold {
        TrafficStatus::Congested
    } else {
        TrafficStatus::Normal
    }
}

/// Relative slack used when comparing the forecast-plus-deviation total with
/// observed demand. The two sides are equal by construction when deviations
/// are computed from the same records, so exact float comparison would hinge
/// on rounding.
pub const INEQUALITY_REL_TOL: f64 = 1e-9;

/// Decide whether a congested status is a real congestion event.
///
/// The window holds aligned per-interval records, bandwidth-load forecasts and
/// deviations (oldest first). Confirmed iff the summed forecast plus deviation
/// does not exceed summed observed load, and either the overflow streak is
/// longer than the duration threshold (C1) or the newest interval's live
/// demand reaches total cluster capacity on some resource (C2–C4).
pub fn confirm_congestion(
    records: &[TrafficRecord],
    predictions: &[f64],
    deviations: &[f64],
    cluster: &Cluster,
    cfg: &AnalyzerConfig,
) -> Result<Confirmation, AnalyzerError> {
    if records.len() != predictions.len() || records.len() != deviations.len() {
        return Err(AnalyzerError::Misaligned {
            records: records.len(),
            predictions: predictions.len(),
            deviations: deviations.len(),
        });
    }
    let Some(live) = records.last() else {
        return Err(AnalyzerError::EmptyWindow);
    };

    let estimated: f64 = predictions.iter().zip(deviations).map(|(p, d)| p + d).sum();
    let observed: f64 = records.iter().map(|r| r.load(Channel::Bandwidth)).sum();
    let holds = estimated <= observed + INEQUALITY_REL_TOL * observed.abs().max(1.0);

    let mut violated = Vec::new();
    let streak = predictions
        .iter()
        .zip(deviations)
        .rev()
        .take_while(|(p, d)| **d > cfg.deviation_threshold * **p)
        .count();
    if streak > cfg.duration_threshold {
        violated.push(CongestionCondition::C1);
    }
    let cap = cluster.total_capacity();
    if live.demand.bw >= cap.bw {
        violated.push(CongestionCondition::C2);
    }
    if live.demand.cpu >= cap.cpu {
        violated.push(CongestionCondition::C3);
    }
    if live.demand.mem >= cap.mem {
        violated.push(CongestionCondition::C4);
    }
    Ok(Confirmation {
        confirmed: holds && !violated.is_empty(),
        violated,
    })
}

pub fn handling_directive(status: TrafficStatus, confirmed: bool) -> Directive {
    match (status, confirmed) {
        (TrafficStatus::Congested, true) => Directive::DivertToReserved,
        (TrafficStatus::SubNormal, _) => Directive::Consolidate,
        _ => Directive::NormalFlow,
    }
}
