use std::fmt;

use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::resources::ResourceVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "job#{}", self.0)
    }
}

/// Traffic state assigned by the classifier.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum TrafficState {
    #[default]
    Unclassified,
    Light,
    Straggler,
    Hog,
    Heavy,
    Average,
}

impl TrafficState {
    /// The five classified states, in the order the classifier evaluates them.
    pub const CLASSIFIED: [TrafficState; 5] = [
        TrafficState::Light,
        TrafficState::Straggler,
        TrafficState::Hog,
        TrafficState::Heavy,
        TrafficState::Average,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TrafficState::Unclassified => "unclassified",
            TrafficState::Light => "light",
            TrafficState::Straggler => "straggler",
            TrafficState::Hog => "hog",
            TrafficState::Heavy => "heavy",
            TrafficState::Average => "average",
        }
    }
}

impl fmt::Display for TrafficState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One unit of RAN traffic: a job with resource demand and an execution
/// time estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobRequest {
    pub id: JobId,
    /// Interval index the job arrives in.
    pub arrival: u32,
    pub demand: ResourceVector,
    /// Estimated execution time in seconds.
    pub exec_time: f64,
    /// Absolute deadline in simulated seconds; `f64::INFINITY` when absent.
    pub deadline: f64,
    /// Lower is more urgent.
    pub priority: u8,
    pub state: TrafficState,
}

pub const DEFAULT_PRIORITY: u8 = 3;

impl JobRequest {
    pub fn new(
        id: u64,
        arrival: u32,
        demand: ResourceVector,
        exec_time: f64,
    ) -> Result<Self, DomainError> {
        let job = JobRequest {
            id: JobId(id),
            arrival,
            demand,
            exec_time,
            deadline: f64::INFINITY,
            priority: DEFAULT_PRIORITY,
            state: TrafficState::Unclassified,
        };
        job.validate()?;
        Ok(job)
    }

    pub fn with_deadline(mut self, deadline: f64) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn with_priority(mut self, priority: u8) -> Self {
        self.priority = priority;
        self
    }

    pub fn with_state(mut self, state: TrafficState) -> Self {
        self.state = state;
        self
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.exec_time.is_finite() && self.exec_time > 0.0) {
            return Err(DomainError::InvalidJob {
                job: self.id,
                reason: format!("execution time must be > 0, got {}", self.exec_time),
            });
        }
        if self.demand.bw == 0 {
            return Err(DomainError::InvalidJob {
                job: self.id,
                reason: "bandwidth demand must be > 0".into(),
            });
        }
        if self.deadline.is_nan() {
            return Err(DomainError::InvalidJob {
                job: self.id,
                reason: "deadline is NaN".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_bandwidth() {
        let err = JobRequest::new(1, 0, ResourceVector::new(10, 10, 0), 5.0).unwrap_err();
        assert!(matches!(err, DomainError::InvalidJob { .. }));
    }

    #[test]
    fn rejects_non_positive_exec_time() {
        assert!(JobRequest::new(1, 0, ResourceVector::new(10, 10, 10), 0.0).is_err());
        assert!(JobRequest::new(1, 0, ResourceVector::new(10, 10, 10), -3.0).is_err());
    }

    #[test]
    fn defaults_applied() {
        let job = JobRequest::new(7, 2, ResourceVector::new(10, 10, 10), 1.0).unwrap();
        assert_eq!(job.deadline, f64::INFINITY);
        assert_eq!(job.priority, DEFAULT_PRIORITY);
        assert_eq!(job.state, TrafficState::Unclassified);
    }
}
