//! Shared domain types: jobs, the two-level machine/node cluster, placements
//! and the placement constraint validator.

mod cluster;
mod job;
mod placement;

pub use cluster::{Cluster, MachineId, NodeId, PhysicalMachine, VirtualNode};
pub use job::{JobId, JobRequest, TrafficState, DEFAULT_PRIORITY};
pub use placement::{
    validate_batch, validate_placement, Constraint, Placement, Share, Strategy, Validation,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid {job}: {reason}")]
    InvalidJob { job: JobId, reason: String },
    #[error("unknown virtual node {0:?}")]
    UnknownNode(NodeId),
    #[error("unknown physical machine {0:?}")]
    UnknownMachine(MachineId),
    #[error("placement refers to {placement} but job is {job}")]
    JobMismatch { placement: JobId, job: JobId },
    #[error("placement for {0} has no targets")]
    EmptyPlacement(JobId),
    #[error("allocation of {job} refused, violated {violated:?}")]
    ConstraintViolation {
        job: JobId,
        violated: Vec<Constraint>,
    },
    #[error("{job} is not allocated on node {node:?}")]
    NotAllocated { job: JobId, node: NodeId },
    #[error("node {0:?} still hosts jobs")]
    NodeBusy(NodeId),
    #[error("node capacity {requested} does not fit machine {machine:?}")]
    NodeDoesNotFit {
        machine: MachineId,
        requested: crate::ResourceVector,
    },
    #[error("a cluster needs at least one physical machine")]
    EmptyCluster,
}
