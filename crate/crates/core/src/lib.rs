//! Interval-driven traffic management for cloud radio access networks.
//!
//! The pipeline forecasts per-interval load with second-order gradient
//! boosted trees, flags congestion from the deviation between forecast and
//! observed load, sorts jobs into five traffic states by bandwidth demand and
//! execution time, and places each state with its own strategy onto virtual
//! nodes carved out of physical machines. FCFS, first-fit and random-fit
//! baselines run through the same engine for comparison.
//!
//! ```text
//!  workload ──▶ analyzer (forecast, deviation, congestion)
//!                   │
//!                   ▼
//!              classifier ──▶ scheduler ──▶ cluster (PM / VN bookkeeping)
//!                                  │
//!                                  ▼
//!                            sim engine ──▶ report
//! ```

pub mod analyzer;
pub mod classifier;
pub mod domain;
pub mod experiment;
pub mod gbt;
pub mod par;
pub mod resources;
pub mod scheduler;
pub mod sim;
pub mod workload;

pub use domain::{
    Cluster, Constraint, JobId, JobRequest, MachineId, NodeId, Placement, Strategy, TrafficState,
};
pub use par::Execution;
pub use resources::{Resource, ResourceVector};
