use std::fs;
use std::path::{Path, PathBuf};

use cransim_core::experiment::WindowSweep;
use cransim_core::gbt::BoostConfig;
use cransim_core::par::Execution;
use cransim_core::scheduler::Policy;
use cransim_core::sim::SimConfig;
use cransim_core::workload::{load_trace, GenSpec, SeriesSpec};
use cransim_core::JobRequest;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config field `{field}`: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: &str, msg: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        msg: msg.to_string(),
    }
}

/// Sweep axes. Percentiles for thresholds, minutes for windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub bw_thresholds: Vec<f64>,
    pub et_thresholds: Vec<f64>,
    /// (bw, et) threshold points for policy comparison.
    pub points: Vec<(f64, f64)>,
    pub policies: Vec<Policy>,
    pub windows: Vec<usize>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        SweepAxes {
            bw_thresholds: vec![25.0, 50.0, 75.0, 90.0],
            et_thresholds: vec![25.0, 50.0, 75.0, 90.0],
            points: vec![(25.0, 25.0), (50.0, 50.0), (75.0, 75.0)],
            policies: Policy::ALL.to_vec(),
            windows: vec![5, 10, 30, 60],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: PathBuf,
    pub execution: Execution,
    pub sim: SimConfig,
    /// Trace file to replay; when absent the `workload` generator is used.
    pub trace: Option<PathBuf>,
    pub workload: GenSpec,
    pub series: SeriesSpec,
    /// Forecaster used by the window sweep; the simulation uses `sim.predictor`.
    pub window_predictor: BoostConfig,
    pub train_fraction: f64,
    pub timing_repeats: usize,
    pub sweep: SweepAxes,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            out: PathBuf::from("out"),
            execution: Execution::default(),
            sim: SimConfig::default(),
            trace: None,
            workload: GenSpec::default(),
            series: SeriesSpec::default(),
            window_predictor: BoostConfig::default(),
            train_fraction: 0.8,
            timing_repeats: 3,
            sweep: SweepAxes::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub policies: Vec<Policy>,
    pub jobs: Option<usize>,
    pub intervals: Option<u32>,
    pub execution: Option<Execution>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// One seed drives the simulation, the workload and the series.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.sim.seed = s;
            self.workload.seed = s;
            self.series.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if !o.policies.is_empty() {
            self.sweep.policies = o.policies.clone();
            self.sim.policy = o.policies[0];
        }
        if let Some(n) = o.jobs {
            self.workload.jobs = n;
        }
        if let Some(t) = o.intervals {
            self.sim.intervals = t;
            self.workload.intervals = t;
        }
        if let Some(e) = o.execution {
            self.execution = e;
            self.sim.predictor.execution = e;
            self.window_predictor.execution = e;
        }
    }

    /// Everything that can be checked without running anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate().map_err(|e| match e {
            cransim_core::sim::SimError::InvalidConfig { field, msg } => invalid(&format!("sim.{field}"), msg),
            other => invalid("sim", other),
        })?;
        if self.trace.is_none() {
            self.workload.validate().map_err(|e| invalid("workload", e))?;
            if self.workload.intervals > self.sim.intervals {
                return Err(invalid(
                    "workload.intervals",
                    format!(
                        "arrivals span {} intervals but the run has {}",
                        self.workload.intervals, self.sim.intervals
                    ),
                ));
            }
        }
        let axes = &self.sweep;
        for (name, v) in [("sweep.bw_thresholds", &axes.bw_thresholds), ("sweep.et_thresholds", &axes.et_thresholds)] {
            if v.is_empty() {
                return Err(invalid(name, "must not be empty"));
            }
            if let Some(p) = v.iter().find(|p| !(1.0..=99.0).contains(*p)) {
                return Err(invalid(name, format!("percentile {p} outside [1, 99]")));
            }
        }
        if axes.points.is_empty() {
            return Err(invalid("sweep.points", "must not be empty"));
        }
        if let Some(p) = axes
            .points
            .iter()
            .find(|(b, e)| !(1.0..=99.0).contains(b) || !(1.0..=99.0).contains(e))
        {
            return Err(invalid("sweep.points", format!("{p:?} outside [1, 99]")));
        }
        if axes.policies.is_empty() {
            return Err(invalid("sweep.policies", "must not be empty"));
        }
        if axes.windows.is_empty() || axes.windows.contains(&0) {
            return Err(invalid("sweep.windows", "must be a non-empty list of positive widths"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid("train_fraction", "must be in (0, 1)"));
        }
        if self.timing_repeats < 1 {
            return Err(invalid("timing_repeats", "must be >= 1"));
        }
        self.window_predictor
            .validate()
            .map_err(|e| invalid("window_predictor", e))?;
        if self.series.minutes < 1 {
            return Err(invalid("series.minutes", "must be >= 1"));
        }
        Ok(())
    }

    /// Create the output directory and check that it takes files.
    pub fn prepare_out(&self) -> Result<(), ConfigError> {
        let probe = self.out.join(".write-probe");
        fs::create_dir_all(&self.out)
            .and_then(|_| fs::write(&probe, b""))
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| invalid("out", format!("{} is not writable: {e}", self.out.display())))
    }

    pub fn workload(&self) -> Result<Vec<JobRequest>, ConfigError> {
        match &self.trace {
            Some(p) => load_trace(p).map_err(|e| invalid("trace", e)),
            None => cransim_core::workload::generate(&self.workload).map_err(|e| invalid("workload", e)),
        }
    }

    pub fn window_sweep(&self) -> WindowSweep {
        WindowSweep {
            series: self.series,
            windows: self.sweep.windows.clone(),
            train_fraction: self.train_fraction,
            timing_repeats: self.timing_repeats,
        }
    }
}
