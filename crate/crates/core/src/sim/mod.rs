//! Slot-by-slot simulation, metric collection, parameter sweeps and the
//! experiment configuration file.

mod config;
mod output;
mod run;

pub use config::{AgentTemplate, ExperimentConfig, SweepAxis, CONFIG_HEADER};
pub use output::{metrics_csv, plot_csv, summary_csv, training_csv, METRICS_HEADER, PLOT_HEADER, SUMMARY_HEADER, TRAINING_HEADER};
pub use run::{
    build_instance, instance_scenario, instance_topology, run_on, run_simulation, sub_seed, sweep, CellResult, MetricsSeries, RunOutput, RunSummary, SlotMetrics,
    TrainingRow,
};

use crate::model::{ConstraintReport, ModelError};
use crate::orchestrator::{OrchestratorError, OrchestratorKind};
use crate::predictor::PredictorError;
use crate::topology::TopologyError;
use crate::workload::WorkloadError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error("{orchestrator} produced an infeasible allocation (seed {seed}):\n{report}")]
    Infeasible { orchestrator: OrchestratorKind, seed: u64, report: Box<ConstraintReport> },
    #[error("run {cell} failed: {source}")]
    Run { cell: String, source: Box<SimError> },
    #[error("bad csv: {0}")]
    Csv(String),
}
