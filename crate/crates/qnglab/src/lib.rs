//! Experiment harness for optimizer comparisons on the hardware-inspired
//! benchmark circuit: configuration, seeded runs, sweeps, trace emission,
//! and the imaginary-time reference oracle.

mod config;
mod emit;
mod harness;
mod imaginary;

pub use config::{ExperimentConfig, OptimizerChoice, OutputFormat, SweepAxis};
pub use emit::{
    emit_results, emit_results_to_writer, read_rows_csv, read_rows_json, trace_rows, ResultRow,
};
pub use harness::{
    compare_optimizers, initial_parameters, iterations_to_energy, run_experiment, sweep,
    ExperimentTrace,
};
pub use imaginary::{imaginary_time_reference, ImaginaryTimeReference};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure in run {run_id} at iteration {iteration}")]
    Numerical {
        run_id: String,
        iteration: usize,
        /// Partial trace ending in the diagnostic record.
        trace: Box<ExperimentTrace>,
    },
    #[error("operator is not Hermitian (defect {defect:.3e})")]
    NonHermitian { defect: f64 },
    #[error("dense reference limited to dimension {max}, got {got}")]
    ReferenceTooLarge { max: usize, got: usize },
}

impl HarnessError {
    /// CLI exit code: 2 for configuration problems, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::NonHermitian { .. } | HarnessError::ReferenceTooLarge { .. } => 2,
            HarnessError::Io { .. } => 1,
            HarnessError::Numerical { .. } => 3,
        }
    }
}

impl From<qng_core::CircuitError> for HarnessError {
    fn from(e: qng_core::CircuitError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<qng_core::EngineError> for HarnessError {
    fn from(e: qng_core::EngineError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<qng_core::GeometryError> for HarnessError {
    fn from(e: qng_core::GeometryError) -> Self {
        HarnessError::Config(e.to_string())
    }
}
