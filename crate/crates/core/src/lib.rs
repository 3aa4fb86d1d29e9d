//! Statevector laboratory for quantum natural gradient optimization of
//! layered parametrized circuits.
//!
//! The crate is organized around the optimization pipeline: [`circuit`]
//! describes layered ansaetze, [`state`] simulates them, [`geometry`]
//! computes the Fubini-Study metric and its block-diagonal and diagonal
//! approximations, [`gradients`] evaluates objectives and parameter-shift
//! gradients, and [`optimizers`] iterates parameter updates.
//!
//! Data-parallel inner loops use rayon when the default `parallel` feature
//! is enabled; builds without it run the same algorithms sequentially and
//! produce bit-identical results.

pub mod circuit;
mod exec;
pub mod geometry;
pub mod gradients;
pub mod optimizers;
pub mod pauli;
pub mod seeding;
pub mod state;
pub mod testutil;

pub use circuit::{build_benchmark_circuit, Circuit, CircuitError, CircuitSpec, Gate, Layer};
pub use geometry::{
    amplitude_embed, berry_connection, fisher_information, fisher_rao_distance,
    fubini_study_distance, fubini_study_metric, qgt_block_diagonal, qgt_diagonal, qgt_exact,
    BerryConnection, GeometryError, MetricMode, MetricTensor, ProbFamily, QGTensor,
};
pub use gradients::{
    finite_difference_gradient, loss, parameter_shift_gradient, GradientError, GradientVector,
    LossConvention, Objective,
};
pub use optimizers::{
    metric_solve, run_optimization, AdamParams, OptimizerConfig, OptimizerError, OptimizerKind,
    OptimizerState, Regularization, RunRecord, SolverDiagnostics, StepResult,
};
pub use pauli::{PauliAxis, PauliError, PauliWord};
pub use state::{
    derivative_state, pauli_expectation, run, sample_commuting_paulis, EngineError, EvalSession,
    ShotBudget, StateVector, MAX_QUBITS,
};
