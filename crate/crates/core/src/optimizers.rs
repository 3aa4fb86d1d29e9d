//! Parameter-update strategies: vanilla gradient descent, Adam, quantum
//! natural gradient (metric linear solve), and natural-Adam, plus the
//! regularized metric solver and the instrumented optimization loop.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    fubini_study_metric, qgt_block_diagonal, qgt_diagonal, GeometryError, MetricMode, MetricTensor,
};
use crate::gradients::{energy, parameter_shift_gradient, GradientError, Objective};
use crate::state::{EvalSession, ShotBudget};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("metric is not symmetric (defect {defect:.3e})")]
    NonSymmetricMetric { defect: f64 },
    #[error("right-hand side contains a non-finite entry")]
    NonFiniteRhs,
    #[error("gradient length {grad} does not match parameter count {params}")]
    ShapeMismatch { grad: usize, params: usize },
    #[error("invalid optimizer configuration: {0}")]
    BadConfig(String),
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss {
        iteration: usize,
        trace: Vec<RunRecord>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Gd,
    Adam,
    Qng,
    NaturalAdam,
}

impl OptimizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Qng => "qng",
            OptimizerKind::NaturalAdam => "natural-adam",
        }
    }

    pub fn uses_metric(&self) -> bool {
        matches!(self, OptimizerKind::Qng | OptimizerKind::NaturalAdam)
    }
}

/// How degenerate metric directions are handled in the linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// Minimal-norm least-squares solve: invert eigenvalues above
    /// `eps_cut * max(1, lambda_max)`, zero the rest.
    PseudoInverse { eps_cut: f64 },
    /// Solve (g + lambda I) x = rhs.
    Tikhonov { lambda: f64 },
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::PseudoInverse { eps_cut: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub eta: f64,
    /// Metric approximation for qng / natural-adam; ignored by gd / adam.
    pub metric_mode: MetricMode,
    pub regularization: Regularization,
    pub adam: AdamParams,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            eta: 0.01,
            metric_mode: MetricMode::BlockDiagonal,
            regularization: Regularization::default(),
            adam: AdamParams::default(),
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_metric_mode(mut self, mode: MetricMode) -> Self {
        self.metric_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if !(self.eta > 0.0) {
            return Err(OptimizerError::BadConfig(format!(
                "step size must be positive, got {}",
                self.eta
            )));
        }
        match self.regularization {
            Regularization::PseudoInverse { eps_cut } if eps_cut < 0.0 => {
                return Err(OptimizerError::BadConfig("eps_cut must be >= 0".into()))
            }
            Regularization::Tikhonov { lambda } if lambda < 0.0 => {
                return Err(OptimizerError::BadConfig("lambda must be >= 0".into()))
            }
            _ => {}
        }
        for (name, b) in [("beta1", self.adam.beta1), ("beta2", self.adam.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(OptimizerError::BadConfig(format!(
                    "{name} must be in [0, 1), got {b}"
                )));
            }
        }
        Ok(())
    }
}

/// Mutable optimizer state: parameters plus Adam moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub params: Vec<f64>,
    pub iteration: usize,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(params: Vec<f64>) -> Self {
        let d = params.len();
        Self {
            params,
            iteration: 0,
            adam_m: vec![0.0; d],
            adam_v: vec![0.0; d],
        }
    }
}

/// Spectral information retained by the last metric solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    /// Number of eigenvalues kept (inverted).
    pub rank: usize,
    pub min_retained: f64,
    pub max_retained: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub new_params: Vec<f64>,
    pub update: Vec<f64>,
    pub diagnostics: Option<SolverDiagnostics>,
}

fn apply_update(
    state: &mut OptimizerState,
    update: Vec<f64>,
    diagnostics: Option<SolverDiagnostics>,
) -> StepResult {
    for (p, u) in state.params.iter_mut().zip(&update) {
        *p += u;
    }
    state.iteration += 1;
    StepResult {
        new_params: state.params.clone(),
        update,
        diagnostics,
    }
}

fn check_shapes(state: &OptimizerState, grad: &[f64]) -> Result<(), OptimizerError> {
    if grad.len() != state.params.len() {
        return Err(OptimizerError::ShapeMismatch {
            grad: grad.len(),
            params: state.params.len(),
        });
    }
    Ok(())
}

/// theta <- theta - eta * grad.
pub fn gd_step(
    state: &mut OptimizerState,
    grad: &[f64],
    eta: f64,
) -> Result<StepResult, OptimizerError> {
    check_shapes(state, grad)?;
    let update: Vec<f64> = grad.iter().map(|g| -eta * g).collect();
    Ok(apply_update(state, update, None))
}

/// Solve g x = rhs for a symmetric PSD metric, blockwise where the mode
/// allows it. Pseudo-inverse regularization yields the minimal-norm
/// least-squares solution; degenerate directions receive zero.
pub fn metric_solve(
    metric: &MetricTensor,
    rhs: &[f64],
    regularization: &Regularization,
) -> Result<(Vec<f64>, SolverDiagnostics), OptimizerError> {
    if rhs.len() != metric.dim() {
        return Err(OptimizerError::ShapeMismatch {
            grad: rhs.len(),
            params: metric.dim(),
        });
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(OptimizerError::NonFiniteRhs);
    }
    let defect = metric.symmetry_defect();
    if defect > 1e-8 {
        return Err(OptimizerError::NonSymmetricMetric { defect });
    }

    let d = metric.dim();
    let mut x = vec![0.0; d];
    let mut rank = 0usize;
    let mut min_retained = f64::INFINITY;
    let mut max_retained = f64::NEG_INFINITY;

    let mut solve_span = |start: usize, len: usize, x: &mut [f64]| {
        if len == 1 {
            let g = metric.entries()[(start, start)];
            let (inv, kept) = invert_eigenvalue(g, regularization, g.abs());
            if kept {
                rank += 1;
                min_retained = min_retained.min(g);
                max_retained = max_retained.max(g);
            }
            x[start] = inv * rhs[start];
            return;
        }
        let sub = metric.entries().view((start, start), (len, len)).into_owned();
        let rhs_sub = DVector::from_iterator(len, rhs[start..start + len].iter().copied());
        let eig = nalgebra::SymmetricEigen::new(sub);
        let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let mut out = DVector::zeros(len);
        for k in 0..len {
            let lambda = eig.eigenvalues[k];
            let (inv, kept) = invert_eigenvalue(lambda, regularization, lambda_max);
            if kept {
                rank += 1;
                min_retained = min_retained.min(lambda);
                max_retained = max_retained.max(lambda);
            }
            if inv != 0.0 {
                let v = eig.eigenvectors.column(k);
                let coeff = v.dot(&rhs_sub) * inv;
                out += v * coeff;
            }
        }
        for (i, val) in out.iter().enumerate() {
            x[start + i] = *val;
        }
    };

    match metric.mode() {
        MetricMode::Diagonal => {
            for i in 0..d {
                solve_span(i, 1, &mut x);
            }
        }
        MetricMode::BlockDiagonal => {
            for &(start, len) in metric.block_spans() {
                solve_span(start, len, &mut x);
            }
        }
        MetricMode::Full => {
            solve_span(0, d, &mut x);
        }
    }

    if rank == 0 {
        min_retained = 0.0;
        max_retained = 0.0;
    }
    Ok((
        x,
        SolverDiagnostics {
            rank,
            min_retained,
            max_retained,
        },
    ))
}

/// (1/lambda or regularized inverse, whether the eigenvalue was retained).
fn invert_eigenvalue(lambda: f64, reg: &Regularization, lambda_max: f64) -> (f64, bool) {
    match *reg {
        Regularization::PseudoInverse { eps_cut } => {
            let cutoff = eps_cut * lambda_max.max(1.0);
            if lambda > cutoff {
                (1.0 / lambda, true)
            } else {
                (0.0, false)
            }
        }
        Regularization::Tikhonov { lambda: tik } => (1.0 / (lambda + tik), true),
    }
}

/// Quantum natural gradient step: solve g * update = -eta * grad.
pub fn qng_step(
    state: &mut OptimizerState,
    grad: &[f64],
    metric: &MetricTensor,
    config: &OptimizerConfig,
) -> Result<StepResult, OptimizerError> {
    check_shapes(state, grad)?;
    let rhs: Vec<f64> = grad.iter().map(|g| -config.eta * g).collect();
    let (update, diagnostics) = metric_solve(metric, &rhs, &config.regularization)?;
    Ok(apply_update(state, update, Some(diagnostics)))
}

/// Standard Adam with bias correction.
pub fn adam_step(
    state: &mut OptimizerState,
    grad: &[f64],
    config: &OptimizerConfig,
) -> Result<StepResult, OptimizerError> {
    check_shapes(state, grad)?;
    let update = adam_update(state, grad, config);
    Ok(apply_update(state, update, None))
}

/// Adam fed with the natural gradient g^+ grad instead of the raw gradient.
pub fn natural_adam_step(
    state: &mut OptimizerState,
    grad: &[f64],
    metric: &MetricTensor,
    config: &OptimizerConfig,
) -> Result<StepResult, OptimizerError> {
    check_shapes(state, grad)?;
    let (natural, diagnostics) = metric_solve(metric, grad, &config.regularization)?;
    let update = adam_update(state, &natural, config);
    Ok(apply_update(state, update, Some(diagnostics)))
}

fn adam_update(state: &mut OptimizerState, grad: &[f64], config: &OptimizerConfig) -> Vec<f64> {
    let AdamParams {
        beta1,
        beta2,
        epsilon,
    } = config.adam;
    let t = (state.iteration + 1) as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    let mut update = vec![0.0; grad.len()];
    for i in 0..grad.len() {
        state.adam_m[i] = beta1 * state.adam_m[i] + (1.0 - beta1) * grad[i];
        state.adam_v[i] = beta2 * state.adam_v[i] + (1.0 - beta2) * grad[i] * grad[i];
        let m_hat = state.adam_m[i] / bc1;
        let v_hat = state.adam_v[i] / bc2;
        update[i] = -config.eta * m_hat / (v_hat.sqrt() + epsilon);
    }
    update
}

/// One row of an optimization trace. Row t describes the parameters before
/// step t: its energy, the evaluations and wall time consumed so far, and
/// the norm of the gradient measured when stepping away from it (absent on
/// the final row). Recorded energies are exact simulator diagnostics and do
/// not consume counted evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iteration: usize,
    pub loss: f64,
    pub energy: f64,
    pub grad_norm: Option<f64>,
    pub qevals_cum: u64,
    pub wall_ms: f64,
    pub diagnostics: Option<SolverDiagnostics>,
}

/// Iterate the configured optimizer for `max_iters` steps, recording one
/// row per visited parameter vector (max_iters + 1 rows).
///
/// Per iteration the counted cost is 2d evaluations for the gradient plus,
/// for qng / natural-adam in block or diagonal mode, one evaluation per
/// parametric layer. Full-mode metrics come from the exact simulator and
/// are free of counted evaluations.
pub fn run_optimization(
    obj: &Objective,
    init_params: &[f64],
    config: &OptimizerConfig,
    budget: &ShotBudget,
    max_iters: usize,
) -> Result<Vec<RunRecord>, OptimizerError> {
    config.validate()?;
    let mut state = OptimizerState::new(init_params.to_vec());
    let mut records = Vec::with_capacity(max_iters + 1);
    let session = EvalSession::new();
    let mut wall_ms = 0.0f64;

    for t in 0..=max_iters {
        let e = energy(obj, &state.params)?;
        let loss_val = obj.convention().scale(e);
        if !loss_val.is_finite() {
            records.push(RunRecord {
                iteration: t,
                loss: loss_val,
                energy: e,
                grad_norm: None,
                qevals_cum: session.total(),
                wall_ms,
                diagnostics: None,
            });
            return Err(OptimizerError::NonFiniteLoss {
                iteration: t,
                trace: records,
            });
        }
        if t == max_iters {
            records.push(RunRecord {
                iteration: t,
                loss: loss_val,
                energy: e,
                grad_norm: None,
                qevals_cum: session.total(),
                wall_ms,
                diagnostics: None,
            });
            break;
        }

        let qevals_before = session.total();
        let started = Instant::now();
        let grad = parameter_shift_gradient(obj, &state.params, budget, &session)?;
        let step = match config.kind {
            OptimizerKind::Gd => gd_step(&mut state, &grad.values, config.eta)?,
            OptimizerKind::Adam => adam_step(&mut state, &grad.values, config)?,
            OptimizerKind::Qng | OptimizerKind::NaturalAdam => {
                let metric = metric_for(obj, &state.params, config, budget, &session)?;
                if config.kind == OptimizerKind::Qng {
                    qng_step(&mut state, &grad.values, &metric, config)?
                } else {
                    natural_adam_step(&mut state, &grad.values, &metric, config)?
                }
            }
        };
        let elapsed = started.elapsed().as_secs_f64() * 1e3;

        records.push(RunRecord {
            iteration: t,
            loss: loss_val,
            energy: e,
            grad_norm: Some(grad.norm()),
            qevals_cum: qevals_before,
            wall_ms,
            diagnostics: step.diagnostics,
        });
        wall_ms += elapsed;
    }
    Ok(records)
}

fn metric_for(
    obj: &Objective,
    params: &[f64],
    config: &OptimizerConfig,
    budget: &ShotBudget,
    session: &EvalSession,
) -> Result<MetricTensor, OptimizerError> {
    let metric = match config.metric_mode {
        MetricMode::Full => fubini_study_metric(obj.circuit(), params)?,
        MetricMode::BlockDiagonal => qgt_block_diagonal(obj.circuit(), params, budget, session)?,
        MetricMode::Diagonal => qgt_diagonal(obj.circuit(), params, budget, session)?,
    };
    Ok(metric)
}

/// Identity metric helper for tests and the gd-equivalence property.
pub fn identity_metric(d: usize) -> MetricTensor {
    MetricTensor::new(DMatrix::identity(d, d), MetricMode::Full, vec![])
}
