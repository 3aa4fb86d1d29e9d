//! Objective evaluation and first-order gradients via the parameter-shift
//! rule, with a finite-difference oracle alongside.

use thiserror::Error;

use crate::circuit::Circuit;
use crate::exec;
use crate::pauli::{product_basis, PauliError, PauliWord};
use crate::state::{self, run, EngineError, EvalSession, ShotBudget};

#[derive(Debug, Error)]
pub enum GradientError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("finite-difference step must be positive, got {0}")]
    NonPositiveStep(f64),
}

/// Loss scaling: `Half` mirrors the trace formulation L = <H>/2, `Plain`
/// reports the bare energy <H> (the convention used for experiment traces).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossConvention {
    Half,
    Plain,
}

impl LossConvention {
    pub fn scale(&self, energy: f64) -> f64 {
        match self {
            LossConvention::Half => 0.5 * energy,
            LossConvention::Plain => energy,
        }
    }
}

/// A circuit together with a Hermitian observable (a real combination of
/// Pauli words) and a loss convention.
pub struct Objective {
    circuit: Circuit,
    words: Vec<PauliWord>,
    /// Indices of `words` grouped into simultaneously measurable sets; each
    /// group costs one quantum evaluation per estimate.
    groups: Vec<Vec<usize>>,
    convention: LossConvention,
}

impl Objective {
    /// The common single-word case, e.g. the Z0 Z1 benchmark observable.
    pub fn new(circuit: Circuit, observable: PauliWord, convention: LossConvention) -> Self {
        Self::from_words(circuit, vec![observable], convention).expect("single word always groups")
    }

    /// Observable given as a sum of Pauli words.
    pub fn from_words(
        circuit: Circuit,
        words: Vec<PauliWord>,
        convention: LossConvention,
    ) -> Result<Self, GradientError> {
        let n = circuit.n_qubits();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (idx, word) in words.iter().enumerate() {
            product_basis(std::slice::from_ref(word), n)?;
            let mut placed = false;
            for group in groups.iter_mut() {
                let mut probe: Vec<PauliWord> =
                    group.iter().map(|&k| words[k].clone()).collect();
                probe.push(word.clone());
                if product_basis(&probe, n).is_ok() {
                    group.push(idx);
                    placed = true;
                    break;
                }
            }
            if !placed {
                groups.push(vec![idx]);
            }
        }
        Ok(Self {
            circuit,
            words,
            groups,
            convention,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn observable_words(&self) -> &[PauliWord] {
        &self.words
    }

    pub fn convention(&self) -> LossConvention {
        self.convention
    }

    /// Quantum evaluations needed per energy estimate.
    pub fn groups_per_energy(&self) -> u64 {
        self.groups.len() as u64
    }

    fn energy_at(
        &self,
        params: &[f64],
        budget: &ShotBudget,
        base_eval: u64,
    ) -> Result<f64, GradientError> {
        let state = run(&self.circuit, params)?;
        let mut total = 0.0;
        for (k, group) in self.groups.iter().enumerate() {
            let words: Vec<PauliWord> = group.iter().map(|&w| self.words[w].clone()).collect();
            let est = state::estimate_at(&state, &words, budget, base_eval + k as u64)?;
            total += est.iter().sum::<f64>();
        }
        Ok(total)
    }
}

/// Exact energy <H> from the statevector, free of evaluation accounting.
/// Used for trace diagnostics; the optimization loop itself only consumes
/// counted evaluations.
pub fn energy(obj: &Objective, params: &[f64]) -> Result<f64, GradientError> {
    let state = run(obj.circuit(), params)?;
    let mut total = 0.0;
    for word in &obj.words {
        total += state::pauli_expectation(&state, word)?;
    }
    Ok(total)
}

/// Convention-scaled objective value; counts one quantum evaluation per
/// co-measurable observable group.
pub fn loss(
    obj: &Objective,
    params: &[f64],
    budget: &ShotBudget,
    session: &EvalSession,
) -> Result<f64, GradientError> {
    let base = session.reserve(obj.groups_per_energy());
    Ok(obj.convention.scale(obj.energy_at(params, budget, base)?))
}

/// Gradient values plus the number of quantum evaluations they consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub values: Vec<f64>,
    pub quantum_evals_used: u64,
}

impl GradientVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Parameter-shift gradient: dL/dtheta_i = [L(theta + pi/2 e_i) -
/// L(theta - pi/2 e_i)] / 2, exact for Pauli-rotation gates (generator
/// eigenvalues +-1/2). Exactly 2d energy estimates; the shifted evaluations
/// may run in parallel, with evaluation indices assigned by parameter so
/// sampled noise is schedule-independent.
pub fn parameter_shift_gradient(
    obj: &Objective,
    params: &[f64],
    budget: &ShotBudget,
    session: &EvalSession,
) -> Result<GradientVector, GradientError> {
    shifted_difference_gradient(obj, params, std::f64::consts::FRAC_PI_2, 0.5, budget, session)
}

/// Central-difference oracle with step `h`: [L(theta + h e_i) -
/// L(theta - h e_i)] / (2 h), also 2d evaluations.
pub fn finite_difference_gradient(
    obj: &Objective,
    params: &[f64],
    h: f64,
    budget: &ShotBudget,
    session: &EvalSession,
) -> Result<GradientVector, GradientError> {
    if h <= 0.0 {
        return Err(GradientError::NonPositiveStep(h));
    }
    shifted_difference_gradient(obj, params, h, 1.0 / (2.0 * h), budget, session)
}

fn shifted_difference_gradient(
    obj: &Objective,
    params: &[f64],
    shift: f64,
    scale: f64,
    budget: &ShotBudget,
    session: &EvalSession,
) -> Result<GradientVector, GradientError> {
    let d = obj.circuit().param_count();
    let per_energy = obj.groups_per_energy();
    let base = session.reserve(2 * d as u64 * per_energy);
    let values = exec::map_indexed(d, |i| -> Result<f64, GradientError> {
        let mut plus = params.to_vec();
        plus[i] += shift;
        let mut minus = params.to_vec();
        minus[i] -= shift;
        let e_plus = obj.energy_at(&plus, budget, base + (2 * i as u64) * per_energy)?;
        let e_minus = obj.energy_at(&minus, budget, base + (2 * i as u64 + 1) * per_energy)?;
        Ok(scale * (obj.convention.scale(e_plus) - obj.convention.scale(e_minus)))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(GradientVector {
        values,
        quantum_evals_used: 2 * d as u64 * per_energy,
    })
}
