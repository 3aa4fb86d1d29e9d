//! Dense statevector engine: state preparation, gate application, exact
//! expectation values, exact derivative states via generator insertion, and
//! finite-shot sampling in rotated product bases.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::exec;
use crate::pauli::{product_basis, PauliAxis, PauliError, PauliWord};
use crate::seeding;

/// Dense simulation above this register size is out of reach on a desk
/// machine (2^24 amplitudes is 256 MiB of doubles).
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("register size {n} outside supported range 1..={max}")]
    UnsupportedRegister { n: usize, max: usize },
    #[error("parameter vector has length {got}, circuit needs {expected}")]
    ParamCountMismatch { expected: usize, got: usize },
    #[error("parameter index {i} out of range for {d} parameters")]
    ParamIndexOutOfRange { i: usize, d: usize },
    #[error("state dimensions differ: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("amplitude buffer of length {got} is not 2^{n}")]
    BadAmplitudeCount { n: usize, got: usize },
    #[error("sampled mode needs at least one shot")]
    ZeroShots,
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// How expectation values are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotBudget {
    /// Exact expectation values from the statevector.
    Analytic,
    /// Empirical means over `shots` seeded Born-rule samples.
    Sampled { shots: u64, seed: u64 },
}

impl ShotBudget {
    pub fn sampled(shots: u64, seed: u64) -> Result<Self, EngineError> {
        if shots == 0 {
            return Err(EngineError::ZeroShots);
        }
        Ok(ShotBudget::Sampled { shots, seed })
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, ShotBudget::Analytic)
    }
}

/// Monotone per-session counter of quantum evaluations (one state
/// preparation plus measurement pass each).
///
/// Callers that fan work out in parallel reserve a block up front and
/// assign indices by position, so sampled-mode noise streams do not depend
/// on scheduling order.
#[derive(Debug, Default)]
pub struct EvalSession {
    counter: AtomicU64,
}

impl EvalSession {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total evaluations recorded so far.
    pub fn total(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    /// Reserve `k` evaluation indices; returns the first.
    pub fn reserve(&self, k: u64) -> u64 {
        self.counter.fetch_add(k, Ordering::Relaxed)
    }
}

/// 2^n complex amplitudes with unit 2-norm after every engine operation
/// (derivative states are the documented exception).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0>.
    pub fn zero_state(n_qubits: usize) -> Result<Self, EngineError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(EngineError::UnsupportedRegister {
                n: n_qubits,
                max: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self, EngineError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(EngineError::UnsupportedRegister {
                n: n_qubits,
                max: MAX_QUBITS,
            });
        }
        if amps.len() != 1 << n_qubits {
            return Err(EngineError::BadAmplitudeCount {
                n: n_qubits,
                got: amps.len(),
            });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        exec::indexed_sum(self.amps.len(), 0.0, |i| self.amps[i].norm_sqr()).sqrt()
    }

    /// <self|other>, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, EngineError> {
        if self.dim() != other.dim() {
            return Err(EngineError::DimensionMismatch {
                a: self.dim(),
                b: other.dim(),
            });
        }
        Ok(exec::indexed_sum(
            self.amps.len(),
            Complex64::new(0.0, 0.0),
            |i| self.amps[i].conj() * other.amps[i],
        ))
    }

    pub fn scale(&mut self, c: Complex64) {
        exec::for_each_indexed_mut(&mut self.amps, |_, a| *a *= c);
    }

    /// Born-rule probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        exec::map_indexed(self.amps.len(), |i| self.amps[i].norm_sqr())
    }

    /// Apply an arbitrary 2x2 unitary to one qubit.
    pub fn apply_single_qubit(
        &mut self,
        qubit: usize,
        m: &[[Complex64; 2]; 2],
    ) -> Result<(), EngineError> {
        if qubit >= self.n_qubits {
            return Err(EngineError::Pauli(PauliError::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            }));
        }
        let stride = 1usize << qubit;
        let [[m00, m01], [m10, m11]] = *m;
        exec::for_each_pair(&mut self.amps, stride, |a, b| {
            let (x, y) = (*a, *b);
            *a = m00 * x + m01 * y;
            *b = m10 * x + m11 * y;
        });
        Ok(())
    }

    /// Apply one gate, reading rotation angles from `params`.
    pub fn apply_gate(&mut self, gate: &Gate, params: &[f64]) -> Result<(), EngineError> {
        match gate {
            Gate::Rotation {
                axis,
                qubit,
                param_index,
            } => {
                let theta = *params
                    .get(*param_index)
                    .ok_or(EngineError::ParamIndexOutOfRange {
                        i: *param_index,
                        d: params.len(),
                    })?;
                self.apply_single_qubit(*qubit, &rotation_matrix(*axis, theta))
            }
            Gate::Cz { a, b } => {
                let (a, b) = (*a, *b);
                if a.max(b) >= self.n_qubits {
                    return Err(EngineError::Pauli(PauliError::QubitOutOfRange {
                        qubit: a.max(b),
                        n_qubits: self.n_qubits,
                    }));
                }
                let mask = (1usize << a) | (1usize << b);
                exec::for_each_indexed_mut(&mut self.amps, |i, amp| {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                });
                Ok(())
            }
            Gate::Hadamard { qubit } => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_single_qubit(*qubit, &[[h, h], [h, -h]])
            }
            Gate::RyFixed { qubit, angle } => {
                self.apply_single_qubit(*qubit, &rotation_matrix(PauliAxis::Y, *angle))
            }
            Gate::SDagger { qubit } => {
                let one = Complex64::new(1.0, 0.0);
                let zero = Complex64::new(0.0, 0.0);
                self.apply_single_qubit(*qubit, &[[one, zero], [zero, -Complex64::i()]])
            }
            Gate::PauliX { qubit } => self.apply_single_qubit(*qubit, &PauliAxis::X.matrix()),
            Gate::PauliY { qubit } => self.apply_single_qubit(*qubit, &PauliAxis::Y.matrix()),
            Gate::PauliZ { qubit } => self.apply_single_qubit(*qubit, &PauliAxis::Z.matrix()),
        }
    }

    /// In-place |psi> -> c P |psi| for a Pauli word cP.
    pub fn apply_pauli_word(&mut self, word: &PauliWord) -> Result<(), EngineError> {
        if let Some(q) = word.max_qubit() {
            if q >= self.n_qubits {
                return Err(EngineError::Pauli(PauliError::QubitOutOfRange {
                    qubit: q,
                    n_qubits: self.n_qubits,
                }));
            }
        }
        for (qubit, axis) in word.factors() {
            self.apply_single_qubit(qubit, &axis.matrix())?;
        }
        self.scale(Complex64::new(word.coefficient(), 0.0));
        Ok(())
    }
}

/// exp(-i theta/2 P) for a single-qubit Pauli P.
pub fn rotation_matrix(axis: PauliAxis, theta: f64) -> [[Complex64; 2]; 2] {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let zero = Complex64::new(0.0, 0.0);
    match axis {
        PauliAxis::X => {
            let ms = Complex64::new(0.0, -s);
            [[c, ms], [ms, c]]
        }
        PauliAxis::Y => [
            [c, Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), c],
        ],
        PauliAxis::Z => [
            [Complex64::new(0.0, -theta / 2.0).exp(), zero],
            [zero, Complex64::new(0.0, theta / 2.0).exp()],
        ],
    }
}

/// Prepare U(theta)|0>.
pub fn run(circuit: &Circuit, params: &[f64]) -> Result<StateVector, EngineError> {
    if params.len() != circuit.param_count() {
        return Err(EngineError::ParamCountMismatch {
            expected: circuit.param_count(),
            got: params.len(),
        });
    }
    let mut state = StateVector::zero_state(circuit.n_qubits())?;
    for layer in circuit.layers() {
        for gate in layer.fixed_gates() {
            state.apply_gate(gate, params)?;
        }
        for gate in layer.parametric_gates() {
            state.apply_gate(gate, params)?;
        }
    }
    Ok(state)
}

/// Exact coefficient * <psi|P|psi> for a Hermitian Pauli word.
pub fn pauli_expectation(state: &StateVector, obs: &PauliWord) -> Result<f64, EngineError> {
    if let Some(q) = obs.max_qubit() {
        if q >= state.n_qubits() {
            return Err(EngineError::Pauli(PauliError::QubitOutOfRange {
                qubit: q,
                n_qubits: state.n_qubits(),
            }));
        }
    }
    let action = obs.basis_action();
    let i_pow = Complex64::i().powu(action.n_y);
    let amps = state.amplitudes();
    let value = exec::indexed_sum(amps.len(), Complex64::new(0.0, 0.0), |x| {
        let sign = if (x & action.phase_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        amps[x ^ action.flip_mask].conj() * amps[x] * sign
    }) * i_pow
        * obs.coefficient();
    debug_assert!(value.im.abs() < 1e-10, "Hermitian word gave Im {}", value.im);
    Ok(value.re)
}

/// Exact derivative state d psi / d theta_i, computed by running the prefix
/// through parameter i's layer, inserting -i K_i, and running the remainder.
/// The result is un-normalized (norm 1/2 for Pauli generators).
pub fn derivative_state(
    circuit: &Circuit,
    params: &[f64],
    i: usize,
) -> Result<StateVector, EngineError> {
    if params.len() != circuit.param_count() {
        return Err(EngineError::ParamCountMismatch {
            expected: circuit.param_count(),
            got: params.len(),
        });
    }
    let (layer_l, axis, qubit) =
        circuit
            .locate_param(i)
            .ok_or(EngineError::ParamIndexOutOfRange {
                i,
                d: circuit.param_count(),
            })?;
    let mut state = StateVector::zero_state(circuit.n_qubits())?;
    for (idx, layer) in circuit.layers().iter().enumerate() {
        for gate in layer.fixed_gates() {
            state.apply_gate(gate, params)?;
        }
        for gate in layer.parametric_gates() {
            state.apply_gate(gate, params)?;
        }
        if idx + 1 == layer_l {
            // generator K_i commutes with the rest of its layer
            state.apply_pauli_word(&PauliWord::single(0.5, qubit, axis))?;
            state.scale(-Complex64::i());
        }
    }
    Ok(state)
}

/// Estimate expectations of a set of simultaneously product-diagonalizable
/// Pauli words from one logical quantum evaluation.
///
/// Returns estimates aligned with `words`. Analytic budgets return exact
/// values; sampled budgets rotate into the shared eigenbasis (X via H,
/// Y via H S-dagger), draw seeded Born-rule bitstrings, and average the
/// corresponding +-1 products, all from the same sample.
pub fn sample_commuting_paulis(
    state: &StateVector,
    words: &[PauliWord],
    budget: &ShotBudget,
    session: &EvalSession,
) -> Result<Vec<f64>, EngineError> {
    product_basis(words, state.n_qubits())?;
    let eval_index = session.reserve(1);
    estimate_at(state, words, budget, eval_index)
}

/// Like [`sample_commuting_paulis`] but with the evaluation index supplied
/// by the caller, for fan-out sites that reserve a block of indices up
/// front. Does not touch any session counter.
pub(crate) fn estimate_at(
    state: &StateVector,
    words: &[PauliWord],
    budget: &ShotBudget,
    eval_index: u64,
) -> Result<Vec<f64>, EngineError> {
    let basis = product_basis(words, state.n_qubits())?;
    match *budget {
        ShotBudget::Analytic => words
            .iter()
            .map(|w| pauli_expectation(state, w))
            .collect(),
        ShotBudget::Sampled { shots, seed } => {
            if shots == 0 {
                return Err(EngineError::ZeroShots);
            }
            let mut rotated = state.clone();
            for (qubit, axis) in basis.iter().enumerate() {
                match axis {
                    Some(PauliAxis::X) => {
                        rotated.apply_gate(&Gate::Hadamard { qubit }, &[])?;
                    }
                    Some(PauliAxis::Y) => {
                        rotated.apply_gate(&Gate::SDagger { qubit }, &[])?;
                        rotated.apply_gate(&Gate::Hadamard { qubit }, &[])?;
                    }
                    Some(PauliAxis::Z) | None => {}
                }
            }
            let probs = rotated.probabilities();
            let mut cumulative = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for p in &probs {
                acc += p;
                cumulative.push(acc);
            }
            let masks: Vec<usize> = words
                .iter()
                .map(|w| {
                    w.factors()
                        .fold(0usize, |m, (q, _)| m | (1usize << q))
                })
                .collect();
            let mut rng = seeding::counter_rng(seed, seeding::SHOT_STREAM, eval_index);
            let mut sums = vec![0.0f64; words.len()];
            for _ in 0..shots {
                let u = seeding::next_unit(&mut rng) * acc;
                let outcome = cumulative
                    .partition_point(|&c| c <= u)
                    .min(probs.len() - 1);
                for (sum, &mask) in sums.iter_mut().zip(&masks) {
                    if (outcome & mask).count_ones() % 2 == 0 {
                        *sum += 1.0;
                    } else {
                        *sum -= 1.0;
                    }
                }
            }
            Ok(words
                .iter()
                .zip(&sums)
                .map(|(w, s)| w.coefficient() * s / shots as f64)
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_benchmark_circuit;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ry_circuit() -> Circuit {
        Circuit::layerize(
            vec![Gate::Rotation {
                axis: PauliAxis::Y,
                qubit: 0,
                param_index: 0,
            }],
            1,
        )
        .unwrap()
    }

    fn rz_circuit() -> Circuit {
        Circuit::layerize(
            vec![Gate::Rotation {
                axis: PauliAxis::Z,
                qubit: 0,
                param_index: 0,
            }],
            1,
        )
        .unwrap()
    }

    #[test]
    fn zero_state_has_unit_amplitude_at_origin() {
        let s1 = StateVector::zero_state(1).unwrap();
        assert_eq!(s1.amplitudes(), &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let s2 = StateVector::zero_state(2).unwrap();
        assert_eq!(s2.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(s2.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
        for n in [1, 3, 8] {
            assert_abs_diff_eq!(StateVector::zero_state(n).unwrap().norm(), 1.0);
        }
    }

    #[test]
    fn zero_state_rejects_out_of_range_registers() {
        assert!(StateVector::zero_state(0).is_err());
        assert!(StateVector::zero_state(MAX_QUBITS + 1).is_err());
    }

    #[test]
    fn ry_pi_flips_the_qubit() {
        let s = run(&ry_circuit(), &[PI]).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rz_only_adds_phase_to_zero_state() {
        let theta = 0.7;
        let s = run(&rz_circuit(), &[theta]).unwrap();
        let expected = Complex64::new(0.0, -theta / 2.0).exp();
        assert_abs_diff_eq!((s.amplitudes()[0] - expected).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].norm(), 0.0);
    }

    #[test]
    fn empty_circuit_leaves_zero_state() {
        let c = Circuit::layerize(vec![], 2).unwrap();
        let s = run(&c, &[]).unwrap();
        assert_eq!(s, StateVector::zero_state(2).unwrap());
    }

    #[test]
    fn run_rejects_wrong_parameter_count() {
        assert!(matches!(
            run(&ry_circuit(), &[]),
            Err(EngineError::ParamCountMismatch { .. })
        ));
    }

    #[test]
    fn expectations_on_basis_states() {
        let z0 = PauliWord::single(1.0, 0, PauliAxis::Z);
        let s = StateVector::zero_state(1).unwrap();
        assert_abs_diff_eq!(pauli_expectation(&s, &z0).unwrap(), 1.0);

        let s2 = StateVector::zero_state(2).unwrap();
        let zz = PauliWord::from_factors(1.0, [(0, PauliAxis::Z), (1, PauliAxis::Z)]).unwrap();
        assert_abs_diff_eq!(pauli_expectation(&s2, &zz).unwrap(), 1.0);
    }

    #[test]
    fn equator_state_has_zero_z() {
        let s = run(&ry_circuit(), &[FRAC_PI_2]).unwrap();
        let z = PauliWord::single(1.0, 0, PauliAxis::Z);
        assert_abs_diff_eq!(pauli_expectation(&s, &z).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ry_expectation_traces_cosine() {
        let z = PauliWord::single(1.0, 0, PauliAxis::Z);
        for theta in [0.0, 0.3, 1.1, 2.9] {
            let s = run(&ry_circuit(), &[theta]).unwrap();
            assert_abs_diff_eq!(
                pauli_expectation(&s, &z).unwrap(),
                theta.cos(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn expectation_rejects_out_of_range_observable() {
        let s = StateVector::zero_state(1).unwrap();
        let z5 = PauliWord::single(1.0, 5, PauliAxis::Z);
        assert!(pauli_expectation(&s, &z5).is_err());
    }

    #[test]
    fn ry_derivative_matches_hand_formula() {
        // psi = (cos t/2, sin t/2), d psi = (-(1/2) sin t/2, (1/2) cos t/2)
        let theta = 0.9;
        let d = derivative_state(&ry_circuit(), &[theta], 0).unwrap();
        assert_abs_diff_eq!(d.amplitudes()[0].re, -0.5 * (theta / 2.0).sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.amplitudes()[1].re, 0.5 * (theta / 2.0).cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.amplitudes()[0].im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.amplitudes()[1].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_norm_is_half_for_pauli_generators() {
        let (c, _) = build_benchmark_circuit(3, 2, 4).unwrap();
        let params: Vec<f64> = (0..c.param_count()).map(|i| 0.3 + 0.2 * i as f64).collect();
        for i in 0..c.param_count() {
            let d = derivative_state(&c, &params, i).unwrap();
            assert_abs_diff_eq!(d.norm(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences_elementwise() {
        let (c, _) = build_benchmark_circuit(3, 3, 8).unwrap();
        let params: Vec<f64> = (0..c.param_count())
            .map(|i| 1.0 + 0.37 * (i as f64).sin())
            .collect();
        let h = 1e-5;
        for i in (0..c.param_count()).step_by(2) {
            let exact = derivative_state(&c, &params, i).unwrap();
            let mut plus = params.clone();
            plus[i] += h;
            let mut minus = params.clone();
            minus[i] -= h;
            let sp = run(&c, &plus).unwrap();
            let sm = run(&c, &minus).unwrap();
            for k in 0..exact.dim() {
                let fd = (sp.amplitudes()[k] - sm.amplitudes()[k]) / (2.0 * h);
                assert!((fd - exact.amplitudes()[k]).norm() < 1e-8, "entry {k}");
            }
        }
    }

    #[test]
    fn norm_is_preserved_by_random_circuits() {
        for seed in 0..5 {
            let (c, _) = build_benchmark_circuit(10, 6, seed).unwrap();
            let params: Vec<f64> = (0..c.param_count())
                .map(|i| (i as f64 * 0.71 + seed as f64).sin() * PI)
                .collect();
            let s = run(&c, &params).unwrap();
            assert!((s.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn phased_fixed_gate_only_shifts_global_phase() {
        let (c, obs) = build_benchmark_circuit(3, 2, 2).unwrap();
        let params: Vec<f64> = (0..c.param_count()).map(|i| 0.4 * i as f64 + 0.2).collect();
        let alpha = 0.7;
        let phase = Complex64::new(0.0, alpha).exp();

        let reference = run(&c, &params).unwrap();
        // replay gate by gate, multiplying the first fixed gate by e^{i alpha}
        let mut phased = StateVector::zero_state(c.n_qubits()).unwrap();
        let mut done = false;
        for gate in c.flatten() {
            phased.apply_gate(&gate, &params).unwrap();
            if !done && !gate.is_parametric() {
                phased.scale(phase);
                done = true;
            }
        }
        assert!(done);

        let overlap = reference.inner(&phased).unwrap();
        assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            pauli_expectation(&reference, &obs).unwrap(),
            pauli_expectation(&phased, &obs).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn analytic_sampling_returns_exact_values_and_counts_one_eval() {
        let s = StateVector::zero_state(1).unwrap();
        let z = PauliWord::single(1.0, 0, PauliAxis::Z);
        let session = EvalSession::new();
        let est =
            sample_commuting_paulis(&s, &[z], &ShotBudget::Analytic, &session).unwrap();
        assert_eq!(est, vec![1.0]);
        assert_eq!(session.total(), 1);
    }

    #[test]
    fn plus_state_sampled_mean_is_near_zero() {
        let mut plus = StateVector::zero_state(1).unwrap();
        plus.apply_gate(&Gate::Hadamard { qubit: 0 }, &[]).unwrap();
        let z = PauliWord::single(1.0, 0, PauliAxis::Z);
        let session = EvalSession::new();
        let budget = ShotBudget::sampled(8192, 5).unwrap();
        let est = sample_commuting_paulis(&plus, &[z], &budget, &session).unwrap();
        assert!(est[0].abs() < 4.0 / (8192.0f64).sqrt() * 2.0);
    }

    #[test]
    fn sampling_is_deterministic_per_evaluation_index() {
        let mut plus = StateVector::zero_state(1).unwrap();
        plus.apply_gate(&Gate::Hadamard { qubit: 0 }, &[]).unwrap();
        let z = PauliWord::single(1.0, 0, PauliAxis::Z);
        let budget = ShotBudget::sampled(256, 9).unwrap();

        let run_once = || {
            let session = EvalSession::new();
            let a = sample_commuting_paulis(&plus, &[z.clone()], &budget, &session).unwrap();
            let b = sample_commuting_paulis(&plus, &[z.clone()], &budget, &session).unwrap();
            (a, b)
        };
        let (a1, b1) = run_once();
        let (a2, b2) = run_once();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        // successive evaluations see fresh noise
        assert_ne!(a1, b1);
    }

    #[test]
    fn sampled_estimator_is_unbiased_over_seeds() {
        // <X> on RY(0.8)|0> is sin(0.8)
        let c = ry_circuit();
        let s = run(&c, &[0.8]).unwrap();
        let x = PauliWord::single(1.0, 0, PauliAxis::X);
        let exact = pauli_expectation(&s, &x).unwrap();
        let shots = 1024u64;
        let n_seeds = 200;
        let mut mean = 0.0;
        for seed in 0..n_seeds {
            let session = EvalSession::new();
            let budget = ShotBudget::sampled(shots, seed).unwrap();
            mean += sample_commuting_paulis(&s, &[x.clone()], &budget, &session).unwrap()[0];
        }
        mean /= n_seeds as f64;
        let se = ((1.0 - exact * exact) / (shots as f64 * n_seeds as f64)).sqrt();
        assert!(
            (mean - exact).abs() <= 5.0 * se,
            "mean {mean} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn sampling_rejects_non_product_sets() {
        let s = StateVector::zero_state(1).unwrap();
        let words = vec![
            PauliWord::single(1.0, 0, PauliAxis::X),
            PauliWord::single(1.0, 0, PauliAxis::Z),
        ];
        let session = EvalSession::new();
        assert!(
            sample_commuting_paulis(&s, &words, &ShotBudget::Analytic, &session).is_err()
        );
    }

    #[test]
    fn layer_observable_set_resolves_in_single_call() {
        // all n(n+1)/2 first and second moments of a layer from one sample
        let (c, _) = build_benchmark_circuit(4, 2, 3).unwrap();
        let params = vec![0.4; c.param_count()];
        let prefix = c.subcircuit_prefix(1).unwrap();
        let psi = run(&prefix, &params).unwrap();
        let gens = c.generators_for_layer(1).unwrap();
        let mut words = Vec::new();
        for g in &gens {
            words.push(g.with_coefficient(1.0));
        }
        for i in 0..gens.len() {
            for j in (i + 1)..gens.len() {
                words.push(
                    gens[i]
                        .with_coefficient(1.0)
                        .product(&gens[j].with_coefficient(1.0))
                        .unwrap(),
                );
            }
        }
        assert_eq!(words.len(), 4 * 5 / 2);
        let session = EvalSession::new();
        let est = sample_commuting_paulis(&psi, &words, &ShotBudget::Analytic, &session).unwrap();
        assert_eq!(est.len(), 10);
        assert_eq!(session.total(), 1);
    }
}
