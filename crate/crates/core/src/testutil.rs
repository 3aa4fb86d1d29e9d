//! Test and bench support: random layered circuits and independent
//! numerical oracles.
//!
//! The oracles here validate the production paths from a different route:
//! the fidelity-Hessian metric and the finite-difference QGT use only full
//! state overlaps (never derivative states), and the softmax Fisher matrix
//! is a direct summation with analytic log-derivatives.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate};
use crate::geometry::ProbFamily;
use crate::pauli::PauliAxis;
use crate::seeding::{self, next_choice, next_unit};
use crate::state::{run, StateVector};

const TEST_STREAM: u64 = 99;

fn random_axis(rng: &mut ChaCha8Rng) -> PauliAxis {
    match next_choice(rng, 3) {
        0 => PauliAxis::X,
        1 => PauliAxis::Y,
        _ => PauliAxis::Z,
    }
}

/// A random layered circuit with mixed rotation axes, optional interleaved
/// fixed gates, and uniformly random angles. Returns the circuit and a
/// matching parameter vector.
pub fn random_circuit(
    seed: u64,
    n_qubits: usize,
    max_layers: usize,
    max_params: usize,
) -> (Circuit, Vec<f64>) {
    let mut rng = seeding::stream_rng(seed, TEST_STREAM);
    let layers = 1 + next_choice(&mut rng, max_layers as u32) as usize;
    let mut gates = Vec::new();
    let mut param = 0usize;
    for l in 0..layers {
        if l > 0 {
            // random entangling / basis-changing interlude
            match next_choice(&mut rng, 3) {
                0 if n_qubits >= 2 => {
                    let a = next_choice(&mut rng, n_qubits as u32 - 1) as usize;
                    gates.push(Gate::Cz { a, b: a + 1 });
                }
                1 => gates.push(Gate::Hadamard {
                    qubit: next_choice(&mut rng, n_qubits as u32) as usize,
                }),
                _ => {
                    for k in 0..n_qubits.saturating_sub(1) {
                        gates.push(Gate::Cz { a: k, b: k + 1 });
                    }
                }
            }
        }
        // one rotation on each of a random nonempty qubit subset
        let mut any = false;
        for q in 0..n_qubits {
            if param < max_params && (next_choice(&mut rng, 2) == 0 || (!any && q + 1 == n_qubits))
            {
                gates.push(Gate::Rotation {
                    axis: random_axis(&mut rng),
                    qubit: q,
                    param_index: param,
                });
                param += 1;
                any = true;
            }
        }
        if param >= max_params {
            break;
        }
    }
    if param == 0 {
        gates.push(Gate::Rotation {
            axis: random_axis(&mut rng),
            qubit: 0,
            param_index: 0,
        });
        param = 1;
    }
    let circuit = Circuit::layerize(gates, n_qubits).expect("generator produces valid circuits");
    let params: Vec<f64> = (0..param)
        .map(|_| next_unit(&mut rng) * std::f64::consts::TAU)
        .collect();
    (circuit, params)
}

fn fidelity(circuit: &Circuit, base: &StateVector, shifted_params: &[f64]) -> f64 {
    let other = run(circuit, shifted_params).expect("valid params");
    base.inner(&other).expect("same dims").norm_sqr()
}

fn fidelity_hessian_at(circuit: &Circuit, params: &[f64], h: f64) -> DMatrix<f64> {
    let d = params.len();
    let psi = run(circuit, params).expect("valid params");
    let f = |delta: &[(usize, f64)]| {
        let mut p = params.to_vec();
        for &(i, step) in delta {
            p[i] += step;
        }
        fidelity(circuit, &psi, &p)
    };
    let mut g = DMatrix::zeros(d, d);
    for i in 0..d {
        // F(0) = 1 exactly
        let d2 = (f(&[(i, h)]) - 2.0 + f(&[(i, -h)])) / (h * h);
        g[(i, i)] = -0.5 * d2;
        for j in (i + 1)..d {
            let d2 = (f(&[(i, h), (j, h)]) - f(&[(i, h), (j, -h)]) - f(&[(i, -h), (j, h)])
                + f(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            let v = -0.5 * d2;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Metric oracle from the fidelity Hessian, g = -1/2 d^2 |<psi(t), psi(t+dt)>|^2,
/// with second-order central differences at h = 1e-3 refined by one
/// Richardson step at h/2. Uses only full state overlaps.
pub fn fidelity_hessian_metric(circuit: &Circuit, params: &[f64]) -> DMatrix<f64> {
    let h = 1e-3;
    let coarse = fidelity_hessian_at(circuit, params, h);
    let fine = fidelity_hessian_at(circuit, params, h / 2.0);
    (fine * 4.0 - coarse) / 3.0
}

/// QGT of a black-box state family via central-difference derivative states.
pub fn finite_difference_qgt(
    state_fn: &dyn Fn(&[f64]) -> StateVector,
    params: &[f64],
    h: f64,
) -> DMatrix<Complex64> {
    let d = params.len();
    let psi = state_fn(params);
    let dim = psi.dim();
    let mut derivs = Vec::with_capacity(d);
    for i in 0..d {
        let mut plus = params.to_vec();
        plus[i] += h;
        let mut minus = params.to_vec();
        minus[i] -= h;
        let sp = state_fn(&plus);
        let sm = state_fn(&minus);
        let amps: Vec<Complex64> = (0..dim)
            .map(|k| (sp.amplitudes()[k] - sm.amplitudes()[k]) / Complex64::new(2.0 * h, 0.0))
            .collect();
        derivs.push(StateVector::from_amplitudes(psi.n_qubits(), amps).expect("dims"));
    }
    let overlaps: Vec<Complex64> = derivs
        .iter()
        .map(|ds| ds.inner(&psi).expect("dims"))
        .collect();
    let mut g = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] =
                derivs[i].inner(&derivs[j]).expect("dims") - overlaps[i] * overlaps[j].conj();
        }
    }
    g
}

/// A random softmax family p(x) ∝ exp(sum_k theta_k w_kx + b_x), returned
/// with its weight matrix for the direct-summation Fisher oracle.
pub fn softmax_family(seed: u64, n_outcomes: usize, d: usize) -> (ProbFamily, DMatrix<f64>) {
    let mut rng = seeding::stream_rng(seed, TEST_STREAM + 1);
    let weights = DMatrix::from_fn(d, n_outcomes, |_, _| 2.0 * next_unit(&mut rng) - 1.0);
    let bias: Vec<f64> = (0..n_outcomes).map(|_| next_unit(&mut rng) - 0.5).collect();
    let w = weights.clone();
    let family = ProbFamily::new(d, n_outcomes, move |theta: &[f64]| {
        let logits: Vec<f64> = (0..n_outcomes)
            .map(|x| bias[x] + (0..d).map(|k| theta[k] * w[(k, x)]).sum::<f64>())
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.iter().map(|e| e / z).collect()
    });
    (family, weights)
}

/// Fisher matrix of a softmax family by direct summation with analytic
/// log-derivatives: d log p(x) / d theta_i = w_ix - E_p[w_i].
pub fn softmax_fisher_oracle(
    family: &ProbFamily,
    weights: &DMatrix<f64>,
    params: &[f64],
) -> DMatrix<f64> {
    let p = family.evaluate(params).expect("valid family");
    let d = weights.nrows();
    let n = weights.ncols();
    let means: Vec<f64> = (0..d)
        .map(|i| (0..n).map(|x| p[x] * weights[(i, x)]).sum())
        .collect();
    let mut fisher = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            fisher[(i, j)] = (0..n)
                .map(|x| p[x] * (weights[(i, x)] - means[i]) * (weights[(j, x)] - means[j]))
                .sum();
        }
    }
    fisher
}
