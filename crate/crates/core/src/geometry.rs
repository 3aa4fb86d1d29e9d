//! Quantum state geometry: the Quantum Geometric Tensor, its Fubini-Study
//! real part, the Berry connection, block-diagonal and diagonal metric
//! approximations from subcircuit measurements, and the classical
//! Fisher-information reductions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError};
use crate::exec;
use crate::pauli::PauliError;
use crate::state::{
    self, derivative_state, run, EngineError, EvalSession, ShotBudget, StateVector, MAX_QUBITS,
};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("probability {p} at outcome {x} underflows the 1e-12 floor")]
    ProbabilityUnderflow { x: usize, p: f64 },
    #[error("negative probability {p} at outcome {x}")]
    NegativeProbability { x: usize, p: f64 },
    #[error("probability vectors have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("family evaluator returned {got} probabilities, expected {expected}")]
    WrongOutcomeCount { expected: usize, got: usize },
    #[error("parameter vector has length {got}, family needs {expected}")]
    ParamCountMismatch { expected: usize, got: usize },
    #[error("layer {layer} parameters are not a contiguous index range")]
    NonContiguousBlock { layer: usize },
    #[error("{outcomes} outcomes need more than the {max}-qubit engine limit")]
    EmbeddingTooLarge { outcomes: usize, max: usize },
}

/// Which entries of the metric are populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricMode {
    Full,
    BlockDiagonal,
    Diagonal,
}

impl MetricMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricMode::Full => "full",
            MetricMode::BlockDiagonal => "block",
            MetricMode::Diagonal => "diag",
        }
    }
}

/// The full complex Quantum Geometric Tensor at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct QGTensor {
    entries: DMatrix<Complex64>,
}

impl QGTensor {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.entries.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.entries.map(|z| z.im)
    }

    /// Largest |G_ij - conj(G_ji)| deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `{"re": [[..]], "im": [[..]]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "re": matrix_rows(&self.real_part()),
            "im": matrix_rows(&self.imag_part()),
        })
    }
}

/// Real symmetric metric tensor in full, block-diagonal, or diagonal form.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    entries: DMatrix<f64>,
    mode: MetricMode,
    block_spans: Vec<(usize, usize)>,
}

impl MetricTensor {
    pub(crate) fn new(entries: DMatrix<f64>, mode: MetricMode, block_spans: Vec<(usize, usize)>) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        Self {
            entries,
            mode,
            block_spans,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn mode(&self) -> MetricMode {
        self.mode
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// (start, length) parameter spans of the diagonal blocks; one per
    /// parametric layer in block-diagonal mode, empty otherwise.
    pub fn block_spans(&self) -> &[(usize, usize)] {
        &self.block_spans
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)]).collect()
    }

    /// Largest |g_ij - g_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..i {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)]).abs());
            }
        }
        worst
    }

    /// `{"mode": .., "d": .., "entries": [[..]]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": self.mode.as_str(),
            "d": self.dim(),
            "entries": matrix_rows(&self.entries),
        })
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

/// The Berry connection A_i = i <psi | d_i psi>, real for normalized states.
#[derive(Debug, Clone, PartialEq)]
pub struct BerryConnection {
    values: Vec<f64>,
}

impl BerryConnection {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A black-box parametric family of strictly positive distributions.
pub struct ProbFamily {
    evaluator: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    d: usize,
    n_outcomes: usize,
}

impl ProbFamily {
    pub fn new(
        d: usize,
        n_outcomes: usize,
        evaluator: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            evaluator: Box::new(evaluator),
            d,
            n_outcomes,
        }
    }

    pub fn param_count(&self) -> usize {
        self.d
    }

    pub fn outcome_count(&self) -> usize {
        self.n_outcomes
    }

    /// Evaluate and validate shape and nonnegativity.
    pub fn evaluate(&self, params: &[f64]) -> Result<Vec<f64>, GeometryError> {
        if params.len() != self.d {
            return Err(GeometryError::ParamCountMismatch {
                expected: self.d,
                got: params.len(),
            });
        }
        let p = (self.evaluator)(params);
        if p.len() != self.n_outcomes {
            return Err(GeometryError::WrongOutcomeCount {
                expected: self.n_outcomes,
                got: p.len(),
            });
        }
        for (x, &px) in p.iter().enumerate() {
            if px < 0.0 {
                return Err(GeometryError::NegativeProbability { x, p: px });
            }
        }
        Ok(p)
    }
}

/// Exact QGT from derivative states:
/// G_ij = <d_i psi, d_j psi> - <d_i psi, psi><psi, d_j psi>.
pub fn qgt_exact(circuit: &Circuit, params: &[f64]) -> Result<QGTensor, GeometryError> {
    let d = circuit.param_count();
    if d == 0 {
        return Ok(QGTensor {
            entries: DMatrix::zeros(0, 0),
        });
    }
    let psi = run(circuit, params)?;
    let derivs = exec::map_indexed(d, |i| derivative_state(circuit, params, i))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let overlaps: Vec<Complex64> = derivs
        .iter()
        .map(|ds| ds.inner(&psi))
        .collect::<Result<_, _>>()?;

    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let upper = exec::map_indexed(pairs.len(), |k| {
        let (i, j) = pairs[k];
        derivs[i]
            .inner(&derivs[j])
            .map(|gram| gram - overlaps[i] * overlaps[j].conj())
    })
    .into_iter()
    .collect::<Result<Vec<_>, EngineError>>()?;

    let mut entries = DMatrix::zeros(d, d);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        entries[(i, j)] = upper[k];
        entries[(j, i)] = upper[k].conj();
    }
    let tensor = QGTensor { entries };
    debug_assert!(tensor.hermiticity_defect() <= 1e-10);
    Ok(tensor)
}

/// Fubini-Study metric: the real part of the exact QGT.
pub fn fubini_study_metric(circuit: &Circuit, params: &[f64]) -> Result<MetricTensor, GeometryError> {
    let qgt = qgt_exact(circuit, params)?;
    Ok(MetricTensor::new(qgt.real_part(), MetricMode::Full, vec![]))
}

/// A_i = i <psi | d_i psi>, computed from exact derivative states.
pub fn berry_connection(circuit: &Circuit, params: &[f64]) -> Result<BerryConnection, GeometryError> {
    let d = circuit.param_count();
    let psi = run(circuit, params)?;
    let values = exec::map_indexed(d, |i| {
        derivative_state(circuit, params, i).and_then(|ds| psi.inner(&ds))
    })
    .into_iter()
    .map(|r| {
        r.map(|ip| {
            let a = Complex64::i() * ip;
            debug_assert!(a.im.abs() <= 1e-10, "Berry connection has Im {}", a.im);
            a.re
        })
    })
    .collect::<Result<Vec<_>, _>>()?;
    Ok(BerryConnection { values })
}

struct LayerBlock {
    layer: usize,
    start: usize,
    indices: Vec<usize>,
}

fn parametric_blocks(circuit: &Circuit) -> Result<Vec<LayerBlock>, GeometryError> {
    let mut blocks = Vec::new();
    for (idx, layer) in circuit.layers().iter().enumerate() {
        let indices = layer.param_indices();
        if indices.is_empty() {
            continue;
        }
        let min = *indices.iter().min().expect("nonempty");
        let max = *indices.iter().max().expect("nonempty");
        if max - min + 1 != indices.len() {
            return Err(GeometryError::NonContiguousBlock { layer: idx + 1 });
        }
        blocks.push(LayerBlock {
            layer: idx + 1,
            start: min,
            indices,
        });
    }
    Ok(blocks)
}

/// Covariance entries of one layer block from a single set of estimates.
fn assemble_block(
    gens_count: usize,
    estimates: &[f64],
    with_pairs: bool,
) -> DMatrix<f64> {
    let m = gens_count;
    let firsts = &estimates[..m];
    let mut block = DMatrix::zeros(m, m);
    for i in 0..m {
        block[(i, i)] = 0.25 * (1.0 - firsts[i] * firsts[i]);
    }
    if with_pairs {
        let mut k = m;
        for i in 0..m {
            for j in (i + 1)..m {
                let cov = 0.25 * (estimates[k] - firsts[i] * firsts[j]);
                block[(i, j)] = cov;
                block[(j, i)] = cov;
                k += 1;
            }
        }
    }
    block
}

fn metric_from_blocks(
    circuit: &Circuit,
    params: &[f64],
    budget: &ShotBudget,
    session: &EvalSession,
    with_pairs: bool,
) -> Result<(DMatrix<f64>, Vec<(usize, usize)>), GeometryError> {
    let d = circuit.param_count();
    let blocks = parametric_blocks(circuit)?;
    let base = session.reserve(blocks.len() as u64);

    let per_block = exec::map_indexed(blocks.len(), |k| -> Result<DMatrix<f64>, GeometryError> {
        let block = &blocks[k];
        let prefix = circuit.subcircuit_prefix(block.layer)?;
        let psi_l = run(&prefix, params)?;
        let gens = circuit.generators_for_layer(block.layer)?;
        let mut words: Vec<_> = gens.iter().map(|g| g.with_coefficient(1.0)).collect();
        if with_pairs {
            for i in 0..gens.len() {
                for j in (i + 1)..gens.len() {
                    words.push(words[i].product(&words[j])?);
                }
            }
        }
        let estimates = state::estimate_at(&psi_l, &words, budget, base + k as u64)?;
        Ok(assemble_block(gens.len(), &estimates, with_pairs))
    });

    let mut entries = DMatrix::zeros(d, d);
    let mut spans = Vec::with_capacity(blocks.len());
    for (block, sub) in blocks.iter().zip(per_block) {
        let sub = sub?;
        for (bi, &pi) in block.indices.iter().enumerate() {
            for (bj, &pj) in block.indices.iter().enumerate() {
                entries[(pi, pj)] = sub[(bi, bj)];
            }
        }
        spans.push((block.start, block.indices.len()));
    }
    // estimates land symmetrically already; keep the symmetrization explicit
    let entries = (&entries + entries.transpose()) * 0.5;
    Ok((entries, spans))
}

/// Block-diagonal metric approximation. One quantum evaluation per
/// parametric layer: all first and second generator moments of layer l are
/// estimated from the same measurement of the prefix state psi_l.
pub fn qgt_block_diagonal(
    circuit: &Circuit,
    params: &[f64],
    budget: &ShotBudget,
    session: &EvalSession,
) -> Result<MetricTensor, GeometryError> {
    let (entries, spans) = metric_from_blocks(circuit, params, budget, session, true)?;
    Ok(MetricTensor::new(entries, MetricMode::BlockDiagonal, spans))
}

/// Diagonal metric approximation g_ii = (1 - <P_i>^2)/4, still one quantum
/// evaluation per parametric layer.
pub fn qgt_diagonal(
    circuit: &Circuit,
    params: &[f64],
    budget: &ShotBudget,
    session: &EvalSession,
) -> Result<MetricTensor, GeometryError> {
    let (full, _) = metric_from_blocks(circuit, params, budget, session, false)?;
    let mut entries = DMatrix::zeros(full.nrows(), full.ncols());
    for i in 0..full.nrows() {
        entries[(i, i)] = full[(i, i)];
    }
    Ok(MetricTensor::new(entries, MetricMode::Diagonal, vec![]))
}

/// Classical Fisher information with log-derivatives from central finite
/// differences (h = 1e-6), keeping the family a black box.
pub fn fisher_information(
    family: &ProbFamily,
    params: &[f64],
) -> Result<MetricTensor, GeometryError> {
    const H: f64 = 1e-6;
    let p0 = family.evaluate(params)?;
    for (x, &p) in p0.iter().enumerate() {
        if p < 1e-12 {
            return Err(GeometryError::ProbabilityUnderflow { x, p });
        }
    }
    let d = family.param_count();
    let n = family.outcome_count();
    let mut dlog = vec![vec![0.0; n]; d];
    for i in 0..d {
        let mut plus = params.to_vec();
        plus[i] += H;
        let mut minus = params.to_vec();
        minus[i] -= H;
        let pp = family.evaluate(&plus)?;
        let pm = family.evaluate(&minus)?;
        for x in 0..n {
            if pp[x] < 1e-12 || pm[x] < 1e-12 {
                return Err(GeometryError::ProbabilityUnderflow {
                    x,
                    p: pp[x].min(pm[x]),
                });
            }
            dlog[i][x] = (pp[x].ln() - pm[x].ln()) / (2.0 * H);
        }
    }
    let mut entries = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v: f64 = (0..n).map(|x| p0[x] * dlog[i][x] * dlog[j][x]).sum();
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(MetricTensor::new(entries, MetricMode::Full, vec![]))
}

/// psi = sum_x sqrt(p(x)) |x> on the smallest register that fits.
pub fn amplitude_embed(family: &ProbFamily, params: &[f64]) -> Result<StateVector, GeometryError> {
    let p = family.evaluate(params)?;
    let n_qubits = p.len().next_power_of_two().trailing_zeros().max(1) as usize;
    if n_qubits > MAX_QUBITS {
        return Err(GeometryError::EmbeddingTooLarge {
            outcomes: p.len(),
            max: MAX_QUBITS,
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    for (x, &px) in p.iter().enumerate() {
        amps[x] = Complex64::new(px.sqrt(), 0.0);
    }
    let mut state = StateVector::from_amplitudes(n_qubits, amps)?;
    let norm = state.norm();
    state.scale(Complex64::new(1.0 / norm, 0.0));
    Ok(state)
}

/// Fubini-Study distance arccos |<a, b>| in [0, pi/2].
pub fn fubini_study_distance(a: &StateVector, b: &StateVector) -> Result<f64, GeometryError> {
    let overlap = a.inner(b)?;
    Ok(overlap.norm().clamp(0.0, 1.0).acos())
}

/// Fisher-Rao distance arccos <sqrt(p), sqrt(q)> on the simplex.
pub fn fisher_rao_distance(p: &[f64], q: &[f64]) -> Result<f64, GeometryError> {
    if p.len() != q.len() {
        return Err(GeometryError::LengthMismatch {
            a: p.len(),
            b: q.len(),
        });
    }
    let mut bc = 0.0;
    for (x, (&px, &qx)) in p.iter().zip(q.iter()).enumerate() {
        if px < 0.0 {
            return Err(GeometryError::NegativeProbability { x, p: px });
        }
        if qx < 0.0 {
            return Err(GeometryError::NegativeProbability { x, p: qx });
        }
        bc += (px * qx).sqrt();
    }
    Ok(bc.clamp(0.0, 1.0).acos())
}
