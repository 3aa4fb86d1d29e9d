//! Layered circuit representation.
//!
//! A circuit is an ordered list of layers, each a block of fixed gates
//! followed by commuting single-qubit Pauli rotations on pairwise-disjoint
//! qubits. `layerize` extracts that structure from a flat gate list by
//! scanning qubit dependencies.

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{PauliAxis, PauliWord};
use crate::seeding;

/// One gate in a flat circuit description.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// exp(-i θ/2 P) on one qubit, θ read from the global parameter vector.
    Rotation {
        axis: PauliAxis,
        qubit: usize,
        param_index: usize,
    },
    /// Controlled-Z (symmetric in its qubits).
    Cz { a: usize, b: usize },
    Hadamard { qubit: usize },
    /// R_y at a fixed, non-trainable angle.
    RyFixed { qubit: usize, angle: f64 },
    SDagger { qubit: usize },
    PauliX { qubit: usize },
    PauliY { qubit: usize },
    PauliZ { qubit: usize },
}

impl Gate {
    pub fn is_parametric(&self) -> bool {
        matches!(self, Gate::Rotation { .. })
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rotation { qubit, .. }
            | Gate::Hadamard { qubit }
            | Gate::RyFixed { qubit, .. }
            | Gate::SDagger { qubit }
            | Gate::PauliX { qubit }
            | Gate::PauliY { qubit }
            | Gate::PauliZ { qubit } => vec![*qubit],
            Gate::Cz { a, b } => vec![*a, *b],
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for {n_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("parameter index {0} used more than once")]
    DuplicateParamIndex(usize),
    #[error("parameter indices must be exactly 0..{expected}, found max {found_max}")]
    NonContiguousParams { expected: usize, found_max: usize },
    #[error("CZ requires two distinct qubits, got qubit {0} twice")]
    DegenerateCz(usize),
    #[error("layer index {l} out of range 1..={layers}")]
    LayerOutOfRange { l: usize, layers: usize },
    #[error("circuit needs at least {min} qubits, got {got}")]
    TooFewQubits { min: usize, got: usize },
    #[error("layer count must be at least 1")]
    NoLayers,
    #[error("unknown gate kind {0:?}")]
    UnknownGateKind(String),
    #[error("gate {kind:?} expects {expected} qubit(s), got {got}")]
    WrongArity {
        kind: String,
        expected: usize,
        got: usize,
    },
    #[error("gate {0:?} is missing a required field ({1})")]
    MissingField(String, &'static str),
}

/// W_l then V_l: fixed gates followed by commuting parametric rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    fixed: Vec<Gate>,
    parametric: Vec<Gate>,
}

impl Layer {
    pub fn fixed_gates(&self) -> &[Gate] {
        &self.fixed
    }

    pub fn parametric_gates(&self) -> &[Gate] {
        &self.parametric
    }

    /// Global parameter indices in this layer, in gate order.
    pub fn param_indices(&self) -> Vec<usize> {
        self.parametric
            .iter()
            .map(|g| match g {
                Gate::Rotation { param_index, .. } => *param_index,
                _ => unreachable!("parametric gates are rotations by construction"),
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.parametric.len()
    }
}

/// A layered circuit over `n_qubits` with `param_count` trainable angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    layers: Vec<Layer>,
    param_count: usize,
}

impl Circuit {
    /// Group a flat gate list into layers.
    ///
    /// Consecutive rotations on disjoint qubits share a layer; a fixed gate
    /// or a qubit collision closes the current layer. Fixed gates between
    /// parametric groups become the W of the following layer; trailing fixed
    /// gates form a final layer with no parametric part.
    pub fn layerize(gates: Vec<Gate>, n_qubits: usize) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::TooFewQubits { min: 1, got: 0 });
        }
        let mut seen_params = HashSet::new();
        for gate in &gates {
            for q in gate.qubits() {
                if q >= n_qubits {
                    return Err(CircuitError::QubitOutOfRange { qubit: q, n_qubits });
                }
            }
            if let Gate::Cz { a, b } = gate {
                if a == b {
                    return Err(CircuitError::DegenerateCz(*a));
                }
            }
            if let Gate::Rotation { param_index, .. } = gate {
                if !seen_params.insert(*param_index) {
                    return Err(CircuitError::DuplicateParamIndex(*param_index));
                }
            }
        }
        let param_count = seen_params.len();
        if let Some(&max) = seen_params.iter().max() {
            if max + 1 != param_count {
                return Err(CircuitError::NonContiguousParams {
                    expected: param_count,
                    found_max: max,
                });
            }
        }

        let mut layers = Vec::new();
        let mut fixed = Vec::new();
        let mut parametric: Vec<Gate> = Vec::new();
        let mut occupied = HashSet::new();
        for gate in gates {
            if let Gate::Rotation { qubit, .. } = gate {
                if !parametric.is_empty() && occupied.contains(&qubit) {
                    layers.push(Layer {
                        fixed: std::mem::take(&mut fixed),
                        parametric: std::mem::take(&mut parametric),
                    });
                    occupied.clear();
                }
                occupied.insert(qubit);
                parametric.push(gate);
            } else {
                if !parametric.is_empty() {
                    layers.push(Layer {
                        fixed: std::mem::take(&mut fixed),
                        parametric: std::mem::take(&mut parametric),
                    });
                    occupied.clear();
                }
                fixed.push(gate);
            }
        }
        if !fixed.is_empty() || !parametric.is_empty() {
            layers.push(Layer { fixed, parametric });
        }

        Ok(Self {
            n_qubits,
            layers,
            param_count,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Layers that actually carry parameters (trailing fixed-only layers
    /// do not require a metric measurement).
    pub fn parametric_layer_count(&self) -> usize {
        self.layers.iter().filter(|l| l.param_count() > 0).count()
    }

    /// One-based layer accessor.
    pub fn layer(&self, l: usize) -> Result<&Layer, CircuitError> {
        if l == 0 || l > self.layers.len() {
            return Err(CircuitError::LayerOutOfRange {
                l,
                layers: self.layers.len(),
            });
        }
        Ok(&self.layers[l - 1])
    }

    /// The circuit made of layers 1..=l, preparing the convenience state of
    /// layer l. Parameter indexing is inherited from the parent, so the same
    /// full parameter vector drives the prefix.
    pub fn subcircuit_prefix(&self, l: usize) -> Result<Self, CircuitError> {
        if l == 0 || l > self.layers.len() {
            return Err(CircuitError::LayerOutOfRange {
                l,
                layers: self.layers.len(),
            });
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            layers: self.layers[..l].to_vec(),
            param_count: self.param_count,
        })
    }

    /// Rotation generators K_i of layer l: half a single Pauli each, in the
    /// layer's parameter order.
    pub fn generators_for_layer(&self, l: usize) -> Result<Vec<PauliWord>, CircuitError> {
        let layer = self.layer(l)?;
        Ok(layer
            .parametric
            .iter()
            .map(|g| match g {
                Gate::Rotation { axis, qubit, .. } => PauliWord::single(0.5, *qubit, *axis),
                _ => unreachable!(),
            })
            .collect())
    }

    /// Layer holding parameter `i`, as (one-based layer index, axis, qubit).
    pub fn locate_param(&self, i: usize) -> Option<(usize, PauliAxis, usize)> {
        for (idx, layer) in self.layers.iter().enumerate() {
            for g in &layer.parametric {
                if let Gate::Rotation {
                    axis,
                    qubit,
                    param_index,
                } = g
                {
                    if *param_index == i {
                        return Some((idx + 1, *axis, *qubit));
                    }
                }
            }
        }
        None
    }

    /// Back to a flat gate list (fixed gates first within each layer).
    pub fn flatten(&self) -> Vec<Gate> {
        self.layers
            .iter()
            .flat_map(|l| l.fixed.iter().chain(l.parametric.iter()).cloned())
            .collect()
    }
}

/// The hardware-inspired benchmark ansatz: a wall of R_y(π/4), then `layers`
/// blocks of per-qubit Pauli rotations with axes drawn uniformly from
/// {X, Y, Z}, separated by open-chain CZ ladders. Observable is Z on qubits
/// 0 and 1.
pub fn build_benchmark_circuit(
    n_qubits: usize,
    layers: usize,
    seed: u64,
) -> Result<(Circuit, PauliWord), CircuitError> {
    if n_qubits < 2 {
        return Err(CircuitError::TooFewQubits {
            min: 2,
            got: n_qubits,
        });
    }
    if layers == 0 {
        return Err(CircuitError::NoLayers);
    }
    let mut rng = seeding::stream_rng(seed, seeding::AXIS_STREAM);
    let mut gates = Vec::new();
    for q in 0..n_qubits {
        gates.push(Gate::RyFixed {
            qubit: q,
            angle: FRAC_PI_4,
        });
    }
    let mut param = 0;
    for l in 0..layers {
        if l > 0 {
            for k in 0..n_qubits - 1 {
                gates.push(Gate::Cz { a: k, b: k + 1 });
            }
        }
        for q in 0..n_qubits {
            let axis = match seeding::next_choice(&mut rng, 3) {
                0 => PauliAxis::X,
                1 => PauliAxis::Y,
                _ => PauliAxis::Z,
            };
            gates.push(Gate::Rotation {
                axis,
                qubit: q,
                param_index: param,
            });
            param += 1;
        }
    }
    let circuit = Circuit::layerize(gates, n_qubits)?;
    let observable =
        PauliWord::from_factors(1.0, [(0, PauliAxis::Z), (1, PauliAxis::Z)]).expect("disjoint");
    Ok((circuit, observable))
}

/// Wire format for circuits, shared by the CLI and file-based tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub gates: Vec<GateSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: String,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

impl CircuitSpec {
    pub fn to_circuit(&self) -> Result<Circuit, CircuitError> {
        let gates = self
            .gates
            .iter()
            .map(|g| g.to_gate())
            .collect::<Result<Vec<_>, _>>()?;
        Circuit::layerize(gates, self.n_qubits)
    }

    pub fn from_circuit(circuit: &Circuit) -> Self {
        Self {
            n_qubits: circuit.n_qubits(),
            gates: circuit.flatten().iter().map(GateSpec::from_gate).collect(),
        }
    }
}

impl GateSpec {
    fn one_qubit(&self) -> Result<usize, CircuitError> {
        if self.qubits.len() != 1 {
            return Err(CircuitError::WrongArity {
                kind: self.kind.clone(),
                expected: 1,
                got: self.qubits.len(),
            });
        }
        Ok(self.qubits[0])
    }

    pub fn to_gate(&self) -> Result<Gate, CircuitError> {
        let rotation = |axis: PauliAxis, spec: &GateSpec| -> Result<Gate, CircuitError> {
            Ok(Gate::Rotation {
                axis,
                qubit: spec.one_qubit()?,
                param_index: spec
                    .param
                    .ok_or(CircuitError::MissingField(spec.kind.clone(), "param"))?,
            })
        };
        match self.kind.as_str() {
            "rx" => rotation(PauliAxis::X, self),
            "ry" => rotation(PauliAxis::Y, self),
            "rz" => rotation(PauliAxis::Z, self),
            "cz" => {
                if self.qubits.len() != 2 {
                    return Err(CircuitError::WrongArity {
                        kind: self.kind.clone(),
                        expected: 2,
                        got: self.qubits.len(),
                    });
                }
                Ok(Gate::Cz {
                    a: self.qubits[0],
                    b: self.qubits[1],
                })
            }
            "h" => Ok(Gate::Hadamard {
                qubit: self.one_qubit()?,
            }),
            "ry_fixed" => Ok(Gate::RyFixed {
                qubit: self.one_qubit()?,
                angle: self
                    .angle
                    .ok_or(CircuitError::MissingField(self.kind.clone(), "angle"))?,
            }),
            "sdg" => Ok(Gate::SDagger {
                qubit: self.one_qubit()?,
            }),
            "x" => Ok(Gate::PauliX {
                qubit: self.one_qubit()?,
            }),
            "y" => Ok(Gate::PauliY {
                qubit: self.one_qubit()?,
            }),
            "z" => Ok(Gate::PauliZ {
                qubit: self.one_qubit()?,
            }),
            other => Err(CircuitError::UnknownGateKind(other.to_string())),
        }
    }

    pub fn from_gate(gate: &Gate) -> Self {
        let (kind, qubits, param, angle) = match gate {
            Gate::Rotation {
                axis,
                qubit,
                param_index,
            } => {
                let kind = match axis {
                    PauliAxis::X => "rx",
                    PauliAxis::Y => "ry",
                    PauliAxis::Z => "rz",
                };
                (kind, vec![*qubit], Some(*param_index), None)
            }
            Gate::Cz { a, b } => ("cz", vec![*a, *b], None, None),
            Gate::Hadamard { qubit } => ("h", vec![*qubit], None, None),
            Gate::RyFixed { qubit, angle } => ("ry_fixed", vec![*qubit], None, Some(*angle)),
            Gate::SDagger { qubit } => ("sdg", vec![*qubit], None, None),
            Gate::PauliX { qubit } => ("x", vec![*qubit], None, None),
            Gate::PauliY { qubit } => ("y", vec![*qubit], None, None),
            Gate::PauliZ { qubit } => ("z", vec![*qubit], None, None),
        };
        Self {
            kind: kind.to_string(),
            qubits,
            param,
            angle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ry(qubit: usize, param_index: usize) -> Gate {
        Gate::Rotation {
            axis: PauliAxis::Y,
            qubit,
            param_index,
        }
    }

    fn rx(qubit: usize, param_index: usize) -> Gate {
        Gate::Rotation {
            axis: PauliAxis::X,
            qubit,
            param_index,
        }
    }

    #[test]
    fn disjoint_rotations_share_a_layer() {
        let c = Circuit::layerize(vec![ry(0, 0), ry(1, 1)], 2).unwrap();
        assert_eq!(c.layer_count(), 1);
        assert_eq!(c.layers()[0].param_count(), 2);
        assert_eq!(c.param_count(), 2);
    }

    #[test]
    fn same_qubit_dependency_forces_split() {
        let c = Circuit::layerize(vec![ry(0, 0), rx(0, 1)], 1).unwrap();
        assert_eq!(c.layer_count(), 2);
        assert_eq!(c.layers()[0].param_count(), 1);
        assert_eq!(c.layers()[1].param_count(), 1);
    }

    #[test]
    fn benchmark_has_expected_shape() {
        let (c, obs) = build_benchmark_circuit(9, 5, 42).unwrap();
        assert_eq!(c.layer_count(), 5);
        assert_eq!(c.param_count(), 45);
        for layer in c.layers() {
            assert_eq!(layer.param_count(), 9);
        }
        // first layer carries the R_y(pi/4) wall, later layers the CZ ladders
        assert_eq!(c.layers()[0].fixed_gates().len(), 9);
        assert_eq!(c.layers()[1].fixed_gates().len(), 8);
        assert_eq!(obs.weight(), 2);
        assert_eq!(obs.axis_on(0), Some(PauliAxis::Z));
        assert_eq!(obs.axis_on(1), Some(PauliAxis::Z));
    }

    #[test]
    fn benchmark_param_count_scales_as_n_times_l() {
        let (c, _) = build_benchmark_circuit(9, 6, 1).unwrap();
        assert_eq!(c.param_count(), 54);
        for (n, l) in [(2, 1), (3, 4), (7, 5)] {
            let (c, _) = build_benchmark_circuit(n, l, 7).unwrap();
            assert_eq!(c.param_count(), n * l);
        }
    }

    #[test]
    fn benchmark_is_deterministic_in_the_seed() {
        let (a, _) = build_benchmark_circuit(7, 5, 11).unwrap();
        let (b, _) = build_benchmark_circuit(7, 5, 11).unwrap();
        let (c, _) = build_benchmark_circuit(7, 5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn benchmark_rejects_small_registers() {
        assert!(matches!(
            build_benchmark_circuit(1, 5, 0),
            Err(CircuitError::TooFewQubits { .. })
        ));
        assert!(matches!(
            build_benchmark_circuit(3, 0, 0),
            Err(CircuitError::NoLayers)
        ));
    }

    #[test]
    fn duplicate_param_index_rejected() {
        let err = Circuit::layerize(vec![ry(0, 0), ry(1, 0)], 2).unwrap_err();
        assert_eq!(err, CircuitError::DuplicateParamIndex(0));
    }

    #[test]
    fn out_of_range_qubit_rejected() {
        let err = Circuit::layerize(vec![ry(3, 0)], 2).unwrap_err();
        assert_eq!(
            err,
            CircuitError::QubitOutOfRange {
                qubit: 3,
                n_qubits: 2
            }
        );
    }

    #[test]
    fn non_contiguous_params_rejected() {
        let err = Circuit::layerize(vec![ry(0, 0), ry(1, 2)], 2).unwrap_err();
        assert!(matches!(err, CircuitError::NonContiguousParams { .. }));
    }

    #[test]
    fn trailing_fixed_gates_form_final_layer() {
        let c = Circuit::layerize(vec![ry(0, 0), Gate::Cz { a: 0, b: 1 }], 2).unwrap();
        assert_eq!(c.layer_count(), 2);
        assert_eq!(c.layers()[1].param_count(), 0);
        assert_eq!(c.layers()[1].fixed_gates().len(), 1);
        assert_eq!(c.parametric_layer_count(), 1);
    }

    #[test]
    fn prefix_of_full_circuit_is_identity() {
        let (c, _) = build_benchmark_circuit(4, 3, 5).unwrap();
        assert_eq!(c.subcircuit_prefix(c.layer_count()).unwrap(), c);
    }

    #[test]
    fn prefix_of_prefix_matches_shorter_prefix() {
        let (c, _) = build_benchmark_circuit(7, 5, 3).unwrap();
        for l2 in 1..=5 {
            let p2 = c.subcircuit_prefix(l2).unwrap();
            for l1 in 1..=l2 {
                assert_eq!(
                    p2.subcircuit_prefix(l1).unwrap().layers(),
                    c.subcircuit_prefix(l1).unwrap().layers()
                );
            }
        }
    }

    #[test]
    fn prefix_rejects_out_of_range() {
        let (c, _) = build_benchmark_circuit(3, 2, 0).unwrap();
        assert!(c.subcircuit_prefix(0).is_err());
        assert!(c.subcircuit_prefix(3).is_err());
    }

    #[test]
    fn generators_are_half_paulis_in_layer_order() {
        let c = Circuit::layerize(vec![ry(0, 0), ry(1, 1)], 2).unwrap();
        let gens = c.generators_for_layer(1).unwrap();
        assert_eq!(gens.len(), 2);
        for (g, q) in gens.iter().zip([0usize, 1]) {
            assert_eq!(g.coefficient(), 0.5);
            assert_eq!(g.axis_on(q), Some(PauliAxis::Y));
            assert_eq!(g.weight(), 1);
        }
    }

    #[test]
    fn generator_padding_leaves_other_qubits_identity() {
        let c = Circuit::layerize(vec![rx(2, 0)], 4).unwrap();
        let gens = c.generators_for_layer(1).unwrap();
        assert_eq!(gens.len(), 1);
        assert_eq!(gens[0].axis_on(2), Some(PauliAxis::X));
        for q in [0, 1, 3] {
            assert_eq!(gens[0].axis_on(q), None);
        }
    }

    #[test]
    fn layerize_is_idempotent_on_flattened_output() {
        let (c, _) = build_benchmark_circuit(5, 4, 9).unwrap();
        let again = Circuit::layerize(c.flatten(), c.n_qubits()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn json_spec_round_trips() {
        let (c, _) = build_benchmark_circuit(3, 2, 17).unwrap();
        let spec = CircuitSpec::from_circuit(&c);
        let text = serde_json::to_string(&spec).unwrap();
        let parsed: CircuitSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.to_circuit().unwrap(), c);
    }

    #[test]
    fn json_spec_rejects_malformed_gates() {
        let missing_param: CircuitSpec = serde_json::from_str(
            r#"{"n_qubits": 1, "gates": [{"kind": "ry", "qubits": [0]}]}"#,
        )
        .unwrap();
        assert!(matches!(
            missing_param.to_circuit(),
            Err(CircuitError::MissingField(_, "param"))
        ));
        let unknown: CircuitSpec = serde_json::from_str(
            r#"{"n_qubits": 1, "gates": [{"kind": "toffoli", "qubits": [0]}]}"#,
        )
        .unwrap();
        assert!(matches!(
            unknown.to_circuit(),
            Err(CircuitError::UnknownGateKind(_))
        ));
    }
}
