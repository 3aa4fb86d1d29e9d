//! Pauli words: tensor products of single-qubit Pauli operators with a real
//! coefficient. Rotation generators and measurement observables both live here.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Single-qubit Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    /// The 2x2 matrix of this Pauli operator.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliAxis::X => [[zero, one], [one, zero]],
            PauliAxis::Y => [[zero, -i], [i, zero]],
            PauliAxis::Z => [[one, zero], [zero, -one]],
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PauliAxis::X => write!(f, "X"),
            PauliAxis::Y => write!(f, "Y"),
            PauliAxis::Z => write!(f, "Z"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PauliError {
    #[error("qubit {qubit} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("conflicting Pauli factors on qubit {qubit}")]
    ConflictingFactors { qubit: usize },
    #[error("coefficient must be finite, got {0}")]
    NonFiniteCoefficient(f64),
}

/// A real multiple of a tensor product of single-qubit Paulis.
///
/// Qubits absent from `factors` carry the identity. The empty word is a
/// multiple of the identity operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliWord {
    coefficient: f64,
    factors: BTreeMap<usize, PauliAxis>,
}

impl PauliWord {
    /// A multiple of the identity.
    pub fn identity(coefficient: f64) -> Self {
        Self {
            coefficient,
            factors: BTreeMap::new(),
        }
    }

    /// A single Pauli on one qubit, identity elsewhere.
    pub fn single(coefficient: f64, qubit: usize, axis: PauliAxis) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(qubit, axis);
        Self {
            coefficient,
            factors,
        }
    }

    /// Build a word from (qubit, axis) pairs. Duplicate qubits are rejected.
    pub fn from_factors(
        coefficient: f64,
        pairs: impl IntoIterator<Item = (usize, PauliAxis)>,
    ) -> Result<Self, PauliError> {
        if !coefficient.is_finite() {
            return Err(PauliError::NonFiniteCoefficient(coefficient));
        }
        let mut factors = BTreeMap::new();
        for (qubit, axis) in pairs {
            if factors.insert(qubit, axis).is_some() {
                return Err(PauliError::ConflictingFactors { qubit });
            }
        }
        Ok(Self {
            coefficient,
            factors,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Same word with a different coefficient.
    pub fn with_coefficient(&self, coefficient: f64) -> Self {
        Self {
            coefficient,
            factors: self.factors.clone(),
        }
    }

    /// Qubit -> axis factors, sorted by qubit.
    pub fn factors(&self) -> impl Iterator<Item = (usize, PauliAxis)> + '_ {
        self.factors.iter().map(|(&q, &a)| (q, a))
    }

    pub fn axis_on(&self, qubit: usize) -> Option<PauliAxis> {
        self.factors.get(&qubit).copied()
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    /// Largest qubit index touched, if any.
    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    /// Product of two words whose supports are disjoint or carry the same
    /// axis on shared qubits (P^2 = 1 cancels). Different axes on a shared
    /// qubit would need an imaginary coefficient and are rejected.
    pub fn product(&self, other: &Self) -> Result<Self, PauliError> {
        let mut factors = self.factors.clone();
        for (&qubit, &axis) in &other.factors {
            match factors.get(&qubit) {
                None => {
                    factors.insert(qubit, axis);
                }
                Some(&existing) if existing == axis => {
                    factors.remove(&qubit);
                }
                Some(_) => return Err(PauliError::ConflictingFactors { qubit }),
            }
        }
        Ok(Self {
            coefficient: self.coefficient * other.coefficient,
            factors,
        })
    }

    /// Bit masks describing the action on computational basis states:
    /// `P |x> = i^{n_y} (-1)^{popcount(x & phase_mask)} |x ^ flip_mask>`.
    pub fn basis_action(&self) -> BasisAction {
        let mut flip_mask = 0usize;
        let mut phase_mask = 0usize;
        let mut n_y = 0u32;
        for (&qubit, &axis) in &self.factors {
            let bit = 1usize << qubit;
            match axis {
                PauliAxis::X => flip_mask |= bit,
                PauliAxis::Y => {
                    flip_mask |= bit;
                    phase_mask |= bit;
                    n_y += 1;
                }
                PauliAxis::Z => phase_mask |= bit,
            }
        }
        BasisAction {
            flip_mask,
            phase_mask,
            n_y,
        }
    }

    /// Dense matrix of the word on an `n_qubits` register.
    pub fn to_dense(&self, n_qubits: usize) -> Result<DMatrix<Complex64>, PauliError> {
        if let Some(q) = self.max_qubit() {
            if q >= n_qubits {
                return Err(PauliError::QubitOutOfRange { qubit: q, n_qubits });
            }
        }
        let dim = 1usize << n_qubits;
        let action = self.basis_action();
        let i_pow = Complex64::i().powu(action.n_y);
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            let sign = if (x & action.phase_mask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[(x ^ action.flip_mask, x)] = i_pow * self.coefficient * sign;
        }
        Ok(m)
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        if self.factors.is_empty() {
            return write!(f, "*I");
        }
        for (q, a) in self.factors() {
            write!(f, "*{a}{q}")?;
        }
        Ok(())
    }
}

/// Action of a word on basis states, as bit masks.
#[derive(Debug, Clone, Copy)]
pub struct BasisAction {
    pub flip_mask: usize,
    pub phase_mask: usize,
    pub n_y: u32,
}

/// Per-qubit measurement basis shared by a set of words.
///
/// Succeeds iff every qubit carries at most one distinct axis across all
/// words, which makes the set diagonal in a tensor product of single-qubit
/// rotated bases.
pub fn product_basis(
    words: &[PauliWord],
    n_qubits: usize,
) -> Result<Vec<Option<PauliAxis>>, PauliError> {
    let mut basis: Vec<Option<PauliAxis>> = vec![None; n_qubits];
    for word in words {
        for (qubit, axis) in word.factors() {
            if qubit >= n_qubits {
                return Err(PauliError::QubitOutOfRange { qubit, n_qubits });
            }
            match basis[qubit] {
                None => basis[qubit] = Some(axis),
                Some(existing) if existing == axis => {}
                Some(_) => return Err(PauliError::ConflictingFactors { qubit }),
            }
        }
    }
    Ok(basis)
}

/// Dense matrix of a sum of words.
pub fn sum_to_dense(words: &[PauliWord], n_qubits: usize) -> Result<DMatrix<Complex64>, PauliError> {
    let dim = 1usize << n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for w in words {
        m += w.to_dense(n_qubits)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_paulis_match_matrices() {
        for (axis, expected) in [
            (PauliAxis::X, [[0.0, 1.0], [1.0, 0.0]]),
            (PauliAxis::Z, [[1.0, 0.0], [0.0, -1.0]]),
        ] {
            let m = PauliWord::single(1.0, 0, axis).to_dense(1).unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    assert_eq!(m[(r, c)], Complex64::new(expected[r][c], 0.0));
                }
            }
        }
        let y = PauliWord::single(1.0, 0, PauliAxis::Y).to_dense(1).unwrap();
        assert_eq!(y[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn product_on_disjoint_supports_concatenates() {
        let a = PauliWord::single(0.5, 0, PauliAxis::Y);
        let b = PauliWord::single(0.5, 2, PauliAxis::X);
        let p = a.product(&b).unwrap();
        assert_eq!(p.coefficient(), 0.25);
        assert_eq!(p.axis_on(0), Some(PauliAxis::Y));
        assert_eq!(p.axis_on(2), Some(PauliAxis::X));
        assert_eq!(p.axis_on(1), None);
    }

    #[test]
    fn product_same_axis_cancels() {
        let a = PauliWord::single(2.0, 1, PauliAxis::Z);
        let p = a.product(&a).unwrap();
        assert_eq!(p.weight(), 0);
        assert_eq!(p.coefficient(), 4.0);
    }

    #[test]
    fn product_conflicting_axes_rejected() {
        let a = PauliWord::single(1.0, 0, PauliAxis::X);
        let b = PauliWord::single(1.0, 0, PauliAxis::Z);
        assert_eq!(
            a.product(&b).unwrap_err(),
            PauliError::ConflictingFactors { qubit: 0 }
        );
    }

    #[test]
    fn product_basis_merges_and_rejects() {
        let words = vec![
            PauliWord::single(1.0, 0, PauliAxis::Y),
            PauliWord::single(1.0, 1, PauliAxis::Z),
            PauliWord::from_factors(1.0, [(0, PauliAxis::Y), (1, PauliAxis::Z)]).unwrap(),
        ];
        let basis = product_basis(&words, 3).unwrap();
        assert_eq!(basis, vec![Some(PauliAxis::Y), Some(PauliAxis::Z), None]);

        let clash = vec![
            PauliWord::single(1.0, 0, PauliAxis::X),
            PauliWord::single(1.0, 0, PauliAxis::Y),
        ];
        assert!(product_basis(&clash, 1).is_err());
    }

    #[test]
    fn dense_zz_is_diagonal_with_parity_signs() {
        let zz = PauliWord::from_factors(1.0, [(0, PauliAxis::Z), (1, PauliAxis::Z)]).unwrap();
        let m = zz.to_dense(2).unwrap();
        let diag: Vec<f64> = (0..4).map(|x| m[(x, x)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }
}
