//! Exact imaginary-time reference states via dense spectral decomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use qng_core::StateVector;

use crate::HarnessError;

const MAX_DIM: usize = 1 << 10;

/// Normalized states e^{-H tau} psi0 on a uniform tau grid.
#[derive(Debug, Clone)]
pub struct ImaginaryTimeReference {
    pub taus: Vec<f64>,
    pub states: Vec<StateVector>,
    pub dtau: f64,
}

impl ImaginaryTimeReference {
    /// Reference state at the grid point closest to `tau`.
    pub fn state_at(&self, tau: f64) -> &StateVector {
        let idx = (tau / self.dtau).round() as usize;
        &self.states[idx.min(self.states.len() - 1)]
    }
}

/// Spectrally decompose the Hermitian `h` and evolve `psi0` in imaginary
/// time over `0..=tau_max` with step `dtau`.
pub fn imaginary_time_reference(
    h: &DMatrix<Complex64>,
    psi0: &StateVector,
    tau_max: f64,
    dtau: f64,
) -> Result<ImaginaryTimeReference, HarnessError> {
    let dim = psi0.dim();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(HarnessError::Config(format!(
            "operator is {}x{}, state has dimension {dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    if dim > MAX_DIM {
        return Err(HarnessError::ReferenceTooLarge { max: MAX_DIM, got: dim });
    }
    if !(dtau > 0.0) || !(tau_max >= 0.0) {
        return Err(HarnessError::Config(
            "tau grid needs dtau > 0 and tau_max >= 0".into(),
        ));
    }
    let mut defect = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            defect = defect.max((h[(r, c)] - h[(c, r)].conj()).norm());
        }
    }
    if defect > 1e-10 {
        return Err(HarnessError::NonHermitian { defect });
    }

    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let psi = DVector::from_iterator(dim, psi0.amplitudes().iter().copied());
    let coeffs = eig.eigenvectors.adjoint() * &psi;

    let steps = (tau_max / dtau).round() as usize;
    let mut taus = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let tau = k as f64 * dtau;
        let damped = DVector::from_iterator(
            dim,
            (0..dim).map(|j| coeffs[j] * (-eig.eigenvalues[j] * tau).exp()),
        );
        let mut amps = eig.eigenvectors.clone() * damped;
        let norm = amps.norm();
        amps /= Complex64::new(norm, 0.0);
        taus.push(tau);
        states.push(StateVector::from_amplitudes(
            psi0.n_qubits(),
            amps.iter().copied().collect(),
        )?);
    }
    Ok(ImaginaryTimeReference {
        taus,
        states,
        dtau,
    })
}
