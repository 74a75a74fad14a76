//! Dense state-vector and density-matrix primitives shared by every layer.

mod circuit;
mod linalg;
mod pauli;
mod state;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex;

pub use circuit::{apply_controlled, apply_gate, Circuit, Gate, GateClass, GateCounts};
pub use linalg::{
    
    cluster_eigenvalues, hermitian_eig, max_abs, partial_trace, partial_trace_pure, propagator,
    purity, schmidt_spectrum, DenseOperator, Keep, Spectrum,
};
pub use pauli::{pauli_sum_to_matrix, Pauli, PauliString, PauliSum};
pub use state::{DensityMatrix, StateVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Default largest register (in qubits) that may be materialized densely.
pub const DEFAULT_DENSE_CAP: usize = 14;

static DENSE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_CAP);

/// Current dense qubit cap.
pub fn dense_cap() -> usize {
    DENSE_CAP.load(Ordering::Relaxed)
}

/// Overrides the dense qubit cap for the whole process.
pub fn set_dense_cap(qubits: usize) {
    DENSE_CAP.store(qubits, Ordering::Relaxed);
}

pub fn check_cap(what: &'static str, qubits: usize) -> crate::Result<()> {
    let cap = dense_cap();
    if qubits > cap {
        return Err(crate::Error::TooLarge { what, qubits, cap });
    }
    Ok(())
}

pub(crate) const ZERO: C64 = Complex::new(0.0, 0.0);
pub(crate) const ONE: C64 = Complex::new(1.0, 0.0);
pub(crate) const I: C64 = Complex::new(0.0, 1.0);

/// Tolerance used when validating normalization and hermiticity.
pub const VALIDATION_TOL: f64 = 1e-10;
