use std::sync::Arc;

use crate::histstate::{clock_qubit, HistoryState};
use crate::qcore::{check_cap, Circuit, CMatrix, PauliSum, StateVector, C64};
use crate::{Error, Result};

use super::ansatz::{append_w_gates, CartanAnsatz};
use super::cost::vhd_cost;

/// Prepares history states with `U(eps t) = W e^{-i D eps t} W^dag` from a
/// trained ansatz, so the clock-controlled block is `m n` controlled
/// single-qubit Z rotations instead of controlled Trotter circuits.
///
/// Time order of the circuit: clock Hadamards, `W^dag` on the system,
/// `diag(e^{-i theta}, e^{i theta})` on system qubit `q` controlled by clock
/// qubit `j` with `theta = beta_q 2^{j-1} eps`, then `W`. The trailing `W` is
/// a local unitary on the system, so entanglement-only runs drop it.
#[derive(Clone, Debug)]
pub struct DiagonalizedHistoryBuilder {
    ansatz: CartanAnsatz,
    loss: f64,
    entanglement_only: bool,
}

impl DiagonalizedHistoryBuilder {
    /// Refuses an ansatz whose cost against `h` exceeds `threshold`.
    pub fn new(h: &PauliSum, trained: CartanAnsatz, threshold: f64) -> Result<Self> {
        let loss = vhd_cost(h, &trained)?;
        if !(loss <= threshold) {
            return Err(Error::Refused { loss, threshold });
        }
        Ok(DiagonalizedHistoryBuilder { ansatz: trained, loss, entanglement_only: false })
    }

    pub fn entanglement_only(mut self, on: bool) -> Self {
        self.entanglement_only = on;
        self
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn ansatz(&self) -> &CartanAnsatz {
        &self.ansatz
    }

    /// Full circuit on `[clock m | system n]`.
    pub fn circuit(&self, m: usize, epsilon: f64) -> Result<Circuit> {
        let n = self.ansatz.n;
        if m == 0 {
            return Err(Error::Invalid("history state needs at least one clock qubit".into()));
        }
        let mut c = Circuit::new(m + n);
        for q in 0..m {
            c.h(q)?;
        }
        append_w_gates(&mut c, &self.ansatz, m, true)?;
        for j in 1..=m {
            let tau = epsilon * (1u64 << (j - 1)) as f64;
            for (q, &bq) in self.ansatz.beta.iter().enumerate() {
                c.push("CRz", &[clock_qubit(m, j)], &[m + q], Arc::new(z_rotation(bq * tau)))?;
            }
        }
        if !self.entanglement_only {
            append_w_gates(&mut c, &self.ansatz, m, false)?;
        }
        Ok(c)
    }

    pub fn build(&self, psi0: &StateVector, m: usize, epsilon: f64) -> Result<HistoryState> {
        let n = self.ansatz.n;
        if psi0.n_qubits() != n {
            return Err(Error::Dimension(format!("{}-qubit state for a {n}-qubit ansatz", psi0.n_qubits())));
        }
        check_cap("diagonalized history state", m + n)?;
        let circuit = self.circuit(m, epsilon)?;
        let mut state = StateVector::basis(m, 0)?.kron(psi0)?;
        circuit.run(&mut state)?;
        Ok(HistoryState { state, n, m, epsilon })
    }
}

/// `e^{-i theta Z}`.
fn z_rotation(theta: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::from_polar(1.0, -theta),
        C64::from_polar(1.0, theta),
    ]))
}
