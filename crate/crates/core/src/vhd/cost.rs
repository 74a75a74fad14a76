use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::hamiltonians::{build_aubry_andre_spin, AubryAndreParams, Boundary};
use crate::qcore::{check_cap, CMatrix, PauliSum, C64};
use crate::{Error, Result};

use super::ansatz::{dense_w, diagonal_of, CartanAnsatz};
use super::majorana::{self, QuadraticModel};

/// Gradient of the cost over `(alpha, beta)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gradient {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Open-chain Aubry-Andre spin Hamiltonian without its identity part, the
/// form the XY/YX ansatz can diagonalize exactly.
pub fn vhd_target(n: usize, j: f64, lambda: f64) -> Result<PauliSum> {
    let p = AubryAndreParams::new(n, j, lambda, Boundary::Open);
    Ok(build_aubry_andre_spin(&p)?.traceless())
}

/// `W(alpha) D(beta) W(alpha)^dag` expanded in Pauli strings.
pub fn model_hamiltonian(a: &CartanAnsatz) -> PauliSum {
    majorana::model_hamiltonian(a)
}

/// Cost evaluator for one target and one ansatz shape.
pub(crate) enum Engine {
    Quadratic(QuadraticModel),
    Dense { h: CMatrix },
}

impl Engine {
    pub fn new(h: &PauliSum, a: &CartanAnsatz) -> Result<Self> {
        if h.n_qubits() != a.n {
            return Err(Error::Dimension(format!("{}-qubit target for a {}-qubit ansatz", h.n_qubits(), a.n)));
        }
        if a.beta.len() != a.n {
            return Err(Error::Dimension(format!("{} betas for {} qubits", a.beta.len(), a.n)));
        }
        if let Some(q) = QuadraticModel::new(h, a) {
            return Ok(Engine::Quadratic(q));
        }
        check_cap("vhd cost", a.n)?;
        Ok(Engine::Dense { h: h.to_matrix()? })
    }

    pub fn cost(&self, a: &CartanAnsatz, angles: &[f64]) -> Result<f64> {
        match self {
            Engine::Quadratic(q) => Ok(q.cost(angles, &a.beta)),
            Engine::Dense { h } => {
                let k = conjugate_dense(h, a, angles)?;
                Ok(dense_residual(&k, &diagonal_of(a.n, &a.beta)))
            }
        }
    }

    /// Analytic `dC/dbeta`.
    pub fn beta_grad(&self, a: &CartanAnsatz, angles: &[f64]) -> Result<Vec<f64>> {
        match self {
            Engine::Quadratic(q) => Ok(q.cost_grad(angles, &a.beta).d_beta),
            Engine::Dense { h } => {
                let k = conjugate_dense(h, a, angles)?;
                let d = diagonal_of(a.n, &a.beta);
                let dim = d.len() as f64;
                Ok((0..a.n)
                    .map(|q| {
                        let unit = diagonal_of(a.n, &unit_vec(a.n, q));
                        2.0 * (0..d.len()).map(|b| (d[b] - k[(b, b)].re) * unit[b]).sum::<f64>() / dim
                    })
                    .collect())
            }
        }
    }
}

fn unit_vec(n: usize, q: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[q] = 1.0;
    v
}

fn conjugate_dense(h: &CMatrix, a: &CartanAnsatz, angles: &[f64]) -> Result<CMatrix> {
    let w = dense_w(a, angles)?;
    Ok(w.adjoint() * h * w)
}

/// `||K - D||_F^2 / 2^n` for diagonal `D`.
fn dense_residual(k: &CMatrix, d: &[f64]) -> f64 {
    let mut k = k.clone();
    for (b, &db) in d.iter().enumerate() {
        k[(b, b)] -= C64::new(db, 0.0);
    }
    k.norm_squared() / d.len() as f64
}

/// `||H - W D W^dag||_HS^2 / 2^n`.
///
/// Quadratic targets use the Majorana route; anything else falls back to
/// dense matrices under the dense cap.
pub fn vhd_cost(h: &PauliSum, a: &CartanAnsatz) -> Result<f64> {
    Engine::new(h, a)?.cost(a, &a.gate_angles())
}

/// Direct-trace cost from dense `H`, `W` and `D`.
pub fn vhd_cost_dense(h: &PauliSum, a: &CartanAnsatz) -> Result<f64> {
    check_cap("vhd cost", a.n)?;
    if h.n_qubits() != a.n {
        return Err(Error::Dimension(format!("{}-qubit target for a {}-qubit ansatz", h.n_qubits(), a.n)));
    }
    let hm = h.to_matrix()?;
    let w = dense_w(a, &a.gate_angles())?;
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        1 << a.n,
        a.diagonal().into_iter().map(|x| C64::new(x, 0.0)),
    ));
    let diff = hm - &w * d * w.adjoint();
    Ok((diff.adjoint() * &diff).trace().re / (1u64 << a.n) as f64)
}

/// Parameter-shift gradient.
///
/// Each generator squares to the identity, so the cost is a sinusoid of
/// period `pi` in every gate angle and `C(t + pi/4) - C(t - pi/4)` is its
/// exact derivative. Tied angles sum the shifts of the gates they drive.
pub fn vhd_gradient(h: &PauliSum, a: &CartanAnsatz) -> Result<Gradient> {
    let engine = Engine::new(h, a)?;
    let angles = a.gate_angles();
    let mut alpha = vec![0.0; a.n_params()];
    let mut shifted = angles.clone();
    for k in 0..angles.len() {
        shifted[k] = angles[k] + FRAC_PI_4;
        let plus = engine.cost(a, &shifted)?;
        shifted[k] = angles[k] - FRAC_PI_4;
        let minus = engine.cost(a, &shifted)?;
        shifted[k] = angles[k];
        alpha[a.param_of_gate(k)] += plus - minus;
    }
    Ok(Gradient { alpha, beta: engine.beta_grad(a, &angles)? })
}

/// Same gradient by a single adjoint sweep; quadratic targets only.
pub fn vhd_gradient_adjoint(h: &PauliSum, a: &CartanAnsatz) -> Result<Gradient> {
    match Engine::new(h, a)? {
        Engine::Quadratic(q) => {
            let cg = q.cost_grad(&a.gate_angles(), &a.beta);
            Ok(Gradient { alpha: fold_gates(a, &cg.d_gates), beta: cg.d_beta })
        }
        Engine::Dense { .. } => Err(Error::Invalid("adjoint gradient needs a quadratic target".into())),
    }
}

pub(crate) fn fold_gates(a: &CartanAnsatz, d_gates: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.n_params()];
    for (k, g) in d_gates.iter().enumerate() {
        out[a.param_of_gate(k)] += g;
    }
    out
}

/// `W^dag H W` for the current angles.
pub fn rotated_hamiltonian(h: &PauliSum, a: &CartanAnsatz) -> Result<CMatrix> {
    check_cap("rotated hamiltonian", a.n)?;
    conjugate_dense(&h.to_matrix()?, a, &a.gate_angles())
}

/// Largest off-diagonal modulus of `W^dag H W`.
pub fn off_diagonal_max(h: &PauliSum, a: &CartanAnsatz) -> Result<f64> {
    let k = rotated_hamiltonian(h, a)?;
    let mut m: f64 = 0.0;
    for r in 0..k.nrows() {
        for c in 0..k.ncols() {
            if r != c {
                m = m.max(k[(r, c)].norm());
            }
        }
    }
    Ok(m)
}
