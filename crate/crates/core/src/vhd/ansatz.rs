use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::qcore::{check_cap, CMatrix, Circuit, PauliString, StateVector, C64};
use crate::{Error, Result};

/// Which two-qubit generator a gate carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// `X_j Y_{j+1}`
    Xy,
    /// `Y_j X_{j+1}`
    Yx,
}

/// Brickwork ansatz `W(alpha) = prod_l [prod_j e^{i a XY_j}] [prod_j e^{i a YX_j}]`
/// together with the diagonal model `D(beta) = sum_q beta_q Z_q`.
///
/// Gate `k` sits in layer `k / (2(n-1))`; within a layer the `n-1` XY gates
/// come first, then the `n-1` YX gates. Each sweep is one brick of two
/// columns: bonds `0, 2, 4, ...` then bonds `1, 3, ...`.
/// The untied variant gives every gate its own angle. The tied variant
/// shares one angle between the XY and YX gate on the same bond and layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanAnsatz {
    pub n: usize,
    pub layers: usize,
    pub tied: bool,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl CartanAnsatz {
    /// Untied ansatz with all parameters zero.
    pub fn new(n: usize, layers: usize) -> Result<Self> {
        Self::with_tying(n, layers, false)
    }

    pub fn with_tying(n: usize, layers: usize, tied: bool) -> Result<Self> {
        if !(2..=64).contains(&n) {
            return Err(Error::Invalid(format!("ansatz needs 2..=64 qubits, got {n}")));
        }
        if layers == 0 {
            return Err(Error::Invalid("ansatz needs at least one layer".into()));
        }
        let per_layer = if tied { n - 1 } else { 2 * (n - 1) };
        Ok(CartanAnsatz { n, layers, tied, alpha: vec![0.0; per_layer * layers], beta: vec![0.0; n] })
    }

    /// Replaces the parameters, checking their counts.
    pub fn with_params(mut self, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != self.alpha.len() || beta.len() != self.n {
            return Err(Error::Dimension(format!(
                "expected {} angles and {} betas, got {} and {}",
                self.alpha.len(),
                self.n,
                alpha.len(),
                beta.len()
            )));
        }
        self.alpha = alpha;
        self.beta = beta;
        Ok(self)
    }

    pub fn n_gates(&self) -> usize {
        2 * (self.n - 1) * self.layers
    }

    pub fn n_params(&self) -> usize {
        self.alpha.len()
    }

    /// `(flavor, bond j)` of gate `k`; the gate acts on qubits `j, j+1`.
    pub fn gate_site(&self, k: usize) -> (Flavor, usize) {
        let r = k % (2 * (self.n - 1));
        if r < self.n - 1 {
            (Flavor::Xy, brick_bond(self.n, r))
        } else {
            (Flavor::Yx, brick_bond(self.n, r - (self.n - 1)))
        }
    }

    /// Index into `alpha` driving gate `k`.
    pub fn param_of_gate(&self, k: usize) -> usize {
        if self.tied {
            let l = k / (2 * (self.n - 1));
            l * (self.n - 1) + k % (self.n - 1)
        } else {
            k
        }
    }

    /// Unit-coefficient generator of gate `k` on the full register.
    pub fn generator(&self, k: usize) -> PauliString {
        let (flavor, j) = self.gate_site(k);
        let (a, b) = flavor_letters(flavor);
        PauliString::on(self.n, 1.0, &[(j, a), (j + 1, b)]).expect("sites in range")
    }

    /// Rotation angle of every gate, in product order.
    pub fn gate_angles(&self) -> Vec<f64> {
        (0..self.n_gates()).map(|k| self.alpha[self.param_of_gate(k)]).collect()
    }

    /// Diagonal of `D(beta)` in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        diagonal_of(self.n, &self.beta)
    }
}

/// Bond at position `p` of a brickwork sweep: even bonds, then odd bonds.
fn brick_bond(n: usize, p: usize) -> usize {
    let evens = n / 2;
    if p < evens {
        2 * p
    } else {
        2 * (p - evens) + 1
    }
}

fn flavor_letters(f: Flavor) -> (crate::qcore::Pauli, crate::qcore::Pauli) {
    use crate::qcore::Pauli::{X, Y};
    match f {
        Flavor::Xy => (X, Y),
        Flavor::Yx => (Y, X),
    }
}

pub(crate) fn diagonal_of(n: usize, beta: &[f64]) -> Vec<f64> {
    (0..1usize << n)
        .map(|b| {
            beta.iter()
                .enumerate()
                .map(|(q, &bq)| if (b >> (n - 1 - q)) & 1 == 0 { bq } else { -bq })
                .sum()
        })
        .collect()
}

/// Dense `W` for explicit per-gate angles.
pub(crate) fn dense_w(a: &CartanAnsatz, angles: &[f64]) -> Result<CMatrix> {
    check_cap("ansatz unitary", a.n)?;
    let dim = 1usize << a.n;
    let mut w = CMatrix::identity(dim, dim);
    let mut wb = CMatrix::zeros(dim, dim);
    for (k, &theta) in angles.iter().enumerate() {
        let g = a.generator(k);
        let x = g.x_mask() as usize;
        // (W B)[:, c] = phase(c) W[:, c ^ x]
        for c in 0..dim {
            let ph = g.phase_on(c);
            for r in 0..dim {
                wb[(r, c)] = ph * w[(r, c ^ x)];
            }
        }
        let (s, co) = theta.sin_cos();
        w = w * C64::new(co, 0.0) + &wb * C64::new(0.0, s);
    }
    Ok(w)
}

/// Dense `W(alpha)`.
pub fn apply_ansatz_w(a: &CartanAnsatz) -> Result<CMatrix> {
    dense_w(a, &a.gate_angles())
}

fn apply_rotation(g: &PauliString, theta: f64, amps: &[C64]) -> Vec<C64> {
    let (s, c) = theta.sin_cos();
    let mut out: Vec<C64> = amps.iter().map(|v| v * c).collect();
    let x = g.x_mask() as usize;
    let is = C64::new(0.0, s);
    for (b, v) in amps.iter().enumerate() {
        out[b ^ x] += is * g.phase_on(b) * v;
    }
    out
}

/// `W |psi>` without forming `W`.
pub fn apply_ansatz_to_state(a: &CartanAnsatz, psi: &StateVector) -> Result<StateVector> {
    if psi.n_qubits() != a.n {
        return Err(Error::Dimension(format!("{}-qubit state for a {}-qubit ansatz", psi.n_qubits(), a.n)));
    }
    let angles = a.gate_angles();
    let mut amps = psi.as_slice().to_vec();
    for k in (0..angles.len()).rev() {
        amps = apply_rotation(&a.generator(k), angles[k], &amps);
    }
    StateVector::normalized(amps)
}

/// Two-qubit unitary `e^{i theta P}` on the pair a gate acts on.
pub(crate) fn local_gate(flavor: Flavor, theta: f64) -> CMatrix {
    let word = match flavor {
        Flavor::Xy => "XY",
        Flavor::Yx => "YX",
    };
    let p = PauliString::parse(1.0, word).expect("static word").to_matrix().expect("two qubits");
    let (s, c) = theta.sin_cos();
    CMatrix::identity(4, 4) * C64::new(c, 0.0) + p * C64::new(0.0, s)
}

/// Appends `W` (`dagger = false`) or `W^dagger` as two-qubit gates on the
/// system block starting at register index `offset`.
pub fn append_w_gates(circuit: &mut Circuit, a: &CartanAnsatz, offset: usize, dagger: bool) -> Result<()> {
    let angles = a.gate_angles();
    let order: Vec<usize> = if dagger {
        (0..angles.len()).collect()
    } else {
        (0..angles.len()).rev().collect()
    };
    for k in order {
        let (flavor, j) = a.gate_site(k);
        let theta = if dagger { -angles[k] } else { angles[k] };
        let name = match (flavor, dagger) {
            (Flavor::Xy, false) => "W:XY",
            (Flavor::Yx, false) => "W:YX",
            (Flavor::Xy, true) => "Wdg:XY",
            (Flavor::Yx, true) => "Wdg:YX",
        };
        circuit.push(name, &[], &[offset + j, offset + j + 1], Arc::new(local_gate(flavor, theta)))?;
    }
    Ok(())
}
