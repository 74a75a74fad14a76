//! Quadratic-Majorana evaluation of the diagonalization cost.
//!
//! With `g_{2j} = Z_{<j} X_j` and `g_{2j+1} = Z_{<j} Y_j`, every XY/YX
//! generator, every `Z_j` and every nearest-neighbour `XX`/`YY` is
//! `s * i g_a g_b` with `s = +-1`. An operator `(i/4) sum h_ab g_a g_b` is
//! stored as the real antisymmetric `2n x 2n` matrix `h`, and a gate
//! `e^{i theta s i g_a g_b}` conjugates it by a plane rotation of angle
//! `2 s theta`. The cost then needs only `2n x 2n` arithmetic.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::qcore::{PauliString, PauliSum, C64};

use super::ansatz::CartanAnsatz;

/// `(a, b, s)` with `a < b` and `P = s * i g_a g_b`.
pub(crate) type Plane = (usize, usize, f64);

fn majorana(n: usize, k: usize) -> PauliString {
    use crate::qcore::Pauli;
    let j = k / 2;
    let mut sites: Vec<(usize, Pauli)> = (0..j).map(|q| (q, Pauli::Z)).collect();
    sites.push((j, if k % 2 == 0 { Pauli::X } else { Pauli::Y }));
    PauliString::on(n, 1.0, &sites).expect("sites in range")
}

/// Map from Pauli keys to Majorana planes for all quadratic strings.
pub(crate) fn plane_table(n: usize) -> HashMap<(u64, u64), Plane> {
    let gs: Vec<PauliString> = (0..2 * n).map(|k| majorana(n, k)).collect();
    let mut table = HashMap::with_capacity(n * (2 * n - 1));
    for a in 0..2 * n {
        for b in a + 1..2 * n {
            let p = gs[a].mul(&gs[b]).expect("same register");
            // i g_a g_b = (i * phase) P with i * phase = +-1
            let s = (C64::new(0.0, 1.0) * p.coeff).re;
            table.insert(p.key(), (a, b, s));
        }
    }
    table
}

/// Target `H` in Majorana form plus the identity part it cannot carry.
#[derive(Clone, Debug)]
pub(crate) struct QuadraticModel {
    n: usize,
    h: DMatrix<f64>,
    identity_sq: f64,
    gates: Vec<Plane>,
    z_planes: Vec<Plane>,
}

/// Cost plus per-gate and per-qubit derivatives.
pub(crate) struct CostGrad {
    pub cost: f64,
    pub d_gates: Vec<f64>,
    pub d_beta: Vec<f64>,
}

impl QuadraticModel {
    /// `None` when some term of `h` is not quadratic or has a complex weight.
    pub fn new(h: &PauliSum, a: &CartanAnsatz) -> Option<Self> {
        let n = a.n;
        if h.n_qubits() != n {
            return None;
        }
        let table = plane_table(n);
        let mut hm = DMatrix::zeros(2 * n, 2 * n);
        let mut identity = 0.0;
        for t in h.terms() {
            if t.coeff.im.abs() > 1e-14 {
                return None;
            }
            let c = t.coeff.re;
            if t.is_identity() {
                identity += c;
                continue;
            }
            let &(i, j, s) = table.get(&t.key())?;
            hm[(i, j)] += 2.0 * c * s;
            hm[(j, i)] -= 2.0 * c * s;
        }
        let gates = (0..a.n_gates()).map(|k| table[&a.generator(k).key()]).collect();
        let z_planes = (0..n)
            .map(|q| {
                let z = PauliString::on(n, 1.0, &[(q, crate::qcore::Pauli::Z)]).expect("in range");
                table[&z.key()]
            })
            .collect();
        Some(QuadraticModel { n, h: hm, identity_sq: identity * identity, gates, z_planes })
    }

    fn h_diag(&self, beta: &[f64]) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(2 * self.n, 2 * self.n);
        for (&(a, b, s), &bq) in self.z_planes.iter().zip(beta) {
            d[(a, b)] = 2.0 * bq * s;
            d[(b, a)] = -2.0 * bq * s;
        }
        d
    }

    /// `R = O_0 O_1 ... O_{P-1}` with `W^dag g_a W = sum_b R_ab g_b`.
    fn rotation(&self, angles: &[f64]) -> DMatrix<f64> {
        let mut r = DMatrix::identity(2 * self.n, 2 * self.n);
        for (&(a, b, s), &theta) in self.gates.iter().zip(angles) {
            rotate_cols(&mut r, a, b, 2.0 * s * theta);
        }
        r
    }

    /// `h` of `W^dag H W`.
    pub fn conjugated(&self, angles: &[f64]) -> DMatrix<f64> {
        let r = self.rotation(angles);
        r.transpose() * &self.h * r
    }

    pub fn cost(&self, angles: &[f64], beta: &[f64]) -> f64 {
        let e = self.conjugated(angles) - self.h_diag(beta);
        e.norm_squared() / 8.0 + self.identity_sq
    }

    /// Adjoint sweep: one forward product, one backward pass over the gates.
    pub fn cost_grad(&self, angles: &[f64], beta: &[f64]) -> CostGrad {
        let p = self.gates.len();
        let r = self.rotation(angles);
        let g = r.transpose() * &self.h * &r;
        let e = &g - self.h_diag(beta);
        let cost = e.norm_squared() / 8.0 + self.identity_sq;
        let d_beta = self
            .z_planes
            .iter()
            .zip(beta)
            .map(|(&(a, b, s), &bq)| 2.0 * bq - s * g[(a, b)])
            .collect();

        // dC/dtheta_k = -s_k Tr[dO_k Y_k], Y_k = (O_{k+1}..O_{P-1}) M (O_0..O_{k-1}),
        // M = E R^T h.
        let mut d_gates = vec![0.0; p];
        if p > 0 {
            let mut y = &e * r.transpose() * &self.h * &r;
            let (a, b, s) = self.gates[p - 1];
            rotate_cols(&mut y, a, b, -2.0 * s * angles[p - 1]);
            for k in (0..p).rev() {
                let (a, b, s) = self.gates[k];
                let (sn, cs) = (2.0 * s * angles[k]).sin_cos();
                let tr = -sn * (y[(a, a)] + y[(b, b)]) - cs * y[(b, a)] + cs * y[(a, b)];
                d_gates[k] = -s * tr;
                if k > 0 {
                    rotate_rows(&mut y, a, b, 2.0 * s * angles[k]);
                    let (a2, b2, s2) = self.gates[k - 1];
                    rotate_cols(&mut y, a2, b2, -2.0 * s2 * angles[k - 1]);
                }
            }
        }
        CostGrad { cost, d_gates, d_beta }
    }
}

/// `M <- M O` for the rotation `O` of angle `phi` in plane `(a, b)`.
fn rotate_cols(m: &mut DMatrix<f64>, a: usize, b: usize, phi: f64) {
    let (s, c) = phi.sin_cos();
    for i in 0..m.nrows() {
        let (ma, mb) = (m[(i, a)], m[(i, b)]);
        m[(i, a)] = c * ma + s * mb;
        m[(i, b)] = -s * ma + c * mb;
    }
}

/// `M <- O M`.
fn rotate_rows(m: &mut DMatrix<f64>, a: usize, b: usize, phi: f64) {
    let (s, c) = phi.sin_cos();
    for j in 0..m.ncols() {
        let (ma, mb) = (m[(a, j)], m[(b, j)]);
        m[(a, j)] = c * ma - s * mb;
        m[(b, j)] = s * ma + c * mb;
    }
}

/// `W D W^dag` as a Pauli sum, built from the rotated diagonal model.
pub(crate) fn model_hamiltonian(a: &CartanAnsatz) -> PauliSum {
    let n = a.n;
    let table = plane_table(n);
    let model = QuadraticModel::new(&PauliSum::new(n), a).expect("empty sum is quadratic");
    let r = model.rotation(&a.gate_angles());
    let k = &r * model.h_diag(&a.beta) * r.transpose();
    let mut entries: Vec<_> = table.into_iter().collect();
    entries.sort_by_key(|&(_, (i, j, _))| (i, j));
    let mut out = PauliSum::new(n);
    for (key, (i, j, s)) in entries {
        let c = k[(i, j)] * s / 2.0;
        if c != 0.0 {
            let p = pauli_from_key(n, key);
            out.push(p.with_coeff(C64::new(c, 0.0))).expect("same register");
        }
    }
    out.simplified()
}

fn pauli_from_key(n: usize, (x, z): (u64, u64)) -> PauliString {
    use crate::qcore::Pauli;
    let letters: Vec<Pauli> = (0..n)
        .map(|q| {
            let bit = 1u64 << (n - 1 - q);
            match (x & bit != 0, z & bit != 0) {
                (false, false) => Pauli::I,
                (true, false) => Pauli::X,
                (true, true) => Pauli::Y,
                (false, true) => Pauli::Z,
            }
        })
        .collect();
    PauliString::new(C64::new(1.0, 0.0), &letters).expect("valid length")
}
