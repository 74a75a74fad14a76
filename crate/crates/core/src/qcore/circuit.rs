use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use serde::Serialize;

use super::state::StateVector;
use super::{CMatrix, C64, ONE, ZERO};
use crate::{Error, Result};

/// Applies `u` to `targets` on the branch where every control qubit is `|1>`.
/// `targets[0]` is the most significant qubit of `u`'s index.
pub fn apply_gate(
    amps: &mut [C64],
    n: usize,
    controls: &[usize],
    targets: &[usize],
    u: &CMatrix,
) -> Result<()> {
    if amps.len() != 1usize << n {
        return Err(Error::Dimension(format!("{} amplitudes for {n} qubits", amps.len())));
    }
    if targets.is_empty() {
        return Err(Error::Wiring("gate without targets".into()));
    }
    let k = targets.len();
    if u.nrows() != 1usize << k || u.ncols() != 1usize << k {
        return Err(Error::Wiring(format!(
            "{}x{} unitary on {k} target qubits",
            u.nrows(),
            u.ncols()
        )));
    }
    let mut seen = 0u64;
    for &q in controls.iter().chain(targets) {
        if q >= n {
            return Err(Error::Wiring(format!("qubit {q} out of range for {n}")));
        }
        if seen & (1 << q) != 0 {
            return Err(Error::Wiring(format!("qubit {q} used twice in one gate")));
        }
        seen |= 1 << q;
    }
    let bit = |q: usize| 1usize << (n - 1 - q);
    let cmask: usize = controls.iter().map(|&q| bit(q)).sum();
    let tmask: usize = targets.iter().map(|&q| bit(q)).sum();
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|l| {
            targets
                .iter()
                .enumerate()
                .filter(|(i, _)| (l >> (k - 1 - i)) & 1 == 1)
                .map(|(_, &q)| bit(q))
                .sum()
        })
        .collect();
    let mut buf = vec![ZERO; 1 << k];
    for base in 0..amps.len() {
        if base & tmask != 0 || base & cmask != cmask {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (c, b) in buf.iter().enumerate() {
                acc += u[(r, c)] * b;
            }
            amps[base | off] = acc;
        }
    }
    Ok(())
}

/// Controlled application of `u` on a state vector.
pub fn apply_controlled(
    state: &mut StateVector,
    controls: &[usize],
    targets: &[usize],
    u: &CMatrix,
) -> Result<()> {
    let n = state.n_qubits();
    apply_gate(state.as_mut_slice(), n, controls, targets, u)
}

/// Gate family used for resource accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateClass {
    OneQubit,
    TwoQubit,
    /// Uncontrolled gate on three or more qubits.
    MultiQubit,
    ControlledOneQubit,
    /// Controlled gate acting on two or more targets.
    ControlledMulti,
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub label: String,
    pub controls: Vec<usize>,
    pub targets: Vec<usize>,
    pub unitary: Arc<CMatrix>,
}

impl Gate {
    pub fn class(&self) -> GateClass {
        match (self.controls.is_empty(), self.targets.len()) {
            (true, 1) => GateClass::OneQubit,
            (true, 2) => GateClass::TwoQubit,
            (true, _) => GateClass::MultiQubit,
            (false, 1) => GateClass::ControlledOneQubit,
            (false, _) => GateClass::ControlledMulti,
        }
    }
}

/// Per-class gate tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub one_qubit: usize,
    pub two_qubit: usize,
    pub multi_qubit: usize,
    pub controlled_one_qubit: usize,
    pub controlled_multi: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.one_qubit
            + self.two_qubit
            + self.multi_qubit
            + self.controlled_one_qubit
            + self.controlled_multi
    }

    pub fn record(&mut self, class: GateClass) {
        match class {
            GateClass::OneQubit => self.one_qubit += 1,
            GateClass::TwoQubit => self.two_qubit += 1,
            GateClass::MultiQubit => self.multi_qubit += 1,
            GateClass::ControlledOneQubit => self.controlled_one_qubit += 1,
            GateClass::ControlledMulti => self.controlled_multi += 1,
        }
    }
}

/// Ordered gate list over a fixed register; doubles as the gate log.
#[derive(Clone, Debug)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

pub(crate) fn hadamard() -> CMatrix {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

pub(crate) fn phase(phi: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, phi)])
}

pub(crate) fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Appends a gate after checking its wiring.
    pub fn push(
        &mut self,
        label: impl Into<String>,
        controls: &[usize],
        targets: &[usize],
        unitary: Arc<CMatrix>,
    ) -> Result<()> {
        if targets.is_empty() || unitary.nrows() != 1usize << targets.len() {
            return Err(Error::Wiring("unitary size does not match targets".into()));
        }
        let mut seen = 0u64;
        for &q in controls.iter().chain(targets) {
            if q >= self.n || seen & (1 << q) != 0 {
                return Err(Error::Wiring(format!("bad or repeated qubit {q}")));
            }
            seen |= 1 << q;
        }
        self.gates.push(Gate {
            label: label.into(),
            controls: controls.to_vec(),
            targets: targets.to_vec(),
            unitary,
        });
        Ok(())
    }

    pub fn h(&mut self, q: usize) -> Result<()> {
        self.push("H", &[], &[q], Arc::new(hadamard()))
    }

    pub fn s_dag(&mut self, q: usize) -> Result<()> {
        self.push("Sdg", &[], &[q], Arc::new(phase(-std::f64::consts::FRAC_PI_2)))
    }

    pub fn cnot(&mut self, c: usize, t: usize) -> Result<()> {
        self.push("CNOT", &[c], &[t], Arc::new(pauli_x()))
    }

    /// `diag(1, e^{i phi})` on `target`, controlled by `control`.
    pub fn cphase(&mut self, control: usize, target: usize, phi: f64) -> Result<()> {
        self.push("CPhase", &[control], &[target], Arc::new(phase(phi)))
    }

    pub fn run(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() != self.n {
            return Err(Error::Dimension(format!(
                "circuit on {} qubits run on a {}-qubit state",
                self.n,
                state.n_qubits()
            )));
        }
        for g in &self.gates {
            apply_controlled(state, &g.controls, &g.targets, &g.unitary)?;
        }
        Ok(())
    }

    pub fn counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            c.record(g.class());
        }
        c
    }

    pub fn counts_by_label(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for g in &self.gates {
            *m.entry(g.label.clone()).or_insert(0) += 1;
        }
        m
    }
}
