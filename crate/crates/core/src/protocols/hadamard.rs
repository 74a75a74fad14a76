use std::sync::Arc;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cell_rng, pm_one_stats, EstimateResult, EstimatorConfig, Mode};
use crate::histstate::{append_history_gates, clock_qubit};
use crate::qcore::{
    check_cap, hermitian_eig, Circuit, CMatrix, DenseOperator, DensityMatrix, PauliString, PauliSum,
    Spectrum, StateVector, C64,
};
use crate::{Error, Result};

/// Which part of the ancilla overlap the Hadamard test reads out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Re,
    /// `S^dagger` on the ancilla after its first Hadamard.
    Im,
}

const ONE: C64 = C64::new(1.0, 0.0);

fn unit_pauli(p: &PauliString) -> Result<Arc<CMatrix>> {
    Ok(Arc::new(p.with_coeff(ONE).to_matrix()?))
}

fn open_ancilla(c: &mut Circuit, anc: usize, branch: Branch) -> Result<()> {
    c.h(anc)?;
    if branch == Branch::Im {
        c.s_dag(anc)?;
    }
    Ok(())
}

/// Hadamard test on `[system n | ancilla]` reading `<P1(eps t) P2>` for one time step.
pub fn f_sequential_circuit(
    spec: &Spectrum,
    time: f64,
    p1: &PauliString,
    p2: &PauliString,
    branch: Branch,
) -> Result<Circuit> {
    let n = spec.dim().trailing_zeros() as usize;
    let sys: Vec<usize> = (0..n).collect();
    let anc = n;
    let mut c = Circuit::new(n + 1);
    open_ancilla(&mut c, anc, branch)?;
    c.push("C-O2", &[anc], &sys, unit_pauli(p2)?)?;
    c.push("U(t)", &[], &sys, Arc::new(spec.propagator(time)))?;
    c.push("C-O1", &[anc], &sys, unit_pauli(p1)?)?;
    c.h(anc)?;
    Ok(c)
}

/// Clock-register Hadamard test on `[clock m | system n | ancilla]`.
///
/// The ancilla-controlled phase on clock qubit `j` is `diag(1, e^{-i omega eps 2^{j-1}})`,
/// which composes to `e^{-i omega eps t}` on the ancilla `|1>` branch.
pub fn f_parallel_circuit(
    spec: &Spectrum,
    m: usize,
    epsilon: f64,
    omega: f64,
    p1: &PauliString,
    p2: &PauliString,
    branch: Branch,
) -> Result<Circuit> {
    let n = spec.dim().trailing_zeros() as usize;
    let sys: Vec<usize> = (m..m + n).collect();
    let anc = m + n;
    let mut c = Circuit::new(m + n + 1);
    open_ancilla(&mut c, anc, branch)?;
    c.push("C-O2", &[anc], &sys, unit_pauli(p2)?)?;
    append_history_gates(&mut c, spec, m, epsilon, 0, m)?;
    c.push("C-O1", &[anc], &sys, unit_pauli(p1)?)?;
    for j in 1..=m {
        let angle = omega * epsilon * (1u64 << (j - 1)) as f64;
        c.cphase(anc, clock_qubit(m, j), -angle)?;
    }
    c.h(anc)?;
    Ok(c)
}

/// One Hadamard-test cell: the ancilla `|0>` probability averaged over the
/// spectral ensemble of the initial state.
struct Cell {
    weight: C64,
    p0: f64,
}

fn ancilla_p0(circuit: &Circuit, ensemble: &[(f64, StateVector)], prefix: &StateVector) -> Result<f64> {
    let anc = circuit.n_qubits() - 1;
    let zero = StateVector::basis(1, 0)?;
    let mut p0 = 0.0;
    for (w, psi) in ensemble {
        let mut s = prefix.kron(psi)?.kron(&zero)?;
        circuit.run(&mut s)?;
        p0 += w * s.marginal_probabilities(&[anc])?[0];
    }
    Ok(p0)
}

fn combine(cells: Vec<Cell>, cfg: &EstimatorConfig) -> EstimateResult {
    match cfg.mode {
        Mode::Exact => {
            let v = cells.iter().map(|c| c.weight * (2.0 * c.p0 - 1.0)).sum();
            EstimateResult::exact(v)
        }
        Mode::Sampled => {
            let draws: Vec<(f64, f64)> = cells
                .par_iter()
                .enumerate()
                .map(|(k, c)| {
                    let mut rng = cell_rng(cfg.seed, k as u64);
                    let p = c.p0.clamp(0.0, 1.0);
                    let hits = Binomial::new(cfg.shots, p).expect("valid binomial").sample(&mut rng);
                    pm_one_stats(hits, cfg.shots)
                })
                .collect();
            let mut value = C64::new(0.0, 0.0);
            let mut var = 0.0;
            for (c, (z, v)) in cells.iter().zip(draws) {
                value += c.weight * z;
                var += c.weight.norm_sqr() * v;
            }
            EstimateResult {
                value,
                stderr: var.sqrt(),
                shots_used: cfg.shots * cells.len() as u64,
                mode: Mode::Sampled,
                seed: cfg.seed,
            }
        }
    }
}

fn prepare(
    h: &(impl DenseOperator + ?Sized),
    rho0: &DensityMatrix,
    o1: &PauliSum,
    o2: &PauliSum,
    extra: usize,
) -> Result<(Spectrum, Vec<(f64, StateVector)>)> {
    let n = h.n_qubits();
    if rho0.n_qubits() != n || o1.n_qubits() != n || o2.n_qubits() != n {
        return Err(Error::Dimension("hamiltonian, state and observables must share a register".into()));
    }
    check_cap("hadamard test", n + extra)?;
    let spec = hermitian_eig(&h.to_dense()?)?;
    Ok((spec, rho0.ensemble(1e-14)?))
}

fn term_pairs<'a>(o1: &'a PauliSum, o2: &'a PauliSum) -> Vec<(&'a PauliString, &'a PauliString)> {
    o1.terms().iter().flat_map(|a| o2.terms().iter().map(move |b| (a, b))).collect()
}

/// `F = (1/N) sum_t e^{-i omega eps t} Tr[rho0 O1(eps t) O2]` from one
/// Hadamard-test experiment per `(t, term pair, branch)` cell.
#[allow(clippy::too_many_arguments)]
pub fn estimate_f_sequential<H: DenseOperator + ?Sized>(
    h: &H,
    rho0: &DensityMatrix,
    o1: &PauliSum,
    o2: &PauliSum,
    omega: f64,
    n_times: usize,
    epsilon: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if n_times == 0 {
        return Err(Error::Invalid("need at least one time step".into()));
    }
    let (spec, ensemble) = prepare(h, rho0, o1, o2, 1)?;
    let empty = StateVector::basis(0, 0)?;
    let mut jobs = Vec::new();
    for t in 0..n_times {
        for (p1, p2) in term_pairs(o1, o2) {
            for branch in [Branch::Re, Branch::Im] {
                jobs.push((t, p1, p2, branch));
            }
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(t, p1, p2, branch)| {
            let time = epsilon * t as f64;
            let circuit = f_sequential_circuit(&spec, time, p1, p2, branch)?;
            let phase = C64::from_polar(1.0 / n_times as f64, -omega * time);
            let unit = if branch == Branch::Re { ONE } else { C64::new(0.0, 1.0) };
            Ok(Cell {
                weight: phase * p1.coeff * p2.coeff * unit,
                p0: ancilla_p0(&circuit, &ensemble, &empty)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(cells, cfg))
}

/// Same quantity from the clock-register circuit, `N = 2^m`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_f_parallel<H: DenseOperator + ?Sized>(
    h: &H,
    rho0: &DensityMatrix,
    o1: &PauliSum,
    o2: &PauliSum,
    omega: f64,
    m: usize,
    epsilon: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if m == 0 {
        return Err(Error::Invalid("parallel estimator needs a clock qubit".into()));
    }
    let (spec, ensemble) = prepare(h, rho0, o1, o2, m + 1)?;
    let clocks = StateVector::basis(m, 0)?;
    let mut jobs = Vec::new();
    for (p1, p2) in term_pairs(o1, o2) {
        for branch in [Branch::Re, Branch::Im] {
            jobs.push((p1, p2, branch));
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(p1, p2, branch)| {
            let circuit = f_parallel_circuit(&spec, m, epsilon, omega, p1, p2, branch)?;
            let unit = if branch == Branch::Re { ONE } else { C64::new(0.0, 1.0) };
            Ok(Cell {
                weight: p1.coeff * p2.coeff * unit,
                p0: ancilla_p0(&circuit, &ensemble, &clocks)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(cells, cfg))
}

/// Direct evaluation of the discretized correlator, used as an oracle.
pub fn f_direct<H: DenseOperator + ?Sized>(
    h: &H,
    rho0: &DensityMatrix,
    o1: &PauliSum,
    o2: &PauliSum,
    omega: f64,
    n_times: usize,
    epsilon: f64,
) -> Result<C64> {
    let spec = hermitian_eig(&h.to_dense()?)?;
    let (a, b) = (o1.to_matrix()?, o2.to_matrix()?);
    let mut acc = C64::new(0.0, 0.0);
    for t in 0..n_times {
        let time = epsilon * t as f64;
        let u = spec.propagator(time);
        let heis = u.adjoint() * &a * &u;
        acc += C64::from_polar(1.0, -omega * time) * (rho0.matrix() * heis * &b).trace();
    }
    Ok(acc / n_times as f64)
}
