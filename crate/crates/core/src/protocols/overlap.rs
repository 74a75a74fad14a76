use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use super::{cell_rng, EstimateResult, EstimatorConfig, Mode};
use crate::histstate::{append_history_gates, HistoryState};
use crate::qcore::{check_cap, hermitian_eig, Circuit, DenseOperator, Spectrum, StateVector, C64};
use crate::{Error, Result};

/// Appends a Bell-basis measurement basis change on each `(a, b)` pair:
/// `CNOT(a -> b)` followed by `H(a)`.
pub fn bell_measurement(c: &mut Circuit, pairs: &[(usize, usize)]) -> Result<()> {
    for &(a, b) in pairs {
        c.cnot(a, b)?;
        c.h(a)?;
    }
    Ok(())
}

/// SWAP eigenvalue `prod_j (-1)^{a_j b_j}` of an outcome whose bits list all
/// `a` qubits first, then all `b` qubits.
pub fn swap_value(outcome: usize, k: usize) -> f64 {
    let mask = (1usize << k) - 1;
    let a = (outcome >> k) & mask;
    let b = outcome & mask;
    if (a & b).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Runs `circuit` on `input` and returns the outcome distribution over the
/// measured pair qubits, ordered `a_1..a_k b_1..b_k`.
fn pair_distribution(circuit: &Circuit, mut input: StateVector, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    circuit.run(&mut input)?;
    let measured: Vec<usize> = pairs.iter().map(|p| p.0).chain(pairs.iter().map(|p| p.1)).collect();
    input.marginal_probabilities(&measured)
}

/// Exact SWAP expectation, or its shot estimate with the variance of the mean.
fn swap_statistic(probs: &[f64], k: usize, cfg: &EstimatorConfig, cell: u64) -> Result<(f64, f64)> {
    match cfg.mode {
        Mode::Exact => Ok((probs.iter().enumerate().map(|(o, p)| p * swap_value(o, k)).sum(), 0.0)),
        Mode::Sampled => {
            let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0)))
                .map_err(|e| Error::Validation(format!("outcome distribution: {e}")))?;
            let mut rng = cell_rng(cfg.seed, cell);
            let mut plus = 0u64;
            for _ in 0..cfg.shots {
                if swap_value(dist.sample(&mut rng), k) > 0.0 {
                    plus += 1;
                }
            }
            Ok(super::pm_one_stats(plus, cfg.shots))
        }
    }
}

fn result(value: f64, var: f64, shots_used: u64, cfg: &EstimatorConfig) -> EstimateResult {
    match cfg.mode {
        Mode::Exact => EstimateResult::exact(C64::new(value, 0.0)),
        Mode::Sampled => EstimateResult {
            value: C64::new(value, 0.0),
            stderr: var.sqrt(),
            shots_used,
            mode: Mode::Sampled,
            seed: cfg.seed,
        },
    }
}

fn check_state<H: DenseOperator + ?Sized>(h: &H, psi0: &StateVector) -> Result<Spectrum> {
    if psi0.n_qubits() != h.n_qubits() {
        return Err(Error::Dimension("initial state and hamiltonian registers differ".into()));
    }
    hermitian_eig(&h.to_dense()?)
}

/// Discretized Loschmidt average `(1/N) sum_t |<psi0|U(eps t)|psi0>|^2`,
/// one two-copy overlap experiment per `t >= 1`; the `t = 0` term is 1.
pub fn estimate_loschmidt_sequential<H: DenseOperator + ?Sized>(
    h: &H,
    psi0: &StateVector,
    n_times: usize,
    epsilon: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if n_times == 0 {
        return Err(Error::Invalid("need at least one time step".into()));
    }
    let n = psi0.n_qubits();
    check_cap("sequential loschmidt", 2 * n)?;
    let spec = check_state(h, psi0)?;
    let pairs: Vec<(usize, usize)> = (0..n).map(|j| (j, n + j)).collect();
    let mut bell = Circuit::new(2 * n);
    bell_measurement(&mut bell, &pairs)?;
    let stats = (1..n_times)
        .into_par_iter()
        .map(|t| {
            let evolved = spec.evolve(psi0, epsilon * t as f64);
            let probs = pair_distribution(&bell, psi0.kron(&evolved)?, &pairs)?;
            swap_statistic(&probs, n, cfg, t as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    let nt = n_times as f64;
    let value = (1.0 + stats.iter().map(|s| s.0).sum::<f64>()) / nt;
    let var = stats.iter().map(|s| s.1).sum::<f64>() / (nt * nt);
    Ok(result(value, var, cfg.shots * (n_times as u64 - 1), cfg))
}

/// Clock-register overlap circuit on `[clock m | system n | reference n]`.
pub fn loschmidt_parallel_circuit(spec: &Spectrum, m: usize, epsilon: f64) -> Result<Circuit> {
    let n = spec.dim().trailing_zeros() as usize;
    let mut c = Circuit::new(m + 2 * n);
    append_history_gates(&mut c, spec, m, epsilon, 0, m)?;
    let pairs: Vec<(usize, usize)> = (0..n).map(|j| (m + j, m + n + j)).collect();
    bell_measurement(&mut c, &pairs)?;
    Ok(c)
}

/// Same average from a single overlap between the system block of the
/// history state and a fresh copy of `psi0`.
pub fn estimate_loschmidt_parallel<H: DenseOperator + ?Sized>(
    h: &H,
    psi0: &StateVector,
    m: usize,
    epsilon: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let n = psi0.n_qubits();
    check_cap("parallel loschmidt", 2 * n + m)?;
    let spec = check_state(h, psi0)?;
    let circuit = loschmidt_parallel_circuit(&spec, m, epsilon)?;
    let pairs: Vec<(usize, usize)> = (0..n).map(|j| (m + j, m + n + j)).collect();
    let input = StateVector::basis(m, 0)?.kron(psi0)?.kron(psi0)?;
    let probs = pair_distribution(&circuit, input, &pairs)?;
    let (v, var) = swap_statistic(&probs, n, cfg, 0)?;
    Ok(result(v, var, cfg.shots, cfg))
}

/// Clock purity `Tr[rho_T^2]` from the Bell-basis overlap of two copies of
/// the history state, measured on the clock blocks only.
pub fn estimate_purity_overlap(psi: &HistoryState, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    let (m, n) = (psi.m, psi.n);
    check_cap("purity overlap", 2 * (n + m))?;
    let pairs: Vec<(usize, usize)> = (0..m).map(|j| (j, m + n + j)).collect();
    let mut c = Circuit::new(2 * (n + m));
    bell_measurement(&mut c, &pairs)?;
    let probs = pair_distribution(&c, psi.state.kron(&psi.state)?, &pairs)?;
    let (v, var) = swap_statistic(&probs, m, cfg, 0)?;
    Ok(result(v, var, cfg.shots, cfg))
}

/// Direct overlap oracle for the discretized Loschmidt average.
pub fn loschmidt_direct<H: DenseOperator + ?Sized>(
    h: &H,
    psi0: &StateVector,
    n_times: usize,
    epsilon: f64,
) -> Result<f64> {
    let spec = check_state(h, psi0)?;
    let mut acc = 0.0;
    for t in 0..n_times {
        acc += psi0.inner(&spec.evolve(psi0, epsilon * t as f64))?.norm_sqr();
    }
    Ok(acc / n_times as f64)
}
