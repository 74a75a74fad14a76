//! Discrete history states `(1/sqrt N) sum_t |t> (x) U(eps t)|psi0>` and the
//! reduced-state identities they satisfy.
//!
//! Register layout: the `m` clock qubits lead, then the `n` system qubits.
//! Clock qubit `j = 1..=m` carries weight `2^{j-1}`, i.e. it is register
//! qubit `m - j`, so the clock register reads `t` in binary.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::hamiltonians::{default_cluster_tol, EnergyComponents};
use crate::qcore::{
    check_cap, hermitian_eig, partial_trace_pure, schmidt_spectrum, Circuit, CMatrix, DenseOperator,
    DensityMatrix, Keep, PauliSum, Spectrum, StateVector, C64,
};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct HistoryState {
    pub state: StateVector,
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
}

impl HistoryState {
    /// Number of time steps `N = 2^m`.
    pub fn n_times(&self) -> usize {
        1usize << self.m
    }

    /// Time window `T = N eps`.
    pub fn window(&self) -> f64 {
        self.n_times() as f64 * self.epsilon
    }
}

fn check_dims(n_h: usize, psi0: &StateVector, m: usize) -> Result<()> {
    if psi0.n_qubits() != n_h {
        return Err(Error::Dimension(format!(
            "initial state on {} qubits for a {n_h}-qubit hamiltonian",
            psi0.n_qubits()
        )));
    }
    if m == 0 {
        return Err(Error::Invalid("history state needs at least one clock qubit".into()));
    }
    check_cap("history state", m + n_h)
}

/// Register index of clock qubit `j` (1-based weight `2^{j-1}`).
pub fn clock_qubit(m: usize, j: usize) -> usize {
    m - j
}

/// Appends the clock Hadamards and the controlled powers `U(eps 2^{j-1})`.
///
/// `clock` and `system` are the first register indices of each block.
pub fn append_history_gates(
    circuit: &mut Circuit,
    spec: &Spectrum,
    m: usize,
    epsilon: f64,
    clock: usize,
    system: usize,
) -> Result<()> {
    let n = spec.dim().trailing_zeros() as usize;
    let sys: Vec<usize> = (system..system + n).collect();
    for q in 0..m {
        circuit.h(clock + q)?;
    }
    for j in 1..=m {
        let u = spec.propagator(epsilon * (1u64 << (j - 1)) as f64);
        circuit.push(format!("U(eps*2^{})", j - 1), &[clock + clock_qubit(m, j)], &sys, Arc::new(u))?;
    }
    Ok(())
}

/// Builds the history state directly from its defining sum.
pub fn build_history_state<H: DenseOperator + ?Sized>(
    h: &H,
    psi0: &StateVector,
    m: usize,
    epsilon: f64,
) -> Result<HistoryState> {
    let spec = hermitian_eig(&h.to_dense()?)?;
    build_from_spectrum(&spec, psi0, m, epsilon)
}

pub(crate) fn build_from_spectrum(
    spec: &Spectrum,
    psi0: &StateVector,
    m: usize,
    epsilon: f64,
) -> Result<HistoryState> {
    let n = spec.dim().trailing_zeros() as usize;
    check_dims(n, psi0, m)?;
    let nt = 1usize << m;
    let dim = spec.dim();
    let norm = C64::new(1.0 / (nt as f64).sqrt(), 0.0);
    let c0 = spec.coefficients(psi0.amplitudes());
    let mut amps = Vec::with_capacity(nt * dim);
    for t in 0..nt {
        let ct = DVector::from_iterator(
            dim,
            c0.iter()
                .zip(&spec.eigenvalues)
                .map(|(c, e)| c * C64::from_polar(1.0, -e * epsilon * t as f64)),
        );
        let psi_t = &spec.eigenvectors * ct;
        amps.extend(psi_t.iter().map(|a| a * norm));
    }
    Ok(HistoryState {
        state: StateVector::from_dvector_unchecked(DVector::from_vec(amps)),
        n,
        m,
        epsilon,
    })
}

/// Builds the history state by running the clock circuit on `|0...0> (x) psi0`.
pub fn build_history_state_circuit<H: DenseOperator + ?Sized>(
    h: &H,
    psi0: &StateVector,
    m: usize,
    epsilon: f64,
) -> Result<HistoryState> {
    let spec = hermitian_eig(&h.to_dense()?)?;
    let n = spec.dim().trailing_zeros() as usize;
    check_dims(n, psi0, m)?;
    let mut circuit = Circuit::new(m + n);
    append_history_gates(&mut circuit, &spec, m, epsilon, 0, m)?;
    let mut state = StateVector::basis(m, 0)?.kron(psi0)?;
    circuit.run(&mut state)?;
    Ok(HistoryState { state, n, m, epsilon })
}

/// Normalized system state conditioned on clock value `t`.
pub fn condition_on_time(psi: &HistoryState, t: usize) -> Result<StateVector> {
    if t >= psi.n_times() {
        return Err(Error::Invalid(format!("time index {t} outside 0..{}", psi.n_times())));
    }
    let dim = 1usize << psi.n;
    let block = psi.state.as_slice()[t * dim..(t + 1) * dim].to_vec();
    StateVector::normalized(block)
}

/// Clock and system marginals `(rho_T, rho_S)`.
pub fn reduced_states(psi: &HistoryState) -> Result<(DensityMatrix, DensityMatrix)> {
    Ok((
        partial_trace_pure(&psi.state, psi.m, Keep::A)?,
        partial_trace_pure(&psi.state, psi.m, Keep::B)?,
    ))
}

/// Linear entropy `E2 = 1 - Tr[rho_T^2]` of the clock-system cut.
pub fn linear_entropy(psi: &HistoryState) -> Result<f64> {
    let p = schmidt_spectrum(&psi.state, psi.m)?;
    Ok(1.0 - p.iter().map(|x| x * x).sum::<f64>())
}

/// Discretized time average `(1/N) sum_t U(eps t) rho0 U(eps t)^dagger`.
pub fn rho_tilde<H: DenseOperator + ?Sized>(
    h: &H,
    rho0: &DensityMatrix,
    n_times: usize,
    epsilon: f64,
) -> Result<DensityMatrix> {
    let spec = hermitian_eig(&h.to_dense()?)?;
    if rho0.matrix().nrows() != spec.dim() {
        return Err(Error::Dimension("initial state and hamiltonian dims differ".into()));
    }
    let mut acc = CMatrix::zeros(spec.dim(), spec.dim());
    for t in 0..n_times {
        let u = spec.propagator(epsilon * t as f64);
        acc += &u * rho0.matrix() * u.adjoint();
    }
    Ok(DensityMatrix::new_unchecked(acc / C64::new(n_times as f64, 0.0)))
}

/// Discrete dephasing factor `(1/N) sum_{t<N} exp(-i dE eps t)`.
///
/// Evaluated as `exp(-i (N-1) r / 2) sin(N r / 2) / (N sin(r / 2))` with
/// `r = dE eps` reduced to `(-pi, pi]`; equal to 1 when `r = 0`.
pub fn dephasing_factor(delta_e: f64, epsilon: f64, n_times: usize) -> C64 {
    let x = delta_e * epsilon;
    let r = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if r.abs() < 1e-15 {
        return C64::new(1.0, 0.0);
    }
    let nf = n_times as f64;
    let amp = (nf * r / 2.0).sin() / (nf * (r / 2.0).sin());
    C64::from_polar(amp, -(nf - 1.0) * r / 2.0)
}

/// `rho_S` written in the energy basis, `sum_{kk'} Delta_{kk'} P_k rho0 P_k'`.
pub fn dephasing_channel_form<H: DenseOperator + ?Sized>(
    h: &H,
    psi0: &StateVector,
    n_times: usize,
    epsilon: f64,
) -> Result<DensityMatrix> {
    let comps = EnergyComponents::new(h, psi0)?;
    let dim = psi0.dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for (a, va) in comps.projections.iter().enumerate() {
        for (b, vb) in comps.projections.iter().enumerate() {
            let d = dephasing_factor(comps.energies[a] - comps.energies[b], epsilon, n_times);
            acc += va * vb.adjoint() * d;
        }
    }
    Ok(DensityMatrix::new_unchecked(acc))
}

/// Sum of `|Delta_{kk'}|^2` over distinct energy pairs of the support of `psi0`.
pub fn off_diagonal_dephasing<H: DenseOperator + ?Sized>(
    h: &H,
    psi0: &StateVector,
    n_times: usize,
    epsilon: f64,
) -> Result<f64> {
    let comps = EnergyComponents::new(h, psi0)?;
    let e = &comps.energies;
    let mut s = 0.0;
    for a in 0..e.len() {
        for b in 0..e.len() {
            if a != b && comps.weights[a] > 0.0 && comps.weights[b] > 0.0 {
                s += dephasing_factor(e[a] - e[b], epsilon, n_times).norm_sqr();
            }
        }
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct MajorizationReport {
    pub spectrum_rho_s: Vec<f64>,
    pub spectrum_rho_bar: Vec<f64>,
    pub holds: bool,
    pub max_violation: f64,
}

/// Tolerance under which a partial-sum deficit counts as round-off.
pub const MAJORIZATION_TOL: f64 = 1e-12;

/// Checks `rho_bar < rho_S`: every descending partial sum of `spec(rho_S)`
/// dominates the matching partial sum of `spec(rho_bar)`.
pub fn check_majorization<H: DenseOperator + ?Sized>(psi: &HistoryState, h: &H) -> Result<MajorizationReport> {
    let psi0 = condition_on_time(psi, 0)?;
    let (_, rho_s) = reduced_states(psi)?;
    let rho_bar = EnergyComponents::new(h, &psi0)?.dephased();
    let s = rho_s.eigenvalues()?;
    let b = rho_bar.eigenvalues()?;
    let mut max_violation: f64 = 0.0;
    let (mut ps, mut pb) = (0.0, 0.0);
    for k in 0..s.len().max(b.len()) {
        ps += s.get(k).copied().unwrap_or(0.0);
        pb += b.get(k).copied().unwrap_or(0.0);
        max_violation = max_violation.max(pb - ps);
    }
    Ok(MajorizationReport {
        spectrum_rho_s: s,
        spectrum_rho_bar: b,
        holds: max_violation <= MAJORIZATION_TOL,
        max_violation,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EntanglementBound {
    pub e2: f64,
    pub lbar: f64,
    /// `(1 - Lbar) - E2`, non-negative up to round-off.
    pub slack: f64,
}

pub fn entanglement_loschmidt_bound<H: DenseOperator + ?Sized>(
    psi: &HistoryState,
    h: &H,
    psi0: &StateVector,
) -> Result<EntanglementBound> {
    let e2 = linear_entropy(psi)?;
    let lbar = EnergyComponents::new(h, psi0)?.loschmidt_bar();
    Ok(EntanglementBound { e2, lbar, slack: (1.0 - lbar) - e2 })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FluctuationReport {
    pub sigma2: f64,
    pub delta2: f64,
    pub lbar: f64,
    pub purity_s: f64,
    /// `Delta^2 (1 - E2) = Delta^2 Tr[rho_S^2]`.
    pub bound: f64,
    /// `Delta^2 Lbar`, the tighter intermediate bound.
    pub bound_lbar: f64,
}

pub fn fluctuation_bound<H: DenseOperator + ?Sized>(
    psi: &HistoryState,
    h: &H,
    psi0: &StateVector,
    o: &PauliSum,
) -> Result<FluctuationReport> {
    let hm = h.to_dense()?;
    let spec = hermitian_eig(&hm)?;
    let comps = EnergyComponents::from_spectrum(&spec, psi0, default_cluster_tol(&hm))?;
    let f = comps.fluctuations(&o.to_matrix()?)?;
    let purity_s = 1.0 - linear_entropy(psi)?;
    let lbar = comps.loschmidt_bar();
    Ok(FluctuationReport {
        sigma2: f.sigma2,
        delta2: f.delta2,
        lbar,
        purity_s,
        bound: f.delta2 * purity_s,
        bound_lbar: f.delta2 * lbar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::random_pauli_hamiltonian;
    use crate::qcore::propagator;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(word: &str, c: f64) -> PauliSum {
        let mut h = PauliSum::new(word.len());
        h.add(c, word).unwrap();
        h
    }

    fn instance(seed: u64, n: usize) -> (PauliSum, StateVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_pauli_hamiltonian(n, 2 * n + 2, &mut rng).unwrap();
        let psi = StateVector::random(n, &mut rng).unwrap();
        (h, psi)
    }

    #[test]
    fn z_on_zero_is_separable() {
        let psi0 = StateVector::basis(1, 0).unwrap();
        let hs = build_history_state(&single("Z", 1.0), &psi0, 2, 0.3).unwrap();
        assert!(linear_entropy(&hs).unwrap().abs() < 1e-12);
        for t in 0..4 {
            let a = hs.state.as_slice()[2 * t];
            let expect = C64::from_polar(0.5, -0.3 * t as f64);
            assert!((a - expect).norm() < 1e-12);
            assert!(hs.state.as_slice()[2 * t + 1].norm() < 1e-14);
        }
        let (_, rho_s) = reduced_states(&hs).unwrap();
        assert!((rho_s.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_quarter_period_is_maximally_entangled() {
        let psi0 = StateVector::basis(1, 0).unwrap();
        let hs = build_history_state(&single("X", 1.0), &psi0, 1, PI / 2.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -s)];
        for (a, b) in hs.state.as_slice().iter().zip(expect) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((linear_entropy(&hs).unwrap() - 0.5).abs() < 1e-12);
        let (rho_t, _) = reduced_states(&hs).unwrap();
        let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!((rho_t.matrix() - half).norm() < 1e-12);
    }

    #[test]
    fn circuit_matches_formula_random_three_qubits() {
        let (h, psi0) = instance(17, 3);
        let a = build_history_state(&h, &psi0, 3, 0.41).unwrap();
        let b = build_history_state_circuit(&h, &psi0, 3, 0.41).unwrap();
        assert!((a.state.amplitudes() - b.state.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn conditioning_recovers_evolved_state() {
        let (h, psi0) = instance(23, 2);
        let hs = build_history_state(&h, &psi0, 3, 0.6).unwrap();
        let c0 = condition_on_time(&hs, 0).unwrap();
        assert!((c0.inner(&psi0).unwrap().norm() - 1.0).abs() < 1e-12);
        for t in 0..8 {
            let u = propagator(&h, 0.6 * t as f64).unwrap();
            let expect = psi0.apply_matrix(&u).unwrap();
            let got = condition_on_time(&hs, t).unwrap();
            assert!((got.inner(&expect).unwrap().norm() - 1.0).abs() < 1e-12);
        }
        assert!(condition_on_time(&hs, 8).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let h = single("ZZZZZZZZZZ", 1.0);
        let psi0 = StateVector::basis(10, 0).unwrap();
        assert!(matches!(build_history_state(&h, &psi0, 5, 0.1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn periodic_evolution_dephases_exactly() {
        let mut h = single("Z", 1.0);
        h.add(1.0, "I").unwrap();
        let plus = StateVector::normalized(vec![C64::new(1.0, 0.0); 2]).unwrap();
        // T = N eps = pi equals the period
        let hs = build_history_state(&h, &plus, 1, PI / 2.0).unwrap();
        let (_, rho_s) = reduced_states(&hs).unwrap();
        let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!((rho_s.matrix() - &half).norm() < 1e-12);
        let rep = check_majorization(&hs, &h).unwrap();
        assert!(rep.holds);
        let b = entanglement_loschmidt_bound(&hs, &h, &plus).unwrap();
        assert!(b.slack.abs() < 1e-12);
    }

    #[test]
    fn eigenstate_gives_trivial_bounds() {
        let h = single("ZI", 0.7);
        let psi0 = StateVector::basis(2, 1).unwrap();
        let hs = build_history_state(&h, &psi0, 2, 0.3).unwrap();
        let b = entanglement_loschmidt_bound(&hs, &h, &psi0).unwrap();
        assert!(b.e2.abs() < 1e-12 && (b.lbar - 1.0).abs() < 1e-12 && b.slack.abs() < 1e-12);
        let rep = check_majorization(&hs, &h).unwrap();
        assert!((rep.spectrum_rho_s[0] - 1.0).abs() < 1e-12);
        assert!((rep.spectrum_rho_bar[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_fluctuations_closed_form() {
        let h = single("Z", 1.0);
        let o = single("X", 1.0);
        let plus = StateVector::normalized(vec![C64::new(1.0, 0.0); 2]).unwrap();
        let hs = build_history_state(&h, &plus, 3, 0.2).unwrap();
        let f = fluctuation_bound(&hs, &h, &plus, &o).unwrap();
        assert!((f.sigma2 - 0.5).abs() < 1e-12);
        assert!((f.lbar - 0.5).abs() < 1e-12);
        assert!((f.delta2 - 4.0).abs() < 1e-12);
        assert!((f.bound_lbar - 2.0).abs() < 1e-12);
    }

    #[test]
    fn commuting_observable_does_not_fluctuate() {
        let (h, psi0) = instance(31, 2);
        let hs = build_history_state(&h, &psi0, 2, 0.5).unwrap();
        let f = fluctuation_bound(&hs, &h, &psi0, &h).unwrap();
        assert!(f.sigma2 < 1e-20);
    }

    #[test]
    fn dephasing_factor_matches_direct_sum() {
        for &(de, eps, nt) in &[(0.3, 0.7, 8usize), (1.0, 2.0 * PI, 4), (-2.5, 0.11, 64), (1e-9, 1.0, 16)] {
            let direct: C64 = (0..nt)
                .map(|t| C64::from_polar(1.0, -de * eps * t as f64))
                .sum::<C64>()
                / nt as f64;
            assert!((dephasing_factor(de, eps, nt) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn off_diagonal_dephasing_decreases_with_window() {
        let (h, psi0) = instance(41, 3);
        let mut prev = f64::INFINITY;
        for m in 1..10 {
            let s = off_diagonal_dephasing(&h, &psi0, 1 << m, 0.37).unwrap();
            assert!(s <= prev + 1e-12, "m={m}: {s} > {prev}");
            prev = s;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn reduced_state_identities(seed in 0u64..1_000_000, m in 1usize..4, eps in 0.05f64..2.0) {
            let (h, psi0) = instance(seed, 2);
            let hs = build_history_state(&h, &psi0, m, eps).unwrap();
            let (rho_t, rho_s) = reduced_states(&hs).unwrap();
            prop_assert!((rho_t.purity() - rho_s.purity()).abs() < 1e-12);
            let kraus = rho_tilde(&h, &psi0.to_density(), hs.n_times(), eps).unwrap();
            prop_assert!((rho_s.matrix() - kraus.matrix()).norm() < 1e-12);
            let channel = dephasing_channel_form(&h, &psi0, hs.n_times(), eps).unwrap();
            prop_assert!((rho_s.matrix() - channel.matrix()).norm() < 1e-10);
            let schmidt = schmidt_spectrum(&hs.state, m).unwrap();
            let e2 = 1.0 - schmidt.iter().map(|p| p * p).sum::<f64>();
            prop_assert!((linear_entropy(&hs).unwrap() - e2).abs() < 1e-12);
        }

        #[test]
        fn majorization_and_bound_chain(seed in 0u64..1_000_000, m in 1usize..4, eps in 0.05f64..2.0) {
            let (h, psi0) = instance(seed, 2);
            let hs = build_history_state(&h, &psi0, m, eps).unwrap();
            let rep = check_majorization(&hs, &h).unwrap();
            prop_assert!(rep.max_violation < 1e-12);
            let b = entanglement_loschmidt_bound(&hs, &h, &psi0).unwrap();
            prop_assert!(b.slack >= -1e-12);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let o = random_pauli_hamiltonian(2, 3, &mut rng).unwrap();
            let f = fluctuation_bound(&hs, &h, &psi0, &o).unwrap();
            prop_assert!(f.sigma2 <= f.bound_lbar + 1e-10);
            prop_assert!(f.bound_lbar <= f.bound + 1e-10);
        }
    }
}
