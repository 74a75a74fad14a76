//! Estimator circuits run as simulated experiments.
//!
//! Every estimator has an exact mode (outcome probabilities read off the
//! simulated state) and a sampled mode (finite shots drawn from those
//! probabilities). Sampled experiments are split into cells; cell `c` draws
//! from its own ChaCha8 stream `c` under the configured seed, so results do
//! not depend on scheduling.

mod hadamard;
mod overlap;
mod shadows;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::qcore::C64;
use crate::{Error, Result};

pub use hadamard::{
    estimate_f_parallel, estimate_f_sequential, f_direct, f_parallel_circuit, f_sequential_circuit,
    Branch,
};
pub use overlap::{
    bell_measurement, estimate_loschmidt_parallel, estimate_loschmidt_sequential,
    estimate_purity_overlap, loschmidt_direct, loschmidt_parallel_circuit, swap_value,
};
pub use shadows::{
    clifford_group, estimate_purity_shadows, estimate_purity_shadows_with, shadow_purity,
    take_snapshots, ShadowEstimator, ShadowSnapshot, BOOTSTRAP_RESAMPLES,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub mode: Mode,
    /// Shots per experiment cell in sampled mode.
    pub shots: u64,
    pub seed: u64,
    /// Target precision; shot budgets derived from it use `ceil(1 / delta^2)`.
    pub delta_target: Option<f64>,
}

impl EstimatorConfig {
    pub fn exact() -> Self {
        EstimatorConfig { mode: Mode::Exact, shots: 0, seed: 0, delta_target: None }
    }

    pub fn sampled(shots: u64, seed: u64) -> Self {
        EstimatorConfig { mode: Mode::Sampled, shots, seed, delta_target: None }
    }

    /// Sampled configuration with `ceil(1 / delta^2)` shots per cell.
    pub fn for_precision(delta: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Invalid(format!("precision target {delta} must be positive")));
        }
        let shots = (1.0 / (delta * delta)).ceil() as u64;
        Ok(EstimatorConfig { mode: Mode::Sampled, shots, seed, delta_target: Some(delta) })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.mode == Mode::Sampled && self.shots == 0 {
            return Err(Error::Invalid("sampled mode needs at least one shot".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub value: C64,
    pub stderr: f64,
    pub shots_used: u64,
    pub mode: Mode,
    pub seed: u64,
}

impl EstimateResult {
    pub(crate) fn exact(value: C64) -> Self {
        EstimateResult { value, stderr: 0.0, shots_used: 0, mode: Mode::Exact, seed: 0 }
    }
}

/// Independent random stream for experiment cell `cell` under `seed`.
pub fn cell_rng(seed: u64, cell: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell);
    rng
}

/// Mean and variance of the mean for `k` successes in `shots` +/-1 trials.
pub(crate) fn pm_one_stats(successes: u64, shots: u64) -> (f64, f64) {
    let z = 2.0 * successes as f64 / shots as f64 - 1.0;
    (z, ((1.0 - z * z) / shots as f64).max(0.0))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::hamiltonians::random_pauli_hamiltonian;
    use crate::histstate::{build_history_state, reduced_states};
    use crate::qcore::{DensityMatrix, PauliSum, StateVector};
    use rand::SeedableRng;

    fn word(w: &str) -> PauliSum {
        let mut s = PauliSum::new(w.len());
        s.add(1.0, w).unwrap();
        s
    }

    fn instance(seed: u64, n: usize) -> (PauliSum, StateVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (
            random_pauli_hamiltonian(n, 2 * n + 2, &mut rng).unwrap(),
            StateVector::random(n, &mut rng).unwrap(),
        )
    }

    fn mixed(seed: u64, n: usize) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = StateVector::random(n, &mut rng).unwrap().to_density().into_matrix();
        let b = StateVector::random(n, &mut rng).unwrap().to_density().into_matrix();
        DensityMatrix::new(a * C64::new(0.25, 0.0) + b * C64::new(0.75, 0.0)).unwrap()
    }

    #[test]
    fn identity_correlator_is_one() {
        let (h, psi) = instance(1, 2);
        let rho = psi.to_density();
        let id = word("II");
        let ex = EstimatorConfig::exact();
        let s = estimate_f_sequential(&h, &rho, &id, &id, 0.0, 4, 0.3, &ex).unwrap();
        let p = estimate_f_parallel(&h, &rho, &id, &id, 0.0, 2, 0.3, &ex).unwrap();
        assert!((s.value - 1.0).norm() < 1e-12);
        assert!((p.value - 1.0).norm() < 1e-12);
    }

    #[test]
    fn eigenstate_with_full_turn_phase_averages_to_zero() {
        let h = word("Z");
        let rho = StateVector::basis(1, 0).unwrap().to_density();
        let id = word("I");
        let nt = 8;
        let eps = 0.25;
        let omega = 2.0 * PI / (nt as f64 * eps);
        let ex = EstimatorConfig::exact();
        let s = estimate_f_sequential(&h, &rho, &id, &id, omega, nt, eps, &ex).unwrap();
        let p = estimate_f_parallel(&h, &rho, &id, &id, omega, 3, eps, &ex).unwrap();
        assert!(s.value.norm() < 1e-12);
        assert!(p.value.norm() < 1e-12);
    }

    #[test]
    fn sequential_matches_direct_correlator() {
        let (h, psi) = instance(7, 3);
        let rho = psi.to_density();
        let mut o1 = word("XZI");
        o1.add(0.5, "IYY").unwrap();
        let o2 = word("ZIX");
        let ex = EstimatorConfig::exact();
        let got = estimate_f_sequential(&h, &rho, &o1, &o2, 0.9, 8, 0.35, &ex).unwrap();
        let want = f_direct(&h, &rho, &o1, &o2, 0.9, 8, 0.35).unwrap();
        assert!((got.value - want).norm() < 1e-10);
        assert_eq!(got.stderr, 0.0);
    }

    #[test]
    fn parallel_matches_sequential_for_mixed_input() {
        let (h, _) = instance(9, 2);
        let rho = mixed(10, 2);
        let mut o1 = word("XY");
        o1.add(-0.3, "ZI").unwrap();
        let o2 = word("YZ");
        let ex = EstimatorConfig::exact();
        let s = estimate_f_sequential(&h, &rho, &o1, &o2, 1.3, 4, 0.6, &ex).unwrap();
        let p = estimate_f_parallel(&h, &rho, &o1, &o2, 1.3, 2, 0.6, &ex).unwrap();
        assert!((s.value - p.value).norm() < 1e-10);
    }

    #[test]
    fn sampled_parallel_is_within_four_sigma() {
        let (h, psi) = instance(12, 2);
        let rho = psi.to_density();
        let o1 = word("XI");
        let o2 = word("ZY");
        let exact = estimate_f_parallel(&h, &rho, &o1, &o2, 0.4, 2, 0.5, &EstimatorConfig::exact())
            .unwrap()
            .value;
        let mut inside = 0;
        for seed in 0..100 {
            let cfg = EstimatorConfig::sampled(4096, seed);
            let r = estimate_f_parallel(&h, &rho, &o1, &o2, 0.4, 2, 0.5, &cfg).unwrap();
            assert_eq!(r.shots_used, 2 * 4096);
            if (r.value - exact).norm() < 4.0 * r.stderr {
                inside += 1;
            }
        }
        assert!(inside >= 99, "{inside}/100 within 4 sigma");
    }

    #[test]
    fn sampled_runs_replay_from_seed() {
        let (h, psi) = instance(13, 2);
        let cfg = EstimatorConfig::sampled(500, 77);
        let a = estimate_loschmidt_sequential(&h, &psi, 8, 0.4, &cfg).unwrap();
        let b = estimate_loschmidt_sequential(&h, &psi, 8, 0.4, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(EstimatorConfig::sampled(0, 1).validate().is_err());
    }

    #[test]
    fn stderr_scales_as_inverse_root_shots() {
        let (h, psi) = instance(14, 2);
        let rho = psi.to_density();
        let o = word("XZ");
        let lo = EstimatorConfig::sampled(1000, 3);
        let hi = EstimatorConfig::sampled(16000, 3);
        let a = estimate_f_sequential(&h, &rho, &o, &o, 0.0, 4, 0.7, &lo).unwrap();
        let b = estimate_f_sequential(&h, &rho, &o, &o, 0.0, 4, 0.7, &hi).unwrap();
        let ratio = a.stderr / b.stderr;
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn loschmidt_trivial_cases() {
        let h = word("ZZ");
        let eig = StateVector::basis(2, 2).unwrap();
        let ex = EstimatorConfig::exact();
        assert!((estimate_loschmidt_sequential(&h, &eig, 8, 0.3, &ex).unwrap().value.re - 1.0).abs() < 1e-12);
        assert!((estimate_loschmidt_parallel(&h, &eig, 3, 0.3, &ex).unwrap().value.re - 1.0).abs() < 1e-12);
        let (h, psi) = instance(15, 2);
        assert!((estimate_loschmidt_sequential(&h, &psi, 1, 0.3, &ex).unwrap().value.re - 1.0).abs() < 1e-12);
        let x = word("X");
        let zero = StateVector::basis(1, 0).unwrap();
        let half = estimate_loschmidt_parallel(&x, &zero, 1, PI / 2.0, &ex).unwrap();
        assert!((half.value.re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn loschmidt_routes_agree_with_direct_overlap() {
        for seed in 20..25 {
            let (h, psi) = instance(seed, 2);
            let ex = EstimatorConfig::exact();
            let direct = loschmidt_direct(&h, &psi, 4, 0.45).unwrap();
            let s = estimate_loschmidt_sequential(&h, &psi, 4, 0.45, &ex).unwrap().value.re;
            let p = estimate_loschmidt_parallel(&h, &psi, 2, 0.45, &ex).unwrap().value.re;
            assert!((s - direct).abs() < 1e-12);
            assert!((p - s).abs() < 1e-12);
        }
    }

    #[test]
    fn purity_overlap_cases() {
        let ex = EstimatorConfig::exact();
        let zero = StateVector::basis(1, 0).unwrap();
        let sep = build_history_state(&word("Z"), &zero, 2, 0.3).unwrap();
        assert!((estimate_purity_overlap(&sep, &ex).unwrap().value.re - 1.0).abs() < 1e-12);
        let ent = build_history_state(&word("X"), &zero, 1, PI / 2.0).unwrap();
        assert!((estimate_purity_overlap(&ent, &ex).unwrap().value.re - 0.5).abs() < 1e-12);
        let (h, psi) = instance(30, 2);
        let hs = build_history_state(&h, &psi, 2, 0.8).unwrap();
        let (rho_t, _) = reduced_states(&hs).unwrap();
        let got = estimate_purity_overlap(&hs, &ex).unwrap().value.re;
        assert!((got - rho_t.purity()).abs() < 1e-12);
    }

    #[test]
    fn shadows_recover_pure_and_mixed_clock_purity() {
        let zero = StateVector::basis(1, 0).unwrap();
        let pure = build_history_state(&word("Z"), &zero, 2, 0.0).unwrap();
        let r = estimate_purity_shadows(&pure, 1000, 5).unwrap();
        assert!((r.value.re - 1.0).abs() < 0.05_f64.max(3.0 * r.stderr), "{r:?}");
        assert!((r.value.re - 1.0).abs() < 3.0 * r.stderr + 1e-12);
        let mixed = build_history_state(&word("X"), &zero, 1, PI / 2.0).unwrap();
        let r = estimate_purity_shadows(&mixed, 2000, 6).unwrap();
        assert!((r.value.re - 0.5).abs() < 0.05, "{r:?}");
    }

    #[test]
    fn shadows_track_random_history_purity() {
        let (h, psi) = instance(33, 2);
        let hs = build_history_state(&h, &psi, 2, 0.7).unwrap();
        let exact = reduced_states(&hs).unwrap().0.purity();
        let r = estimate_purity_shadows(&hs, 4000, 8).unwrap();
        assert!((r.value.re - exact).abs() < 3.0 * r.stderr, "{r:?} vs {exact}");
        let mom = estimate_purity_shadows_with(&hs, 4000, 8, ShadowEstimator::MedianOfMeans { batches: 10 }).unwrap();
        assert!((mom.value.re - exact).abs() < 0.15);
        assert!(estimate_purity_shadows(&hs, 1, 0).is_err());
    }
}
