//! Cross-module pipelines: each test joins two or more modules and checks
//! them against an independent route to the same quantity.

use histsim::depth::{audit_gate_log, diagonalized_counts};
use histsim::freefermion::{build_hopping_matrix, hopping_lambda_for_spin, loschmidt_tilde, Parity, SingleParticleState};
use histsim::hamiltonians::{build_aubry_andre_spin, build_xy_spin, AubryAndreParams, Boundary, XYParams};
use histsim::histstate::{build_history_state, check_majorization, linear_entropy, reduced_states};
use histsim::protocols::{estimate_loschmidt_parallel, estimate_purity_overlap, EstimatorConfig};
use histsim::qcore::StateVector;
use histsim::vhd::{vhd_train, DiagonalizedHistoryBuilder, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn trained_ansatz_reproduces_the_exact_history_state() {
    let h = build_xy_spin(&XYParams { n: 3, ax: vec![0.5, 0.3], ay: vec![0.5, 0.3], az: vec![1.4, -0.6, 2.1] })
        .unwrap()
        .traceless();
    let cfg = TrainConfig { max_iters: 20_000, stop_loss: 1e-15, restarts: 3, seed: 5, ..Default::default() };
    let rep = vhd_train(&h, 3, 3, &cfg).unwrap();
    assert!(rep.best_loss < 1e-13, "best {}", rep.best_loss);
    let b = DiagonalizedHistoryBuilder::new(&h, rep.best_params.clone(), 1e-12).unwrap();
    let psi = StateVector::random(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let got = b.build(&psi, 3, 0.4).unwrap();
    let want = build_history_state(&h, &psi, 3, 0.4).unwrap();
    let overlap = got.state.inner(&want.state).unwrap().norm();
    assert!((overlap - 1.0).abs() < 1e-6, "overlap {overlap}");
    let audit = audit_gate_log(&b.circuit(3, 0.4).unwrap());
    assert_eq!(audit.counts.total() as u64, diagonalized_counts(3, 3, rep.best_params.n_gates() as u64, false).total);
}

#[test]
fn clock_purity_three_ways() {
    let spin = AubryAndreParams::new(5, 2.0, 2.6, Boundary::Periodic);
    let h = build_aubry_andre_spin(&spin).unwrap();
    let sp = SingleParticleState::localized(5, &[2, 3]).unwrap();
    let psi = sp.to_spin_state().unwrap();
    let hs = build_history_state(&h, &psi, 2, 0.45).unwrap();
    let direct = 1.0 - linear_entropy(&hs).unwrap();
    let overlap = estimate_purity_overlap(&hs, &EstimatorConfig::exact()).unwrap().value.re;
    let (rho_t, _) = reduced_states(&hs).unwrap();
    assert!((direct - overlap).abs() < 1e-10);
    assert!((direct - rho_t.purity()).abs() < 1e-12);
    assert!(check_majorization(&hs, &h).unwrap().holds);
}

#[test]
fn echo_average_from_spin_circuit_and_fermions() {
    let spin = AubryAndreParams::new(4, 2.0, 1.2, Boundary::Periodic);
    let h = build_aubry_andre_spin(&spin).unwrap();
    let sp = SingleParticleState::localized(4, &[1, 2]).unwrap();
    let hop = AubryAndreParams { lambda: hopping_lambda_for_spin(spin.lambda), ..spin.clone() };
    let m = build_hopping_matrix(&hop, Parity::Odd).unwrap();
    for (mq, eps) in [(1, 0.3), (2, 0.45), (3, 1.25)] {
        let circuit = estimate_loschmidt_parallel(&h, &sp.to_spin_state().unwrap(), mq, eps, &EstimatorConfig::exact())
            .unwrap()
            .value
            .re;
        let ff = loschmidt_tilde(&m, &sp, 1 << mq, eps).unwrap();
        assert!((circuit - ff).abs() < 1e-10, "m={mq}: {circuit} vs {ff}");
    }
}
