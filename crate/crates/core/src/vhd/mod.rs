//! Variational Hamiltonian diagonalization with the XY/YX brickwork ansatz.
//!
//! A target `H` is approximated by `W(alpha) D(beta) W(alpha)^dag` with
//! `D = sum_q beta_q Z_q`, trained on `||H - W D W^dag||_HS^2 / 2^n`. A
//! trained pair replaces controlled time evolution by controlled Z rotations
//! in the history-state circuit.

mod ansatz;
mod builder;
mod cost;
mod lie;
mod majorana;
mod train;

pub use ansatz::{append_w_gates, apply_ansatz_to_state, apply_ansatz_w, CartanAnsatz, Flavor};
pub use builder::DiagonalizedHistoryBuilder;
pub use cost::{
    model_hamiltonian, off_diagonal_max, rotated_hamiltonian, vhd_cost, vhd_cost_dense, vhd_gradient,
    vhd_gradient_adjoint, vhd_target, Gradient,
};
pub use lie::{cartan_generators, lie_closure_dim};
pub use train::{initial_ansatz, layer_sweep, vhd_train, Adam, RunReport, TrainConfig, TrainReport};
