//! Simulation toolkit for history states: a clock register entangled with a
//! system evolved to every time step at once, and the estimators that read
//! time-averaged quantities off it.
//!
//! Qubit order is big-endian throughout: qubit 0 is the most significant bit
//! of a basis index and the leftmost Kronecker factor.

pub mod depth;
pub mod error;
pub mod freefermion;
pub mod hamiltonians;
pub mod histstate;
pub mod protocols;
pub mod qcore;
pub mod vhd;

pub use error::{Error, Result};
pub use qcore::{C64, CMatrix};
