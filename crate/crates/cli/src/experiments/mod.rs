mod bench;
mod dense;
mod depth;
mod ff;
mod vhd;

use std::path::PathBuf;

pub use bench::run_protocol_bench;
pub use dense::{run_entanglement, run_estimate_f, run_history, run_loschmidt};
pub use depth::run_depth;
pub use ff::run_ff_sweep;
pub use vhd::run_vhd;

/// Resolved run settings shared by every experiment.
pub struct Ctx {
    pub out: PathBuf,
    pub seed: u64,
}
