//! Gate-count tables, with the diagonalized circuits audited against their logs.

use std::path::PathBuf;

use histsim::depth::{
    audit_gate_log, diagonalized_counts, diagonalized_model, render_csv, render_markdown, trotter_counts, DepthRow,
};
use histsim::vhd::{model_hamiltonian, CartanAnsatz, DiagonalizedHistoryBuilder};

use super::Ctx;
use crate::config::{DepthParams, ExperimentConfig};
use crate::error::CliError;
use crate::output::Table;

pub fn run_depth(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let p: DepthParams = cfg.params()?;
    if p.n.is_empty() || p.log_n.is_empty() || p.log_n.iter().any(|&k| k == 0 || k > 40) {
        return Err(CliError::Config("params: need system sizes and log_n values in 1..=40".into()));
    }
    let mut rows = Vec::new();
    for &n in &p.n {
        let model = if p.l_per_site { histsim::depth::GateCountModel { l: n as f64, ..p.model.clone() } } else { p.model.clone() };
        for &k in &p.log_n {
            let rep = trotter_counts(&model.with_n_times(1 << k))?;
            rows.push(DepthRow::new(n, "trotter", &rep));
        }
    }
    let mut diag = Table::create(
        &ctx.out,
        "depth_diagonalized.csv",
        &["n", "layers", "m", "entanglement_only", "controlled_rotations", "w_gates", "hadamards", "model_total", "logged_total"],
    )?;
    for d in &p.diagonalized {
        let a = CartanAnsatz::new(d.n, d.layers)?;
        let b = DiagonalizedHistoryBuilder::new(&model_hamiltonian(&a), a.clone(), 1e-12)?.entanglement_only(d.entanglement_only);
        let logged = audit_gate_log(&b.circuit(d.m, 0.1)?).counts;
        let c = diagonalized_counts(d.n as u64, d.m as u64, a.n_gates() as u64, d.entanglement_only);
        if logged != diagonalized_model(d.n, d.m, d.layers, d.entanglement_only) || logged.total() as u64 != c.total {
            return Err(CliError::Numeric(format!("n={} L={} m={}: gate log disagrees with the model", d.n, d.layers, d.m)));
        }
        diag.row([
            d.n.to_string(),
            d.layers.to_string(),
            d.m.to_string(),
            d.entanglement_only.to_string(),
            c.controlled_rotations.to_string(),
            c.w_gates.to_string(),
            c.hadamards.to_string(),
            c.total.to_string(),
            logged.total().to_string(),
        ])?;
    }
    let csv_path = ctx.out.join("depth.csv");
    std::fs::write(&csv_path, render_csv(&rows)?)?;
    let md_path = ctx.out.join("depth.md");
    std::fs::write(&md_path, render_markdown(&rows))?;
    Ok(vec![csv_path, md_path, diag.finish()?])
}
