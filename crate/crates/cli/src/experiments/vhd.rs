//! Variational diagonalization of the open Aubry-Andre chain.

use std::path::PathBuf;

use serde::Serialize;

use histsim::vhd::{layer_sweep, off_diagonal_max, vhd_target, vhd_train, CartanAnsatz, TrainConfig};

use super::Ctx;
use crate::config::{ExperimentConfig, VhdParams};
use crate::error::CliError;
use crate::output::{finite, num, write_json, Table};

#[derive(Serialize)]
struct TrainedModel<'a> {
    n: usize,
    j: f64,
    lambda: f64,
    layers: usize,
    train: &'a TrainConfig,
    best_run: usize,
    best_loss: f64,
    converged_runs: usize,
    off_diagonal_max: f64,
    params: &'a CartanAnsatz,
}

pub fn run_vhd(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let mut p: VhdParams = cfg.params()?;
    if p.lambdas.is_empty() || p.layers == 0 || p.layer_sweep.contains(&0) {
        return Err(CliError::Config("params: need lambdas, layers >= 1 and positive sweep layers".into()));
    }
    p.train.seed = ctx.seed;
    let mut written = Vec::new();
    let mut losses = Table::create(&ctx.out, "vhd_loss.csv", &["lambda", "run_id", "iter", "loss"])?;
    let mut audit = Table::create(&ctx.out, "vhd_offdiag.csv", &["lambda", "best_run", "best_loss", "converged_runs", "off_diagonal_max"])?;
    let mut sweep = Table::create(&ctx.out, "vhd_layer_sweep.csv", &["lambda", "layers", "best_loss"])?;
    for &lambda in &p.lambdas {
        let h = vhd_target(p.n, p.j, lambda)?;
        let rep = vhd_train(&h, p.n, p.layers, &p.train)?;
        for run in &rep.runs {
            for &(it, loss) in &run.loss_history {
                losses.row([num(lambda), run.run_id.to_string(), it.to_string(), num(loss)])?;
            }
        }
        let off = off_diagonal_max(&h, &rep.best_params)?;
        finite("vhd-train", &[rep.best_loss, off])?;
        audit.row([num(lambda), rep.best_run.to_string(), num(rep.best_loss), rep.converged_runs.to_string(), num(off)])?;
        let model = TrainedModel {
            n: p.n,
            j: p.j,
            lambda,
            layers: p.layers,
            train: &p.train,
            best_run: rep.best_run,
            best_loss: rep.best_loss,
            converged_runs: rep.converged_runs,
            off_diagonal_max: off,
            params: &rep.best_params,
        };
        written.push(write_json(&ctx.out, &format!("vhd_params_lambda_{lambda}.json"), &model)?);
        for (l, best) in layer_sweep(&h, p.n, &p.layer_sweep, &p.train)? {
            sweep.row([num(lambda), l.to_string(), num(best)])?;
        }
    }
    written.extend([losses.finish()?, audit.finish()?, sweep.finish()?]);
    Ok(written)
}
