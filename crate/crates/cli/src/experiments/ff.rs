//! Resumable free-fermion sweep.
//!
//! Rows are keyed by `(lambda, log_n, epsilon)` in grid order. A rerun keeps
//! every complete field-strength block already on disk, drops a trailing
//! partial block and appends the rest, so rows are never duplicated or
//! reordered.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use histsim::freefermion::{sweep_lambda, OneBodyObservable, SingleParticleState, SweepGrid, SweepPoint};
use histsim::hamiltonians::AubryAndreParams;

use super::Ctx;
use crate::config::{ExperimentConfig, FfSweepParams};
use crate::error::CliError;
use crate::output::{finite, num, Table};

const HEADER: [&str; 9] = ["lambda", "log_n", "epsilon", "l_tilde", "l_bar", "purity_s", "e2", "sigma2", "bound"];

fn key(lambda: f64, log_n: u32, epsilon: f64) -> [String; 3] {
    [num(lambda), log_n.to_string(), num(epsilon)]
}

fn row(p: &SweepPoint) -> Result<Vec<String>, CliError> {
    finite("ff-sweep", &[p.l_tilde, p.l_bar, p.purity_s, p.sigma2, p.bound])?;
    let mut r: Vec<String> = key(p.lambda, p.log_n, p.epsilon).into();
    r.extend([num(p.l_tilde), num(p.l_bar), num(p.purity_s), num(p.e2), num(p.sigma2), num(p.bound)]);
    Ok(r)
}

/// Complete lambda blocks already present, as raw records.
fn existing_blocks(path: &Path, grid: &SweepGrid) -> Result<Vec<csv::StringRecord>, CliError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path)?;
    if reader.headers()?.iter().ne(HEADER) {
        return Err(CliError::Config(format!("{}: existing file has a different header", path.display())));
    }
    let expected = grid.lambdas.iter().flat_map(|&l| {
        grid.log_ns.iter().flat_map(move |&k| grid.epsilons.iter().map(move |&e| key(l, k, e)))
    });
    let mut kept = Vec::new();
    for (rec, want) in reader.records().zip(expected) {
        let rec = rec?;
        if rec.len() != HEADER.len() || rec.iter().take(3).ne(want.iter().map(String::as_str)) {
            return Err(CliError::Config(format!(
                "{}: row {} does not match the configured grid",
                path.display(),
                kept.len() + 1
            )));
        }
        kept.push(rec);
    }
    let block = grid.log_ns.len() * grid.epsilons.len();
    kept.truncate(kept.len() / block * block);
    Ok(kept)
}

pub fn run_ff_sweep(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let p: FfSweepParams = cfg.params()?;
    if p.log_n.is_empty() || p.chunk == 0 {
        return Err(CliError::Config("params.log_n must be non-empty and params.chunk positive".into()));
    }
    if p.log_n.iter().any(|&k| k > 24) {
        return Err(CliError::Config("params.log_n: values above 24 are not supported".into()));
    }
    let grid = SweepGrid { lambdas: p.lambda.values("lambda")?, log_ns: p.log_n.clone(), epsilons: p.epsilon.values("epsilon")? };
    let base = AubryAndreParams::new(p.n, p.j, 0.0, p.boundary);
    let psi = SingleParticleState::localized(p.n, &p.sites).map_err(|e| CliError::Config(format!("params.sites: {e}")))?;
    let o = OneBodyObservable::hopping(p.n, p.bond.0, p.bond.1).map_err(|e| CliError::Config(format!("params.bond: {e}")))?;

    let path = ctx.out.join("ff_sweep.csv");
    let kept = existing_blocks(&path, &grid)?;
    let done = kept.len() / (grid.log_ns.len() * grid.epsilons.len());
    let mut t = Table::create(&ctx.out, "ff_sweep.csv", &HEADER)?;
    for rec in &kept {
        t.row(rec)?;
    }
    for chunk in grid.lambdas[done..].chunks(p.chunk) {
        let blocks = chunk
            .par_iter()
            .map(|&l| sweep_lambda(&base, l, &grid, &psi, &o))
            .collect::<Result<Vec<_>, _>>()?;
        for pt in blocks.iter().flatten() {
            t.row(row(pt)?)?;
        }
        t.flush()?;
    }
    Ok(vec![t.finish()?])
}
