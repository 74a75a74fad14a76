//! Shot-scaling benchmark of the sampled estimators on one random instance.

use std::path::PathBuf;

use serde::Serialize;

use histsim::hamiltonians::random_pauli_hamiltonian;
use histsim::histstate::{build_history_state, linear_entropy};
use histsim::protocols::{
    cell_rng, estimate_f_parallel, estimate_f_sequential, estimate_loschmidt_parallel, estimate_loschmidt_sequential,
    estimate_purity_shadows, f_direct, loschmidt_direct, EstimateResult, EstimatorConfig,
};
use histsim::qcore::{StateVector, C64};

use super::Ctx;
use crate::config::{BenchParams, ExperimentConfig};
use crate::error::CliError;
use crate::output::write_json;

#[derive(Serialize)]
struct ShotPoint {
    shots: u64,
    mean_re: f64,
    mean_im: f64,
    /// Average of the estimator's own standard error.
    mean_stderr: f64,
    /// Spread of the estimates across repeats.
    empirical_std: f64,
}

#[derive(Serialize)]
struct ProtocolRecord {
    protocol: &'static str,
    exact_re: f64,
    exact_im: f64,
    points: Vec<ShotPoint>,
    /// Log-log slope of `mean_stderr` against shots; `-1/2` for unbiased sampling.
    slope_reported: f64,
    slope_empirical: f64,
}

#[derive(Serialize)]
struct BenchReport {
    n: usize,
    m: usize,
    epsilon: f64,
    seed: u64,
    /// `|parallel - sequential|` of the exact-mode Loschmidt averages.
    loschmidt_exact_gap: f64,
    protocols: Vec<ProtocolRecord>,
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

fn scan(
    protocol: &'static str,
    exact: C64,
    p: &BenchParams,
    seed: u64,
    mut f: impl FnMut(u64, u64) -> histsim::Result<EstimateResult>,
) -> Result<ProtocolRecord, CliError> {
    let mut points = Vec::new();
    for &s in &p.shots {
        let vals = (0..p.repeats).map(|r| f(s, seed.wrapping_add(r))).collect::<histsim::Result<Vec<_>>>()?;
        let k = vals.len() as f64;
        let mean = vals.iter().map(|v| v.value).sum::<C64>() / k;
        let var = vals.iter().map(|v| (v.value - mean).norm_sqr()).sum::<f64>() / (k - 1.0);
        points.push(ShotPoint {
            shots: s,
            mean_re: mean.re,
            mean_im: mean.im,
            mean_stderr: vals.iter().map(|v| v.stderr).sum::<f64>() / k,
            empirical_std: var.sqrt(),
        });
    }
    let x: Vec<f64> = points.iter().map(|q| q.shots as f64).collect();
    let rep: Vec<f64> = points.iter().map(|q| q.mean_stderr).collect();
    let emp: Vec<f64> = points.iter().map(|q| q.empirical_std).collect();
    let (slope_reported, slope_empirical) =
        if x.len() > 1 { (log_slope(&x, &rep), log_slope(&x, &emp)) } else { (f64::NAN, f64::NAN) };
    Ok(ProtocolRecord { protocol, exact_re: exact.re, exact_im: exact.im, points, slope_reported, slope_empirical })
}

pub fn run_protocol_bench(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let p: BenchParams = cfg.params()?;
    p.validate()?;
    let mut rng = cell_rng(ctx.seed, 0);
    let h = random_pauli_hamiltonian(p.n, 2 * p.n + 2, &mut rng)?;
    let psi = StateVector::random(p.n, &mut rng)?;
    let o = random_pauli_hamiltonian(p.n, 3, &mut rng)?;
    let rho = psi.to_density();
    let (m, eps, nt) = (p.m, p.epsilon, 1usize << p.m);
    let omega = 0.3;

    let ex = EstimatorConfig::exact();
    let gap = (estimate_loschmidt_parallel(&h, &psi, m, eps, &ex)?.value
        - estimate_loschmidt_sequential(&h, &psi, nt, eps, &ex)?.value)
        .norm();
    if gap > 1e-10 {
        return Err(CliError::Numeric(format!("exact Loschmidt estimators differ by {gap:e}")));
    }
    let f_exact = f_direct(&h, &rho, &o, &o, omega, nt, eps)?;
    let l_exact = C64::new(loschmidt_direct(&h, &psi, nt, eps)?, 0.0);
    let hs = build_history_state(&h, &psi, m, eps)?;
    let purity = C64::new(1.0 - linear_entropy(&hs)?, 0.0);
    let sampled = EstimatorConfig::sampled;
    let protocols = vec![
        scan("f-parallel", f_exact, &p, ctx.seed, |s, seed| {
            estimate_f_parallel(&h, &rho, &o, &o, omega, m, eps, &sampled(s, seed))
        })?,
        scan("f-sequential", f_exact, &p, ctx.seed, |s, seed| {
            estimate_f_sequential(&h, &rho, &o, &o, omega, nt, eps, &sampled(s, seed))
        })?,
        scan("loschmidt-parallel", l_exact, &p, ctx.seed, |s, seed| {
            estimate_loschmidt_parallel(&h, &psi, m, eps, &sampled(s, seed))
        })?,
        scan("loschmidt-sequential", l_exact, &p, ctx.seed, |s, seed| {
            estimate_loschmidt_sequential(&h, &psi, nt, eps, &sampled(s, seed))
        })?,
        scan("shadow-purity", purity, &p, ctx.seed, |s, seed| estimate_purity_shadows(&hs, s as usize, seed))?,
    ];
    let report = BenchReport { n: p.n, m, epsilon: eps, seed: ctx.seed, loschmidt_exact_gap: gap, protocols };
    Ok(vec![write_json(&ctx.out, "protocol_bench.json", &report)?])
}
