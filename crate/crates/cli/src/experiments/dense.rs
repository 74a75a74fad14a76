//! Dense history-state experiments on small registers.

use std::path::PathBuf;

use histsim::hamiltonians::EnergyComponents;
use histsim::histstate::{
    build_history_state, build_history_state_circuit, check_majorization, entanglement_loschmidt_bound,
    fluctuation_bound, linear_entropy,
};
use histsim::protocols::{
    estimate_f_parallel, estimate_f_sequential, estimate_loschmidt_parallel, estimate_loschmidt_sequential,
    f_direct, loschmidt_direct, EstimateResult,
};

use super::Ctx;
use crate::config::{pauli_sum, DenseParams, EstimateFParams, ExperimentConfig, LoschmidtParams};
use crate::error::CliError;
use crate::output::{finite, num, Table};

/// Deviation above which two routes to the same state count as a numeric failure.
const ROUTE_TOL: f64 = 1e-9;
/// Slack allowed on inequality checks.
const BOUND_TOL: f64 = 1e-10;

pub fn run_history(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let p: DenseParams = cfg.params()?;
    p.validate()?;
    let h = p.model.build(ctx.seed)?;
    let psi = p.state.build(h.n_qubits(), ctx.seed)?;
    let eps = p.epsilon.values("epsilon")?;
    let lbar = EnergyComponents::new(&h, &psi)?.loschmidt_bar();
    let mut t = Table::create(
        &ctx.out,
        "history.csv",
        &["m", "n_times", "epsilon", "e2", "purity_t", "l_bar", "l_tilde", "circuit_deviation", "majorization_violation"],
    )?;
    for &m in &p.m {
        for &e in &eps {
            let direct = build_history_state(&h, &psi, m, e)?;
            let circuit = build_history_state_circuit(&h, &psi, m, e)?;
            let dev = (direct.state.amplitudes() - circuit.state.amplitudes()).norm();
            if dev > ROUTE_TOL {
                return Err(CliError::Numeric(format!("m={m} eps={e}: circuit and direct states differ by {dev:e}")));
            }
            let e2 = linear_entropy(&direct)?;
            let lt = loschmidt_direct(&h, &psi, 1 << m, e)?;
            let maj = check_majorization(&direct, &h)?;
            if maj.max_violation > BOUND_TOL {
                return Err(CliError::Numeric(format!("m={m} eps={e}: majorization violated by {:e}", maj.max_violation)));
            }
            finite("history", &[e2, lt, dev, maj.max_violation])?;
            t.row([
                m.to_string(),
                (1usize << m).to_string(),
                num(e),
                num(e2),
                num(1.0 - e2),
                num(lbar),
                num(lt),
                num(dev),
                num(maj.max_violation),
            ])?;
        }
    }
    Ok(vec![t.finish()?])
}

pub fn run_entanglement(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let p: DenseParams = cfg.params()?;
    p.validate()?;
    let h = p.model.build(ctx.seed)?;
    let psi = p.state.build(h.n_qubits(), ctx.seed)?;
    let eps = p.epsilon.values("epsilon")?;
    let o = p.observable.as_deref().map(|t| pauli_sum(t, "observable")).transpose()?;
    let mut t = Table::create(
        &ctx.out,
        "entanglement.csv",
        &["m", "n_times", "epsilon", "e2", "one_minus_l_bar", "slack", "sigma2", "delta2", "bound_l_bar", "bound_purity"],
    )?;
    for &m in &p.m {
        for &e in &eps {
            let hs = build_history_state(&h, &psi, m, e)?;
            let b = entanglement_loschmidt_bound(&hs, &h, &psi)?;
            if b.slack < -BOUND_TOL {
                return Err(CliError::Numeric(format!("m={m} eps={e}: E2 exceeds 1 - Lbar by {:e}", -b.slack)));
            }
            let mut row = vec![
                m.to_string(),
                (1usize << m).to_string(),
                num(e),
                num(b.e2),
                num(1.0 - b.lbar),
                num(b.slack),
            ];
            match &o {
                Some(o) => {
                    let f = fluctuation_bound(&hs, &h, &psi, o)?;
                    if f.sigma2 > f.bound_lbar + BOUND_TOL || f.bound_lbar > f.bound + BOUND_TOL {
                        return Err(CliError::Numeric(format!("m={m} eps={e}: fluctuation bound chain violated")));
                    }
                    finite("entanglement", &[f.sigma2, f.delta2, f.bound])?;
                    row.extend([num(f.sigma2), num(f.delta2), num(f.bound_lbar), num(f.bound)]);
                }
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            t.row(row)?;
        }
    }
    Ok(vec![t.finish()?])
}

fn estimate_row(m: usize, e: f64, protocol: &str, r: &EstimateResult) -> Result<Vec<String>, CliError> {
    finite(protocol, &[r.value.re, r.value.im, r.stderr])?;
    Ok(vec![
        m.to_string(),
        (1usize << m).to_string(),
        num(e),
        protocol.to_string(),
        num(r.value.re),
        num(r.value.im),
        num(r.stderr),
        r.shots_used.to_string(),
    ])
}

const ESTIMATE_HEADER: [&str; 8] = ["m", "n_times", "epsilon", "protocol", "re", "im", "stderr", "shots_used"];

pub fn run_estimate_f(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let p: EstimateFParams = cfg.params()?;
    let h = p.model.build(ctx.seed)?;
    let rho = p.state.build(h.n_qubits(), ctx.seed)?.to_density();
    let (o1, o2) = (pauli_sum(&p.o1, "o1")?, pauli_sum(&p.o2, "o2")?);
    let est = p.estimator.config(ctx.seed)?;
    let eps = p.epsilon.values("epsilon")?;
    let mut t = Table::create(&ctx.out, "estimate_f.csv", &ESTIMATE_HEADER)?;
    for &m in &p.m {
        for &e in &eps {
            let par = estimate_f_parallel(&h, &rho, &o1, &o2, p.omega, m, e, &est)?;
            let seq = estimate_f_sequential(&h, &rho, &o1, &o2, p.omega, 1 << m, e, &est)?;
            let exact = f_direct(&h, &rho, &o1, &o2, p.omega, 1 << m, e)?;
            t.row(estimate_row(m, e, "parallel", &par)?)?;
            t.row(estimate_row(m, e, "sequential", &seq)?)?;
            t.row(estimate_row(m, e, "direct", &EstimateResult { value: exact, stderr: 0.0, shots_used: 0, ..par })?)?;
        }
    }
    Ok(vec![t.finish()?])
}

pub fn run_loschmidt(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let p: LoschmidtParams = cfg.params()?;
    let h = p.model.build(ctx.seed)?;
    let psi = p.state.build(h.n_qubits(), ctx.seed)?;
    let est = p.estimator.config(ctx.seed)?;
    let eps = p.epsilon.values("epsilon")?;
    let mut t = Table::create(&ctx.out, "loschmidt.csv", &ESTIMATE_HEADER)?;
    for &m in &p.m {
        for &e in &eps {
            let par = estimate_loschmidt_parallel(&h, &psi, m, e, &est)?;
            let seq = estimate_loschmidt_sequential(&h, &psi, 1 << m, e, &est)?;
            let exact = loschmidt_direct(&h, &psi, 1 << m, e)?;
            t.row(estimate_row(m, e, "parallel", &par)?)?;
            t.row(estimate_row(m, e, "sequential", &seq)?)?;
            let direct = EstimateResult { value: exact.into(), stderr: 0.0, shots_used: 0, ..par };
            t.row(estimate_row(m, e, "direct", &direct)?)?;
        }
    }
    Ok(vec![t.finish()?])
}
