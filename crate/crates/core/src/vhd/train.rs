use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qcore::{max_abs, PauliSum};
use crate::{Error, Result};

use super::ansatz::CartanAnsatz;
use super::cost::{fold_gates, Engine, vhd_gradient};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr_alpha: f64,
    pub lr_beta: f64,
    pub max_iters: usize,
    pub stop_loss: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Share one angle between the XY and YX gate of a bond.
    pub tied: bool,
    /// Keep every `record_every`-th loss; the last one is always kept.
    pub record_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_alpha: 0.1,
            lr_beta: 0.1,
            max_iters: 100_000,
            stop_loss: 1e-14,
            restarts: 10,
            seed: 0,
            tied: false,
            record_every: 1,
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.lr_alpha > 0.0 && self.lr_beta > 0.0) {
            return Err(Error::Invalid("learning rates must be positive".into()));
        }
        if !(self.stop_loss > 0.0) {
            return Err(Error::Invalid("stop_loss must be positive".into()));
        }
        if self.restarts == 0 || self.record_every == 0 {
            return Err(Error::Invalid("restarts and record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// One randomly initialized optimization.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub run_id: usize,
    /// `(iteration, loss)` pairs; iteration 0 is the initial point.
    pub loss_history: Vec<(usize, f64)>,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub params: CartanAnsatz,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub runs: Vec<RunReport>,
    pub best_loss: f64,
    pub best_run: usize,
    pub best_params: CartanAnsatz,
    pub converged_runs: usize,
}

/// Standard ADAM with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, len: usize) -> Self {
        Adam { lr, b1: 0.9, b2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.b1.powi(self.t);
        let c2 = 1.0 - self.b2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * grad[i];
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Random start: `alpha ~ U[0, 2pi)`, `beta ~ U[-b, b]` with `b = max |H_ij|`.
pub fn initial_ansatz(n: usize, layers: usize, tied: bool, beta_scale: f64, rng: &mut impl Rng) -> Result<CartanAnsatz> {
    let a = CartanAnsatz::with_tying(n, layers, tied)?;
    let alpha = (0..a.n_params()).map(|_| rng.random_range(0.0..TAU)).collect();
    let beta = (0..n)
        .map(|_| if beta_scale > 0.0 { rng.random_range(-beta_scale..=beta_scale) } else { 0.0 })
        .collect();
    a.with_params(alpha, beta)
}

fn train_one(h: &PauliSum, engine: &Engine, start: CartanAnsatz, cfg: &TrainConfig, run_id: usize) -> Result<RunReport> {
    let mut a = start;
    let mut opt_a = Adam::new(cfg.lr_alpha, a.n_params());
    let mut opt_b = Adam::new(cfg.lr_beta, a.n);
    let mut history = Vec::new();
    let mut iter = 0;
    loop {
        let (loss, grad_a, grad_b) = match engine {
            Engine::Quadratic(q) => {
                let cg = q.cost_grad(&a.gate_angles(), &a.beta);
                (cg.cost, fold_gates(&a, &cg.d_gates), cg.d_beta)
            }
            Engine::Dense { .. } => {
                let loss = engine.cost(&a, &a.gate_angles())?;
                let g = vhd_gradient(h, &a)?;
                (loss, g.alpha, g.beta)
            }
        };
        if !loss.is_finite() {
            return Err(Error::Validation(format!("non-finite loss at iteration {iter}")));
        }
        let done = loss < cfg.stop_loss || iter >= cfg.max_iters;
        if iter % cfg.record_every == 0 || done {
            history.push((iter, loss));
        }
        if done {
            return Ok(RunReport {
                run_id,
                loss_history: history,
                final_loss: loss,
                iterations: iter,
                converged: loss < cfg.stop_loss,
                params: a,
            });
        }
        opt_a.step(&mut a.alpha, &grad_a);
        opt_b.step(&mut a.beta, &grad_b);
        iter += 1;
    }
}

/// Trains `cfg.restarts` independent runs in parallel.
///
/// Run `r` draws its start from the ChaCha8 stream `r` of `cfg.seed`, so
/// results do not depend on thread scheduling.
pub fn vhd_train(h: &PauliSum, n: usize, layers: usize, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let shape = CartanAnsatz::with_tying(n, layers, cfg.tied)?;
    let engine = Engine::new(h, &shape)?;
    let beta_scale = max_abs(&h.to_matrix()?);
    let runs = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let start = initial_ansatz(n, layers, cfg.tied, beta_scale, &mut rng)?;
            train_one(h, &engine, start, cfg, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let best_run = runs
        .iter()
        .min_by(|x, y| x.final_loss.total_cmp(&y.final_loss))
        .map(|r| r.run_id)
        .expect("at least one restart");
    Ok(TrainReport {
        best_loss: runs[best_run].final_loss,
        best_params: runs[best_run].params.clone(),
        best_run,
        converged_runs: runs.iter().filter(|r| r.converged).count(),
        runs,
    })
}

/// Best final loss for each layer count.
pub fn layer_sweep(h: &PauliSum, n: usize, layers: &[usize], cfg: &TrainConfig) -> Result<Vec<(usize, f64)>> {
    layers.iter().map(|&l| Ok((l, vhd_train(h, n, l, cfg)?.best_loss))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_xy_spin, XYParams};
    use crate::vhd::{off_diagonal_max, vhd_cost, vhd_target};

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut x = vec![3.0, -2.0];
        let mut opt = Adam::new(0.1, 2);
        for _ in 0..2000 {
            let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            opt.step(&mut x, &g);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn two_qubit_xy_toy_converges() {
        let h = build_xy_spin(&XYParams { n: 2, ax: vec![0.8], ay: vec![0.3], az: vec![0.5, -0.4] })
            .unwrap()
            .traceless();
        let cfg = TrainConfig { max_iters: 20_000, stop_loss: 1e-13, restarts: 4, seed: 1, ..Default::default() };
        let rep = vhd_train(&h, 2, 1, &cfg).unwrap();
        assert!(rep.best_loss < 1e-12, "best {}", rep.best_loss);
        assert!(rep.converged_runs >= 1);
        assert!((vhd_cost(&h, &rep.best_params).unwrap() - rep.best_loss).abs() < 1e-12);
    }

    #[test]
    fn small_chain_diagonalizes() {
        // Strong fields keep the single-particle magnitudes well separated.
        let h = build_xy_spin(&XYParams {
            n: 4,
            ax: vec![0.5, 0.4, 0.6],
            ay: vec![0.5, 0.4, 0.6],
            az: vec![1.6, -0.7, 2.3, 0.4],
        })
        .unwrap();
        let cfg = TrainConfig { max_iters: 20_000, stop_loss: 1e-13, restarts: 2, seed: 3, ..Default::default() };
        let rep = vhd_train(&h, 4, 4, &cfg).unwrap();
        assert!(rep.best_loss < 1e-12, "best {}", rep.best_loss);
        let off = off_diagonal_max(&h, &rep.best_params).unwrap();
        assert!(off <= (16.0 * rep.best_loss).sqrt() + 1e-14);
    }

    #[test]
    fn runs_are_deterministic_and_recorded() {
        let h = vhd_target(3, 2.0, 2.0).unwrap();
        let cfg = TrainConfig { max_iters: 50, restarts: 3, seed: 9, record_every: 10, ..Default::default() };
        let r1 = vhd_train(&h, 3, 2, &cfg).unwrap();
        let r2 = vhd_train(&h, 3, 2, &cfg).unwrap();
        for (a, b) in r1.runs.iter().zip(&r2.runs) {
            assert_eq!(a.loss_history, b.loss_history);
            assert_eq!(a.loss_history.first().unwrap().0, 0);
            assert_eq!(a.loss_history.last().unwrap().0, 50);
            assert_eq!(a.loss_history.len(), 6);
        }
        let min = r1.runs.iter().map(|r| r.final_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(r1.best_loss, min);
    }

    #[test]
    fn dense_fallback_trains() {
        let mut h = PauliSum::new(2);
        h.add(0.5, "ZZ").unwrap();
        h.add(0.3, "ZI").unwrap();
        let cfg = TrainConfig { max_iters: 300, restarts: 1, seed: 2, ..Default::default() };
        let rep = vhd_train(&h, 2, 1, &cfg).unwrap();
        assert!(rep.runs[0].loss_history.len() > 1);
        assert!(rep.best_loss.is_finite());
    }

    #[test]
    fn bad_config_is_rejected() {
        let h = vhd_target(2, 2.0, 1.0).unwrap();
        let cfg = TrainConfig { lr_alpha: 0.0, ..Default::default() };
        assert!(vhd_train(&h, 2, 1, &cfg).is_err());
    }
}
