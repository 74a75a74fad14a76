//! Single-particle engine for the quasi-periodic XX chain.
//!
//! In the one-excitation sector the chain is a tight-binding model with an
//! `n x n` hopping matrix, so Loschmidt echoes, history-state purities and
//! one-body fluctuations are available for hundreds of sites.
//!
//! Spin conventions: spin down is `|1>` and is the fermionic vacuum; an
//! excitation on site `j` is `|0>` on qubit `j - 1`. The spin chain at field
//! strength `lambda` restricted to one excitation equals the hopping matrix at
//! `lambda / 2` plus `(lambda / 4) sum_j cos(2 pi alpha j)`.

use std::sync::OnceLock;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonians::{AubryAndreParams, Boundary, EnergyComponents, Fluctuations};
use crate::qcore::{hermitian_eig, max_abs, CMatrix, Spectrum, StateVector, C64};
use crate::{Error, Result};

/// Fermion-number parity sector `sigma = e^{i pi N}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    /// `sigma = +1`: the periodic bond changes sign.
    Even,
    /// `sigma = -1`, which contains all single-particle states.
    Odd,
}

/// Hopping matrix `M_sigma` with `H_sigma = c^dagger M_sigma c`; its
/// eigen-decomposition is computed once on first use.
#[derive(Debug)]
pub struct HoppingMatrix {
    matrix: CMatrix,
    pub boundary: Boundary,
    pub parity: Parity,
    spectrum: OnceLock<Spectrum>,
}

impl Clone for HoppingMatrix {
    fn clone(&self) -> Self {
        HoppingMatrix {
            matrix: self.matrix.clone(),
            boundary: self.boundary,
            parity: self.parity,
            spectrum: self.spectrum.clone(),
        }
    }
}

impl HoppingMatrix {
    pub fn from_matrix(matrix: CMatrix, boundary: Boundary, parity: Parity) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || max_abs(&(&matrix - matrix.adjoint())) > 1e-12 {
            return Err(Error::Validation("hopping matrix must be square and hermitian".into()));
        }
        Ok(HoppingMatrix { matrix, boundary, parity, spectrum: OnceLock::new() })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum
            .get_or_init(|| hermitian_eig(&self.matrix).expect("hopping matrix is hermitian"))
    }

    /// Degeneracy clustering tolerance `1e-10 max|M_ij|`.
    pub fn cluster_tol(&self) -> f64 {
        1e-10 * max_abs(&self.matrix).max(f64::MIN_POSITIVE)
    }
}

/// Off-diagonal `J/2` on every bond, diagonal `lambda cos(2 pi alpha j)`.
pub fn build_hopping_matrix(p: &AubryAndreParams, parity: Parity) -> Result<HoppingMatrix> {
    p.validate()?;
    let n = p.n;
    let mut m = CMatrix::zeros(n, n);
    for (j, c) in p.field().into_iter().enumerate() {
        m[(j, j)] = C64::new(p.lambda * c, 0.0);
    }
    for s in 0..n - 1 {
        m[(s, s + 1)] = C64::new(p.j / 2.0, 0.0);
        m[(s + 1, s)] = C64::new(p.j / 2.0, 0.0);
    }
    if p.boundary == Boundary::Periodic {
        let sign = if parity == Parity::Even { -1.0 } else { 1.0 };
        m[(n - 1, 0)] += C64::new(sign * p.j / 2.0, 0.0);
        m[(0, n - 1)] += C64::new(sign * p.j / 2.0, 0.0);
    }
    HoppingMatrix::from_matrix(m, p.boundary, parity)
}

/// Field strength of the hopping matrix matching a spin chain at `lambda_spin`.
pub fn hopping_lambda_for_spin(lambda_spin: f64) -> f64 {
    lambda_spin / 2.0
}

/// Constant offset between the spin chain's one-excitation block and its hopping matrix.
pub fn single_excitation_shift(spin: &AubryAndreParams) -> f64 {
    spin.lambda / 4.0 * spin.field().iter().sum::<f64>()
}

/// Unit-norm amplitude vector over sites.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleParticleState {
    amps: DVector<C64>,
}

impl SingleParticleState {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amps);
        if (v.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("single-particle norm {} differs from 1", v.norm())));
        }
        Ok(SingleParticleState { amps: v })
    }

    /// Equal-weight superposition of the given 1-based sites.
    pub fn localized(n: usize, sites: &[usize]) -> Result<Self> {
        if sites.is_empty() || sites.iter().any(|&s| s == 0 || s > n) {
            return Err(Error::Invalid(format!("sites {sites:?} outside 1..={n}")));
        }
        let mut v = vec![C64::new(0.0, 0.0); n];
        let a = 1.0 / (sites.len() as f64).sqrt();
        for &s in sites {
            v[s - 1] += C64::new(a, 0.0);
        }
        Self::new(v)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn n(&self) -> usize {
        self.amps.len()
    }

    /// The same state as a `2^n` spin vector.
    pub fn to_spin_state(&self) -> Result<StateVector> {
        let n = self.n();
        crate::qcore::check_cap("spin embedding", n)?;
        let all = (1usize << n) - 1;
        let mut v = vec![C64::new(0.0, 0.0); 1 << n];
        for (j, a) in self.amps.iter().enumerate() {
            v[all ^ (1 << (n - 1 - j))] = *a;
        }
        StateVector::new(v)
    }
}

/// Hermitian one-body operator `O = sum_ij M_ij c_i^dagger c_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneBodyObservable {
    pub matrix: CMatrix,
}

impl OneBodyObservable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || max_abs(&(&matrix - matrix.adjoint())) > 1e-12 {
            return Err(Error::Validation("one-body observable must be hermitian".into()));
        }
        Ok(OneBodyObservable { matrix })
    }

    /// `c_i^dagger c_j + h.c.` for 1-based sites.
    pub fn hopping(n: usize, i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 || i > n || j > n || i == j {
            return Err(Error::Invalid(format!("hopping between sites {i} and {j} of {n}")));
        }
        let mut m = CMatrix::zeros(n, n);
        m[(i - 1, j - 1)] = C64::new(1.0, 0.0);
        m[(j - 1, i - 1)] = C64::new(1.0, 0.0);
        Self::new(m)
    }
}

fn check_len(m: &HoppingMatrix, psi: &SingleParticleState) -> Result<()> {
    if m.n() != psi.n() {
        return Err(Error::Dimension(format!("state on {} sites for a {}-site chain", psi.n(), m.n())));
    }
    Ok(())
}

/// `L(t) = |sum_k |<phi_k|psi>|^2 e^{-i E_k t}|^2` with the overlaps precomputed.
#[derive(Clone, Debug)]
pub struct LoschmidtKernel {
    energies: Vec<f64>,
    weights: Vec<f64>,
}

impl LoschmidtKernel {
    pub fn new(m: &HoppingMatrix, psi: &SingleParticleState) -> Result<Self> {
        check_len(m, psi)?;
        let spec = m.spectrum();
        let c = spec.coefficients(psi.amplitudes());
        Ok(LoschmidtKernel {
            energies: spec.eigenvalues.clone(),
            weights: c.iter().map(|z| z.norm_sqr()).collect(),
        })
    }

    pub fn at(&self, t: f64) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (e, w) in self.energies.iter().zip(&self.weights) {
            acc += C64::from_polar(*w, -e * t);
        }
        acc.norm_sqr()
    }

    /// `L(eps t)` for `t = 0..n_times`.
    pub fn series(&self, n_times: usize, epsilon: f64) -> Vec<f64> {
        (0..n_times).map(|t| self.at(epsilon * t as f64)).collect()
    }
}

pub fn loschmidt_t(m: &HoppingMatrix, psi: &SingleParticleState, t: f64) -> Result<f64> {
    Ok(LoschmidtKernel::new(m, psi)?.at(t))
}

fn components(m: &HoppingMatrix, psi: &SingleParticleState) -> Result<EnergyComponents> {
    check_len(m, psi)?;
    EnergyComponents::from_amplitudes(m.spectrum(), psi.amplitudes(), m.cluster_tol())
}

/// `sum_k |c_k|^4` with degenerate levels merged before squaring.
pub fn loschmidt_bar(m: &HoppingMatrix, psi: &SingleParticleState) -> Result<f64> {
    Ok(components(m, psi)?.loschmidt_bar())
}

/// `(1/N) sum_{t<N} L(eps t)`.
pub fn loschmidt_tilde(m: &HoppingMatrix, psi: &SingleParticleState, n_times: usize, epsilon: f64) -> Result<f64> {
    let k = LoschmidtKernel::new(m, psi)?;
    Ok(tilde_from_series(&k.series(n_times, epsilon)))
}

fn tilde_from_series(l: &[f64]) -> f64 {
    l.iter().sum::<f64>() / l.len() as f64
}

fn purity_from_series(l: &[f64]) -> f64 {
    let nf = l.len() as f64;
    let s: f64 = l.iter().enumerate().map(|(t, v)| (nf - t as f64) * v).sum();
    2.0 * s / (nf * nf) - 1.0 / nf
}

/// `Tr[rho_S^2] = (2/N^2) sum_{t<N} (N - t) L(eps t) - 1/N`.
pub fn purity_single_sum(m: &HoppingMatrix, psi: &SingleParticleState, n_times: usize, epsilon: f64) -> Result<f64> {
    if n_times == 0 {
        return Err(Error::Invalid("need at least one time step".into()));
    }
    let k = LoschmidtKernel::new(m, psi)?;
    Ok(purity_from_series(&k.series(n_times, epsilon)))
}

/// `(1/N^2) sum_{t,t'} |<psi(eps t')|psi(eps t)>|^2`, the double-sum oracle.
pub fn purity_double_sum(m: &HoppingMatrix, psi: &SingleParticleState, n_times: usize, epsilon: f64) -> Result<f64> {
    check_len(m, psi)?;
    let spec = m.spectrum();
    let states: Vec<DVector<C64>> = (0..n_times)
        .map(|t| {
            let u = spec.propagator(epsilon * t as f64);
            u * psi.amplitudes()
        })
        .collect();
    let mut acc = 0.0;
    for a in &states {
        for b in &states {
            acc += a.dotc(b).norm_sqr();
        }
    }
    Ok(acc / (n_times * n_times) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FermionFluctuations {
    pub sigma2: f64,
    pub delta2: f64,
    pub lbar: f64,
}

/// Infinite-time fluctuations of a one-body observable in a single-particle state.
pub fn observable_fluctuations(
    m: &HoppingMatrix,
    psi: &SingleParticleState,
    o: &OneBodyObservable,
) -> Result<FermionFluctuations> {
    let comps = components(m, psi)?;
    let Fluctuations { sigma2, delta2 } = comps.fluctuations(&o.matrix)?;
    Ok(FermionFluctuations { sigma2, delta2, lbar: comps.loschmidt_bar() })
}

/// One row of a parameter sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub log_n: u32,
    pub epsilon: f64,
    pub l_tilde: f64,
    pub l_bar: f64,
    pub purity_s: f64,
    pub e2: f64,
    pub sigma2: f64,
    /// `Delta^2 Tr[rho_S^2]`.
    pub bound: f64,
}

/// Grid of a sweep; rows are produced lambda-major, then `log_n`, then `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lambdas: Vec<f64>,
    pub log_ns: Vec<u32>,
    pub epsilons: Vec<f64>,
}

impl SweepGrid {
    /// `lo, lo + step, ...` up to `hi` inclusive, snapped to the step.
    pub fn range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| lo + step * k as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len() * self.log_ns.len() * self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluates every grid point for one field strength, reusing a single
/// eigen-decomposition and one Loschmidt series per `epsilon`.
pub fn sweep_lambda(
    base: &AubryAndreParams,
    lambda: f64,
    grid: &SweepGrid,
    psi: &SingleParticleState,
    o: &OneBodyObservable,
) -> Result<Vec<SweepPoint>> {
    let p = AubryAndreParams { lambda, ..base.clone() };
    let m = build_hopping_matrix(&p, Parity::Odd)?;
    let fl = observable_fluctuations(&m, psi, o)?;
    let kernel = LoschmidtKernel::new(&m, psi)?;
    let max_log = grid.log_ns.iter().copied().max().unwrap_or(0);
    let series: Vec<Vec<f64>> = grid.epsilons.iter().map(|&e| kernel.series(1 << max_log, e)).collect();
    let mut out = Vec::with_capacity(grid.log_ns.len() * grid.epsilons.len());
    for &log_n in &grid.log_ns {
        for (ei, &epsilon) in grid.epsilons.iter().enumerate() {
            let l = &series[ei][..1usize << log_n];
            let purity_s = purity_from_series(l);
            out.push(SweepPoint {
                lambda,
                log_n,
                epsilon,
                l_tilde: tilde_from_series(l),
                l_bar: fl.lbar,
                purity_s,
                e2: 1.0 - purity_s,
                sigma2: fl.sigma2,
                bound: fl.delta2 * purity_s,
            });
        }
    }
    Ok(out)
}

/// Full sweep, data-parallel over field strengths with deterministic row order.
pub fn sweep(
    base: &AubryAndreParams,
    grid: &SweepGrid,
    psi: &SingleParticleState,
    o: &OneBodyObservable,
) -> Result<Vec<SweepPoint>> {
    let rows = grid
        .lambdas
        .par_iter()
        .map(|&l| sweep_lambda(base, l, grid, psi, o))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Location of the steepest segment of `ys(xs)`, reported at its midpoint.
pub fn inflection_point(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    (0..xs.len() - 1)
        .max_by(|&a, &b| {
            let s = |i: usize| ((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).abs();
            s(a).total_cmp(&s(b))
        })
        .map(|i| 0.5 * (xs[i] + xs[i + 1]))
}
