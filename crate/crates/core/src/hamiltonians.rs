//! Model Hamiltonians and the spectral data every estimator is compared against.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qcore::{
    cluster_eigenvalues, hermitian_eig, max_abs, DenseOperator, DensityMatrix, Pauli, PauliString,
    PauliSum, Spectrum, StateVector, C64, CMatrix,
};
use crate::{Error, Result};

/// Golden-ratio modulation frequency of the quasi-periodic field.
pub fn golden_alpha() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Non-uniform XX chain with a quasi-periodic longitudinal field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AubryAndreParams {
    pub n: usize,
    pub j: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub boundary: Boundary,
}

impl AubryAndreParams {
    pub fn new(n: usize, j: f64, lambda: f64, boundary: Boundary) -> Self {
        AubryAndreParams { n, j, lambda, alpha: golden_alpha(), boundary }
    }

    /// Field profile `cos(2 pi alpha j)` for sites `j = 1..=n`.
    pub fn field(&self) -> Vec<f64> {
        (1..=self.n).map(|s| (2.0 * PI * self.alpha * s as f64).cos()).collect()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Invalid(format!("chain needs n >= 2, got {}", self.n)));
        }
        if self.n == 2 && self.boundary == Boundary::Periodic {
            return Err(Error::Invalid("periodic chain of 2 sites duplicates its only bond".into()));
        }
        Ok(())
    }

    /// Nearest-neighbour bonds as 0-based site pairs.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut b: Vec<_> = (0..self.n - 1).map(|s| (s, s + 1)).collect();
        if self.boundary == Boundary::Periodic {
            b.push((self.n - 1, 0));
        }
        b
    }
}

/// `H = J/4 sum_bonds (XX + YY) + lambda/4 sum_j cos(2 pi alpha j) (Z_j + 2)`.
pub fn build_aubry_andre_spin(p: &AubryAndreParams) -> Result<PauliSum> {
    p.validate()?;
    let n = p.n;
    let mut h = PauliSum::new(n);
    for (a, b) in p.bonds() {
        h.push(PauliString::on(n, p.j / 4.0, &[(a, Pauli::X), (b, Pauli::X)])?)?;
        h.push(PauliString::on(n, p.j / 4.0, &[(a, Pauli::Y), (b, Pauli::Y)])?)?;
    }
    let mut id = 0.0;
    for (s, c) in p.field().into_iter().enumerate() {
        h.push(PauliString::on(n, p.lambda / 4.0 * c, &[(s, Pauli::Z)])?)?;
        id += p.lambda / 2.0 * c;
    }
    h.push(PauliString::on(n, id, &[])?)?;
    Ok(h)
}

/// Open XY chain `sum a^x_j X_j X_{j+1} + a^y_j Y_j Y_{j+1} + sum a^z_j Z_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XYParams {
    pub n: usize,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub az: Vec<f64>,
}

pub fn build_xy_spin(p: &XYParams) -> Result<PauliSum> {
    let n = p.n;
    if n < 2 || p.ax.len() != n - 1 || p.ay.len() != n - 1 || p.az.len() != n {
        return Err(Error::Invalid(format!(
            "xy chain of {n} sites needs {} bond and {n} field coefficients",
            n.saturating_sub(1)
        )));
    }
    let mut h = PauliSum::new(n);
    for s in 0..n - 1 {
        h.push(PauliString::on(n, p.ax[s], &[(s, Pauli::X), (s + 1, Pauli::X)])?)?;
        h.push(PauliString::on(n, p.ay[s], &[(s, Pauli::Y), (s + 1, Pauli::Y)])?)?;
    }
    for s in 0..n {
        h.push(PauliString::on(n, p.az[s], &[(s, Pauli::Z)])?)?;
    }
    Ok(h)
}

/// Random Hermitian Pauli sum with `terms` strings and coefficients in `[-1, 1)`.
pub fn random_pauli_hamiltonian<R: Rng + ?Sized>(n: usize, terms: usize, rng: &mut R) -> Result<PauliSum> {
    let mut h = PauliSum::new(n);
    for _ in 0..terms {
        let letters: Vec<Pauli> = (0..n)
            .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)])
            .collect();
        h.push(PauliString::new(C64::new(rng.random_range(-1.0..1.0), 0.0), &letters)?)?;
    }
    Ok(h)
}

/// Default eigenvalue clustering tolerance, `1e-9 * max|H_ij|`.
pub fn default_cluster_tol(h: &CMatrix) -> f64 {
    1e-9 * max_abs(h).max(f64::MIN_POSITIVE)
}

/// Projection of a state onto the distinct energy eigenspaces of `H`.
///
/// `projections[k] = P_k |psi>`, so `weights[k] = |c_k|^2 = ||P_k psi||^2`.
#[derive(Clone, Debug)]
pub struct EnergyComponents {
    pub energies: Vec<f64>,
    pub projections: Vec<DVector<C64>>,
    pub weights: Vec<f64>,
}

impl EnergyComponents {
    pub fn from_spectrum(spec: &Spectrum, psi: &StateVector, tol: f64) -> Result<Self> {
        Self::from_amplitudes(spec, psi.amplitudes(), tol)
    }

    /// Same as [`EnergyComponents::from_spectrum`] for a raw vector of any dimension.
    pub fn from_amplitudes(spec: &Spectrum, psi: &DVector<C64>, tol: f64) -> Result<Self> {
        if psi.len() != spec.dim() {
            return Err(Error::Dimension(format!(
                "state of dim {} against spectrum of dim {}",
                psi.len(),
                spec.dim()
            )));
        }
        let coeffs = spec.coefficients(psi);
        let mut energies = Vec::new();
        let mut projections = Vec::new();
        let mut weights = Vec::new();
        for r in cluster_eigenvalues(&spec.eigenvalues, tol) {
            let mean = spec.eigenvalues[r.clone()].iter().sum::<f64>() / r.len() as f64;
            let mut v = DVector::from_element(spec.dim(), C64::new(0.0, 0.0));
            for k in r {
                v += spec.eigenvectors.column(k) * coeffs[k];
            }
            weights.push(v.norm_squared());
            energies.push(mean);
            projections.push(v);
        }
        Ok(EnergyComponents { energies, projections, weights })
    }

    pub fn new<H: DenseOperator + ?Sized>(h: &H, psi: &StateVector) -> Result<Self> {
        let m = h.to_dense()?;
        let spec = hermitian_eig(&m)?;
        Self::from_spectrum(&spec, psi, default_cluster_tol(&m))
    }

    /// Infinite-time Loschmidt average `sum_k |c_k|^4`.
    pub fn loschmidt_bar(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    /// Infinite-time fluctuations of `<O(t)>` and the squared spread of `O`
    /// on the support of the state.
    ///
    /// `sigma2 = sum_{k != k'} |<v_k|O|v_k'>|^2` with `v_k = P_k psi`, exact when
    /// no energy gap is repeated.
    pub fn fluctuations(&self, o: &CMatrix) -> Result<Fluctuations> {
        let dim = self.projections.first().map_or(0, |v| v.len());
        if o.nrows() != dim || o.ncols() != dim {
            return Err(Error::Dimension(format!(
                "observable of shape {}x{} against states of dim {dim}",
                o.nrows(),
                o.ncols()
            )));
        }
        let support: Vec<usize> = (0..self.weights.len())
            .filter(|&k| self.weights[k] > SUPPORT_WEIGHT)
            .collect();
        let k = support.len();
        let mut v = CMatrix::zeros(dim, k);
        for (col, &idx) in support.iter().enumerate() {
            v.set_column(col, &self.projections[idx]);
        }
        let gram = v.adjoint() * (o * &v);
        let mut sigma2 = 0.0;
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    sigma2 += gram[(a, b)].norm_sqr();
                }
            }
        }
        let norms: Vec<f64> = support.iter().map(|&i| self.weights[i].sqrt()).collect();
        let restricted = CMatrix::from_fn(k, k, |a, b| gram[(a, b)] / (norms[a] * norms[b]));
        let ev = hermitian_eig(&restricted)?.eigenvalues;
        let spread = match (ev.first(), ev.last()) {
            (Some(hi), Some(lo)) => hi - lo,
            _ => 0.0,
        };
        Ok(Fluctuations { sigma2, delta2: spread * spread })
    }

    /// `sum_k P_k |psi><psi| P_k`.
    pub fn dephased(&self) -> DensityMatrix {
        let dim = self.projections.first().map_or(1, |v| v.len());
        let mut rho = CMatrix::zeros(dim, dim);
        for v in &self.projections {
            rho += v * v.adjoint();
        }
        DensityMatrix::new_unchecked(rho)
    }
}

/// Energy weights below this are treated as outside the support of a state.
pub const SUPPORT_WEIGHT: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fluctuations {
    pub sigma2: f64,
    /// `(lambda_max - lambda_min)^2` of `O` restricted to the support.
    pub delta2: f64,
}

/// Infinite-time average of `|psi(t)><psi(t)|`: the state dephased in the energy eigenbasis.
pub fn dephased_state<H: DenseOperator + ?Sized>(h: &H, psi0: &StateVector) -> Result<DensityMatrix> {
    Ok(EnergyComponents::new(h, psi0)?.dephased())
}

/// Number of distinct eigenvalues and, when every gap is commensurate, the
/// smallest period `tau` with `exp(-i H tau)` proportional to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPeriod {
    pub distinct: usize,
    pub period: Option<f64>,
}

/// Largest denominator tried when searching for a common gap quantum.
const MAX_GAP_DENOMINATOR: usize = 256;

pub fn distinct_eigenvalue_count<H: DenseOperator + ?Sized>(h: &H, tol: Option<f64>) -> Result<SpectralPeriod> {
    let m = h.to_dense()?;
    let spec = hermitian_eig(&m)?;
    let tol = tol.unwrap_or_else(|| default_cluster_tol(&m));
    let levels: Vec<f64> = cluster_eigenvalues(&spec.eigenvalues, tol)
        .into_iter()
        .map(|r| spec.eigenvalues[r.start])
        .collect();
    let distinct = levels.len();
    let lowest = *levels.last().unwrap();
    let gaps: Vec<f64> = levels.iter().map(|e| e - lowest).filter(|g| *g > tol).collect();
    let Some(&gmin) = gaps.iter().min_by(|a, b| a.total_cmp(b)) else {
        return Ok(SpectralPeriod { distinct, period: None });
    };
    let quantum = (1..=MAX_GAP_DENOMINATOR).map(|q| gmin / q as f64).find(|w| {
        gaps.iter().all(|g| (g - (g / w).round() * w).abs() <= tol)
    });
    Ok(SpectralPeriod {
        distinct,
        period: quantum.map(|w| 2.0 * PI / w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::propagator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn aubry_andre_term_count_and_hermiticity() {
        let p = AubryAndreParams::new(4, 2.0, 1.0, Boundary::Periodic);
        let h = build_aubry_andre_spin(&p).unwrap();
        assert!(h.is_hermitian(0.0));
        let m = h.to_matrix().unwrap();
        assert!((&m - m.adjoint()).norm() < 1e-14);
        // 4 bonds x 2 + 4 fields + identity
        assert_eq!(h.terms().len(), 13);
        assert!(build_aubry_andre_spin(&AubryAndreParams::new(2, 1.0, 1.0, Boundary::Periodic)).is_err());
        assert!(build_aubry_andre_spin(&AubryAndreParams::new(1, 1.0, 1.0, Boundary::Open)).is_err());
    }

    #[test]
    fn conserves_excitation_number() {
        let p = AubryAndreParams::new(4, 2.0, 1.3, Boundary::Periodic);
        let m = build_aubry_andre_spin(&p).unwrap().to_matrix().unwrap();
        for r in 0..16usize {
            for c in 0..16usize {
                if m[(r, c)].norm() > 1e-14 {
                    assert_eq!(r.count_ones(), c.count_ones());
                }
            }
        }
    }

    #[test]
    fn dephased_state_is_time_average_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_pauli_hamiltonian(2, 4, &mut rng).unwrap();
        let psi = StateVector::random(2, &mut rng).unwrap();
        let comps = EnergyComponents::new(&h, &psi).unwrap();
        let rho = comps.dephased();
        assert!((rho.purity() - comps.loschmidt_bar()).abs() < 1e-12);
        // commutes with H and keeps the populations
        let m = h.to_matrix().unwrap();
        assert!((&m * rho.matrix() - rho.matrix() * &m).norm() < 1e-10);
        assert!((rho.expectation(&m).unwrap() - psi.expectation(&m).unwrap()).norm() < 1e-10);
        // long time average converges toward it
        let samples = 4000;
        let mut avg = CMatrix::zeros(4, 4);
        for k in 0..samples {
            let u = propagator(&h, 0.37 * k as f64).unwrap();
            avg += psi.apply_matrix(&u).unwrap().to_density().into_matrix();
        }
        avg /= C64::new(samples as f64, 0.0);
        assert!((avg - rho.matrix()).norm() < 5e-2);
    }

    #[test]
    fn period_of_z_plus_identity_is_pi() {
        let mut h = PauliSum::new(1);
        h.add(1.0, "Z").unwrap();
        h.add(1.0, "I").unwrap();
        let p = distinct_eigenvalue_count(&h, None).unwrap();
        assert_eq!(p.distinct, 2);
        assert!((p.period.unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn quasi_periodic_chain_has_no_period() {
        let h = build_aubry_andre_spin(&AubryAndreParams::new(4, 2.0, 1.0, Boundary::Periodic)).unwrap();
        let p = distinct_eigenvalue_count(&h, Some(1e-8)).unwrap();
        assert!(p.period.is_none());
        assert!(p.distinct > 1);
    }

    #[test]
    fn xy_builder_validates_lengths() {
        let ok = XYParams { n: 3, ax: vec![1.0; 2], ay: vec![0.5; 2], az: vec![0.1; 3] };
        assert_eq!(build_xy_spin(&ok).unwrap().terms().len(), 7);
        let bad = XYParams { n: 3, ax: vec![1.0; 3], ay: vec![0.5; 2], az: vec![0.1; 3] };
        assert!(build_xy_spin(&bad).is_err());
    }
}
