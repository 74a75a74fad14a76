use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::hermitian_eig;
use super::{check_cap, CMatrix, C64, VALIDATION_TOL, ZERO};
use crate::{Error, Result};

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Dimension(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Normalized pure state on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
    n: usize,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_dim(amps.len())?;
        check_cap("state vector", n)?;
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::Validation(format!("state norm {norm} differs from 1")));
        }
        Ok(StateVector { amps: v, n })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_dim(amps.len())?;
        check_cap("state vector", n)?;
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Validation("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(StateVector { amps: v / C64::new(norm, 0.0), n })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_cap("state vector", n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::Invalid(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut amps = DVector::from_element(dim, ZERO);
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { amps, n })
    }

    /// Haar-random state from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let amps = (0..1usize << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps)
    }

    pub(crate) fn from_dvector_unchecked(amps: DVector<C64>) -> Self {
        let n = amps.len().trailing_zeros() as usize;
        StateVector { amps, n }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn as_slice(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [C64] {
        self.amps.as_mut_slice()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "inner product of dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// `self (x) other`, with `self` as the leading qubits.
    pub fn kron(&self, other: &StateVector) -> Result<StateVector> {
        check_cap("state vector", self.n + other.n)?;
        Ok(StateVector {
            amps: self.amps.kronecker(&other.amps),
            n: self.n + other.n,
        })
    }

    pub fn apply_matrix(&self, u: &CMatrix) -> Result<StateVector> {
        if u.ncols() != self.dim() || u.nrows() != self.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} operator on state of dim {}",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        Ok(StateVector { amps: u * &self.amps, n: self.n })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Outcome distribution of measuring `qubits`; `qubits[0]` is the most
    /// significant bit of the outcome index.
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        for &q in qubits {
            if q >= self.n {
                return Err(Error::Wiring(format!("measured qubit {q} out of range")));
            }
        }
        let k = qubits.len();
        let mut out = vec![0.0; 1usize << k];
        for (b, a) in self.amps.iter().enumerate() {
            let mut idx = 0usize;
            for &q in qubits {
                idx = (idx << 1) | ((b >> (self.n - 1 - q)) & 1);
            }
            out[idx] += a.norm_sqr();
        }
        Ok(out)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: &self.amps * self.amps.adjoint(),
            n: self.n,
        }
    }

    pub fn expectation(&self, op: &CMatrix) -> Result<C64> {
        let v = self.apply_matrix(op)?;
        Ok(self.amps.dotc(&v.amps))
    }
}

/// Unit-trace positive semidefinite Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    n: usize,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity to `1e-10`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let n = qubits_for_dim(matrix.nrows())?;
        check_cap("density matrix", n)?;
        let herm = (&matrix - matrix.adjoint()).norm();
        if herm > VALIDATION_TOL {
            return Err(Error::Validation(format!("density matrix not hermitian ({herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > VALIDATION_TOL {
            return Err(Error::Validation(format!("density matrix trace {tr} differs from 1")));
        }
        let spec = hermitian_eig(&matrix)?;
        let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -VALIDATION_TOL {
            return Err(Error::Validation(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { matrix, n })
    }

    pub(crate) fn new_unchecked(matrix: CMatrix) -> Self {
        let n = matrix.nrows().trailing_zeros() as usize;
        DensityMatrix { matrix, n }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_cap("density matrix", n)?;
        let dim = 1usize << n;
        Ok(DensityMatrix {
            matrix: CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
            n,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eig(&self.matrix)?.eigenvalues)
    }

    /// Spectral ensemble `{(p_i, |v_i>)}` with weights above `min_weight`.
    pub fn ensemble(&self, min_weight: f64) -> Result<Vec<(f64, StateVector)>> {
        let spec = hermitian_eig(&self.matrix)?;
        let mut out = Vec::new();
        for (k, &p) in spec.eigenvalues.iter().enumerate() {
            if p > min_weight {
                let v = spec.eigenvectors.column(k).into_owned();
                out.push((p, StateVector::from_dvector_unchecked(v)));
            }
        }
        Ok(out)
    }

    pub fn expectation(&self, op: &CMatrix) -> Result<C64> {
        if op.nrows() != self.matrix.nrows() {
            return Err(Error::Dimension("operator and density matrix dims differ".into()));
        }
        Ok((&self.matrix * op).trace())
    }
}

impl From<&StateVector> for DensityMatrix {
    fn from(psi: &StateVector) -> Self {
        psi.to_density()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn new_rejects_unnormalized() {
        let amps = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(StateVector::new(amps.clone()).is_err());
        assert!(StateVector::normalized(amps).is_ok());
        assert!(StateVector::new(vec![C64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn density_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = StateVector::random(3, &mut rng).unwrap();
        let rho = DensityMatrix::new(psi.to_density().into_matrix()).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let bad = CMatrix::identity(4, 4);
        assert!(DensityMatrix::new(bad).is_err());
        let mut neg = CMatrix::zeros(2, 2);
        neg[(0, 0)] = C64::new(1.5, 0.0);
        neg[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn marginal_matches_manual_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = StateVector::random(3, &mut rng).unwrap();
        let p = psi.probabilities();
        let m = psi.marginal_probabilities(&[2, 0]).unwrap();
        // index = (b2 << 1) | b0 with b0 the leading qubit
        let mut expect = [0.0; 4];
        for (b, pb) in p.iter().enumerate() {
            let b0 = (b >> 2) & 1;
            let b2 = b & 1;
            expect[(b2 << 1) | b0] += pb;
        }
        for (a, b) in m.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn ensemble_reconstructs_mixed_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = StateVector::random(2, &mut rng).unwrap().to_density().into_matrix();
        let b = StateVector::random(2, &mut rng).unwrap().to_density().into_matrix();
        let rho = DensityMatrix::new(a * C64::new(0.3, 0.0) + b * C64::new(0.7, 0.0)).unwrap();
        let ens = rho.ensemble(1e-14).unwrap();
        assert_eq!(ens.len(), 2);
        let mut rebuilt = CMatrix::zeros(4, 4);
        for (p, v) in &ens {
            rebuilt += v.to_density().into_matrix() * C64::new(*p, 0.0);
        }
        assert!((rebuilt - rho.matrix()).norm() < 1e-12);
    }
}
