use std::ops::Range;

use nalgebra::{DVector, SymmetricEigen};

use super::state::{DensityMatrix, StateVector};
use super::{check_cap, CMatrix, PauliSum, C64};
use crate::{Error, Result};

/// Anything that can be materialized as a dense Hermitian matrix.
pub trait DenseOperator {
    fn n_qubits(&self) -> usize;
    fn to_dense(&self) -> Result<CMatrix>;
}

impl DenseOperator for PauliSum {
    fn n_qubits(&self) -> usize {
        PauliSum::n_qubits(self)
    }

    fn to_dense(&self) -> Result<CMatrix> {
        self.to_matrix()
    }
}

impl DenseOperator for CMatrix {
    fn n_qubits(&self) -> usize {
        self.nrows().trailing_zeros() as usize
    }

    fn to_dense(&self) -> Result<CMatrix> {
        if self.nrows() != self.ncols() || !self.nrows().is_power_of_two() {
            return Err(Error::Dimension(format!(
                "operator of shape {}x{} is not a qubit operator",
                self.nrows(),
                self.ncols()
            )));
        }
        check_cap("operator", DenseOperator::n_qubits(self))?;
        Ok(self.clone())
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending and
/// eigenvectors stored as matching columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| C64::new(e, 0.0)),
        );
        self.scaled_by(&d)
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let d = DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * t)),
        );
        self.scaled_by(&d)
    }

    fn scaled_by(&self, d: &DVector<C64>) -> CMatrix {
        let mut vd = self.eigenvectors.clone();
        for (k, mut col) in vd.column_iter_mut().enumerate() {
            col *= d[k];
        }
        vd * self.eigenvectors.adjoint()
    }

    /// Coefficients `<k|psi>` in the eigenbasis.
    pub fn coefficients(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.eigenvectors.ad_mul(psi)
    }

    /// `exp(-i H t) |psi>` without forming the propagator.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> StateVector {
        StateVector::from_dvector_unchecked(self.evolve_vector(psi.amplitudes(), t))
    }

    /// Same as [`Spectrum::evolve`] for a raw vector of any dimension.
    pub fn evolve_vector(&self, psi: &DVector<C64>, t: f64) -> DVector<C64> {
        let mut c = self.coefficients(psi);
        for (k, ck) in c.iter_mut().enumerate() {
            *ck *= C64::from_polar(1.0, -self.eigenvalues[k] * t);
        }
        &self.eigenvectors * c
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian eigen-decomposition. Rejects inputs whose anti-Hermitian part
/// exceeds `1e-10` relative to the largest entry.
pub fn hermitian_eig(h: &CMatrix) -> Result<Spectrum> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension("eigenproblem needs a square matrix".into()));
    }
    let scale = max_abs(h).max(1.0);
    let skew = max_abs(&(h - h.adjoint()));
    if skew > 1e-10 * scale {
        return Err(Error::Validation(format!("matrix is not hermitian (skew {skew:e})")));
    }
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(h.nrows(), h.ncols());
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// `exp(-i H t)` via the eigen-decomposition of `H`.
pub fn propagator<H: DenseOperator + ?Sized>(h: &H, t: f64) -> Result<CMatrix> {
    Ok(hermitian_eig(&h.to_dense()?)?.propagator(t))
}

/// Groups sorted eigenvalues whose consecutive gaps are at most `tol`.
pub fn cluster_eigenvalues(sorted: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || (sorted[k] - sorted[k - 1]).abs() > tol {
            if k > start {
                out.push(start..k);
            }
            start = k;
        }
    }
    out
}

/// Which block of a bipartition survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    /// The leading `n_a` qubits.
    A,
    /// The trailing qubits.
    B,
}

fn split_dims(n: usize, n_a: usize) -> Result<(usize, usize)> {
    if n_a > n {
        return Err(Error::Dimension(format!("subsystem of {n_a} qubits in a register of {n}")));
    }
    Ok((1usize << n_a, 1usize << (n - n_a)))
}

/// Reduced state of a density matrix on `A (x) B` with `A` the leading `n_a` qubits.
pub fn partial_trace(rho: &DensityMatrix, n_a: usize, keep: Keep) -> Result<DensityMatrix> {
    let (da, db) = split_dims(rho.n_qubits(), n_a)?;
    let m = rho.matrix();
    let out = match keep {
        Keep::A => CMatrix::from_fn(da, da, |a, a2| {
            (0..db).map(|b| m[(a * db + b, a2 * db + b)]).sum()
        }),
        Keep::B => CMatrix::from_fn(db, db, |b, b2| {
            (0..da).map(|a| m[(a * db + b, a * db + b2)]).sum()
        }),
    };
    Ok(DensityMatrix::new_unchecked(out))
}

fn reshape(psi: &StateVector, n_a: usize) -> Result<CMatrix> {
    let (da, db) = split_dims(psi.n_qubits(), n_a)?;
    Ok(CMatrix::from_row_slice(da, db, psi.as_slice()))
}

/// Reduced state of a pure state without forming the full density matrix.
pub fn partial_trace_pure(psi: &StateVector, n_a: usize, keep: Keep) -> Result<DensityMatrix> {
    let m = reshape(psi, n_a)?;
    let out = match keep {
        Keep::A => &m * m.adjoint(),
        Keep::B => m.transpose() * m.map(|z| z.conj()),
    };
    Ok(DensityMatrix::new_unchecked(out))
}

/// Squared Schmidt coefficients across the `A | B` cut, descending.
pub fn schmidt_spectrum(psi: &StateVector, n_a: usize) -> Result<Vec<f64>> {
    let m = reshape(psi, n_a)?;
    let sv = m.singular_values();
    let mut out: Vec<f64> = sv.iter().map(|s| s * s).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// `Tr[rho^2]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, seed: u64) -> CMatrix {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    fn taylor_exp(a: &CMatrix) -> CMatrix {
        // scaling and squaring with a long Taylor series
        let s = 8;
        let scaled = a / C64::new((1u64 << s) as f64, 0.0);
        let mut term = CMatrix::identity(a.nrows(), a.ncols());
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled / C64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    proptest! {
        #[test]
        fn eig_reconstructs_and_is_orthonormal(seed in 0u64..10_000, q in 1usize..5) {
            let h = random_hermitian(1 << q, seed);
            let s = hermitian_eig(&h).unwrap();
            prop_assert!((s.reconstruct() - &h).norm() < 1e-10);
            let gram = s.eigenvectors.adjoint() * &s.eigenvectors;
            prop_assert!((gram - CMatrix::identity(1 << q, 1 << q)).norm() < 1e-10);
            for w in s.eigenvalues.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }

        #[test]
        fn propagator_matches_series_and_is_unitary(seed in 0u64..10_000, t in -3.0f64..3.0) {
            let h = random_hermitian(8, seed);
            let u = propagator(&h, t).unwrap();
            let expect = taylor_exp(&(&h * C64::new(0.0, -t)));
            prop_assert!((&u - expect).norm() < 1e-9);
            prop_assert!((u.adjoint() * &u - CMatrix::identity(8, 8)).norm() < 1e-10);
        }

        #[test]
        fn partial_traces_agree_and_share_purity(seed in 0u64..10_000, n_a in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = StateVector::random(4, &mut rng).unwrap();
            let rho = psi.to_density();
            for keep in [Keep::A, Keep::B] {
                let a = partial_trace(&rho, n_a, keep).unwrap();
                let b = partial_trace_pure(&psi, n_a, keep).unwrap();
                prop_assert!((a.matrix() - b.matrix()).norm() < 1e-12);
                prop_assert!((a.matrix().trace().re - 1.0).abs() < 1e-12);
            }
            let pa = partial_trace_pure(&psi, n_a, Keep::A).unwrap().purity();
            let pb = partial_trace_pure(&psi, n_a, Keep::B).unwrap().purity();
            prop_assert!((pa - pb).abs() < 1e-12);
            let schmidt: f64 = schmidt_spectrum(&psi, n_a).unwrap().iter().map(|p| p * p).sum();
            prop_assert!((schmidt - pa).abs() < 1e-12);
        }
    }

    #[test]
    fn evolve_matches_propagator() {
        let h = random_hermitian(8, 1);
        let s = hermitian_eig(&h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = StateVector::random(3, &mut rng).unwrap();
        let a = s.evolve(&psi, 0.7);
        let b = psi.apply_matrix(&s.propagator(0.7)).unwrap();
        assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(hermitian_eig(&m).is_err());
    }

    #[test]
    fn clusters_split_on_gaps() {
        let v = [3.0, 3.0 + 1e-12, 1.0, 0.0, -1e-13];
        let c = cluster_eigenvalues(&v, 1e-9);
        assert_eq!(c, vec![0..2, 2..3, 3..5]);
    }
}
