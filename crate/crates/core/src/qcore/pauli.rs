use std::collections::HashMap;
use std::fmt;

use super::{check_cap, CMatrix, C64, I, ONE, ZERO};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn matrix(self) -> CMatrix {
        let m = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        CMatrix::from_row_slice(2, 2, &m)
    }

    /// Product `self * other` as (phase, letter).
    fn mul(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (ONE, p),
            (a, b) if a == b => (ONE, I),
            (X, Y) => (I_PHASE, Z),
            (Y, X) => (-I_PHASE, Z),
            (Y, Z) => (I_PHASE, X),
            (Z, Y) => (-I_PHASE, X),
            (Z, X) => (I_PHASE, Y),
            (X, Z) => (-I_PHASE, Y),
            _ => unreachable!(),
        }
    }
}

const I_PHASE: C64 = I;

/// Weighted tensor product of single-qubit Paulis, at most 64 qubits.
///
/// Internally stored as symplectic bitmasks aligned with basis indices: the
/// bit for qubit `q` is `1 << (n - 1 - q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub coeff: C64,
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn new(coeff: C64, letters: &[Pauli]) -> Result<Self> {
        let n = letters.len();
        if n == 0 || n > 64 {
            return Err(Error::Invalid(format!(
                "pauli string length {n} outside 1..=64"
            )));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, p) in letters.iter().enumerate() {
            let (bx, bz) = p.bits();
            let bit = 1u64 << (n - 1 - q);
            if bx {
                x |= bit;
            }
            if bz {
                z |= bit;
            }
        }
        Ok(PauliString { coeff, n, x, z })
    }

    /// Parses a word such as `"XIZY"`.
    pub fn parse(coeff: f64, word: &str) -> Result<Self> {
        let letters = word
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::Invalid(format!("bad pauli letter {c:?} in {word:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(C64::new(coeff, 0.0), &letters)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(ONE, &vec![Pauli::I; n])
    }

    /// Places the given letters at the given qubits, identity elsewhere.
    pub fn on(n: usize, coeff: f64, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n];
        for &(q, p) in sites {
            if q >= n {
                return Err(Error::Invalid(format!("qubit {q} out of range for {n}")));
            }
            letters[q] = p;
        }
        Self::new(C64::new(coeff, 0.0), &letters)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Symplectic key identifying the operator up to its coefficient.
    pub fn key(&self) -> (u64, u64) {
        (self.x, self.z)
    }

    pub fn letter(&self, q: usize) -> Pauli {
        let bit = 1u64 << (self.n - 1 - q);
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn with_coeff(&self, coeff: C64) -> Self {
        PauliString { coeff, ..self.clone() }
    }

    /// Phase picked up by basis state `b`, ignoring the coefficient:
    /// `P|b> = phase(b) |b ^ x>`.
    #[inline]
    pub fn phase_on(&self, b: usize) -> C64 {
        let ny = (self.x & self.z).count_ones();
        let sign = ((b as u64) & self.z).count_ones() & 1;
        let base = match ny % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        if sign == 1 {
            -base
        } else {
            base
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        s % 2 == 0
    }

    /// Operator product `self * other`, coefficients included.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "pauli product of {} and {} qubits",
                self.n, other.n
            )));
        }
        let mut phase = self.coeff * other.coeff;
        let mut letters = Vec::with_capacity(self.n);
        for q in 0..self.n {
            let (ph, p) = self.letter(q).mul(other.letter(q));
            phase *= ph;
            letters.push(p);
        }
        PauliString::new(phase, &letters)
    }

    /// Adds `P * amps` into `out`.
    pub fn apply_into(&self, amps: &[C64], out: &mut [C64]) {
        let x = self.x as usize;
        for (b, a) in amps.iter().enumerate() {
            if *a != ZERO {
                out[b ^ x] += self.coeff * self.phase_on(b) * a;
            }
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        check_cap("pauli matrix", self.n)?;
        let dim = 1usize << self.n;
        let mut m = CMatrix::zeros(dim, dim);
        let x = self.x as usize;
        for b in 0..dim {
            m[(b ^ x, b)] = self.coeff * self.phase_on(b);
        }
        Ok(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}{:+}i) ", self.coeff.re, self.coeff.im)?;
        for p in self.letters() {
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}

/// Linear combination of Pauli strings on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        PauliSum { n, terms: Vec::new() }
    }

    pub fn from_terms(n: usize, terms: Vec<PauliString>) -> Result<Self> {
        let mut s = PauliSum::new(n);
        for t in terms {
            s.push(t)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, term: PauliString) -> Result<()> {
        if term.n != self.n {
            return Err(Error::Dimension(format!(
                "term on {} qubits added to sum on {}",
                term.n, self.n
            )));
        }
        self.terms.push(term);
        Ok(())
    }

    /// Appends `coeff * word`.
    pub fn add(&mut self, coeff: f64, word: &str) -> Result<()> {
        self.push(PauliString::parse(coeff, word)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    /// Merges duplicate strings and drops exact zeros; order follows first occurrence.
    pub fn simplified(&self) -> PauliSum {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut out: Vec<PauliString> = Vec::new();
        for t in &self.terms {
            match index.get(&t.key()) {
                Some(&i) => out[i].coeff += t.coeff,
                None => {
                    index.insert(t.key(), out.len());
                    out.push(t.clone());
                }
            }
        }
        out.retain(|t| t.coeff != ZERO);
        PauliSum { n: self.n, terms: out }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.simplified().terms.iter().all(|t| t.coeff.im.abs() <= tol)
    }

    pub fn identity_coeff(&self) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.is_identity())
            .map(|t| t.coeff)
            .sum()
    }

    /// Copy with the identity component removed.
    pub fn traceless(&self) -> PauliSum {
        let terms = self
            .simplified()
            .terms
            .into_iter()
            .filter(|t| !t.is_identity())
            .collect();
        PauliSum { n: self.n, terms }
    }

    /// `Tr[H^dagger H] / 2^n`, i.e. the sum of squared merged coefficients.
    pub fn hs_norm_sq(&self) -> f64 {
        self.simplified().terms.iter().map(|t| t.coeff.norm_sqr()).sum()
    }

    /// Sum of absolute coefficients; bounds every matrix norm of the sum.
    pub fn coeff_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    pub fn scaled(&self, s: f64) -> PauliSum {
        let terms = self.terms.iter().map(|t| t.with_coeff(t.coeff * s)).collect();
        PauliSum { n: self.n, terms }
    }

    pub fn apply(&self, amps: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; amps.len()];
        for t in &self.terms {
            t.apply_into(amps, &mut out);
        }
        out
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        check_cap("pauli sum matrix", self.n)?;
        let dim = 1usize << self.n;
        let mut m = CMatrix::zeros(dim, dim);
        for t in &self.terms {
            let x = t.x as usize;
            for b in 0..dim {
                m[(b ^ x, b)] += t.coeff * t.phase_on(b);
            }
        }
        Ok(m)
    }
}

/// Dense `2^n x 2^n` matrix of a Pauli sum.
pub fn pauli_sum_to_matrix(h: &PauliSum) -> Result<CMatrix> {
    h.to_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kron_letters(letters: &[Pauli]) -> CMatrix {
        letters
            .iter()
            .fold(CMatrix::identity(1, 1), |acc, p| acc.kronecker(&p.matrix()))
    }

    #[test]
    fn matrix_matches_kronecker_product() {
        let words = ["XYZ", "IZY", "YYX", "ZII", "IIX"];
        for w in words {
            let p = PauliString::parse(0.7, w).unwrap();
            let letters = p.letters();
            let expect = kron_letters(&letters) * C64::new(0.7, 0.0);
            assert!((p.to_matrix().unwrap() - expect).norm() < 1e-14, "{w}");
        }
    }

    #[test]
    fn xx_plus_zz_has_spectrum_2_0_0_neg2() {
        let mut h = PauliSum::new(2);
        h.add(1.0, "XX").unwrap();
        h.add(1.0, "ZZ").unwrap();
        let m = h.to_matrix().unwrap();
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expect = [2.0, 0.0, 0.0, -2.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn product_matches_matrix_product() {
        let words = ["XYZI", "ZZYX", "YIXZ", "IYYY"];
        for a in words {
            for b in words {
                let pa = PauliString::parse(1.0, a).unwrap();
                let pb = PauliString::parse(1.0, b).unwrap();
                let prod = pa.mul(&pb).unwrap().to_matrix().unwrap();
                let dense = pa.to_matrix().unwrap() * pb.to_matrix().unwrap();
                assert!((prod - &dense).norm() < 1e-13);
                let comm = pa.to_matrix().unwrap() * pb.to_matrix().unwrap()
                    - pb.to_matrix().unwrap() * pa.to_matrix().unwrap();
                assert_eq!(pa.commutes_with(&pb), comm.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn simplify_merges_and_hs_norm_matches_trace() {
        let mut h = PauliSum::new(3);
        h.add(0.5, "XIZ").unwrap();
        h.add(0.25, "XIZ").unwrap();
        h.add(-1.0, "III").unwrap();
        h.add(2.0, "YYI").unwrap();
        let s = h.simplified();
        assert_eq!(s.terms().len(), 3);
        let m = h.to_matrix().unwrap();
        let tr = (m.adjoint() * &m).trace().re / 8.0;
        assert!((tr - h.hs_norm_sq()).abs() < 1e-12);
        assert!((h.traceless().to_matrix().unwrap().trace()).norm() < 1e-12);
    }

    #[test]
    fn apply_matches_dense() {
        let mut h = PauliSum::new(3);
        h.add(0.3, "XYZ").unwrap();
        h.add(-0.2, "ZZI").unwrap();
        h.add(1.1, "IYX").unwrap();
        let v: Vec<C64> = (0..8).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        let got = h.apply(&v);
        let dense = h.to_matrix().unwrap() * nalgebra::DVector::from_vec(v);
        for (a, b) in got.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_letters_and_size_mismatch() {
        assert!(PauliString::parse(1.0, "XQ").is_err());
        let mut h = PauliSum::new(2);
        assert!(h.add(1.0, "XXX").is_err());
    }
}
