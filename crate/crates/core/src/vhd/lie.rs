use std::collections::{HashSet, VecDeque};

use crate::qcore::PauliString;
use crate::{Error, Result};

/// Dimension of the real Lie algebra generated by `{i P}` for Pauli strings `P`.
///
/// The commutator of two Pauli strings is zero or proportional to their
/// product, so the closure is spanned by Pauli strings and its dimension is
/// the number of distinct strings reached. Coefficients are ignored.
pub fn lie_closure_dim(generators: &[PauliString], max_dim: usize) -> Result<usize> {
    let Some(first) = generators.first() else {
        return Ok(0);
    };
    let n = first.n_qubits();
    let mut basis: Vec<(u64, u64)> = Vec::new();
    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    let mut queue: VecDeque<(u64, u64)> = VecDeque::new();
    for g in generators {
        if g.n_qubits() != n {
            return Err(Error::Dimension("generators on different registers".into()));
        }
        if !g.is_identity() && seen.insert(g.key()) {
            queue.push_back(g.key());
        }
    }
    while let Some(p) = queue.pop_front() {
        for &q in &basis {
            if anticommute(p, q) {
                let r = (p.0 ^ q.0, p.1 ^ q.1);
                if seen.insert(r) {
                    queue.push_back(r);
                }
            }
        }
        basis.push(p);
        if seen.len() > max_dim {
            return Err(Error::LieTruncated { max_dim });
        }
    }
    Ok(basis.len())
}

fn anticommute(p: (u64, u64), q: (u64, u64)) -> bool {
    ((p.0 & q.1).count_ones() + (p.1 & q.0).count_ones()) % 2 == 1
}

/// `{X_j Y_{j+1}, Y_j X_{j+1}}` over the open chain.
pub fn cartan_generators(n: usize) -> Result<Vec<PauliString>> {
    use crate::qcore::Pauli::{X, Y};
    let mut out = Vec::with_capacity(2 * n.saturating_sub(1));
    for j in 0..n.saturating_sub(1) {
        out.push(PauliString::on(n, 1.0, &[(j, X), (j + 1, Y)])?);
        out.push(PauliString::on(n, 1.0, &[(j, Y), (j + 1, X)])?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartan_closure_is_n_times_n_minus_one() {
        for n in 2..=7 {
            let g = cartan_generators(n).unwrap();
            assert_eq!(lie_closure_dim(&g, 10_000).unwrap(), n * (n - 1), "n={n}");
        }
    }

    #[test]
    fn commuting_generators_close_immediately() {
        let g = vec![PauliString::parse(1.0, "ZI").unwrap(), PauliString::parse(1.0, "IZ").unwrap()];
        assert_eq!(lie_closure_dim(&g, 10).unwrap(), 2);
    }

    #[test]
    fn su2_from_x_and_z() {
        let g = vec![PauliString::parse(1.0, "X").unwrap(), PauliString::parse(1.0, "Z").unwrap()];
        assert_eq!(lie_closure_dim(&g, 10).unwrap(), 3);
    }

    #[test]
    fn truncation_is_reported() {
        let g = cartan_generators(6).unwrap();
        assert_eq!(lie_closure_dim(&g, 10), Err(Error::LieTruncated { max_dim: 10 }));
    }

    #[test]
    fn full_algebra_on_two_qubits() {
        let g: Vec<_> = ["XI", "ZI", "IX", "IZ", "XX"].iter().map(|w| PauliString::parse(1.0, w).unwrap()).collect();
        assert_eq!(lie_closure_dim(&g, 100).unwrap(), 15);
    }
}
