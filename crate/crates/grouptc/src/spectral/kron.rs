//! Kronecker product table: multiplicities of each irrep in every pairwise
//! tensor product, computed from characters.
//!
//! `m_k = <chi_i * chi_j, chi_k> = (1/|G|) sum_h chi_i(h) chi_j(h) conj(chi_k(h))`.

use super::irreps::IrrepTable;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum KronError {
    #[error("multiplicity of irrep {k} in {i} x {j} is {value}, not an integer")]
    NonIntegerMultiplicity { i: usize, j: usize, k: usize, value: f64 },
}

#[derive(Debug, Clone)]
pub struct KroneckerTable {
    /// multiplicities[i][j][k] = multiplicity of irrep k in rho_i (x) rho_j
    pub multiplicities: Vec<Vec<Vec<usize>>>,
}

impl KroneckerTable {
    pub fn row(&self, i: usize, j: usize) -> &[usize] {
        &self.multiplicities[i][j]
    }

    /// Indices of irreps appearing in rho_i (x) rho_j.
    pub fn components(&self, i: usize, j: usize) -> Vec<usize> {
        self.multiplicities[i][j]
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(k, _)| k)
            .collect()
    }
}

pub fn kronecker_table(table: &IrrepTable) -> Result<KroneckerTable, KronError> {
    let n = table.group().order();
    let r = table.len();
    let mut multiplicities = vec![vec![vec![0usize; r]; r]; r];
    for i in 0..r {
        for j in 0..r {
            for k in 0..r {
                let inner: Complex64 = (0..n)
                    .map(|h| {
                        table.irreps[i].character[h]
                            * table.irreps[j].character[h]
                            * table.irreps[k].character[h].conj()
                    })
                    .sum::<Complex64>()
                    / Complex64::new(n as f64, 0.0);
                let rounded = inner.re.round();
                if (inner.re - rounded).abs() > 1e-8 || inner.im.abs() > 1e-8 || rounded < 0.0 {
                    return Err(KronError::NonIntegerMultiplicity { i, j, k, value: inner.re });
                }
                multiplicities[i][j][k] = rounded as usize;
            }
        }
    }
    Ok(KroneckerTable { multiplicities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupKind;
    use crate::spectral::irreps::builtin_irreps;

    #[test]
    fn d4_matches_reference_table() {
        let t = builtin_irreps(&GroupKind::Dihedral(4)).unwrap();
        let k = kronecker_table(&t).unwrap();
        // rows/cols in order A1, A2, B1, B2, E
        let expected: [[[usize; 5]; 5]; 5] = [
            [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]],
            [[0, 1, 0, 0, 0], [1, 0, 0, 0, 0], [0, 0, 0, 1, 0], [0, 0, 1, 0, 0], [0, 0, 0, 0, 1]],
            [[0, 0, 1, 0, 0], [0, 0, 0, 1, 0], [1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 0, 0, 1]],
            [[0, 0, 0, 1, 0], [0, 0, 1, 0, 0], [0, 1, 0, 0, 0], [1, 0, 0, 0, 0], [0, 0, 0, 0, 1]],
            [[0, 0, 0, 0, 1], [0, 0, 0, 0, 1], [0, 0, 0, 0, 1], [0, 0, 0, 0, 1], [1, 1, 1, 1, 0]],
        ];
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(k.row(i, j), &expected[i][j], "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn trivial_row_is_identity() {
        for kind in [GroupKind::Cyclic(8), GroupKind::Octahedral, GroupKind::FullOctahedral] {
            let t = builtin_irreps(&kind).unwrap();
            let k = kronecker_table(&t).unwrap();
            for j in 0..t.len() {
                for x in 0..t.len() {
                    assert_eq!(k.row(0, j)[x], usize::from(x == j));
                }
            }
        }
    }

    #[test]
    fn dimension_bookkeeping_and_symmetry() {
        for kind in [GroupKind::Dihedral(16), GroupKind::Octahedral, GroupKind::Klein] {
            let t = builtin_irreps(&kind).unwrap();
            let k = kronecker_table(&t).unwrap();
            let dims: Vec<usize> = t.irreps.iter().map(|r| r.dim).collect();
            for i in 0..t.len() {
                for j in 0..t.len() {
                    let total: usize =
                        k.row(i, j).iter().zip(&dims).map(|(m, d)| m * d).sum();
                    assert_eq!(total, dims[i] * dims[j]);
                    assert_eq!(k.row(i, j), k.row(j, i));
                }
            }
        }
    }
}
