//! Numerical Clebsch-Gordan matrices.
//!
//! For a pair of irreps the unitary C satisfies
//!
//! ```text
//! (rho_i (x) rho_j)(g) = C^H [ (+)_k rho_k(g)^{(+) m_k} ] C   for all g
//! ```
//!
//! so the columns of C^H grouped per block are isometric intertwiners from
//! each rho_k into the tensor product. They are computed by group-averaging
//! basis matrices, `V = (1/|G|) sum_g Delta(g) E rho_k(g)^H`, followed by a
//! deterministic Gram-Schmidt over the Frobenius inner product. By Schur's
//! lemma each averaged nonzero V is a scaled isometry and distinct copies
//! orthogonalize exactly, so assembling the blocks in table order yields a
//! unitary C.

use super::cmatrix::{CMatrix, C_ZERO};
use super::irreps::IrrepTable;
use super::kron::KroneckerTable;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ClebschError {
    #[error("decomposition of pair ({i}, {j}) failed: {reason}")]
    DecompositionFailure { i: usize, j: usize, reason: String },
}

/// Blocks of the coupled basis, in order: (irrep index, copy index), each
/// spanning `dim` columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CgBlock {
    pub irrep: usize,
    pub copy: usize,
    pub dim: usize,
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub struct ClebschGordan {
    pub pair: (usize, usize),
    /// Unitary of size d_i d_j x d_i d_j.
    pub c: CMatrix,
    pub blocks: Vec<CgBlock>,
}

impl ClebschGordan {
    /// Largest residual of the defining equation over all group elements.
    pub fn defining_residual(&self, table: &IrrepTable) -> f64 {
        let (i, j) = self.pair;
        let n = table.group().order();
        let mut worst = 0.0f64;
        for g in 0..n {
            let lhs = table.irreps[i].matrices[g].kron(&table.irreps[j].matrices[g]);
            let rhs = self
                .c
                .dagger()
                .matmul(&self.block_diag(table, g))
                .matmul(&self.c);
            worst = worst.max(lhs.sub(&rhs).max_abs());
        }
        worst
    }

    /// The direct sum `(+)_blocks rho_k(g)` in this decomposition's layout.
    pub fn block_diag(&self, table: &IrrepTable, g: usize) -> CMatrix {
        let d: usize = self.blocks.iter().map(|b| b.dim).sum();
        let mut m = CMatrix::zeros(d, d);
        for b in &self.blocks {
            m.set_block(b.offset, b.offset, &table.irreps[b.irrep].matrices[g]);
        }
        m
    }

    /// Assemble `(+) X_k` placing `per_irrep[k]` into every copy of irrep k.
    pub fn assemble_blocks(&self, per_irrep: &[CMatrix]) -> CMatrix {
        let d: usize = self.blocks.iter().map(|b| b.dim).sum();
        let mut m = CMatrix::zeros(d, d);
        for b in &self.blocks {
            m.set_block(b.offset, b.offset, &per_irrep[b.irrep]);
        }
        m
    }
}

/// Compute the Clebsch-Gordan matrix for the pair (i, j).
pub fn clebsch_gordan(
    i: usize,
    j: usize,
    table: &IrrepTable,
    kron: &KroneckerTable,
) -> Result<ClebschGordan, ClebschError> {
    let group = table.group();
    let n = group.order();
    let di = table.irreps[i].dim;
    let dj = table.irreps[j].dim;
    let d = di * dj;
    let fail = |reason: String| ClebschError::DecompositionFailure { i, j, reason };

    // Delta(g) = rho_i(g) (x) rho_j(g), cached once.
    let delta: Vec<CMatrix> = (0..n)
        .map(|g| table.irreps[i].matrices[g].kron(&table.irreps[j].matrices[g]))
        .collect();

    let mut columns: Vec<(usize, usize, CMatrix)> = Vec::new(); // (irrep k, copy, isometry)
    for k in 0..table.len() {
        let mult = kron.row(i, j)[k];
        if mult == 0 {
            continue;
        }
        let dk = table.irreps[k].dim;
        let mut found: Vec<CMatrix> = Vec::new();
        'basis: for p in 0..d {
            for q in 0..dk {
                if found.len() == mult {
                    break 'basis;
                }
                // average the basis matrix E_pq into an intertwiner
                let mut v = CMatrix::zeros(d, dk);
                for g in 0..n {
                    let rho_dag = table.irreps[k].matrices[g].dagger();
                    // Delta(g) E_pq rho_k(g)^H: E_pq picks row q of rho_dag
                    // scaled into column p pattern; do it without materializing E.
                    for a in 0..d {
                        let f = delta[g][(a, p)];
                        if f == C_ZERO {
                            continue;
                        }
                        for b in 0..dk {
                            v[(a, b)] += f * rho_dag[(q, b)];
                        }
                    }
                }
                let v = v.scale(Complex64::new(1.0 / n as f64, 0.0));
                // Gram-Schmidt against previously found copies: the overlap
                // V_c^H V is a multiple of the identity by Schur's lemma.
                let mut w = v;
                for prev in &found {
                    let mu = prev.frobenius_inner(&w) / Complex64::new(dk as f64, 0.0);
                    w = w.sub(&prev.scale(mu));
                }
                let lambda = (w.frobenius_inner(&w).re / dk as f64).max(0.0);
                if lambda > 1e-8 {
                    found.push(w.scale(Complex64::new(1.0 / lambda.sqrt(), 0.0)));
                }
            }
        }
        if found.len() != mult {
            return Err(fail(format!(
                "found {} independent intertwiners for irrep {k}, expected {mult}",
                found.len()
            )));
        }
        for (copy, v) in found.into_iter().enumerate() {
            columns.push((k, copy, v));
        }
    }

    let mut c_dagger = CMatrix::zeros(d, d);
    let mut blocks = Vec::new();
    let mut offset = 0;
    for (k, copy, v) in columns {
        let dk = v.cols;
        for a in 0..d {
            for b in 0..dk {
                c_dagger[(a, offset + b)] = v[(a, b)];
            }
        }
        blocks.push(CgBlock { irrep: k, copy, dim: dk, offset });
        offset += dk;
    }
    if offset != d {
        return Err(fail(format!("blocks span {offset} of {d} dimensions")));
    }
    let c = c_dagger.dagger();
    let cg = ClebschGordan { pair: (i, j), c, blocks };

    let unitary_res = cg.c.matmul(&cg.c.dagger()).sub(&CMatrix::identity(d)).max_abs();
    if unitary_res > 1e-10 {
        return Err(fail(format!("C not unitary, residual {unitary_res:.3e}")));
    }
    let res = cg.defining_residual(table);
    if res > 1e-8 {
        return Err(fail(format!("defining equation residual {res:.3e}")));
    }
    Ok(cg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupKind;
    use crate::spectral::irreps::builtin_irreps;
    use crate::spectral::kron::kronecker_table;

    #[test]
    fn trivial_pair_is_identity() {
        let t = builtin_irreps(&GroupKind::Dihedral(4)).unwrap();
        let k = kronecker_table(&t).unwrap();
        for j in 0..t.len() {
            let cg = clebsch_gordan(0, j, &t, &k).unwrap();
            let d = t.irreps[j].dim;
            assert!(cg.c.sub(&CMatrix::identity(d)).max_abs() < 1e-9, "pair (0,{j})");
        }
    }

    #[test]
    fn d4_e_times_e_splits_into_four_lines() {
        let t = builtin_irreps(&GroupKind::Dihedral(4)).unwrap();
        let k = kronecker_table(&t).unwrap();
        let cg = clebsch_gordan(4, 4, &t, &k).unwrap();
        let kinds: Vec<usize> = cg.blocks.iter().map(|b| b.irrep).collect();
        assert_eq!(kinds, vec![0, 1, 2, 3]);
        assert!(cg.defining_residual(&t) < 1e-8);
    }

    #[test]
    fn octahedral_t1_squared() {
        let t = builtin_irreps(&GroupKind::Octahedral).unwrap();
        let k = kronecker_table(&t).unwrap();
        let cg = clebsch_gordan(3, 3, &t, &k).unwrap();
        let dims: Vec<usize> = cg.blocks.iter().map(|b| b.dim).collect();
        assert_eq!(dims, vec![1, 2, 3, 3]);
        assert!(cg.defining_residual(&t) < 1e-8);
    }

    #[test]
    fn all_pairs_small_groups() {
        for kind in [GroupKind::Cyclic(4), GroupKind::Klein, GroupKind::Dihedral(4)] {
            let t = builtin_irreps(&kind).unwrap();
            let k = kronecker_table(&t).unwrap();
            for i in 0..t.len() {
                for j in 0..t.len() {
                    let cg = clebsch_gordan(i, j, &t, &k).unwrap();
                    assert!(cg.defining_residual(&t) < 1e-8, "{kind} pair ({i},{j})");
                }
            }
        }
    }
}
