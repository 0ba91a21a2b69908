//! Bispectrum on a finite group: the spectral dual of the triple
//! correlation.
//!
//! Commutative groups use the scalar form
//! `beta_{r1,r2} = conj(F_{r1}) conj(F_{r2}) F_{r1 r2}`. Non-commutative
//! groups couple Fourier blocks through the Clebsch-Gordan matrix:
//!
//! ```text
//! beta_{r1,r2} = [F_{r1} (x) F_{r2}]^H  C^H [ (+)_k F_k ] C
//! ```
//!
//! which with the crate's `F -> rho(h) F` translation rule is exactly
//! translation invariant. Both routes agree on commutative groups.

use super::cmatrix::CMatrix;
use super::clebsch::{clebsch_gordan, ClebschError, ClebschGordan};
use super::fourier::{gft, FourierCoefficients, FourierError};
use super::irreps::IrrepTable;
use super::kron::{kronecker_table, KronError, KroneckerTable};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BispectrumError {
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error(transparent)]
    Kron(#[from] KronError),
    #[error(transparent)]
    Clebsch(#[from] ClebschError),
    #[error("pair ({0}, {1}) out of range")]
    PairOutOfRange(usize, usize),
}

/// Bispectral coefficients for a set of irrep pairs, in requested order.
#[derive(Debug, Clone)]
pub struct Bispectrum {
    pub pairs: Vec<(usize, usize)>,
    pub coefficients: Vec<CMatrix>,
}

impl Bispectrum {
    pub fn get(&self, i: usize, j: usize) -> Option<&CMatrix> {
        self.pairs.iter().position(|&p| p == (i, j)).map(|idx| &self.coefficients[idx])
    }

    /// Largest relative difference against another bispectrum over the same
    /// pairs, normalized by the larger overall coefficient scale.
    pub fn relative_distance(&self, other: &Bispectrum) -> f64 {
        assert_eq!(self.pairs, other.pairs);
        let scale = self
            .coefficients
            .iter()
            .chain(&other.coefficients)
            .map(|m| m.max_abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.sub(b).max_abs())
            .fold(0.0f64, f64::max)
            / scale
    }
}

/// Shared spectral context for one group: irreps, Kronecker table and a
/// memoized Clebsch-Gordan cache.
pub struct SpectralContext {
    pub table: IrrepTable,
    pub kron: KroneckerTable,
    cg_cache: std::cell::RefCell<BTreeMap<(usize, usize), ClebschGordan>>,
}

impl SpectralContext {
    pub fn new(table: IrrepTable) -> Result<SpectralContext, BispectrumError> {
        let kron = kronecker_table(&table)?;
        Ok(SpectralContext { table, kron, cg_cache: std::cell::RefCell::new(BTreeMap::new()) })
    }

    pub fn group_order(&self) -> usize {
        self.table.group().order()
    }

    pub fn cg(&self, i: usize, j: usize) -> Result<ClebschGordan, BispectrumError> {
        if let Some(hit) = self.cg_cache.borrow().get(&(i, j)) {
            return Ok(hit.clone());
        }
        let cg = clebsch_gordan(i, j, &self.table, &self.kron)?;
        self.cg_cache.borrow_mut().insert((i, j), cg.clone());
        Ok(cg)
    }

    /// For 1-dim irreps: index of the product irrep `r1 r2`.
    pub fn scalar_product_index(&self, i: usize, j: usize) -> Option<usize> {
        let row = self.kron.row(i, j);
        let comps: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(k, _)| k)
            .collect();
        if comps.len() == 1 && row[comps[0]] == 1 {
            Some(comps[0])
        } else {
            None
        }
    }

    /// One bispectral coefficient from precomputed Fourier blocks.
    pub fn coefficient(
        &self,
        f: &FourierCoefficients,
        i: usize,
        j: usize,
    ) -> Result<CMatrix, BispectrumError> {
        let r = self.table.len();
        if i >= r || j >= r {
            return Err(BispectrumError::PairOutOfRange(i, j));
        }
        let cg = self.cg(i, j)?;
        let tensor = f.block(i).kron(f.block(j));
        let sum = cg.assemble_blocks(&f.blocks);
        Ok(tensor.dagger().matmul(&cg.c.dagger()).matmul(&sum).matmul(&cg.c))
    }

    /// Scalar-formula coefficient, defined only when both irreps are 1-dim.
    pub fn coefficient_scalar(
        &self,
        f: &FourierCoefficients,
        i: usize,
        j: usize,
    ) -> Option<CMatrix> {
        if self.table.irreps[i].dim != 1 || self.table.irreps[j].dim != 1 {
            return None;
        }
        let k = self.scalar_product_index(i, j)?;
        let v = f.block(i)[(0, 0)].conj() * f.block(j)[(0, 0)].conj() * f.block(k)[(0, 0)];
        Some(CMatrix::scalar(v))
    }

    /// Bispectrum over the given pairs (all pairs when None), computed from
    /// a real signal.
    pub fn bispectrum(
        &self,
        theta: &[f64],
        pairs: Option<&[(usize, usize)]>,
    ) -> Result<Bispectrum, BispectrumError> {
        let f = gft(theta, &self.table)?;
        self.bispectrum_from_fourier(&f, pairs)
    }

    pub fn bispectrum_from_fourier(
        &self,
        f: &FourierCoefficients,
        pairs: Option<&[(usize, usize)]>,
    ) -> Result<Bispectrum, BispectrumError> {
        let r = self.table.len();
        let all: Vec<(usize, usize)>;
        let pairs: &[(usize, usize)] = match pairs {
            Some(p) => p,
            None => {
                all = (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).collect();
                &all
            }
        };
        let mut coefficients = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            coefficients.push(self.coefficient(f, i, j)?);
        }
        Ok(Bispectrum { pairs: pairs.to_vec(), coefficients })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::translate_group_signal;
    use crate::group::GroupKind;
    use crate::rng::Rng;
    use crate::spectral::irreps::builtin_irreps;
    use num_complex::Complex64;

    fn ctx(kind: &GroupKind) -> SpectralContext {
        SpectralContext::new(builtin_irreps(kind).unwrap()).unwrap()
    }

    #[test]
    fn dc_cube_on_c4() {
        let ctx = ctx(&GroupKind::Cyclic(4));
        let f = gft(&[1.0, 2.0, 0.0, 1.0], &ctx.table).unwrap();
        let beta = ctx.coefficient(&f, 0, 0).unwrap();
        assert!((beta[(0, 0)] - Complex64::new(64.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn anchor_column_formula() {
        // beta_{rho, rho0} = conj(F_0) F_rho^H F_rho
        let ctx = ctx(&GroupKind::Dihedral(4));
        let mut rng = Rng::new(3);
        let theta: Vec<f64> = (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let f = gft(&theta, &ctx.table).unwrap();
        for rho in 0..5 {
            let beta = ctx.coefficient(&f, rho, 0).unwrap();
            let expected = f
                .block(rho)
                .dagger()
                .matmul(f.block(rho))
                .scale(f.block(0)[(0, 0)].conj());
            assert!(beta.sub(&expected).max_abs() < 1e-10, "rho={rho}");
        }
    }

    #[test]
    fn zero_signal_zero_bispectrum() {
        let ctx = ctx(&GroupKind::Klein);
        let b = ctx.bispectrum(&[0.0; 4], None).unwrap();
        for m in &b.coefficients {
            assert!(m.max_abs() < 1e-14);
        }
    }

    #[test]
    fn invariance_under_translation() {
        for kind in [GroupKind::Cyclic(8), GroupKind::Dihedral(4), GroupKind::Octahedral] {
            let ctx = ctx(&kind);
            let g = ctx.table.group().clone();
            let n = g.order();
            let mut rng = Rng::new(5);
            let theta: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let b0 = ctx.bispectrum(&theta, None).unwrap();
            for h in 0..n {
                let shifted = translate_group_signal(&g, h, &theta);
                let bh = ctx.bispectrum(&shifted, None).unwrap();
                let d = b0.relative_distance(&bh);
                assert!(d < 1e-10, "kind {kind} h={h} rel={d:.3e}");
            }
        }
    }

    #[test]
    fn matrix_formula_degenerates_to_scalar_formula() {
        for kind in [GroupKind::Cyclic(4), GroupKind::Cyclic(8), GroupKind::Klein] {
            let ctx = ctx(&kind);
            let n = ctx.group_order();
            let mut rng = Rng::new(7);
            let theta: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let f = gft(&theta, &ctx.table).unwrap();
            let scale = f.blocks.iter().map(|b| b.max_abs()).fold(1.0f64, f64::max).powi(3);
            for i in 0..ctx.table.len() {
                for j in 0..ctx.table.len() {
                    let general = ctx.coefficient(&f, i, j).unwrap();
                    let scalar = ctx.coefficient_scalar(&f, i, j).unwrap();
                    assert!(
                        general.sub(&scalar).max_abs() <= 1e-10 * scale,
                        "kind {kind} pair ({i},{j})"
                    );
                }
            }
        }
    }
}
