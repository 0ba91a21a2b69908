//! Group Fourier transform and its inverse.
//!
//! Convention fixed once for the whole crate: `F_rho = sum_g theta(g) rho(g)`
//! (no dagger inside the sum). Under left translation
//! `theta_h(g) = theta(h^-1 g)` the blocks transform as `F -> rho(h) F`.

use super::cmatrix::CMatrix;
use super::irreps::IrrepTable;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FourierError {
    #[error("signal length {got} does not match group order {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("block {index} is {rows}x{cols}, expected {dim}x{dim}")]
    BlockShapeMismatch { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("expected {expected} blocks, got {got}")]
    BlockCountMismatch { got: usize, expected: usize },
}

/// One matrix block per irrep, in table order.
#[derive(Debug, Clone)]
pub struct FourierCoefficients {
    pub blocks: Vec<CMatrix>,
}

impl FourierCoefficients {
    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }
}

/// Forward transform of a real signal on the group.
pub fn gft(theta: &[f64], table: &IrrepTable) -> Result<FourierCoefficients, FourierError> {
    gft_complex(
        &theta.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>(),
        table,
    )
}

pub fn gft_complex(
    theta: &[Complex64],
    table: &IrrepTable,
) -> Result<FourierCoefficients, FourierError> {
    let n = table.group().order();
    if theta.len() != n {
        return Err(FourierError::LengthMismatch { got: theta.len(), expected: n });
    }
    let blocks = table
        .irreps
        .iter()
        .map(|irrep| {
            let mut acc = CMatrix::zeros(irrep.dim, irrep.dim);
            for (g, &v) in theta.iter().enumerate() {
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                acc = acc.add(&irrep.matrices[g].scale(v));
            }
            acc
        })
        .collect();
    Ok(FourierCoefficients { blocks })
}

/// Inverse transform: `theta(g) = (1/|G|) sum_rho d_rho tr(F_rho rho(g^-1))`.
pub fn igft(f: &FourierCoefficients, table: &IrrepTable) -> Result<Vec<Complex64>, FourierError> {
    if f.blocks.len() != table.len() {
        return Err(FourierError::BlockCountMismatch {
            got: f.blocks.len(),
            expected: table.len(),
        });
    }
    for (index, (block, irrep)) in f.blocks.iter().zip(&table.irreps).enumerate() {
        if block.rows != irrep.dim || block.cols != irrep.dim {
            return Err(FourierError::BlockShapeMismatch {
                index,
                rows: block.rows,
                cols: block.cols,
                dim: irrep.dim,
            });
        }
    }
    let group = table.group();
    let n = group.order();
    let scale = 1.0 / n as f64;
    let mut theta = Vec::with_capacity(n);
    for g in 0..n {
        let ginv = group.inv(g);
        let mut acc = Complex64::new(0.0, 0.0);
        for (block, irrep) in f.blocks.iter().zip(&table.irreps) {
            acc += block.matmul(&irrep.matrices[ginv]).trace() * (irrep.dim as f64);
        }
        theta.push(acc * scale);
    }
    Ok(theta)
}

/// Real part of the inverse transform, with the largest imaginary residual.
pub fn igft_real(
    f: &FourierCoefficients,
    table: &IrrepTable,
) -> Result<(Vec<f64>, f64), FourierError> {
    let complex = igft(f, table)?;
    let imag = complex.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    Ok((complex.iter().map(|v| v.re).collect(), imag))
}
