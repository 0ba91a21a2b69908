//! Dense complex matrices sized for representation work (dims <= ~20).
//!
//! Hand-rolled rather than pulled from a linear algebra crate: the spectral
//! stack needs exactly dense multiply, Kronecker products, Gaussian solves
//! and a Hermitian eigensolver on tiny matrices, all with deterministic
//! operation order.

use num_complex::Complex64;
use std::fmt;

pub type C64 = Complex64;

pub const C_ZERO: C64 = Complex64::new(0.0, 0.0);
pub const C_ONE: C64 = Complex64::new(1.0, 0.0);

/// Row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let v = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C_ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C_ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row);
        }
        CMatrix { rows: r, cols: c, data }
    }

    pub fn from_real(rows: Vec<Vec<f64>>) -> Self {
        CMatrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn scalar(v: C64) -> Self {
        CMatrix { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C_ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Kronecker product, first factor indexes the coarse blocks.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self[(i1, j1)];
                if a == C_ZERO {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out[(i1 * other.rows + i2, j1 * other.cols + j2)] = a * other[(i2, j2)];
                    }
                }
            }
        }
        out
    }

    /// Frobenius inner product <self, other> = tr(self^H other).
    pub fn frobenius_inner(&self, other: &CMatrix) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> CMatrix {
        let mut out = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(row0 + i, col0 + j)];
            }
        }
        out
    }

    pub fn set_block(&mut self, row0: usize, col0: usize, m: &CMatrix) {
        for i in 0..m.rows {
            for j in 0..m.cols {
                self[(row0 + i, col0 + j)] = m[(i, j)];
            }
        }
    }

    /// Solve A X = B by Gaussian elimination with partial pivoting.
    /// Returns None when a pivot falls below `tol` times the matrix scale.
    pub fn solve(&self, b: &CMatrix, tol: f64) -> Option<CMatrix> {
        assert!(self.is_square());
        assert_eq!(self.rows, b.rows);
        let n = self.rows;
        let scale = self.max_abs().max(1e-300);
        let mut a = self.clone();
        let mut x = b.clone();
        for col in 0..n {
            let (pivot_row, pivot_mag) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_mag <= tol * scale {
                return None;
            }
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot_row * n + j);
                }
                for j in 0..x.cols {
                    x.data.swap(col * x.cols + j, pivot_row * x.cols + j);
                }
            }
            let inv_p = C_ONE / a[(col, col)];
            for r in (col + 1)..n {
                let f = a[(r, col)] * inv_p;
                if f == C_ZERO {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
                for j in 0..x.cols {
                    let v = x[(col, j)];
                    x[(r, j)] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let inv_p = C_ONE / a[(col, col)];
            for j in 0..x.cols {
                let mut acc = x[(col, j)];
                for k in (col + 1)..n {
                    acc -= a[(col, k)] * x[(k, j)];
                }
                x[(col, j)] = acc * inv_p;
            }
        }
        Some(x)
    }

    pub fn inverse(&self, tol: f64) -> Option<CMatrix> {
        self.solve(&CMatrix::identity(self.rows), tol)
    }

    /// Smallest singular value estimated via the Hermitian eigenvalues of
    /// A^H A. Used for invertibility checks.
    pub fn smallest_singular_value(&self) -> f64 {
        let h = self.dagger().matmul(self);
        let (vals, _) = h.hermitian_eigen();
        vals.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0).sqrt()
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi.
    ///
    /// Returns (eigenvalues ascending, V) with `self = V diag(vals) V^H`.
    /// Eigenvector phase is fixed by making each column's largest-magnitude
    /// component real positive.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, CMatrix) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        // symmetrize against roundoff
        for i in 0..n {
            for j in 0..n {
                let avg = (a[(i, j)] + a[(j, i)].conj()) * Complex64::new(0.5, 0.0);
                a[(i, j)] = avg;
                a[(j, i)] = avg.conj();
            }
            let d = a[(i, i)];
            a[(i, i)] = Complex64::new(d.re, 0.0);
        }
        let mut v = CMatrix::identity(n);
        let scale = a.max_abs().max(1e-300);
        for _sweep in 0..100 {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a[(i, j)].norm());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.norm() <= 1e-18 * scale {
                        continue;
                    }
                    // unitary 2x2 rotation annihilating a[p][q]
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let abs_apq = apq.norm();
                    let phase = apq / Complex64::new(abs_apq, 0.0);
                    let tau = (aqq - app) / (2.0 * abs_apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let s_c = phase * Complex64::new(s, 0.0);
                    // rows/cols p and q update: G^H A G with
                    // G = [[c, s*phase],[-s*conj(phase), c]] acting on (p,q)
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * c - akq * s_c.conj();
                        a[(k, q)] = akp * s_c + akq * c;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * c - aqk * s_c;
                        a[(q, k)] = apk * s_c.conj() + aqk * c;
                    }
                    a[(p, q)] = C_ZERO;
                    a[(q, p)] = C_ZERO;
                    let dp = a[(p, p)];
                    let dq = a[(q, q)];
                    a[(p, p)] = Complex64::new(dp.re, 0.0);
                    a[(q, q)] = Complex64::new(dq.re, 0.0);
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - vkq * s_c.conj();
                        v[(k, q)] = vkp * s_c + vkq * c;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
        let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
        let mut vecs = CMatrix::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            // fix phase: largest component real positive
            let (mut best_k, mut best_mag) = (0usize, -1.0);
            for k in 0..n {
                let m = v[(k, old_col)].norm();
                if m > best_mag + 1e-15 {
                    best_mag = m;
                    best_k = k;
                }
            }
            let pivot = v[(best_k, old_col)];
            let phase =
                if pivot.norm() > 0.0 { pivot.conj() / Complex64::new(pivot.norm(), 0.0) } else { C_ONE };
            for k in 0..n {
                vecs[(k, new_col)] = v[(k, old_col)] * phase;
            }
        }
        (vals, vecs)
    }

    /// Principal square root of a Hermitian positive semidefinite matrix.
    /// Eigenvalues below `clamp` are treated as zero.
    pub fn psd_sqrt(&self, clamp: f64) -> CMatrix {
        let (vals, v) = self.hermitian_eigen();
        let n = self.rows;
        let mut d = CMatrix::zeros(n, n);
        for (i, &lambda) in vals.iter().enumerate() {
            let x = if lambda < clamp { 0.0 } else { lambda.sqrt() };
            d[(i, i)] = Complex64::new(x, 0.0);
        }
        v.matmul(&d).matmul(&v.dagger())
    }
}
