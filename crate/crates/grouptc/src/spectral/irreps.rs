//! Irreducible representations of the built-in groups, plus a JSON format
//! for externally supplied tables.
//!
//! Tables are generated in closed form per family and validated the same way
//! a loaded file is: homomorphism and unitarity per element, trivial rep
//! first, dimension sum |G|, character orthogonality, and irrep count equal
//! to the conjugacy class count.

use super::cmatrix::{CMatrix, C64, C_ONE};
use crate::group::{make_group, octahedral_matrices, FiniteGroup, GroupKind, Mat3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IrrepError {
    #[error("irrep {name}: matrices do not form a homomorphism at pair ({g1}, {g2}), residual {residual:.3e}")]
    HomomorphismViolation { name: String, g1: usize, g2: usize, residual: f64 },
    #[error("irrep {name}: matrix for element {g} is not unitary, residual {residual:.3e}")]
    NotUnitary { name: String, g: usize, residual: f64 },
    #[error("sum of squared dimensions is {got}, expected group order {expected}")]
    DimensionSumMismatch { got: usize, expected: usize },
    #[error("first irrep is not the trivial representation")]
    MissingTrivialRep,
    #[error("characters of irreps {i} and {j} are not orthonormal, inner product {value:.3e}")]
    CharacterOrthogonalityViolation { i: usize, j: usize, value: f64 },
    #[error("table has {got} irreps but the group has {expected} conjugacy classes")]
    IrrepCountMismatch { got: usize, expected: usize },
    #[error("irrep {name}: expected {expected} matrices, got {got}")]
    MatrixCountMismatch { name: String, expected: usize, got: usize },
    #[error("irrep {name}: matrix for element {g} is {rows}x{cols}, expected {dim}x{dim}")]
    MatrixShapeMismatch { name: String, g: usize, rows: usize, cols: usize, dim: usize },
    #[error("no built-in irrep table for group kind {0}")]
    NoBuiltinTable(String),
    #[error("irrep file: {0}")]
    Format(String),
}

/// One irreducible representation: a matrix per group element.
#[derive(Debug, Clone)]
pub struct Irrep {
    pub name: String,
    pub dim: usize,
    pub matrices: Vec<CMatrix>,
    /// chi(g) = tr rho(g), derived at construction.
    pub character: Vec<C64>,
}

impl Irrep {
    fn new(name: impl Into<String>, matrices: Vec<CMatrix>) -> Irrep {
        let dim = matrices[0].rows;
        let character = matrices.iter().map(|m| m.trace()).collect();
        Irrep { name: name.into(), dim, matrices, character }
    }
}

/// Validated, ordered irrep list for one group; trivial rep first.
#[derive(Debug, Clone)]
pub struct IrrepTable {
    group: Arc<FiniteGroup>,
    pub irreps: Vec<Irrep>,
}

impl IrrepTable {
    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    /// Validates every table invariant; called by every constructor.
    pub fn validate(group: &Arc<FiniteGroup>, irreps: Vec<Irrep>) -> Result<IrrepTable, IrrepError> {
        let n = group.order();
        for irrep in &irreps {
            if irrep.matrices.len() != n {
                return Err(IrrepError::MatrixCountMismatch {
                    name: irrep.name.clone(),
                    expected: n,
                    got: irrep.matrices.len(),
                });
            }
            for (g, m) in irrep.matrices.iter().enumerate() {
                if m.rows != irrep.dim || m.cols != irrep.dim {
                    return Err(IrrepError::MatrixShapeMismatch {
                        name: irrep.name.clone(),
                        g,
                        rows: m.rows,
                        cols: m.cols,
                        dim: irrep.dim,
                    });
                }
            }
        }
        let dim_sum: usize = irreps.iter().map(|r| r.dim * r.dim).sum();
        if dim_sum != n {
            return Err(IrrepError::DimensionSumMismatch { got: dim_sum, expected: n });
        }
        if irreps.len() != group.conjugacy_classes().len() {
            return Err(IrrepError::IrrepCountMismatch {
                got: irreps.len(),
                expected: group.conjugacy_classes().len(),
            });
        }
        let trivial_ok = irreps[0].dim == 1
            && irreps[0].matrices.iter().all(|m| (m[(0, 0)] - C_ONE).norm() <= 1e-10);
        if !trivial_ok {
            return Err(IrrepError::MissingTrivialRep);
        }
        let e = group.identity();
        for irrep in &irreps {
            let id = CMatrix::identity(irrep.dim);
            let res_e = irrep.matrices[e].sub(&id).max_abs();
            if res_e > 1e-10 {
                return Err(IrrepError::HomomorphismViolation {
                    name: irrep.name.clone(),
                    g1: e,
                    g2: e,
                    residual: res_e,
                });
            }
            for (g, m) in irrep.matrices.iter().enumerate() {
                let residual = m.matmul(&m.dagger()).sub(&id).max_abs();
                if residual > 1e-10 {
                    return Err(IrrepError::NotUnitary { name: irrep.name.clone(), g, residual });
                }
            }
            for g1 in 0..n {
                for g2 in 0..n {
                    let prod = irrep.matrices[g1].matmul(&irrep.matrices[g2]);
                    let residual = prod.sub(&irrep.matrices[group.mul(g1, g2)]).max_abs();
                    if residual > 1e-10 {
                        return Err(IrrepError::HomomorphismViolation {
                            name: irrep.name.clone(),
                            g1,
                            g2,
                            residual,
                        });
                    }
                }
            }
        }
        for i in 0..irreps.len() {
            for j in 0..irreps.len() {
                let inner: C64 = (0..n)
                    .map(|h| irreps[i].character[h] * irreps[j].character[h].conj())
                    .sum::<C64>()
                    / Complex64::new(n as f64, 0.0);
                let expected = if i == j { 1.0 } else { 0.0 };
                if (inner - Complex64::new(expected, 0.0)).norm() > 1e-10 {
                    return Err(IrrepError::CharacterOrthogonalityViolation {
                        i,
                        j,
                        value: (inner - Complex64::new(expected, 0.0)).norm(),
                    });
                }
            }
        }
        Ok(IrrepTable { group: Arc::clone(group), irreps })
    }
}

/// Closed-form irrep table for a built-in group kind.
pub fn builtin_irreps(kind: &GroupKind) -> Result<IrrepTable, IrrepError> {
    let group = make_group(kind).map_err(|e| IrrepError::Format(e.to_string()))?;
    let irreps = match kind {
        GroupKind::Cyclic(n) => cyclic_irreps(*n),
        GroupKind::Klein => klein_irreps(),
        GroupKind::Dihedral(n) => dihedral_irreps(*n),
        GroupKind::Octahedral => octahedral_irreps(),
        GroupKind::FullOctahedral => full_octahedral_irreps(),
        GroupKind::DirectProduct(a, b) => {
            let ta = builtin_irreps(a)?;
            let tb = builtin_irreps(b)?;
            product_irreps(&ta, &tb)
        }
    };
    IrrepTable::validate(&group, irreps)
}

fn cyclic_irreps(n: usize) -> Vec<Irrep> {
    (0..n)
        .map(|k| {
            let matrices = (0..n)
                .map(|x| {
                    let angle = -2.0 * PI * (k * x % n) as f64 / n as f64;
                    CMatrix::scalar(Complex64::from_polar(1.0, angle))
                })
                .collect();
            Irrep::new(format!("rho{k}"), matrices)
        })
        .collect()
}

fn klein_irreps() -> Vec<Irrep> {
    // characters chi_{ab}(uv) = (-1)^(a u + b v) on elements 00, 01, 10, 11
    (0..4usize)
        .map(|label| {
            let (a, b) = (label >> 1, label & 1);
            let matrices = (0..4usize)
                .map(|el| {
                    let (u, v) = (el >> 1, el & 1);
                    let sign = if (a * u + b * v) % 2 == 0 { 1.0 } else { -1.0 };
                    CMatrix::scalar(Complex64::new(sign, 0.0))
                })
                .collect();
            Irrep::new(format!("chi{a}{b}"), matrices)
        })
        .collect()
}

fn rot2(theta: f64) -> CMatrix {
    CMatrix::from_real(vec![
        vec![theta.cos(), -theta.sin()],
        vec![theta.sin(), theta.cos()],
    ])
}

/// Irreps of D_n in the rotations-then-reflections indexing.
/// A1, A2 always; B1, B2 for even n; 2-dim E_j for 0 < j < n/2.
fn dihedral_irreps(n: usize) -> Vec<Irrep> {
    let order = 2 * n;
    let rot_part = |i: usize| i % n;
    let is_refl = |i: usize| i >= n;
    let mut irreps = Vec::new();
    let ones = vec![CMatrix::scalar(C_ONE); order];
    irreps.push(Irrep::new("A1", ones));
    let a2 = (0..order)
        .map(|i| CMatrix::scalar(Complex64::new(if is_refl(i) { -1.0 } else { 1.0 }, 0.0)))
        .collect();
    irreps.push(Irrep::new("A2", a2));
    if n % 2 == 0 {
        let b1 = (0..order)
            .map(|i| {
                let s = if rot_part(i) % 2 == 0 { 1.0 } else { -1.0 };
                CMatrix::scalar(Complex64::new(s, 0.0))
            })
            .collect();
        irreps.push(Irrep::new("B1", b1));
        let b2 = (0..order)
            .map(|i| {
                let s = if rot_part(i) % 2 == 0 { 1.0 } else { -1.0 };
                let s = if is_refl(i) { -s } else { s };
                CMatrix::scalar(Complex64::new(s, 0.0))
            })
            .collect();
        irreps.push(Irrep::new("B2", b2));
    }
    let flip = CMatrix::from_real(vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
    let twodim_count = if n >= 2 { (n - 1) / 2 } else { 0 };
    let mut j = 1;
    while 2 * j < n {
        let matrices = (0..order)
            .map(|i| {
                let r = rot2(2.0 * PI * (j * rot_part(i)) as f64 / n as f64);
                if is_refl(i) {
                    flip.matmul(&r)
                } else {
                    r
                }
            })
            .collect();
        let name = if twodim_count == 1 { "E".to_string() } else { format!("E{j}") };
        irreps.push(Irrep::new(name, matrices));
        j += 1;
    }
    irreps
}

fn mat3_to_cmatrix(m: &Mat3) -> CMatrix {
    CMatrix::from_real(
        m.m.iter().map(|row| row.iter().map(|&v| v as f64).collect()).collect(),
    )
}

/// Parity of the permutation a cube rotation induces on the four body
/// diagonals; the sign character of O.
fn diagonal_parity(m: &Mat3) -> f64 {
    let diagonals = [[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1]];
    let mut perm = [0usize; 4];
    for (i, d) in diagonals.iter().enumerate() {
        let image = m.apply(*d);
        let canon = if image[0] < 0 { [-image[0], -image[1], -image[2]] } else { image };
        perm[i] = diagonals
            .iter()
            .position(|x| *x == canon)
            .expect("rotation permutes the body diagonals");
    }
    let mut swaps = 0;
    let mut p = perm;
    for i in 0..4 {
        while p[i] != i {
            let j = p[i];
            p.swap(i, j);
            swaps += 1;
        }
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// 2-dim irrep of O through the action on the three coordinate axes:
/// project the permutation representation onto the plane orthogonal to
/// (1,1,1) in the orthonormal basis b1 = (1,-1,0)/sqrt2, b2 = (1,1,-2)/sqrt6.
fn axis_twodim(m: &Mat3) -> CMatrix {
    let mut perm = [0usize; 3];
    for j in 0..3 {
        perm[j] = (0..3).find(|&i| m.m[i][j] != 0).unwrap();
    }
    let b = [
        [1.0 / 2f64.sqrt(), 1.0 / 6f64.sqrt()],
        [-1.0 / 2f64.sqrt(), 1.0 / 6f64.sqrt()],
        [0.0, -2.0 / 6f64.sqrt()],
    ];
    // E(perm)_{rs} = sum_i b[i][r] * b[sigma^-1(i)][s]  with (P x)_i = x_{sigma^-1(i)}
    let mut inv = [0usize; 3];
    for (j, &pj) in perm.iter().enumerate() {
        inv[pj] = j;
    }
    let mut e = CMatrix::zeros(2, 2);
    for r in 0..2 {
        for s in 0..2 {
            let mut acc = 0.0;
            for (i, binv) in inv.iter().enumerate() {
                acc += b[i][r] * b[*binv][s];
            }
            e[(r, s)] = Complex64::new(acc, 0.0);
        }
    }
    e
}

fn octahedral_irreps() -> Vec<Irrep> {
    let mats = octahedral_matrices();
    let a1 = vec![CMatrix::scalar(C_ONE); 24];
    let a2: Vec<CMatrix> =
        mats.iter().map(|m| CMatrix::scalar(Complex64::new(diagonal_parity(m), 0.0))).collect();
    let e: Vec<CMatrix> = mats.iter().map(axis_twodim).collect();
    let t1: Vec<CMatrix> = mats.iter().map(mat3_to_cmatrix).collect();
    let t2: Vec<CMatrix> = mats
        .iter()
        .map(|m| mat3_to_cmatrix(m).scale(Complex64::new(diagonal_parity(m), 0.0)))
        .collect();
    vec![
        Irrep::new("A1", a1),
        Irrep::new("A2", a2),
        Irrep::new("E", e),
        Irrep::new("T1", t1),
        Irrep::new("T2", t2),
    ]
}

/// Oh = O x {1, inversion}: each O irrep appears as a gerade copy (inversion
/// acts trivially) and an ungerade copy (inversion flips the sign).
fn full_octahedral_irreps() -> Vec<Irrep> {
    let base = octahedral_irreps();
    let mut out = Vec::with_capacity(10);
    for parity in [1.0, -1.0] {
        for irrep in &base {
            let matrices: Vec<CMatrix> = (0..48)
                .map(|i| {
                    let rot = i % 24;
                    let m = irrep.matrices[rot].clone();
                    if i >= 24 && parity < 0.0 {
                        m.scale(Complex64::new(-1.0, 0.0))
                    } else {
                        m
                    }
                })
                .collect();
            let suffix = if parity > 0.0 { "g" } else { "u" };
            out.push(Irrep::new(format!("{}{}", irrep.name, suffix), matrices));
        }
    }
    out
}

/// Irreps of A x B are outer tensor products of irreps of the factors.
fn product_irreps(ta: &IrrepTable, tb: &IrrepTable) -> Vec<Irrep> {
    let nb = tb.group.order();
    let mut out = Vec::new();
    for ra in &ta.irreps {
        for rb in &tb.irreps {
            let order = ta.group.order() * nb;
            let matrices = (0..order)
                .map(|i| ra.matrices[i / nb].kron(&rb.matrices[i % nb]))
                .collect();
            out.push(Irrep::new(format!("{}*{}", ra.name, rb.name), matrices));
        }
    }
    out
}

// --- JSON interchange -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct IrrepFileMatrixEntry(Vec<Vec<[f64; 2]>>);

#[derive(Serialize, Deserialize)]
struct IrrepFileRep {
    name: String,
    dim: usize,
    matrices: Vec<IrrepFileMatrixEntry>,
}

#[derive(Serialize, Deserialize)]
struct IrrepFile {
    format_version: u32,
    group: String,
    irreps: Vec<IrrepFileRep>,
}

/// Serialize a table to the JSON interchange format.
pub fn irreps_to_json(table: &IrrepTable) -> String {
    let file = IrrepFile {
        format_version: 1,
        group: table.group.name().to_string(),
        irreps: table
            .irreps
            .iter()
            .map(|r| IrrepFileRep {
                name: r.name.clone(),
                dim: r.dim,
                matrices: r
                    .matrices
                    .iter()
                    .map(|m| {
                        IrrepFileMatrixEntry(
                            (0..m.rows)
                                .map(|i| (0..m.cols).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                                .collect(),
                        )
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("irrep table serializes")
}

/// Load and fully validate a table from the JSON interchange format.
pub fn load_irreps(group: &Arc<FiniteGroup>, json: &str) -> Result<IrrepTable, IrrepError> {
    let file: IrrepFile =
        serde_json::from_str(json).map_err(|e| IrrepError::Format(e.to_string()))?;
    if file.format_version != 1 {
        return Err(IrrepError::Format(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let mut irreps = Vec::with_capacity(file.irreps.len());
    for r in file.irreps {
        let mut matrices = Vec::with_capacity(r.matrices.len());
        for (g, m) in r.matrices.into_iter().enumerate() {
            if m.0.len() != r.dim || m.0.iter().any(|row| row.len() != r.dim) {
                return Err(IrrepError::MatrixShapeMismatch {
                    name: r.name.clone(),
                    g,
                    rows: m.0.len(),
                    cols: m.0.first().map_or(0, |row| row.len()),
                    dim: r.dim,
                });
            }
            matrices.push(CMatrix::from_rows(
                m.0.into_iter()
                    .map(|row| row.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                    .collect(),
            ));
        }
        if matrices.is_empty() {
            return Err(IrrepError::Format(format!("irrep {} has no matrices", r.name)));
        }
        irreps.push(Irrep::new(r.name, matrices));
    }
    IrrepTable::validate(group, irreps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_tables_validate() {
        for n in [1, 2, 4, 8] {
            let t = builtin_irreps(&GroupKind::Cyclic(n)).unwrap();
            assert_eq!(t.len(), n);
            assert!(t.irreps.iter().all(|r| r.dim == 1));
        }
    }

    #[test]
    fn klein_table_validates() {
        let t = builtin_irreps(&GroupKind::Klein).unwrap();
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn d4_names_and_dims() {
        let t = builtin_irreps(&GroupKind::Dihedral(4)).unwrap();
        let names: Vec<&str> = t.irreps.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, vec!["A1", "A2", "B1", "B2", "E"]);
        let dims: Vec<usize> = t.irreps.iter().map(|r| r.dim).collect();
        assert_eq!(dims, vec![1, 1, 1, 1, 2]);
    }

    #[test]
    fn d16_counts() {
        let t = builtin_irreps(&GroupKind::Dihedral(16)).unwrap();
        assert_eq!(t.len(), 11);
        let dim_sum: usize = t.irreps.iter().map(|r| r.dim * r.dim).sum();
        assert_eq!(dim_sum, 32);
    }

    #[test]
    fn octahedral_dims() {
        let t = builtin_irreps(&GroupKind::Octahedral).unwrap();
        let dims: Vec<usize> = t.irreps.iter().map(|r| r.dim).collect();
        assert_eq!(dims, vec![1, 1, 2, 3, 3]);
    }

    #[test]
    fn full_octahedral_dims() {
        let t = builtin_irreps(&GroupKind::FullOctahedral).unwrap();
        assert_eq!(t.len(), 10);
        let dim_sum: usize = t.irreps.iter().map(|r| r.dim * r.dim).sum();
        assert_eq!(dim_sum, 48);
    }

    #[test]
    fn dihedral_odd_n() {
        let t = builtin_irreps(&GroupKind::Dihedral(3)).unwrap();
        let dims: Vec<usize> = t.irreps.iter().map(|r| r.dim).collect();
        assert_eq!(dims, vec![1, 1, 2]);
        let t1 = builtin_irreps(&GroupKind::Dihedral(1)).unwrap();
        assert_eq!(t1.len(), 2);
    }

    #[test]
    fn product_irreps_validate() {
        let kind = GroupKind::DirectProduct(
            Box::new(GroupKind::Cyclic(2)),
            Box::new(GroupKind::Cyclic(2)),
        );
        let t = builtin_irreps(&kind).unwrap();
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn json_roundtrip() {
        let t = builtin_irreps(&GroupKind::Dihedral(4)).unwrap();
        let json = irreps_to_json(&t);
        let loaded = load_irreps(t.group(), &json).unwrap();
        assert_eq!(loaded.len(), t.len());
        for (a, b) in t.irreps.iter().zip(&loaded.irreps) {
            assert_eq!(a.name, b.name);
            for (ma, mb) in a.matrices.iter().zip(&b.matrices) {
                assert!(ma.sub(mb).max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn broken_table_rejected() {
        let t = builtin_irreps(&GroupKind::Cyclic(4)).unwrap();
        let mut irreps = t.irreps.clone();
        irreps[1].matrices[1] = CMatrix::scalar(Complex64::new(0.5, 0.0));
        let err = IrrepTable::validate(t.group(), irreps).unwrap_err();
        assert!(matches!(err, IrrepError::NotUnitary { .. }));
    }

    #[test]
    fn missing_trivial_rejected() {
        let t = builtin_irreps(&GroupKind::Cyclic(2)).unwrap();
        let mut irreps = t.irreps.clone();
        irreps.swap(0, 1);
        let err = IrrepTable::validate(t.group(), irreps).unwrap_err();
        assert_eq!(err, IrrepError::MissingTrivialRep);
    }
}
