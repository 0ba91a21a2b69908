//! Finite groups presented by Cayley tables.
//!
//! A group is stored as an explicit multiplication table over element indices
//! `0..|G|`. Construction validates the four group axioms and derives the
//! identity, inverses, the commutativity flag and the conjugacy classes.
//! Built-in families cover the groups used throughout the crate: cyclic,
//! dihedral, Klein four-group, chiral octahedral and full octahedral, plus
//! direct products.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("table is not square: row {row} has {len} entries, expected {expected}")]
    NonSquareTable { row: usize, len: usize, expected: usize },
    #[error("closure violation: entry table[{i}][{j}] = {value} is out of range 0..{order}")]
    ClosureViolation { i: usize, j: usize, value: usize, order: usize },
    #[error("associativity violation at ({i}, {j}, {k}): ({i}*{j})*{k} != {i}*({j}*{k})")]
    AssociativityViolation { i: usize, j: usize, k: usize },
    #[error("no identity element")]
    NoIdentity,
    #[error("no inverse for element {element}")]
    NoInverse { element: usize },
    #[error("empty table")]
    EmptyTable,
    #[error("invalid order {0}: parametric families require n >= 1")]
    InvalidOrder(usize),
    #[error("name list has {got} entries, expected {expected}")]
    NameCountMismatch { got: usize, expected: usize },
}

/// Built-in group families, indexed canonically (see each constructor).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Cyclic(usize),
    Dihedral(usize),
    Klein,
    Octahedral,
    FullOctahedral,
    DirectProduct(Box<GroupKind>, Box<GroupKind>),
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Cyclic(n) => write!(f, "C{n}"),
            GroupKind::Dihedral(n) => write!(f, "D{n}"),
            GroupKind::Klein => write!(f, "Klein"),
            GroupKind::Octahedral => write!(f, "O"),
            GroupKind::FullOctahedral => write!(f, "Oh"),
            GroupKind::DirectProduct(a, b) => write!(f, "{a}x{b}"),
        }
    }
}

/// A finite group with fully derived structure.
///
/// Immutable after construction; share with [`Arc`] for concurrent reads.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    name: String,
    element_names: Vec<String>,
    cayley: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
    commutative: bool,
    conjugacy_classes: Vec<Vec<usize>>,
}

impl FiniteGroup {
    /// Validates a Cayley table and derives all group structure.
    ///
    /// Checks, in order: squareness, closure, associativity, identity,
    /// inverses. Reports the first failing axiom.
    pub fn from_cayley(
        table: Vec<Vec<usize>>,
        names: Option<Vec<String>>,
        name: impl Into<String>,
    ) -> Result<FiniteGroup, GroupError> {
        let n = table.len();
        if n == 0 {
            return Err(GroupError::EmptyTable);
        }
        for (row, r) in table.iter().enumerate() {
            if r.len() != n {
                return Err(GroupError::NonSquareTable { row, len: r.len(), expected: n });
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = table[i][j];
                if v >= n {
                    return Err(GroupError::ClosureViolation { i, j, value: v, order: n });
                }
            }
        }
        // O(n^3) but only ever run at construction, for n <= 48.
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if table[table[i][j]][k] != table[i][table[j][k]] {
                        return Err(GroupError::AssociativityViolation { i, j, k });
                    }
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|i| table[e][i] == i && table[i][e] == i))
            .ok_or(GroupError::NoIdentity)?;
        let mut inverse = vec![usize::MAX; n];
        for i in 0..n {
            match (0..n).find(|&j| table[i][j] == identity && table[j][i] == identity) {
                Some(j) => inverse[i] = j,
                None => return Err(GroupError::NoInverse { element: i }),
            }
        }
        let commutative = (0..n).all(|i| (0..n).all(|j| table[i][j] == table[j][i]));
        let conjugacy_classes = conjugacy_classes(&table, &inverse);

        let element_names = match names {
            Some(v) => {
                if v.len() != n {
                    return Err(GroupError::NameCountMismatch { got: v.len(), expected: n });
                }
                v
            }
            None => (0..n).map(|i| format!("g{i}")).collect(),
        };
        Ok(FiniteGroup {
            name: name.into(),
            element_names,
            cayley: table,
            identity,
            inverse,
            commutative,
            conjugacy_classes,
        })
    }

    pub fn order(&self) -> usize {
        self.cayley.len()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn element_names(&self) -> &[String] {
        &self.element_names
    }

    pub fn element_name(&self, i: usize) -> &str {
        &self.element_names[i]
    }

    pub fn cayley(&self) -> &[Vec<usize>] {
        &self.cayley
    }

    /// Product of elements `a * b`.
    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.cayley[a][b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    #[inline]
    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn is_commutative(&self) -> bool {
        self.commutative
    }

    pub fn conjugacy_classes(&self) -> &[Vec<usize>] {
        &self.conjugacy_classes
    }

    pub fn inverses(&self) -> &[usize] {
        &self.inverse
    }
}

fn conjugacy_classes(table: &[Vec<usize>], inverse: &[usize]) -> Vec<Vec<usize>> {
    let n = table.len();
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    for g in 0..n {
        if seen[g] {
            continue;
        }
        let mut class: Vec<usize> = (0..n).map(|h| table[table[h][g]][inverse[h]]).collect();
        class.sort_unstable();
        class.dedup();
        for &x in &class {
            seen[x] = true;
        }
        classes.push(class);
    }
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Builds a validated group of the given kind.
///
/// Canonical element indexing per family:
/// - cyclic n: index k is rotation by k, `k1*k2 = (k1+k2) mod n`;
/// - dihedral n: indices `0..n` are rotations `r^a`, indices `n..2n` are
///   reflections `s r^b`, with the relation `r s = s r^-1`;
/// - klein: elements 00, 01, 10, 11 composed by bitwise xor;
/// - octahedral: the 24 rotation matrices of the cube, enumerated in
///   lexicographic order of (axis permutation, sign pattern) keeping only
///   determinant +1;
/// - full octahedral: the same 24 followed by their compositions with the
///   central inversion;
/// - direct product: index `a * |B| + b`.
pub fn make_group(kind: &GroupKind) -> Result<Arc<FiniteGroup>, GroupError> {
    let g = match kind {
        GroupKind::Cyclic(n) => {
            let n = *n;
            if n < 1 {
                return Err(GroupError::InvalidOrder(n));
            }
            let table: Vec<Vec<usize>> =
                (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
            let names = (0..n).map(|k| format!("r{k}")).collect();
            FiniteGroup::from_cayley(table, Some(names), format!("C{n}"))?
        }
        GroupKind::Dihedral(n) => {
            let n = *n;
            if n < 1 {
                return Err(GroupError::InvalidOrder(n));
            }
            let order = 2 * n;
            let mut table = vec![vec![0usize; order]; order];
            for i in 0..order {
                for j in 0..order {
                    let (ri, si) = (i % n, i >= n);
                    let (rj, sj) = (j % n, j >= n);
                    // r^a s^0|1 composition under r s = s r^-1
                    table[i][j] = match (si, sj) {
                        (false, false) => (ri + rj) % n,
                        (false, true) => n + (n + rj - ri) % n,
                        (true, false) => n + (ri + rj) % n,
                        (true, true) => (n + rj - ri) % n,
                    };
                }
            }
            let names = (0..order)
                .map(|i| if i < n { format!("r{i}") } else { format!("sr{}", i - n) })
                .collect();
            FiniteGroup::from_cayley(table, Some(names), format!("D{n}"))?
        }
        GroupKind::Klein => {
            let table: Vec<Vec<usize>> = (0..4).map(|i| (0..4).map(|j| i ^ j).collect()).collect();
            let names = vec!["00".into(), "01".into(), "10".into(), "11".into()];
            FiniteGroup::from_cayley(table, Some(names), "Klein")?
        }
        GroupKind::Octahedral => {
            let mats = octahedral_matrices();
            group_from_matrices(&mats, "O")?
        }
        GroupKind::FullOctahedral => {
            let mut mats = octahedral_matrices();
            let inverted: Vec<Mat3> = mats.iter().map(|m| m.negate()).collect();
            mats.extend(inverted);
            group_from_matrices(&mats, "Oh")?
        }
        GroupKind::DirectProduct(a, b) => {
            let ga = make_group(a)?;
            let gb = make_group(b)?;
            let (na, nb) = (ga.order(), gb.order());
            let order = na * nb;
            let mut table = vec![vec![0usize; order]; order];
            for i in 0..order {
                for j in 0..order {
                    let (ia, ib) = (i / nb, i % nb);
                    let (ja, jb) = (j / nb, j % nb);
                    table[i][j] = ga.mul(ia, ja) * nb + gb.mul(ib, jb);
                }
            }
            let names = (0..order)
                .map(|i| format!("({},{})", ga.element_name(i / nb), gb.element_name(i % nb)))
                .collect();
            FiniteGroup::from_cayley(table, Some(names), format!("{}x{}", ga.name(), gb.name()))?
        }
    };
    Ok(Arc::new(g))
}

/// 3x3 signed permutation matrix with integer entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mat3 {
    pub m: [[i32; 3]; 3],
}

impl Mat3 {
    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut r = [[0i32; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Mat3 { m: r }
    }

    pub fn negate(&self) -> Mat3 {
        let mut r = self.m;
        for row in r.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        Mat3 { m: r }
    }

    pub fn det(&self) -> i32 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Apply to an integer vector.
    pub fn apply(&self, v: [i32; 3]) -> [i32; 3] {
        let mut r = [0i32; 3];
        for i in 0..3 {
            r[i] = (0..3).map(|k| self.m[i][k] * v[k]).sum();
        }
        r
    }
}

/// The 24 rotations of the cube as signed permutation matrices, in
/// lexicographic order of (axis permutation, sign pattern), determinant +1.
pub fn octahedral_matrices() -> Vec<Mat3> {
    let perms: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for p in perms {
        for bits in 0..8u32 {
            let signs = [
                if bits & 4 == 0 { 1 } else { -1 },
                if bits & 2 == 0 { 1 } else { -1 },
                if bits & 1 == 0 { 1 } else { -1 },
            ];
            let mut m = [[0i32; 3]; 3];
            for (i, row) in m.iter_mut().enumerate() {
                row[p[i]] = signs[i];
            }
            let mat = Mat3 { m };
            if mat.det() == 1 {
                out.push(mat);
            }
        }
    }
    assert_eq!(out.len(), 24);
    out
}

/// The matrices backing a group previously built from `octahedral_matrices`.
/// For `Oh` the second half are the inverted copies.
pub fn rotation_matrices(kind: &GroupKind) -> Option<Vec<Mat3>> {
    match kind {
        GroupKind::Octahedral => Some(octahedral_matrices()),
        GroupKind::FullOctahedral => {
            let mut mats = octahedral_matrices();
            let inverted: Vec<Mat3> = mats.iter().map(|m| m.negate()).collect();
            mats.extend(inverted);
            Some(mats)
        }
        _ => None,
    }
}

fn group_from_matrices(mats: &[Mat3], name: &str) -> Result<FiniteGroup, GroupError> {
    let n = mats.len();
    let index_of = |m: &Mat3| mats.iter().position(|x| x == m);
    let mut table = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in 0..n {
            let prod = mats[i].mul(&mats[j]);
            table[i][j] = index_of(&prod).expect("matrix set not closed under product");
        }
    }
    let names = (0..n).map(|i| format!("m{i}")).collect();
    FiniteGroup::from_cayley(table, Some(names), name)
}

/// Explicit bijection witnessing Oh = O x C2: Oh index i maps to
/// direct-product index 2i for rotations and 2(i-24)+1 for inverted elements.
pub fn oh_to_o_x_c2_bijection() -> Vec<usize> {
    (0..48).map(|i| if i < 24 { 2 * i } else { 2 * (i - 24) + 1 }).collect()
}
