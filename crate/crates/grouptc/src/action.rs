//! Permutation actions of a finite group on discrete domains.
//!
//! Supported domains: the group itself (regular action), square pixel grids
//! for the exact lattice symmetries C1/C2/C4/D1/D2/D4, and voxel cubes for
//! the octahedral groups. All actions are exact integer permutations; there
//! is no interpolation anywhere.

use crate::group::{make_group, rotation_matrices, FiniteGroup, GroupError, GroupKind};
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ActionError {
    #[error("group {0} is not an exact symmetry of this domain")]
    UnsupportedGroup(String),
    #[error("signal length {got} does not match domain size {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Shape metadata for a domain signal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainShape {
    /// Signal indexed by group elements.
    Group,
    /// n x n pixel grid, row-major (i, j) -> i * n + j.
    Square(usize),
    /// n x n x n voxel cube, row-major (i, j, k) -> (i * n + j) * n + k.
    Cube(usize),
}

impl DomainShape {
    pub fn len(&self, group_order: usize) -> usize {
        match self {
            DomainShape::Group => group_order,
            DomainShape::Square(n) => n * n,
            DomainShape::Cube(n) => n * n * n,
        }
    }
}

/// A real signal on a discrete domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSignal {
    pub values: Vec<f64>,
    pub shape: DomainShape,
}

impl DomainSignal {
    pub fn new(values: Vec<f64>, shape: DomainShape) -> Self {
        DomainSignal { values, shape }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-element permutations `p_g` of a discrete domain: `u -> L_g(u)`.
///
/// Invariants established at construction: `p_e` is the identity and
/// `p_{g1 g2} = p_{g1} . p_{g2}` exactly.
#[derive(Debug, Clone)]
pub struct PermutationAction {
    group: Arc<FiniteGroup>,
    domain_size: usize,
    shape: DomainShape,
    perms: Vec<Vec<usize>>,
}

impl PermutationAction {
    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn shape(&self) -> &DomainShape {
        &self.shape
    }

    /// The permutation for group element `g`.
    pub fn perm(&self, g: usize) -> &[usize] {
        &self.perms[g]
    }

    /// Point action: image of domain point `u` under `g`.
    #[inline]
    pub fn apply_point(&self, g: usize, u: usize) -> usize {
        self.perms[g][u]
    }

    /// Checks the action axioms exactly. Cheap enough to run at construction.
    pub fn validate(&self) -> Result<(), ActionError> {
        let e = self.group.identity();
        let n = self.group.order();
        for u in 0..self.domain_size {
            if self.perms[e][u] != u {
                return Err(ActionError::UnsupportedGroup(format!(
                    "identity permutation moves point {u}"
                )));
            }
        }
        let mut seen = vec![false; self.domain_size];
        for g in 0..n {
            seen.iter_mut().for_each(|s| *s = false);
            for u in 0..self.domain_size {
                let v = self.perms[g][u];
                if v >= self.domain_size || seen[v] {
                    return Err(ActionError::UnsupportedGroup(format!(
                        "element {g} is not a bijection"
                    )));
                }
                seen[v] = true;
            }
        }
        for g1 in 0..n {
            for g2 in 0..n {
                let g12 = self.group.mul(g1, g2);
                for u in 0..self.domain_size {
                    if self.perms[g12][u] != self.perms[g1][self.perms[g2][u]] {
                        return Err(ActionError::UnsupportedGroup(format!(
                            "compatibility fails at ({g1}, {g2})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The group acting on itself by left translation: `p_h(g) = h * g`.
pub fn regular_action(group: &Arc<FiniteGroup>) -> PermutationAction {
    let n = group.order();
    let perms = (0..n).map(|h| (0..n).map(|g| group.mul(h, g)).collect()).collect();
    PermutationAction {
        group: Arc::clone(group),
        domain_size: n,
        shape: DomainShape::Group,
        perms,
    }
}

/// Action of a group element on a signal: `output(u) = f(L_{h^-1}(u))`.
pub fn apply_signal_action(
    action: &PermutationAction,
    h: usize,
    f: &DomainSignal,
) -> Result<DomainSignal, ActionError> {
    if f.values.len() != action.domain_size {
        return Err(ActionError::LengthMismatch {
            got: f.values.len(),
            expected: action.domain_size,
        });
    }
    let hinv = action.group.inv(h);
    let p = &action.perms[hinv];
    let values = (0..action.domain_size).map(|u| f.values[p[u]]).collect();
    Ok(DomainSignal { values, shape: f.shape.clone() })
}

/// Same as [`apply_signal_action`] for raw slices indexed by the group
/// (regular action shortcut used in hot paths): `out(g) = theta(h^-1 g)`.
pub fn translate_group_signal(group: &FiniteGroup, h: usize, theta: &[f64]) -> Vec<f64> {
    let hinv = group.inv(h);
    (0..group.order()).map(|g| theta[group.mul(hinv, g)]).collect()
}

fn is_square_symmetry(kind: &GroupKind) -> bool {
    matches!(
        kind,
        GroupKind::Cyclic(1)
            | GroupKind::Cyclic(2)
            | GroupKind::Cyclic(4)
            | GroupKind::Dihedral(1)
            | GroupKind::Dihedral(2)
            | GroupKind::Dihedral(4)
    )
}

/// Exact action of a square-lattice symmetry group on an n x n pixel grid.
///
/// The generator conventions: rotation by 90 degrees maps pixel (i, j) to
/// (j, n-1-i); the reflection maps (i, j) to (i, n-1-j). Rotations about the
/// grid center, exact for both parities of n.
pub fn square_grid_action(kind: &GroupKind, n: usize) -> Result<PermutationAction, ActionError> {
    if !is_square_symmetry(kind) {
        return Err(ActionError::UnsupportedGroup(format!(
            "{kind} on a square grid would require interpolation"
        )));
    }
    let group = make_group(kind)?;
    // quarter turns per rotation step: C1/D1 -> 0 per step is wrong for C2/D2,
    // so express every element as (quarter_turns, flip).
    let steps = match kind {
        GroupKind::Cyclic(m) | GroupKind::Dihedral(m) => 4 / m,
        _ => unreachable!(),
    };
    let rot = |i: usize, j: usize| (j, n - 1 - i);
    let flip = |i: usize, j: usize| (i, n - 1 - j);
    let order = group.order();
    let mut perms = Vec::with_capacity(order);
    for g in 0..order {
        let (quarters, flipped) = match kind {
            GroupKind::Cyclic(_) => (g * steps, false),
            GroupKind::Dihedral(m) => {
                if g < *m {
                    (g * steps, false)
                } else {
                    ((g - m) * steps, true)
                }
            }
            _ => unreachable!(),
        };
        let mut p = vec![0usize; n * n];
        for i in 0..n {
            for j in 0..n {
                let (mut a, mut b) = (i, j);
                // element s r^b acts as flip after rotations
                for _ in 0..(quarters % 4) {
                    let t = rot(a, b);
                    a = t.0;
                    b = t.1;
                }
                if flipped {
                    let t = flip(a, b);
                    a = t.0;
                    b = t.1;
                }
                p[i * n + j] = a * n + b;
            }
        }
        perms.push(p);
    }
    let action = PermutationAction {
        group,
        domain_size: n * n,
        shape: DomainShape::Square(n),
        perms,
    };
    action.validate()?;
    Ok(action)
}

/// Exact action of O or Oh on an n x n x n voxel cube.
///
/// Each group element acts as its signed axis permutation about the cube
/// center (n-1)/2; coordinates are doubled internally so even n stays exact.
pub fn cube_grid_action(kind: &GroupKind, n: usize) -> Result<PermutationAction, ActionError> {
    if !matches!(kind, GroupKind::Octahedral | GroupKind::FullOctahedral) {
        return Err(ActionError::UnsupportedGroup(format!("{kind} is not a cube symmetry group")));
    }
    let group = make_group(kind)?;
    let mats = rotation_matrices(kind).expect("octahedral kinds have matrices");
    let c = (n as i32) - 1; // doubled center coordinate
    let order = group.order();
    let mut perms = Vec::with_capacity(order);
    for mat in mats.iter().take(order) {
        let mut p = vec![0usize; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let w = [2 * i as i32 - c, 2 * j as i32 - c, 2 * k as i32 - c];
                    let r = mat.apply(w);
                    let (a, b, d) = (((r[0] + c) / 2) as usize, ((r[1] + c) / 2) as usize, ((r[2] + c) / 2) as usize);
                    p[(i * n + j) * n + k] = (a * n + b) * n + d;
                }
            }
        }
        perms.push(p);
    }
    let action = PermutationAction {
        group,
        domain_size: n * n * n,
        shape: DomainShape::Cube(n),
        perms,
    };
    action.validate()?;
    Ok(action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn klein() -> Arc<FiniteGroup> {
        make_group(&GroupKind::Klein).unwrap()
    }

    #[test]
    fn regular_c4() {
        let g = make_group(&GroupKind::Cyclic(4)).unwrap();
        let a = regular_action(&g);
        a.validate().unwrap();
        assert_eq!(a.perm(1), &[1, 2, 3, 0]);
        assert_eq!(a.perm(0), &[0, 1, 2, 3]);
    }

    #[test]
    fn regular_klein_h10() {
        let a = regular_action(&klein());
        // h = "10" is index 2; swaps 00<->10 and 01<->11
        assert_eq!(a.perm(2), &[2, 3, 0, 1]);
    }

    #[test]
    fn signal_action_klein() {
        let a = regular_action(&klein());
        let f = DomainSignal::new(vec![2.0, 0.0, 1.0, 1.0], DomainShape::Group);
        let out = apply_signal_action(&a, 2, &f).unwrap();
        assert_eq!(out.values, vec![1.0, 1.0, 2.0, 0.0]);
    }

    #[test]
    fn signal_action_identity_and_inverse() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let a = regular_action(&g);
        let mut rng = Rng::new(1);
        let f = DomainSignal::new((0..8).map(|_| rng.next_f64()).collect(), DomainShape::Group);
        let same = apply_signal_action(&a, g.identity(), &f).unwrap();
        assert_eq!(same.values, f.values);
        for h in 0..8 {
            let fwd = apply_signal_action(&a, h, &f).unwrap();
            let back = apply_signal_action(&a, g.inv(h), &fwd).unwrap();
            assert_eq!(back.values, f.values);
        }
    }

    #[test]
    fn signal_action_composition() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let a = regular_action(&g);
        let mut rng = Rng::new(2);
        let f = DomainSignal::new((0..8).map(|_| rng.next_f64()).collect(), DomainShape::Group);
        for h1 in 0..8 {
            for h2 in 0..8 {
                let lhs = apply_signal_action(&a, h1, &apply_signal_action(&a, h2, &f).unwrap())
                    .unwrap();
                let rhs = apply_signal_action(&a, g.mul(h1, h2), &f).unwrap();
                assert_eq!(lhs.values, rhs.values);
            }
        }
    }

    #[test]
    fn square_c4_2x2_cycles_pixels() {
        let a = square_grid_action(&GroupKind::Cyclic(4), 2).unwrap();
        assert_eq!(a.domain_size(), 4);
        // rotation by 90: (i,j) -> (j, 1-i): 0=(0,0)->(0,1)=1, 1=(0,1)->(1,1)=3,
        // 3=(1,1)->(1,0)=2, 2=(1,0)->(0,0)=0
        assert_eq!(a.perm(1), &[1, 3, 0, 2]);
        let perms: std::collections::HashSet<Vec<usize>> =
            (0..4).map(|g| a.perm(g).to_vec()).collect();
        assert_eq!(perms.len(), 4);
    }

    #[test]
    fn square_one_hot_moves_to_rotated_pixel() {
        let a = square_grid_action(&GroupKind::Cyclic(4), 2).unwrap();
        let mut f = DomainSignal::new(vec![0.0; 4], DomainShape::Square(2));
        f.values[0] = 1.0;
        let out = apply_signal_action(&a, 1, &f).unwrap();
        // pixel 0 = (0,0) rotates to (0,1) = index 1
        assert_eq!(out.values, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn square_d4_3x3_fixes_center() {
        let a = square_grid_action(&GroupKind::Dihedral(4), 3).unwrap();
        for g in 0..8 {
            assert_eq!(a.apply_point(g, 4), 4);
        }
    }

    #[test]
    fn square_c8_unsupported() {
        let err = square_grid_action(&GroupKind::Cyclic(8), 4).unwrap_err();
        assert!(matches!(err, ActionError::UnsupportedGroup(_)));
    }

    #[test]
    fn cube_o_faithful_on_2x2x2() {
        let a = cube_grid_action(&GroupKind::Octahedral, 2).unwrap();
        assert_eq!(a.domain_size(), 8);
        let distinct: std::collections::HashSet<Vec<usize>> =
            (0..24).map(|g| a.perm(g).to_vec()).collect();
        assert_eq!(distinct.len(), 24);
    }

    #[test]
    fn cube_oh_48_distinct() {
        let a = cube_grid_action(&GroupKind::FullOctahedral, 2).unwrap();
        let distinct: std::collections::HashSet<Vec<usize>> =
            (0..48).map(|g| a.perm(g).to_vec()).collect();
        assert_eq!(distinct.len(), 48);
    }

    #[test]
    fn cube_identity_is_identity() {
        for n in [2, 3] {
            let a = cube_grid_action(&GroupKind::Octahedral, n).unwrap();
            let id: Vec<usize> = (0..n * n * n).collect();
            assert_eq!(a.perm(0), id.as_slice());
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let a = regular_action(&klein());
        let f = DomainSignal::new(vec![1.0; 3], DomainShape::Group);
        assert!(matches!(
            apply_signal_action(&a, 0, &f),
            Err(ActionError::LengthMismatch { got: 3, expected: 4 })
        ));
    }
}
