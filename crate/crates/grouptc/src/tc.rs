//! The G-triple-correlation and its symmetry-reduced form.
//!
//! For a real signal `theta` on a finite group G the triple correlation is
//!
//! ```text
//! T(g1, g2) = sum_g theta(g) * theta(g * g1) * theta(g * g2)
//! ```
//!
//! an unnormalized sum over the group. It is invariant under left translation
//! of the signal and, together with the mean, is a complete invariant: two
//! signals with invertible Fourier coefficients and equal triple correlations
//! lie in the same group orbit.
//!
//! The coefficient table carries symmetries: `T(g1,g2) = T(g2,g1)` always,
//! and four additional relations on commutative groups. Partitioning the
//! `|G|^2` pairs by the closure of these relations cuts the stored
//! coefficients to at most `|G|(|G|+1)/2`.

use crate::gconv::FeatureMap;
use crate::group::FiniteGroup;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum TcError {
    #[error("signal length {got} does not match group order {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Full `|G| x |G|` triple-correlation table.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleCorrelation {
    group: Arc<FiniteGroup>,
    pub coefficients: Vec<Vec<f64>>,
}

impl TripleCorrelation {
    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn get(&self, g1: usize, g2: usize) -> f64 {
        self.coefficients[g1][g2]
    }
}

/// Orbit partition of the pair set `(g1, g2)` under the symmetry relations.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryClasses {
    group: Arc<FiniteGroup>,
    /// Class index for every flattened pair `g1 * |G| + g2`.
    pub class_of_pair: Vec<usize>,
    /// One pair per class, lexicographically smallest, in class order.
    pub representatives: Vec<(usize, usize)>,
    /// Members per class, sorted.
    pub classes: Vec<Vec<(usize, usize)>>,
}

impl SymmetryClasses {
    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn class_count(&self) -> usize {
        self.representatives.len()
    }
}

fn check_len(group: &FiniteGroup, theta_len: usize) -> Result<(), TcError> {
    if theta_len != group.order() {
        return Err(TcError::LengthMismatch { got: theta_len, expected: group.order() });
    }
    Ok(())
}

/// Full triple correlation, plain unnormalized sum.
pub fn triple_correlation_full(
    group: &Arc<FiniteGroup>,
    theta: &[f64],
) -> Result<TripleCorrelation, TcError> {
    check_len(group, theta.len())?;
    let n = group.order();
    let mut coefficients = vec![vec![0.0; n]; n];
    for g1 in 0..n {
        for g2 in 0..n {
            let mut acc = 0.0;
            for g in 0..n {
                acc += theta[g] * theta[group.mul(g, g1)] * theta[group.mul(g, g2)];
            }
            coefficients[g1][g2] = acc;
        }
    }
    Ok(TripleCorrelation { group: Arc::clone(group), coefficients })
}

/// Integer-exact triple correlation, used for collision fingerprints.
pub fn triple_correlation_int(group: &FiniteGroup, theta: &[i64]) -> Result<Vec<Vec<i64>>, TcError> {
    check_len(group, theta.len())?;
    let n = group.order();
    let mut t = vec![vec![0i64; n]; n];
    for g1 in 0..n {
        for g2 in 0..n {
            let mut acc = 0i64;
            for g in 0..n {
                acc += theta[g] * theta[group.mul(g, g1)] * theta[group.mul(g, g2)];
            }
            t[g1][g2] = acc;
        }
    }
    Ok(t)
}

/// Partition of all pairs under the swap relation and, on commutative
/// groups, the four inverse-shift relations. Computed as a transitive
/// closure by union-find.
pub fn symmetry_classes(group: &Arc<FiniteGroup>) -> SymmetryClasses {
    let n = group.order();
    let total = n * n;
    let mut parent: Vec<usize> = (0..total).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    fn union(parent: &mut [usize], a: usize, b: usize) {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    }

    let commutative = group.is_commutative();
    for g1 in 0..n {
        for g2 in 0..n {
            let id = g1 * n + g2;
            union(&mut parent, id, g2 * n + g1);
            if commutative {
                let g1i = group.inv(g1);
                let g2i = group.inv(g2);
                let a = group.mul(g2, g1i);
                let b = group.mul(g1, g2i);
                union(&mut parent, id, g1i * n + a);
                union(&mut parent, id, a * n + g1i);
                union(&mut parent, id, g2i * n + b);
                union(&mut parent, id, b * n + g2i);
            }
        }
    }

    let mut roots: Vec<usize> = Vec::new();
    let mut class_index = vec![usize::MAX; total];
    for p in 0..total {
        let r = find(&mut parent, p);
        if class_index[r] == usize::MAX {
            class_index[r] = roots.len();
            roots.push(r);
        }
    }
    let mut class_of_pair = vec![0usize; total];
    let mut classes: Vec<Vec<(usize, usize)>> = vec![Vec::new(); roots.len()];
    for p in 0..total {
        let r = find(&mut parent, p);
        let c = class_index[r];
        class_of_pair[p] = c;
        classes[c].push((p / n, p % n));
    }
    // union-find parents shrink toward the smallest member, and pairs are
    // visited in lex order, so each class's first member is its lex minimum
    let representatives: Vec<(usize, usize)> = classes.iter().map(|c| c[0]).collect();
    SymmetryClasses {
        group: Arc::clone(group),
        class_of_pair,
        representatives,
        classes,
    }
}

/// Triple correlation evaluated only at class representatives.
pub fn triple_correlation_reduced(
    group: &Arc<FiniteGroup>,
    classes: &SymmetryClasses,
    theta: &[f64],
) -> Result<Vec<f64>, TcError> {
    check_len(group, theta.len())?;
    let n = group.order();
    let mut out = Vec::with_capacity(classes.representatives.len());
    for &(g1, g2) in &classes.representatives {
        let mut acc = 0.0;
        for g in 0..n {
            acc += theta[g] * theta[group.mul(g, g1)] * theta[group.mul(g, g2)];
        }
        out.push(acc);
    }
    Ok(out)
}

/// Expand a reduced vector back to the full table.
pub fn expand_reduced(classes: &SymmetryClasses, reduced: &[f64]) -> Vec<Vec<f64>> {
    let n = classes.group.order();
    let mut full = vec![vec![0.0; n]; n];
    for g1 in 0..n {
        for g2 in 0..n {
            full[g1][g2] = reduced[classes.class_of_pair[g1 * n + g2]];
        }
    }
    full
}

/// Reduced TC of every channel of a feature map, concatenated in channel
/// order. This is the G-TC layer output.
pub fn tc_features(
    theta: &FeatureMap,
    classes: &SymmetryClasses,
) -> Result<Vec<f64>, TcError> {
    let group = theta.group();
    let mut out = Vec::with_capacity(theta.channels() * classes.representatives.len());
    for channel in &theta.values {
        out.extend(triple_correlation_reduced(group, classes, channel)?);
    }
    Ok(out)
}

/// Gradient of the reduced TC with respect to the signal.
///
/// For `T(g1,g2) = sum_g theta(g) theta(g g1) theta(g g2)`,
/// `dT/dtheta(x) = theta(x g1) theta(x g2) + theta(x g1^-1) theta(x g1^-1 g2)
/// + theta(x g2^-1) theta(x g2^-1 g1)`. Accumulates `upstream . dT/dtheta`.
pub fn tc_reduced_backward(
    group: &FiniteGroup,
    classes: &SymmetryClasses,
    theta: &[f64],
    upstream: &[f64],
) -> Vec<f64> {
    let n = group.order();
    debug_assert_eq!(upstream.len(), classes.representatives.len());
    let mut grad = vec![0.0; n];
    for (r, &(g1, g2)) in classes.representatives.iter().enumerate() {
        let u = upstream[r];
        if u == 0.0 {
            continue;
        }
        let g1i = group.inv(g1);
        let g2i = group.inv(g2);
        for x in 0..n {
            let a = theta[group.mul(x, g1)] * theta[group.mul(x, g2)];
            let xg1i = group.mul(x, g1i);
            let b = theta[xg1i] * theta[group.mul(xg1i, g2)];
            let xg2i = group.mul(x, g2i);
            let c = theta[xg2i] * theta[group.mul(xg2i, g1)];
            grad[x] += u * (a + b + c);
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::translate_group_signal;
    use crate::group::{make_group, GroupKind};
    use crate::rng::Rng;

    fn c4() -> Arc<FiniteGroup> {
        make_group(&GroupKind::Cyclic(4)).unwrap()
    }

    fn klein() -> Arc<FiniteGroup> {
        make_group(&GroupKind::Klein).unwrap()
    }

    #[test]
    fn golden_c4_values() {
        let g = c4();
        let theta = [0.0, -1.0, 1.0, 2.0];
        let t = triple_correlation_full(&g, &theta).unwrap();
        assert_eq!(t.get(0, 0), 8.0);
        assert_eq!(t.get(0, 1), 3.0);
        assert_eq!(t.get(0, 2), -2.0);
        assert_eq!(t.get(0, 3), 3.0);
        assert_eq!(t.get(1, 2), -2.0);
        // symmetric partners printed alongside the worked values
        assert_eq!(t.get(3, 3), 3.0);
        assert_eq!(t.get(2, 2), -2.0);
        assert_eq!(t.get(1, 1), 3.0);
        assert_eq!(t.get(1, 3), -2.0);
        assert_eq!(t.get(2, 3), -2.0);
    }

    #[test]
    fn golden_klein_values() {
        let g = klein();
        let theta = [2.0, 0.0, 1.0, 1.0];
        let t = triple_correlation_full(&g, &theta).unwrap();
        assert_eq!(t.get(0, 0), 10.0);
        assert_eq!(t.get(0, 1), 2.0);
        // direct evaluation; also forced by T(00,10) = T(10,10)
        assert_eq!(t.get(0, 2), 6.0);
        assert_eq!(t.get(2, 2), 6.0);
        assert_eq!(t.get(0, 3), 6.0);
        assert_eq!(t.get(1, 2), 2.0);
        assert_eq!(t.get(3, 2), 2.0);
    }

    #[test]
    fn golden_klein_theta_prime_values() {
        // The second worked signal; the value at (00,10) is 6 by direct
        // evaluation (the printed 14 does not match its own expansion).
        let g = klein();
        let theta = [0.0, 1.0, 1.0, 2.0];
        let t = triple_correlation_full(&g, &theta).unwrap();
        assert_eq!(t.get(0, 0), 10.0);
        assert_eq!(t.get(0, 1), 6.0);
        assert_eq!(t.get(0, 2), 6.0);
        assert_eq!(t.get(0, 3), 2.0);
        assert_eq!(t.get(1, 2), 2.0);
        assert_eq!(t.get(3, 2), 2.0);
    }

    #[test]
    fn constant_signal() {
        let g = c4();
        let t = triple_correlation_full(&g, &[3.0; 4]).unwrap();
        for g1 in 0..4 {
            for g2 in 0..4 {
                assert_eq!(t.get(g1, g2), 4.0 * 27.0);
            }
        }
    }

    #[test]
    fn identity_indicator() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let mut theta = vec![0.0; 8];
        theta[g.identity()] = 1.0;
        let t = triple_correlation_full(&g, &theta).unwrap();
        for g1 in 0..8 {
            for g2 in 0..8 {
                let expected = if g1 == g.identity() && g2 == g.identity() { 1.0 } else { 0.0 };
                assert_eq!(t.get(g1, g2), expected);
            }
        }
    }

    #[test]
    fn c4_classes() {
        let g = c4();
        let cls = symmetry_classes(&g);
        assert_eq!(cls.class_count(), 5);
        assert_eq!(cls.representatives, vec![(0, 0), (0, 1), (0, 2), (0, 3), (1, 2)]);
        let mut sizes: Vec<usize> = cls.classes.iter().map(|c| c.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 3, 3, 3, 6]);
    }

    #[test]
    fn trivial_group_single_class() {
        let g = make_group(&GroupKind::Cyclic(1)).unwrap();
        let cls = symmetry_classes(&g);
        assert_eq!(cls.class_count(), 1);
    }

    #[test]
    fn d4_swap_only_class_count() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let cls = symmetry_classes(&g);
        assert_eq!(cls.class_count(), 8 * 9 / 2);
    }

    #[test]
    fn reduced_matches_full_at_representatives() {
        let g = c4();
        let cls = symmetry_classes(&g);
        let theta = [0.0, -1.0, 1.0, 2.0];
        let reduced = triple_correlation_reduced(&g, &cls, &theta).unwrap();
        assert_eq!(reduced, vec![8.0, 3.0, -2.0, 3.0, -2.0]);
        let full = triple_correlation_full(&g, &theta).unwrap();
        let expanded = expand_reduced(&cls, &reduced);
        assert_eq!(expanded, full.coefficients);
    }

    #[test]
    fn reduced_expansion_on_d4_random() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let cls = symmetry_classes(&g);
        let mut rng = Rng::new(17);
        for _ in 0..10 {
            let theta: Vec<f64> = (0..8).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let reduced = triple_correlation_reduced(&g, &cls, &theta).unwrap();
            let full = triple_correlation_full(&g, &theta).unwrap();
            let expanded = expand_reduced(&cls, &reduced);
            for g1 in 0..8 {
                for g2 in 0..8 {
                    assert!((expanded[g1][g2] - full.coefficients[g1][g2]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn invariance_under_translation() {
        for kind in [GroupKind::Cyclic(4), GroupKind::Klein, GroupKind::Dihedral(4)] {
            let g = make_group(&kind).unwrap();
            let n = g.order();
            let mut rng = Rng::new(23);
            let theta: Vec<f64> = (0..n).map(|_| rng.below(9) as f64 - 4.0).collect();
            let t0 = triple_correlation_full(&g, &theta).unwrap();
            for h in 0..n {
                let shifted = translate_group_signal(&g, h, &theta);
                let th = triple_correlation_full(&g, &shifted).unwrap();
                assert_eq!(th.coefficients, t0.coefficients, "kind {kind} h={h}");
            }
        }
    }

    #[test]
    fn swap_symmetry_noncommutative() {
        let g = make_group(&GroupKind::Octahedral).unwrap();
        let mut rng = Rng::new(31);
        let theta: Vec<f64> = (0..24).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let t = triple_correlation_full(&g, &theta).unwrap();
        for g1 in 0..24 {
            for g2 in 0..24 {
                assert!((t.get(g1, g2) - t.get(g2, g1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commutative_s2_relations_hold_coefficientwise() {
        for kind in [GroupKind::Cyclic(8), GroupKind::Klein] {
            let g = make_group(&kind).unwrap();
            let n = g.order();
            let mut rng = Rng::new(37);
            let theta: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let t = triple_correlation_full(&g, &theta).unwrap();
            for g1 in 0..n {
                for g2 in 0..n {
                    let g1i = g.inv(g1);
                    let g2i = g.inv(g2);
                    let a = g.mul(g2, g1i);
                    let b = g.mul(g1, g2i);
                    let v = t.get(g1, g2);
                    for (x, y) in [(g1i, a), (a, g1i), (g2i, b), (b, g2i)] {
                        assert!((t.get(x, y) - v).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn tc_features_channels_concatenate() {
        let g = c4();
        let cls = symmetry_classes(&g);
        let row = vec![0.0, -1.0, 1.0, 2.0];
        let map = FeatureMap::new(Arc::clone(&g), vec![row.clone(), row]);
        let features = tc_features(&map, &cls).unwrap();
        assert_eq!(features.len(), 10);
        assert_eq!(&features[0..5], &features[5..10]);
    }

    #[test]
    fn tc_features_invariant_under_common_translation() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let cls = symmetry_classes(&g);
        let mut rng = Rng::new(41);
        let map = FeatureMap::new(
            Arc::clone(&g),
            (0..3).map(|_| (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect(),
        );
        let f0 = tc_features(&map, &cls).unwrap();
        for h in 0..8 {
            let fh = tc_features(&map.translate(h), &cls).unwrap();
            for (a, b) in f0.iter().zip(&fh) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let cls = symmetry_classes(&g);
        let mut rng = Rng::new(43);
        let theta: Vec<f64> = (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let upstream: Vec<f64> =
            (0..cls.class_count()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let grad = tc_reduced_backward(&g, &cls, &theta, &upstream);
        let eps = 1e-5;
        for x in 0..8 {
            let mut plus = theta.clone();
            plus[x] += eps;
            let mut minus = theta.clone();
            minus[x] -= eps;
            let fp: f64 = triple_correlation_reduced(&g, &cls, &plus)
                .unwrap()
                .iter()
                .zip(&upstream)
                .map(|(v, u)| v * u)
                .sum();
            let fm: f64 = triple_correlation_reduced(&g, &cls, &minus)
                .unwrap()
                .iter()
                .zip(&upstream)
                .map(|(v, u)| v * u)
                .sum();
            let fd = (fp - fm) / (2.0 * eps);
            let rel = (grad[x] - fd).abs() / fd.abs().max(1.0);
            assert!(rel < 1e-5, "x={x} analytic={} fd={}", grad[x], fd);
        }
    }

    #[test]
    fn int_tc_matches_float() {
        let g = klein();
        let ints = [2i64, 0, 1, 1];
        let floats = [2.0, 0.0, 1.0, 1.0];
        let ti = triple_correlation_int(&g, &ints).unwrap();
        let tf = triple_correlation_full(&g, &floats).unwrap();
        for g1 in 0..4 {
            for g2 in 0..4 {
                assert_eq!(ti[g1][g2] as f64, tf.get(g1, g2));
            }
        }
    }

    #[test]
    fn length_mismatch() {
        let g = c4();
        assert!(matches!(
            triple_correlation_full(&g, &[1.0; 3]),
            Err(TcError::LengthMismatch { got: 3, expected: 4 })
        ));
    }
}
