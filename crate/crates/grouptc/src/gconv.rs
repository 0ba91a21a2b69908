//! G-convolution and max G-pooling.
//!
//! The convolution lifts a domain signal to a signal on the group:
//! `theta_k(g) = sum_u phi_k(L_{g^-1}(u)) f(u)`. A bank of K filters yields a
//! K-channel feature map indexed by group elements. Max G-pooling collapses
//! each channel to its maximum over the group; it is invariant but lossy.

use crate::action::{DomainSignal, PermutationAction};
use crate::group::FiniteGroup;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConvError {
    #[error("filter {index} has length {got}, expected domain size {expected}")]
    FilterLengthMismatch { index: usize, got: usize, expected: usize },
    #[error("signal length {got} does not match domain size {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("filter bank is empty")]
    EmptyBank,
}

/// K filters over a common domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub filters: Vec<Vec<f64>>,
}

impl FilterBank {
    pub fn new(filters: Vec<Vec<f64>>) -> Self {
        FilterBank { filters }
    }

    pub fn channels(&self) -> usize {
        self.filters.len()
    }
}

/// K-channel signal on a group: `values[k][g] = theta_k(g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    group: Arc<FiniteGroup>,
    pub values: Vec<Vec<f64>>,
}

impl FeatureMap {
    pub fn new(group: Arc<FiniteGroup>, values: Vec<Vec<f64>>) -> Self {
        debug_assert!(values.iter().all(|row| row.len() == group.order()));
        FeatureMap { group, values }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn channels(&self) -> usize {
        self.values.len()
    }

    /// Translate every channel by `h` under the regular action:
    /// `out_k(g) = theta_k(h^-1 g)`.
    pub fn translate(&self, h: usize) -> FeatureMap {
        let hinv = self.group.inv(h);
        let n = self.group.order();
        let values = self
            .values
            .iter()
            .map(|row| (0..n).map(|g| row[self.group.mul(hinv, g)]).collect())
            .collect();
        FeatureMap { group: Arc::clone(&self.group), values }
    }
}

/// Pure G-convolution of a signal with a filter bank.
///
/// Accumulation order over the domain is fixed ascending so results are
/// bit-identical regardless of how channels are scheduled.
pub fn g_convolve(
    bank: &FilterBank,
    f: &DomainSignal,
    action: &PermutationAction,
) -> Result<FeatureMap, ConvError> {
    let omega = action.domain_size();
    if bank.filters.is_empty() {
        return Err(ConvError::EmptyBank);
    }
    for (index, phi) in bank.filters.iter().enumerate() {
        if phi.len() != omega {
            return Err(ConvError::FilterLengthMismatch { index, got: phi.len(), expected: omega });
        }
    }
    if f.values.len() != omega {
        return Err(ConvError::LengthMismatch { got: f.values.len(), expected: omega });
    }
    let group = action.group();
    let n = group.order();
    let mut values = vec![vec![0.0; n]; bank.filters.len()];
    for (k, phi) in bank.filters.iter().enumerate() {
        for g in 0..n {
            let ginv = group.inv(g);
            let p = action.perm(ginv);
            let mut acc = 0.0;
            for u in 0..omega {
                acc += phi[p[u]] * f.values[u];
            }
            values[k][g] = acc;
        }
    }
    Ok(FeatureMap { group: Arc::clone(group), values })
}

/// Per-channel maximum over the group.
pub fn max_g_pool(theta: &FeatureMap) -> Vec<f64> {
    theta
        .values
        .iter()
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{apply_signal_action, regular_action, square_grid_action, DomainShape};
    use crate::group::{make_group, GroupKind};
    use crate::rng::Rng;

    #[test]
    fn constant_filter_gives_constant_output() {
        let a = square_grid_action(&GroupKind::Dihedral(4), 3).unwrap();
        let mut rng = Rng::new(5);
        let f = DomainSignal::new((0..9).map(|_| rng.uniform(-1.0, 1.0)).collect(), DomainShape::Square(3));
        let bank = FilterBank::new(vec![vec![1.0; 9]]);
        let theta = g_convolve(&bank, &f, &a).unwrap();
        let total: f64 = f.values.iter().sum();
        for g in 0..8 {
            assert!((theta.values[0][g] - total).abs() < 1e-12);
        }
    }

    #[test]
    fn matched_filter_peaks_at_identity() {
        let a = square_grid_action(&GroupKind::Cyclic(4), 2).unwrap();
        let mut f = DomainSignal::new(vec![0.0; 4], DomainShape::Square(2));
        f.values[0] = 1.0;
        let bank = FilterBank::new(vec![f.values.clone()]);
        let theta = g_convolve(&bank, &f, &a).unwrap();
        assert_eq!(theta.values[0], vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_signal_zero_output() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let a = regular_action(&g);
        let bank = FilterBank::new(vec![(0..8).map(|x| x as f64).collect()]);
        let f = DomainSignal::new(vec![0.0; 8], DomainShape::Group);
        let theta = g_convolve(&bank, &f, &a).unwrap();
        assert_eq!(theta.values[0], vec![0.0; 8]);
    }

    #[test]
    fn equivariance_exact_on_integers() {
        // phi * L_h[f] == L'_h[phi * f] with integer values, exact equality.
        for (kind, n) in [(GroupKind::Cyclic(4), 3), (GroupKind::Dihedral(4), 4)] {
            let a = square_grid_action(&kind, n).unwrap();
            let mut rng = Rng::new(9);
            let f = DomainSignal::new(
                (0..n * n).map(|_| rng.below(7) as f64 - 3.0).collect(),
                DomainShape::Square(n),
            );
            let bank = FilterBank::new(vec![
                (0..n * n).map(|_| rng.below(5) as f64 - 2.0).collect(),
                (0..n * n).map(|_| rng.below(5) as f64 - 2.0).collect(),
            ]);
            let theta = g_convolve(&bank, &f, &a).unwrap();
            for h in 0..a.group().order() {
                let fh = apply_signal_action(&a, h, &f).unwrap();
                let lhs = g_convolve(&bank, &fh, &a).unwrap();
                let rhs = theta.translate(h);
                assert_eq!(lhs.values, rhs.values, "kind {kind} h={h}");
            }
        }
    }

    #[test]
    fn max_pool_examples() {
        let g = make_group(&GroupKind::Cyclic(4)).unwrap();
        let theta = FeatureMap::new(Arc::clone(&g), vec![vec![0.0, -1.0, 1.0, 2.0]]);
        assert_eq!(max_g_pool(&theta), vec![2.0]);
        let constant = FeatureMap::new(Arc::clone(&g), vec![vec![3.5; 4]]);
        assert_eq!(max_g_pool(&constant), vec![3.5]);
    }

    #[test]
    fn max_pool_invariant_under_translates() {
        let g = make_group(&GroupKind::Dihedral(4)).unwrap();
        let mut rng = Rng::new(11);
        let theta = FeatureMap::new(
            Arc::clone(&g),
            vec![(0..8).map(|_| rng.uniform(-2.0, 2.0)).collect(); 3],
        );
        let mu = max_g_pool(&theta);
        for h in 0..8 {
            assert_eq!(max_g_pool(&theta.translate(h)), mu);
        }
    }

    #[test]
    fn filter_length_checked() {
        let g = make_group(&GroupKind::Cyclic(4)).unwrap();
        let a = regular_action(&g);
        let bank = FilterBank::new(vec![vec![1.0; 3]]);
        let f = DomainSignal::new(vec![0.0; 4], DomainShape::Group);
        assert!(matches!(
            g_convolve(&bank, &f, &a),
            Err(ConvError::FilterLengthMismatch { index: 0, .. })
        ));
    }
}
