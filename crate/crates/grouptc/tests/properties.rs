//! Property tests for the crate-wide invariants: invariance of the triple
//! correlation and bispectrum, convolution equivariance, pooling
//! invariance, and transform round trips, over randomized signals.

use grouptc::action::{apply_signal_action, regular_action, translate_group_signal, DomainSignal};
use grouptc::gconv::{g_convolve, max_g_pool, FeatureMap, FilterBank};
use grouptc::group::{make_group, GroupKind};
use grouptc::spectral::{builtin_irreps, gft, igft_real, SpectralContext};
use grouptc::tc::triple_correlation_full;
use proptest::prelude::*;
use std::sync::Arc;

fn small_kind() -> impl Strategy<Value = GroupKind> {
    prop_oneof![
        Just(GroupKind::Cyclic(4)),
        Just(GroupKind::Cyclic(8)),
        Just(GroupKind::Klein),
        Just(GroupKind::Dihedral(4)),
        Just(GroupKind::Dihedral(3)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tc_invariant_under_every_translate(kind in small_kind(), seed in 0u64..1000) {
        let group = make_group(&kind).unwrap();
        let n = group.order();
        let mut rng = grouptc::rng::Rng::new(seed);
        let theta: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let t0 = triple_correlation_full(&group, &theta).unwrap();
        let scale = t0.coefficients.iter().flatten().map(|v| v.abs()).fold(1e-300f64, f64::max);
        for h in 0..n {
            let moved = translate_group_signal(&group, h, &theta);
            let th = triple_correlation_full(&group, &moved).unwrap();
            let worst = th.coefficients.iter().flatten()
                .zip(t0.coefficients.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            prop_assert!(worst <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn convolution_equivariance_regular(kind in small_kind(), seed in 0u64..1000) {
        let group = make_group(&kind).unwrap();
        let action = regular_action(&group);
        let n = group.order();
        let mut rng = grouptc::rng::Rng::new(seed ^ 0xABCD);
        let f = DomainSignal::new((0..n).map(|_| rng.uniform(-1.0, 1.0)).collect(), action.shape().clone());
        let bank = FilterBank::new(vec![(0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()]);
        let theta = g_convolve(&bank, &f, &action).unwrap();
        for h in 0..n {
            let fh = apply_signal_action(&action, h, &f).unwrap();
            let lhs = g_convolve(&bank, &fh, &action).unwrap();
            let rhs = theta.translate(h);
            let worst = lhs.values.iter().flatten()
                .zip(rhs.values.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            prop_assert!(worst <= 1e-12);
        }
    }

    #[test]
    fn max_pool_invariant_under_any_channel_permutation(
        values in prop::collection::vec(-5.0f64..5.0, 8),
        perm_seed in 0u64..100,
    ) {
        let group = make_group(&GroupKind::Dihedral(4)).unwrap();
        let map = FeatureMap::new(Arc::clone(&group), vec![values.clone()]);
        let base = max_g_pool(&map);
        // arbitrary permutation, not only group translates
        let mut indices: Vec<usize> = (0..8).collect();
        let mut rng = grouptc::rng::Rng::new(perm_seed);
        for i in (1..8).rev() {
            let j = rng.below(i + 1);
            indices.swap(i, j);
        }
        let shuffled: Vec<f64> = indices.iter().map(|&i| values[i]).collect();
        let map2 = FeatureMap::new(Arc::clone(&group), vec![shuffled]);
        prop_assert_eq!(base, max_g_pool(&map2));
    }

    #[test]
    fn gft_roundtrip(kind in small_kind(), theta_seed in 0u64..1000) {
        let table = builtin_irreps(&kind).unwrap();
        let n = table.group().order();
        let mut rng = grouptc::rng::Rng::new(theta_seed ^ 0x9);
        let theta: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let f = gft(&theta, &table).unwrap();
        let (back, imag) = igft_real(&f, &table).unwrap();
        prop_assert!(imag <= 1e-10);
        for (a, b) in theta.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn bispectrum_invariant(kind in small_kind(), seed in 0u64..200) {
        let ctx = SpectralContext::new(builtin_irreps(&kind).unwrap()).unwrap();
        let group = ctx.table.group().clone();
        let n = group.order();
        let mut rng = grouptc::rng::Rng::new(seed ^ 0xB1);
        let theta: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let b0 = ctx.bispectrum(&theta, None).unwrap();
        let h = rng.below(n);
        let moved = translate_group_signal(&group, h, &theta);
        let bh = ctx.bispectrum(&moved, None).unwrap();
        prop_assert!(b0.relative_distance(&bh) <= 1e-10);
    }

    #[test]
    fn signal_csv_roundtrip(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let csv = grouptc::io::signal_to_csv(&[values.clone()]);
        let back = grouptc::io::signal_from_csv("mem", &csv).unwrap();
        prop_assert_eq!(back, vec![values]);
    }
}
