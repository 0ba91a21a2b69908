//! Synthetic classification datasets: one deterministic base sprite per
//! class, every sample a uniformly random group translate of its sprite.
//!
//! Sprites are built to be hard for lossy pooling: every class arranges the
//! same multiset of pixel values differently, so per-channel maxima carry
//! little class information while complete invariants separate the classes.

use super::model::{GridSpec, ModelEnv};
use super::TrainError;
use crate::action::{apply_signal_action, DomainSignal};
use crate::group::GroupKind;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub group: GroupKind,
    pub grid: GridSpec,
    pub n_classes: usize,
    pub train: Vec<(Vec<f64>, usize)>,
    pub val: Vec<(Vec<f64>, usize)>,
    pub test: Vec<(Vec<f64>, usize)>,
    /// Base pattern per class, untransformed.
    pub sprites: Vec<Vec<f64>>,
}

fn shuffle<T>(items: &mut [T], rng: &mut Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.below(i + 1);
        items.swap(i, j);
    }
}

/// Deterministic synthetic dataset for an exact-lattice group.
///
/// `n_per_class` samples are generated per class and split 80/20 into train
/// and validation; `test_per_class` extra samples form the test set.
pub fn synth_dataset(
    group: &GroupKind,
    n_classes: usize,
    n_per_class: usize,
    test_per_class: usize,
    grid: GridSpec,
    seed: u64,
) -> Result<Dataset, TrainError> {
    let supported = matches!(
        group,
        GroupKind::Cyclic(4)
            | GroupKind::Dihedral(4)
            | GroupKind::Octahedral
            | GroupKind::FullOctahedral
    );
    if !supported {
        return Err(TrainError::UnsupportedGroup(format!("{group}")));
    }
    let arch_probe = super::model::Architecture {
        variant: super::model::Variant::Tc,
        group: group.clone(),
        grid: grid.clone(),
        channels: 1,
        hidden: [1, 1, 1],
        n_classes,
    };
    let env = ModelEnv::new(&arch_probe)?;
    let omega = env.action.domain_size();

    let mut rng = Rng::new(seed ^ 0x5EED_DA7A);
    // one shared value multiset, arranged differently per class
    let master: Vec<f64> = (0..omega).map(|_| rng.next_f64()).collect();
    let mut sprites = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let mut arrangement = master.clone();
        let mut class_rng = rng.fork(c as u64 + 1);
        shuffle(&mut arrangement, &mut class_rng);
        sprites.push(arrangement);
    }

    let make_samples = |count: usize, stream: &mut Rng| -> Vec<(Vec<f64>, usize)> {
        let mut samples = Vec::with_capacity(count * n_classes);
        for (c, sprite) in sprites.iter().enumerate() {
            for _ in 0..count {
                let h = stream.below(env.action.group().order());
                let moved = apply_signal_action(
                    &env.action,
                    h,
                    &DomainSignal::new(sprite.clone(), env.action.shape().clone()),
                )
                .expect("sprite length matches the action");
                samples.push((moved.values, c));
            }
        }
        samples
    };

    let mut train_stream = rng.fork(0xA11CE);
    let mut all_train = make_samples(n_per_class, &mut train_stream);
    shuffle(&mut all_train, &mut train_stream);
    let val_size = all_train.len() / 5;
    let val = all_train.split_off(all_train.len() - val_size);
    let mut test_stream = rng.fork(0xB0B);
    let test = make_samples(test_per_class, &mut test_stream);

    if all_train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    Ok(Dataset {
        group: group.clone(),
        grid,
        n_classes,
        train: all_train,
        val,
        test,
        sprites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completeness::same_orbit;

    #[test]
    fn deterministic_across_runs() {
        let a = synth_dataset(&GroupKind::Dihedral(4), 4, 10, 5, GridSpec::Square(5), 7).unwrap();
        let b = synth_dataset(&GroupKind::Dihedral(4), 4, 10, 5, GridSpec::Square(5), 7).unwrap();
        assert_eq!(a.train.len(), b.train.len());
        for (x, y) in a.train.iter().zip(&b.train) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
    }

    #[test]
    fn every_sample_in_its_class_orbit() {
        let ds = synth_dataset(&GroupKind::Dihedral(4), 3, 8, 4, GridSpec::Square(4), 3).unwrap();
        let arch = super::super::model::Architecture {
            variant: super::super::model::Variant::Tc,
            group: GroupKind::Dihedral(4),
            grid: GridSpec::Square(4),
            channels: 1,
            hidden: [1, 1, 1],
            n_classes: 3,
        };
        let env = ModelEnv::new(&arch).unwrap();
        for (input, label) in ds.train.iter().chain(&ds.val).chain(&ds.test) {
            let h = same_orbit(&ds.sprites[*label], input, &env.action, 1e-12).unwrap();
            assert!(h.is_some());
        }
    }

    #[test]
    fn split_sizes() {
        let ds = synth_dataset(&GroupKind::Cyclic(4), 5, 10, 3, GridSpec::Square(4), 1).unwrap();
        assert_eq!(ds.train.len() + ds.val.len(), 50);
        assert_eq!(ds.val.len(), 10);
        assert_eq!(ds.test.len(), 15);
    }

    #[test]
    fn voxel_sprites_rotate() {
        let ds = synth_dataset(&GroupKind::Octahedral, 2, 4, 2, GridSpec::Cube(3), 11).unwrap();
        assert_eq!(ds.train[0].0.len(), 27);
    }

    #[test]
    fn unsupported_group_rejected() {
        let err = synth_dataset(&GroupKind::Cyclic(8), 2, 4, 2, GridSpec::Square(4), 0)
            .unwrap_err();
        assert!(matches!(err, TrainError::UnsupportedGroup(_)));
    }
}
