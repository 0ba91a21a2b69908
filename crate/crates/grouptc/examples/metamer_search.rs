//! Metamer search: optimize random inputs to match a trained model's
//! pre-classifier representation of a target. For the max-pooling model
//! this finds inputs far outside the target's orbit (metamers); for the
//! triple-correlation model every converged input lands in the orbit.
//!
//! Run with: cargo run --release --example metamer_search

use grouptc::completeness::{metamer_search, MetamerConfig, RestartOutcome};
use grouptc::group::GroupKind;
use grouptc::rng::Rng;
use grouptc::train::compare::paired_architectures;
use grouptc::train::{synth_dataset, train_model, GridSpec, Model, ModelEnv, TrainConfig, Variant};

fn main() {
    let dataset = synth_dataset(&GroupKind::Dihedral(4), 10, 24, 8, GridSpec::Square(5), 1)
        .expect("dataset builds");
    let config = TrainConfig {
        learning_rate: 1e-3,
        epochs: 4,
        batch_size: 32,
        seed: 0,
        ..Default::default()
    };
    let (tc_arch, max_arch) = paired_architectures(&dataset, 6, 48).unwrap();
    let env = ModelEnv::new(&tc_arch).unwrap();

    for arch in [tc_arch, max_arch] {
        let variant = arch.variant;
        let mut model = Model::new(arch, &env, &mut Rng::new(0xC0FFEE));
        train_model(&mut model, &env, &dataset, &config).unwrap();

        let mut search = MetamerConfig::from_training(&config);
        search.restarts = 8;
        search.steps = 2000;
        search.seed = 9;

        let mut in_orbit = 0;
        let mut metamers = 0;
        let mut stalled = 0;
        for (t, (target, _)) in dataset.test.iter().take(4).enumerate() {
            let report = metamer_search(&model, &env, t, target, &search, false).unwrap();
            for r in &report.restarts {
                match r.outcome {
                    RestartOutcome::InOrbit => in_orbit += 1,
                    RestartOutcome::Metamer => metamers += 1,
                    RestartOutcome::NonConvergence => stalled += 1,
                }
            }
        }
        println!(
            "{variant:>3} model: {in_orbit} converged in-orbit, {metamers} metamers, {stalled} stalled (4 targets x 8 restarts)"
        );
        match variant {
            Variant::Tc => println!(
                "    complete invariant: nothing that matches the representation leaves the orbit"
            ),
            Variant::Max => println!(
                "    lossy pooling: many far-away inputs produce the same representation"
            ),
        }
    }
}
