//! Training loop and the paired max-versus-TC comparison experiment.

use super::adam::{adam_step, plateau_update, AdamState, TrainConfig};
use super::data::Dataset;
use super::model::{
    cross_entropy, forward, loss_and_gradients, matched_hidden_width, update_running_stats,
    Architecture, Mode, Model, ModelEnv, Variant,
};
use super::TrainError;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub split: &'static str,
    pub loss: f64,
    pub accuracy: f64,
    pub learning_rate: f64,
}

/// Mean loss and accuracy over a labelled set, eval mode.
pub fn evaluate(
    model: &Model,
    env: &ModelEnv,
    data: &[(Vec<f64>, usize)],
) -> Result<(f64, f64), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptySplit("eval"));
    }
    let mut total_loss = 0.0;
    let mut correct = 0usize;
    for chunk in data.chunks(64) {
        let inputs: Vec<Vec<f64>> = chunk.iter().map(|(x, _)| x.clone()).collect();
        let labels: Vec<usize> = chunk.iter().map(|(_, y)| *y).collect();
        let cache = forward(model, env, &inputs, Mode::Eval)?;
        let (loss, _) = cross_entropy(&cache.logits, &labels);
        total_loss += loss * labels.len() as f64;
        for (row, &label) in cache.logits.iter().zip(&labels) {
            let pred = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            if pred == label {
                correct += 1;
            }
        }
    }
    Ok((total_loss / data.len() as f64, correct as f64 / data.len() as f64))
}

/// Train in place; returns the per-epoch log. Batch order is a pure
/// function of the config seed, so runs are reproducible.
pub fn train_model(
    model: &mut Model,
    env: &ModelEnv,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<Vec<TrainLogRow>, TrainError> {
    config.validate().map_err(TrainError::ShapeMismatch)?;
    if dataset.train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    let mut state = AdamState::new(model.param_count(), config);
    let mut order_rng = Rng::new(config.seed ^ 0x0BDE_0BDE_0BDE_0BDE);
    let mut log = Vec::new();
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    for epoch in 0..config.epochs {
        for i in (1..order.len()).rev() {
            let j = order_rng.below(i + 1);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for batch_ids in order.chunks(config.batch_size) {
            let inputs: Vec<Vec<f64>> =
                batch_ids.iter().map(|&i| dataset.train[i].0.clone()).collect();
            let labels: Vec<usize> = batch_ids.iter().map(|&i| dataset.train[i].1).collect();
            let (loss, grads, cache) = loss_and_gradients(model, env, &inputs, &labels)?;
            update_running_stats(model, &cache);
            adam_step(&mut model.params, &grads, config, &mut state);
            epoch_loss += loss * labels.len() as f64;
            seen += labels.len();
        }
        let train_loss = epoch_loss / seen.max(1) as f64;
        let (val_loss, val_acc) = if dataset.val.is_empty() {
            (train_loss, f64::NAN)
        } else {
            evaluate(model, env, &dataset.val)?
        };
        log.push(TrainLogRow {
            epoch,
            split: "train",
            loss: train_loss,
            accuracy: f64::NAN,
            learning_rate: state.learning_rate,
        });
        log.push(TrainLogRow {
            epoch,
            split: "val",
            loss: val_loss,
            accuracy: val_acc,
            learning_rate: state.learning_rate,
        });
        plateau_update(&mut state, val_loss, config);
    }
    Ok(log)
}

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub tc_accuracy: f64,
    pub max_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub results: Vec<SeedResult>,
    pub tc_mean: f64,
    pub tc_std: f64,
    pub max_mean: f64,
    pub max_std: f64,
    pub tc_params: usize,
    pub max_params: usize,
    pub param_diff_percent: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Architectures for the paired experiment: the max variant's first MLP
/// width is solved so total parameter counts agree within a fraction of a
/// percent.
pub fn paired_architectures(
    dataset: &Dataset,
    channels: usize,
    hidden: usize,
) -> Result<(Architecture, Architecture), TrainError> {
    let tc_arch = Architecture {
        variant: Variant::Tc,
        group: dataset.group.clone(),
        grid: dataset.grid.clone(),
        channels,
        hidden: [hidden, hidden, hidden],
        n_classes: dataset.n_classes,
    };
    let env = ModelEnv::new(&tc_arch)?;
    let h1 = matched_hidden_width(&tc_arch, &env)?;
    let mut max_arch = tc_arch.clone();
    max_arch.variant = Variant::Max;
    max_arch.hidden[0] = h1;
    Ok((tc_arch, max_arch))
}

/// Train both variants on identical data with identical seeds and report
/// test accuracy per seed.
pub fn run_comparison(
    dataset: &Dataset,
    config: &TrainConfig,
    seeds: &[u64],
    channels: usize,
    hidden: usize,
) -> Result<ComparisonReport, TrainError> {
    let (tc_arch, max_arch) = paired_architectures(dataset, channels, hidden)?;
    let env = ModelEnv::new(&tc_arch)?;
    let mut results = Vec::new();
    let mut tc_params = 0;
    let mut max_params = 0;
    for &seed in seeds {
        let mut cfg = config.clone();
        cfg.seed = seed;
        let mut init_rng = Rng::new(seed.wrapping_mul(0x9E37_79B9) ^ 0xC0FFEE);
        let mut tc_model = Model::new(tc_arch.clone(), &env, &mut init_rng);
        let mut init_rng_max = Rng::new(seed.wrapping_mul(0x9E37_79B9) ^ 0xC0FFEE);
        let mut max_model = Model::new(max_arch.clone(), &env, &mut init_rng_max);
        tc_params = tc_model.param_count();
        max_params = max_model.param_count();
        train_model(&mut tc_model, &env, dataset, &cfg)?;
        train_model(&mut max_model, &env, dataset, &cfg)?;
        let (_, tc_acc) = evaluate(&tc_model, &env, &dataset.test)?;
        let (_, max_acc) = evaluate(&max_model, &env, &dataset.test)?;
        results.push(SeedResult { seed, tc_accuracy: tc_acc, max_accuracy: max_acc });
    }
    let (tc_mean, tc_std) = mean_std(&results.iter().map(|r| r.tc_accuracy).collect::<Vec<_>>());
    let (max_mean, max_std) =
        mean_std(&results.iter().map(|r| r.max_accuracy).collect::<Vec<_>>());
    let param_diff_percent = (tc_params as f64 - max_params as f64).abs()
        / (tc_params.max(max_params) as f64)
        * 100.0;
    Ok(ComparisonReport {
        results,
        tc_mean,
        tc_std,
        max_mean,
        max_std,
        tc_params,
        max_params,
        param_diff_percent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupKind;
    use crate::train::data::synth_dataset;
    use crate::train::model::GridSpec;

    #[test]
    fn smoke_one_epoch_both_variants() {
        let dataset =
            synth_dataset(&GroupKind::Dihedral(4), 3, 10, 5, GridSpec::Square(4), 1).unwrap();
        let config = TrainConfig {
            epochs: 1,
            batch_size: 8,
            learning_rate: 1e-3,
            ..Default::default()
        };
        let report = run_comparison(&dataset, &config, &[0], 4, 16).unwrap();
        assert_eq!(report.results.len(), 1);
        assert!(report.param_diff_percent < 2.0);
        assert!(report.tc_mean.is_finite());
        assert!(report.max_mean.is_finite());
    }

    #[test]
    fn training_is_reproducible() {
        let dataset =
            synth_dataset(&GroupKind::Cyclic(4), 2, 8, 4, GridSpec::Square(4), 2).unwrap();
        let (tc_arch, _) = paired_architectures(&dataset, 2, 8).unwrap();
        let env = ModelEnv::new(&tc_arch).unwrap();
        let config = TrainConfig {
            epochs: 2,
            batch_size: 4,
            learning_rate: 1e-3,
            seed: 9,
            ..Default::default()
        };
        let mut a = Model::new(tc_arch.clone(), &env, &mut Rng::new(42));
        let mut b = Model::new(tc_arch, &env, &mut Rng::new(42));
        train_model(&mut a, &env, &dataset, &config).unwrap();
        train_model(&mut b, &env, &dataset, &config).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn loss_decreases_on_tiny_task() {
        let dataset =
            synth_dataset(&GroupKind::Dihedral(4), 2, 12, 4, GridSpec::Square(4), 3).unwrap();
        let (tc_arch, _) = paired_architectures(&dataset, 3, 8).unwrap();
        let env = ModelEnv::new(&tc_arch).unwrap();
        let config = TrainConfig {
            epochs: 15,
            batch_size: 8,
            learning_rate: 3e-3,
            seed: 4,
            ..Default::default()
        };
        let mut model = Model::new(tc_arch, &env, &mut Rng::new(11));
        let log = train_model(&mut model, &env, &dataset, &config).unwrap();
        let first = log.iter().find(|r| r.split == "train").unwrap().loss;
        let last = log.iter().rev().find(|r| r.split == "train").unwrap().loss;
        assert!(last < first, "loss did not decrease: {first} -> {last}");
    }
}
