//! Model checkpoints: JSON with every 64-bit float stored as its shortest
//! round-trip decimal string, so a reloaded model is bit-identical.

use super::adam::TrainConfig;
use super::model::{Architecture, GridSpec, Model, ModelEnv, RunningStats};
use super::TrainError;
use crate::group::GroupKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub group: GroupKind,
    pub grid: GridSpec,
    pub n_classes: usize,
    pub n_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct StatsStrings {
    conv_mean: Vec<String>,
    conv_var: Vec<String>,
    feature_mean: Vec<String>,
    feature_var: Vec<String>,
    hidden_mean: Vec<Vec<String>>,
    hidden_var: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    arch: Architecture,
    params: Vec<String>,
    stats: StatsStrings,
    dataset: Option<DatasetSpec>,
    #[serde(default)]
    train_config: Option<TrainConfig>,
}

fn encode(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| format!("{v}")).collect()
}

fn decode(values: &[String]) -> Result<Vec<f64>, TrainError> {
    values
        .iter()
        .map(|s| s.parse::<f64>().map_err(|e| TrainError::ShapeMismatch(e.to_string())))
        .collect()
}

pub fn save_model(
    model: &Model,
    dataset: Option<&DatasetSpec>,
    train_config: Option<&TrainConfig>,
) -> String {
    let stats = StatsStrings {
        conv_mean: encode(&model.stats.conv_mean),
        conv_var: encode(&model.stats.conv_var),
        feature_mean: encode(&model.stats.feature_mean),
        feature_var: encode(&model.stats.feature_var),
        hidden_mean: model.stats.hidden_mean.iter().map(|v| encode(v)).collect(),
        hidden_var: model.stats.hidden_var.iter().map(|v| encode(v)).collect(),
    };
    let checkpoint = Checkpoint {
        format_version: 1,
        arch: model.arch.clone(),
        params: encode(&model.params),
        stats,
        dataset: dataset.cloned(),
        train_config: train_config.cloned(),
    };
    serde_json::to_string_pretty(&checkpoint).expect("checkpoint serializes")
}

pub struct LoadedModel {
    pub model: Model,
    pub env: ModelEnv,
    pub dataset: Option<DatasetSpec>,
    pub train_config: Option<TrainConfig>,
}

pub fn load_model(json: &str) -> Result<LoadedModel, TrainError> {
    let checkpoint: Checkpoint =
        serde_json::from_str(json).map_err(|e| TrainError::ShapeMismatch(e.to_string()))?;
    if checkpoint.format_version != 1 {
        return Err(TrainError::ShapeMismatch(format!(
            "unsupported checkpoint format_version {}",
            checkpoint.format_version
        )));
    }
    let env = ModelEnv::new(&checkpoint.arch)?;
    let stats = RunningStats {
        conv_mean: decode(&checkpoint.stats.conv_mean)?,
        conv_var: decode(&checkpoint.stats.conv_var)?,
        feature_mean: decode(&checkpoint.stats.feature_mean)?,
        feature_var: decode(&checkpoint.stats.feature_var)?,
        hidden_mean: checkpoint
            .stats
            .hidden_mean
            .iter()
            .map(|v| decode(v))
            .collect::<Result<_, _>>()?,
        hidden_var: checkpoint
            .stats
            .hidden_var
            .iter()
            .map(|v| decode(v))
            .collect::<Result<_, _>>()?,
    };
    let params = decode(&checkpoint.params)?;
    let model = Model::from_parts(checkpoint.arch, &env, params, stats)?;
    Ok(LoadedModel {
        model,
        env,
        dataset: checkpoint.dataset,
        train_config: checkpoint.train_config,
    })
}
