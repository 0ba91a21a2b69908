//! Desk-scale training harness: a single G-Conv block followed by either
//! max G-pooling or the triple-correlation layer, then a three-layer MLP
//! classifier. Gradients are hand-derived reverse mode throughout.

pub mod adam;
pub mod checkpoint;
pub mod compare;
pub mod data;
pub mod idx;
pub mod model;

pub use adam::{adam_step, plateau_update, AdamState, TrainConfig};
pub use checkpoint::{load_model, save_model};
pub use compare::{run_comparison, train_model, ComparisonReport, TrainLogRow};
pub use data::{synth_dataset, Dataset};
pub use idx::{load_idx_images, IdxError};
pub use model::{
    forward, input_gradient, loss_and_gradients, matched_hidden_width, Architecture, GridSpec,
    Mode, Model, ModelEnv, Variant,
};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum TrainError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("group {0} is not supported for this dataset")]
    UnsupportedGroup(String),
    #[error("dataset split {0} is empty")]
    EmptySplit(&'static str),
    #[error(transparent)]
    Action(#[from] crate::action::ActionError),
}
