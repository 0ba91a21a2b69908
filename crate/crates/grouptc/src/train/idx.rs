//! IDX image/label file parsing with nearest-neighbor downsampling and a
//! random exact-lattice transform per image.

use super::data::Dataset;
use super::model::{GridSpec, ModelEnv};
use super::TrainError;
use crate::action::{apply_signal_action, DomainSignal};
use crate::group::GroupKind;
use crate::rng::Rng;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IdxError {
    #[error("bad magic number {got:#010x}, expected {expected:#010x}")]
    BadMagic { got: u32, expected: u32 },
    #[error("file truncated: needed {needed} bytes, found {found}")]
    TruncatedFile { needed: usize, found: usize },
    #[error("images and labels disagree: {images} images vs {labels} labels")]
    DimensionMismatch { images: usize, labels: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
}

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32(data: &[u8], offset: usize) -> Result<u32, IdxError> {
    if data.len() < offset + 4 {
        return Err(IdxError::TruncatedFile { needed: offset + 4, found: data.len() });
    }
    Ok(u32::from_be_bytes([data[offset], data[offset + 1], data[offset + 2], data[offset + 3]]))
}

/// Parsed IDX image stack, pixel values scaled to [0, 1].
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<f64>>,
}

pub fn parse_idx_images(data: &[u8], limit: Option<usize>) -> Result<IdxImages, IdxError> {
    let magic = read_u32(data, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(IdxError::BadMagic { got: magic, expected: IMAGE_MAGIC });
    }
    let count = read_u32(data, 4)? as usize;
    let rows = read_u32(data, 8)? as usize;
    let cols = read_u32(data, 12)? as usize;
    let take = limit.map_or(count, |l| l.min(count));
    let needed = 16 + take * rows * cols;
    if data.len() < needed {
        return Err(IdxError::TruncatedFile { needed, found: data.len() });
    }
    let mut images = Vec::with_capacity(take);
    for i in 0..take {
        let start = 16 + i * rows * cols;
        images.push(
            data[start..start + rows * cols].iter().map(|&b| b as f64 / 255.0).collect(),
        );
    }
    Ok(IdxImages { rows, cols, images })
}

pub fn parse_idx_labels(data: &[u8], limit: Option<usize>) -> Result<Vec<usize>, IdxError> {
    let magic = read_u32(data, 0)?;
    if magic != LABEL_MAGIC {
        return Err(IdxError::BadMagic { got: magic, expected: LABEL_MAGIC });
    }
    let count = read_u32(data, 4)? as usize;
    let take = limit.map_or(count, |l| l.min(count));
    let needed = 8 + take;
    if data.len() < needed {
        return Err(IdxError::TruncatedFile { needed, found: data.len() });
    }
    Ok(data[8..8 + take].iter().map(|&b| b as usize).collect())
}

/// Nearest-neighbor downsample keeping pixel (i*stride, j*stride).
pub fn downsample(image: &[f64], rows: usize, cols: usize, target: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(target * target);
    for i in 0..target {
        for j in 0..target {
            let si = (i * rows) / target;
            let sj = (j * cols) / target;
            out.push(image[si * cols + sj]);
        }
    }
    out
}

/// Build a dataset from IDX image and label payloads. Each image is
/// downsampled to `n x n` and transformed by a random D4 element; an 80/20
/// train/validation split is applied and `test_fraction` of the data is
/// held out first for testing.
pub fn load_idx_images(
    image_bytes: &[u8],
    label_bytes: &[u8],
    limit: Option<usize>,
    n: usize,
    seed: u64,
) -> Result<Dataset, IdxError> {
    let imgs = parse_idx_images(image_bytes, limit)?;
    let labels = parse_idx_labels(label_bytes, limit)?;
    if imgs.images.len() != labels.len() {
        return Err(IdxError::DimensionMismatch {
            images: imgs.images.len(),
            labels: labels.len(),
        });
    }
    let group = GroupKind::Dihedral(4);
    let arch_probe = super::model::Architecture {
        variant: super::model::Variant::Tc,
        group: group.clone(),
        grid: GridSpec::Square(n),
        channels: 1,
        hidden: [1, 1, 1],
        n_classes: 10,
    };
    let env = ModelEnv::new(&arch_probe)?;
    let mut rng = Rng::new(seed ^ 0x1D41D4);
    let mut samples: Vec<(Vec<f64>, usize)> = Vec::with_capacity(imgs.images.len());
    for (img, &label) in imgs.images.iter().zip(&labels) {
        let small = downsample(img, imgs.rows, imgs.cols, n);
        let h = rng.below(8);
        let moved = apply_signal_action(
            &env.action,
            h,
            &DomainSignal::new(small, env.action.shape().clone()),
        )
        .expect("downsampled image matches the grid");
        samples.push((moved.values, label));
    }
    let n_classes = samples.iter().map(|(_, l)| l + 1).max().unwrap_or(1);
    let test_size = samples.len() / 6;
    let test = samples.split_off(samples.len() - test_size);
    let val_size = samples.len() / 5;
    let val = samples.split_off(samples.len() - val_size);
    Ok(Dataset {
        group,
        grid: GridSpec::Square(n),
        n_classes,
        train: samples,
        val,
        test,
        sprites: Vec::new(),
    })
}
