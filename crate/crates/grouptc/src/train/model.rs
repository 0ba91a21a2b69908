//! Model definition, forward pass and hand-derived reverse-mode gradients.
//!
//! Pipeline: G-convolution -> per-channel batch norm over the group axis ->
//! (ReLU for the max variant; no nonlinearity for the TC variant) ->
//! (max G-pool | TC feature layer with per-feature standardization) ->
//! 3 x (linear -> batch norm -> ELU) -> linear to the class logits.
//!
//! All trainable parameters live in one flat `Vec<f64>`; running statistics
//! are held separately and only change when a training step commits them.

use super::TrainError;
use crate::action::{cube_grid_action, regular_action, square_grid_action, PermutationAction};
use crate::group::{make_group, GroupKind};
use crate::rng::Rng;
use crate::tc::{symmetry_classes, tc_reduced_backward, SymmetryClasses};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Max,
    Tc,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Max => write!(f, "max"),
            Variant::Tc => write!(f, "tc"),
        }
    }
}

/// Domain the classifier runs on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridSpec {
    Square(usize),
    Cube(usize),
    Regular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub variant: Variant,
    pub group: GroupKind,
    pub grid: GridSpec,
    pub channels: usize,
    pub hidden: [usize; 3],
    pub n_classes: usize,
}

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

/// Offsets into the flat parameter vector.
#[derive(Debug, Clone)]
struct Layout {
    omega: usize,
    group_order: usize,
    feature_width: usize,
    filters: (usize, usize),
    conv_gamma: (usize, usize),
    conv_beta: (usize, usize),
    // per hidden layer: (w, b, gamma, beta)
    hidden: Vec<[(usize, usize); 4]>,
    out_w: (usize, usize),
    out_b: (usize, usize),
    total: usize,
}

fn span(cursor: &mut usize, len: usize) -> (usize, usize) {
    let s = (*cursor, *cursor + len);
    *cursor += len;
    s
}

impl Architecture {
    fn layout(&self, omega: usize, group_order: usize, class_count: usize) -> Layout {
        let feature_width = match self.variant {
            Variant::Max => self.channels,
            Variant::Tc => self.channels * class_count,
        };
        let mut c = 0;
        let filters = span(&mut c, self.channels * omega);
        let conv_gamma = span(&mut c, self.channels);
        let conv_beta = span(&mut c, self.channels);
        let mut hidden = Vec::new();
        let mut input = feature_width;
        for &h in &self.hidden {
            let w = span(&mut c, h * input);
            let b = span(&mut c, h);
            let gamma = span(&mut c, h);
            let beta = span(&mut c, h);
            hidden.push([w, b, gamma, beta]);
            input = h;
        }
        let out_w = span(&mut c, self.n_classes * input);
        let out_b = span(&mut c, self.n_classes);
        Layout {
            omega,
            group_order,
            feature_width,
            filters,
            conv_gamma,
            conv_beta,
            hidden,
            out_w,
            out_b,
            total: c,
        }
    }
}

/// Immutable per-architecture machinery: the permutation action and the TC
/// symmetry classes.
pub struct ModelEnv {
    pub action: PermutationAction,
    pub classes: SymmetryClasses,
}

impl ModelEnv {
    pub fn new(arch: &Architecture) -> Result<ModelEnv, TrainError> {
        let action = match &arch.grid {
            GridSpec::Square(n) => square_grid_action(&arch.group, *n)?,
            GridSpec::Cube(n) => cube_grid_action(&arch.group, *n)?,
            GridSpec::Regular => {
                let g = make_group(&arch.group)
                    .map_err(|e| TrainError::UnsupportedGroup(e.to_string()))?;
                regular_action(&g)
            }
        };
        let classes = symmetry_classes(action.group());
        Ok(ModelEnv { action, classes })
    }
}

/// Non-trainable normalization state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub conv_mean: Vec<f64>,
    pub conv_var: Vec<f64>,
    /// TC variant only: per-feature standardization statistics.
    pub feature_mean: Vec<f64>,
    pub feature_var: Vec<f64>,
    pub hidden_mean: Vec<Vec<f64>>,
    pub hidden_var: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub arch: Architecture,
    pub params: Vec<f64>,
    pub stats: RunningStats,
    layout: Layout,
}

impl Model {
    /// Fresh model with deterministic initialization.
    pub fn new(arch: Architecture, env: &ModelEnv, rng: &mut Rng) -> Model {
        let omega = env.action.domain_size();
        let order = env.action.group().order();
        let layout = arch.layout(omega, order, env.classes.class_count());
        let mut params = vec![0.0; layout.total];
        let fan_conv = (omega as f64).sqrt();
        for i in layout.filters.0..layout.filters.1 {
            params[i] = rng.normal() / fan_conv;
        }
        for i in layout.conv_gamma.0..layout.conv_gamma.1 {
            params[i] = 1.0;
        }
        let mut input = layout.feature_width;
        for (idx, &h) in arch.hidden.iter().enumerate() {
            let [w, _b, gamma, _beta] = layout.hidden[idx];
            let scale = (2.0 / input as f64).sqrt();
            for i in w.0..w.1 {
                params[i] = rng.normal() * scale;
            }
            for i in gamma.0..gamma.1 {
                params[i] = 1.0;
            }
            input = h;
        }
        let scale = (2.0 / input as f64).sqrt();
        for i in layout.out_w.0..layout.out_w.1 {
            params[i] = rng.normal() * scale;
        }
        let stats = RunningStats {
            conv_mean: vec![0.0; arch.channels],
            conv_var: vec![1.0; arch.channels],
            feature_mean: vec![0.0; layout.feature_width],
            feature_var: vec![1.0; layout.feature_width],
            hidden_mean: arch.hidden.iter().map(|&h| vec![0.0; h]).collect(),
            hidden_var: arch.hidden.iter().map(|&h| vec![1.0; h]).collect(),
        };
        Model { arch, params, stats, layout }
    }

    /// Rebuild a model from serialized pieces.
    pub fn from_parts(
        arch: Architecture,
        env: &ModelEnv,
        params: Vec<f64>,
        stats: RunningStats,
    ) -> Result<Model, TrainError> {
        let layout = arch.layout(
            env.action.domain_size(),
            env.action.group().order(),
            env.classes.class_count(),
        );
        if params.len() != layout.total {
            return Err(TrainError::ShapeMismatch(format!(
                "parameter vector has {} entries, expected {}",
                params.len(),
                layout.total
            )));
        }
        Ok(Model { arch, params, stats, layout })
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    pub fn feature_width(&self) -> usize {
        self.layout.feature_width
    }

    fn p(&self, span: (usize, usize)) -> &[f64] {
        &self.params[span.0..span.1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Everything backward needs, plus batch statistics for a later
/// running-stats commit.
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    conv_out: Vec<Vec<f64>>,     // per sample, K*|G| row-major channel-major
    conv_bn: BnCache,
    relu_mask: Option<Vec<Vec<bool>>>,
    pooled: Vec<Vec<f64>>,       // feature vectors entering the MLP (pre-standardization for tc)
    feature_norm: Option<BnCache>,
    argmax: Option<Vec<Vec<usize>>>,
    mlp: Vec<MlpLayerCache>,
    pub logits: Vec<Vec<f64>>,
}

struct BnCache {
    xhat: Vec<Vec<f64>>,
    inv_std: Vec<f64>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
    per_channel: bool, // conv: stats per channel over (batch x group)
    eval_mode: bool,
}

struct MlpLayerCache {
    bn: BnCache,
    elu_out: Vec<Vec<f64>>,
}

fn conv_forward(model: &Model, env: &ModelEnv, input: &[f64]) -> Vec<f64> {
    let l = &model.layout;
    let filters = model.p(l.filters);
    let group = env.action.group();
    let n = l.group_order;
    let omega = l.omega;
    let mut out = vec![0.0; model.arch.channels * n];
    for k in 0..model.arch.channels {
        let phi = &filters[k * omega..(k + 1) * omega];
        for g in 0..n {
            let p = env.action.perm(group.inv(g));
            let mut acc = 0.0;
            for u in 0..omega {
                acc += phi[p[u]] * input[u];
            }
            out[k * n + g] = acc;
        }
    }
    out
}

/// Batch norm over grouped slots. `slots_of(feature_index)` maps a flat
/// position to its statistics channel.
fn bn_forward(
    x: &[Vec<f64>],
    channels: usize,
    channel_of: impl Fn(usize) -> usize,
    gamma: Option<&[f64]>,
    beta: Option<&[f64]>,
    running_mean: &[f64],
    running_var: &[f64],
    mode: Mode,
) -> (Vec<Vec<f64>>, BnCache) {
    let width = x[0].len();
    let (mean, var) = match mode {
        Mode::Train => {
            let mut mean = vec![0.0; channels];
            let mut count = vec![0usize; channels];
            for row in x {
                for (i, &v) in row.iter().enumerate() {
                    mean[channel_of(i)] += v;
                    count[channel_of(i)] += 1;
                }
            }
            for c in 0..channels {
                mean[c] /= count[c].max(1) as f64;
            }
            let mut var = vec![0.0; channels];
            for row in x {
                for (i, &v) in row.iter().enumerate() {
                    let d = v - mean[channel_of(i)];
                    var[channel_of(i)] += d * d;
                }
            }
            for c in 0..channels {
                var[c] /= count[c].max(1) as f64;
            }
            (mean, var)
        }
        Mode::Eval => (running_mean.to_vec(), running_var.to_vec()),
    };
    let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = Vec::with_capacity(x.len());
    let mut out = Vec::with_capacity(x.len());
    for row in x {
        let mut hrow = vec![0.0; width];
        let mut orow = vec![0.0; width];
        for (i, &v) in row.iter().enumerate() {
            let c = channel_of(i);
            let h = (v - mean[c]) * inv_std[c];
            hrow[i] = h;
            orow[i] = match (gamma, beta) {
                (Some(g), Some(b)) => g[c] * h + b[c],
                _ => h,
            };
        }
        xhat.push(hrow);
        out.push(orow);
    }
    (
        out,
        BnCache {
            xhat,
            inv_std,
            batch_mean: mean,
            batch_var: var,
            per_channel: true,
            eval_mode: matches!(mode, Mode::Eval),
        },
    )
}

/// Gradient through batch norm. Returns (dx, dgamma, dbeta).
fn bn_backward(
    cache: &BnCache,
    dy: &[Vec<f64>],
    channels: usize,
    channel_of: impl Fn(usize) -> usize,
    gamma: Option<&[f64]>,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let width = dy[0].len();
    let mut dgamma = vec![0.0; channels];
    let mut dbeta = vec![0.0; channels];
    for (row, hrow) in dy.iter().zip(&cache.xhat) {
        for i in 0..width {
            let c = channel_of(i);
            dgamma[c] += row[i] * hrow[i];
            dbeta[c] += row[i];
        }
    }
    // dxhat
    let dxhat: Vec<Vec<f64>> = dy
        .iter()
        .map(|row| {
            (0..width)
                .map(|i| {
                    let c = channel_of(i);
                    match gamma {
                        Some(g) => row[i] * g[c],
                        None => row[i],
                    }
                })
                .collect()
        })
        .collect();
    if cache.eval_mode {
        let dx = dxhat
            .iter()
            .map(|row| {
                (0..width).map(|i| row[i] * cache.inv_std[channel_of(i)]).collect()
            })
            .collect();
        return (dx, dgamma, dbeta);
    }
    let mut sum_dxhat = vec![0.0; channels];
    let mut sum_dxhat_xhat = vec![0.0; channels];
    let mut count = vec![0usize; channels];
    for (row, hrow) in dxhat.iter().zip(&cache.xhat) {
        for i in 0..width {
            let c = channel_of(i);
            sum_dxhat[c] += row[i];
            sum_dxhat_xhat[c] += row[i] * hrow[i];
            count[c] += 1;
        }
    }
    let dx = dxhat
        .iter()
        .zip(&cache.xhat)
        .map(|(drow, hrow)| {
            (0..width)
                .map(|i| {
                    let c = channel_of(i);
                    let m = count[c] as f64;
                    cache.inv_std[c] / m
                        * (m * drow[i] - sum_dxhat[c] - hrow[i] * sum_dxhat_xhat[c])
                })
                .collect()
        })
        .collect();
    (dx, dgamma, dbeta)
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

fn elu_grad(pre: f64) -> f64 {
    if pre > 0.0 {
        1.0
    } else {
        pre.exp()
    }
}

/// Full forward pass over a batch. Train mode caches what backward and the
/// running-stat commit need; running statistics are never mutated here.
pub fn forward(
    model: &Model,
    env: &ModelEnv,
    inputs: &[Vec<f64>],
    mode: Mode,
) -> Result<ForwardCache, TrainError> {
    let l = &model.layout;
    for (i, row) in inputs.iter().enumerate() {
        if row.len() != l.omega {
            return Err(TrainError::ShapeMismatch(format!(
                "input {i} has {} values, domain needs {}",
                row.len(),
                l.omega
            )));
        }
    }
    let n = l.group_order;
    let k = model.arch.channels;
    let conv_out: Vec<Vec<f64>> =
        inputs.iter().map(|row| conv_forward(model, env, row)).collect();
    let (bn_out, conv_bn) = bn_forward(
        &conv_out,
        k,
        |i| i / n,
        Some(model.p(l.conv_gamma)),
        Some(model.p(l.conv_beta)),
        &model.stats.conv_mean,
        &model.stats.conv_var,
        mode,
    );

    let (block_out, relu_mask) = match model.arch.variant {
        Variant::Max => {
            let mut masks = Vec::with_capacity(bn_out.len());
            let out = bn_out
                .iter()
                .map(|row| {
                    let mask: Vec<bool> = row.iter().map(|&v| v > 0.0).collect();
                    let clipped = row
                        .iter()
                        .zip(&mask)
                        .map(|(&v, &m)| if m { v } else { 0.0 })
                        .collect();
                    masks.push(mask);
                    clipped
                })
                .collect();
            (out, Some(masks))
        }
        Variant::Tc => (bn_out, None),
    };

    let mut argmax = None;
    let mut pooled = Vec::with_capacity(inputs.len());
    match model.arch.variant {
        Variant::Max => {
            let mut arg_rows = Vec::with_capacity(inputs.len());
            for row in &block_out {
                let mut vals = vec![f64::NEG_INFINITY; k];
                let mut args = vec![0usize; k];
                for c in 0..k {
                    for g in 0..n {
                        let v = row[c * n + g];
                        if v > vals[c] {
                            vals[c] = v;
                            args[c] = g;
                        }
                    }
                }
                pooled.push(vals);
                arg_rows.push(args);
            }
            argmax = Some(arg_rows);
        }
        Variant::Tc => {
            let group = env.action.group();
            for row in &block_out {
                let mut features = Vec::with_capacity(l.feature_width);
                for c in 0..k {
                    let channel = &row[c * n..(c + 1) * n];
                    for &(g1, g2) in &env.classes.representatives {
                        let mut acc = 0.0;
                        for g in 0..n {
                            acc += channel[g]
                                * channel[group.mul(g, g1)]
                                * channel[group.mul(g, g2)];
                        }
                        features.push(acc);
                    }
                }
                pooled.push(features);
            }
        }
    }

    let (mlp_input, feature_norm) = match model.arch.variant {
        Variant::Tc => {
            let (out, cache) = bn_forward(
                &pooled,
                l.feature_width,
                |i| i,
                None,
                None,
                &model.stats.feature_mean,
                &model.stats.feature_var,
                mode,
            );
            (out, Some(cache))
        }
        Variant::Max => (pooled.clone(), None),
    };

    let mut mlp = Vec::new();
    let mut current = mlp_input;
    let mut input_dim = l.feature_width;
    for (idx, &h) in model.arch.hidden.iter().enumerate() {
        let [wspan, bspan, gspan, bespan] = l.hidden[idx];
        let w = model.p(wspan);
        let b = model.p(bspan);
        let linear_out: Vec<Vec<f64>> = current
            .iter()
            .map(|row| {
                (0..h)
                    .map(|o| {
                        let mut acc = b[o];
                        let wrow = &w[o * input_dim..(o + 1) * input_dim];
                        for (x, wv) in row.iter().zip(wrow) {
                            acc += x * wv;
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let (bn_out, bn) = bn_forward(
            &linear_out,
            h,
            |i| i,
            Some(model.p(gspan)),
            Some(model.p(bespan)),
            &model.stats.hidden_mean[idx],
            &model.stats.hidden_var[idx],
            mode,
        );
        let elu_out: Vec<Vec<f64>> =
            bn_out.iter().map(|row| row.iter().map(|&v| elu(v)).collect()).collect();
        mlp.push(MlpLayerCache { bn, elu_out: elu_out.clone() });
        current = elu_out;
        input_dim = h;
    }

    let wout = model.p(l.out_w);
    let bout = model.p(l.out_b);
    let logits: Vec<Vec<f64>> = current
        .iter()
        .map(|row| {
            (0..model.arch.n_classes)
                .map(|o| {
                    let mut acc = bout[o];
                    let wrow = &wout[o * input_dim..(o + 1) * input_dim];
                    for (x, wv) in row.iter().zip(wrow) {
                        acc += x * wv;
                    }
                    acc
                })
                .collect()
        })
        .collect();

    Ok(ForwardCache {
        inputs: inputs.to_vec(),
        conv_out,
        conv_bn,
        relu_mask,
        pooled,
        feature_norm,
        argmax,
        mlp,
        logits,
    })
}

/// The vector entering the MLP classifier; the representation metamer
/// search matches against.
pub fn pre_classifier_representation(
    model: &Model,
    env: &ModelEnv,
    input: &[f64],
) -> Result<Vec<f64>, TrainError> {
    let cache = forward(model, env, &[input.to_vec()], Mode::Eval)?;
    Ok(representation_from_cache(model, &cache))
}

fn representation_from_cache(model: &Model, cache: &ForwardCache) -> Vec<f64> {
    match model.arch.variant {
        Variant::Max => cache.pooled[0].clone(),
        Variant::Tc => {
            let fnorm = cache.feature_norm.as_ref().expect("tc caches feature norm");
            fnorm.xhat[0].clone()
        }
    }
}

/// Mean cross-entropy loss and flat parameter gradients for a batch.
pub fn loss_and_gradients(
    model: &Model,
    env: &ModelEnv,
    inputs: &[Vec<f64>],
    labels: &[usize],
) -> Result<(f64, Vec<f64>, ForwardCache), TrainError> {
    let cache = forward(model, env, inputs, Mode::Train)?;
    let (loss, dlogits) = cross_entropy(&cache.logits, labels);
    let grads = backward(model, env, &cache, &dlogits, None)?;
    Ok((loss, grads.0, cache))
}

/// Softmax cross entropy averaged over the batch; returns dL/dlogits.
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> (f64, Vec<Vec<f64>>) {
    let m = logits.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(logits.len());
    for (row, &label) in logits.iter().zip(labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        loss += -(exps[label] / total).ln();
        let grad: Vec<f64> = exps
            .iter()
            .enumerate()
            .map(|(i, &e)| (e / total - if i == label { 1.0 } else { 0.0 }) / m)
            .collect();
        grads.push(grad);
    }
    (loss / m, grads)
}

/// Reverse pass from dL/dlogits. Returns flat parameter gradients and,
/// when requested, the gradient with respect to each input signal.
pub fn backward(
    model: &Model,
    env: &ModelEnv,
    cache: &ForwardCache,
    dlogits: &[Vec<f64>],
    want_input_grad: Option<()>,
) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>), TrainError> {
    let l = &model.layout;
    let n = l.group_order;
    let k = model.arch.channels;
    let mut grads = vec![0.0; l.total];

    // output layer
    let last_dim = *model.arch.hidden.last().expect("three hidden layers");
    let last_act: Vec<&Vec<f64>> = cache.mlp.last().unwrap().elu_out.iter().collect();
    let wout = model.p(l.out_w);
    for (row_idx, drow) in dlogits.iter().enumerate() {
        for o in 0..model.arch.n_classes {
            grads[l.out_b.0 + o] += drow[o];
            for i in 0..last_dim {
                grads[l.out_w.0 + o * last_dim + i] += drow[o] * last_act[row_idx][i];
            }
        }
    }
    let mut dcurrent: Vec<Vec<f64>> = dlogits
        .iter()
        .map(|drow| {
            (0..last_dim)
                .map(|i| {
                    (0..model.arch.n_classes)
                        .map(|o| drow[o] * wout[o * last_dim + i])
                        .sum()
                })
                .collect()
        })
        .collect();

    // hidden layers in reverse
    for idx in (0..model.arch.hidden.len()).rev() {
        let layer = &cache.mlp[idx];
        let h = model.arch.hidden[idx];
        let [wspan, bspan, gspan, bespan] = l.hidden[idx];
        // ELU
        let dbn: Vec<Vec<f64>> = dcurrent
            .iter()
            .zip(&layer.bn.xhat)
            .enumerate()
            .map(|(row_idx, (drow, _))| {
                let gamma = model.p(gspan);
                let beta = model.p(bespan);
                (0..h)
                    .map(|i| {
                        // reconstruct the BN output (= ELU preactivation)
                        let pre = gamma[i] * layer.bn.xhat[row_idx][i] + beta[i];
                        drow[i] * elu_grad(pre)
                    })
                    .collect()
            })
            .collect();
        let (dlin, dgamma, dbeta) =
            bn_backward(&layer.bn, &dbn, h, |i| i, Some(model.p(gspan)));
        for (i, (dg, db)) in dgamma.iter().zip(&dbeta).enumerate() {
            grads[gspan.0 + i] += dg;
            grads[bespan.0 + i] += db;
        }
        // linear
        let input_rows: Vec<&Vec<f64>> = if idx == 0 {
            match model.arch.variant {
                Variant::Tc => cache
                    .feature_norm
                    .as_ref()
                    .expect("tc feature norm cached")
                    .xhat
                    .iter()
                    .collect(),
                Variant::Max => cache.pooled.iter().collect(),
            }
        } else {
            cache.mlp[idx - 1].elu_out.iter().collect()
        };
        let input_dim = if idx == 0 { l.feature_width } else { model.arch.hidden[idx - 1] };
        let w = model.p(wspan);
        let mut dprev = vec![vec![0.0; input_dim]; dlin.len()];
        for (row_idx, drow) in dlin.iter().enumerate() {
            for o in 0..h {
                grads[bspan.0 + o] += drow[o];
                let wrow = &w[o * input_dim..(o + 1) * input_dim];
                for i in 0..input_dim {
                    grads[wspan.0 + o * input_dim + i] += drow[o] * input_rows[row_idx][i];
                    dprev[row_idx][i] += drow[o] * wrow[i];
                }
            }
        }
        dcurrent = dprev;
    }

    // feature standardization (tc) is a batch norm without affine
    let dpooled: Vec<Vec<f64>> = match model.arch.variant {
        Variant::Tc => {
            let fnorm = cache.feature_norm.as_ref().expect("tc feature norm cached");
            let (dx, _, _) = bn_backward(fnorm, &dcurrent, l.feature_width, |i| i, None);
            dx
        }
        Variant::Max => dcurrent,
    };

    // pooling layer back to the conv block output
    let mut dblock: Vec<Vec<f64>> = vec![vec![0.0; k * n]; cache.conv_out.len()];
    match model.arch.variant {
        Variant::Max => {
            let argmax = cache.argmax.as_ref().expect("max pooling cached argmax");
            for (row_idx, drow) in dpooled.iter().enumerate() {
                for c in 0..k {
                    dblock[row_idx][c * n + argmax[row_idx][c]] += drow[c];
                }
            }
            // ReLU
            let masks = cache.relu_mask.as_ref().expect("relu mask cached");
            for (row, mask) in dblock.iter_mut().zip(masks) {
                for (v, &m) in row.iter_mut().zip(mask) {
                    if !m {
                        *v = 0.0;
                    }
                }
            }
        }
        Variant::Tc => {
            let group = env.action.group();
            let class_count = env.classes.class_count();
            // reconstruct the BN output the TC consumed
            let gamma = model.p(l.conv_gamma);
            let beta = model.p(l.conv_beta);
            for (row_idx, drow) in dpooled.iter().enumerate() {
                for c in 0..k {
                    let channel: Vec<f64> = (0..n)
                        .map(|g| {
                            gamma[c] * cache.conv_bn.xhat[row_idx][c * n + g] + beta[c]
                        })
                        .collect();
                    let upstream = &drow[c * class_count..(c + 1) * class_count];
                    let dchan =
                        tc_reduced_backward(group, &env.classes, &channel, upstream);
                    for g in 0..n {
                        dblock[row_idx][c * n + g] += dchan[g];
                    }
                }
            }
        }
    }

    // conv batch norm
    let (dconv, dgamma, dbeta) = bn_backward(
        &cache.conv_bn,
        &dblock,
        k,
        |i| i / n,
        Some(model.p(l.conv_gamma)),
    );
    for c in 0..k {
        grads[l.conv_gamma.0 + c] += dgamma[c];
        grads[l.conv_beta.0 + c] += dbeta[c];
    }

    // convolution: dL/dphi_k(v) = sum_g dTheta_k(g) f(p_g(v)); optionally
    // dL/df(u) = sum_{k,g} dTheta_k(g) phi_k(p_{g^-1}(u))
    let filters = model.p(l.filters);
    let group = env.action.group();
    let mut dinputs = want_input_grad.map(|_| vec![vec![0.0; l.omega]; cache.inputs.len()]);
    for (row_idx, drow) in dconv.iter().enumerate() {
        let input = &cache.inputs[row_idx];
        for c in 0..k {
            for g in 0..n {
                let d = drow[c * n + g];
                if d == 0.0 {
                    continue;
                }
                let p = env.action.perm(group.inv(g));
                for u in 0..l.omega {
                    grads[l.filters.0 + c * l.omega + p[u]] += d * input[u];
                    if let Some(di) = dinputs.as_mut() {
                        di[row_idx][u] += d * filters[c * l.omega + p[u]];
                    }
                }
            }
        }
    }

    Ok((grads, dinputs))
}

/// Squared distance between a sample's representation and a target
/// representation, plus its gradient with respect to the input (eval mode).
pub fn input_gradient(
    model: &Model,
    env: &ModelEnv,
    input: &[f64],
    target_rep: &[f64],
) -> Result<(f64, Vec<f64>), TrainError> {
    let cache = forward(model, env, &[input.to_vec()], Mode::Eval)?;
    let rep = representation_from_cache(model, &cache);
    let diff: Vec<f64> = rep.iter().zip(target_rep).map(|(a, b)| a - b).collect();
    let value: f64 = diff.iter().map(|d| d * d).sum();
    // dL/drep = 2 diff; route into the pooling layer's upstream slot
    let drep: Vec<Vec<f64>> = vec![diff.iter().map(|d| 2.0 * d).collect()];
    let dinput = backward_from_representation(model, env, &cache, &drep)?;
    Ok((value, dinput))
}

/// Backward pass that starts at the representation rather than the logits.
fn backward_from_representation(
    model: &Model,
    env: &ModelEnv,
    cache: &ForwardCache,
    drep: &[Vec<f64>],
) -> Result<Vec<f64>, TrainError> {
    let l = &model.layout;
    let n = l.group_order;
    let k = model.arch.channels;
    let dpooled: Vec<Vec<f64>> = match model.arch.variant {
        Variant::Tc => {
            let fnorm = cache.feature_norm.as_ref().expect("tc feature norm cached");
            let (dx, _, _) = bn_backward(fnorm, drep, l.feature_width, |i| i, None);
            dx
        }
        Variant::Max => drep.to_vec(),
    };
    let mut dblock: Vec<Vec<f64>> = vec![vec![0.0; k * n]; cache.conv_out.len()];
    match model.arch.variant {
        Variant::Max => {
            let argmax = cache.argmax.as_ref().expect("argmax cached");
            for (row_idx, drow) in dpooled.iter().enumerate() {
                for c in 0..k {
                    dblock[row_idx][c * n + argmax[row_idx][c]] += drow[c];
                }
            }
            let masks = cache.relu_mask.as_ref().expect("mask cached");
            for (row, mask) in dblock.iter_mut().zip(masks) {
                for (v, &m) in row.iter_mut().zip(mask) {
                    if !m {
                        *v = 0.0;
                    }
                }
            }
        }
        Variant::Tc => {
            let group = env.action.group();
            let class_count = env.classes.class_count();
            let gamma = model.p(l.conv_gamma);
            let beta = model.p(l.conv_beta);
            for (row_idx, drow) in dpooled.iter().enumerate() {
                for c in 0..k {
                    let channel: Vec<f64> = (0..n)
                        .map(|g| gamma[c] * cache.conv_bn.xhat[row_idx][c * n + g] + beta[c])
                        .collect();
                    let upstream = &drow[c * class_count..(c + 1) * class_count];
                    let dchan = tc_reduced_backward(group, &env.classes, &channel, upstream);
                    for g in 0..n {
                        dblock[row_idx][c * n + g] += dchan[g];
                    }
                }
            }
        }
    }
    let (dconv, _, _) = bn_backward(
        &cache.conv_bn,
        &dblock,
        k,
        |i| i / n,
        Some(model.p(l.conv_gamma)),
    );
    let filters = model.p(l.filters);
    let group = env.action.group();
    let mut dinput = vec![0.0; l.omega];
    let drow = &dconv[0];
    for c in 0..k {
        for g in 0..n {
            let d = drow[c * n + g];
            if d == 0.0 {
                continue;
            }
            let p = env.action.perm(group.inv(g));
            for u in 0..l.omega {
                dinput[u] += d * filters[c * l.omega + p[u]];
            }
        }
    }
    Ok(dinput)
}

/// Commit batch statistics from a training forward into the running
/// averages.
pub fn update_running_stats(model: &mut Model, cache: &ForwardCache) {
    fn blend(running: &mut [f64], batch: &[f64]) {
        for (r, &b) in running.iter_mut().zip(batch) {
            *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * b;
        }
    }
    blend(&mut model.stats.conv_mean, &cache.conv_bn.batch_mean);
    blend(&mut model.stats.conv_var, &cache.conv_bn.batch_var);
    if let Some(fnorm) = &cache.feature_norm {
        blend(&mut model.stats.feature_mean, &fnorm.batch_mean);
        blend(&mut model.stats.feature_var, &fnorm.batch_var);
    }
    for (idx, layer) in cache.mlp.iter().enumerate() {
        blend(&mut model.stats.hidden_mean[idx], &layer.bn.batch_mean);
        blend(&mut model.stats.hidden_var[idx], &layer.bn.batch_var);
    }
    let _ = &cache.conv_bn.per_channel;
}

/// First-MLP width for the max variant that matches the TC variant's total
/// parameter count as closely as possible.
pub fn matched_hidden_width(
    tc_arch: &Architecture,
    env: &ModelEnv,
) -> Result<usize, TrainError> {
    let omega = env.action.domain_size();
    let order = env.action.group().order();
    let classes = env.classes.class_count();
    let tc_total = tc_arch.layout(omega, order, classes).total;
    let mut best = (usize::MAX, 1usize);
    // params are monotone in h1; scan a generous range deterministically
    for h1 in 1..=8192 {
        let mut arch = tc_arch.clone();
        arch.variant = Variant::Max;
        arch.hidden[0] = h1;
        let total = arch.layout(omega, order, classes).total;
        let diff = total.abs_diff(tc_total);
        if diff < best.0 {
            best = (diff, h1);
        }
        if total > tc_total && diff > best.0 {
            break;
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_arch(variant: Variant) -> Architecture {
        Architecture {
            variant,
            group: GroupKind::Dihedral(4),
            grid: GridSpec::Square(3),
            channels: 2,
            hidden: [8, 8, 8],
            n_classes: 3,
        }
    }

    fn random_inputs(rng: &mut Rng, count: usize, omega: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| (0..omega).map(|_| rng.uniform(0.0, 1.0)).collect()).collect()
    }

    #[test]
    fn logits_shape() {
        for variant in [Variant::Max, Variant::Tc] {
            let arch = tiny_arch(variant);
            let env = ModelEnv::new(&arch).unwrap();
            let mut rng = Rng::new(1);
            let model = Model::new(arch, &env, &mut rng);
            let inputs = random_inputs(&mut rng, 4, 9);
            let cache = forward(&model, &env, &inputs, Mode::Train).unwrap();
            assert_eq!(cache.logits.len(), 4);
            assert!(cache.logits.iter().all(|r| r.len() == 3));
        }
    }

    #[test]
    fn zero_filters_ignore_input() {
        let arch = tiny_arch(Variant::Max);
        let env = ModelEnv::new(&arch).unwrap();
        let mut rng = Rng::new(2);
        let mut model = Model::new(arch, &env, &mut rng);
        for i in model.layout.filters.0..model.layout.filters.1 {
            model.params[i] = 0.0;
        }
        let a = forward(&model, &env, &random_inputs(&mut rng, 1, 9), Mode::Eval).unwrap();
        let b = forward(&model, &env, &random_inputs(&mut rng, 1, 9), Mode::Eval).unwrap();
        assert_eq!(a.logits, b.logits);
    }

    #[test]
    fn logit_invariance_under_group_translation() {
        use crate::action::{apply_signal_action, DomainSignal};
        for variant in [Variant::Max, Variant::Tc] {
            let arch = tiny_arch(variant);
            let env = ModelEnv::new(&arch).unwrap();
            let mut rng = Rng::new(3);
            let model = Model::new(arch, &env, &mut rng);
            let input = random_inputs(&mut rng, 1, 9).remove(0);
            let base = forward(&model, &env, &[input.clone()], Mode::Eval).unwrap();
            for h in 0..env.action.group().order() {
                let moved = apply_signal_action(
                    &env.action,
                    h,
                    &DomainSignal::new(input.clone(), env.action.shape().clone()),
                )
                .unwrap();
                let out = forward(&model, &env, &[moved.values], Mode::Eval).unwrap();
                for (a, b) in base.logits[0].iter().zip(&out.logits[0]) {
                    assert!((a - b).abs() < 1e-10, "variant {variant} h={h}");
                }
            }
        }
    }

    #[test]
    fn logit_invariance_in_train_mode_with_batch() {
        use crate::action::{apply_signal_action, DomainSignal};
        for variant in [Variant::Max, Variant::Tc] {
            let arch = tiny_arch(variant);
            let env = ModelEnv::new(&arch).unwrap();
            let mut rng = Rng::new(4);
            let model = Model::new(arch, &env, &mut rng);
            let inputs = random_inputs(&mut rng, 3, 9);
            let base = forward(&model, &env, &inputs, Mode::Train).unwrap();
            // translate only the first sample; its logits must not move
            let moved = apply_signal_action(
                &env.action,
                3,
                &DomainSignal::new(inputs[0].clone(), env.action.shape().clone()),
            )
            .unwrap();
            let mut shifted = inputs.clone();
            shifted[0] = moved.values;
            let out = forward(&model, &env, &shifted, Mode::Train).unwrap();
            for (a, b) in base.logits[0].iter().zip(&out.logits[0]) {
                assert!((a - b).abs() < 1e-10, "variant {variant}");
            }
        }
    }

    #[test]
    fn full_gradient_check_both_variants() {
        for variant in [Variant::Max, Variant::Tc] {
            let arch = tiny_arch(variant);
            let env = ModelEnv::new(&arch).unwrap();
            let mut rng = Rng::new(5);
            let mut model = Model::new(arch, &env, &mut rng);
            let inputs = random_inputs(&mut rng, 3, 9);
            let labels = vec![0usize, 1, 2];
            let (_, grads, _) = loss_and_gradients(&model, &env, &inputs, &labels).unwrap();
            let eps = 1e-5;
            let mut worst = 0.0f64;
            // probe a deterministic subset of parameters
            let total = model.param_count();
            let step = (total / 60).max(1);
            for p in (0..total).step_by(step) {
                let orig = model.params[p];
                model.params[p] = orig + eps;
                let (lp, _, _) = loss_and_gradients(&model, &env, &inputs, &labels).unwrap();
                model.params[p] = orig - eps;
                let (lm, _, _) = loss_and_gradients(&model, &env, &inputs, &labels).unwrap();
                model.params[p] = orig;
                let fd = (lp - lm) / (2.0 * eps);
                let rel = (grads[p] - fd).abs() / grads[p].abs().max(fd.abs()).max(1e-4);
                worst = worst.max(rel);
            }
            assert!(worst < 1e-4, "variant {variant} worst rel {worst:.3e}");
        }
    }

    #[test]
    fn input_gradient_check() {
        for variant in [Variant::Tc, Variant::Max] {
            let arch = tiny_arch(variant);
            let env = ModelEnv::new(&arch).unwrap();
            let mut rng = Rng::new(6);
            let model = Model::new(arch, &env, &mut rng);
            let target = random_inputs(&mut rng, 1, 9).remove(0);
            let target_rep = pre_classifier_representation(&model, &env, &target).unwrap();
            let mut input = random_inputs(&mut rng, 1, 9).remove(0);
            let (_, grad) = input_gradient(&model, &env, &input, &target_rep).unwrap();
            let eps = 1e-6;
            for u in [0usize, 3, 7] {
                let orig = input[u];
                input[u] = orig + eps;
                let (lp, _) = input_gradient(&model, &env, &input, &target_rep).unwrap();
                input[u] = orig - eps;
                let (lm, _) = input_gradient(&model, &env, &input, &target_rep).unwrap();
                input[u] = orig;
                let fd = (lp - lm) / (2.0 * eps);
                let rel = (grad[u] - fd).abs() / grad[u].abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "variant {variant} u={u} rel {rel:.3e}");
            }
        }
    }

    #[test]
    fn matched_width_brings_counts_close() {
        let tc = tiny_arch(Variant::Tc);
        let env = ModelEnv::new(&tc).unwrap();
        let h1 = matched_hidden_width(&tc, &env).unwrap();
        let mut max_arch = tc.clone();
        max_arch.variant = Variant::Max;
        max_arch.hidden[0] = h1;
        let mut rng = Rng::new(7);
        let tc_model = Model::new(tc, &env, &mut rng);
        let max_model = Model::new(max_arch, &env, &mut rng);
        let (a, b) = (tc_model.param_count() as f64, max_model.param_count() as f64);
        assert!((a - b).abs() / a.max(b) < 0.02, "tc={a} max={b}");
    }
}
