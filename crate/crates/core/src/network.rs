//! Fully convolutional SRE classifier and its standard-convolution twin.
//!
//! Layout: stem conv → BN → ReLU, then per stage an optional transition
//! (`avg_pool(2)` → 1×1 conv when downsampling, a bare 1×1 conv when only
//! the width changes) followed by `blocks` units of conv → BN → ReLU with an
//! identity shortcut, then global average pooling and a linear head. All
//! convolutions are stride 1 and nothing is flattened before the pooling.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::shape_err;
use crate::kernel::{band_count, BandSpec};
use crate::layers::{
    avg_pool, avg_pool_backward, conv_macs, global_avg_pool, global_avg_pool_backward, relu, relu_backward,
    BatchNorm, BatchNormCache, ConvCache, DenseConv, Linear, LinearCache, Mode, PointwiseCache, PointwiseConv,
    PoolCache, ReluCache, SreConv,
};
use crate::loss::LossKind;
use crate::{Error, Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvKind {
    #[default]
    Sre,
    Standard,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub channels: usize,
    pub kernel_size: usize,
    #[serde(default = "one")]
    pub blocks: usize,
    #[serde(default)]
    pub downsample: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub dims: usize,
    #[serde(default = "one")]
    pub in_channels: usize,
    pub stem_channels: usize,
    pub stages: Vec<StageConfig>,
    pub num_classes: usize,
    #[serde(default = "yes")]
    pub residual: bool,
    #[serde(default)]
    pub conv_kind: ConvKind,
    #[serde(default)]
    pub loss_kind: LossKind,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NetworkConfig {
    /// Four stages with kernels `[9, 9, 5, 5]`, two of them downsampling.
    fn default() -> Self {
        let stage = |channels, kernel_size, downsample| StageConfig {
            channels,
            kernel_size,
            blocks: 1,
            downsample,
        };
        NetworkConfig {
            dims: 2,
            in_channels: 1,
            stem_channels: 16,
            stages: vec![stage(16, 9, false), stage(32, 9, true), stage(64, 5, true), stage(128, 5, false)],
            num_classes: 2,
            residual: true,
            conv_kind: ConvKind::Sre,
            loss_kind: LossKind::CrossEntropy,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(2..=3).contains(&self.dims) {
            return fail(format!("dims must be 2 or 3, got {}", self.dims));
        }
        if self.in_channels == 0 || self.num_classes == 0 {
            return fail("in_channels and num_classes must be positive".into());
        }
        if !self.stages.is_empty() && self.stem_channels == 0 {
            return fail("stem_channels must be positive".into());
        }
        for (i, s) in self.stages.iter().enumerate() {
            if s.channels == 0 || s.blocks == 0 {
                return fail(format!("stage {i}: channels and blocks must be positive"));
            }
            if s.kernel_size % 2 == 0 || s.kernel_size == 0 {
                return fail(format!("stage {i}: kernel size {} is not odd", s.kernel_size));
            }
        }
        Ok(())
    }

    pub fn downsamples(&self) -> usize {
        self.stages.iter().filter(|s| s.downsample).count()
    }

    /// Same config with the other convolution kind.
    pub fn twin(&self, kind: ConvKind) -> Self {
        NetworkConfig {
            conv_kind: kind,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub enum Conv<T> {
    Sre(SreConv<T>),
    Dense(DenseConv<T>),
}

impl<T: Scalar> Conv<T> {
    fn forward(&self, x: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, ConvCache<T>)> {
        match self {
            Conv::Sre(c) => c.forward(x, mode),
            Conv::Dense(c) => c.forward(x, mode),
        }
    }

    fn backward(&self, dy: &Tensor<T>, cache: ConvCache<T>) -> Result<crate::layers::ConvGrads<T>> {
        match self {
            Conv::Sre(c) => c.backward(dy, cache),
            Conv::Dense(c) => c.backward(dy, cache),
        }
    }

    fn weight_name(&self) -> &'static str {
        match self {
            Conv::Sre(_) => "theta",
            Conv::Dense(_) => "weight",
        }
    }

    fn params(&self) -> [&Tensor<T>; 2] {
        match self {
            Conv::Sre(c) => [&c.weights().theta, &c.weights().bias],
            Conv::Dense(c) => [c.weight(), c.bias()],
        }
    }

    fn params_mut(&mut self) -> [&mut Tensor<T>; 2] {
        match self {
            Conv::Sre(c) => {
                let w = c.weights_mut();
                [&mut w.theta, &mut w.bias]
            }
            Conv::Dense(c) => {
                let (w, b) = c.parts_mut();
                [w, b]
            }
        }
    }

    fn cast<U: Scalar>(&self) -> Conv<U> {
        match self {
            Conv::Sre(c) => Conv::Sre(c.cast()),
            Conv::Dense(c) => Conv::Dense(c.cast()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvUnit<T> {
    pub conv: Conv<T>,
    pub bn: BatchNorm<T>,
    pub residual: bool,
    pub kernel: BandSpec,
}

#[derive(Clone, Debug)]
pub struct Transition<T> {
    pub pool: bool,
    pub conv: PointwiseConv<T>,
}

#[derive(Clone, Debug)]
pub enum Block<T> {
    Unit(ConvUnit<T>),
    Transition(Transition<T>),
}

impl<T> Block<T> {
    fn name(&self, index: &BlockName) -> String {
        match (self, index) {
            (_, BlockName::Stem) => "stem".into(),
            (Block::Transition(_), BlockName::Stage(s, _)) => format!("stage{s}.transition"),
            (Block::Unit(_), BlockName::Stage(s, b)) => format!("stage{s}.block{b}"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum BlockName {
    Stem,
    Stage(usize, usize),
}

/// Trainable parameter count of one layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerParams {
    pub name: String,
    pub count: usize,
    /// Trainable spatial weights per (out, in) channel pair for convolutions.
    pub spatial_per_pair: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParamCount {
    pub total: usize,
    pub layers: Vec<LayerParams>,
}

enum BlockCache<T> {
    Unit {
        conv: ConvCache<T>,
        bn: BatchNormCache<T>,
        relu: ReluCache,
    },
    Transition {
        pool: Option<PoolCache>,
        conv: PointwiseCache<T>,
    },
}

/// Everything a forward pass saved for the matching backward pass.
pub struct NetworkCache<T> {
    version: u64,
    blocks: Vec<BlockCache<T>>,
    pool: PoolCache,
    head: LinearCache<T>,
}

/// Gradients keyed by parameter name, in registry order.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub params: Vec<(String, Tensor<T>)>,
    /// Gradient with respect to the raw (pre-normalization) input.
    pub input: Tensor<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

#[derive(Clone, Debug)]
pub struct Network<T = f32> {
    config: NetworkConfig,
    blocks: Vec<Block<T>>,
    names: Vec<String>,
    head: Linear<T>,
    /// `[mean, std]` applied to the input before the stem.
    input_norm: Tensor<T>,
    version: u64,
}

impl<T: Scalar> Network<T> {
    /// Deterministic construction from `config.seed`.
    pub fn build(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.dims;
        let make_conv = |k: usize, c_in: usize, c_out: usize, rng: &mut ChaCha8Rng| -> Result<(Conv<T>, BandSpec)> {
            let spec = BandSpec::new(k, d)?;
            let conv = match config.conv_kind {
                ConvKind::Sre => Conv::Sre(SreConv::init(spec, c_in, c_out, rng)?),
                ConvKind::Standard => Conv::Dense(DenseConv::init(spec, c_in, c_out, rng)?),
            };
            Ok((conv, spec))
        };
        let mut blocks = Vec::new();
        let mut names = Vec::new();
        let mut width = config.in_channels;
        if let Some(first) = config.stages.first() {
            let (conv, kernel) = make_conv(first.kernel_size, width, config.stem_channels, &mut rng)?;
            let b = Block::Unit(ConvUnit {
                conv,
                bn: BatchNorm::new(config.stem_channels)?,
                residual: false,
                kernel,
            });
            names.push(b.name(&BlockName::Stem));
            blocks.push(b);
            width = config.stem_channels;
        }
        for (si, stage) in config.stages.iter().enumerate() {
            if stage.downsample || stage.channels != width {
                let b = Block::Transition(Transition {
                    pool: stage.downsample,
                    conv: PointwiseConv::init(width, stage.channels, &mut rng)?,
                });
                names.push(b.name(&BlockName::Stage(si, 0)));
                blocks.push(b);
                width = stage.channels;
            }
            for bi in 0..stage.blocks {
                let (conv, kernel) = make_conv(stage.kernel_size, width, width, &mut rng)?;
                let b = Block::Unit(ConvUnit {
                    conv,
                    bn: BatchNorm::new(width)?,
                    residual: config.residual,
                    kernel,
                });
                names.push(b.name(&BlockName::Stage(si, bi)));
                blocks.push(b);
            }
        }
        let head = Linear::init(width, config.num_classes, &mut rng)?;
        Ok(Network {
            config: config.clone(),
            blocks,
            names,
            head,
            input_norm: Tensor::from_f64(&[2], &[0.0, 1.0])?,
            version: 0,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn blocks(&self) -> &[Block<T>] {
        &self.blocks
    }

    pub fn head(&self) -> &Linear<T> {
        &self.head
    }

    pub fn feature_width(&self) -> usize {
        self.head.weight().dims()[1]
    }

    /// Input standardization `(x − mean) / std`, stored with the network.
    pub fn set_input_norm(&mut self, mean: f64, std: f64) -> Result<()> {
        if !(std > 0.0) || !mean.is_finite() || !std.is_finite() {
            return Err(Error::Config(format!("invalid input normalization ({mean}, {std})")));
        }
        self.input_norm = Tensor::from_f64(&[2], &[mean, std])?;
        self.version += 1;
        Ok(())
    }

    pub fn input_norm(&self) -> (f64, f64) {
        (self.input_norm.data()[0].to_f64(), self.input_norm.data()[1].to_f64())
    }

    /// Checks rank, channels and extents; returns the spatial extents.
    pub fn check_input(&self, x: &Tensor<T>) -> Result<Vec<usize>> {
        let d = self.config.dims;
        let dims = x.dims();
        if dims.len() != d + 2 || dims[1] != self.config.in_channels {
            return Err(shape_err!(
                "expected [N, {}] plus {} spatial axes, got {:?}",
                self.config.in_channels,
                d,
                dims
            ));
        }
        let spatial = &dims[2..];
        if spatial.iter().any(|&e| e != spatial[0]) {
            return Err(shape_err!("spatial extents must be equal, got {:?}", spatial));
        }
        let div = 1usize << self.config.downsamples();
        if spatial[0] % div != 0 {
            return Err(shape_err!(
                "spatial extent {} is not divisible by 2^{}",
                spatial[0],
                self.config.downsamples()
            ));
        }
        Ok(spatial.to_vec())
    }

    fn normalize(&self, x: &Tensor<T>) -> Tensor<T> {
        let (m, s) = (self.input_norm.data()[0], self.input_norm.data()[1]);
        x.map(|v| (v - m) / s)
    }

    /// Forward pass keeping every cache; train mode updates BN running statistics.
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, NetworkCache<T>)> {
        self.check_input(x)?;
        let mut h = self.normalize(x);
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &mut self.blocks {
            let (y, c) = match block {
                Block::Unit(u) => {
                    let (a, conv) = u.conv.forward(&h, mode)?;
                    let (b, bn) = u.bn.forward(&a, mode)?;
                    let (mut r, relu) = relu(&b);
                    if u.residual {
                        r = r.add(&h)?;
                    }
                    (r, BlockCache::Unit { conv, bn, relu })
                }
                Block::Transition(t) => {
                    let (p, pool) = if t.pool {
                        let (p, c) = avg_pool(&h)?;
                        (p, Some(c))
                    } else {
                        (h.clone(), None)
                    };
                    let (y, conv) = t.conv.forward(&p)?;
                    (y, BlockCache::Transition { pool, conv })
                }
            };
            h = y;
            caches.push(c);
        }
        let (g, pool) = global_avg_pool(&h)?;
        let (logits, head) = self.head.forward(&g)?;
        logits.check_finite("logits")?;
        Ok((
            logits,
            NetworkCache {
                version: self.version,
                blocks: caches,
                pool,
                head,
            },
        ))
    }

    /// Evaluation-mode feature map after `depth` blocks (all blocks if `None`).
    fn eval_trunk(&self, x: &Tensor<T>, depth: Option<usize>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut h = self.normalize(x);
        let depth = depth.unwrap_or(self.blocks.len()).min(self.blocks.len());
        for block in &self.blocks[..depth] {
            h = match block {
                Block::Unit(u) => {
                    let (a, _) = u.conv.forward(&h, Mode::Eval)?;
                    let (b, _) = u.bn.forward_eval(&a)?;
                    let (r, _) = relu(&b);
                    if u.residual {
                        r.add(&h)?
                    } else {
                        r
                    }
                }
                Block::Transition(t) => {
                    let p = if t.pool { avg_pool(&h)?.0 } else { h };
                    t.conv.forward(&p)?.0
                }
            };
        }
        Ok(h)
    }

    /// Evaluation-mode logits without caches.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let h = self.eval_trunk(x, None)?;
        let (g, _) = global_avg_pool(&h)?;
        let logits = self.head.forward(&g)?.0;
        logits.check_finite("logits")?;
        Ok(logits)
    }

    /// Indices of the blocks holding a spatial convolution, in order.
    pub fn conv_layers(&self) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&i| matches!(self.blocks[i], Block::Unit(_)))
            .collect()
    }

    /// Raw (pre-BN) evaluation-mode output of the `layer`-th spatial convolution.
    pub fn conv_features(&self, x: &Tensor<T>, layer: usize) -> Result<Tensor<T>> {
        let convs = self.conv_layers();
        let &bi = convs
            .get(layer)
            .ok_or_else(|| Error::Config(format!("layer {layer} out of {} convolutions", convs.len())))?;
        let h = self.eval_trunk(x, Some(bi))?;
        match &self.blocks[bi] {
            Block::Unit(u) => Ok(u.conv.forward(&h, Mode::Eval)?.0),
            Block::Transition(_) => unreachable!("conv_layers only lists units"),
        }
    }

    /// Gradients for every parameter from `d_logits`; errors on a stale cache.
    pub fn backward(&self, d_logits: &Tensor<T>, cache: NetworkCache<T>) -> Result<Gradients<T>> {
        if cache.version != self.version || cache.blocks.len() != self.blocks.len() {
            return Err(Error::StaleCache);
        }
        let hg = self.head.backward(d_logits, cache.head)?;
        let mut dh = global_avg_pool_backward(&hg.dx, cache.pool)?;
        let mut grads: Vec<(String, Tensor<T>)> = vec![
            ("head.bias".into(), hg.bias),
            ("head.weight".into(), hg.weight),
        ];
        for ((block, name), c) in self.blocks.iter().zip(&self.names).zip(cache.blocks).rev() {
            match (block, c) {
                (Block::Unit(u), BlockCache::Unit { conv, bn, relu: rc }) => {
                    let skip = u.residual.then(|| dh.clone());
                    let dr = relu_backward(&dh, rc)?;
                    let bg = u.bn.backward(&dr, bn)?;
                    let cg = u.conv.backward(&bg.dx, conv)?;
                    grads.push((format!("{name}.bn.beta"), bg.beta));
                    grads.push((format!("{name}.bn.gamma"), bg.gamma));
                    grads.push((format!("{name}.conv.bias"), cg.bias));
                    grads.push((format!("{name}.conv.{}", u.conv.weight_name()), cg.weight));
                    dh = match skip {
                        Some(s) => cg.dx.add(&s)?,
                        None => cg.dx,
                    };
                }
                (Block::Transition(t), BlockCache::Transition { pool, conv }) => {
                    let pg = t.conv.backward(&dh, conv)?;
                    grads.push((format!("{name}.conv.bias"), pg.bias));
                    grads.push((format!("{name}.conv.weight"), pg.weight));
                    dh = match pool {
                        Some(p) => avg_pool_backward(&pg.dx, p)?,
                        None => pg.dx,
                    };
                }
                _ => return Err(Error::StaleCache),
            }
        }
        grads.reverse();
        let inv = T::one() / self.input_norm.data()[1];
        Ok(Gradients {
            params: grads,
            input: dh.map(|v| v * inv),
        })
    }

    /// Trainable parameters in registry order.
    pub fn params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (block, name) in self.blocks.iter().zip(&self.names) {
            match block {
                Block::Unit(u) => {
                    let [w, b] = u.conv.params();
                    out.push((format!("{name}.conv.{}", u.conv.weight_name()), w));
                    out.push((format!("{name}.conv.bias"), b));
                    out.push((format!("{name}.bn.gamma"), &u.bn.gamma));
                    out.push((format!("{name}.bn.beta"), &u.bn.beta));
                }
                Block::Transition(t) => {
                    out.push((format!("{name}.conv.weight"), t.conv.weight()));
                    out.push((format!("{name}.conv.bias"), t.conv.bias()));
                }
            }
        }
        out.push(("head.weight".into(), self.head.weight()));
        out.push(("head.bias".into(), self.head.bias()));
        out
    }

    /// Mutable parameters in registry order. Invalidates outstanding caches
    /// and precomputed kernels.
    pub fn params_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.version += 1;
        let mut out = Vec::new();
        for (block, name) in self.blocks.iter_mut().zip(&self.names) {
            match block {
                Block::Unit(u) => {
                    let wname = u.conv.weight_name();
                    let [w, b] = u.conv.params_mut();
                    out.push((format!("{name}.conv.{wname}"), w));
                    out.push((format!("{name}.conv.bias"), b));
                    out.push((format!("{name}.bn.gamma"), &mut u.bn.gamma));
                    out.push((format!("{name}.bn.beta"), &mut u.bn.beta));
                }
                Block::Transition(t) => {
                    let (w, b) = t.conv.parts_mut();
                    out.push((format!("{name}.conv.weight"), w));
                    out.push((format!("{name}.conv.bias"), b));
                }
            }
        }
        let (w, b) = self.head.parts_mut();
        out.push(("head.weight".into(), w));
        out.push(("head.bias".into(), b));
        out
    }

    /// Non-trainable state: BN running statistics and input normalization.
    pub fn buffers(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = vec![("input.norm".into(), &self.input_norm)];
        for (block, name) in self.blocks.iter().zip(&self.names) {
            if let Block::Unit(u) = block {
                out.push((format!("{name}.bn.running_mean"), &u.bn.running_mean));
                out.push((format!("{name}.bn.running_var"), &u.bn.running_var));
            }
        }
        out
    }

    pub fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.version += 1;
        let mut out = vec![("input.norm".into(), &mut self.input_norm)];
        for (block, name) in self.blocks.iter_mut().zip(&self.names) {
            if let Block::Unit(u) = block {
                out.push((format!("{name}.bn.running_mean"), &mut u.bn.running_mean));
                out.push((format!("{name}.bn.running_var"), &mut u.bn.running_var));
            }
        }
        out
    }

    /// Parameters followed by buffers; the checkpoint tensor table.
    pub fn state(&self) -> Vec<(String, &Tensor<T>)> {
        let mut s = self.params();
        s.extend(self.buffers());
        s
    }

    /// Overwrites one parameter or buffer by name, checking its shape.
    pub fn set_tensor(&mut self, name: &str, value: Tensor<T>) -> Result<()> {
        let mut params = self.params_mut();
        if let Some((_, t)) = params.iter_mut().find(|(n, _)| n == name) {
            t.expect_same_shape(&value)?;
            **t = value;
            return Ok(());
        }
        let mut bufs = self.buffers_mut();
        match bufs.iter_mut().find(|(n, _)| n == name) {
            Some((_, t)) => {
                t.expect_same_shape(&value)?;
                **t = value;
                Ok(())
            }
            None => Err(Error::Config(format!("unknown tensor {name:?}"))),
        }
    }

    /// Expands every SRE kernel once for repeated inference.
    pub fn precompute(&mut self) -> Result<()> {
        for block in &mut self.blocks {
            if let Block::Unit(ConvUnit { conv: Conv::Sre(c), .. }) = block {
                c.precompute()?;
            }
        }
        Ok(())
    }

    pub fn count_parameters(&self) -> ParamCount {
        let mut layers = Vec::new();
        for (block, name) in self.blocks.iter().zip(&self.names) {
            match block {
                Block::Unit(u) => {
                    let [w, b] = u.conv.params();
                    let spatial = match u.conv {
                        Conv::Sre(_) => u.kernel.bands(),
                        Conv::Dense(_) => u.kernel.cells(),
                    };
                    layers.push(LayerParams {
                        name: format!("{name}.conv"),
                        count: w.len() + b.len(),
                        spatial_per_pair: Some(spatial),
                    });
                    layers.push(LayerParams {
                        name: format!("{name}.bn"),
                        count: 2 * u.bn.channels(),
                        spatial_per_pair: None,
                    });
                }
                Block::Transition(t) => layers.push(LayerParams {
                    name: format!("{name}.conv"),
                    count: t.conv.weight().len() + t.conv.bias().len(),
                    spatial_per_pair: Some(1),
                }),
            }
        }
        layers.push(LayerParams {
            name: "head".into(),
            count: self.head.weight().len() + self.head.bias().len(),
            spatial_per_pair: None,
        });
        ParamCount {
            total: layers.iter().map(|l| l.count).sum(),
            layers,
        }
    }

    /// Trainable spatial weights per channel pair of each stage's convolutions.
    pub fn stage_spatial_params(&self) -> Result<Vec<usize>> {
        self.config
            .stages
            .iter()
            .map(|s| {
                Ok(match self.config.conv_kind {
                    ConvKind::Sre => band_count(s.kernel_size)?,
                    ConvKind::Standard => s.kernel_size.pow(self.config.dims as u32),
                })
            })
            .collect()
    }

    /// Multiply-adds of one evaluation forward pass on a single input of the
    /// given spatial extent (convolutions and head; pooling and BN excluded).
    pub fn inference_macs(&self, extent: usize) -> u64 {
        let d = self.config.dims as u32;
        let mut e = extent;
        let mut total = 0u64;
        for block in &self.blocks {
            match block {
                Block::Unit(u) => {
                    let [w, _] = u.conv.params();
                    let (co, ci) = (w.dims()[0], w.dims()[1]);
                    total += conv_macs(ci, co, u.kernel.cells(), &vec![e; d as usize]);
                }
                Block::Transition(t) => {
                    if t.pool {
                        e /= 2;
                    }
                    let w = t.conv.weight().dims();
                    total += conv_macs(w[1], w[0], 1, &vec![e; d as usize]);
                }
            }
        }
        total + self.head.weight().len() as u64
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            config: self.config.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| match b {
                    Block::Unit(u) => Block::Unit(ConvUnit {
                        conv: u.conv.cast(),
                        bn: u.bn.cast(),
                        residual: u.residual,
                        kernel: u.kernel,
                    }),
                    Block::Transition(t) => Block::Transition(Transition {
                        pool: t.pool,
                        conv: t.conv.cast(),
                    }),
                })
                .collect(),
            names: self.names.clone(),
            head: self.head.cast(),
            input_norm: self.input_norm.cast(),
            version: 0,
        }
    }
}
