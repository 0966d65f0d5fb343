use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{conv_backward_single, conv_single};
use super::Tensor;
use crate::error::{invalid, Error, Result};
use crate::scalar::{l2_norm, Scalar};

/// Layer descriptor of a sequential toy network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    /// Bias-free stride-1 convolution with "same" padding (odd `k`).
    Conv2d {
        c_out: usize,
        c_in: usize,
        k: usize,
    },
    Relu,
    /// 2x2 max pooling with stride 2 (floor on odd sizes).
    MaxPool2,
    /// Spatial max over each channel; switches to the vector domain.
    GlobalMaxPool,
    /// Fully connected layer with bias, vector domain only.
    Linear {
        c_in: usize,
        c_out: usize,
    },
}

impl Layer {
    pub fn is_parametric(&self) -> bool {
        matches!(self, Layer::Conv2d { .. } | Layer::Linear { .. })
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            Layer::Conv2d { c_out, c_in, k } => vec![vec![c_out, c_in, k, k]],
            Layer::Linear { c_in, c_out } => vec![vec![c_out, c_in], vec![c_out]],
            _ => Vec::new(),
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            Layer::Conv2d { c_in, k, .. } => c_in * k * k,
            Layer::Linear { c_in, .. } => c_in,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Domain {
    Spatial(usize),
    Vector(usize),
}

/// Activation cache of one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub(crate) struct ForwardCache<T> {
    inputs: Vec<Vec<T>>,
    in_dims: Vec<(usize, usize, usize)>,
    argmax: Vec<Vec<usize>>,
}

/// Sequential convolutional model used as the pruning target.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel<T> {
    layers: Vec<Layer>,
    params: Vec<Vec<Tensor<T>>>,
    seed: u64,
}

impl<T: Scalar> ToyModel<T> {
    /// Builds a model and initialises every weight uniformly in
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` from a ChaCha8 stream seeded with
    /// `seed`. Biases start at zero.
    pub fn new(layers: Vec<Layer>, seed: u64) -> Result<Self> {
        validate_layers(&layers)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = layers
            .iter()
            .map(|layer| {
                let bound = 1.0 / (layer.fan_in().max(1) as f64).sqrt();
                layer
                    .param_shapes()
                    .into_iter()
                    .enumerate()
                    .map(|(slot, shape)| {
                        if slot == 0 {
                            Tensor::from_fn(shape, |_| T::lit(rng.random_range(-bound..=bound)))
                        } else {
                            Tensor::zeros(shape)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            layers,
            params,
            seed,
        })
    }

    pub fn from_parts(layers: Vec<Layer>, params: Vec<Vec<Tensor<T>>>, seed: u64) -> Result<Self> {
        validate_layers(&layers)?;
        if params.len() != layers.len() {
            return Err(invalid(format!(
                "{} parameter groups for {} layers",
                params.len(),
                layers.len()
            )));
        }
        for (layer, group) in layers.iter().zip(&params) {
            let shapes = layer.param_shapes();
            if shapes.len() != group.len()
                || shapes
                    .iter()
                    .zip(group)
                    .any(|(s, t)| s.as_slice() != t.shape())
            {
                return Err(Error::ShapeMismatch {
                    left: shapes.first().cloned().unwrap_or_default(),
                    right: group
                        .first()
                        .map(|t| t.shape().to_vec())
                        .unwrap_or_default(),
                    context: "layer descriptor vs parameter tensor",
                });
            }
        }
        Ok(Self {
            layers,
            params,
            seed,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &[Vec<Tensor<T>>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Vec<Tensor<T>>] {
        &mut self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_channels(&self) -> usize {
        match self.layers.iter().find(|l| l.is_parametric()) {
            Some(Layer::Conv2d { c_in, .. }) | Some(Layer::Linear { c_in, .. }) => *c_in,
            _ => 0,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        let mut dim = 0;
        for layer in &self.layers {
            match *layer {
                Layer::Conv2d { c_out, .. } | Layer::Linear { c_out, .. } => dim = c_out,
                _ => {}
            }
        }
        dim
    }

    /// Index of the parametric layer that produces the embedding.
    pub fn embedding_layer(&self) -> Option<usize> {
        self.layers.iter().rposition(|l| l.is_parametric())
    }

    /// Conv layers whose output channels may be removed: every conv layer
    /// except the one producing the embedding.
    pub fn prunable_layers(&self) -> Vec<usize> {
        let last = self.embedding_layer();
        self.layers
            .iter()
            .enumerate()
            .filter(|(i, l)| matches!(l, Layer::Conv2d { .. }) && Some(*i) != last)
            .map(|(i, _)| i)
            .collect()
    }

    /// First parametric layer after `layer`, i.e. the consumer of its channels.
    pub fn consumer_of(&self, layer: usize) -> Option<usize> {
        (layer + 1..self.layers.len()).find(|&i| self.layers[i].is_parametric())
    }

    /// Weight matrix of a parametric layer viewed as `rows x cols` filters.
    pub fn filter_matrix(&self, layer: usize) -> Result<(usize, usize, &[T])> {
        let w = self.weight(layer)?;
        let rows = w.shape()[0];
        Ok((rows, w.len() / rows.max(1), w.data()))
    }

    pub fn filter_norms(&self, layer: usize) -> Result<Vec<T>> {
        let (rows, cols, data) = self.filter_matrix(layer)?;
        Ok((0..rows)
            .map(|r| l2_norm(&data[r * cols..(r + 1) * cols]))
            .collect())
    }

    fn weight(&self, layer: usize) -> Result<&Tensor<T>> {
        if layer >= self.layers.len() {
            return Err(Error::IndexOutOfRange {
                what: "layer",
                index: layer,
                len: self.layers.len(),
            });
        }
        self.params[layer]
            .first()
            .ok_or_else(|| invalid(format!("layer {layer} has no weights")))
    }

    /// Multiplies filter row `filter` of `layer` by `gamma` in place.
    pub fn scale_filter(&mut self, layer: usize, filter: usize, gamma: T) -> Result<()> {
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return Err(invalid(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        let (rows, cols, _) = self.filter_matrix(layer)?;
        if filter >= rows {
            return Err(Error::IndexOutOfRange {
                what: "filter",
                index: filter,
                len: rows,
            });
        }
        if gamma == T::one() {
            return Ok(());
        }
        let w = self.params[layer][0].data_mut();
        for v in &mut w[filter * cols..(filter + 1) * cols] {
            *v *= gamma;
        }
        Ok(())
    }

    /// Sets filter row `filter` of `layer` to exact zeros.
    pub fn zero_filter(&mut self, layer: usize, filter: usize) -> Result<()> {
        let (rows, cols, _) = self.filter_matrix(layer)?;
        if filter >= rows {
            return Err(Error::IndexOutOfRange {
                what: "filter",
                index: filter,
                len: rows,
            });
        }
        let w = self.params[layer][0].data_mut();
        w[filter * cols..(filter + 1) * cols].fill(T::zero());
        Ok(())
    }

    /// Keeps only the listed output channels (rows) of a parametric layer.
    pub(crate) fn retain_outputs(&mut self, layer: usize, keep: &[usize]) -> Result<()> {
        let (_, cols, data) = self.filter_matrix(layer)?;
        let mut w = Vec::with_capacity(keep.len() * cols);
        for &r in keep {
            w.extend_from_slice(&data[r * cols..(r + 1) * cols]);
        }
        let mut shape = self.params[layer][0].shape().to_vec();
        shape[0] = keep.len();
        self.params[layer][0] = Tensor::new(shape, w)?;
        match &mut self.layers[layer] {
            Layer::Conv2d { c_out, .. } => *c_out = keep.len(),
            Layer::Linear { c_out, .. } => {
                *c_out = keep.len();
                let b = self.params[layer][1].data();
                let nb = keep.iter().map(|&r| b[r]).collect();
                self.params[layer][1] = Tensor::new(vec![keep.len()], nb)?;
            }
            _ => unreachable!("filter_matrix succeeded"),
        }
        Ok(())
    }

    /// Keeps only the listed input channels of a parametric layer.
    pub(crate) fn retain_inputs(&mut self, layer: usize, keep: &[usize]) -> Result<()> {
        let w = self.weight(layer)?.clone();
        let shape = w.shape().to_vec();
        let (rows, c_in) = (shape[0], shape[1]);
        let per_in: usize = shape[2..].iter().product();
        let mut out = Vec::with_capacity(rows * keep.len() * per_in);
        for r in 0..rows {
            for &c in keep {
                let start = (r * c_in + c) * per_in;
                out.extend_from_slice(&w.data()[start..start + per_in]);
            }
        }
        let mut new_shape = shape;
        new_shape[1] = keep.len();
        self.params[layer][0] = Tensor::new(new_shape, out)?;
        match &mut self.layers[layer] {
            Layer::Conv2d { c_in, .. } | Layer::Linear { c_in, .. } => *c_in = keep.len(),
            _ => unreachable!("weight exists"),
        }
        Ok(())
    }

    /// Order-sensitive hash over layer descriptors and every parameter bit.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for (layer, group) in self.layers.iter().zip(&self.params) {
            h.write(format!("{layer:?}").as_bytes());
            for t in group {
                for &v in t.data() {
                    h.write_u64(v.as_f64().to_bits());
                }
            }
        }
        h.write_u64(self.seed);
        h.finish()
    }

    fn check_input(&self, shape: &[usize]) -> Result<(usize, usize, usize)> {
        let (c, h, w) = match *shape {
            [c, h, w] | [1, c, h, w] => (c, h, w),
            _ => {
                return Err(Error::ShapeMismatch {
                    left: shape.to_vec(),
                    right: vec![self.input_channels(), 0, 0],
                    context: "model input must be [C, H, W]",
                })
            }
        };
        if c != self.input_channels() {
            return Err(Error::ShapeMismatch {
                left: shape.to_vec(),
                right: vec![self.input_channels(), h, w],
                context: "model input channels",
            });
        }
        Ok((c, h, w))
    }

    /// Embedding of a single `[C, H, W]` (or `[1, C, H, W]`) input.
    pub fn embed(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let dims = self.check_input(input.shape())?;
        let out = self.forward(input.data(), dims, None)?;
        let n = out.len();
        Tensor::new(vec![n], out)
    }

    /// Per-sample embeddings of an `[N, C, H, W]` batch, returned as `[N, D]`.
    pub fn embed_batch(&self, inputs: &Tensor<T>) -> Result<Tensor<T>> {
        let [n, c, h, w] = *inputs.shape() else {
            return Err(Error::ShapeMismatch {
                left: inputs.shape().to_vec(),
                right: vec![0, self.input_channels(), 0, 0],
                context: "batched model input must be [N, C, H, W]",
            });
        };
        self.check_input(&[c, h, w])?;
        let per = c * h * w;
        let mut out = Vec::with_capacity(n * self.embedding_dim());
        for s in 0..n {
            out.extend(self.forward(&inputs.data()[s * per..(s + 1) * per], (c, h, w), None)?);
        }
        Tensor::new(vec![n, self.embedding_dim()], out)
    }

    pub(crate) fn forward_cached(&self, input: &Tensor<T>) -> Result<(Vec<T>, ForwardCache<T>)> {
        let dims = self.check_input(input.shape())?;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            in_dims: Vec::with_capacity(self.layers.len()),
            argmax: Vec::with_capacity(self.layers.len()),
        };
        let out = self.forward(input.data(), dims, Some(&mut cache))?;
        Ok((out, cache))
    }

    fn forward(
        &self,
        x: &[T],
        (mut c, mut h, mut w): (usize, usize, usize),
        mut cache: Option<&mut ForwardCache<T>>,
    ) -> Result<Vec<T>> {
        let mut cur = x.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            if let Some(cache) = cache.as_deref_mut() {
                cache.in_dims.push((c, h, w));
            }
            let mut argmax = Vec::new();
            let next = match *layer {
                Layer::Conv2d { c_out, c_in, k } => {
                    let mut out = vec![T::zero(); c_out * h * w];
                    conv_single(
                        &cur,
                        c_in,
                        h,
                        w,
                        self.params[idx][0].data(),
                        c_out,
                        k,
                        &mut out,
                    );
                    c = c_out;
                    out
                }
                Layer::Relu => cur
                    .iter()
                    .map(|&v| if v > T::zero() { v } else { T::zero() })
                    .collect(),
                Layer::MaxPool2 => {
                    if h < 2 || w < 2 {
                        return Err(invalid(format!("max-pool at layer {idx} on {h}x{w} map")));
                    }
                    let (oh, ow) = (h / 2, w / 2);
                    let mut out = Vec::with_capacity(c * oh * ow);
                    argmax.reserve(c * oh * ow);
                    for ch in 0..c {
                        for y in 0..oh {
                            for xx in 0..ow {
                                let mut best = usize::MAX;
                                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                                    let i = (ch * h + 2 * y + dy) * w + 2 * xx + dx;
                                    if best == usize::MAX || cur[i] > cur[best] {
                                        best = i;
                                    }
                                }
                                out.push(cur[best]);
                                argmax.push(best);
                            }
                        }
                    }
                    h = oh;
                    w = ow;
                    out
                }
                Layer::GlobalMaxPool => {
                    let plane = h * w;
                    let mut out = Vec::with_capacity(c);
                    for ch in 0..c {
                        let mut best = ch * plane;
                        for i in ch * plane + 1..(ch + 1) * plane {
                            if cur[i] > cur[best] {
                                best = i;
                            }
                        }
                        out.push(cur[best]);
                        argmax.push(best);
                    }
                    h = 1;
                    w = 1;
                    out
                }
                Layer::Linear { c_in, c_out } => {
                    let wt = self.params[idx][0].data();
                    let b = self.params[idx][1].data();
                    c = c_out;
                    (0..c_out)
                        .map(|o| {
                            let row = &wt[o * c_in..(o + 1) * c_in];
                            let mut acc = b[o];
                            for (&a, &v) in row.iter().zip(&cur) {
                                acc += a * v;
                            }
                            acc
                        })
                        .collect()
                }
            };
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: idx });
            }
            if let Some(cache) = cache.as_deref_mut() {
                cache.inputs.push(std::mem::replace(&mut cur, next));
                cache.argmax.push(argmax);
            } else {
                cur = next;
            }
        }
        Ok(cur)
    }

    /// Accumulates parameter gradients of one forward pass into `grads`.
    pub(crate) fn backward(
        &self,
        cache: &ForwardCache<T>,
        d_out: Vec<T>,
        grads: &mut [Vec<Vec<T>>],
    ) {
        let mut g = d_out;
        for idx in (0..self.layers.len()).rev() {
            let x = &cache.inputs[idx];
            let (_, ih, iw) = cache.in_dims[idx];
            g = match self.layers[idx] {
                Layer::Conv2d { c_out, c_in, k } => {
                    let mut dx = vec![T::zero(); x.len()];
                    let need_dx = idx > 0;
                    conv_backward_single(
                        x,
                        c_in,
                        ih,
                        iw,
                        self.params[idx][0].data(),
                        c_out,
                        k,
                        &g,
                        &mut grads[idx][0],
                        if need_dx { Some(&mut dx) } else { None },
                    );
                    dx
                }
                Layer::Relu => x
                    .iter()
                    .zip(&g)
                    .map(|(&v, &gv)| if v > T::zero() { gv } else { T::zero() })
                    .collect(),
                Layer::MaxPool2 | Layer::GlobalMaxPool => {
                    let mut dx = vec![T::zero(); x.len()];
                    for (&src, &gv) in cache.argmax[idx].iter().zip(&g) {
                        dx[src] += gv;
                    }
                    dx
                }
                Layer::Linear { c_in, c_out } => {
                    let wt = self.params[idx][0].data();
                    let mut dx = vec![T::zero(); c_in];
                    for o in 0..c_out {
                        let gv = g[o];
                        grads[idx][1][o] += gv;
                        let gw = &mut grads[idx][0][o * c_in..(o + 1) * c_in];
                        for i in 0..c_in {
                            gw[i] += gv * x[i];
                            dx[i] += gv * wt[o * c_in + i];
                        }
                    }
                    dx
                }
            };
        }
    }
}

fn validate_layers(layers: &[Layer]) -> Result<()> {
    let first_c = match layers.iter().find(|l| l.is_parametric()) {
        Some(Layer::Conv2d { c_in, .. }) => *c_in,
        _ => return Err(Error::Arch("model must start with a conv layer".into())),
    };
    let mut domain = Domain::Spatial(first_c);
    for (i, layer) in layers.iter().enumerate() {
        domain = match (*layer, domain) {
            (Layer::Conv2d { c_out, c_in, k }, Domain::Spatial(c)) if c == c_in => {
                if k % 2 == 0 || c_out == 0 {
                    return Err(Error::Arch(format!(
                        "layer {i}: kernel must be odd and c_out > 0"
                    )));
                }
                Domain::Spatial(c_out)
            }
            (Layer::Relu, d) => d,
            (Layer::MaxPool2, Domain::Spatial(c)) => Domain::Spatial(c),
            (Layer::GlobalMaxPool, Domain::Spatial(c)) => Domain::Vector(c),
            (Layer::Linear { c_in, c_out }, Domain::Vector(c)) if c == c_in && c_out > 0 => {
                Domain::Vector(c_out)
            }
            (l, d) => {
                return Err(Error::Arch(format!(
                    "layer {i} ({l:?}) incompatible with incoming {d:?}"
                )))
            }
        };
    }
    match domain {
        Domain::Vector(_) => Ok(()),
        Domain::Spatial(_) => Err(Error::Arch(
            "model must end in the vector domain (global max-pool)".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ToyModel<f64> {
        ToyModel::new(
            vec![
                Layer::Conv2d {
                    c_out: 4,
                    c_in: 2,
                    k: 3,
                },
                Layer::Relu,
                Layer::MaxPool2,
                Layer::Conv2d {
                    c_out: 3,
                    c_in: 4,
                    k: 3,
                },
                Layer::Relu,
                Layer::GlobalMaxPool,
                Layer::Linear { c_in: 3, c_out: 2 },
            ],
            5,
        )
        .unwrap()
    }

    fn input(seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(vec![2, 6, 6], |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = small();
        assert_eq!(a, small());
        let bound = 1.0 / 18f64.sqrt();
        assert!(a.params()[0][0].data().iter().all(|v| v.abs() <= bound));
        assert!(a.params()[6][1].data().iter().all(|&b| b == 0.0));
        let other = ToyModel::<f64>::new(a.layers().to_vec(), 6).unwrap();
        assert_ne!(a.fingerprint(), other.fingerprint());
    }

    #[test]
    fn roles_of_layers() {
        let m = small();
        assert_eq!(m.prunable_layers(), vec![0, 3]);
        assert_eq!(m.embedding_layer(), Some(6));
        assert_eq!(m.consumer_of(0), Some(3));
        assert_eq!(m.consumer_of(3), Some(6));
        assert_eq!(m.embedding_dim(), 2);
    }

    #[test]
    fn invalid_topologies_rejected() {
        let conv = Layer::Conv2d {
            c_out: 2,
            c_in: 1,
            k: 3,
        };
        assert!(ToyModel::<f64>::new(vec![conv], 0).is_err());
        assert!(ToyModel::<f64>::new(vec![conv, Layer::Linear { c_in: 2, c_out: 2 }], 0).is_err());
        assert!(ToyModel::<f64>::new(
            vec![
                Layer::Conv2d {
                    c_out: 2,
                    c_in: 1,
                    k: 2
                },
                Layer::GlobalMaxPool
            ],
            0
        )
        .is_err());
        assert!(ToyModel::<f64>::new(
            vec![
                conv,
                Layer::Conv2d {
                    c_out: 2,
                    c_in: 3,
                    k: 1
                },
                Layer::GlobalMaxPool
            ],
            0
        )
        .is_err());
    }

    #[test]
    fn scale_filter_touches_one_row_linearly() {
        let m = small();
        let mut s = m.clone();
        s.scale_filter(3, 1, 0.25).unwrap();
        let (rows, cols, before) = m.filter_matrix(3).unwrap();
        let after = s.filter_matrix(3).unwrap().2;
        for r in 0..rows {
            for c in 0..cols {
                let want = if r == 1 {
                    before[r * cols + c] * 0.25
                } else {
                    before[r * cols + c]
                };
                assert_eq!(after[r * cols + c], want);
            }
        }
        assert_eq!(s.params()[0], m.params()[0]);
        let mut same = m.clone();
        same.scale_filter(3, 1, 1.0).unwrap();
        assert_eq!(same, m);
        assert!(s.clone().scale_filter(3, 1, 1.5).is_err());
        assert!(s.clone().scale_filter(3, 3, 0.5).is_err());
        assert!(s.clone().scale_filter(1, 0, 0.5).is_err());
    }

    #[test]
    fn zeroed_channel_is_zero_after_conv() {
        let mut m = ToyModel::<f64>::new(
            vec![
                Layer::Conv2d {
                    c_out: 3,
                    c_in: 2,
                    k: 3,
                },
                Layer::GlobalMaxPool,
                Layer::Linear { c_in: 3, c_out: 3 },
            ],
            1,
        )
        .unwrap();
        m.zero_filter(0, 2).unwrap();
        // identity head exposes the pooled conv channels
        let eye: Vec<f64> = (0..9).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        m.params_mut()[2][0] = Tensor::new(vec![3, 3], eye).unwrap();
        let e = m.embed(&input(2)).unwrap();
        assert_eq!(e.data()[2], 0.0);
        assert_ne!(e.data()[0], 0.0);
    }

    #[test]
    fn embed_matches_batched_embed_and_is_deterministic() {
        let m = small();
        let xs: Vec<Tensor<f64>> = (0..3).map(input).collect();
        let flat: Vec<f64> = xs.iter().flat_map(|x| x.data().to_vec()).collect();
        let batch = m
            .embed_batch(&Tensor::new(vec![3, 2, 6, 6], flat).unwrap())
            .unwrap();
        for (i, x) in xs.iter().enumerate() {
            let e = m.embed(x).unwrap();
            assert_eq!(e.data(), &batch.data()[i * 2..(i + 1) * 2]);
            assert_eq!(e, m.embed(x).unwrap());
        }
        assert!(m.embed(&Tensor::zeros(vec![3, 6, 6])).is_err());
    }

    #[test]
    fn non_finite_input_names_the_layer() {
        let m = small();
        let mut x = input(0);
        x.data_mut()[0] = f64::NAN;
        assert!(matches!(m.embed(&x), Err(Error::NonFinite { layer: 0 })));
    }

    #[test]
    fn retain_outputs_and_inputs_slice_the_right_channels() {
        let m = small();
        let mut s = m.clone();
        s.retain_outputs(0, &[0, 2, 3]).unwrap();
        s.retain_inputs(3, &[0, 2, 3]).unwrap();
        assert_eq!(
            s.layers()[0],
            Layer::Conv2d {
                c_out: 3,
                c_in: 2,
                k: 3
            }
        );
        assert_eq!(
            s.layers()[3],
            Layer::Conv2d {
                c_out: 3,
                c_in: 3,
                k: 3
            }
        );
        let w = m.params()[3][0].data();
        let sw = s.params()[3][0].data();
        // output 1, kept input 1 (original channel 2), tap 4
        assert_eq!(sw[(3 + 1) * 9 + 4], w[(4 + 2) * 9 + 4]);
        let mut h = m.clone();
        h.retain_outputs(6, &[1]).unwrap();
        assert_eq!(h.params()[6][1].len(), 1);
    }
}
