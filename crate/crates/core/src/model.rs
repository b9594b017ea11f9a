//! Trainable parameters and the per-graph forward/backward pass.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use ndarray::Array2;
use rand::distr::{Distribution, Uniform};
use rand::RngCore;

use crate::channels::{cross_kg_with_cache, AdjacencyPattern, AttentionParams, CrossCache};
use crate::encoder::{self, EncoderCache, EncoderGrads, EncoderParams};

/// The left (source) or right (target) graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Every trainable tensor. Attention and channel weights are single
/// instances serving both graphs; entity and relation tables are per graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub entities: [Array2<f64>; 2],
    pub relations: [Array2<f64>; 2],
    pub attention: AttentionParams,
    pub encoder: EncoderParams,
}

/// Sizes needed to allocate a [`Params`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamShape {
    pub entities: [usize; 2],
    pub relations: [usize; 2],
    pub dim: usize,
    pub layers: usize,
}

impl Params {
    pub fn zeros(shape: ParamShape) -> Self {
        let d = shape.dim;
        Self {
            entities: shape.entities.map(|n| Array2::zeros((n, d))),
            relations: shape.relations.map(|m| Array2::zeros((m, d))),
            attention: AttentionParams::zeros(d),
            encoder: EncoderParams::zeros(d, shape.layers, 0.0),
        }
    }

    /// Every tensor drawn from `U(-1/sqrt(d), 1/sqrt(d))`.
    pub fn random(shape: ParamShape, rng: &mut dyn RngCore) -> Self {
        let mut params = Self::zeros(shape);
        let bound = 1.0 / libm::sqrt(shape.dim as f64);
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        for (_, t) in params.tensors_mut() {
            t.mapv_inplace(|_| dist.sample(rng));
        }
        params
    }

    pub fn shape(&self) -> ParamShape {
        ParamShape {
            entities: [self.entities[0].nrows(), self.entities[1].nrows()],
            relations: [self.relations[0].nrows(), self.relations[1].nrows()],
            dim: self.dim(),
            layers: self.encoder.num_layers(),
        }
    }

    pub fn dim(&self) -> usize {
        self.attention.dim()
    }

    /// Same shapes, all zeros; the usual gradient buffer.
    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(self.shape());
        z.attention.leaky_slope = self.attention.leaky_slope;
        z.encoder.dropout = self.encoder.dropout;
        z
    }

    /// Named tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = vec![
            (String::from("entity.left"), &self.entities[0]),
            (String::from("entity.right"), &self.entities[1]),
            (String::from("relation.left"), &self.relations[0]),
            (String::from("relation.right"), &self.relations[1]),
            (String::from("attention.w"), &self.attention.w),
            (String::from("attention.p"), &self.attention.p),
        ];
        for (l, layer) in self.encoder.layers.iter().enumerate() {
            out.push((format!("channel.{l}.self"), &layer.self_attention));
            out.push((format!("channel.{l}.cross"), &layer.cross_kg));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let [el, er] = &mut self.entities;
        let [rl, rr] = &mut self.relations;
        let mut out = vec![
            (String::from("entity.left"), el),
            (String::from("entity.right"), er),
            (String::from("relation.left"), rl),
            (String::from("relation.right"), rr),
            (String::from("attention.w"), &mut self.attention.w),
            (String::from("attention.p"), &mut self.attention.p),
        ];
        for (l, layer) in self.encoder.layers.iter_mut().enumerate() {
            out.push((format!("channel.{l}.self"), &mut layer.self_attention));
            out.push((format!("channel.{l}.cross"), &mut layer.cross_kg));
        }
        out
    }

    /// Coarse grouping used by gradient checks: `entity`, `relation`, `attention.w`, ...
    pub fn group_of(name: &str) -> &str {
        match name.split_once('.') {
            Some(("entity", _)) => "entity",
            Some(("relation", _)) => "relation",
            _ => name,
        }
    }
}

/// Cached forward pass of one graph.
#[derive(Debug, Clone)]
pub struct SideForward {
    pub cross: CrossCache,
    pub encoder: EncoderCache,
}

impl SideForward {
    pub fn output(&self) -> &Array2<f64> {
        &self.encoder.output
    }
}

/// Encodes one graph: cross-graph weights from both relation tables, then the layer stack.
pub fn forward_side(
    params: &Params,
    pattern: &AdjacencyPattern,
    side: Side,
    row_normalize_cross: bool,
    rng: Option<&mut dyn RngCore>,
) -> SideForward {
    let s = side.index();
    let cross = cross_kg_with_cache(
        pattern,
        &params.relations[s],
        &params.relations[side.other().index()],
        row_normalize_cross,
    );
    let encoder = encoder::encode(
        pattern,
        &cross.adjacency,
        &params.attention,
        &params.encoder,
        &params.entities[s],
        rng,
    );
    SideForward { cross, encoder }
}

/// Accumulates into `grads` the gradient of a loss whose derivative w.r.t. this graph's output is `d_output`.
pub fn backward_side(
    params: &Params,
    pattern: &AdjacencyPattern,
    side: Side,
    forward: &SideForward,
    d_output: &Array2<f64>,
    grads: &mut Params,
) {
    let s = side.index();
    let o = side.other().index();
    let mut d_cross = vec![0.0; forward.cross.adjacency.nnz()];
    encoder::backward(
        &forward.encoder,
        pattern,
        &forward.cross.adjacency,
        &params.attention,
        &params.encoder,
        d_output,
        EncoderGrads {
            h0: &mut grads.entities[s],
            attention: &mut grads.attention,
            encoder: &mut grads.encoder,
            cross_weights: &mut d_cross,
        },
    );

    let cache = &forward.cross;
    let d_raw: Vec<f64> = if cache.row_normalized {
        let weights = cache.adjacency.weights();
        let mut d_raw = vec![0.0; d_cross.len()];
        for i in 0..pattern.n() {
            let range = pattern.row_range(i);
            let total: f64 = cache.raw[range.clone()].iter().sum();
            let weighted: f64 = range.clone().map(|k| d_cross[k] * weights[k]).sum();
            for k in range {
                d_raw[k] = (d_cross[k] - weighted) / total;
            }
        }
        d_raw
    } else {
        d_cross
    };

    for (k, pair) in cache.argmax.iter().enumerate() {
        let Some((r, r_other)) = *pair else { continue };
        let g = d_raw[k];
        if g == 0.0 {
            continue;
        }
        let own = params.relations[s].row(r.index()).to_owned();
        let other = params.relations[o].row(r_other.index()).to_owned();
        grads.relations[s].row_mut(r.index()).scaled_add(g, &other);
        grads.relations[o]
            .row_mut(r_other.index())
            .scaled_add(g, &own);
    }
}

/// Inverted-dropout-free encoding of both graphs.
pub fn encode_both(
    params: &Params,
    patterns: &[AdjacencyPattern; 2],
    row_normalize_cross: bool,
) -> [Array2<f64>; 2] {
    Side::BOTH.map(|side| {
        forward_side(
            params,
            &patterns[side.index()],
            side,
            row_normalize_cross,
            None,
        )
        .encoder
        .output
    })
}

/// Applies `f` to every matching pair of tensors of `a` and `b`.
pub fn zip_tensors(a: &mut Params, b: &Params, mut f: impl FnMut(&mut Array2<f64>, &Array2<f64>)) {
    for ((_, x), (_, y)) in a.tensors_mut().into_iter().zip(b.tensors()) {
        f(x, y);
    }
}
