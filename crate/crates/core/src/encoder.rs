//! Two-channel graph encoder.
//!
//! Each layer propagates the current states through both channels,
//! `H_c = ReLU(A_c H W_c)`, and average-pools the channel outputs. The
//! self-attention adjacency is recomputed from every layer's input states;
//! the cross-graph adjacency is fixed for the whole pass. The same weights
//! encode both graphs.

use alloc::vec;
use alloc::vec::Vec;

use ndarray::{Array1, Array2, Zip};
use rand::{Rng, RngCore};

use crate::channels::{
    self_attention_with_cache, AdjacencyPattern, AttentionCache, AttentionParams, WeightedAdjacency,
};

/// Per-layer channel weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelWeights {
    pub self_attention: Array2<f64>,
    pub cross_kg: Array2<f64>,
}

impl ChannelWeights {
    pub fn zeros(dim: usize) -> Self {
        Self {
            self_attention: Array2::zeros((dim, dim)),
            cross_kg: Array2::zeros((dim, dim)),
        }
    }

    fn channel(&self, c: usize) -> &Array2<f64> {
        if c == 0 {
            &self.self_attention
        } else {
            &self.cross_kg
        }
    }

    fn channel_mut(&mut self, c: usize) -> &mut Array2<f64> {
        if c == 0 {
            &mut self.self_attention
        } else {
            &mut self.cross_kg
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub layers: Vec<ChannelWeights>,
    /// Drop probability between layers, training only.
    pub dropout: f64,
}

impl EncoderParams {
    pub fn zeros(dim: usize, layers: usize, dropout: f64) -> Self {
        Self {
            layers: (0..layers).map(|_| ChannelWeights::zeros(dim)).collect(),
            dropout,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }
}

/// `ReLU(A H W)`.
pub fn gnn_layer(a: &WeightedAdjacency, h: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
    a.mul_dense(h).dot(w).mapv(|v| v.max(0.0))
}

/// Elementwise mean of the channel outputs.
pub fn average_pool(channels: &[Array2<f64>]) -> Array2<f64> {
    let mut out = channels[0].clone();
    for c in &channels[1..] {
        out += c;
    }
    out / channels.len() as f64
}

#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: Array2<f64>,
    pub attention: AttentionCache,
    /// `A_c H` per channel.
    pub aggregated: [Array2<f64>; 2],
    /// `A_c H W_c` per channel, before the ReLU.
    pub pre_activation: [Array2<f64>; 2],
    /// Inverted-dropout multipliers applied to the pooled output.
    pub mask: Option<Array2<f64>>,
}

#[derive(Debug, Clone)]
pub struct EncoderCache {
    pub layers: Vec<LayerCache>,
    pub output: Array2<f64>,
}

/// Forward pass keeping every intermediate; dropout is applied only when `rng` is given.
pub fn encode(
    pattern: &AdjacencyPattern,
    cross: &WeightedAdjacency,
    attention: &AttentionParams,
    params: &EncoderParams,
    h0: &Array2<f64>,
    mut rng: Option<&mut dyn RngCore>,
) -> EncoderCache {
    let depth = params.num_layers();
    let mut layers = Vec::with_capacity(depth);
    let mut h = h0.clone();
    for (l, weights) in params.layers.iter().enumerate() {
        let att = self_attention_with_cache(pattern, &h, attention);
        let aggregated = [att.adjacency.mul_dense(&h), cross.mul_dense(&h)];
        let pre_activation = [
            aggregated[0].dot(weights.channel(0)),
            aggregated[1].dot(weights.channel(1)),
        ];
        let activated: Vec<Array2<f64>> = pre_activation
            .iter()
            .map(|p| p.mapv(|v| v.max(0.0)))
            .collect();
        let mut pooled = average_pool(&activated);

        let mask = match rng.as_deref_mut() {
            Some(rng) if l + 1 < depth && params.dropout > 0.0 => {
                let keep = 1.0 - params.dropout;
                let mask = Array2::from_shape_simple_fn(pooled.raw_dim(), || {
                    if rng.random::<f64>() < params.dropout {
                        0.0
                    } else {
                        1.0 / keep
                    }
                });
                pooled *= &mask;
                Some(mask)
            }
            _ => None,
        };
        layers.push(LayerCache {
            input: h,
            attention: att,
            aggregated,
            pre_activation,
            mask,
        });
        h = pooled;
    }
    EncoderCache { layers, output: h }
}

/// Inference-mode forward pass: the final-layer states.
pub fn multi_channel_forward(
    pattern: &AdjacencyPattern,
    cross: &WeightedAdjacency,
    attention: &AttentionParams,
    params: &EncoderParams,
    h0: &Array2<f64>,
) -> Array2<f64> {
    encode(pattern, cross, attention, params, h0, None).output
}

/// Gradient buffers the backward pass accumulates into.
pub struct EncoderGrads<'a> {
    pub h0: &'a mut Array2<f64>,
    pub attention: &'a mut AttentionParams,
    pub encoder: &'a mut EncoderParams,
    /// One slot per stored entry of the cross-graph adjacency.
    pub cross_weights: &'a mut [f64],
}

/// Backpropagates `d_output` (gradient w.r.t. the final states) through a cached pass.
pub fn backward(
    cache: &EncoderCache,
    pattern: &AdjacencyPattern,
    cross: &WeightedAdjacency,
    attention: &AttentionParams,
    params: &EncoderParams,
    d_output: &Array2<f64>,
    grads: EncoderGrads<'_>,
) {
    assert_eq!(grads.cross_weights.len(), cross.nnz());
    let mut d_h = d_output.clone();
    for (l, layer) in cache.layers.iter().enumerate().rev() {
        let mut d_pooled = d_h;
        if let Some(mask) = &layer.mask {
            d_pooled *= mask;
        }
        let mut d_input = Array2::zeros(layer.input.raw_dim());
        for c in 0..2 {
            let mut d_pre = d_pooled.clone();
            Zip::from(&mut d_pre)
                .and(&layer.pre_activation[c])
                .for_each(|g, &p| *g = if p > 0.0 { 0.5 * *g } else { 0.0 });
            let w = params.layers[l].channel(c);
            *grads.encoder.layers[l].channel_mut(c) += &layer.aggregated[c].t().dot(&d_pre);
            let d_agg = d_pre.dot(&w.t());

            let adjacency = if c == 0 {
                &layer.attention.adjacency
            } else {
                cross
            };
            d_input += &adjacency.transpose_mul_dense(&d_agg);
            let d_weights = entry_gradients(adjacency, &d_agg, &layer.input);
            if c == 0 {
                attention_backward(
                    pattern,
                    &layer.attention,
                    attention,
                    &layer.input,
                    &d_weights,
                    &mut d_input,
                    grads.attention,
                );
            } else {
                for (slot, g) in grads.cross_weights.iter_mut().zip(&d_weights) {
                    *slot += g;
                }
            }
        }
        d_h = d_input;
    }
    *grads.h0 += &d_h;
}

/// `dL/dA_ij = <dL/d(AH)_i, H_j>` for each stored entry.
fn entry_gradients(a: &WeightedAdjacency, d_agg: &Array2<f64>, h: &Array2<f64>) -> Vec<f64> {
    a.entries()
        .map(|(i, j, _)| d_agg.row(i).dot(&h.row(j)))
        .collect()
}

fn attention_backward(
    pattern: &AdjacencyPattern,
    cache: &AttentionCache,
    params: &AttentionParams,
    input: &Array2<f64>,
    d_weights: &[f64],
    d_input: &mut Array2<f64>,
    grads: &mut AttentionParams,
) {
    let n = pattern.n();
    let weights = cache.adjacency.weights();
    let mut d_source = Array1::<f64>::zeros(n);
    let mut d_target = Array1::<f64>::zeros(n);
    for i in 0..n {
        let range = pattern.row_range(i);
        let weighted: f64 = range.clone().map(|k| weights[k] * d_weights[k]).sum();
        for k in range {
            let d_logit = weights[k] * (d_weights[k] - weighted);
            let slope = if cache.scores[k] > 0.0 {
                1.0
            } else {
                params.leaky_slope
            };
            let d_score = d_logit * slope;
            d_source[i] += d_score;
            d_target[pattern.col(k)] += d_score;
        }
    }
    let z = &cache.z;
    let p_source = params.p.row(0);
    let p_target = params.p.row(1);
    grads.p.row_mut(0).scaled_add(1.0, &z.t().dot(&d_source));
    grads.p.row_mut(1).scaled_add(1.0, &z.t().dot(&d_target));

    let mut d_z = Array2::<f64>::zeros(z.raw_dim());
    for i in 0..n {
        let mut row = d_z.row_mut(i);
        row.scaled_add(d_source[i], &p_source);
        row.scaled_add(d_target[i], &p_target);
    }
    grads.w += &d_z.t().dot(input);
    *d_input += &d_z.dot(&params.w);
}

/// Signs of every ReLU and LeakyReLU argument in a cached pass.
///
/// Two passes with equal signatures lie on the same smooth piece of the encoder.
pub fn activation_signature(cache: &EncoderCache) -> Vec<i32> {
    let mut sig = vec![];
    for layer in &cache.layers {
        sig.extend(layer.attention.scores.iter().map(|&s| sign(s)));
        for p in &layer.pre_activation {
            sig.extend(p.iter().map(|&v| sign(v)));
        }
    }
    sig
}

fn sign(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KnowledgeGraph, Triple};
    use ndarray::array;

    #[test]
    fn identity_propagation_is_relu() {
        let h = array![[1.0, -2.0], [-0.5, 3.0]];
        let out = gnn_layer(&WeightedAdjacency::identity(2), &h, &Array2::eye(2));
        assert_eq!(out, array![[1.0, 0.0], [0.0, 3.0]]);
    }

    #[test]
    fn zero_states_stay_zero() {
        let a = WeightedAdjacency::from_entries(2, &[(0, 0, 0.3), (0, 1, 0.7), (1, 1, 1.0)]);
        let out = gnn_layer(&a, &Array2::zeros((2, 3)), &Array2::from_elem((3, 3), 2.0));
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_node_chain_by_hand() {
        // a = [[0.25, 0.75], [0, 1]], h = [2, -4], w = 0.5
        let a = WeightedAdjacency::from_entries(2, &[(0, 0, 0.25), (0, 1, 0.75), (1, 1, 1.0)]);
        let out = gnn_layer(&a, &array![[2.0], [-4.0]], &array![[0.5]]);
        // row 0: (0.5 - 3) * 0.5 < 0 -> 0 ; row 1: -4 * 0.5 < 0 -> 0
        assert_eq!(out, array![[0.0], [0.0]]);
        let out = gnn_layer(&a, &array![[2.0], [4.0]], &array![[-0.5]]);
        assert_eq!(out, array![[0.0], [0.0]]);
        let out = gnn_layer(&a, &array![[2.0], [4.0]], &array![[0.5]]);
        assert_eq!(out, array![[(0.5 + 3.0) * 0.5], [2.0]]);
    }

    #[test]
    fn average_pooling() {
        let x = array![[1.0, 2.0]];
        let y = array![[3.0, -2.0]];
        assert_eq!(average_pool(&[x, y]), array![[2.0, 0.0]]);
    }

    #[test]
    fn identical_channels_match_single_channel_stack() {
        let kg = KnowledgeGraph::from_ids(
            3,
            1,
            vec![Triple::from_raw(0, 0, 1), Triple::from_raw(1, 0, 2)],
        );
        let pattern = AdjacencyPattern::new(&kg);
        // zero attention parameters give uniform weights, which `cross` reproduces
        let attention = AttentionParams::zeros(2);
        let cross = WeightedAdjacency::from_entries(
            3,
            &[
                (0, 0, 0.5),
                (0, 1, 0.5),
                (1, 1, 0.5),
                (1, 2, 0.5),
                (2, 2, 1.0),
            ],
        );
        let w = array![[0.9, -0.3], [0.2, 0.8]];
        let params = EncoderParams {
            layers: vec![
                ChannelWeights {
                    self_attention: w.clone(),
                    cross_kg: w.clone(),
                };
                2
            ],
            dropout: 0.0,
        };
        let h0 = array![[1.0, 0.5], [-0.2, 0.4], [0.3, 0.3]];
        let out = multi_channel_forward(&pattern, &cross, &attention, &params, &h0);
        let single = gnn_layer(&cross, &gnn_layer(&cross, &h0, &w), &w);
        for (a, b) in out.iter().zip(single.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dropout_only_between_layers_and_only_when_training() {
        let kg = KnowledgeGraph::from_ids(2, 1, vec![Triple::from_raw(0, 0, 1)]);
        let pattern = AdjacencyPattern::new(&kg);
        let attention = AttentionParams::zeros(2);
        let cross = WeightedAdjacency::identity(2);
        let mut params = EncoderParams::zeros(2, 2, 0.5);
        for layer in &mut params.layers {
            layer.self_attention = Array2::eye(2);
            layer.cross_kg = Array2::eye(2);
        }
        let h0 = array![[1.0, 2.0], [3.0, 4.0]];
        let eval = encode(&pattern, &cross, &attention, &params, &h0, None);
        assert!(eval.layers.iter().all(|l| l.mask.is_none()));

        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let train = encode(&pattern, &cross, &attention, &params, &h0, Some(&mut rng));
        assert!(train.layers[0].mask.is_some());
        assert!(train.layers[1].mask.is_none());
        for &m in train.layers[0].mask.as_ref().unwrap() {
            assert!(m == 0.0 || m == 2.0);
        }
    }
}
