//! Weighted connectivity matrices for the two encoder channels.
//!
//! Both channels share one sparsity pattern per graph: row `i` holds the
//! self-loop `i` plus every distinct out-neighbour `j` of `i`. The
//! self-attention channel fills it with a softmax over attention scores; the
//! cross-graph channel with the best relation similarity to the other graph.

use alloc::vec;
use alloc::vec::Vec;

use ndarray::{Array1, Array2, ArrayView1};

use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::linalg::dot;

/// Row structure shared by both channels of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyPattern {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    /// Relations linking `i -> cols[k]`; empty for the self-loop.
    edge_relations: Vec<Vec<RelationId>>,
}

impl AdjacencyPattern {
    pub fn new(kg: &KnowledgeGraph) -> Self {
        let n = kg.num_entities();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut edge_relations = Vec::new();
        offsets.push(0);
        for i in 0..n {
            let mut links: Vec<(usize, RelationId)> = kg
                .outgoing(EntityId(i as u32))
                .iter()
                .filter(|t| t.tail.index() != i)
                .map(|t| (t.tail.index(), t.relation))
                .collect();
            links.push((i, RelationId(u32::MAX)));
            links.sort_unstable();
            for group in links.chunk_by(|a, b| a.0 == b.0) {
                let j = group[0].0;
                cols.push(j);
                edge_relations.push(if j == i {
                    Vec::new()
                } else {
                    group.iter().map(|&(_, r)| r).collect()
                });
            }
            offsets.push(cols.len());
        }
        Self {
            n,
            offsets,
            cols,
            edge_relations,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row_range(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn col(&self, k: usize) -> usize {
        self.cols[k]
    }

    pub fn relations(&self, k: usize) -> &[RelationId] {
        &self.edge_relations[k]
    }

    fn with_weights(&self, weights: Vec<f64>) -> WeightedAdjacency {
        debug_assert_eq!(weights.len(), self.nnz());
        WeightedAdjacency {
            n: self.n,
            offsets: self.offsets.clone(),
            cols: self.cols.clone(),
            weights,
        }
    }
}

/// Sparse nonnegative `n x n` matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl WeightedAdjacency {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            offsets: (0..=n).collect(),
            cols: (0..n).collect(),
            weights: vec![1.0; n],
        }
    }

    /// From `(row, col, weight)` triplets; duplicate positions are summed.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut sorted = entries.to_vec();
        sorted.sort_by_key(|e| (e.0, e.1));
        let mut offsets = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, w) in &sorted {
            assert!(i < n && j < n, "entry ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *weights.last_mut().unwrap() += w;
                continue;
            }
            last = Some((i, j));
            cols.push(j);
            weights.push(w);
            offsets[i + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Self {
            n,
            offsets,
            cols,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `(col, weight)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// All `(row, col, weight)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, w)| w).sum()
    }

    /// `A * x` for dense `x` with `n` rows.
    pub fn mul_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "dense operand has wrong row count");
        let mut out = Array2::zeros((self.n, x.ncols()));
        for i in 0..self.n {
            let mut row = out.row_mut(i);
            for (j, w) in self.row(i) {
                if w != 0.0 {
                    row.scaled_add(w, &x.row(j));
                }
            }
        }
        out
    }

    /// `A^T * x` for dense `x` with `n` rows.
    pub fn transpose_mul_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "dense operand has wrong row count");
        let mut out = Array2::zeros((self.n, x.ncols()));
        for i in 0..self.n {
            let xi = x.row(i);
            for (j, w) in self.row(i) {
                if w != 0.0 {
                    out.row_mut(j).scaled_add(w, &xi);
                }
            }
        }
        out
    }
}

/// Attention function parameters: projection `w` (`d x d`) and scoring vector
/// `p` stored as a `2 x d` matrix whose rows act on the source and target
/// projections.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w: Array2<f64>,
    pub p: Array2<f64>,
    pub leaky_slope: f64,
}

impl AttentionParams {
    pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

    pub fn zeros(dim: usize) -> Self {
        Self {
            w: Array2::zeros((dim, dim)),
            p: Array2::zeros((2, dim)),
            leaky_slope: Self::DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }
}

#[inline]
pub(crate) fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Intermediates of the self-attention weights, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    /// Projected states, `z_i = W h_i`.
    pub z: Array2<f64>,
    /// Pre-activation score of every stored entry.
    pub scores: Vec<f64>,
    pub adjacency: WeightedAdjacency,
}

/// Softmax attention over `N(i) ∪ {i}` from the states `h`.
pub fn self_attention_adjacency(
    pattern: &AdjacencyPattern,
    h: &Array2<f64>,
    params: &AttentionParams,
) -> WeightedAdjacency {
    self_attention_with_cache(pattern, h, params).adjacency
}

pub fn self_attention_with_cache(
    pattern: &AdjacencyPattern,
    h: &Array2<f64>,
    params: &AttentionParams,
) -> AttentionCache {
    assert_eq!(h.nrows(), pattern.n(), "state rows must match the graph");
    assert_eq!(h.ncols(), params.dim(), "state width must match attention");
    let z = h.dot(&params.w.t());
    let source: Array1<f64> = z.dot(&params.p.row(0));
    let target: Array1<f64> = z.dot(&params.p.row(1));

    let mut scores = Vec::with_capacity(pattern.nnz());
    let mut weights = Vec::with_capacity(pattern.nnz());
    for i in 0..pattern.n() {
        let range = pattern.row_range(i);
        let start = scores.len();
        for k in range {
            scores.push(source[i] + target[pattern.col(k)]);
        }
        let logits: Vec<f64> = scores[start..]
            .iter()
            .map(|&s| leaky_relu(s, params.leaky_slope))
            .collect();
        softmax_into(&logits, &mut weights);
    }
    AttentionCache {
        z,
        scores,
        adjacency: pattern.with_weights(weights),
    }
}

/// Numerically stable softmax of `logits`, appended to `out`.
pub(crate) fn softmax_into(logits: &[f64], out: &mut Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = out.len();
    let mut total = 0.0;
    for &c in logits {
        let e = libm::exp(c - max);
        total += e;
        out.push(e);
    }
    for w in &mut out[start..] {
        *w /= total;
    }
}

/// Which counterpart relation pair produced each cross-graph weight.
#[derive(Debug, Clone)]
pub struct CrossCache {
    pub adjacency: WeightedAdjacency,
    /// Unnormalized weight of every entry (self-loops are 1).
    pub raw: Vec<f64>,
    /// `(r, r')` behind each positive non-self entry.
    pub argmax: Vec<Option<(RelationId, RelationId)>>,
    pub row_normalized: bool,
}

/// Cross-graph attention: each edge `(i, j)` weighs
/// `max(0, max_{r in rel(i,j), r' in R'} r . r')`; self-loops weigh 1.
pub fn cross_kg_adjacency(
    pattern: &AdjacencyPattern,
    relations: &Array2<f64>,
    other_relations: &Array2<f64>,
) -> WeightedAdjacency {
    cross_kg_with_cache(pattern, relations, other_relations, false).adjacency
}

pub fn cross_kg_with_cache(
    pattern: &AdjacencyPattern,
    relations: &Array2<f64>,
    other_relations: &Array2<f64>,
    row_normalize: bool,
) -> CrossCache {
    assert_eq!(
        relations.ncols(),
        other_relations.ncols(),
        "relation embedding widths differ"
    );
    // Best counterpart for every relation of this graph.
    let best: Vec<Option<(f64, RelationId)>> = relations
        .rows()
        .into_iter()
        .map(|r| best_counterpart(r, other_relations))
        .collect();

    let mut raw = Vec::with_capacity(pattern.nnz());
    let mut argmax = Vec::with_capacity(pattern.nnz());
    for i in 0..pattern.n() {
        for k in pattern.row_range(i) {
            if pattern.col(k) == i {
                raw.push(1.0);
                argmax.push(None);
                continue;
            }
            let mut top: Option<(f64, RelationId, RelationId)> = None;
            for &r in pattern.relations(k) {
                if let Some((sim, other)) = best[r.index()] {
                    if top.is_none_or(|(s, _, _)| sim > s) {
                        top = Some((sim, r, other));
                    }
                }
            }
            match top {
                Some((sim, r, other)) if sim > 0.0 => {
                    raw.push(sim);
                    argmax.push(Some((r, other)));
                }
                _ => {
                    raw.push(0.0);
                    argmax.push(None);
                }
            }
        }
    }
    let weights = if row_normalize {
        let mut w = raw.clone();
        for i in 0..pattern.n() {
            let range = pattern.row_range(i);
            let total: f64 = raw[range.clone()].iter().sum();
            for v in &mut w[range] {
                *v /= total;
            }
        }
        w
    } else {
        raw.clone()
    };
    CrossCache {
        adjacency: pattern.with_weights(weights),
        raw,
        argmax,
        row_normalized: row_normalize,
    }
}

/// Highest inner product against `others`; ties keep the lowest id.
fn best_counterpart(r: ArrayView1<'_, f64>, others: &Array2<f64>) -> Option<(f64, RelationId)> {
    let mut best: Option<(f64, RelationId)> = None;
    for (idx, other) in others.rows().into_iter().enumerate() {
        let sim = dot(r, other);
        if best.is_none_or(|(s, _)| sim > s) {
            best = Some((sim, RelationId(idx as u32)));
        }
    }
    best
}
