//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here calls the code under test beyond reading graph contents and
//! parameter tensors; every quantity is recomputed from dense arrays by
//! exhaustive enumeration or straight-line arithmetic.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use kgalign_core::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use kgalign_core::rules::RuleShape;
use kgalign_core::Array2;

/// `facts[r][h][t]` membership for every relation, head and tail.
pub struct DenseKg {
    pub n: usize,
    pub m: usize,
    pub facts: Vec<Vec<Vec<bool>>>,
}

impl DenseKg {
    pub fn new(kg: &KnowledgeGraph) -> Self {
        let (n, m) = (kg.num_entities(), kg.num_relations());
        let mut facts = vec![vec![vec![false; n]; n]; m];
        for t in kg.triples() {
            facts[t.relation.index()][t.head.index()][t.tail.index()] = true;
        }
        Self { n, m, facts }
    }

    pub fn has(&self, r: usize, h: usize, t: usize) -> bool {
        self.facts[r][h][t]
    }

    /// Does `x` have any fact of relation `c`?
    pub fn has_subject(&self, c: usize, x: usize) -> bool {
        self.facts[c][x].iter().any(|&b| b)
    }

    /// Premise truth for one shape under the binding `(x, y, z)`.
    pub fn premises_hold(
        &self,
        shape: RuleShape,
        a: usize,
        b: usize,
        x: usize,
        y: usize,
        z: usize,
    ) -> bool {
        match shape {
            RuleShape::Single => self.has(a, x, y),
            RuleShape::SingleInverse => self.has(a, y, x),
            RuleShape::ChainFF => self.has(a, x, z) && self.has(b, z, y),
            RuleShape::ChainFB => self.has(a, x, z) && self.has(b, y, z),
            RuleShape::ChainBF => self.has(a, z, x) && self.has(b, z, y),
            RuleShape::ChainBB => self.has(a, z, x) && self.has(b, y, z),
        }
    }

    /// Premise triples in `(a, b)` order under `(x, y, z)`.
    pub fn premise_triples(
        shape: RuleShape,
        a: usize,
        b: usize,
        x: usize,
        y: usize,
        z: usize,
    ) -> Vec<Triple> {
        let t = |h: usize, r: usize, tl: usize| Triple::from_raw(h as u32, r as u32, tl as u32);
        match shape {
            RuleShape::Single => vec![t(x, a, y)],
            RuleShape::SingleInverse => vec![t(y, a, x)],
            RuleShape::ChainFF => vec![t(x, a, z), t(z, b, y)],
            RuleShape::ChainFB => vec![t(x, a, z), t(y, b, z)],
            RuleShape::ChainBF => vec![t(z, a, x), t(z, b, y)],
            RuleShape::ChainBB => vec![t(z, a, x), t(y, b, z)],
        }
    }
}

/// `(shape, conclusion, first premise, second premise)`; the second is 0 for one-premise shapes.
pub type RuleKey = (RuleShape, usize, usize, usize);

/// Support and PCA body count of one candidate rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleCounts {
    pub support: usize,
    pub pca_body: usize,
}

/// Every candidate rule that the premises bind at least once, with exact counts.
///
/// Excludes `c(x, y) <- c(x, y)`.
pub fn brute_force_rule_counts(kg: &KnowledgeGraph) -> BTreeMap<RuleKey, RuleCounts> {
    let dense = DenseKg::new(kg);
    let (n, m) = (dense.n, dense.m);
    let mut out = BTreeMap::new();
    for shape in RuleShape::ALL {
        let second_range = if shape.premise_count() == 1 {
            0..1
        } else {
            0..m
        };
        for a in 0..m {
            for b in second_range.clone() {
                // body[x][y]: premises hold for some z
                let mut body = vec![vec![false; n]; n];
                for x in 0..n {
                    for y in 0..n {
                        let zs = if shape.premise_count() == 1 {
                            0..1
                        } else {
                            0..n
                        };
                        body[x][y] = zs
                            .into_iter()
                            .any(|z| dense.premises_hold(shape, a, b, x, y, z));
                    }
                }
                for c in 0..m {
                    if shape == RuleShape::Single && a == c {
                        continue;
                    }
                    let mut counts = RuleCounts {
                        support: 0,
                        pca_body: 0,
                    };
                    for x in 0..n {
                        let subject = dense.has_subject(c, x);
                        for y in 0..n {
                            if !body[x][y] {
                                continue;
                            }
                            if dense.has(c, x, y) {
                                counts.support += 1;
                            }
                            if subject {
                                counts.pca_body += 1;
                            }
                        }
                    }
                    if counts.support > 0 {
                        out.insert((shape, c, a, b), counts);
                    }
                }
            }
        }
    }
    out
}

/// Groundings of one rule as `(premise set, conclusion)`, by enumerating every `(x, y, z)`.
pub fn brute_force_groundings(
    kg: &KnowledgeGraph,
    shape: RuleShape,
    c: usize,
    a: usize,
    b: usize,
) -> BTreeSet<(BTreeSet<Triple>, Triple)> {
    let dense = DenseKg::new(kg);
    let n = dense.n;
    let mut out = BTreeSet::new();
    for x in 0..n {
        for y in 0..n {
            if dense.has(c, x, y) {
                continue;
            }
            let zs = if shape.premise_count() == 1 {
                0..1
            } else {
                0..n
            };
            for z in zs {
                if dense.premises_hold(shape, a, b, x, y, z) {
                    let premises = DenseKg::premise_triples(shape, a, b, x, y, z)
                        .into_iter()
                        .collect();
                    out.insert((premises, Triple::from_raw(x as u32, c as u32, y as u32)));
                }
            }
        }
    }
    out
}

/// Out-neighbour sets with self included, as dense indicator rows.
pub fn dense_neighbourhood(kg: &KnowledgeGraph) -> Vec<Vec<bool>> {
    let n = kg.num_entities();
    let mut mask = vec![vec![false; n]; n];
    for i in 0..n {
        mask[i][i] = true;
    }
    for t in kg.triples() {
        mask[t.head.index()][t.tail.index()] = true;
    }
    mask
}

/// Dense self-attention weights straight from the definitions.
pub fn dense_self_attention(
    kg: &KnowledgeGraph,
    h: &Array2<f64>,
    w: &Array2<f64>,
    p: &Array2<f64>,
    slope: f64,
) -> Vec<Vec<f64>> {
    let n = kg.num_entities();
    let d = h.ncols();
    let mask = dense_neighbourhood(kg);
    let z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..d)
                .map(|r| (0..d).map(|c| w[[r, c]] * h[[i, c]]).sum())
                .collect()
        })
        .collect();
    let dotp = |row: usize, v: &[f64]| -> f64 { (0..d).map(|k| p[[row, k]] * v[k]).sum() };
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        let logits: Vec<Option<f64>> = (0..n)
            .map(|j| {
                mask[i][j].then(|| {
                    let s = dotp(0, &z[i]) + dotp(1, &z[j]);
                    if s >= 0.0 {
                        s
                    } else {
                        slope * s
                    }
                })
            })
            .collect();
        let max = logits
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logits.iter().flatten().map(|&c| (c - max).exp()).sum();
        for j in 0..n {
            if let Some(c) = logits[j] {
                out[i][j] = (c - max).exp() / total;
            }
        }
    }
    out
}

/// Dense cross-graph weights: max over connecting relations and all counterpart relations, clamped at 0.
pub fn dense_cross_attention(
    kg: &KnowledgeGraph,
    rel: &Array2<f64>,
    other: &Array2<f64>,
) -> Vec<Vec<f64>> {
    let n = kg.num_entities();
    let d = rel.ncols();
    let mut out = vec![vec![0.0; n]; n];
    for t in kg.triples() {
        let (i, j) = (t.head.index(), t.tail.index());
        if i == j {
            continue;
        }
        for o in 0..other.nrows() {
            let sim: f64 = (0..d)
                .map(|k| rel[[t.relation.index(), k]] * other[[o, k]])
                .sum();
            out[i][j] = f64::max(out[i][j], sim);
        }
    }
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    out
}

/// One layer weight pair for [`dense_forward`].
pub struct DenseLayer<'a> {
    pub self_attention: &'a Array2<f64>,
    pub cross_kg: &'a Array2<f64>,
}

/// Straight-line encoder: per layer, A1 from the current states, both channels, ReLU, average.
pub fn dense_forward(
    kg: &KnowledgeGraph,
    h0: &Array2<f64>,
    attention_w: &Array2<f64>,
    attention_p: &Array2<f64>,
    slope: f64,
    a2: &[Vec<f64>],
    layers: &[DenseLayer<'_>],
) -> Array2<f64> {
    let n = h0.nrows();
    let d = h0.ncols();
    let mut h = h0.clone();
    for layer in layers {
        let a1 = dense_self_attention(kg, &h, attention_w, attention_p, slope);
        let channel = |a: &[Vec<f64>], w: &Array2<f64>| {
            let mut out = Array2::<f64>::zeros((n, d));
            for i in 0..n {
                for c in 0..d {
                    let mut acc = 0.0;
                    for j in 0..n {
                        if a[i][j] == 0.0 {
                            continue;
                        }
                        for k in 0..d {
                            acc += a[i][j] * h[[j, k]] * w[[k, c]];
                        }
                    }
                    out[[i, c]] = acc.max(0.0);
                }
            }
            out
        };
        let x = channel(&a1, layer.self_attention);
        let y = channel(a2, layer.cross_kg);
        h = (&x + &y) * 0.5;
    }
    h
}

/// `I(s1 ∧ ... ∧ sp ⇒ c) = I(s)·I(c) − I(s) + 1` with `I(s) = Π I(si)`, evaluated left to right.
pub fn implication_oracle(premises: &[f64], conclusion: f64) -> f64 {
    let mut conjunction = 1.0;
    for &p in premises {
        conjunction *= p;
    }
    conjunction * conclusion - conjunction + 1.0
}

/// `1 − ‖h + r − t‖ / (3√d)` clamped to `[0, 1]`.
pub fn triple_truth_oracle(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let d = h.len() as f64;
    let norm = h
        .iter()
        .zip(r)
        .zip(t)
        .map(|((h, r), t)| (h + r - t).powi(2))
        .sum::<f64>()
        .sqrt();
    (1.0 - norm / (3.0 * d.sqrt())).clamp(0.0, 1.0)
}

/// Hits@N and MRR from explicit 1-based ranks.
pub fn ranks_oracle(ranks: &[usize], n: usize) -> (f64, f64) {
    let hits = ranks.iter().filter(|&&r| r <= n).count() as f64 / ranks.len() as f64;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64;
    (hits, mrr)
}

/// A small random graph for oracle comparisons.
pub fn random_small_kg(
    seed: u64,
    entities: usize,
    relations: usize,
    triples: usize,
) -> KnowledgeGraph {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut set = BTreeSet::new();
    let mut attempts = 0;
    while set.len() < triples && attempts < 100 * triples {
        attempts += 1;
        let h = rng.random_range(0..entities as u32);
        let t = rng.random_range(0..entities as u32);
        let r = rng.random_range(0..relations as u32);
        set.insert(Triple::new(EntityId(h), RelationId(r), EntityId(t)));
    }
    KnowledgeGraph::from_ids(entities, relations, set.into_iter().collect())
}
