//! Training objectives: margin alignment loss with nearest-neighbour
//! negatives, fuzzy truth values of triples and groundings, and the
//! rule-constraint loss.
//!
//! Loss functions take optional gradient buffers and an optional kink
//! recorder. The recorder receives one code per non-smooth decision (hinge
//! active or not, clamp regime), so callers can tell whether two parameter
//! settings share a smooth piece.

use alloc::vec::Vec;

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, RngCore};

use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::linalg::norm;
use crate::rules::RuleGrounding;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginParams {
    /// Entity alignment margin.
    pub entity: f64,
    /// Relation alignment margin.
    pub relation: f64,
    /// Rule-constraint margin.
    pub rule: f64,
}

impl Default for MarginParams {
    fn default() -> Self {
        Self {
            entity: 1.0,
            relation: 1.0,
            rule: 0.12,
        }
    }
}

/// For every anchor, the `k` other rows with the highest cosine similarity.
///
/// Ties go to the lower id. Zero rows have similarity 0 to everything. With
/// fewer than `k + 1` rows, all other rows are returned.
pub fn sample_entity_negatives(
    embeds: &Array2<f64>,
    anchors: &[usize],
    k: usize,
) -> Vec<Vec<usize>> {
    assert!(k >= 1, "need at least one negative");
    let unit = normalized_rows(embeds);
    anchors
        .iter()
        .map(|&anchor| {
            let sims: Array1<f64> = unit.dot(&unit.row(anchor));
            let mut ranked: Vec<(f64, usize)> = sims
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != anchor)
                .map(|(j, &s)| (s, j))
                .collect();
            let by_rank =
                |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            if ranked.len() > k {
                ranked.select_nth_unstable_by(k - 1, by_rank);
                ranked.truncate(k);
            }
            ranked.sort_unstable_by(by_rank);
            ranked.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

fn normalized_rows(m: &Array2<f64>) -> Array2<f64> {
    let mut unit = m.clone();
    for mut row in unit.rows_mut() {
        let len = norm(row.view());
        if len > 0.0 {
            row /= len;
        }
    }
    unit
}

/// Positive pairs of one alignment term and their corrupted counterparts.
///
/// For pair `p = (a, b)`, `left_negatives[p]` lists replacements of `a` and
/// `right_negatives[p]` replacements of `b`; each yields one negative pair.
#[derive(Debug, Clone, Copy)]
pub struct AlignmentTerm<'a> {
    pub pairs: &'a [(usize, usize)],
    pub left_negatives: &'a [Vec<usize>],
    pub right_negatives: &'a [Vec<usize>],
    pub margin: f64,
}

/// `sum [d(a, b) + margin - d(a-, b-)]_+` with Euclidean `d`.
pub fn alignment_hinge(
    left: &Array2<f64>,
    right: &Array2<f64>,
    term: AlignmentTerm<'_>,
    mut grads: Option<(&mut Array2<f64>, &mut Array2<f64>)>,
    mut kinks: Option<&mut Vec<i32>>,
) -> f64 {
    let mut total = 0.0;
    for (p, &(a, b)) in term.pairs.iter().enumerate() {
        let pos = Difference::new(left.row(a), right.row(b));
        let negatives = term.left_negatives[p]
            .iter()
            .map(|&n| (n, b))
            .chain(term.right_negatives[p].iter().map(|&n| (a, n)));
        for (na, nb) in negatives {
            let neg = Difference::new(left.row(na), right.row(nb));
            let slack = pos.norm + term.margin - neg.norm;
            if let Some(k) = kinks.as_deref_mut() {
                k.push(i32::from(slack > 0.0));
            }
            if slack <= 0.0 {
                continue;
            }
            total += slack;
            if let Some((gl, gr)) = grads.as_mut() {
                pos.accumulate(1.0, a, b, gl, gr);
                neg.accumulate(-1.0, na, nb, gl, gr);
            }
        }
    }
    total
}

/// `u - v` and its norm, for distance gradients.
struct Difference {
    diff: Array1<f64>,
    norm: f64,
}

impl Difference {
    fn new(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> Self {
        let diff = &u - &v;
        let norm = norm(diff.view());
        Self { diff, norm }
    }

    /// Adds `scale * d||u - v|| / du` to row `a` of `gl` and the opposite to row `b` of `gr`.
    fn accumulate(
        &self,
        scale: f64,
        a: usize,
        b: usize,
        gl: &mut Array2<f64>,
        gr: &mut Array2<f64>,
    ) {
        if self.norm == 0.0 {
            return;
        }
        let c = scale / self.norm;
        gl.row_mut(a).scaled_add(c, &self.diff);
        gr.row_mut(b).scaled_add(-c, &self.diff);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AlignLoss {
    pub entity: f64,
    pub relation: f64,
}

impl AlignLoss {
    pub fn total(&self) -> f64 {
        self.entity + self.relation
    }
}

/// Gradient buffers for [`align_loss`]: entity outputs and relation tables of both graphs.
pub struct AlignGrads<'a> {
    pub entities: [&'a mut Array2<f64>; 2],
    pub relations: [&'a mut Array2<f64>; 2],
}

/// Entity alignment over encoder outputs plus relation alignment over relation tables.
pub fn align_loss(
    entities: [&Array2<f64>; 2],
    relations: [&Array2<f64>; 2],
    entity_term: AlignmentTerm<'_>,
    relation_term: AlignmentTerm<'_>,
    grads: Option<AlignGrads<'_>>,
    mut kinks: Option<&mut Vec<i32>>,
) -> AlignLoss {
    let (entity_grads, relation_grads) = match grads {
        Some(AlignGrads {
            entities: [el, er],
            relations: [rl, rr],
        }) => (Some((el, er)), Some((rl, rr))),
        None => (None, None),
    };
    let entity = alignment_hinge(
        entities[0],
        entities[1],
        entity_term,
        entity_grads,
        kinks.as_deref_mut(),
    );
    let relation = alignment_hinge(
        relations[0],
        relations[1],
        relation_term,
        relation_grads,
        kinks,
    );
    AlignLoss { entity, relation }
}

/// `1 - ||h + r - t|| / (3 sqrt(d))`, clamped to `[0, 1]`.
pub fn triple_truth_value(
    head: ArrayView1<'_, f64>,
    relation: ArrayView1<'_, f64>,
    tail: ArrayView1<'_, f64>,
) -> f64 {
    TruthValue::new(head, relation, tail).value
}

/// Truth value of `triple` under entity embeddings `entities` and relation table `relations`.
pub fn truth_of(triple: &Triple, entities: &Array2<f64>, relations: &Array2<f64>) -> f64 {
    triple_truth_value(
        entities.row(triple.head.index()),
        relations.row(triple.relation.index()),
        entities.row(triple.tail.index()),
    )
}

/// Product-conjunction implication: `I(s) I(c) - I(s) + 1` with `I(s)` the product of the premise values.
pub fn implication_value(premises: &[f64], conclusion: f64) -> f64 {
    let body: f64 = premises.iter().product();
    body * conclusion - body + 1.0
}

/// Premise and conclusion triples of a (possibly corrupted) grounding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Implication {
    pub premises: Vec<Triple>,
    pub conclusion: Triple,
}

impl From<&RuleGrounding> for Implication {
    fn from(g: &RuleGrounding) -> Self {
        Self {
            premises: g.premises.clone(),
            conclusion: g.conclusion,
        }
    }
}

impl Implication {
    /// Number of triples, premises first then conclusion.
    pub fn len(&self) -> usize {
        self.premises.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn triple(&self, slot: usize) -> Triple {
        self.premises.get(slot).copied().unwrap_or(self.conclusion)
    }

    fn triple_mut(&mut self, slot: usize) -> &mut Triple {
        if slot < self.premises.len() {
            &mut self.premises[slot]
        } else {
            &mut self.conclusion
        }
    }
}

pub fn grounding_truth_value(
    g: &Implication,
    entities: &Array2<f64>,
    relations: &Array2<f64>,
) -> f64 {
    let premises: Vec<f64> = g
        .premises
        .iter()
        .map(|t| truth_of(t, entities, relations))
        .collect();
    implication_value(&premises, truth_of(&g.conclusion, entities, relations))
}

/// Truth value of one triple with what its gradient needs.
struct TruthValue {
    residual: Array1<f64>,
    norm: f64,
    scale: f64,
    value: f64,
}

impl TruthValue {
    fn new(
        head: ArrayView1<'_, f64>,
        relation: ArrayView1<'_, f64>,
        tail: ArrayView1<'_, f64>,
    ) -> Self {
        let residual = &head + &relation - tail;
        let norm = norm(residual.view());
        let scale = 3.0 * libm::sqrt(head.len() as f64);
        let value = (1.0 - norm / scale).clamp(0.0, 1.0);
        Self {
            residual,
            norm,
            scale,
            value,
        }
    }

    fn of(t: &Triple, entities: &Array2<f64>, relations: &Array2<f64>) -> Self {
        Self::new(
            entities.row(t.head.index()),
            relations.row(t.relation.index()),
            entities.row(t.tail.index()),
        )
    }

    /// 0 below the clamp, 1 inside, 2 at the top.
    fn regime(&self) -> i32 {
        if self.norm >= self.scale {
            0
        } else if self.norm > 0.0 {
            1
        } else {
            2
        }
    }

    /// Adds `weight * dI/dtheta`.
    fn accumulate(&self, t: &Triple, weight: f64, ge: &mut Array2<f64>, gr: &mut Array2<f64>) {
        if self.regime() != 1 || weight == 0.0 {
            return;
        }
        let c = -weight / (self.norm * self.scale);
        ge.row_mut(t.head.index()).scaled_add(c, &self.residual);
        gr.row_mut(t.relation.index()).scaled_add(c, &self.residual);
        ge.row_mut(t.tail.index()).scaled_add(-c, &self.residual);
    }
}

/// Truth value of an implication plus the pieces of its gradient.
struct ImplicationValue {
    premises: Vec<TruthValue>,
    conclusion: TruthValue,
    value: f64,
}

impl ImplicationValue {
    fn of(g: &Implication, entities: &Array2<f64>, relations: &Array2<f64>) -> Self {
        let premises: Vec<TruthValue> = g
            .premises
            .iter()
            .map(|t| TruthValue::of(t, entities, relations))
            .collect();
        let conclusion = TruthValue::of(&g.conclusion, entities, relations);
        let values: Vec<f64> = premises.iter().map(|p| p.value).collect();
        let value = implication_value(&values, conclusion.value);
        Self {
            premises,
            conclusion,
            value,
        }
    }

    fn record(&self, kinks: &mut Vec<i32>) {
        kinks.extend(self.premises.iter().map(TruthValue::regime));
        kinks.push(self.conclusion.regime());
    }

    fn accumulate(&self, g: &Implication, weight: f64, ge: &mut Array2<f64>, gr: &mut Array2<f64>) {
        let body: f64 = self.premises.iter().map(|p| p.value).product();
        self.conclusion
            .accumulate(&g.conclusion, weight * body, ge, gr);
        for (i, (p, t)) in self.premises.iter().zip(&g.premises).enumerate() {
            let others: f64 = self
                .premises
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| q.value)
                .product();
            p.accumulate(t, weight * (self.conclusion.value - 1.0) * others, ge, gr);
        }
    }
}

/// Positive triples and groundings of one graph with one corruption each.
#[derive(Debug, Clone, Copy)]
pub struct RuleTerm<'a> {
    pub triples: &'a [Triple],
    pub triple_negatives: &'a [Triple],
    pub groundings: &'a [Implication],
    pub grounding_negatives: &'a [Implication],
}

/// `sum [margin - I(g+) + I(g-)]_+ + sum [margin - I(t+) + I(t-)]_+` for one graph.
pub fn rule_loss(
    term: RuleTerm<'_>,
    entities: &Array2<f64>,
    relations: &Array2<f64>,
    margin: f64,
    mut grads: Option<(&mut Array2<f64>, &mut Array2<f64>)>,
    mut kinks: Option<&mut Vec<i32>>,
) -> f64 {
    assert_eq!(term.triples.len(), term.triple_negatives.len());
    assert_eq!(term.groundings.len(), term.grounding_negatives.len());
    let mut total = 0.0;
    for (pos, neg) in term.groundings.iter().zip(term.grounding_negatives) {
        let p = ImplicationValue::of(pos, entities, relations);
        let n = ImplicationValue::of(neg, entities, relations);
        let slack = margin - p.value + n.value;
        if let Some(k) = kinks.as_deref_mut() {
            k.push(i32::from(slack > 0.0));
            p.record(k);
            n.record(k);
        }
        if slack > 0.0 {
            total += slack;
            if let Some((ge, gr)) = grads.as_mut() {
                p.accumulate(pos, -1.0, ge, gr);
                n.accumulate(neg, 1.0, ge, gr);
            }
        }
    }
    for (pos, neg) in term.triples.iter().zip(term.triple_negatives) {
        let p = TruthValue::of(pos, entities, relations);
        let n = TruthValue::of(neg, entities, relations);
        let slack = margin - p.value + n.value;
        if let Some(k) = kinks.as_deref_mut() {
            k.extend([i32::from(slack > 0.0), p.regime(), n.regime()]);
        }
        if slack > 0.0 {
            total += slack;
            if let Some((ge, gr)) = grads.as_mut() {
                p.accumulate(pos, -1.0, ge, gr);
                n.accumulate(neg, 1.0, ge, gr);
            }
        }
    }
    total
}

/// `L_a + L_r + L'_r`.
pub fn total_loss(align: f64, rule_left: f64, rule_right: f64) -> f64 {
    align + rule_left + rule_right
}

/// Replaces one entity of `t` with a nearest neighbour, preferring corruptions not in `kg`.
fn corrupt(
    t: Triple,
    replace_head: bool,
    neighbours: &[Vec<usize>],
    kg: &KnowledgeGraph,
    rng: &mut dyn RngCore,
) -> Triple {
    let target = if replace_head { t.head } else { t.tail };
    let candidates = &neighbours[target.index()];
    if candidates.is_empty() {
        return t;
    }
    let start = rng.random_range(0..candidates.len());
    let with = |c: usize| {
        let mut out = t;
        if replace_head {
            out.head = EntityId(c as u32);
        } else {
            out.tail = EntityId(c as u32);
        }
        out
    };
    (0..candidates.len())
        .map(|i| with(candidates[(start + i) % candidates.len()]))
        .find(|c| !kg.contains(c))
        .unwrap_or_else(|| with(candidates[start]))
}

/// One corruption per triple, alternating head and tail.
pub fn corrupt_triples(
    triples: &[Triple],
    neighbours: &[Vec<usize>],
    kg: &KnowledgeGraph,
    rng: &mut dyn RngCore,
) -> Vec<Triple> {
    triples
        .iter()
        .enumerate()
        .map(|(i, &t)| corrupt(t, i % 2 == 0, neighbours, kg, rng))
        .collect()
}

/// One corruption per grounding: one entity of one triple, cycling through
/// every triple slot (premises, then conclusion) and both ends.
pub fn corrupt_groundings(
    groundings: &[Implication],
    neighbours: &[Vec<usize>],
    kg: &KnowledgeGraph,
    rng: &mut dyn RngCore,
) -> Vec<Implication> {
    groundings
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let slots = g.len();
            let slot = i % slots;
            let replace_head = (i / slots) % 2 == 0;
            let mut out = g.clone();
            *out.triple_mut(slot) = corrupt(g.triple(slot), replace_head, neighbours, kg, rng);
            out
        })
        .collect()
}
