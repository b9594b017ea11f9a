//! Knowledge graph data model, seed alignments and seed splitting.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Dense 0-based entity id, local to one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EntityId(pub u32);

/// Dense 0-based relation id, local to one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A directed fact `head --relation--> tail`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub const fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }

    /// Shorthand for tests and generators working with raw ids.
    pub const fn from_raw(head: u32, relation: u32, tail: u32) -> Self {
        Self::new(EntityId(head), RelationId(relation), EntityId(tail))
    }
}

/// Bidirectional label <-> dense id table. Ids are handed out in first-seen order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Interner {
    labels: Vec<String>,
    ids: BTreeMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.ids.insert(label.to_string(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels equal to the decimal id, for graphs built from raw ids.
    fn numeric(count: usize) -> Self {
        let mut table = Self::default();
        for i in 0..count {
            table.intern(&format!("{i}"));
        }
        table
    }
}

/// Accumulates labelled triples and freezes them into a [`KnowledgeGraph`].
#[derive(Debug, Default)]
pub struct KgBuilder {
    entities: Interner,
    relations: Interner,
    triples: Vec<Triple>,
}

impl KgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, head: &str, relation: &str, tail: &str) -> Triple {
        // Interning order is head, relation, tail within each line.
        let h = self.entities.intern(head);
        let r = self.relations.intern(relation);
        let t = self.entities.intern(tail);
        let triple = Triple::from_raw(h, r, t);
        self.triples.push(triple);
        triple
    }

    pub fn build(self) -> KnowledgeGraph {
        KnowledgeGraph::assemble(self.entities, self.relations, self.triples)
    }
}

/// Immutable directed multi-relational graph `G = (E, R, T)`.
///
/// Triples are kept sorted and deduplicated. Three sorted views back the
/// lookups used by rule mining and grounding: `(head, relation, tail)`,
/// `(tail, relation, head)` and `(head, tail, relation)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    entities: Interner,
    relations: Interner,
    /// Sorted by (head, relation, tail).
    triples: Vec<Triple>,
    head_offsets: Vec<usize>,
    /// (tail, relation, head), sorted.
    by_tail: Vec<Triple>,
    tail_offsets: Vec<usize>,
    /// (head, tail, relation), sorted.
    by_pair: Vec<Triple>,
    relation_facts: Vec<Vec<(EntityId, EntityId)>>,
}

impl KnowledgeGraph {
    /// Graph over raw ids `0..num_entities` and `0..num_relations`; labels are the decimal ids.
    pub fn from_ids(num_entities: usize, num_relations: usize, triples: Vec<Triple>) -> Self {
        for t in &triples {
            assert!(
                t.head.index() < num_entities
                    && t.tail.index() < num_entities
                    && t.relation.index() < num_relations,
                "triple {t:?} out of range"
            );
        }
        Self::assemble(
            Interner::numeric(num_entities),
            Interner::numeric(num_relations),
            triples,
        )
    }

    fn assemble(entities: Interner, relations: Interner, mut triples: Vec<Triple>) -> Self {
        triples.sort_unstable();
        triples.dedup();
        let n = entities.len();

        let head_offsets = offsets(n, triples.iter().map(|t| t.head.index()));

        let mut by_tail: Vec<Triple> = triples
            .iter()
            .map(|t| Triple::new(t.tail, t.relation, t.head))
            .collect();
        by_tail.sort_unstable();
        let tail_offsets = offsets(n, by_tail.iter().map(|t| t.head.index()));

        let mut by_pair: Vec<Triple> = triples.clone();
        by_pair.sort_unstable_by_key(|t| (t.head, t.tail, t.relation));

        let mut relation_facts = alloc::vec![Vec::new(); relations.len()];
        for t in &triples {
            relation_facts[t.relation.index()].push((t.head, t.tail));
        }
        for facts in &mut relation_facts {
            facts.sort_unstable();
        }

        Self {
            entities,
            relations,
            triples,
            head_offsets,
            by_tail,
            tail_offsets,
            by_pair,
            relation_facts,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    /// All triples in (head, relation, tail) order.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.binary_search(triple).is_ok()
    }

    /// Outgoing triples of `head`, sorted by (relation, tail).
    pub fn outgoing(&self, head: EntityId) -> &[Triple] {
        let h = head.index();
        &self.triples[self.head_offsets[h]..self.head_offsets[h + 1]]
    }

    /// Incoming facts of `tail` as reversed triples `(tail, relation, head)`, sorted by (relation, head).
    pub fn incoming(&self, tail: EntityId) -> &[Triple] {
        let t = tail.index();
        &self.by_tail[self.tail_offsets[t]..self.tail_offsets[t + 1]]
    }

    /// Tails `t` with `(head, relation, t)` in the graph, ascending.
    pub fn tails(
        &self,
        head: EntityId,
        relation: RelationId,
    ) -> impl Iterator<Item = EntityId> + '_ {
        let out = self.outgoing(head);
        out[relation_range(out, relation)].iter().map(|t| t.tail)
    }

    /// Heads `h` with `(h, relation, tail)` in the graph, ascending.
    pub fn heads(
        &self,
        tail: EntityId,
        relation: RelationId,
    ) -> impl Iterator<Item = EntityId> + '_ {
        let inc = self.incoming(tail);
        inc[relation_range(inc, relation)].iter().map(|t| t.tail)
    }

    /// Relations linking `head` to `tail`, ascending.
    pub fn relations_between(
        &self,
        head: EntityId,
        tail: EntityId,
    ) -> impl Iterator<Item = RelationId> + '_ {
        let lo = self
            .by_pair
            .partition_point(|t| (t.head, t.tail) < (head, tail));
        let hi = self
            .by_pair
            .partition_point(|t| (t.head, t.tail) <= (head, tail));
        self.by_pair[lo..hi].iter().map(|t| t.relation)
    }

    /// Distinct relations of facts whose head is `head`, ascending.
    pub fn out_relations(&self, head: EntityId) -> Vec<RelationId> {
        let mut rels: Vec<RelationId> = self.outgoing(head).iter().map(|t| t.relation).collect();
        rels.dedup();
        rels
    }

    /// `(head, tail)` pairs of `relation`, sorted.
    pub fn facts(&self, relation: RelationId) -> &[(EntityId, EntityId)] {
        &self.relation_facts[relation.index()]
    }

    pub fn entity_id(&self, label: &str) -> Option<EntityId> {
        self.entities.get(label).map(EntityId)
    }

    pub fn relation_id(&self, label: &str) -> Option<RelationId> {
        self.relations.get(label).map(RelationId)
    }

    pub fn entity_label(&self, id: EntityId) -> &str {
        self.entities.label(id.0)
    }

    pub fn relation_label(&self, id: RelationId) -> &str {
        self.relations.label(id.0)
    }

    /// Same id space, triple set extended with `extra`.
    pub fn with_triples(&self, extra: impl IntoIterator<Item = Triple>) -> Self {
        let mut triples = self.triples.clone();
        triples.extend(extra);
        Self::assemble(self.entities.clone(), self.relations.clone(), triples)
    }
}

fn offsets(n: usize, keys: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut counts = alloc::vec![0usize; n + 1];
    for k in keys {
        counts[k + 1] += 1;
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    counts
}

fn relation_range(slice: &[Triple], relation: RelationId) -> Range<usize> {
    let lo = slice.partition_point(|t| t.relation < relation);
    let hi = slice.partition_point(|t| t.relation <= relation);
    lo..hi
}

/// Which graph plays the source role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Left graph to right graph.
    Forward,
    /// Right graph to left graph.
    Backward,
}

/// Prior entity and relation correspondences between a left and a right graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedAlignments {
    pub entity_pairs: Vec<(EntityId, EntityId)>,
    pub relation_pairs: Vec<(RelationId, RelationId)>,
}

impl SeedAlignments {
    /// Deduplicates pairs and checks that relation pairs are one-to-one in both directions.
    ///
    /// Entity pairs may be many-to-many.
    pub fn new(
        mut entity_pairs: Vec<(EntityId, EntityId)>,
        mut relation_pairs: Vec<(RelationId, RelationId)>,
    ) -> Result<Self> {
        entity_pairs.sort_unstable();
        entity_pairs.dedup();
        relation_pairs.sort_unstable();
        relation_pairs.dedup();
        if let Some(c) = find_conflict(&relation_pairs) {
            return Err(Error::ConflictingRelationPair {
                relation: format!("{}", c.relation),
                first: format!("{}", c.first),
                second: format!("{}", c.second),
            });
        }
        Ok(Self {
            entity_pairs,
            relation_pairs,
        })
    }

    /// Resolves label pairs against the two graphs.
    pub fn from_labels<'a>(
        entity_pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
        relation_pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
        left: &KnowledgeGraph,
        right: &KnowledgeGraph,
    ) -> Result<Self> {
        let resolve_entity = |kg: &KnowledgeGraph, label: &str| {
            kg.entity_id(label)
                .ok_or_else(|| Error::UnknownEntity(label.to_string()))
        };
        let resolve_relation = |kg: &KnowledgeGraph, label: &str| {
            kg.relation_id(label)
                .ok_or_else(|| Error::UnknownRelation(label.to_string()))
        };
        let entities = entity_pairs
            .into_iter()
            .map(|(l, r)| Ok((resolve_entity(left, l)?, resolve_entity(right, r)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut relations = relation_pairs
            .into_iter()
            .map(|(l, r)| Ok((resolve_relation(left, l)?, resolve_relation(right, r)?)))
            .collect::<Result<Vec<_>>>()?;
        relations.sort_unstable();
        relations.dedup();
        if let Some(c) = find_conflict(&relations) {
            let (own, other) = match c.direction {
                Direction::Forward => (left, right),
                Direction::Backward => (right, left),
            };
            return Err(Error::ConflictingRelationPair {
                relation: own.relation_label(c.relation).to_string(),
                first: other.relation_label(c.first).to_string(),
                second: other.relation_label(c.second).to_string(),
            });
        }
        Self::new(entities, relations)
    }

    /// One-to-one relation mapping in the given direction.
    pub fn relation_map(&self, direction: Direction) -> BTreeMap<RelationId, RelationId> {
        self.relation_pairs
            .iter()
            .map(|&(l, r)| match direction {
                Direction::Forward => (l, r),
                Direction::Backward => (r, l),
            })
            .collect()
    }
}

struct Conflict {
    /// Side that owns `relation`.
    direction: Direction,
    relation: RelationId,
    first: RelationId,
    second: RelationId,
}

fn find_conflict(pairs: &[(RelationId, RelationId)]) -> Option<Conflict> {
    let mut forward: BTreeMap<RelationId, RelationId> = BTreeMap::new();
    let mut backward: BTreeMap<RelationId, RelationId> = BTreeMap::new();
    for &(l, r) in pairs {
        if let Some(prev) = forward.insert(l, r) {
            return Some(Conflict {
                direction: Direction::Forward,
                relation: l,
                first: prev,
                second: r,
            });
        }
        if let Some(prev) = backward.insert(r, l) {
            return Some(Conflict {
                direction: Direction::Backward,
                relation: r,
                first: prev,
                second: l,
            });
        }
    }
    None
}

/// Number of training pairs for a split, rounding half up.
pub fn train_size(total: usize, train_fraction: f64) -> usize {
    let raw = libm::floor(train_fraction * total as f64 + 0.5) as usize;
    raw.min(total)
}

/// Aligned `(left, right)` entity pairs.
pub type EntityPairs = Vec<(EntityId, EntityId)>;

/// Shuffles the pairs with a seeded generator and cuts off `round(fraction * len)` for training.
///
/// Both halves come back sorted.
pub fn split_entity_seeds(
    pairs: &[(EntityId, EntityId)],
    train_fraction: f64,
    seed: u64,
) -> (EntityPairs, EntityPairs) {
    assert!(
        (0.0..=1.0).contains(&train_fraction),
        "train fraction {train_fraction} outside [0, 1]"
    );
    let mut shuffled = pairs.to_vec();
    shuffled.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let n_train = train_size(shuffled.len(), train_fraction);
    let mut test = shuffled.split_off(n_train);
    let mut train = shuffled;
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy() -> KnowledgeGraph {
        let mut b = KgBuilder::new();
        b.add("a", "p", "b");
        b.add("b", "q", "c");
        b.add("a", "p", "b");
        b.build()
    }

    #[test]
    fn duplicates_collapse() {
        let kg = toy();
        assert_eq!(kg.num_entities(), 3);
        assert_eq!(kg.num_relations(), 2);
        assert_eq!(kg.num_triples(), 2);
    }

    #[test]
    fn first_seen_interning() {
        let kg = toy();
        assert_eq!(kg.entity_id("a"), Some(EntityId(0)));
        assert_eq!(kg.entity_id("b"), Some(EntityId(1)));
        assert_eq!(kg.entity_id("c"), Some(EntityId(2)));
        assert_eq!(kg.relation_id("q"), Some(RelationId(1)));
        assert_eq!(kg.entity_label(EntityId(2)), "c");
    }

    #[test]
    fn empty_graph() {
        let kg = KgBuilder::new().build();
        assert_eq!(kg.num_entities(), 0);
        assert_eq!(kg.num_triples(), 0);
    }

    #[test]
    fn lookups() {
        let kg = KnowledgeGraph::from_ids(
            4,
            3,
            vec![
                Triple::from_raw(0, 1, 2),
                Triple::from_raw(0, 0, 2),
                Triple::from_raw(0, 1, 3),
                Triple::from_raw(3, 2, 2),
            ],
        );
        let tails: Vec<_> = kg.tails(EntityId(0), RelationId(1)).collect();
        assert_eq!(tails, vec![EntityId(2), EntityId(3)]);
        let heads: Vec<_> = kg.heads(EntityId(2), RelationId(1)).collect();
        assert_eq!(heads, vec![EntityId(0)]);
        let rels: Vec<_> = kg.relations_between(EntityId(0), EntityId(2)).collect();
        assert_eq!(rels, vec![RelationId(0), RelationId(1)]);
        assert_eq!(
            kg.out_relations(EntityId(0)),
            vec![RelationId(0), RelationId(1)]
        );
        assert!(kg.out_relations(EntityId(1)).is_empty());
        assert!(kg.contains(&Triple::from_raw(3, 2, 2)));
        assert!(!kg.contains(&Triple::from_raw(2, 2, 3)));
        assert_eq!(kg.incoming(EntityId(2)).len(), 3);
    }

    #[test]
    fn conflicting_relation_pair_rejected() {
        let err = SeedAlignments::new(
            vec![],
            vec![
                (RelationId(0), RelationId(1)),
                (RelationId(0), RelationId(2)),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConflictingRelationPair { .. }));

        let err = SeedAlignments::new(
            vec![],
            vec![
                (RelationId(0), RelationId(1)),
                (RelationId(3), RelationId(1)),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConflictingRelationPair { .. }));
    }

    #[test]
    fn repeated_relation_pair_is_not_a_conflict() {
        let seeds = SeedAlignments::new(
            vec![(EntityId(0), EntityId(0)), (EntityId(0), EntityId(0))],
            vec![
                (RelationId(0), RelationId(1)),
                (RelationId(0), RelationId(1)),
            ],
        )
        .unwrap();
        assert_eq!(seeds.entity_pairs.len(), 1);
        assert_eq!(seeds.relation_pairs.len(), 1);
    }

    #[test]
    fn labels_resolve_and_unknowns_are_named() {
        let left = toy();
        let right = toy();
        let seeds = SeedAlignments::from_labels([("a", "b")], [("p", "q")], &left, &right).unwrap();
        assert_eq!(seeds.entity_pairs, vec![(EntityId(0), EntityId(1))]);
        assert_eq!(seeds.relation_pairs, vec![(RelationId(0), RelationId(1))]);

        let err = SeedAlignments::from_labels([("a", "zz")], [], &left, &right).unwrap_err();
        assert_eq!(err, Error::UnknownEntity("zz".into()));

        let err =
            SeedAlignments::from_labels([], [("p", "q"), ("p", "p")], &left, &right).unwrap_err();
        assert_eq!(
            err,
            Error::ConflictingRelationPair {
                relation: "p".into(),
                first: "p".into(),
                second: "q".into()
            }
        );
    }

    #[test]
    fn split_sizes() {
        let pairs: Vec<_> = (0..15_000).map(|i| (EntityId(i), EntityId(i))).collect();
        let (train, test) = split_entity_seeds(&pairs, 0.3, 1);
        assert_eq!(train.len(), 4_500);
        assert_eq!(test.len(), 10_500);

        let (train, test) = split_entity_seeds(&pairs[..10], 0.0, 1);
        assert!(train.is_empty());
        assert_eq!(test.len(), 10);

        // round half up
        assert_eq!(train_size(5, 0.5), 3);
        assert_eq!(train_size(5, 1.0), 5);
    }

    #[test]
    fn split_is_deterministic() {
        let pairs: Vec<_> = (0..100).map(|i| (EntityId(i), EntityId(99 - i))).collect();
        assert_eq!(
            split_entity_seeds(&pairs, 0.3, 7),
            split_entity_seeds(&pairs, 0.3, 7)
        );
        assert_ne!(
            split_entity_seeds(&pairs, 0.3, 7).0,
            split_entity_seeds(&pairs, 0.3, 8).0
        );
    }
}
