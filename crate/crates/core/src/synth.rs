//! Synthetic graphs for tests, smoke runs and fixtures.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::kg::{EntityId, KnowledgeGraph, RelationId, SeedAlignments, Triple};

/// A random connected graph with exactly `entities` entities, `relations`
/// relations (each used at least once when `triples >= relations`) and
/// `max(triples, entities - 1)` distinct triples without self-loops.
pub fn random_kg(
    entities: usize,
    relations: usize,
    triples: usize,
    rng: &mut dyn RngCore,
) -> KnowledgeGraph {
    assert!(
        relations > 0 || triples == 0,
        "triples need at least one relation"
    );
    let target = triples.max(entities.saturating_sub(1));
    assert!(
        entities >= 2 || target == 0,
        "a single entity cannot carry loop-free triples"
    );
    let mut set: BTreeSet<Triple> = BTreeSet::new();
    let mut next_relation = 0u32;
    let mut pick_relation = |rng: &mut dyn RngCore| {
        if (next_relation as usize) < relations {
            next_relation += 1;
            RelationId(next_relation - 1)
        } else {
            RelationId(rng.random_range(0..relations as u32))
        }
    };
    // random spanning tree keeps every entity reachable
    for child in 1..entities as u32 {
        let parent = rng.random_range(0..child);
        let r = pick_relation(rng);
        let t = if rng.random_bool(0.5) {
            Triple::from_raw(parent, r.0, child)
        } else {
            Triple::from_raw(child, r.0, parent)
        };
        set.insert(t);
    }
    while set.len() < target {
        let h = rng.random_range(0..entities as u32);
        let t = rng.random_range(0..entities as u32);
        if h == t {
            continue;
        }
        let r = pick_relation(rng);
        set.insert(Triple::from_raw(h, r.0, t));
    }
    KnowledgeGraph::from_ids(entities, relations, set.into_iter().collect())
}

/// Two graphs that are identical up to a renaming of entities and relations.
#[derive(Debug, Clone)]
pub struct IsomorphicPair {
    pub left: KnowledgeGraph,
    pub right: KnowledgeGraph,
    /// Every entity and relation correspondence.
    pub seeds: SeedAlignments,
}

/// A random graph and a randomly relabelled copy of it.
pub fn isomorphic_pair(
    entities: usize,
    triples: usize,
    relations: usize,
    rng: &mut dyn RngCore,
) -> IsomorphicPair {
    let left = random_kg(entities, relations, triples, rng);
    let mut entity_map: Vec<u32> = (0..entities as u32).collect();
    entity_map.shuffle(rng);
    let mut relation_map: Vec<u32> = (0..relations as u32).collect();
    relation_map.shuffle(rng);
    let right_triples = left
        .triples()
        .iter()
        .map(|t| {
            Triple::from_raw(
                entity_map[t.head.index()],
                relation_map[t.relation.index()],
                entity_map[t.tail.index()],
            )
        })
        .collect();
    let right = KnowledgeGraph::from_ids(entities, relations, right_triples);
    let seeds = SeedAlignments::new(
        (0..entities)
            .map(|e| (EntityId(e as u32), EntityId(entity_map[e])))
            .collect(),
        (0..relations)
            .map(|r| (RelationId(r as u32), RelationId(relation_map[r])))
            .collect(),
    )
    .expect("permutations are one-to-one");
    IsomorphicPair { left, right, seeds }
}

/// `kg` with each triple removed independently with probability `fraction`.
pub fn drop_triples(kg: &KnowledgeGraph, fraction: f64, rng: &mut dyn RngCore) -> KnowledgeGraph {
    let kept = kg
        .triples()
        .iter()
        .copied()
        .filter(|_| !rng.random_bool(fraction))
        .collect();
    KnowledgeGraph::from_ids(kg.num_entities(), kg.num_relations(), kept)
}

/// A graph planting `r2(x, y) <- r1(x, y)`: ten pairs carry both relations,
/// `premise_only` more carry only `r1`, and the first `pca_noise` of those
/// subjects get an `r2` fact to a fresh object.
///
/// Relation `r1` has id 0 and `r2` id 1.
pub fn planted_rule_kg(premise_only: usize, pca_noise: usize) -> KnowledgeGraph {
    assert!(
        pca_noise <= premise_only,
        "noise goes on premise-only subjects"
    );
    let pairs = (10 + premise_only) as u32;
    let mut triples = Vec::new();
    for i in 0..pairs {
        triples.push(Triple::from_raw(2 * i, 0, 2 * i + 1));
        if i < 10 {
            triples.push(Triple::from_raw(2 * i, 1, 2 * i + 1));
        }
    }
    for k in 0..pca_noise as u32 {
        triples.push(Triple::from_raw(2 * (10 + k), 1, 2 * pairs + k));
    }
    KnowledgeGraph::from_ids(2 * pairs as usize + pca_noise, 2, triples)
}
