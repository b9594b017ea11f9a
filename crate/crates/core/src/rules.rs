//! Horn rule mining under the partial completeness assumption, cross-graph
//! rule transfer, grounding and single-pass graph completion.
//!
//! Rules are over the variables `x`, `y`, `z` and always conclude `c(x, y)`.
//! The supported shapes are
//!
//! | tag        | premises                 |
//! |------------|--------------------------|
//! | `p1`       | `a(x, y)`                |
//! | `p1-inv`   | `a(y, x)`                |
//! | `chain-ff` | `a(x, z) ∧ b(z, y)`      |
//! | `chain-fb` | `a(x, z) ∧ b(y, z)`      |
//! | `chain-bf` | `a(z, x) ∧ b(z, y)`      |
//! | `chain-bb` | `a(z, x) ∧ b(y, z)`      |
//!
//! which is every closed, connected rule with at most two premises whose
//! premises share one variable outside the conclusion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::kg::{Direction, EntityId, KnowledgeGraph, RelationId, SeedAlignments, Triple};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    const ALL: [Var; 3] = [Var::X, Var::Y, Var::Z];

    fn index(self) -> usize {
        self as usize
    }
}

/// `relation(subject, object)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: RelationId,
    pub subject: Var,
    pub object: Var,
}

impl Atom {
    pub const fn new(relation: RelationId, subject: Var, object: Var) -> Self {
        Self {
            relation,
            subject,
            object,
        }
    }

    fn rename(self, map: &[Var; 3]) -> Self {
        Self::new(
            self.relation,
            map[self.subject.index()],
            map[self.object.index()],
        )
    }

    fn mentions(self, v: Var) -> bool {
        self.subject == v || self.object == v
    }

    fn instantiate(self, binding: &[Option<EntityId>; 3]) -> Option<Triple> {
        Some(Triple::new(
            binding[self.subject.index()]?,
            self.relation,
            binding[self.object.index()]?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleShape {
    Single,
    SingleInverse,
    ChainFF,
    ChainFB,
    ChainBF,
    ChainBB,
}

impl RuleShape {
    pub const ALL: [RuleShape; 6] = [
        RuleShape::Single,
        RuleShape::SingleInverse,
        RuleShape::ChainFF,
        RuleShape::ChainFB,
        RuleShape::ChainBF,
        RuleShape::ChainBB,
    ];

    pub fn premise_count(self) -> usize {
        match self {
            RuleShape::Single | RuleShape::SingleInverse => 1,
            _ => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            RuleShape::Single => "p1",
            RuleShape::SingleInverse => "p1-inv",
            RuleShape::ChainFF => "chain-ff",
            RuleShape::ChainFB => "chain-fb",
            RuleShape::ChainBF => "chain-bf",
            RuleShape::ChainBB => "chain-bb",
        }
    }

    /// Premise atoms with placeholder relations `a`, `b`.
    fn premise_vars(self) -> &'static [(Var, Var)] {
        use Var::*;
        match self {
            RuleShape::Single => &[(X, Y)],
            RuleShape::SingleInverse => &[(Y, X)],
            RuleShape::ChainFF => &[(X, Z), (Z, Y)],
            RuleShape::ChainFB => &[(X, Z), (Y, Z)],
            RuleShape::ChainBF => &[(Z, X), (Z, Y)],
            RuleShape::ChainBB => &[(Z, X), (Y, Z)],
        }
    }

    fn chain(first_forward: bool, second_forward: bool) -> Self {
        match (first_forward, second_forward) {
            (true, true) => RuleShape::ChainFF,
            (true, false) => RuleShape::ChainFB,
            (false, true) => RuleShape::ChainBF,
            (false, false) => RuleShape::ChainBB,
        }
    }
}

impl fmt::Display for RuleShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for RuleShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleShape::ALL
            .into_iter()
            .find(|shape| shape.tag() == s)
            .ok_or_else(|| Error::InvalidRule(format!("unknown rule shape `{s}`")))
    }
}

/// A closed, connected Horn rule with one or two premises, kept in canonical form.
///
/// Canonical form: the variable renaming that makes `(conclusion, sorted
/// premises)` lexicographically smallest, with premises sorted. Two rules are
/// equal exactly when they are equal up to renaming and premise order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HornRule {
    conclusion: Atom,
    premises: Vec<Atom>,
}

impl HornRule {
    pub fn new(premises: Vec<Atom>, conclusion: Atom) -> Result<Self> {
        if premises.is_empty() || premises.len() > 2 {
            return Err(Error::InvalidRule(format!(
                "{} premises, expected 1 or 2",
                premises.len()
            )));
        }
        let atoms = || premises.iter().chain(core::iter::once(&conclusion));
        if atoms().any(|a| a.subject == a.object) {
            return Err(Error::InvalidRule("atom over a single variable".into()));
        }
        for v in Var::ALL {
            let uses = atoms().filter(|a| a.mentions(v)).count();
            if uses == 1 {
                return Err(Error::InvalidRule(format!("variable {v:?} is not closed")));
            }
        }
        if premises.contains(&conclusion) {
            return Err(Error::InvalidRule("conclusion repeats a premise".into()));
        }
        let rule = Self::canonicalize(premises, conclusion);
        // Shape check also rejects disconnected or unsupported premise patterns.
        rule.shape_checked()?;
        Ok(rule)
    }

    /// Builds a rule of the given shape; `premises` are `[a]` or `[a, b]` in table order.
    pub fn from_shape(
        shape: RuleShape,
        conclusion: RelationId,
        premises: &[RelationId],
    ) -> Result<Self> {
        let vars = shape.premise_vars();
        if premises.len() != vars.len() {
            return Err(Error::InvalidRule(format!(
                "shape {shape} takes {} premise relations, got {}",
                vars.len(),
                premises.len()
            )));
        }
        let atoms = premises
            .iter()
            .zip(vars)
            .map(|(&r, &(s, o))| Atom::new(r, s, o))
            .collect();
        Self::new(atoms, Atom::new(conclusion, Var::X, Var::Y))
    }

    fn canonicalize(premises: Vec<Atom>, conclusion: Atom) -> Self {
        const PERMS: [[Var; 3]; 6] = {
            use Var::*;
            [
                [X, Y, Z],
                [X, Z, Y],
                [Y, X, Z],
                [Y, Z, X],
                [Z, X, Y],
                [Z, Y, X],
            ]
        };
        PERMS
            .iter()
            .map(|perm| {
                let mut renamed: Vec<Atom> = premises.iter().map(|a| a.rename(perm)).collect();
                renamed.sort_unstable();
                Self {
                    conclusion: conclusion.rename(perm),
                    premises: renamed,
                }
            })
            .min()
            .expect("six permutations")
    }

    pub fn conclusion(&self) -> Atom {
        self.conclusion
    }

    pub fn premises(&self) -> &[Atom] {
        &self.premises
    }

    pub fn shape(&self) -> RuleShape {
        self.shape_checked().expect("validated at construction")
    }

    /// Premise relations in the order of the shape table (`a`, then `b`).
    pub fn premise_relations(&self) -> Vec<RelationId> {
        match self.shape() {
            RuleShape::Single | RuleShape::SingleInverse => alloc::vec![self.premises[0].relation],
            _ => {
                let first = self.premises.iter().find(|a| a.mentions(Var::X)).unwrap();
                let second = self.premises.iter().find(|a| a.mentions(Var::Y)).unwrap();
                alloc::vec![first.relation, second.relation]
            }
        }
    }

    /// Every relation in the rule, conclusion first.
    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        core::iter::once(self.conclusion.relation).chain(self.premises.iter().map(|a| a.relation))
    }

    fn shape_checked(&self) -> Result<RuleShape> {
        use Var::*;
        let c = self.conclusion;
        if (c.subject, c.object) != (X, Y) {
            return Err(Error::InvalidRule(
                "conclusion must link both premise ends".into(),
            ));
        }
        match self.premises.as_slice() {
            [p] => match (p.subject, p.object) {
                (X, Y) => Ok(RuleShape::Single),
                (Y, X) => Ok(RuleShape::SingleInverse),
                _ => Err(Error::InvalidRule("single premise must use x and y".into())),
            },
            [p, q] => {
                let with_x: Vec<&Atom> = [p, q].into_iter().filter(|a| a.mentions(X)).collect();
                let with_y: Vec<&Atom> = [p, q].into_iter().filter(|a| a.mentions(Y)).collect();
                match (with_x.as_slice(), with_y.as_slice()) {
                    ([a], [b]) if a.mentions(Z) && b.mentions(Z) => {
                        Ok(RuleShape::chain(a.subject == X, b.subject == Z))
                    }
                    _ => Err(Error::InvalidRule(
                        "premises must form an x-z-y chain".into(),
                    )),
                }
            }
            _ => unreachable!("premise count validated"),
        }
    }

    /// Replaces every relation through `map`; `None` when some relation has no counterpart.
    pub fn substitute(&self, map: &BTreeMap<RelationId, RelationId>) -> Option<Self> {
        let sub = |a: &Atom| {
            map.get(&a.relation)
                .map(|&r| Atom::new(r, a.subject, a.object))
        };
        let premises = self.premises.iter().map(sub).collect::<Option<Vec<_>>>()?;
        let conclusion = sub(&self.conclusion)?;
        Self::new(premises, conclusion).ok()
    }
}

impl fmt::Display for HornRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atom = |a: &Atom| {
            let v = |v: Var| match v {
                Var::X => 'x',
                Var::Y => 'y',
                Var::Z => 'z',
            };
            format!("{}({},{})", a.relation, v(a.subject), v(a.object))
        };
        let body: Vec<String> = self.premises.iter().map(atom).collect();
        write!(f, "{} <- {}", atom(&self.conclusion), body.join(", "))
    }
}

/// A rule together with its statistics on the graph it was mined from.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedRule {
    pub rule: HornRule,
    /// Distinct `(x, y)` bindings satisfying premises and conclusion.
    pub support: u64,
    /// Distinct `(x, y)` premise bindings where `x` has some conclusion-relation fact.
    pub pca_body: u64,
    pub pca_confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningConfig {
    pub max_premises: usize,
    pub min_pca_confidence: f64,
    pub min_support: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            max_premises: 2,
            min_pca_confidence: 0.8,
            min_support: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct CandidateKey {
    conclusion: RelationId,
    shape: RuleShape,
    first: RelationId,
    second: Option<RelationId>,
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    support: u64,
    body: u64,
}

/// Mines every supported rule shape with support and PCA confidence above the thresholds.
///
/// The result is sorted by rule.
pub fn mine_rules(kg: &KnowledgeGraph, config: &MiningConfig) -> Vec<MinedRule> {
    assert!(
        (1..=2).contains(&config.max_premises),
        "max_premises must be 1 or 2"
    );
    let out_relations: Vec<Vec<RelationId>> = (0..kg.num_entities())
        .map(|e| kg.out_relations(EntityId(e as u32)))
        .collect();

    let mut counts: BTreeMap<CandidateKey, Counts> = BTreeMap::new();
    count_single_support(kg, &mut counts);
    if config.max_premises >= 2 {
        count_chain_support(kg, &mut counts);
    }
    counts.retain(|_, c| c.support >= config.min_support.max(1));

    count_single_body(kg, &out_relations, &mut counts);
    if config.max_premises >= 2 {
        count_chain_body(kg, &out_relations, &mut counts);
    }

    let mut mined: Vec<MinedRule> = counts
        .into_iter()
        .filter_map(|(key, c)| {
            let confidence = c.support as f64 / c.body as f64;
            if confidence < config.min_pca_confidence {
                return None;
            }
            let premises: Vec<RelationId> = core::iter::once(key.first).chain(key.second).collect();
            let rule = HornRule::from_shape(key.shape, key.conclusion, &premises)
                .expect("miner only emits valid shapes");
            Some(MinedRule {
                rule,
                support: c.support,
                pca_body: c.body,
                pca_confidence: confidence,
            })
        })
        .collect();
    mined.sort_by(|a, b| a.rule.cmp(&b.rule));
    mined
}

fn single_key(shape: RuleShape, premise: RelationId, conclusion: RelationId) -> CandidateKey {
    CandidateKey {
        conclusion,
        shape,
        first: premise,
        second: None,
    }
}

fn count_single_support(kg: &KnowledgeGraph, counts: &mut BTreeMap<CandidateKey, Counts>) {
    for r in 0..kg.num_relations() {
        let premise = RelationId(r as u32);
        for &(h, t) in kg.facts(premise) {
            // a(x, y) with x = h, y = t
            for c in kg.relations_between(h, t).filter(|&c| c != premise) {
                counts
                    .entry(single_key(RuleShape::Single, premise, c))
                    .or_default()
                    .support += 1;
            }
            // a(y, x) with x = t, y = h
            for c in kg.relations_between(t, h) {
                counts
                    .entry(single_key(RuleShape::SingleInverse, premise, c))
                    .or_default()
                    .support += 1;
            }
        }
    }
}

fn count_single_body(
    kg: &KnowledgeGraph,
    out_relations: &[Vec<RelationId>],
    counts: &mut BTreeMap<CandidateKey, Counts>,
) {
    for r in 0..kg.num_relations() {
        let premise = RelationId(r as u32);
        for &(h, t) in kg.facts(premise) {
            for &c in &out_relations[h.index()] {
                if let Some(entry) = counts.get_mut(&single_key(RuleShape::Single, premise, c)) {
                    entry.body += 1;
                }
            }
            for &c in &out_relations[t.index()] {
                if let Some(entry) =
                    counts.get_mut(&single_key(RuleShape::SingleInverse, premise, c))
                {
                    entry.body += 1;
                }
            }
        }
    }
}

/// Distinct `(shape, a, b, y)` reachable from `x` through some `z`, sorted.
fn chain_paths(
    kg: &KnowledgeGraph,
    x: EntityId,
    buf: &mut Vec<(RuleShape, RelationId, RelationId, EntityId)>,
) {
    buf.clear();
    let first_hops = kg
        .outgoing(x)
        .iter()
        .map(|t| (true, t.relation, t.tail))
        .chain(kg.incoming(x).iter().map(|t| (false, t.relation, t.tail)));
    for (first_forward, a, z) in first_hops {
        for t in kg.outgoing(z) {
            buf.push((RuleShape::chain(first_forward, true), a, t.relation, t.tail));
        }
        for t in kg.incoming(z) {
            buf.push((
                RuleShape::chain(first_forward, false),
                a,
                t.relation,
                t.tail,
            ));
        }
    }
    buf.sort_unstable();
    buf.dedup();
}

fn count_chain_support(kg: &KnowledgeGraph, counts: &mut BTreeMap<CandidateKey, Counts>) {
    let mut paths = Vec::new();
    for e in 0..kg.num_entities() {
        let x = EntityId(e as u32);
        chain_paths(kg, x, &mut paths);
        for &(shape, a, b, y) in &paths {
            for c in kg.relations_between(x, y) {
                let key = CandidateKey {
                    conclusion: c,
                    shape,
                    first: a,
                    second: Some(b),
                };
                counts.entry(key).or_default().support += 1;
            }
        }
    }
}

fn count_chain_body(
    kg: &KnowledgeGraph,
    out_relations: &[Vec<RelationId>],
    counts: &mut BTreeMap<CandidateKey, Counts>,
) {
    let mut paths = Vec::new();
    for (e, relations) in out_relations.iter().enumerate() {
        let x = EntityId(e as u32);
        if relations.is_empty() {
            continue;
        }
        chain_paths(kg, x, &mut paths);
        for group in paths.chunk_by(|p, q| (p.0, p.1, p.2) == (q.0, q.1, q.2)) {
            let (shape, a, b, _) = group[0];
            let bindings = group.len() as u64;
            for &c in &out_relations[e] {
                let key = CandidateKey {
                    conclusion: c,
                    shape,
                    first: a,
                    second: Some(b),
                };
                if let Some(entry) = counts.get_mut(&key) {
                    entry.body += bindings;
                }
            }
        }
    }
}

/// Carries rules across graphs through one-to-one relation seeds.
///
/// Rules with any unaligned relation are skipped. Rules already in
/// `target_rules` (or produced twice) are emitted once at most.
pub fn transfer_rules(
    rules: &[HornRule],
    seeds: &SeedAlignments,
    direction: Direction,
    target_rules: &[HornRule],
) -> Vec<HornRule> {
    let map = seeds.relation_map(direction);
    if map.is_empty() {
        return Vec::new();
    }
    let mut seen: BTreeSet<HornRule> = target_rules.iter().cloned().collect();
    let mut out = Vec::new();
    for rule in rules {
        if let Some(moved) = rule.substitute(&map) {
            if seen.insert(moved.clone()) {
                out.push(moved);
            }
        }
    }
    out
}

/// One instantiation of a rule whose premises hold and whose conclusion is missing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RuleGrounding {
    pub premises: Vec<Triple>,
    pub conclusion: Triple,
    pub rule: HornRule,
}

/// All groundings of `rule` with every premise in the graph and the conclusion absent.
///
/// Sorted by the bound `(x, y, z)` entity ids.
pub fn ground_rule(kg: &KnowledgeGraph, rule: &HornRule) -> Vec<RuleGrounding> {
    if rule.relations().any(|r| r.index() >= kg.num_relations()) {
        return Vec::new();
    }
    let mut found: Vec<([Option<EntityId>; 3], RuleGrounding)> = Vec::new();
    let mut binding = [None; 3];
    bind(kg, rule.premises(), &mut binding, &mut |b| {
        let conclusion = rule.conclusion.instantiate(b).expect("closed rule");
        if kg.contains(&conclusion) {
            return;
        }
        let premises = rule
            .premises
            .iter()
            .map(|a| a.instantiate(b).expect("bound by premises"))
            .collect();
        found.push((
            *b,
            RuleGrounding {
                premises,
                conclusion,
                rule: rule.clone(),
            },
        ));
    });
    found.sort_by_key(|f| f.0);
    found.into_iter().map(|(_, g)| g).collect()
}

fn bind(
    kg: &KnowledgeGraph,
    atoms: &[Atom],
    binding: &mut [Option<EntityId>; 3],
    emit: &mut dyn FnMut(&[Option<EntityId>; 3]),
) {
    let Some((atom, rest)) = atoms.split_first() else {
        emit(binding);
        return;
    };
    let (s, o) = (atom.subject.index(), atom.object.index());
    match (binding[s], binding[o]) {
        (Some(h), Some(t)) => {
            if kg.contains(&Triple::new(h, atom.relation, t)) {
                bind(kg, rest, binding, emit);
            }
        }
        (Some(h), None) => {
            for t in kg.tails(h, atom.relation) {
                binding[o] = Some(t);
                bind(kg, rest, binding, emit);
            }
            binding[o] = None;
        }
        (None, Some(t)) => {
            for h in kg.heads(t, atom.relation) {
                binding[s] = Some(h);
                bind(kg, rest, binding, emit);
            }
            binding[s] = None;
        }
        (None, None) => {
            for &(h, t) in kg.facts(atom.relation) {
                binding[s] = Some(h);
                binding[o] = Some(t);
                bind(kg, rest, binding, emit);
            }
            binding[s] = None;
            binding[o] = None;
        }
    }
}

/// Grounds every rule once against the original triples and adds all conclusions.
pub fn complete_kg(
    kg: &KnowledgeGraph,
    rules: &[HornRule],
) -> (KnowledgeGraph, Vec<RuleGrounding>) {
    let groundings: Vec<RuleGrounding> = rules.iter().flat_map(|r| ground_rule(kg, r)).collect();
    let completed = kg.with_triples(groundings.iter().map(|g| g.conclusion));
    (completed, groundings)
}

/// Counts in the layout `#Rule  #Tr.Rule  #Ground  #Tr.ground`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompletionStats {
    pub rules: usize,
    pub transferred_rules: usize,
    pub groundings: usize,
    pub transferred_groundings: usize,
}

/// Completes `kg` with its own rules plus transferred ones and tallies the result.
pub fn complete_with_transferred(
    kg: &KnowledgeGraph,
    own: &[HornRule],
    transferred: &[HornRule],
) -> (KnowledgeGraph, Vec<RuleGrounding>, CompletionStats) {
    let all: Vec<HornRule> = own.iter().chain(transferred).cloned().collect();
    let (completed, groundings) = complete_kg(kg, &all);
    let transferred_set: BTreeSet<&HornRule> = transferred.iter().collect();
    let transferred_groundings = groundings
        .iter()
        .filter(|g| transferred_set.contains(&g.rule))
        .count();
    let stats = CompletionStats {
        rules: own.len(),
        transferred_rules: transferred.len(),
        groundings: groundings.len(),
        transferred_groundings,
    };
    (completed, groundings, stats)
}

/// Both graphs after mining, transferring in both directions and completing.
#[derive(Debug, Clone)]
pub struct PairCompletion {
    pub mined: [Vec<MinedRule>; 2],
    pub transferred: [Vec<HornRule>; 2],
    pub completed: [KnowledgeGraph; 2],
    pub groundings: [Vec<RuleGrounding>; 2],
    pub stats: [CompletionStats; 2],
}

/// Runs the whole rule half of the pipeline on a left and a right graph.
pub fn complete_pair(
    left: &KnowledgeGraph,
    right: &KnowledgeGraph,
    seeds: &SeedAlignments,
    config: &MiningConfig,
) -> PairCompletion {
    let mined = [mine_rules(left, config), mine_rules(right, config)];
    let own: [Vec<HornRule>; 2] = [0, 1].map(|s| mined[s].iter().map(|m| m.rule.clone()).collect());
    let transferred = [
        transfer_rules(&own[1], seeds, Direction::Backward, &own[0]),
        transfer_rules(&own[0], seeds, Direction::Forward, &own[1]),
    ];
    let [(cl, gl, sl), (cr, gr, sr)] = [(left, 0), (right, 1)]
        .map(|(kg, s)| complete_with_transferred(kg, &own[s], &transferred[s]));
    PairCompletion {
        mined,
        transferred,
        completed: [cl, cr],
        groundings: [gl, gr],
        stats: [sl, sr],
    }
}
