//! Full-batch training with Adagrad, periodic negative refresh, checkpoints
//! and a finite-difference gradient check.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use ndarray::Array2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::channels::AdjacencyPattern;
use crate::encoder::activation_signature;
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::linalg::{all_finite, squared_sum};
use crate::model::{backward_side, forward_side, zip_tensors, ParamShape, Params, Side};
use crate::objectives::{
    align_loss, corrupt_groundings, corrupt_triples, rule_loss, sample_entity_negatives,
    total_loss, AlignGrads, AlignmentTerm, Implication, MarginParams, RuleTerm,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Average,
}

/// Every training hyperparameter. Defaults are the reference configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub embedding_dim: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub dropout: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_r: f64,
    pub negatives_k: usize,
    pub negative_refresh_epochs: usize,
    pub epochs: usize,
    pub train_fraction: f64,
    pub rng_seed: u64,
    pub pooling: Pooling,
    pub leaky_slope: f64,
    pub cross_row_normalize: bool,
    pub adagrad_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 128,
            layers: 2,
            learning_rate: 0.001,
            l2: 0.01,
            dropout: 0.2,
            gamma1: 1.0,
            gamma2: 1.0,
            gamma_r: 0.12,
            negatives_k: 25,
            negative_refresh_epochs: 5,
            epochs: 500,
            train_fraction: 0.3,
            rng_seed: 0,
            pooling: Pooling::Average,
            leaky_slope: 0.2,
            cross_row_normalize: false,
            adagrad_epsilon: 1e-10,
        }
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 17] = [
        "embedding_dim",
        "layers",
        "learning_rate",
        "l2",
        "dropout",
        "gamma1",
        "gamma2",
        "gamma_r",
        "negatives_k",
        "negative_refresh_epochs",
        "epochs",
        "train_fraction",
        "rng_seed",
        "pooling",
        "leaky_slope",
        "cross_row_normalize",
        "adagrad_epsilon",
    ];

    pub fn margins(&self) -> MarginParams {
        MarginParams {
            entity: self.gamma1,
            relation: self.gamma2,
            rule: self.gamma_r,
        }
    }

    /// Sets one `key = value` entry; unknown keys and unparsable values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: core::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "embedding_dim" => self.embedding_dim = parse(key, value)?,
            "layers" => self.layers = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "l2" => self.l2 = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "gamma1" => self.gamma1 = parse(key, value)?,
            "gamma2" => self.gamma2 = parse(key, value)?,
            "gamma_r" => self.gamma_r = parse(key, value)?,
            "negatives_k" => self.negatives_k = parse(key, value)?,
            "negative_refresh_epochs" => self.negative_refresh_epochs = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "rng_seed" => self.rng_seed = parse(key, value)?,
            "pooling" => {
                self.pooling = match value {
                    "average" => Pooling::Average,
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "unsupported pooling `{value}`"
                        )))
                    }
                }
            }
            "leaky_slope" => self.leaky_slope = parse(key, value)?,
            "cross_row_normalize" => self.cross_row_normalize = parse(key, value)?,
            "adagrad_epsilon" => self.adagrad_epsilon = parse(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// `(key, value)` for every field, in [`Self::KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.embedding_dim.to_string(),
            self.layers.to_string(),
            self.learning_rate.to_string(),
            self.l2.to_string(),
            self.dropout.to_string(),
            self.gamma1.to_string(),
            self.gamma2.to_string(),
            self.gamma_r.to_string(),
            self.negatives_k.to_string(),
            self.negative_refresh_epochs.to_string(),
            self.epochs.to_string(),
            self.train_fraction.to_string(),
            self.rng_seed.to_string(),
            String::from("average"),
            self.leaky_slope.to_string(),
            self.cross_row_normalize.to_string(),
            self.adagrad_epsilon.to_string(),
        ];
        Self::KEYS.into_iter().zip(values).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be positive");
        }
        if self.layers == 0 {
            return bad("layers must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and nonnegative");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be finite and nonnegative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0 && self.gamma_r > 0.0) {
            return bad("margins must be positive");
        }
        if self.negatives_k == 0 || self.negative_refresh_epochs == 0 {
            return bad("negatives_k and negative_refresh_epochs must be positive");
        }
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return bad("train_fraction must lie in [0, 1]");
        }
        if self.adagrad_epsilon.is_nan() || self.adagrad_epsilon <= 0.0 {
            return bad("adagrad_epsilon must be positive");
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical `key = value` listing.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.entries() {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One completed graph plus the groundings that completed it.
#[derive(Debug, Clone)]
pub struct GraphData {
    pub kg: KnowledgeGraph,
    pub groundings: Vec<Implication>,
}

/// Everything one training run consumes.
#[derive(Debug, Clone)]
pub struct AlignmentProblem {
    pub graphs: [GraphData; 2],
    pub train_pairs: Vec<(EntityId, EntityId)>,
    pub relation_pairs: Vec<(RelationId, RelationId)>,
}

/// An [`AlignmentProblem`] with its adjacency patterns and index pairs precomputed.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub graphs: [GraphData; 2],
    pub patterns: [AdjacencyPattern; 2],
    pub entity_pairs: Vec<(usize, usize)>,
    pub relation_pairs: Vec<(usize, usize)>,
}

impl PreparedProblem {
    pub fn new(problem: AlignmentProblem) -> Self {
        let patterns = [
            AdjacencyPattern::new(&problem.graphs[0].kg),
            AdjacencyPattern::new(&problem.graphs[1].kg),
        ];
        Self {
            entity_pairs: problem
                .train_pairs
                .iter()
                .map(|(a, b)| (a.index(), b.index()))
                .collect(),
            relation_pairs: problem
                .relation_pairs
                .iter()
                .map(|(a, b)| (a.index(), b.index()))
                .collect(),
            patterns,
            graphs: problem.graphs,
        }
    }

    pub fn shape(&self, config: &TrainConfig) -> ParamShape {
        ParamShape {
            entities: [
                self.graphs[0].kg.num_entities(),
                self.graphs[1].kg.num_entities(),
            ],
            relations: [
                self.graphs[0].kg.num_relations(),
                self.graphs[1].kg.num_relations(),
            ],
            dim: config.embedding_dim,
            layers: config.layers,
        }
    }
}

/// Cached negatives, rebuilt every `negative_refresh_epochs` epochs.
#[derive(Debug, Clone, Default)]
pub struct NegativeCache {
    pub stamp: usize,
    /// Per training pair: replacements of the left entity.
    pub entity_left: Vec<Vec<usize>>,
    /// Per training pair: replacements of the right entity.
    pub entity_right: Vec<Vec<usize>>,
    pub relation_left: Vec<Vec<usize>>,
    pub relation_right: Vec<Vec<usize>>,
    pub triples: [Vec<Triple>; 2],
    pub groundings: [Vec<Implication>; 2],
}

impl NegativeCache {
    pub fn is_due(&self, epoch: usize, refresh_every: usize) -> bool {
        epoch - self.stamp >= refresh_every
    }

    /// Nearest-neighbour negatives under the current (dropout-free) embeddings.
    pub fn build(
        problem: &PreparedProblem,
        params: &Params,
        config: &TrainConfig,
        epoch: usize,
        rng: &mut dyn RngCore,
    ) -> Self {
        let k = config.negatives_k;
        let outputs = Side::BOTH.map(|side| {
            forward_side(
                params,
                &problem.patterns[side.index()],
                side,
                config.cross_row_normalize,
                None,
            )
            .encoder
            .output
        });
        let lefts: Vec<usize> = problem.entity_pairs.iter().map(|p| p.0).collect();
        let rights: Vec<usize> = problem.entity_pairs.iter().map(|p| p.1).collect();
        let rel_lefts: Vec<usize> = problem.relation_pairs.iter().map(|p| p.0).collect();
        let rel_rights: Vec<usize> = problem.relation_pairs.iter().map(|p| p.1).collect();

        let mut triples: [Vec<Triple>; 2] = Default::default();
        let mut groundings: [Vec<Implication>; 2] = Default::default();
        for side in Side::BOTH {
            let s = side.index();
            let graph = &problem.graphs[s];
            let everyone: Vec<usize> = (0..graph.kg.num_entities()).collect();
            let neighbours = sample_entity_negatives(&outputs[s], &everyone, k);
            triples[s] = corrupt_triples(graph.kg.triples(), &neighbours, &graph.kg, rng);
            groundings[s] = corrupt_groundings(&graph.groundings, &neighbours, &graph.kg, rng);
        }
        Self {
            stamp: epoch,
            entity_left: sample_entity_negatives(&outputs[0], &lefts, k),
            entity_right: sample_entity_negatives(&outputs[1], &rights, k),
            relation_left: sample_entity_negatives(&params.relations[0], &rel_lefts, k),
            relation_right: sample_entity_negatives(&params.relations[1], &rel_rights, k),
            triples,
            groundings,
        }
    }
}

/// Loss components of one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub align: f64,
    pub rule_left: f64,
    pub rule_right: f64,
    /// `l2 / 2 * sum theta^2`, not part of [`Self::total`].
    pub regularization: f64,
}

impl LossBreakdown {
    /// `L_a + L_r + L'_r`.
    pub fn total(&self) -> f64 {
        total_loss(self.align, self.rule_left, self.rule_right)
    }

    /// What the optimizer minimizes.
    pub fn objective(&self) -> f64 {
        self.total() + self.regularization
    }

    fn first_non_finite(&self) -> Option<&'static str> {
        [
            ("L_a", self.align),
            ("L_r", self.rule_left),
            ("L_r_prime", self.rule_right),
            ("regularization", self.regularization),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(name, _)| name)
    }
}

/// Evaluates the full objective, optionally accumulating gradients into `grads`
/// and recording every non-smooth decision into `kinks`.
///
/// Dropout is active only when `rng` is given.
pub fn evaluate_objective(
    problem: &PreparedProblem,
    params: &Params,
    negatives: &NegativeCache,
    config: &TrainConfig,
    mut rng: Option<&mut dyn RngCore>,
    mut grads: Option<&mut Params>,
    mut kinks: Option<&mut Vec<i32>>,
) -> LossBreakdown {
    let mut forward = |side: Side| {
        forward_side(
            params,
            &problem.patterns[side.index()],
            side,
            config.cross_row_normalize,
            match rng.as_mut() {
                Some(r) => Some(&mut **r),
                None => None,
            },
        )
    };
    let forwards = [forward(Side::Left), forward(Side::Right)];
    if let Some(k) = kinks.as_deref_mut() {
        for f in &forwards {
            k.extend(activation_signature(&f.encoder));
            for pair in &f.cross.argmax {
                match pair {
                    Some((r, o)) => k.extend([r.0 as i32, o.0 as i32]),
                    None => k.push(-1),
                }
            }
        }
    }

    let margins = config.margins();
    let outputs = [forwards[0].output(), forwards[1].output()];
    let entity_term = AlignmentTerm {
        pairs: &problem.entity_pairs,
        left_negatives: &negatives.entity_left,
        right_negatives: &negatives.entity_right,
        margin: margins.entity,
    };
    let relation_term = AlignmentTerm {
        pairs: &problem.relation_pairs,
        left_negatives: &negatives.relation_left,
        right_negatives: &negatives.relation_right,
        margin: margins.relation,
    };

    let mut d_outputs = [
        Array2::<f64>::zeros(outputs[0].raw_dim()),
        Array2::<f64>::zeros(outputs[1].raw_dim()),
    ];
    let align = {
        let align_grads = grads.as_deref_mut().map(|g| {
            let [dl, dr] = &mut d_outputs;
            let [rl, rr] = &mut g.relations;
            AlignGrads {
                entities: [dl, dr],
                relations: [rl, rr],
            }
        });
        align_loss(
            outputs,
            [&params.relations[0], &params.relations[1]],
            entity_term,
            relation_term,
            align_grads,
            kinks.as_deref_mut(),
        )
    };

    let mut rule = [0.0; 2];
    for side in Side::BOTH {
        let s = side.index();
        let term = RuleTerm {
            triples: problem.graphs[s].kg.triples(),
            triple_negatives: &negatives.triples[s],
            groundings: &problem.graphs[s].groundings,
            grounding_negatives: &negatives.groundings[s],
        };
        let side_grads = match grads.as_deref_mut() {
            Some(g) => Some((&mut d_outputs[s], &mut g.relations[s])),
            None => None,
        };
        rule[s] = rule_loss(
            term,
            outputs[s],
            &params.relations[s],
            margins.rule,
            side_grads,
            kinks.as_deref_mut(),
        );
    }

    let regularization = 0.5
        * config.l2
        * params
            .tensors()
            .iter()
            .map(|(_, t)| squared_sum(t))
            .sum::<f64>();

    if let Some(g) = grads {
        for side in Side::BOTH {
            let s = side.index();
            backward_side(
                params,
                &problem.patterns[s],
                side,
                &forwards[s],
                &d_outputs[s],
                g,
            );
        }
        if config.l2 > 0.0 {
            zip_tensors(g, params, |gt, pt| gt.scaled_add(config.l2, pt));
        }
    }

    LossBreakdown {
        align: align.total(),
        rule_left: rule[0],
        rule_right: rule[1],
        regularization,
    }
}

/// Adagrad with per-coordinate squared-gradient accumulators.
#[derive(Debug, Clone)]
pub struct Adagrad {
    pub accumulators: Params,
    pub learning_rate: f64,
    pub epsilon: f64,
}

impl Adagrad {
    pub fn new(params: &Params, learning_rate: f64, epsilon: f64) -> Self {
        Self {
            accumulators: params.zeros_like(),
            learning_rate,
            epsilon,
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        let lr = self.learning_rate;
        let eps = self.epsilon;
        zip_tensors(&mut self.accumulators, grads, |acc, g| {
            ndarray::Zip::from(acc).and(g).for_each(|a, &g| *a += g * g);
        });
        let mut tensors = params.tensors_mut();
        for (((_, p), (_, g)), (_, acc)) in tensors
            .iter_mut()
            .zip(grads.tensors())
            .zip(self.accumulators.tensors())
        {
            ndarray::Zip::from(&mut **p)
                .and(g)
                .and(acc)
                .for_each(|p, &g, &a| *p -= lr * g / (libm::sqrt(a) + eps));
        }
    }
}

/// Trained (or initial) parameters with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: Params,
    pub epoch: usize,
    pub config_fingerprint: String,
}

/// One row of the loss history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub align: f64,
    pub rule_left: f64,
    pub rule_right: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: Vec<LossRecord>,
}

/// Initial parameters for `problem` under `config`, drawn from `rng`.
pub fn initial_params(
    problem: &PreparedProblem,
    config: &TrainConfig,
    rng: &mut dyn RngCore,
) -> Params {
    let mut params = Params::random(problem.shape(config), rng);
    params.attention.leaky_slope = config.leaky_slope;
    params.encoder.dropout = config.dropout;
    params
}

/// Trains from a seeded initialization. Deterministic for a given config.
pub fn train(problem: &PreparedProblem, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if problem.entity_pairs.is_empty() {
        return Err(Error::EmptyTrainSeeds);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let params = initial_params(problem, config, &mut rng);
    train_from(problem, config, params, &mut rng)
}

/// Continues training `params` for `config.epochs` epochs.
pub fn train_from(
    problem: &PreparedProblem,
    config: &TrainConfig,
    mut params: Params,
    rng: &mut dyn RngCore,
) -> Result<TrainOutcome> {
    let mut optimizer = Adagrad::new(&params, config.learning_rate, config.adagrad_epsilon);
    let mut negatives: Option<NegativeCache> = None;
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if negatives
            .as_ref()
            .is_none_or(|n| n.is_due(epoch, config.negative_refresh_epochs))
        {
            negatives = Some(NegativeCache::build(problem, &params, config, epoch, rng));
        }
        let cache = negatives.as_ref().expect("built above");
        let mut grads = params.zeros_like();
        let loss = evaluate_objective(
            problem,
            &params,
            cache,
            config,
            Some(&mut *rng),
            Some(&mut grads),
            None,
        );
        if let Some(term) = loss.first_non_finite() {
            return Err(Error::NonFiniteLoss {
                term,
                epoch: epoch + 1,
            });
        }
        if grads.tensors().iter().any(|(_, g)| !all_finite(g)) {
            return Err(Error::NonFiniteLoss {
                term: "gradient",
                epoch: epoch + 1,
            });
        }
        optimizer.step(&mut params, &grads);
        history.push(LossRecord {
            epoch: epoch + 1,
            align: loss.align,
            rule_left: loss.rule_left,
            rule_right: loss.rule_right,
            total: loss.total(),
        });
    }

    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            params,
            epoch: config.epochs,
            config_fingerprint: config.fingerprint(),
        },
        history,
    })
}

/// Settings of [`gradient_check`].
#[derive(Debug, Clone)]
pub struct GradientCheckConfig {
    pub step: f64,
    /// Denominator floor of the relative error.
    pub floor: f64,
    /// Start from all-zero parameters instead of a random draw.
    pub zero_params: bool,
    pub seed: u64,
}

impl Default for GradientCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            floor: 1e-4,
            zero_params: false,
            seed: 17,
        }
    }
}

/// Agreement of one parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub group: String,
    pub max_relative_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
    /// Coordinates whose `±step` perturbation crossed a kink.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheckReport {
    pub groups: Vec<GroupCheck>,
}

impl GradientCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn max_abs_error(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.max_abs_error)
            .fold(0.0, f64::max)
    }
}

/// Central differences against the analytic gradient of the full objective
/// (dropout off, negatives frozen) for every parameter coordinate.
///
/// A coordinate is skipped when the perturbed objective lands on another
/// smooth piece (any ReLU, hinge, clamp or argmax decision changes).
pub fn gradient_check(
    problem: &PreparedProblem,
    params: &Params,
    negatives: &NegativeCache,
    config: &TrainConfig,
    check: &GradientCheckConfig,
) -> GradientCheckReport {
    let mut analytic = params.zeros_like();
    let mut base_kinks = Vec::new();
    evaluate_objective(
        problem,
        params,
        negatives,
        config,
        None,
        Some(&mut analytic),
        Some(&mut base_kinks),
    );

    let mut probe = params.clone();
    let mut groups: BTreeMap<String, GroupCheck> = BTreeMap::new();
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let analytic_tensors = analytic.tensors();
    for (t, name) in names.iter().enumerate() {
        let group = Params::group_of(name).to_string();
        let entry = groups.entry(group.clone()).or_insert(GroupCheck {
            group,
            max_relative_error: 0.0,
            max_abs_error: 0.0,
            checked: 0,
            skipped: 0,
        });
        let shape = analytic_tensors[t].1.dim();
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let original = params.tensors()[t].1[[i, j]];
                let mut eval_at = |value: f64| {
                    probe.tensors_mut()[t].1[[i, j]] = value;
                    let mut kinks = Vec::new();
                    let loss = evaluate_objective(
                        problem,
                        &probe,
                        negatives,
                        config,
                        None,
                        None,
                        Some(&mut kinks),
                    );
                    (loss.objective(), kinks)
                };
                let (plus, kinks_plus) = eval_at(original + check.step);
                let (minus, kinks_minus) = eval_at(original - check.step);
                probe.tensors_mut()[t].1[[i, j]] = original;
                if kinks_plus != base_kinks || kinks_minus != base_kinks {
                    entry.skipped += 1;
                    continue;
                }
                let numeric = (plus - minus) / (2.0 * check.step);
                let exact = analytic_tensors[t].1[[i, j]];
                let abs = libm::fabs(numeric - exact);
                let rel = abs / libm::fabs(numeric).max(libm::fabs(exact)).max(check.floor);
                entry.checked += 1;
                entry.max_abs_error = entry.max_abs_error.max(abs);
                entry.max_relative_error = entry.max_relative_error.max(rel);
            }
        }
    }
    GradientCheckReport {
        groups: groups.into_values().collect(),
    }
}

/// Size caps of the random instance built by [`gradient_check_instance`].
#[derive(Debug, Clone, Copy)]
pub struct InstanceCaps {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
    pub dim: usize,
    pub seeds: usize,
    pub negatives_k: usize,
}

impl Default for InstanceCaps {
    fn default() -> Self {
        Self {
            entities: 30,
            relations: 4,
            triples: 70,
            dim: 8,
            seeds: 10,
            negatives_k: 5,
        }
    }
}

/// A small random problem (two perturbed copies of one graph, rule-completed)
/// with parameters, frozen negatives and a dropout-free config.
pub fn gradient_check_instance(
    caps: InstanceCaps,
    seed: u64,
    zero_params: bool,
) -> (PreparedProblem, Params, NegativeCache, TrainConfig) {
    use crate::rules::{complete_kg, HornRule, RuleShape};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = crate::synth::isomorphic_pair(caps.entities, caps.triples, caps.relations, &mut rng);
    let right = crate::synth::drop_triples(&pair.right, 0.1, &mut rng);

    // a handful of chain rules so both graphs carry groundings
    let rules: Vec<HornRule> = (0..caps.relations as u32)
        .flat_map(|c| {
            [(0u32, 1u32), (1, 2)]
                .into_iter()
                .filter_map(move |(a, b)| {
                    HornRule::from_shape(
                        RuleShape::ChainFF,
                        RelationId(c),
                        &[RelationId(a), RelationId(b)],
                    )
                    .ok()
                })
        })
        .collect();
    let complete = |kg: &KnowledgeGraph| {
        let (kg, groundings) = complete_kg(kg, &rules);
        let groundings: Vec<Implication> =
            groundings.iter().take(12).map(Implication::from).collect();
        GraphData { kg, groundings }
    };
    let train_pairs: Vec<(EntityId, EntityId)> = pair
        .seeds
        .entity_pairs
        .iter()
        .copied()
        .take(caps.seeds)
        .collect();
    let problem = PreparedProblem::new(AlignmentProblem {
        graphs: [complete(&pair.left), complete(&right)],
        train_pairs,
        relation_pairs: pair.seeds.relation_pairs.clone(),
    });

    let config = TrainConfig {
        embedding_dim: caps.dim,
        dropout: 0.0,
        negatives_k: caps.negatives_k,
        rng_seed: seed,
        ..TrainConfig::default()
    };
    let mut params = initial_params(&problem, &config, &mut rng);
    if zero_params {
        params = params.zeros_like();
        params.attention.leaky_slope = config.leaky_slope;
    }
    let negatives = NegativeCache::build(&problem, &params, &config, 0, &mut rng);
    (problem, params, negatives, config)
}
