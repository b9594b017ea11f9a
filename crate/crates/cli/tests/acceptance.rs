//! Acceptance suite: one `PASS`/`FAIL` line per criterion, tolerances pinned below.
//!
//! Runs as a plain binary (`harness = false`). The process fails when any
//! criterion fails, except those listed in [`KNOWN_FAILING`], which still print
//! their measured values on a `FAIL` line.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kgalign::formats::triples::{parse_kg, write_kg};
use kgalign_core::channels::{
    cross_kg_adjacency, self_attention_adjacency, AdjacencyPattern, AttentionParams,
};
use kgalign_core::eval::{evaluate_alignment, RankDirection};
use kgalign_core::kg::{split_entity_seeds, EntityId, KnowledgeGraph, RelationId, Triple};
use kgalign_core::model::encode_both;
use kgalign_core::objectives::{grounding_truth_value, implication_value, Implication};
use kgalign_core::rules::{
    complete_pair, ground_rule, mine_rules, HornRule, MiningConfig, RuleShape,
};
use kgalign_core::synth::{isomorphic_pair, planted_rule_kg, random_kg};
use kgalign_core::trainer::{
    gradient_check, gradient_check_instance, train, AlignmentProblem, GradientCheckConfig,
    GraphData, InstanceCaps, PreparedProblem, TrainConfig,
};
use kgalign_core::Array2;
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

const GRADIENT_MAX_RELATIVE_ERROR: f64 = 1e-4;
const GRADIENT_TIME_LIMIT: Duration = Duration::from_secs(60);
const RULE_ORACLE_TIME_LIMIT: Duration = Duration::from_secs(60);
const ROW_SUM_TOLERANCE: f64 = 1e-6;
const CROSS_WEIGHT_TOLERANCE: f64 = 1e-12;
const ATTENTION_ROWS: usize = 1_000;
const TRUTH_SAMPLES: usize = 10_000;
const TRUTH_TOLERANCE: f64 = 1e-15;
const ALIGNMENT_MIN_HITS_AT_1: f64 = 0.9;
const ALIGNMENT_TIME_LIMIT: Duration = Duration::from_secs(300);
const METRIC_TOLERANCE: f64 = 1e-15;
const FULL_SCALE_COUNTS: (usize, usize, usize) = (66_469, 2_830, 153_929);
/// Environment variable naming the real triple file of the Chinese-side graph.
const REAL_FIXTURE_VAR: &str = "KGALIGN_DBP_ZH_TRIPLES";

/// Criteria that fail under the prescribed settings; see the README.
const KNOWN_FAILING: &[u32] = &[6];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let (problem, params, negatives, config) =
        gradient_check_instance(InstanceCaps::default(), 1, false);
    let report = gradient_check(
        &problem,
        &params,
        &negatives,
        &config,
        &GradientCheckConfig::default(),
    );
    let elapsed = start.elapsed();
    let worst = report.max_relative_error();
    let all_checked = report.groups.iter().all(|g| g.checked > 0);
    let groups: Vec<String> = report
        .groups
        .iter()
        .map(|g| format!("{}={:.1e}", g.group, g.max_relative_error))
        .collect();
    outcome(
        worst < GRADIENT_MAX_RELATIVE_ERROR && all_checked && elapsed < GRADIENT_TIME_LIMIT,
        format!(
            "max relative error {worst:.2e} < {GRADIENT_MAX_RELATIVE_ERROR:e} over {} groups [{}] in {:.1}s",
            report.groups.len(),
            groups.join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn rule_oracle() -> Outcome {
    let start = Instant::now();
    let everything = MiningConfig {
        max_premises: 2,
        min_pca_confidence: 0.0,
        min_support: 1,
    };
    let mut mismatches = Vec::new();
    let (mut rules_checked, mut grounded) = (0, 0);
    let mut candidate_rng = ChaCha8Rng::seed_from_u64(2024);
    for seed in 0..20u64 {
        let relations = 1 + (seed as usize % 10);
        let entities = 15 + (seed as usize * 7) % 26;
        let kg = random_small_kg(1000 + seed, entities, relations, 200);
        assert!(kg.num_triples() <= 200 && kg.num_relations() <= 10);

        let oracle = brute_force_rule_counts(&kg);
        let mined = mine_rules(&kg, &everything);
        let got: BTreeSet<(RuleKey, usize, usize)> = mined
            .iter()
            .map(|m| {
                let rels = m.rule.premise_relations();
                let key = (
                    m.rule.shape(),
                    m.rule.conclusion().relation.index(),
                    rels[0].index(),
                    rels.get(1).map_or(0, |r| r.index()),
                );
                (key, m.support as usize, m.pca_body as usize)
            })
            .collect();
        let want: BTreeSet<(RuleKey, usize, usize)> = oracle
            .iter()
            .map(|(k, c)| (*k, c.support, c.pca_body))
            .collect();
        if got != want {
            mismatches.push(format!("kg {seed}: mined rule counts"));
        }
        if mined
            .iter()
            .any(|m| m.pca_confidence != m.support as f64 / m.pca_body as f64)
        {
            mismatches.push(format!("kg {seed}: pca confidence"));
        }
        rules_checked += mined.len();

        // every mined rule plus random candidates, which may have no groundings at all
        let mut keys: Vec<RuleKey> = oracle.keys().copied().collect();
        for _ in 0..20 {
            let shape = RuleShape::ALL[candidate_rng.random_range(0..RuleShape::ALL.len())];
            let b = if shape.premise_count() == 1 {
                0
            } else {
                candidate_rng.random_range(0..relations)
            };
            keys.push((
                shape,
                candidate_rng.random_range(0..relations),
                candidate_rng.random_range(0..relations),
                b,
            ));
        }
        for (shape, c, a, b) in keys {
            let premises: Vec<RelationId> = if shape.premise_count() == 1 {
                vec![RelationId(a as u32)]
            } else {
                vec![RelationId(a as u32), RelationId(b as u32)]
            };
            let Ok(rule) = HornRule::from_shape(shape, RelationId(c as u32), &premises) else {
                continue;
            };
            let got: BTreeSet<_> = ground_rule(&kg, &rule)
                .into_iter()
                .map(|g| {
                    (
                        g.premises.into_iter().collect::<BTreeSet<_>>(),
                        g.conclusion,
                    )
                })
                .collect();
            if got != brute_force_groundings(&kg, shape, c, a, b) {
                mismatches.push(format!("kg {seed}: groundings of {rule}"));
            }
            grounded += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches.is_empty() && elapsed < RULE_ORACLE_TIME_LIMIT,
        format!(
            "20 graphs, {rules_checked} mined rules, {grounded} rules grounded, {} mismatches{} in {:.1}s",
            mismatches.len(),
            mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default(),
            elapsed.as_secs_f64()
        ),
    )
}

fn planted_rule() -> Outcome {
    let kg = planted_rule_kg(2, 0);
    let planted = HornRule::from_shape(RuleShape::Single, RelationId(1), &[RelationId(0)]).unwrap();
    match mine_rules(&kg, &MiningConfig::default())
        .into_iter()
        .find(|m| m.rule == planted)
    {
        Some(m) => outcome(
            m.support == 10 && m.pca_confidence == 1.0,
            format!(
                "support {} (want 10), pca_confidence {} (want 1.0)",
                m.support, m.pca_confidence
            ),
        ),
        None => outcome(false, String::from("planted rule not mined")),
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let dist = Uniform::new_inclusive(-1.0, 1.0).unwrap();
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

fn attention_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut rows, mut worst_sum, mut worst_cross, mut negative) = (0, 0.0f64, 0.0f64, 0);
    let mut seed = 0;
    while rows < ATTENTION_ROWS {
        let n = rng.random_range(2..30);
        let m = rng.random_range(1..6);
        let d = rng.random_range(1..9);
        let kg = random_small_kg(5000 + seed, n, m, rng.random_range(0..4 * n));
        seed += 1;
        let h = random_matrix(n, d, &mut rng);
        let params = AttentionParams {
            w: random_matrix(d, d, &mut rng),
            p: random_matrix(2, d, &mut rng),
            leaky_slope: 0.2,
        };
        let rel = random_matrix(m, d, &mut rng);
        let other = random_matrix(rng.random_range(1..6), d, &mut rng);
        let pattern = AdjacencyPattern::new(&kg);
        let a1 = self_attention_adjacency(&pattern, &h, &params);
        let a2 = cross_kg_adjacency(&pattern, &rel, &other);
        let dense = dense_cross_attention(&kg, &rel, &other);
        for (i, dense_row) in dense.iter().enumerate() {
            worst_sum = worst_sum.max((a1.row_sum(i) - 1.0).abs());
            for (j, expected) in dense_row.iter().enumerate() {
                let got = a2.get(i, j);
                if got < 0.0 {
                    negative += 1;
                }
                worst_cross = worst_cross.max((got - expected).abs());
            }
            rows += 1;
        }
    }
    outcome(
        worst_sum <= ROW_SUM_TOLERANCE && negative == 0 && worst_cross <= CROSS_WEIGHT_TOLERANCE,
        format!(
            "{rows} rows: max |row sum - 1| {worst_sum:.1e} <= {ROW_SUM_TOLERANCE:e}, {negative} negative cross weights, \
             max deviation from brute force {worst_cross:.1e} <= {CROSS_WEIGHT_TOLERANCE:e}"
        ),
    )
}

fn truth_value_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let unit = Uniform::new_inclusive(0.0, 1.0).unwrap();
    let (mut worst, mut out_of_range, mut identity_failures) = (0.0f64, 0, 0);
    for i in 0..TRUTH_SAMPLES {
        let premises: Vec<f64> = (0..1 + i % 2).map(|_| unit.sample(&mut rng)).collect();
        let conclusion = unit.sample(&mut rng);
        let v = implication_value(&premises, conclusion);
        worst = worst.max((v - implication_oracle(&premises, conclusion)).abs());
        if !(0.0..=1.0).contains(&v) {
            out_of_range += 1;
        }
        let mut with_false = premises.clone();
        with_false[0] = 0.0;
        if implication_value(&with_false, conclusion) != 1.0 {
            identity_failures += 1;
        }
        let all_true = vec![1.0; premises.len()];
        if (implication_value(&all_true, conclusion) - conclusion).abs() > TRUTH_TOLERANCE {
            identity_failures += 1;
        }
    }

    // the same algebra through embeddings, with triple truth values from the distance formula
    let d = 4;
    let entities = random_matrix(6, d, &mut rng);
    let relations = random_matrix(3, d, &mut rng);
    let row = |m: &Array2<f64>, i: u32| m.row(i as usize).to_vec();
    let truth = |t: &Triple| {
        triple_truth_oracle(
            &row(&entities, t.head.0),
            &row(&relations, t.relation.0),
            &row(&entities, t.tail.0),
        )
    };
    for _ in 0..TRUTH_SAMPLES / 10 {
        let mut triple = || {
            Triple::from_raw(
                rng.random_range(0..6),
                rng.random_range(0..3),
                rng.random_range(0..6),
            )
        };
        let g = Implication {
            premises: vec![triple(), triple()],
            conclusion: triple(),
        };
        let premises: Vec<f64> = g.premises.iter().map(&truth).collect();
        let v = grounding_truth_value(&g, &entities, &relations);
        worst = worst.max((v - implication_oracle(&premises, truth(&g.conclusion))).abs());
        if !(0.0..=1.0).contains(&v) {
            out_of_range += 1;
        }
    }
    outcome(
        worst <= TRUTH_TOLERANCE && out_of_range == 0 && identity_failures == 0,
        format!(
            "{} samples: max deviation {worst:.1e} <= {TRUTH_TOLERANCE:e}, {out_of_range} outside [0,1], \
             {identity_failures} identity failures",
            TRUTH_SAMPLES + TRUTH_SAMPLES / 10
        ),
    )
}

fn synthetic_alignment() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pair = isomorphic_pair(100, 300, 5, &mut rng);
    let done = complete_pair(
        &pair.left,
        &pair.right,
        &pair.seeds,
        &MiningConfig::default(),
    );
    let graphs = [0, 1].map(|s| GraphData {
        kg: done.completed[s].clone(),
        groundings: done.groundings[s].iter().map(Implication::from).collect(),
    });
    let config = TrainConfig {
        epochs: 200,
        ..TrainConfig::default()
    };
    let (train_pairs, test) = split_entity_seeds(
        &pair.seeds.entity_pairs,
        config.train_fraction,
        config.rng_seed,
    );
    let problem = PreparedProblem::new(AlignmentProblem {
        graphs,
        train_pairs,
        relation_pairs: pair.seeds.relation_pairs.clone(),
    });
    let result = train(&problem, &config).and_then(|out| {
        let [l, r] = encode_both(
            &out.checkpoint.params,
            &problem.patterns,
            config.cross_row_normalize,
        );
        let metrics = evaluate_alignment(&test, &l, &r, &[1, 10], RankDirection::SourceToTarget)?;
        Ok((out.history, metrics))
    });
    let elapsed = start.elapsed();
    match result {
        Ok((history, metrics)) => {
            let first = history.first().map_or(f64::NAN, |r| r.total);
            let last = history.last().map_or(f64::NAN, |r| r.total);
            let hits1 = metrics.hits(1).unwrap_or(0.0);
            outcome(
                hits1 >= ALIGNMENT_MIN_HITS_AT_1 && elapsed < ALIGNMENT_TIME_LIMIT,
                format!(
                    "Hits@1 {hits1:.3} (need >= {ALIGNMENT_MIN_HITS_AT_1}), Hits@10 {:.3}, MRR {:.3} on {} test pairs; \
                     loss {first:.1} -> {last:.1}; {:.1}s",
                    metrics.hits(10).unwrap_or(0.0),
                    metrics.mrr,
                    metrics.n_test,
                    elapsed.as_secs_f64()
                ),
            )
        }
        Err(e) => outcome(false, format!("training failed: {e}")),
    }
}

/// Embeddings whose source-to-target ranks are exactly `ranks`: query `i` sits
/// on its own axis, `ranks[i] - 1` distractors lie strictly closer than its truth,
/// and everything belonging to other queries is far away.
fn rank_configuration(ranks: &[usize]) -> (Vec<(EntityId, EntityId)>, Array2<f64>, Array2<f64>) {
    let q = ranks.len();
    let total: usize = ranks.iter().sum();
    let mut left = Array2::zeros((q, q));
    let mut right = Array2::zeros((total, q));
    let mut pairs = Vec::new();
    let mut next = 0;
    for (i, &rank) in ranks.iter().enumerate() {
        left[[i, i]] = 10.0;
        for k in 0..rank - 1 {
            right[[next, i]] = 10.0 - (1.0 + 0.1 * k as f64);
            next += 1;
        }
        right[[next, i]] = 13.0;
        pairs.push((EntityId(i as u32), EntityId(next as u32)));
        next += 1;
    }
    (pairs, left, right)
}

fn metrics_correctness() -> Outcome {
    let configurations: [&[usize]; 5] = [
        &[1, 2],
        &[1],
        &[3, 3, 3],
        &[1, 1, 3, 12, 10, 11],
        &[2, 5, 10, 11, 1, 7, 4],
    ];
    let mut failures = Vec::new();
    for ranks in configurations {
        let (pairs, left, right) = rank_configuration(ranks);
        let report = evaluate_alignment(
            &pairs,
            &left,
            &right,
            &[1, 10],
            RankDirection::SourceToTarget,
        )
        .unwrap();
        let (h1, mrr) = ranks_oracle(ranks, 1);
        let (h10, _) = ranks_oracle(ranks, 10);
        let close = |a: Option<f64>, b: f64| a.is_some_and(|a| (a - b).abs() <= METRIC_TOLERANCE);
        if !(close(report.hits(1), h1)
            && close(report.hits(10), h10)
            && close(Some(report.mrr), mrr))
        {
            failures.push(format!("{ranks:?}"));
        }
    }
    let (pairs, left, right) = rank_configuration(&[1, 2]);
    let example = evaluate_alignment(
        &pairs,
        &left,
        &right,
        &[1, 10],
        RankDirection::SourceToTarget,
    )
    .unwrap();
    outcome(
        failures.is_empty() && example.mrr == 0.75,
        format!(
            "{} rank configurations, ranks {{1,2}} -> MRR {} Hits@1 {} Hits@10 {}{}",
            configurations.len(),
            example.mrr,
            example.hits(1).unwrap_or(f64::NAN),
            example.hits(10).unwrap_or(f64::NAN),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; mismatches {}", failures.join(" "))
            }
        ),
    )
}

fn counts(kg: &KnowledgeGraph) -> (usize, usize, usize) {
    (kg.num_entities(), kg.num_relations(), kg.num_triples())
}

fn loader_fidelity() -> (Outcome, Option<Outcome>) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (e, r, t) = FULL_SCALE_COUNTS;
    let fixture = random_kg(e, r, t, &mut rng);
    let dir = tempfile::tempdir().expect("temporary directory");
    let path = dir.path().join("fixture.tsv");
    std::fs::write(&path, write_kg(&fixture)).expect("fixture written");
    let text = std::fs::read_to_string(&path).expect("fixture read");
    let parsed = parse_kg(&text, "fixture.tsv");
    let synthetic = match parsed {
        Ok(kg) => outcome(
            counts(&kg) == counts(&fixture),
            format!(
                "fixture {:?} parsed back as {:?} in {:.1}s",
                counts(&fixture),
                counts(&kg),
                start.elapsed().as_secs_f64()
            ),
        ),
        Err(err) => outcome(false, format!("fixture failed to parse: {err}")),
    };
    let real = std::env::var_os(REAL_FIXTURE_VAR).map(|path| {
        let source = path.to_string_lossy().into_owned();
        match std::fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|text| parse_kg(&text, &source).map_err(|e| e.to_string()))
        {
            Ok(kg) => outcome(
                counts(&kg) == FULL_SCALE_COUNTS,
                format!("{source}: {:?}, want {:?}", counts(&kg), FULL_SCALE_COUNTS),
            ),
            Err(e) => outcome(false, format!("{source}: {e}")),
        }
    });
    (synthetic, real)
}

fn main() -> ExitCode {
    let mut unexpected = 0;
    let mut report = |id: u32, name: &str, result: Outcome| {
        let verdict = if result.passed { "PASS" } else { "FAIL" };
        let note = match (result.passed, KNOWN_FAILING.contains(&id)) {
            (false, true) => " [known failure]",
            (true, true) => " [listed as known failure but passed]",
            _ => "",
        };
        println!("{verdict} {id} {name}: {}{note}", result.detail);
        if !result.passed && !KNOWN_FAILING.contains(&id) {
            unexpected += 1;
        }
    };
    report(1, "gradient fidelity", gradient_fidelity());
    report(2, "rule-engine oracle equivalence", rule_oracle());
    report(3, "planted-rule recovery", planted_rule());
    report(4, "attention invariants", attention_invariants());
    report(5, "truth-value algebra", truth_value_algebra());
    report(6, "end-to-end synthetic alignment", synthetic_alignment());
    report(7, "metrics correctness", metrics_correctness());
    let (synthetic, real) = loader_fidelity();
    report(8, "loader fidelity (full-scale fixture)", synthetic);
    match real {
        Some(result) => report(8, "loader fidelity (real file)", result),
        None => println!(
            "SKIP 8 loader fidelity (real file): set {REAL_FIXTURE_VAR} to the triple file"
        ),
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    }
}
