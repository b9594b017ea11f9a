//! Hits@N / MRR ranking metrics and the seed-fraction sweep.

use alloc::vec::Vec;

use ndarray::{Array2, ArrayView1};

use crate::kg::{split_entity_seeds, EntityId, RelationId};
use crate::model::encode_both;
use crate::trainer::{train, AlignmentProblem, GraphData, PreparedProblem, TrainConfig};
use crate::{Error, Result};

/// Which graph supplies the queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankDirection {
    /// Left entities query the right graph.
    SourceToTarget,
    /// Right entities query the left graph.
    TargetToSource,
    /// Mean of both directions.
    Averaged,
}

impl RankDirection {
    pub fn name(self) -> &'static str {
        match self {
            RankDirection::SourceToTarget => "source_to_target",
            RankDirection::TargetToSource => "target_to_source",
            RankDirection::Averaged => "averaged",
        }
    }
}

impl core::str::FromStr for RankDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source_to_target" => Ok(RankDirection::SourceToTarget),
            "target_to_source" => Ok(RankDirection::TargetToSource),
            "averaged" => Ok(RankDirection::Averaged),
            _ => Err(Error::InvalidConfig(alloc::format!(
                "unknown direction `{s}`"
            ))),
        }
    }
}

/// Ranking quality over a test split.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// `(N, Hits@N)` in ascending `N`.
    pub hits_at: Vec<(usize, f64)>,
    pub mrr: f64,
    pub direction: RankDirection,
    /// Number of ranked candidates per query (the whole other graph).
    pub candidates: usize,
    pub n_test: usize,
}

impl MetricsReport {
    pub fn hits(&self, n: usize) -> Option<f64> {
        self.hits_at.iter().find(|(k, _)| *k == n).map(|(_, v)| *v)
    }
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// 1-based rank of `truth` among all rows of `candidates` by ascending L2
/// distance to `query`; equal distances rank lower ids first.
pub fn rank_of(query: ArrayView1<'_, f64>, candidates: &Array2<f64>, truth: usize) -> usize {
    let target = squared_distance(query, candidates.row(truth));
    let mut rank = 1;
    for (j, row) in candidates.outer_iter().enumerate() {
        if j == truth {
            continue;
        }
        let d = squared_distance(query, row);
        if d < target || (d == target && j < truth) {
            rank += 1;
        }
    }
    rank
}

/// Hits@N and MRR from 1-based ranks.
pub fn metrics_from_ranks(
    ranks: &[usize],
    hits_at: &[usize],
    direction: RankDirection,
    candidates: usize,
) -> Result<MetricsReport> {
    if ranks.is_empty() {
        return Err(Error::EmptyTestSplit);
    }
    let n = ranks.len() as f64;
    let mut ns = hits_at.to_vec();
    ns.sort_unstable();
    ns.dedup();
    Ok(MetricsReport {
        hits_at: ns
            .into_iter()
            .map(|k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n))
            .collect(),
        mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
        direction,
        candidates,
        n_test: ranks.len(),
    })
}

fn one_direction(
    pairs: &[(usize, usize)],
    queries: &Array2<f64>,
    candidates: &Array2<f64>,
    hits_at: &[usize],
    direction: RankDirection,
) -> Result<MetricsReport> {
    let ranks: Vec<usize> = pairs
        .iter()
        .map(|&(q, t)| rank_of(queries.row(q), candidates, t))
        .collect();
    metrics_from_ranks(&ranks, hits_at, direction, candidates.nrows())
}

/// Ranks every right entity for each left test entity (or the reverse, or both).
pub fn evaluate_alignment(
    test_pairs: &[(EntityId, EntityId)],
    left: &Array2<f64>,
    right: &Array2<f64>,
    hits_at: &[usize],
    direction: RankDirection,
) -> Result<MetricsReport> {
    if test_pairs.is_empty() {
        return Err(Error::EmptyTestSplit);
    }
    let forward: Vec<(usize, usize)> = test_pairs
        .iter()
        .map(|(l, r)| (l.index(), r.index()))
        .collect();
    let backward: Vec<(usize, usize)> = forward.iter().map(|&(l, r)| (r, l)).collect();
    match direction {
        RankDirection::SourceToTarget => one_direction(&forward, left, right, hits_at, direction),
        RankDirection::TargetToSource => one_direction(&backward, right, left, hits_at, direction),
        RankDirection::Averaged => {
            let a = one_direction(&forward, left, right, hits_at, direction)?;
            let b = one_direction(&backward, right, left, hits_at, direction)?;
            Ok(MetricsReport {
                hits_at: a
                    .hits_at
                    .iter()
                    .zip(&b.hits_at)
                    .map(|(&(k, x), &(_, y))| (k, 0.5 * (x + y)))
                    .collect(),
                mrr: 0.5 * (a.mrr + b.mrr),
                direction,
                candidates: (a.candidates + b.candidates) / 2,
                n_test: a.n_test,
            })
        }
    }
}

pub const DEFAULT_HITS_AT: [usize; 2] = [1, 10];
pub const DEFAULT_SWEEP_FRACTIONS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Rule-completed graphs and every known alignment, ready to be split.
#[derive(Debug, Clone)]
pub struct SweepDataset {
    pub graphs: [GraphData; 2],
    pub entity_pairs: Vec<(EntityId, EntityId)>,
    pub relation_pairs: Vec<(RelationId, RelationId)>,
}

/// One sweep row; `metrics` is the error when the split left nothing to train or test.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub fraction: f64,
    pub metrics: Result<MetricsReport>,
}

/// Trains once per fraction (same `rng_seed` throughout) and evaluates on the complementary split.
pub fn seed_sweep(
    dataset: &SweepDataset,
    config: &TrainConfig,
    fractions: &[f64],
    direction: RankDirection,
) -> Result<Vec<SweepRow>> {
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::InvalidConfig(alloc::format!(
            "sweep fraction {f} outside (0, 1]"
        )));
    }
    Ok(fractions
        .iter()
        .map(|&fraction| SweepRow {
            fraction,
            metrics: sweep_point(dataset, config, fraction, direction),
        })
        .collect())
}

fn sweep_point(
    dataset: &SweepDataset,
    config: &TrainConfig,
    fraction: f64,
    direction: RankDirection,
) -> Result<MetricsReport> {
    let (train_pairs, test_pairs) =
        split_entity_seeds(&dataset.entity_pairs, fraction, config.rng_seed);
    if test_pairs.is_empty() {
        return Err(Error::EmptyTestSplit);
    }
    let problem = PreparedProblem::new(AlignmentProblem {
        graphs: dataset.graphs.clone(),
        train_pairs,
        relation_pairs: dataset.relation_pairs.clone(),
    });
    let config = TrainConfig {
        train_fraction: fraction,
        ..config.clone()
    };
    let outcome = train(&problem, &config)?;
    let [left, right] = encode_both(
        &outcome.checkpoint.params,
        &problem.patterns,
        config.cross_row_normalize,
    );
    evaluate_alignment(&test_pairs, &left, &right, &DEFAULT_HITS_AT, direction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use ndarray::array;

    #[test]
    fn ranks_one_and_two_give_mrr_three_quarters() {
        let report =
            metrics_from_ranks(&[1, 2], &[1, 10], RankDirection::SourceToTarget, 5).unwrap();
        assert_eq!(report.mrr, 0.75);
        assert_eq!(report.hits(1), Some(0.5));
        assert_eq!(report.hits(10), Some(1.0));
    }

    #[test]
    fn ties_rank_lower_ids_first() {
        let candidates = array![[1.0, 0.0], [1.0, 0.0], [5.0, 5.0]];
        let q = array![1.0, 0.0];
        assert_eq!(rank_of(q.view(), &candidates, 0), 1);
        assert_eq!(rank_of(q.view(), &candidates, 1), 2);
        assert_eq!(rank_of(q.view(), &candidates, 2), 3);
    }

    #[test]
    fn identical_embeddings_are_perfect() {
        let e = array![[0.0, 1.0], [2.0, 0.5], [-1.0, 3.0]];
        let pairs: Vec<_> = (0..3u32).map(|i| (EntityId(i), EntityId(i))).collect();
        for direction in [
            RankDirection::SourceToTarget,
            RankDirection::TargetToSource,
            RankDirection::Averaged,
        ] {
            let r = evaluate_alignment(&pairs, &e, &e, &[1, 10], direction).unwrap();
            assert_eq!(r.hits(1), Some(1.0));
            assert_eq!(r.mrr, 1.0);
            assert_eq!(r.candidates, 3);
        }
    }

    #[test]
    fn empty_test_split_is_an_error() {
        let e = Array2::<f64>::zeros((2, 2));
        assert!(matches!(
            evaluate_alignment(&[], &e, &e, &[1], RankDirection::SourceToTarget),
            Err(Error::EmptyTestSplit)
        ));
    }
}
