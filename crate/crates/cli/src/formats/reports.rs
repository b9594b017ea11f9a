//! Loss history, metrics, sweep tables and adjacency dumps.

use kgalign_core::channels::WeightedAdjacency;
use kgalign_core::eval::{MetricsReport, SweepRow};
use kgalign_core::kg::{EntityId, KnowledgeGraph};
use kgalign_core::trainer::LossRecord;
use serde_json::{json, Map, Value};

/// `epoch,L_a,L_r,L_r_prime,total`, one row per epoch.
pub fn loss_csv(history: &[LossRecord]) -> String {
    let mut out = String::from("epoch,L_a,L_r,L_r_prime,total\n");
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.align, r.rule_left, r.rule_right, r.total
        ));
    }
    out
}

/// `{"hits": {"1": x, "10": y}, "mrr": z, "direction": ..., "n_test": n, "candidates": c}`.
pub fn metrics_json(report: &MetricsReport) -> String {
    let hits: Map<String, Value> = report
        .hits_at
        .iter()
        .map(|(n, v)| (n.to_string(), json!(v)))
        .collect();
    let value = json!({
        "hits": hits,
        "mrr": report.mrr,
        "direction": report.direction.name(),
        "n_test": report.n_test,
        "candidates": report.candidates,
    });
    let mut text = serde_json::to_string_pretty(&value).expect("plain JSON values serialize");
    text.push('\n');
    text
}

/// `fraction,hits_1,hits_10,mrr` for every row that produced metrics.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("fraction,hits_1,hits_10,mrr\n");
    for row in rows {
        if let Ok(m) = &row.metrics {
            let cell = |n| m.hits(n).map_or_else(String::new, |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.fraction,
                cell(1),
                cell(10),
                m.mrr
            ));
        }
    }
    out
}

/// `i<TAB>j<TAB>weight` for every stored entry, entities by label.
pub fn adjacency_tsv(adjacency: &WeightedAdjacency, kg: &KnowledgeGraph) -> String {
    let label = |i: usize| kg.entity_label(EntityId(i as u32));
    adjacency
        .entries()
        .map(|(i, j, w)| format!("{}\t{}\t{w}\n", label(i), label(j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use kgalign_core::eval::{metrics_from_ranks, RankDirection};

    #[test]
    fn loss_header_and_rows() {
        let rows = [LossRecord {
            epoch: 1,
            align: 2.5,
            rule_left: 0.25,
            rule_right: 0.125,
            total: 2.875,
        }];
        assert_eq!(
            loss_csv(&rows),
            "epoch,L_a,L_r,L_r_prime,total\n1,2.5,0.25,0.125,2.875\n"
        );
    }

    #[test]
    fn metrics_schema() {
        let report =
            metrics_from_ranks(&[1, 2], &[1, 10], RankDirection::SourceToTarget, 9).unwrap();
        let v: Value = serde_json::from_str(&metrics_json(&report)).unwrap();
        assert_eq!(v["hits"]["1"], json!(0.5));
        assert_eq!(v["hits"]["10"], json!(1.0));
        assert_eq!(v["mrr"], json!(0.75));
        assert_eq!(v["direction"], json!("source_to_target"));
        assert_eq!(v["n_test"], json!(2));
    }

    #[test]
    fn failed_sweep_rows_are_skipped() {
        let ok = metrics_from_ranks(&[1], &[1, 10], RankDirection::SourceToTarget, 3).unwrap();
        let rows = [
            SweepRow {
                fraction: 0.5,
                metrics: Ok(ok),
            },
            SweepRow {
                fraction: 1.0,
                metrics: Err(kgalign_core::Error::EmptyTestSplit),
            },
        ];
        assert_eq!(sweep_csv(&rows), "fraction,hits_1,hits_10,mrr\n0.5,1,1,1\n");
    }
}
