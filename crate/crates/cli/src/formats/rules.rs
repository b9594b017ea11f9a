//! Rule files, grounding records and the completion statistics table.
//!
//! A rule line is
//!
//! ```text
//! <shape tag> <TAB> <conclusion> <TAB> <- <TAB> <premise a> [<TAB> <premise b>] <TAB> <support> <TAB> <pca confidence>
//! ```
//!
//! where relations are labels, the shape tag fixes the variable pattern and
//! the premise count, and transferred rules carry `-` for both statistics.
//!
//! A grounding line is
//!
//! ```text
//! <own|transferred> <TAB> <shape tag> <TAB> <conclusion h r t> <TAB> <premise h r t>...
//! ```
//!
//! with every triple spread over three columns.

use std::collections::BTreeSet;

use kgalign_core::kg::{KnowledgeGraph, RelationId, Triple};
use kgalign_core::rules::{CompletionStats, HornRule, MinedRule, RuleGrounding, RuleShape};

use super::content_lines;
use crate::error::ParseError;

/// A rule by relation labels, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRecord {
    pub shape: RuleShape,
    pub conclusion: String,
    pub premises: Vec<String>,
    /// `(support, pca confidence)`; absent for transferred rules.
    pub stats: Option<(u64, f64)>,
}

impl RuleRecord {
    pub fn from_mined(mined: &MinedRule, label: impl Fn(RelationId) -> String) -> Self {
        let mut record = Self::from_rule(&mined.rule, label);
        record.stats = Some((mined.support, mined.pca_confidence));
        record
    }

    pub fn from_rule(rule: &HornRule, label: impl Fn(RelationId) -> String) -> Self {
        Self {
            shape: rule.shape(),
            conclusion: label(rule.conclusion().relation),
            premises: rule.premise_relations().into_iter().map(label).collect(),
            stats: None,
        }
    }

    /// The rule with labels resolved by `resolve`; `None` when a label is unknown.
    pub fn to_rule(
        &self,
        mut resolve: impl FnMut(&str) -> Option<RelationId>,
    ) -> Option<kgalign_core::Result<HornRule>> {
        let conclusion = resolve(&self.conclusion)?;
        let premises = self
            .premises
            .iter()
            .map(|p| resolve(p))
            .collect::<Option<Vec<_>>>()?;
        Some(HornRule::from_shape(self.shape, conclusion, &premises))
    }
}

pub fn write_rules(records: &[RuleRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(r.shape.tag());
        out.push('\t');
        out.push_str(&r.conclusion);
        out.push_str("\t<-");
        for p in &r.premises {
            out.push('\t');
            out.push_str(p);
        }
        match r.stats {
            Some((support, pca)) => out.push_str(&format!("\t{support}\t{pca}\n")),
            None => out.push_str("\t-\t-\n"),
        }
    }
    out
}

pub fn parse_rules(text: &str, source: &str) -> Result<Vec<RuleRecord>, ParseError> {
    let mut out = Vec::new();
    for (line_no, line) in content_lines(text) {
        let err = |message: String| ParseError::new(source, line_no, message);
        let fields: Vec<&str> = line.split('\t').collect();
        let shape: RuleShape = fields[0]
            .parse()
            .map_err(|_| err(format!("unknown rule shape `{}`", fields[0])))?;
        let k = shape.premise_count();
        if fields.len() != 5 + k {
            return Err(err(format!(
                "shape `{}` needs {} fields, found {}",
                fields[0],
                5 + k,
                fields.len()
            )));
        }
        if fields[2] != "<-" {
            return Err(err(format!("expected `<-`, found `{}`", fields[2])));
        }
        let stats = match (fields[3 + k], fields[4 + k]) {
            ("-", "-") => None,
            (s, c) => {
                let support = s.parse().map_err(|_| err(format!("bad support `{s}`")))?;
                let pca: f64 = c
                    .parse()
                    .map_err(|_| err(format!("bad confidence `{c}`")))?;
                if !(0.0..=1.0).contains(&pca) {
                    return Err(err(format!("confidence {pca} outside [0, 1]")));
                }
                Some((support, pca))
            }
        };
        out.push(RuleRecord {
            shape,
            conclusion: fields[1].to_string(),
            premises: fields[3..3 + k].iter().map(|s| s.to_string()).collect(),
            stats,
        });
    }
    Ok(out)
}

/// Where a grounding's rule came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Own,
    Transferred,
}

impl Origin {
    fn tag(self) -> &'static str {
        match self {
            Origin::Own => "own",
            Origin::Transferred => "transferred",
        }
    }
}

/// A grounding by labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundingRecord {
    pub origin: Origin,
    pub shape: RuleShape,
    pub conclusion: [String; 3],
    pub premises: Vec<[String; 3]>,
}

fn labels(kg: &KnowledgeGraph, t: Triple) -> [String; 3] {
    [
        kg.entity_label(t.head).to_string(),
        kg.relation_label(t.relation).to_string(),
        kg.entity_label(t.tail).to_string(),
    ]
}

/// Records for `groundings` of `kg`, tagging those whose rule is in `transferred`.
pub fn grounding_records(
    kg: &KnowledgeGraph,
    groundings: &[RuleGrounding],
    transferred: &[HornRule],
) -> Vec<GroundingRecord> {
    let transferred: BTreeSet<&HornRule> = transferred.iter().collect();
    groundings
        .iter()
        .map(|g| GroundingRecord {
            origin: if transferred.contains(&g.rule) {
                Origin::Transferred
            } else {
                Origin::Own
            },
            shape: g.rule.shape(),
            conclusion: labels(kg, g.conclusion),
            premises: g.premises.iter().map(|&p| labels(kg, p)).collect(),
        })
        .collect()
}

pub fn write_groundings(records: &[GroundingRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(r.origin.tag());
        out.push('\t');
        out.push_str(r.shape.tag());
        for triple in std::iter::once(&r.conclusion).chain(&r.premises) {
            for label in triple {
                out.push('\t');
                out.push_str(label);
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_groundings(text: &str, source: &str) -> Result<Vec<GroundingRecord>, ParseError> {
    let mut out = Vec::new();
    for (line_no, line) in content_lines(text) {
        let err = |message: String| ParseError::new(source, line_no, message);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(err(String::from("missing origin and shape")));
        }
        let origin = match fields[0] {
            "own" => Origin::Own,
            "transferred" => Origin::Transferred,
            other => return Err(err(format!("unknown origin `{other}`"))),
        };
        let shape: RuleShape = fields[1]
            .parse()
            .map_err(|_| err(format!("unknown rule shape `{}`", fields[1])))?;
        let expected = 2 + 3 * (1 + shape.premise_count());
        if fields.len() != expected {
            return Err(err(format!(
                "expected {expected} fields, found {}",
                fields.len()
            )));
        }
        let triple = |i: usize| {
            let at = 2 + 3 * i;
            [
                fields[at].to_string(),
                fields[at + 1].to_string(),
                fields[at + 2].to_string(),
            ]
        };
        out.push(GroundingRecord {
            origin,
            shape,
            conclusion: triple(0),
            premises: (1..=shape.premise_count()).map(triple).collect(),
        });
    }
    Ok(out)
}

/// Triples of a record resolved against `kg`.
pub fn resolve_grounding(
    record: &GroundingRecord,
    kg: &KnowledgeGraph,
) -> kgalign_core::Result<(Vec<Triple>, Triple)> {
    use kgalign_core::Error;
    let resolve = |[h, r, t]: &[String; 3]| -> kgalign_core::Result<Triple> {
        Ok(Triple::new(
            kg.entity_id(h)
                .ok_or_else(|| Error::UnknownEntity(h.clone()))?,
            kg.relation_id(r)
                .ok_or_else(|| Error::UnknownRelation(r.clone()))?,
            kg.entity_id(t)
                .ok_or_else(|| Error::UnknownEntity(t.clone()))?,
        ))
    };
    let premises = record
        .premises
        .iter()
        .map(resolve)
        .collect::<kgalign_core::Result<Vec<_>>>()?;
    Ok((premises, resolve(&record.conclusion)?))
}

/// `#Rule #Tr.Rule #Ground #Tr.ground`, one data row; unknown counts print as `-`.
pub fn write_stats(
    rules: Option<usize>,
    transferred_rules: Option<usize>,
    groundings: Option<usize>,
    transferred_groundings: Option<usize>,
) -> String {
    let cell = |v: Option<usize>| v.map_or_else(|| String::from("-"), |v| v.to_string());
    format!(
        "#Rule\t#Tr.Rule\t#Ground\t#Tr.ground\n{}\t{}\t{}\t{}\n",
        cell(rules),
        cell(transferred_rules),
        cell(groundings),
        cell(transferred_groundings)
    )
}

pub fn write_completion_stats(stats: &CompletionStats) -> String {
    write_stats(
        Some(stats.rules),
        Some(stats.transferred_rules),
        Some(stats.groundings),
        Some(stats.transferred_groundings),
    )
}
