//! Triple files (`head<TAB>relation<TAB>tail`) and alignment files (`left<TAB>right`).

use kgalign_core::kg::{KgBuilder, KnowledgeGraph, SeedAlignments};

use super::content_lines;
use crate::error::ParseError;

/// Interns tokens in first-seen order; duplicate triples collapse.
pub fn parse_kg(text: &str, source: &str) -> Result<KnowledgeGraph, ParseError> {
    let mut builder = KgBuilder::new();
    for (line_no, line) in content_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            [h, r, t] if !h.is_empty() && !r.is_empty() && !t.is_empty() => {
                builder.add(h, r, t);
            }
            _ => {
                return Err(ParseError::new(
                    source,
                    line_no,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ))
            }
        }
    }
    Ok(builder.build())
}

/// Every triple by label, sorted by `(head, relation, tail)` labels so the
/// output does not depend on interning order.
pub fn write_kg(kg: &KnowledgeGraph) -> String {
    let mut rows: Vec<(&str, &str, &str)> = kg
        .triples()
        .iter()
        .map(|t| {
            (
                kg.entity_label(t.head),
                kg.relation_label(t.relation),
                kg.entity_label(t.tail),
            )
        })
        .collect();
    rows.sort_unstable();
    let mut out = String::new();
    for (h, r, t) in rows {
        out.push_str(h);
        out.push('\t');
        out.push_str(r);
        out.push('\t');
        out.push_str(t);
        out.push('\n');
    }
    out
}

/// Two-column label pairs in file order.
pub fn parse_pairs(text: &str, source: &str) -> Result<Vec<(String, String)>, ParseError> {
    content_lines(text)
        .map(|(line_no, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [l, r] if !l.is_empty() && !r.is_empty() => Ok((l.to_string(), r.to_string())),
                _ => Err(ParseError::new(
                    source,
                    line_no,
                    format!("expected 2 tab-separated fields, found {}", fields.len()),
                )),
            }
        })
        .collect()
}

pub fn write_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    pairs
        .into_iter()
        .map(|(l, r)| format!("{l}\t{r}\n"))
        .collect()
}

/// Resolves label pairs against both graphs; `relations` may be empty.
pub fn resolve_seeds(
    entities: &[(String, String)],
    relations: &[(String, String)],
    left: &KnowledgeGraph,
    right: &KnowledgeGraph,
) -> kgalign_core::Result<SeedAlignments> {
    SeedAlignments::from_labels(
        entities.iter().map(|(l, r)| (l.as_str(), r.as_str())),
        relations.iter().map(|(l, r)| (l.as_str(), r.as_str())),
        left,
        right,
    )
}
