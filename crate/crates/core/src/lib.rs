//! Entity alignment between two knowledge graphs.
//!
//! The pipeline has two halves. The first completes each graph with Horn
//! rules: rules are mined per graph ([`rules::mine_rules`]), carried across
//! graphs through aligned relations ([`rules::transfer_rules`]) and grounded
//! to add missing triples ([`rules::complete_kg`]). The second half encodes
//! both completed graphs with a two-channel graph network whose channels are
//! weighted by self-attention and by cross-graph relation similarity
//! ([`channels`], [`encoder`]), trained with a margin alignment loss plus a
//! fuzzy-logic rule loss ([`objectives`], [`trainer`]) and scored with
//! Hits@N / MRR ([`eval`]).
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the CLI
//! live in the `kgalign` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channels;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod kg;
pub mod model;
pub mod objectives;
pub mod rules;
pub mod synth;
pub mod trainer;

mod linalg;

pub use error::Error;
pub use kg::{EntityId, KnowledgeGraph, RelationId, SeedAlignments, Triple};
pub use ndarray::Array2;

pub type Result<T, E = Error> = core::result::Result<T, E>;
