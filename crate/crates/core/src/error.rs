use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` is aligned to both `{first}` and `{second}`")]
    ConflictingRelationPair {
        relation: String,
        first: String,
        second: String,
    },
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no training seeds")]
    EmptyTrainSeeds,
    #[error("empty test split")]
    EmptyTestSplit,
    #[error("non-finite {term} at epoch {epoch}")]
    NonFiniteLoss { term: &'static str, epoch: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}
