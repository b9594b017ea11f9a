use std::io;
use std::path::PathBuf;

/// Everything a command can fail with; [`CliError::exit_code`] gives the process status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("input file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{0}")]
    Config(ParseError),
    #[error("{0}")]
    Parse(ParseError),
    #[error("output already exists: {} (pass --force to overwrite)", .0.display())]
    OutputExists(PathBuf),
    #[error("{path}: {source}", path = .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Core(#[from] kgalign_core::Error),
}

/// A located complaint about file contents; `line` is 1-based, 0 when it concerns the whole file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub source: String,
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(source: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            line,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.source, self.message)
        } else {
            write!(f, "{}:{}: {}", self.source, self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

pub mod exit {
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const MISSING_FILE: i32 = 3;
    pub const BAD_CONFIG: i32 = 4;
    pub const PARSE: i32 = 5;
    pub const OUTPUT_EXISTS: i32 = 6;
    pub const DIVERGED: i32 = 7;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use kgalign_core::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::MissingFile(_) => exit::MISSING_FILE,
            CliError::Config(_) => exit::BAD_CONFIG,
            CliError::Parse(_) => exit::PARSE,
            CliError::OutputExists(_) => exit::OUTPUT_EXISTS,
            CliError::Io { .. } => exit::OTHER,
            CliError::Core(e) => match e {
                E::InvalidConfig(_) => exit::BAD_CONFIG,
                E::NonFiniteLoss { .. } => exit::DIVERGED,
                E::UnknownEntity(_)
                | E::UnknownRelation(_)
                | E::ConflictingRelationPair { .. }
                | E::InvalidRule(_) => exit::PARSE,
                E::EmptyTrainSeeds | E::EmptyTestSplit | E::Shape(_) => exit::OTHER,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
