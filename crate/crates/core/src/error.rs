use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures while reading a CSV table or its schema hints.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("input is empty")]
    Empty,
    #[error("no data rows after the header")]
    NoRows,
    #[error("row at line {line} has {found} fields, expected {expected}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("cell at line {line}, column `{column}` is not a finite number: {value:?}")]
    BadNumber {
        line: u64,
        column: String,
        value: String,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("schema: {0}")]
    Schema(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoryError {
    #[error("node {0} does not exist")]
    NodeNotFound(u64),
    #[error("insight {0} is already in the story")]
    DuplicateInsight(String),
    #[error("insight {0} is not in the catalog")]
    UnknownInsight(String),
    #[error("moving node {node} under {parent} would create a cycle")]
    Cycle { node: u64, parent: u64 },
    #[error("story import: {0}")]
    Import(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("invalid locator: {0}")]
    InvalidLocator(String),
    #[error("locator {0:?} matches no rows")]
    EmptySubspace(String),
    #[error("series alignment: {0}")]
    Alignment(String),
    #[error("lookup: {0}")]
    Lookup(String),
    #[error("provider `{provider}`: {message}")]
    Provider {
        provider: String,
        message: String,
        retryable: bool,
    },
    #[error("reasoning: {0}")]
    Reasoning(String),
    #[error("model output: {0}")]
    Parse(String),
    #[error("no candidates survived the metadata constraints")]
    EmptySubset,
    #[error(transparent)]
    Story(#[from] StoryError),
    #[error("config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
