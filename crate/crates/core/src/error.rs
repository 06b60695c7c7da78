use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("symbol {symbol} at position {position} is outside the alphabet [1, {sigma}]")]
    AlphabetOverflow { symbol: u64, position: usize, sigma: u32 },
    #[error("duplicate key")]
    DuplicateKey,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("corrupt trie: {0}")]
    CorruptTrie(String),
    #[error("stale or unknown element handle")]
    InvalidHandle,
    #[error("node {0} cannot be marked while its parent is unmarked")]
    MarkOrderViolation(usize),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed index file: {0}")]
    Format(String),
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
