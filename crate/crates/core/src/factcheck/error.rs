use crate::digest::Digest;
use crate::txflow::PdcError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FactCheckError {
    #[error("content is empty")]
    EmptyContent,
    #[error("news {news_id} is already registered")]
    DuplicateNews { news_id: Digest },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("checker `{0}` already voted on this news")]
    AlreadyVoted(String),
    #[error("news is already labeled")]
    NewsAlreadyLabeled,
    #[error("checker `{0}` is inactive")]
    InactiveChecker(String),
    #[error("unknown verdict `{0}`")]
    UnknownVerdict(String),
    #[error("quorum not reached: {have} of {need} votes")]
    QuorumNotReached { have: usize, need: usize },
    #[error("vote of `{0}` does not open its commitment")]
    RevealMismatch(String),
    #[error("not authorized: {0}")]
    NotAuthorized(String),
    #[error("unknown checker `{0}`")]
    UnknownChecker(String),
    #[error("checker `{0}` already exists")]
    CheckerExists(String),
    #[error("cannot tally an empty vote set")]
    EmptyVotes,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Private(#[from] PdcError),
    #[error("corrupt state at `{0}`")]
    CorruptState(String),
}

impl FactCheckError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            FactCheckError::EmptyContent => "EMPTY_CONTENT",
            FactCheckError::DuplicateNews { .. } => "DUPLICATE_NEWS",
            FactCheckError::NotFound(_) => "NOT_FOUND",
            FactCheckError::AlreadyVoted(_) => "ALREADY_VOTED",
            FactCheckError::NewsAlreadyLabeled => "NEWS_ALREADY_LABELED",
            FactCheckError::InactiveChecker(_) => "INACTIVE_CHECKER",
            FactCheckError::UnknownVerdict(_) => "UNKNOWN_VERDICT",
            FactCheckError::QuorumNotReached { .. } => "QUORUM_NOT_REACHED",
            FactCheckError::RevealMismatch(_) => "REVEAL_MISMATCH",
            FactCheckError::NotAuthorized(_) => "NOT_AUTHORIZED",
            FactCheckError::UnknownChecker(_) => "UNKNOWN_CHECKER",
            FactCheckError::CheckerExists(_) => "CHECKER_EXISTS",
            FactCheckError::EmptyVotes => "EMPTY_VOTES",
            FactCheckError::InvalidArgument(_) => "INVALID_ARGUMENT",
            FactCheckError::Private(PdcError::NotAMember { .. }) => "NOT_A_MEMBER",
            FactCheckError::Private(PdcError::UnknownCollection(_)) => "UNKNOWN_COLLECTION",
            FactCheckError::CorruptState(_) => "CORRUPT_STATE",
        }
    }
}
