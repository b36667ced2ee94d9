use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Fewer than three users: the pairwise alignment has no unintended
    /// receivers to align at.
    #[error("degenerate scheme: K = {0} (need K >= 3)")]
    DegenerateScheme(usize),

    #[error("construction failed: no bottom block of weight-{weight} rows gives a full-rank product matrix for K = {users}")]
    ConstructionFailed { users: usize, weight: usize },

    /// Exhaustive search found no pattern whose receivers can all separate
    /// desired symbols from interference (only K = 3 and 4 have one).
    #[error("no decodable switching pattern exists for K = {0}")]
    NoDecodablePattern(usize),

    #[error("invalid pattern matrix: {0}")]
    InvalidPattern(String),

    #[error("invalid pair map: {0}")]
    InvalidPairMap(String),

    #[error("alignment set size l = {l} outside [2, {users}]")]
    AlignmentSetOutOfRange { users: usize, l: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    /// The combined desired + interference matrix at a receiver is rank
    /// deficient, so the desired symbols cannot be separated. `rx` is
    /// 0-based; the message shows it 1-based.
    #[error("unverifiable draw at receiver {}: combined rank {rank} < {needed}", rx + 1)]
    UnverifiableDraw { rx: usize, rank: usize, needed: usize },

    #[error("simulation needs at least 2 SNR points, got {0}")]
    TooFewSnrPoints(usize),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
