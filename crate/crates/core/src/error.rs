use thiserror::Error;

/// Errors produced by the scheduling library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid trace:\n  {}", .0.join("\n  "))]
    InvalidTrace(Vec<String>),

    #[error("invalid channel model:\n  {}", .0.join("\n  "))]
    InvalidChannel(Vec<String>),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("unknown packet id {0}")]
    UnknownPacket(u32),

    #[error("slot {slot} outside {first}..={last}")]
    SlotOutOfRange {
        slot: usize,
        first: usize,
        last: usize,
    },

    #[error(
        "trace has dependency edges; the decomposed linear solver only handles independent packets, \
         use the convex solver with `interdependent = true` (linear marginal costs are supported there)"
    )]
    DependenciesNotDecomposable,

    #[error("interdependent flag is {flag} but the trace {} dependency edges", if *.flag { "has no" } else { "has" })]
    InterdependenceMismatch { flag: bool },

    #[error("the tree solver needs a common packet size, found sizes {0} and {1}")]
    NonUniformSizes(f64, f64),

    #[error("{what}: {count} packets exceeds the limit of {limit}")]
    TooManyPackets {
        what: &'static str,
        count: usize,
        limit: usize,
    },

    #[error("channel has {0} closed classes, stationary distribution is not unique")]
    NonUniqueStationary(usize),

    #[error("no post-state value stored at slot {slot} for remaining {remaining:?}")]
    MissingPostValue { slot: usize, remaining: Vec<u32> },

    #[error("illegal action at slot {slot}: {reason}")]
    IllegalAction { slot: usize, reason: String },

    #[error("channel state {state} out of range (model has {count} states)")]
    ChannelStateOutOfRange { state: usize, count: usize },

    #[error("channel path has {len} entries, need at least {needed}")]
    ShortChannelPath { len: usize, needed: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
