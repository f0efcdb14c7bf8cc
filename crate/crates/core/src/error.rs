use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("label file has {found} entries, graph has {expected} vertices")]
    LabelCount { expected: usize, found: usize },

    #[error("source set is empty")]
    EmptySources,

    #[error("subgraph is not connected")]
    Disconnected,

    #[error("subgraph order {0} is too small")]
    OrderTooSmall(usize),

    #[error("subgraph order {order} exceeds the maximum of {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("states must overlap in exactly {expected} vertices, found {found}")]
    Overlap { expected: usize, found: usize },

    #[error("neighbor sampler gave up after {0} proposals")]
    AttemptBudget(usize),

    #[error("reservoir is empty")]
    EmptyReservoir,

    #[error("{what} exceeded the cap of {cap}")]
    CapExceeded { what: &'static str, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stratum {0} has inbound crossings but no start states")]
    NoStartStates(u32),

    #[error("walk is stuck at a state with no neighbors")]
    Stuck,

    #[error("at least {needed} samples are required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
