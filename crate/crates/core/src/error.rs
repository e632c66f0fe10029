use thiserror::Error;

/// Errors raised by the modeling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series too short: need at least {need} samples, got {got}")]
    SeriesTooShort { need: usize, got: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("zero variance: all samples are equal")]
    ZeroVariance,

    #[error("lag {max_lag} too large for series of length {len}")]
    LagTooLarge { max_lag: usize, len: usize },

    #[error("invalid alphabet size {0}")]
    InvalidAlphabet(usize),

    #[error("degenerate partition: edges {index} and {next} coincide at {value}", next = index + 1)]
    DegeneratePartition { index: usize, value: f64 },

    #[error("not enough samples ({got}) for an alphabet of size {alphabet_size}")]
    InsufficientData { got: usize, alphabet_size: usize },

    #[error("invalid depth {0}")]
    InvalidDepth(usize),

    #[error("state space too large: {alphabet_size}^{depth} states")]
    StateSpaceTooLarge { alphabet_size: usize, depth: usize },

    #[error("no segment is longer than the depth {depth}")]
    SequenceTooShort { depth: usize },

    #[error("symbol {symbol} out of range for alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: usize, alphabet_size: usize },

    #[error("alphabet mismatch: model has {model}, sequence has {sequence}")]
    AlphabetMismatch { model: usize, sequence: usize },

    #[error("negative prior weight {0}")]
    NegativePrior(f64),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("zero probability in emission row {state}, symbol {symbol}")]
    ZeroProbability { state: usize, symbol: usize },

    #[error("cut at {requested} clusters is outside [1, {leaves}]")]
    BadCut { requested: usize, leaves: usize },

    #[error("cluster {0} has no member states")]
    EmptyCluster(usize),

    #[error("cluster map covers {map} states but the model has {model}")]
    ClusterMapMismatch { map: usize, model: usize },

    #[error("sequence length {n} must exceed depth + 1 = {min}", min = depth + 1)]
    BadLength { n: usize, depth: usize },

    #[error("invalid state index {state} (model has {states} states)")]
    InvalidState { state: usize, states: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
