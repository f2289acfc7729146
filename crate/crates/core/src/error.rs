use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("sequence must contain at least one bit")]
    EmptySequence,

    #[error("input truncated: {needed} bits requested but only {available} available")]
    Truncated { needed: usize, available: usize },

    #[error("invalid symbol {symbol:?} at byte offset {offset}; expected '0', '1' or whitespace")]
    InvalidSymbol { symbol: char, offset: usize },

    #[error("sequence length {n} is odd; this operation requires an even length")]
    OddLength { n: usize },

    #[error("sequence length {n} is below the minimum of {min}")]
    TooShort { n: usize, min: usize },

    #[error("sequence length {n} exceeds the limit of {max} for exhaustive or quadratic evaluation")]
    TooLarge { n: usize, max: usize },

    #[error("a half spectrum is required")]
    FullSpectrum,

    #[error("argument must be finite, got {0}")]
    NonFinite(f64),

    #[error("chi-square statistic must be non-negative, got {0}")]
    NegativeStatistic(f64),

    #[error("value {0} is not a probability")]
    NotAProbability(f64),

    #[error("at least {min} values are required, got {got}")]
    TooFewValues { min: usize, got: usize },

    #[error("period {period} is too large for length {n} (need 2T <= n)")]
    PeriodTooLarge { period: usize, n: usize },

    #[error("period must be at least 1")]
    ZeroPeriod,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the environment rather than by arguments.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::File { .. })
    }
}
