use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("non-increasing timestamps at row {row}: {prev} then {next}")]
    NonIncreasingTimestamps { row: usize, prev: i64, next: i64 },

    #[error("OHLC invariant violated at row {row}: {reason}")]
    OhlcInvariant { row: usize, reason: String },

    #[error("candles overlap at index {index}: gap {gap} s is shorter than bar duration {bar_duration} s")]
    OverlappingCandles { index: usize, gap: i64, bar_duration: i64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: need more than {needed} candles, have {have}")]
    SeriesTooShort { needed: usize, have: usize },

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("fewer than 2 extrema (found {0})")]
    TooFewExtrema(usize),

    #[error("target unreachable: {0}")]
    TargetUnreachable(String),

    #[error("calibration of {market} failed: {source}")]
    Calibration {
        market: String,
        #[source]
        source: Box<Error>,
    },

    #[error("no overlapping span between {0} and {1}")]
    NoOverlap(String, String),

    #[error("no secondary extremum inside the primary span")]
    EmptyPhaseOverlap,

    #[error("zero resultant: no unique mean direction")]
    ZeroResultant,

    #[error("all weights are zero")]
    ZeroWeights,

    #[error("confidence interval undefined: sample too diffuse")]
    CiUndefined,

    #[error("too many failed wavelength groups: {failed} of {total}")]
    TooManyFailedGroups { failed: usize, total: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by the input data rather than the analysis.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyInput(_)
                | Error::MalformedRow { .. }
                | Error::NonIncreasingTimestamps { .. }
                | Error::OhlcInvariant { .. }
                | Error::OverlappingCandles { .. }
                | Error::Csv(_)
                | Error::Io(_)
        )
    }
}
