use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants are grouped loosely by the module that raises them; [`Error::module`]
/// reports that grouping for machine-readable error records.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("channel matrix is empty")]
    EmptyMatrix,
    #[error("channel matrix is not rectangular: row {row} has {found} entries, expected {expected}")]
    NotRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row} is not a probability vector (sum {sum}, min entry {min})")]
    NonStochasticRow { row: usize, sum: f64, min: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("distribution puts mass outside the support of the reference")]
    SupportViolation,
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("the no-input symbol is redundant for the warden")]
    RedundantNoInput,
    #[error("absolute continuity fails: input {input} is not dominated by the no-input row")]
    AbsoluteContinuityViolation { input: usize },
    #[error("denominator mutual information vanishes on the whole simplex")]
    DegenerateDenominator,
    #[error("both receivers have zero covert capacity")]
    NoCovertCapacity,
    #[error("too few samples for an envelope: {0}")]
    TooFewSamples(usize),
    #[error("envelope samples must be strictly increasing in x")]
    UnsortedSamples,
    #[error("envelope term {0:e} is positive although the optimality condition was claimed")]
    ConditionViolated(f64),
    #[error("rate on coordinate {0} is positive but its covert capacity is zero")]
    UnsupportedRate(usize),
    #[error("rate point lies outside the region (share sum {0})")]
    OutsideRegion(f64),
    #[error("{0}")]
    InvalidRegion(String),
    #[error("codebook for user {user} would have fewer than two codewords (ln M = {log_m})")]
    EmptyCodebook { user: usize, log_m: f64 },
    #[error("{0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Name of the module family that raises this error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            EmptyMatrix | NotRectangular { .. } | NonStochasticRow { .. } | DimensionMismatch { .. } => {
                "channel"
            }
            SupportViolation => "info",
            OutOfRange { .. } => "info",
            RedundantNoInput | AbsoluteContinuityViolation { .. } => "capacity",
            DegenerateDenominator | NoCovertCapacity => "condition",
            TooFewSamples(_) | UnsortedSamples | ConditionViolated(_) => "converse",
            UnsupportedRate(_) | OutsideRegion(_) | InvalidRegion(_) => "region",
            EmptyCodebook { .. } | Unsupported(_) => "sim",
            Parse(_) | Io(_) => "cli",
        }
    }

    /// Short stable identifier used in error records.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            EmptyMatrix => "EmptyMatrix",
            NotRectangular { .. } => "NotRectangular",
            NonStochasticRow { .. } => "NonStochasticRow",
            DimensionMismatch { .. } => "DimensionMismatch",
            SupportViolation => "SupportViolation",
            OutOfRange { .. } => "OutOfRange",
            RedundantNoInput => "RedundantNoInput",
            AbsoluteContinuityViolation { .. } => "AbsoluteContinuityViolation",
            DegenerateDenominator => "DegenerateDenominator",
            NoCovertCapacity => "NoCovertCapacity",
            TooFewSamples(_) => "TooFewSamples",
            UnsortedSamples => "UnsortedSamples",
            ConditionViolated(_) => "ConditionViolated",
            UnsupportedRate(_) => "UnsupportedRate",
            OutsideRegion(_) => "OutsideRegion",
            InvalidRegion(_) => "InvalidRegion",
            EmptyCodebook { .. } => "EmptyCodebook",
            Unsupported(_) => "Unsupported",
            Parse(_) => "ParseError",
            Io(_) => "IoError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
