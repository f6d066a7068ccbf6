use thiserror::Error;

use crate::metric::ValidationReport;

/// Errors raised by the toolkit.
///
/// `Structural` and `Parse` are input-shape problems (exit code 2 at the CLI);
/// everything else is a domain failure on well-formed input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("not a metric: {} violation(s), first: {}", .0.violations.len(), .0.violations.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidMetric(ValidationReport),

    #[error("no pairs: the space has a single point")]
    NoPairs,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subset does not contain the base point")]
    MissingBasePoint,

    #[error("point index {0} out of range")]
    IndexOutOfRange(usize),

    #[error("unknown point label {0:?}")]
    UnknownLabel(String),

    #[error("{what} has size {size}, above the desk-scale cap {cap}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("requires integer metric")]
    RequiresIntegerMetric,

    #[error("elements live on spaces of different sizes ({0} vs {1})")]
    MismatchedSpace(usize, usize),

    #[error("function is not {bound}-Lipschitz on the given set: pair ({x}, {y}) has ratio {ratio}")]
    NotLipschitz {
        x: usize,
        y: usize,
        ratio: f64,
        bound: f64,
    },

    #[error("function does not vanish at the base point")]
    NonzeroAtBase,

    #[error("certificate failed post-hoc verification: {0}")]
    CertificateFailed(String),

    #[error("four-point condition fails on ({}, {}, {}, {}) by {slack}", .quad[0], .quad[1], .quad[2], .quad[3])]
    FourPointViolation { quad: [usize; 4], slack: f64 },

    #[error("ε too small for this finite sample (best achievable ε ≈ {best})")]
    EpsilonTooSmall { best: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("witness construction failed: {0}")]
    WitnessFailure(Box<crate::schur::WitnessFailure>),

    #[error("support point {0} is not mapped into the tree")]
    Unmapped(usize),

    #[error("interval union has zero measure")]
    ZeroMeasure,

    #[error("cell {0} of the partition contains no sample point")]
    EmptyCell(usize),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
