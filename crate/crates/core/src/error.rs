use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bodies {i} and {j} coincide (r_ij = 0)")]
    CoincidentBodies { i: usize, j: usize },

    #[error("configuration is not central: {0}")]
    NotCentral(String),

    #[error("operation requires a planar configuration")]
    NotPlanar,

    #[error("syzygy extraction requires zero angular momentum, got |L| = {0:.3e}")]
    NonzeroAngularMomentum(f64),

    #[error("integration step underflow near t = {0}")]
    StepUnderflow(f64),

    #[error("degenerate confocal pair: {0}")]
    DegeneratePair(String),

    #[error("continuation lost branch {branch} between epsilon {from:.1e} and {to:.1e}")]
    ContinuationLost { branch: usize, from: f64, to: f64 },

    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
