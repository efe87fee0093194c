use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("GF(2^{0}) is not supported; use 8 or 16")]
    UnsupportedFieldBits(u32),
    #[error("inverse of zero")]
    InverseOfZero,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular system")]
    SingularSystem,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("centralized placement needs integer K*M/N, got {users}*{cache}/{files} = {t}")]
    InvalidCentralizedParameter {
        users: usize,
        cache: f64,
        files: usize,
        t: f64,
    },
    #[error("channel is not in generic position for zero-forcing")]
    DegenerateNetwork,
    #[error("network stayed degenerate after {0} resamples")]
    ResampleLimit(usize),
    #[error("sample has zero variance")]
    DegenerateSample,
    #[error("sample is empty")]
    EmptySample,
    #[error("user {user} needs symbol {symbol} of file {file} but does not cache it")]
    MissingSideInformation {
        user: usize,
        file: usize,
        symbol: usize,
    },
    #[error("unknown figure {0}; expected one of 2, 3, 4, 5, 6")]
    UnknownFigure(u32),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
