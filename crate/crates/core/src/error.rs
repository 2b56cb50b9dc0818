use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh generator error: {0}")]
    Generator(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {0} in assembly")]
    DegenerateTriangle(usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("eigenvalue is not simple (relative gap {gap:.3e})")]
    Multiplicity { gap: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("direction error: {0}")]
    Direction(String),

    #[error("line search failed: step fell below {t_min:.1e}")]
    LineSearch { t_min: f64 },

    #[error("area projection failed: {0}")]
    Projection(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
