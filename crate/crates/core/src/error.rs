use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed mesh file: {0}")]
    MalformedMesh(String),

    #[error("mesh connectivity error: {0}")]
    Connectivity(String),

    #[error("element {element} has non-positive area {area:e}")]
    ZeroArea { element: usize, area: f64 },

    #[error("element {element} is not star-shaped with respect to its centroid")]
    NotStarShaped { element: usize },

    #[error(
        "element {element}: ambiguous rank decision, singular value ratio {ratio:e} \
         lies within a factor 10 of the cutoff {cutoff:e}"
    )]
    AmbiguousRank {
        element: usize,
        ratio: f64,
        cutoff: f64,
    },

    #[error("element {element}: local mass matrix is not positive definite")]
    SingularMass { element: usize },

    #[error("polynomial order mismatch: expected k = {expected}, found k = {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("residual contract unmet: residual {residual:e} exceeds {tolerance:e} ({diagnostics})")]
    Residual {
        residual: f64,
        tolerance: f64,
        diagnostics: String,
    },

    #[error("problem too large for a dense diagnostic: {size} unknowns (limit {limit})")]
    TooLarge { size: usize, limit: usize },

    #[error("cannot estimate order of convergence: {0}")]
    Eoc(String),

    #[error("invalid study configuration: {0}")]
    Config(String),

    #[error("level {level}: {source}")]
    Level {
        level: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
