use thiserror::Error;

/// Errors raised anywhere in the optimization pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("variable `{name}` has no finite {side} bound and none can be inferred")]
    UnboundedVariable { name: String, side: &'static str },
    #[error("linear constraints are infeasible")]
    InfeasibleProblem,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("polyhedron has empty interior")]
    EmptyPolyhedron,
    #[error("hit-and-run chain collapsed: chord length below 1e-12 for 100 proposals")]
    NumericalCollapse,
    #[error("norm q = {0} is not supported by the built-in solver (only 1 and infinity)")]
    UnsupportedNorm(f64),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("projection stalled with residual violation {violation:e}")]
    ProjectionStall { violation: f64 },
    #[error("every grid cell produced an infeasible approximation, even relaxed")]
    InfeasibleApproximation,
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
